"""Kernel backend selection.

The compiled extension is used when it imports; set ``PRPQKD_PURE_PYTHON=1`` to
force the numpy fallback.
"""

from __future__ import annotations

import os
from types import ModuleType

from prpqkd import _purecore


def _load_compiled() -> ModuleType | None:
    try:
        from prpqkd import _core
    except ImportError:
        return None
    return _core


def load_backend(name: str) -> ModuleType:
    """Return the kernel module ``"compiled"`` or ``"python"``."""
    if name == "python":
        return _purecore
    if name == "compiled":
        mod = _load_compiled()
        if mod is None:
            raise ImportError("compiled kernels are not built; run `pip install -e .`")
        return mod
    raise ValueError(f"unknown backend {name!r}")


def available_backends() -> list[str]:
    return ["compiled", "python"] if _load_compiled() is not None else ["python"]


if os.environ.get("PRPQKD_PURE_PYTHON", "").strip() not in ("", "0"):
    kernels = _purecore
else:
    kernels = _load_compiled() or _purecore

BACKEND: str = kernels.NAME
