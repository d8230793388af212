"""Intercept-and-resend analysis of two-way BB84 when the source phase is only partly randomized."""

from prpqkd._backend import BACKEND

__version__ = "0.1.0"
from prpqkd.model import (
    BasisProbabilities,
    ChannelModel,
    DecoyParams,
    EveCoupling,
    HomodyneModel,
    MuEMode,
    Outcome,
    Side,
    SourceModel,
    ThresholdPolicy,
    preset_fig3_homodyne,
    preset_gys,
    preset_perfect_homodyne,
)

__all__ = [
    "__version__",
    "BACKEND",
    "BasisProbabilities",
    "ChannelModel",
    "DecoyParams",
    "EveCoupling",
    "HomodyneModel",
    "MuEMode",
    "Outcome",
    "Side",
    "SourceModel",
    "ThresholdPolicy",
    "preset_fig3_homodyne",
    "preset_gys",
    "preset_perfect_homodyne",
]
