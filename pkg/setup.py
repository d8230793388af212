from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; prpqkd falls back to numpy kernels
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "prpqkd._core",
                ["src/prpqkd/_core.pyx"],
                # no fast-math: the compiled and fallback kernels must agree bit for bit
                extra_compile_args=["-O3", "-ffp-contract=off"],
                libraries=["m"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
