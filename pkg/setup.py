import os

from setuptools import setup

ext_modules = []
if os.environ.get("RANDUR_NO_EXTENSION", "") in ("", "0"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "randur._lrt_kernel",
                    ["src/randur/_lrt_kernel.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        # Cython or numpy missing at build time: the numpy fallback is used.
        ext_modules = []

setup(ext_modules=ext_modules)
