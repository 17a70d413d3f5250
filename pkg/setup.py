"""Build script for the optional compiled kernel core.

The package is fully functional without the extension; wavekin._accel
falls back to a numpy/scipy implementation when the compiled module is
absent (for instance on platforms without a C toolchain).
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    ext_modules = cythonize(
        [
            Extension(
                "wavekin._accel._core",
                ["src/wavekin/_accel/_core.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": 3},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
