from setuptools import Extension, setup
from Cython.Build import cythonize

setup(
    ext_modules=cythonize(
        [
            Extension(
                "polyflow._core",
                ["src/polyflow/_core.pyx"],
                extra_compile_args=["-O2"],
            )
        ],
        language_level=3,
    )
)
