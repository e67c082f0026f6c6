"""Build script for the optional compiled core.

The package is fully functional without the extension (a NumPy fallback is
selected at import time), so a failed compile degrades to a pure-Python
install instead of aborting.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the extension if possible, otherwise continue without it."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler or toolchain missing
            print(f"oscint: skipping compiled core ({exc}); "
                  "the NumPy fallback will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"oscint: failed to build {ext.name} ({exc}); "
                  "the NumPy fallback will be used")


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        print("oscint: Cython not available; building without compiled core")
        return []
    ext = Extension(
        "oscint._fastops",
        sources=["src/oscint/_fastops.pyx"],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], language_level=3)


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": OptionalBuildExt},
)
