"""Builds the optional compiled alignment kernel.

The package works without it (a pure-Python fallback is selected at import
time), so any failure here downgrades to a warning instead of aborting the
install.
"""

import warnings

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler, etc.
            warnings.warn(f"compiled alignment kernel skipped: {exc}")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"compiled alignment kernel skipped: {exc}")


try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/gecombine/_align_fast.pyx"], language_level=3
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
