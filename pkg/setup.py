"""Builds the optional MPFR-backed kernel; the package works without it."""
import os
import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext

ext_modules = []
if os.environ.get("BINOMTV_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [Extension("binomtv._kernel", ["src/binomtv/_kernel.pyx"],
                       libraries=["mpfr", "gmp"])],
            compiler_directives={"language_level": "3"},
            quiet=True,
        )
    except ImportError:
        print("Cython not available; installing the pure-Python kernel only",
              file=sys.stderr)


class OptionalBuildExt(build_ext):
    """Skip the compiled kernel (with a warning) if it fails to build."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001
            print(f"warning: compiled kernel not built ({exc})", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            print(f"warning: could not build {ext.name} ({exc})", file=sys.stderr)


setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
