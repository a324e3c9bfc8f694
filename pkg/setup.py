"""Build script: compiles the optional C extension for the hot kernels.

The package is fully functional without the extension (a pure-Python
fallback is selected at import time), so any failure here degrades to a
pure-Python install instead of aborting. Set CHSH_LAB_NO_EXT=1 to skip
the extension build entirely.
"""

import os
import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext


def make_ext_modules():
    if os.environ.get("CHSH_LAB_NO_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        print("chsh-lab: Cython not available, building without the compiled core",
              file=sys.stderr)
        return []
    from setuptools import Extension

    ext = Extension(
        "chsh_lab._core",
        sources=["src/chsh_lab/_core.pyx"],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


class OptionalBuildExt(build_ext):
    """Tolerate compiler failures; the package falls back to pure Python."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001 - any build failure is non-fatal
            print(f"chsh-lab: extension build failed ({exc}); "
                  "installing pure-Python fallback only", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            print(f"chsh-lab: building {ext.name} failed ({exc}); "
                  "installing pure-Python fallback only", file=sys.stderr)


setup(
    ext_modules=make_ext_modules(),
    cmdclass={"build_ext": OptionalBuildExt},
)
