"""Backend selection: compiled extension if available, pure Python otherwise.

Set CHSH_LAB_NO_EXT=1 to force the pure-Python kernels. Both backends are
required to produce bit-identical results (tested in tests/test_backends.py),
so the choice only affects speed.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _pykernels


def _load_default() -> ModuleType:
    if os.environ.get("CHSH_LAB_NO_EXT"):
        return _pykernels
    try:
        from . import _core
        return _core
    except ImportError:
        return _pykernels


kernels = _load_default()


def backend_name() -> str:
    """Name of the active kernel backend."""
    return kernels.BACKEND_NAME


def get_backend(name: str | None = None) -> ModuleType:
    """Fetch a kernel backend by name ("ext", "py", or None for the active one)."""
    if name is None:
        return kernels
    if name == "py":
        return _pykernels
    if name == "ext":
        from . import _core
        return _core
    raise ValueError(f"unknown backend {name!r} (expected 'ext' or 'py')")
