"""Pick the tree kernel at import time.

The compiled extension is used when it imports cleanly, unless the
environment variable ``KQIPREDICT_PURE_PYTHON=1`` is set.
"""

import os

from . import _tree_py

compiled = None
if os.environ.get("KQIPREDICT_PURE_PYTHON") != "1":
    try:
        from . import _tree_core as compiled
    except ImportError:
        compiled = None

kernel = compiled if compiled is not None else _tree_py
name = "cython" if compiled is not None else "python"


def get(which=None):
    """Return a kernel module: ``"cython"``, ``"python"`` or the active one."""
    if which is None:
        return kernel
    if which == "python":
        return _tree_py
    if which == "cython":
        if compiled is None:
            raise ImportError("compiled tree kernel is not built")
        return compiled
    raise ValueError(f"unknown backend {which!r}")
