"""Kernel backend selection.

The compiled extension is used when importable.  Setting the environment
variable ``FRPSIM_PURE_PYTHON=1`` forces the pure-Python fallback.
"""

import os

from . import _pykernels as python

if os.environ.get("FRPSIM_PURE_PYTHON"):
    compiled = None
else:
    try:
        from . import _kernels as compiled
    except ImportError:
        compiled = None

_impl = compiled if compiled is not None else python
BACKEND = "cython" if compiled is not None else "python"

LRUCore = _impl.LRUCore
first_hit = _impl.first_hit


def backends():
    """Available kernel modules keyed by name."""
    found = {"python": python}
    if compiled is not None:
        found["cython"] = compiled
    return found
