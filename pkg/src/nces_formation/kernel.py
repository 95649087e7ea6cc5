"""Backend selection for the batched swarm step.

The compiled extension is used when it was built; otherwise, or when
``NCES_FORMATION_BACKEND=python`` is set, the NumPy version is used.
"""

import os

from . import _kernel_py

_forced = os.environ.get("NCES_FORMATION_BACKEND", "").lower()

if _forced == "python":
    _impl = _kernel_py
else:
    try:
        from . import _kernel as _impl
    except ImportError:
        if _forced == "cython":
            raise
        _impl = _kernel_py

step_batch = _impl.step_batch
BACKEND = _impl.BACKEND
