"""Selects the compiled inner-loop implementation, falling back to NumPy.

Set ``OSCINT_DISABLE_EXT=1`` to force the fallback (used by the parity
tests and the backend benchmark).
"""

from __future__ import annotations

import os

from . import _fastops_py

if os.environ.get("OSCINT_DISABLE_EXT"):
    _impl = _fastops_py
else:
    try:
        from . import _fastops as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _fastops_py

convolve_direct = _impl.convolve_direct
shifted_l1_diff = _impl.shifted_l1_diff


def backend_name():
    """'compiled' when the C extension is active, else 'numpy'."""
    return "compiled" if _impl.__name__.endswith("._fastops") else "numpy"
