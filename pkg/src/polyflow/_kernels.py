"""Select the brute-force kernel backend at import time.

The compiled extension is preferred; the pure-Python module is the fallback
and the reference.  Set ``POLYFLOW_PURE=1`` to force the fallback (used by
the benchmark and the backend-equivalence tests).
"""

from __future__ import annotations

import os

from . import _core_py

if os.environ.get("POLYFLOW_PURE"):
    impl = _core_py
else:
    try:
        from . import _core as impl  # type: ignore[no-redef]
    except ImportError:
        impl = _core_py

BACKEND = impl.BACKEND_NAME
