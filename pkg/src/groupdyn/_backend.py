"""Select the event-loop implementation at import time.

The compiled extension is used when it imports; set ``GROUPDYN_PURE_PYTHON=1``
to force the pure-Python loop. Both produce bit-identical results.
"""

import os

from . import _pykernels

python_advance = _pykernels.advance

try:
    from ._ckernels import advance as compiled_advance
except ImportError:  # extension not built
    compiled_advance = None

if compiled_advance is not None and not os.environ.get("GROUPDYN_PURE_PYTHON"):
    advance = compiled_advance
    BACKEND = "cython"
else:
    advance = python_advance
    BACKEND = "python"
