"""Hot-loop kernels: compiled when the extension is built, pure Python otherwise.

Set ``TSNSCHED_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _bnb_py

if os.environ.get("TSNSCHED_PURE_PYTHON"):
    bnb_search = _bnb_py.search
    BACKEND = "python"
else:
    try:
        from ._bnb import search as bnb_search
        BACKEND = "cython"
    except ImportError:  # extension not built
        bnb_search = _bnb_py.search
        BACKEND = "python"

INF = _bnb_py.INF
