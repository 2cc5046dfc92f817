"""Backend selection for the simulation hot loop.

The compiled extension is used when it imports; set ``UNDERLAY_BER_PURE=1``
to force the numpy fallback.
"""
from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("UNDERLAY_BER_PURE", "") not in ("", "0"):
    _compiled = None
else:
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"
df_chain = _compiled.df_chain if _compiled is not None else _kernels_py.df_chain
df_chain_python = _kernels_py.df_chain
df_chain_compiled = _compiled.df_chain if _compiled is not None else None

__all__ = ["BACKEND", "df_chain", "df_chain_python", "df_chain_compiled"]
