"""Loader for the optional compiled fast path.

``FAST`` is the configured extension module, or None when it is not built or
``CHEMTUNE_PURE_PYTHON`` is set. Callers treat a None result from any of its
functions as "use the Python implementation".
"""

from __future__ import annotations

import os

from chemtune.chem.elements import CHARGED_VALENCES, ELEMENTS


def _load():
    if os.environ.get("CHEMTUNE_PURE_PYTHON"):
        return None
    try:
        from chemtune import _fast
    except ImportError:
        return None
    symbols = [""] + [e.symbol for e in ELEMENTS]
    valences = [[]] + [list(e.default_valences) for e in ELEMENTS]
    organic = [False] + [e.organic_subset for e in ELEMENTS]
    z_of = {e.symbol: e.atomic_number for e in ELEMENTS}
    charged = {(z_of[sym], q): list(v) for (sym, q), v in CHARGED_VALENCES.items()}
    _fast.configure(symbols, valences, organic, charged)
    return _fast


FAST = _load()
