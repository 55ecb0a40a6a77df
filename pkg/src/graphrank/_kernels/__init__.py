"""Hot-loop kernels with a compiled core and a numpy fallback.

The compiled extension is used when it imports; set ``GRAPH_RANK_PURE_PYTHON=1``
to force the fallback. Both backends return identical results.
"""

import os

from . import _pykernels

try:
    if os.environ.get("GRAPH_RANK_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-python backend requested")
    from . import _ckernels as _impl
    BACKEND = "cython"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"

aggregate_pairs = _impl.aggregate_pairs
laplacian = _impl.laplacian
component_labels = _impl.component_labels
kruskal = _impl.kruskal
rank_vector = _impl.rank_vector
inversion_count = _impl.inversion_count
cycle_count = _impl.cycle_count
min_gap_sq = _impl.min_gap_sq


def backends():
    """Map backend name to module for every backend importable here."""
    found = {"python": _pykernels}
    try:
        from . import _ckernels
        found["cython"] = _ckernels
    except ImportError:
        pass
    return found
