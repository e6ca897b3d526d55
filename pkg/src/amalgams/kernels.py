"""Kernel selection: compiled extension when available, pure Python otherwise.

Both backends implement the same contracts. ``longest_common_run`` and
``runs_at_least`` report *some* witness position for each run; callers
must not rely on a particular tie-break between equally long runs.
"""

from __future__ import annotations

from amalgams import _pykernels

try:
    from amalgams import _ckernels as _impl

    BACKEND = "cython"
except ImportError:  # pragma: no cover - depends on build environment
    from amalgams import _pykernels as _impl

    BACKEND = "python"

free_reduce_ints = _impl.free_reduce_ints
longest_common_run = _impl.longest_common_run


def runs_at_least(a, b, k):
    """All maximal common runs of length >= k, as (start_a, start_b, length).

    Dispatches on problem shape: the compiled diagonal scan is fastest
    for short sequences, but it is O(len(a)*len(b)) regardless of k; for
    long sequences with a large k the hash-window scan costs only
    O(len(a)+len(b)+matches).
    """
    if k >= 16 and len(a) * len(b) > 1_000_000:
        return _pykernels.runs_at_least(a, b, k)
    return _impl.runs_at_least(a, b, k)
