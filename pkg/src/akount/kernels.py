"""Kernel backend selection.

The compiled ``_ckernels`` module is used when it imports cleanly; otherwise the
numpy fallback is used. Set ``AKOUNT_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _fallback

if os.environ.get("AKOUNT_PURE_PYTHON"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"

extract_kmers = _impl.extract_kmers
mix64 = _impl.mix64
owner_pe = _impl.owner_pe
radix_sort = _impl.radix_sort
radix_sort_pairs = _impl.radix_sort_pairs
accumulate = _impl.accumulate
accumulate_pairs = _impl.accumulate_pairs
is_sorted = _impl.is_sorted


def available_backends():
    """Return ``{name: module}`` for every backend importable in this environment."""
    backends = {"python": _fallback}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        backends["cython"] = _ckernels
    return backends
