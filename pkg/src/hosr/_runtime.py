"""Process-level tuning for long batch runs."""

from __future__ import annotations

import ctypes
import ctypes.util

_M_TRIM_THRESHOLD = -1
_M_MMAP_THRESHOLD = -3
_done = False


def tune_allocator() -> bool:
    """Keep freed large blocks in the glibc heap instead of unmapping them.

    Batched fitting allocates and drops many multi-megabyte temporaries; on
    hosts where fresh pages are expensive to fault in, reusing the heap is
    several times faster.  No-op (returns False) off glibc.
    """
    global _done
    if _done:
        return True
    try:
        libc = ctypes.CDLL(ctypes.util.find_library("c") or "libc.so.6")
        ok = libc.mallopt(_M_MMAP_THRESHOLD, 32 * 1024 * 1024) and libc.mallopt(_M_TRIM_THRESHOLD, 2**30)
    except (OSError, AttributeError):
        return False
    _done = bool(ok)
    return _done
