"""Resource caps shared by the enumeration-heavy routines."""

import os

DEFAULT_CAP_BYTES = 2 * 1024**3
DEFAULT_TUPLE_PAIR_CAP = 2**26
DENSE_DIM_CAP = 4096


class ResourceCapError(RuntimeError):
    """Raised when a request would exceed a configured enumeration or memory cap."""


def cap_bytes():
    """Memory cap in bytes; ``HUTCHKIT_CAP_BYTES`` overrides the default."""
    raw = os.environ.get("HUTCHKIT_CAP_BYTES")
    if raw:
        return int(float(raw))
    return DEFAULT_CAP_BYTES


def check_elements(n_elements, itemsize=16, what="array"):
    need = int(n_elements) * itemsize
    if need > cap_bytes():
        raise ResourceCapError(
            f"{what} needs {need} bytes, cap is {cap_bytes()} (set HUTCHKIT_CAP_BYTES to raise it)"
        )


def check_count(count, cap, what="enumeration"):
    if count > cap:
        raise ResourceCapError(f"{what} size {count} exceeds cap {cap}")
