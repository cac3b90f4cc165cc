"""Emulated reduced-precision floating point arithmetic.

Every value handled by the scheme simulations is a binary64 number (or a
numpy array of them) that is exactly representable in the selected
:class:`Precision`.  Arithmetic is done in binary64 and rounded once to the
target format, which gives correctly rounded single operations for both
binary16 and binary32 (binary64 carries more than ``2p + 2`` bits for both).
No fused multiply-add is ever used.
"""

import enum

import numpy as np

__all__ = ["Precision", "quantize", "qop", "is_representable", "FLOAT16_MAX",
           "FLOAT16_MIN_NORMAL", "FLOAT16_MIN_SUBNORMAL"]

FLOAT16_MAX = 65504.0
FLOAT16_MIN_NORMAL = 2.0 ** -14
FLOAT16_MIN_SUBNORMAL = 2.0 ** -24


class Precision(enum.Enum):
    """Floating point format used for transmitter/receiver arithmetic."""

    HALF = "half"
    SINGLE = "single"
    DOUBLE = "double"

    @classmethod
    def parse(cls, value):
        """Accept a :class:`Precision`, or one of ``half/single/double``."""
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(
                f"unknown precision {value!r}; expected half, single or double"
            ) from None

    @property
    def dtype(self):
        return _DTYPES[self]


_DTYPES = {
    Precision.HALF: np.float16,
    Precision.SINGLE: np.float32,
    Precision.DOUBLE: np.float64,
}


def quantize(x, p):
    """Round ``x`` to the nearest value representable in ``p``.

    Ties go to even, magnitudes beyond the format range overflow to
    infinity, subnormals are kept.  ``Precision.DOUBLE`` is the identity.
    Scalars come back as Python floats, arrays as float64 arrays.

    Parameters
    ----------
    x : float or array_like
        Value(s) to round.
    p : Precision
        Target format.
    """
    p = Precision.parse(p)
    scalar = np.ndim(x) == 0
    arr = np.asarray(x, dtype=np.float64)
    if p is not Precision.DOUBLE:
        # overflow to inf is the IEEE result we want; silence numpy's warning
        with np.errstate(over="ignore", invalid="ignore"):
            arr = arr.astype(p.dtype).astype(np.float64)
    return float(arr) if scalar else arr


_OPS = {
    "add": np.add,
    "sub": np.subtract,
    "mul": np.multiply,
    "div": np.divide,
}


def qop(a, b, kind, p):
    """One correctly rounded arithmetic operation in format ``p``.

    ``kind`` is one of ``add``, ``sub``, ``mul``, ``div``.  The exact (or
    binary64) result is rounded once to ``p``; inf and NaN propagate.
    """
    try:
        op = _OPS[kind]
    except KeyError:
        raise ValueError(f"unknown operation {kind!r}") from None
    with np.errstate(all="ignore"):
        r = op(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64))
    return quantize(r, p)


def is_representable(x, p):
    """True where ``x`` survives rounding to ``p`` unchanged (NaN excluded)."""
    x = np.asarray(x, dtype=np.float64)
    q = quantize(x, p)
    return np.asarray(q == x)
