"""PAM constellation on [-1/2, 1/2], ML slicing and Gaussian tail helpers.

The constellation size is always a power of two and is carried as its
base-2 logarithm (an integer), never as a float.
"""

from dataclasses import dataclass

import numpy as np
from scipy import special

from .lowprec import Precision, quantize

__all__ = ["PamSpec", "pam_map", "pam_power", "ml_decode", "q_function",
           "log_q_function", "pam_error_prob", "DECODE_FAILURE"]

#: Index returned by :func:`ml_decode` when the estimate is inf/NaN.
DECODE_FAILURE = -1


@dataclass(frozen=True)
class PamSpec:
    """An ``M = 2**log2_m`` point PAM constellation."""

    log2_m: int

    def __post_init__(self):
        if not isinstance(self.log2_m, (int, np.integer)) or isinstance(self.log2_m, bool):
            raise TypeError("log2_m must be an integer")
        if self.log2_m < 0 or self.log2_m > 62:
            raise ValueError(f"log2_m={self.log2_m} outside [0, 62]")
        object.__setattr__(self, "log2_m", int(self.log2_m))

    @property
    def m(self):
        return 1 << self.log2_m


def _as_spec(spec):
    return spec if isinstance(spec, PamSpec) else PamSpec(int(spec))


def pam_points(i, log2_m):
    """Unchecked binary64 evaluation of ``i/M - 1/2 + 1/(2M)``.

    Used by the transmitter after a failed zoom, when the residual index may
    fall outside ``[0, M-1]`` and the symbol legitimately leaves the interval.
    """
    i = np.asarray(i, dtype=np.float64)
    # (2i + 1 - M) / (2M); numerator exact for |i| < 2**52, denominator a power of 2
    return np.ldexp(2.0 * i + 1.0 - np.ldexp(1.0, log2_m), -(log2_m + 1))


def pam_map(i, spec, p=Precision.DOUBLE):
    """Constellation point of index ``i``, rounded once to precision ``p``.

    The value is formed in binary64 from the integers ``i`` and ``log2_m``
    before the single final rounding.  ``i`` may be an integer array.
    """
    spec = _as_spec(spec)
    idx = np.asarray(i)
    if not np.issubdtype(idx.dtype, np.integer):
        raise TypeError("symbol index must be integer")
    if np.any(idx < 0) or np.any(idx >= spec.m):
        raise ValueError(f"symbol index out of range [0, {spec.m - 1}]")
    return quantize(pam_points(idx, spec.log2_m), p)


def pam_power(spec):
    """Average power ``(M**2 - 1) / (12 M**2)`` of the uniform constellation."""
    spec = _as_spec(spec)
    if spec.m < 2:
        raise ValueError("pam_power needs M >= 2")
    m = float(spec.m)
    return (1.0 - 1.0 / (m * m)) / 12.0


def ml_decode(theta_hat, spec):
    """Nearest constellation index to ``theta_hat``.

    Closed form ``ceil(theta_hat * M) + M/2 - 1`` clamped to ``[0, M-1]``;
    ``theta_hat * M`` is exact (power-of-two scaling) so this matches the
    brute-force argmin, with ties going to the lower index.  Non-finite
    estimates map to :data:`DECODE_FAILURE`.
    """
    spec = _as_spec(spec)
    scalar = np.ndim(theta_hat) == 0
    th = np.asarray(theta_hat, dtype=np.float64)
    m = spec.m
    if m == 1:
        idx = np.zeros(th.shape, dtype=np.int64)
    else:
        with np.errstate(invalid="ignore"):
            v = np.clip(np.ldexp(th, spec.log2_m), -float(m), float(m))
            idx = np.ceil(v)
        idx = np.nan_to_num(idx, nan=0.0).astype(np.int64) + (m // 2 - 1)
        idx = np.clip(idx, 0, m - 1)
    idx = np.where(np.isfinite(th), idx, DECODE_FAILURE)
    return int(idx) if scalar else idx


def q_function(x):
    """Standard normal tail probability ``Q(x) = erfc(x / sqrt 2) / 2``."""
    r = 0.5 * special.erfc(np.asarray(x, dtype=np.float64) / np.sqrt(2.0))
    return float(r) if np.ndim(x) == 0 else r


def log_q_function(x):
    """Natural log of ``Q(x)``, finite far beyond the underflow of ``Q``."""
    # log_ndtr switches to the asymptotic series in the deep tail
    r = special.log_ndtr(-np.asarray(x, dtype=np.float64))
    return float(r) if np.ndim(x) == 0 else r


def pam_error_prob(sigma, spec):
    """ML symbol error of ``M``-PAM in N(0, sigma**2) noise.

    Returns ``(exact, bound)`` with ``exact = 2(1 - 1/M) Q(1/(2 M sigma))``
    and ``bound = 2 Q(1/(2 M sigma))``.
    """
    spec = _as_spec(spec)
    sigma = np.asarray(sigma, dtype=np.float64)
    if np.any(~(sigma > 0)):
        raise ValueError("sigma must be positive")
    with np.errstate(over="ignore"):
        arg = 1.0 / (2.0 * spec.m * sigma)
    bound = 2.0 * q_function(arg)
    exact = (1.0 - 1.0 / spec.m) * bound
    if np.ndim(exact) == 0:
        return float(exact), float(bound)
    return exact, bound
