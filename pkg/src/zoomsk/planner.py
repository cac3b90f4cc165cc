"""Offline choice of zoom sizes and zoom iterations.

All planner arithmetic is binary64; only the integer plan it emits reaches
the low-precision runtime.
"""

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelConfig
from .lowprec import Precision
from .pam import log_q_function
from .sk import SkConfig, plain_sigma_sq, sk_log_error_bound_tight
from .zsk import PlanError, ZoomPlan, zsk_log_bound_terms

__all__ = ["PlannerInput", "PlanInfeasible", "PlanReport", "solve_snr_target",
           "find_zoom_parameters", "validate_plan", "make_plan",
           "SNR_BRACKET", "HALF_MAX_FINAL_BITS"]

SNR_BRACKET = (1e-6, 1e6)
#: Widest final-stage constellation a binary16 receiver can still resolve.
HALF_MAX_FINAL_BITS = 10


class PlanInfeasible(RuntimeError):
    pass


@dataclass(frozen=True)
class PlannerInput:
    n_iters: int
    rate_bits: int
    pe_target: float
    epsilon: float

    def __post_init__(self):
        if self.n_iters < 1 or self.rate_bits < 1:
            raise ValueError("n_iters and rate_bits must be >= 1")
        if not 0 < self.pe_target < 1:
            raise ValueError("pe_target must lie in (0, 1)")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")

    @property
    def pe_zoom(self):
        return self.epsilon * self.pe_target


def _log_bound(n_iters, rate_bits, snr):
    cfg = SkConfig(n_iters, rate_bits, ChannelConfig(snr))
    return sk_log_error_bound_tight(cfg)


def solve_snr_target(inp, max_iter=200, rtol=1e-10):
    """Linear SNR at which ``2 Q(1/(2 M sigma_{N-1}))`` equals ``pe_target``.

    Bisection in log-SNR on the log of the bound.  The lower end of the
    final bracket is returned, so the bound there is never below the target.
    """
    lo, hi = SNR_BRACKET
    target = np.log(inp.pe_target)
    if _log_bound(inp.n_iters, inp.rate_bits, hi) > target:
        raise PlanInfeasible(f"pe_target={inp.pe_target} needs SNR above {10*np.log10(hi):.0f} dB")
    if _log_bound(inp.n_iters, inp.rate_bits, lo) <= target:
        return lo
    for _ in range(max_iter):
        mid = np.sqrt(lo * hi)
        if _log_bound(inp.n_iters, inp.rate_bits, mid) > target:
            lo = mid
        else:
            hi = mid
        if hi / lo - 1.0 < rtol:
            break
    return float(lo)


def find_zoom_parameters(pe_zoom, sigma_sq, rate_bits, min_zoom_bits=1):
    """Greedy zoom schedule over a plain-SK variance book.

    At each iteration ``i = 1 .. N-2`` try the largest zoom ``M_z`` the
    remaining bits allow; take the first one whose error ``2 Q(1/(2 M_z
    sigma_i))`` is below ``pe_zoom``, scale all variances from ``i`` onwards
    by ``M_z**2`` and move on to ``i + 1``.  Whatever is left after the scan
    becomes the final decoding stage.

    ``min_zoom_bits=1`` searches zoom sizes down to 2.  With 2, the smallest
    zoom is 4, which yields the sparser "4 every other round" plans.
    """
    book = np.array(sigma_sq, dtype=np.float64)
    n_iters = len(book)
    log_target = np.log(pe_zoom)
    remaining = int(rate_bits)
    bits, iters = [], []
    for i in range(1, n_iters - 1):
        if remaining < min_zoom_bits:
            break
        sigma = np.sqrt(book[i])
        for nb in range(remaining, min_zoom_bits - 1, -1):
            log_pe = np.log(2.0) + log_q_function(1.0 / (2.0 * 2.0**nb * sigma))
            if log_pe < log_target:
                iters.append(i)
                bits.append(nb)
                book[i:] *= 4.0**nb
                remaining -= nb
                break
    return ZoomPlan(tuple(bits) + (remaining,), tuple(iters))


@dataclass
class PlanReport:
    log_terms: np.ndarray
    flags: list
    log_sk_bound: float
    epsilon: float
    maximal: list = field(default_factory=list)

    @property
    def r(self):
        return len(self.flags)

    @property
    def ok(self):
        return not any(self.flags) and all(m is not False for m in self.maximal)

    @property
    def zsk_bound(self):
        return float(np.exp(self.log_terms).sum())

    @property
    def sk_bound(self):
        return float(np.exp(self.log_sk_bound))

    @property
    def epsilon_bound(self):
        return (1.0 + self.r * self.epsilon) * self.sk_bound

    @property
    def ratio(self):
        """ZSK union bound over plain SK bound, in ``[1, 1 + r eps]`` if unflagged."""
        return float(np.exp(self.log_terms - self.log_sk_bound).sum())


def validate_plan(plan, cfg, epsilon, pe_zoom=None):
    """Check each zoom term against ``epsilon`` times the final SK term.

    A zoom ``j < r`` is flagged when ``Q(1/(2 M_0..M_j sigma_{k_j}))`` is not
    below ``epsilon * Q(1/(2 M sigma_{N-1}))``.  With ``pe_zoom`` given, the
    maximality of every zoom size is also checked: doubling ``M_j`` at ``k_j``
    (when the bits allow) must push that term to ``pe_zoom`` or above.
    """
    log_terms = zsk_log_bound_terms(cfg, plan)
    log_final = log_terms[-1]
    flags = [bool(t >= np.log(epsilon) + log_final) for t in log_terms[:-1]]
    maximal = []
    if pe_zoom is not None:
        sigma = np.sqrt(plain_sigma_sq(cfg.n_iters, cfg.rate_bits, cfg.channel.snr_linear))
        used = 0
        for j, k in enumerate(plan.zoom_iters):
            b = plan.stage_log2_m[j]
            if used + b + 1 > cfg.rate_bits:
                maximal.append(None)
            else:
                arg = 1.0 / (2.0 * 2.0 ** (used + b + 1) * sigma[k])
                maximal.append(bool(np.log(2.0) + log_q_function(arg) >= np.log(pe_zoom)))
            used += b
    return PlanReport(log_terms=log_terms, flags=flags, log_sk_bound=float(log_final),
                      epsilon=float(epsilon), maximal=maximal)


def make_plan(inp, precision=Precision.HALF, min_zoom_bits=1):
    """Solve for the target SNR, plan the zooms and validate the result.

    Returns ``(snr_target, plan, report)``; raises :class:`PlanInfeasible`
    when no SNR in range reaches the target or the final stage is too wide
    for ``precision``.
    """
    snr = solve_snr_target(inp)
    book = plain_sigma_sq(inp.n_iters, inp.rate_bits, snr)
    plan = find_zoom_parameters(inp.pe_zoom, book, inp.rate_bits, min_zoom_bits)
    if Precision.parse(precision) is Precision.HALF and plan.stage_log2_m[-1] > HALF_MAX_FINAL_BITS:
        raise PlanInfeasible(
            f"final stage needs {plan.stage_log2_m[-1]} bits at N-1; binary16 resolves at most "
            f"{HALF_MAX_FINAL_BITS}")
    cfg = SkConfig(inp.n_iters, inp.rate_bits, ChannelConfig(snr))
    try:
        plan.check(inp.n_iters, inp.rate_bits)
    except PlanError as exc:
        raise PlanInfeasible(str(exc)) from exc
    return snr, plan, validate_plan(plan, cfg, inp.epsilon, pe_zoom=inp.pe_zoom)
