"""Multi-stage zoom-in SK.

Both parties run plain SK rounds; at each zoom iteration they pick the same
sub-window of the current constellation from the fed-back estimate, remap it
onto [-1/2, 1/2] and continue with stage-scaled parameters.  Window offsets
are integers in units of the original M-point grid, so the decoded message is
the integer sum of all offsets.
"""

import json
from dataclasses import dataclass

import numpy as np

from .lowprec import FLOAT16_MAX, FLOAT16_MIN_NORMAL, Precision, qop, quantize
from .pam import PamSpec, ml_decode, pam_map, pam_points, log_q_function, q_function
from .sk import BatchResult, Transcript, _Recorder, _check_inputs, build_schedule, plain_sigma_sq

__all__ = ["ZoomPlan", "ZskSchedule", "StageOffsets", "PlanError", "zoom_index",
           "zoom_transform", "build_zsk_schedule", "zsk_run", "zsk_run_batch",
           "zsk_bound_terms", "zsk_error_bound", "dynamic_range_report", "ZOOM_FAILURE"]

ZOOM_FAILURE = -1


class PlanError(ValueError):
    """A zoom plan that is malformed or does not fit its configuration."""


def _log2_exact(m, what):
    m = int(m)
    if m < 1 or m & (m - 1):
        raise PlanError(f"{what}={m} is not a power of two")
    return m.bit_length() - 1


@dataclass(frozen=True)
class ZoomPlan:
    """Stage constellation sizes and zoom iterations.

    ``stage_log2_m`` holds ``log2 M_0 .. log2 M_r`` and ``zoom_iters`` holds
    ``k_0 < ... < k_{r-1}``.  Every zooming stage has ``M_j >= 2``; the final
    stage may have ``M_r = 1`` when the last zoom already pins the message.
    """

    stage_log2_m: tuple
    zoom_iters: tuple

    def __post_init__(self):
        bits = tuple(int(b) for b in self.stage_log2_m)
        ks = tuple(int(k) for k in self.zoom_iters)
        object.__setattr__(self, "stage_log2_m", bits)
        object.__setattr__(self, "zoom_iters", ks)
        if len(bits) != len(ks) + 1:
            raise PlanError(f"{len(bits)} stages need {len(bits) - 1} zoom iterations, got {len(ks)}")
        if any(b < 1 for b in bits[:-1]) or bits[-1] < 0:
            raise PlanError("zooming stages need M_j >= 2 and the final stage M_r >= 1")
        if any(k < 0 for k in ks) or any(b <= a for a, b in zip(ks, ks[1:])):
            raise PlanError(f"zoom iterations must be non-negative and strictly increasing: {ks}")

    @classmethod
    def plain(cls, rate_bits):
        """The zero-zoom plan, i.e. ordinary SK."""
        return cls((int(rate_bits),), ())

    @classmethod
    def from_sizes(cls, sizes, zoom_iters):
        return cls(tuple(_log2_exact(m, "stage size") for m in sizes), tuple(zoom_iters))

    @classmethod
    def from_lists(cls, sizes, zoom_iters, rate_bits=None):
        """Build a plan from list notation ``M=[...], K=[...]``.

        ``len(K) == len(M) - 1``: ``M`` already lists the final stage.
        ``len(K) == len(M)``: ``M`` lists the zoom sizes only and the final
        stage gets whatever ``rate_bits`` leaves (``M_r = 1`` by default).
        ``len(K) == len(M) + 1``: the missing zoom sizes repeat the last
        listed size, then as above.
        """
        sizes, ks = list(sizes), list(zoom_iters)
        if len(ks) == len(sizes) - 1:
            plan = cls.from_sizes(sizes, ks)
            if rate_bits is not None and plan.rate_bits != rate_bits:
                raise PlanError(f"sizes carry {plan.rate_bits} bits, not {rate_bits}")
            return plan
        if len(ks) > len(sizes) + 1 or len(ks) < len(sizes):
            raise PlanError(f"cannot reconcile {len(sizes)} sizes with {len(ks)} zoom iterations")
        sizes = sizes + sizes[-1:] * (len(ks) - len(sizes))
        bits = [_log2_exact(m, "stage size") for m in sizes]
        residual = (sum(bits) if rate_bits is None else int(rate_bits)) - sum(bits)
        if residual < 0:
            raise PlanError(f"zoom sizes use {sum(bits)} bits, more than rate_bits={rate_bits}")
        return cls(tuple(bits) + (residual,), tuple(ks))

    @property
    def r(self):
        return len(self.zoom_iters)

    @property
    def rate_bits(self):
        return sum(self.stage_log2_m)

    @property
    def stage_sizes(self):
        return [1 << b for b in self.stage_log2_m]

    def stage_of_round(self, n_iters):
        """Stage index active when round ``n`` transmits, ``n = 0 .. N-1``."""
        ks = np.asarray(self.zoom_iters, dtype=np.int64)
        return np.searchsorted(ks, np.arange(n_iters), side="right").astype(np.int64)

    def check(self, n_iters, rate_bits=None):
        """Raise :class:`PlanError` unless the plan fits ``N`` (and ``K``)."""
        if rate_bits is not None and self.rate_bits != rate_bits:
            raise PlanError(f"plan carries {self.rate_bits} bits but the configuration has {rate_bits}")
        if self.r and self.zoom_iters[-1] > n_iters - 2:
            raise PlanError(f"last zoom at {self.zoom_iters[-1]} leaves no round before N-1={n_iters - 1}")
        return self

    def describe(self):
        return f"M={self.stage_sizes}, K={list(self.zoom_iters)}"

    def to_dict(self):
        return {"M": self.stage_sizes, "K": list(self.zoom_iters), "bits": self.rate_bits}

    def to_json(self, **extra):
        return json.dumps({**self.to_dict(), **extra})

    @classmethod
    def from_dict(cls, d):
        return cls.from_lists(d["M"], d["K"], d.get("bits"))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class StageOffsets:
    offsets: tuple

    @property
    def message(self):
        return sum(self.offsets)


@dataclass(frozen=True)
class ZskSchedule:
    """Stage-scaled per-round parameters.

    ``sigma[n]`` is the std of the active stage's error after round ``n``;
    ``factor[j]`` is the cumulative zoom ``M_0 * ... * M_{j-1}`` of stage ``j``.
    """

    stage: np.ndarray
    factor: np.ndarray
    sigma: np.ndarray
    beta: np.ndarray
    tx_gain: np.ndarray
    gain0: float


def build_zsk_schedule(cfg, plan):
    plan.check(cfg.n_iters, cfg.rate_bits)
    base = build_schedule(cfg)
    stage = plan.stage_of_round(cfg.n_iters)
    cum_bits = np.concatenate([[0], np.cumsum(plan.stage_log2_m[:-1])]).astype(np.int64)
    # powers of two: the stage scaling is exact in binary64
    shift = cum_bits[stage]
    return ZskSchedule(
        stage=stage,
        factor=np.ldexp(1.0, cum_bits),
        sigma=np.ldexp(base.sigma, shift),
        beta=np.ldexp(base.beta, shift[:-1]),
        tx_gain=np.ldexp(base.tx_gain, -shift[:-1]),
        gain0=base.gain0,
    )


def _round_half_away(v):
    a = np.abs(v)
    f = np.floor(a)
    return np.sign(v) * (f + (a - f >= 0.5))


def zoom_index(theta_hat, m_current, m_stage, p=Precision.DOUBLE):
    """Left offset of the zoom window, in points of the current grid.

    ``round((theta_hat - 1/(2 m_stage) + 1/2) * m_current)`` clipped to
    ``[0, m_current - m_current/m_stage]``.  The shift is done at precision
    ``p``; the scaling by the power of two ``m_current`` is exact, and the
    rounding to an integer and the clip are integer operations.  Non-finite
    estimates give :data:`ZOOM_FAILURE`.
    """
    b_cur = _log2_exact(m_current, "m_current")
    b_stage = _log2_exact(m_stage, "m_stage")
    if b_stage > b_cur or b_stage < 1:
        raise ValueError("need 2 <= m_stage <= m_current")
    scalar = np.ndim(theta_hat) == 0
    th = np.asarray(theta_hat, dtype=np.float64)
    half_window = quantize(np.ldexp(1.0, -(b_stage + 1)), p)
    t = qop(qop(th, half_window, "sub", p), 0.5, "add", p)
    top = (1 << b_cur) - (1 << (b_cur - b_stage))
    with np.errstate(invalid="ignore"):
        v = np.clip(np.ldexp(t, b_cur), -1.0, float(1 << b_cur))
        i0 = np.clip(np.nan_to_num(_round_half_away(v)).astype(np.int64), 0, top)
    i0 = np.where(np.isfinite(th), i0, ZOOM_FAILURE)
    return int(i0) if scalar else i0


def zoom_transform(theta_hat, i0, m_current, m_stage, p=Precision.DOUBLE):
    """Map the window starting at ``a = i0/m_current - 1/2`` onto [-1/2, 1/2].

    ``a`` is formed from integers and rounded once to ``p``; the map
    ``m_stage * (theta_hat - a) - 1/2`` then rounds after every operation.
    """
    b_cur = _log2_exact(m_current, "m_current")
    _log2_exact(m_stage, "m_stage")
    a = quantize(np.ldexp(np.asarray(i0, dtype=np.float64), -b_cur) - 0.5, p)
    shifted = qop(theta_hat, a, "sub", p)
    r = qop(qop(float(m_stage), shifted, "mul", p), 0.5, "sub", p)
    return float(r) if np.ndim(r) == 0 else r


@dataclass
class ZskBatchResult(BatchResult):
    offsets: np.ndarray = None
    zoom_ok: np.ndarray = None


def zsk_run_batch(cfg, plan, messages, noise, record=False):
    """Run the zoom-in scheme for every row of ``noise``.

    Returns a :class:`ZskBatchResult`; ``offsets[:, j]`` are the integer
    window offsets ``i_0 .. i_r`` and ``zoom_ok[:, j]`` says whether the
    message residual was still inside the window chosen at zoom ``j`` (a
    transmitter-side diagnostic, not used by the scheme).
    """
    messages, noise = _check_inputs(cfg, messages, noise)
    sch = build_zsk_schedule(cfg, plan)
    p = cfg.precision
    n_rounds = cfg.n_iters
    trials = len(messages)
    rec = _Recorder((trials, n_rounds), record)

    gain0 = quantize(sch.gain0, p)
    tx_gain = quantize(sch.tx_gain, p)
    beta = quantize(sch.beta, p)

    zooms = dict((k, j) for j, k in enumerate(plan.zoom_iters))
    offsets = np.zeros((trials, plan.r + 1), dtype=np.int64)
    zoom_ok = np.ones((trials, plan.r), dtype=bool)
    failed = np.zeros(trials, dtype=bool)
    residual = messages.copy()
    bits_cur = cfg.rate_bits

    theta = pam_map(messages, cfg.pam, p)
    x = qop(gain0, theta, "mul", p)
    y = quantize(x + noise[:, 0], p)
    th = qop(y, gain0, "div", p)
    finite = np.isfinite(x) & np.isfinite(y) & np.isfinite(th)
    rec.put(0, x=x, z=noise[:, 0], y=y, th=th)

    for n in range(n_rounds - 1):
        if n in zooms:
            j = zooms[n]
            b_stage = plan.stage_log2_m[j]
            i_j = zoom_index(th, 1 << bits_cur, 1 << b_stage, p)
            failed |= i_j == ZOOM_FAILURE
            i_j = np.where(i_j == ZOOM_FAILURE, 0, i_j)
            th = zoom_transform(th, i_j, 1 << bits_cur, 1 << b_stage, p)
            bits_cur -= b_stage
            residual = residual - i_j
            offsets[:, j] = i_j
            zoom_ok[:, j] = (residual >= 0) & (residual < (1 << bits_cur))
            # the transmitter rebuilds its symbol from integers; a failed zoom
            # leaves the residual outside the grid and the symbol outside [-1/2, 1/2]
            theta = quantize(pam_points(residual, bits_cur), p)
            finite &= np.isfinite(th)
        eps = qop(th, theta, "sub", p)
        x = qop(tx_gain[n], eps, "mul", p)
        y = quantize(x + noise[:, n + 1], p)
        eps_hat = qop(beta[n], y, "mul", p)
        th = qop(th, eps_hat, "sub", p)
        finite &= np.isfinite(x) & np.isfinite(y) & np.isfinite(th)
        rec.put(n, eps=eps)
        rec.put(n + 1, x=x, z=noise[:, n + 1], y=y, th=th)

    rec.put(n_rounds - 1, eps=qop(th, theta, "sub", p))
    last = ml_decode(th, PamSpec(bits_cur))
    offsets[:, plan.r] = np.maximum(last, 0)
    decoded = offsets.sum(axis=1)
    decoded[(last < 0) | failed] = -1
    res = ZskBatchResult(decoded, ~finite, rec.transcript(sch.stage, decoded))
    res.offsets = offsets
    res.zoom_ok = zoom_ok
    return res


def zsk_run(cfg, plan, message, noise):
    """Single-trial zoom-in SK.  Returns ``(decoded, transcript, offsets)``."""
    z = getattr(noise, "samples", noise)
    res = zsk_run_batch(cfg, plan, [int(message)], np.asarray(z)[None, :], record=True)
    return (int(res.decoded[0]), res.transcript.row(0),
            StageOffsets(tuple(int(v) for v in res.offsets[0])))


def _bound_args(cfg, plan):
    plan.check(cfg.n_iters, cfg.rate_bits)
    sigma = np.sqrt(plain_sigma_sq(cfg.n_iters, cfg.rate_bits, cfg.channel.snr_linear))
    k = np.array(list(plan.zoom_iters) + [cfg.n_iters - 1])
    cum = np.ldexp(1.0, np.cumsum(plan.stage_log2_m))
    return 1.0 / (2.0 * cum * sigma[k])


def zsk_bound_terms(cfg, plan):
    """The ``r + 1`` union-bound terms ``2 Q(1 / (2 M_0..M_j sigma_{k_j}))``.

    ``sigma`` is the plain SK schedule and ``k_r = N - 1``; the last term is
    the plain SK bound.
    """
    return 2.0 * q_function(_bound_args(cfg, plan))


def zsk_log_bound_terms(cfg, plan):
    return np.log(2.0) + log_q_function(_bound_args(cfg, plan))


def zsk_error_bound(cfg, plan):
    return float(np.sum(zsk_bound_terms(cfg, plan)))


def dynamic_range_report(cfg, plan, p=Precision.HALF):
    """Extremes of the stage parameters and whether they fit format ``p``.

    Checks ``sigma``, ``beta`` and the transmit gains of every round against
    the normal range of the format (no overflow, no subnormal loss).
    """
    p = Precision.parse(p)
    sch = build_zsk_schedule(cfg, plan)
    vals = np.concatenate([sch.sigma, sch.beta, sch.tx_gain, [sch.gain0]])
    lo, hi = float(vals.min()), float(vals.max())
    if p is Precision.HALF:
        fmax, fmin = FLOAT16_MAX, FLOAT16_MIN_NORMAL
    else:
        info = np.finfo(p.dtype)
        fmax, fmin = float(info.max), float(info.tiny)
    return {"min": lo, "max": hi, "ok": bool(lo >= fmin and hi <= fmax)}
