"""The Schalkwijk-Kailath iterative feedback scheme in emulated precision.

The simulation is vectorized across trials: ``sk_run_batch`` advances every
trial of a block through the same round at once.  ``sk_run`` is the single
message view of the same engine and also returns the per-round transcript.
"""

from dataclasses import dataclass

import numpy as np

from .channel import ChannelConfig
from .lowprec import Precision, qop, quantize
from .pam import PamSpec, ml_decode, pam_map, pam_power, q_function, log_q_function

__all__ = ["SkConfig", "SkSchedule", "Transcript", "BatchResult",
           "build_schedule", "plain_sigma_sq", "sk_run", "sk_run_batch",
           "sk_error_bound", "sk_error_bound_tight", "sk_error_exact",
           "sk_log_error_bound_tight"]


@dataclass(frozen=True)
class SkConfig:
    """``n_iters`` channel uses carrying ``rate_bits`` bits (``M = 2**rate_bits``)."""

    n_iters: int
    rate_bits: int
    channel: ChannelConfig
    precision: Precision = Precision.DOUBLE

    def __post_init__(self):
        if int(self.n_iters) != self.n_iters or self.n_iters < 1:
            raise ValueError("n_iters must be an integer >= 1")
        if int(self.rate_bits) != self.rate_bits or not 1 <= self.rate_bits <= 62:
            raise ValueError("rate_bits must be an integer in [1, 62]")
        object.__setattr__(self, "n_iters", int(self.n_iters))
        object.__setattr__(self, "rate_bits", int(self.rate_bits))
        object.__setattr__(self, "precision", Precision.parse(self.precision))

    @property
    def m(self):
        return 1 << self.rate_bits

    @property
    def pam(self):
        return PamSpec(self.rate_bits)

    @property
    def rate(self):
        return self.rate_bits / self.n_iters

    @property
    def capacity(self):
        return 0.5 * np.log2(1.0 + self.channel.snr_linear)

    def with_snr(self, snr_linear):
        return SkConfig(self.n_iters, self.rate_bits, ChannelConfig(snr_linear), self.precision)

    def with_precision(self, precision):
        return SkConfig(self.n_iters, self.rate_bits, self.channel, precision)


@dataclass(frozen=True)
class SkSchedule:
    """Offline binary64 parameters of every round.

    ``sigma[n]`` is the error std after round ``n``; ``beta[n]`` and
    ``tx_gain[n] = sqrt(P)/sigma[n]`` are used by round ``n + 1``.
    """

    sigma: np.ndarray
    beta: np.ndarray
    tx_gain: np.ndarray
    gain0: float


def plain_sigma_sq(n_iters, rate_bits, snr):
    """``sigma_n**2 = A**2 / (SNR (1 + SNR)**n)`` for ``n = 0 .. n_iters-1``."""
    a2 = pam_power(PamSpec(rate_bits))
    n = np.arange(n_iters)
    return a2 / snr * np.exp(-n * np.log1p(snr))


def build_schedule(cfg):
    snr = cfg.channel.snr_linear
    sigma = np.sqrt(plain_sigma_sq(cfg.n_iters, cfg.rate_bits, snr))
    sqrt_p = np.sqrt(cfg.channel.power)
    beta = sigma[:-1] / cfg.channel.noise_std * np.sqrt(snr) / (1.0 + snr)
    return SkSchedule(
        sigma=sigma,
        beta=beta,
        tx_gain=sqrt_p / sigma[:-1],
        gain0=float(sqrt_p / np.sqrt(pam_power(cfg.pam))),
    )


@dataclass
class Transcript:
    """Per-round record of one or many trials.

    Arrays have shape ``(N,)`` for a single trial or ``(trials, N)``.
    ``eps[n]`` is the working-precision error of the stage estimate against
    the stage symbol; ``stage[n]`` is the zoom stage active at round ``n``.
    """

    x: np.ndarray
    z: np.ndarray
    y: np.ndarray
    theta_hat: np.ndarray
    eps: np.ndarray
    stage: np.ndarray
    decoded: object = None

    def row(self, t):
        return Transcript(self.x[t], self.z[t], self.y[t], self.theta_hat[t],
                          self.eps[t], self.stage, None if self.decoded is None
                          else int(self.decoded[t]))


@dataclass
class BatchResult:
    decoded: np.ndarray
    nonfinite: np.ndarray
    transcript: Transcript = None

    def errors(self, messages):
        return self.decoded != np.asarray(messages)


class _Recorder:
    def __init__(self, shape, enabled):
        self.enabled = enabled
        if enabled:
            self.x, self.z, self.y, self.th, self.eps = (np.full(shape, np.nan) for _ in range(5))

    def put(self, n, **kw):
        if self.enabled:
            for k, v in kw.items():
                getattr(self, k)[:, n] = v

    def transcript(self, stage, decoded):
        if not self.enabled:
            return None
        return Transcript(self.x, self.z, self.y, self.th, self.eps, stage, decoded)


def _check_inputs(cfg, messages, noise):
    messages = np.atleast_1d(np.asarray(messages, dtype=np.int64))
    noise = np.atleast_2d(np.asarray(noise, dtype=np.float64))
    if noise.shape[0] != messages.shape[0] or noise.shape[1] < cfg.n_iters:
        raise ValueError(f"noise shape {noise.shape} does not cover "
                         f"{messages.shape[0]} trials x {cfg.n_iters} rounds")
    if np.any(messages < 0) or np.any(messages >= cfg.m):
        raise ValueError("message index out of range")
    return messages, noise


def sk_run_batch(cfg, messages, noise, record=False):
    """Run SK for each row of ``noise``.

    Parameters
    ----------
    cfg : SkConfig
    messages : int array, shape (T,)
    noise : float array, shape (T, >= N)
        Channel noise (already scaled by the noise std).
    record : bool
        Keep the full transcript.

    Returns
    -------
    BatchResult
        ``decoded`` is ``-1`` wherever the final estimate is not finite.
    """
    messages, noise = _check_inputs(cfg, messages, noise)
    p = cfg.precision
    sch = build_schedule(cfg)
    n_rounds = cfg.n_iters
    rec = _Recorder((len(messages), n_rounds), record)

    gain0 = quantize(sch.gain0, p)
    tx_gain = quantize(sch.tx_gain, p)
    beta = quantize(sch.beta, p)

    theta = pam_map(messages, cfg.pam, p)
    x = qop(gain0, theta, "mul", p)
    y = quantize(x + noise[:, 0], p)
    th = qop(y, gain0, "div", p)
    finite = np.isfinite(x) & np.isfinite(y) & np.isfinite(th)
    rec.put(0, x=x, z=noise[:, 0], y=y, th=th)

    for n in range(n_rounds - 1):
        eps = qop(th, theta, "sub", p)
        x = qop(tx_gain[n], eps, "mul", p)
        y = quantize(x + noise[:, n + 1], p)
        eps_hat = qop(beta[n], y, "mul", p)
        th = qop(th, eps_hat, "sub", p)
        finite &= np.isfinite(x) & np.isfinite(y) & np.isfinite(th)
        rec.put(n, eps=eps)
        rec.put(n + 1, x=x, z=noise[:, n + 1], y=y, th=th)

    rec.put(n_rounds - 1, eps=qop(th, theta, "sub", p))
    decoded = ml_decode(th, cfg.pam)
    stage = np.zeros(n_rounds, dtype=np.int64)
    return BatchResult(decoded, ~finite, rec.transcript(stage, decoded))


def sk_run(cfg, message, noise):
    """Single-trial SK.  Returns ``(decoded, transcript)``."""
    z = getattr(noise, "samples", noise)
    res = sk_run_batch(cfg, [int(message)], np.asarray(z)[None, :], record=True)
    return int(res.decoded[0]), res.transcript.row(0)


def _final_sigma(cfg):
    return float(np.sqrt(plain_sigma_sq(cfg.n_iters, cfg.rate_bits, cfg.channel.snr_linear)[-1]))


def sk_error_bound_tight(cfg):
    """``2 Q(1 / (2 M sigma_{N-1}))``."""
    return 2.0 * q_function(1.0 / (2.0 * cfg.m * _final_sigma(cfg)))


def sk_error_exact(cfg):
    """Exact SK symbol error ``2 (1 - 1/M) Q(1 / (2 M sigma_{N-1}))``."""
    return (1.0 - 1.0 / cfg.m) * sk_error_bound_tight(cfg)


def sk_log_error_bound_tight(cfg):
    return np.log(2.0) + log_q_function(1.0 / (2.0 * cfg.m * _final_sigma(cfg)))


def sk_error_bound(cfg):
    """Rate/capacity form ``2 Q(sqrt(3 SNR/(1+SNR) * 2**(2N(C-R))))``."""
    snr = cfg.channel.snr_linear
    log_gap = cfg.n_iters * np.log1p(snr) - 2.0 * cfg.rate_bits * np.log(2.0)
    arg = np.sqrt(3.0 * snr / (1.0 + snr) * np.exp(log_gap))
    return 2.0 * q_function(arg)
