"""Monte-Carlo symbol error rates and SK/ZSK coupling diagnostics.

Trial ``t`` at sweep point ``s`` always draws its message and noise from the
Philox stream keyed by ``(seed, s, t)``.  Work is split into fixed-size blocks
whose results are integer counts, so the output does not depend on how many
worker threads process the blocks.
"""

import csv
import io
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import __version__
from .channel import ChannelConfig, db_to_linear, draw_noise, message_block, noise_block, trial_stream_id
from .lowprec import Precision
from .sk import SkConfig, build_schedule, sk_run_batch
from .zsk import ZoomPlan, build_zsk_schedule, zsk_run_batch

__all__ = ["SweepSpec", "SerPoint", "CouplingReport", "wilson_interval", "estimate_ser",
           "run_block", "coupled_run", "coupled_batch", "sweep_csv", "CSV_COLUMNS",
           "default_workers", "BLOCK_SIZE", "CouplingSummary", "coupling_summary"]

log = logging.getLogger(__name__)

BLOCK_SIZE = 4096
CSV_COLUMNS = ["snr_db", "trials", "errors", "ser", "ci_low", "ci_high", "scheme",
               "precision", "n", "bits"]
WORKERS_ENV = "ZOOMSK_WORKERS"


def default_workers():
    """Worker count from ``$ZOOMSK_WORKERS`` (default 1)."""
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def wilson_interval(errors, trials, confidence=0.95):
    if trials == 0:
        return 0.0, 1.0
    ci = stats.binomtest(int(errors), int(trials)).proportion_ci(confidence, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass(frozen=True)
class SweepSpec:
    scheme: str
    cfg: SkConfig
    snr_grid_db: tuple
    trials: int
    seed: int = 0
    plan: ZoomPlan = None
    max_errors: int = None

    def __post_init__(self):
        if self.scheme not in ("sk", "zsk"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if (self.plan is not None) != (self.scheme == "zsk"):
            raise ValueError("a zoom plan is required for zsk and only for zsk")
        if self.plan is not None:
            self.plan.check(self.cfg.n_iters, self.cfg.rate_bits)
        object.__setattr__(self, "snr_grid_db", tuple(float(s) for s in self.snr_grid_db))

    def metadata(self):
        return {
            "scheme": self.scheme, "n": self.cfg.n_iters, "bits": self.cfg.rate_bits,
            "precision": self.cfg.precision.value, "snr_db": list(self.snr_grid_db),
            "trials": self.trials, "seed": self.seed, "max_errors": self.max_errors,
            "plan": None if self.plan is None else self.plan.to_dict(),
            "version": __version__, "numpy": np.__version__,
        }


@dataclass(frozen=True)
class SerPoint:
    snr_db: float
    trials: int
    errors: int
    ser: float
    ci_low: float
    ci_high: float
    nonfinite: int = 0


def run_block(spec, cfg, snr_index, start, stop):
    """Errors and non-finite trials among trials ``[start, stop)`` of one point."""
    ids = [trial_stream_id(snr_index, t) for t in range(start, stop)]
    messages = message_block(cfg.rate_bits, spec.seed, ids)
    noise = noise_block(cfg.channel, cfg.n_iters, spec.seed, ids)
    if spec.scheme == "sk":
        res = sk_run_batch(cfg, messages, noise)
    else:
        res = zsk_run_batch(cfg, spec.plan, messages, noise)
    return int(np.count_nonzero(res.decoded != messages)), int(np.count_nonzero(res.nonfinite))


def estimate_ser(spec, workers=None):
    """One :class:`SerPoint` per SNR of the sweep.

    With ``max_errors`` set, a point stops after the first block at which
    the cumulative error count reaches it; the recorded trial count is the
    number of trials actually run.
    """
    workers = workers or default_workers()
    points = []
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for s, snr_db in enumerate(spec.snr_grid_db):
            cfg = spec.cfg.with_snr(float(db_to_linear(snr_db)))
            bounds = [(a, min(a + BLOCK_SIZE, spec.trials)) for a in range(0, spec.trials, BLOCK_SIZE)]
            errors = nonfinite = done = 0
            # blocks are submitted in waves of ``workers`` and reduced in block
            # order, so early stopping lands on the same block for any worker count
            for w in range(0, len(bounds), workers):
                wave = bounds[w:w + workers]
                results = list(pool.map(lambda ab: run_block(spec, cfg, s, *ab), wave))
                for (a, b), (e, nf) in zip(wave, results):
                    if spec.max_errors is not None and errors >= spec.max_errors:
                        break
                    errors += e
                    nonfinite += nf
                    done = b
                if spec.max_errors is not None and errors >= spec.max_errors:
                    break
            lo, hi = wilson_interval(errors, done)
            points.append(SerPoint(snr_db, done, errors, errors / done, lo, hi, nonfinite))
            log.info("%s %s snr=%.2f dB: %d/%d errors", spec.scheme, cfg.precision.value,
                     snr_db, errors, done)
    return points


def sweep_csv(spec, points):
    """CSV text: a ``#``-prefixed JSON metadata line, header, then one row per point."""
    buf = io.StringIO()
    buf.write("# " + json.dumps(spec.metadata(), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for pt in points:
        w.writerow([f"{pt.snr_db:.4f}", pt.trials, pt.errors, f"{pt.ser:.6e}", f"{pt.ci_low:.6e}",
                    f"{pt.ci_high:.6e}", spec.scheme, spec.cfg.precision.value,
                    spec.cfg.n_iters, spec.cfg.rate_bits])
    return buf.getvalue()


@dataclass
class CouplingReport:
    """SK vs ZSK on one message and one noise realization, both in binary64.

    ``ratio[n]`` is ``eps_zsk[n] / eps_sk[n]`` and ``factor[n]`` the
    cumulative zoom of the stage active at round ``n``.  ``valid_until`` is
    the last round covered by the coupling condition (every zoom up to that
    round kept the message inside its window); deviations are only
    meaningful up to there.
    """

    eps_sk: np.ndarray
    eps_zsk: np.ndarray
    factor: np.ndarray
    zoom_ok: np.ndarray
    sk_correct: bool
    zsk_correct: bool
    tol: float = 1e-10
    scale: np.ndarray = field(default=None, repr=False)

    @property
    def ratio(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.eps_zsk / self.eps_sk

    @property
    def rel_dev(self):
        """``|eps_zsk - F eps_sk| / |F eps_sk|`` per round."""
        ref = self.factor * self.eps_sk
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.abs(self.eps_zsk - ref) / np.abs(ref)

    @property
    def scaled_dev(self):
        """Deviation in units of the stage error std ``F sigma_n``."""
        return np.abs(self.eps_zsk - self.factor * self.eps_sk) / (self.factor * self.scale)

    @property
    def all_zooms_ok(self):
        return bool(np.all(self.zoom_ok))

    @property
    def valid_until(self):
        bad = np.flatnonzero(~self.zoom_ok)
        return len(self.eps_sk) - 1 if not len(bad) else int(self._zoom_iters[bad[0]]) - 1

    @property
    def max_rel_dev(self):
        return float(np.max(self.rel_dev[: self.valid_until + 1]))

    @property
    def coupled(self):
        """Ratios equal the zoom factors within ``tol`` over the covered rounds."""
        return self.max_rel_dev <= self.tol

    @property
    def diverged_after(self):
        """Round of the first failed zoom, after which the trials are no longer coupled.

        The error ratio itself keeps following the zoom factors past a failed
        zoom (the zoom map is affine and the transmitter keeps the unclipped
        symbol); the failure shows up as a residual outside the window and a
        decode that no longer tracks SK.
        """
        return None if self.all_zooms_ok else self.valid_until + 1

    @property
    def decode_agree(self):
        return self.sk_correct == self.zsk_correct


def coupled_batch(cfg, plan, messages, noise):
    """Run SK and ZSK in binary64 on identical messages and noise rows.

    Returns ``(sk_result, zsk_result)`` with full transcripts.
    """
    cfg = cfg.with_precision(Precision.DOUBLE)
    return (sk_run_batch(cfg, messages, noise, record=True),
            zsk_run_batch(cfg, plan, messages, noise, record=True))


def coupled_run(cfg, plan, message, seed, stream_id=0, inject=None):
    """Coupling report for one message.

    ``inject`` maps round indices to extra noise added to the shared noise
    sequence (both systems see it), e.g. to force a zoom failure.
    """
    z = draw_noise(cfg.channel, cfg.n_iters, seed, stream_id).samples.copy()
    for n, dz in (inject or {}).items():
        z[n] += dz
    sk_res, zsk_res = coupled_batch(cfg, plan, [message], z[None, :])
    sch = build_zsk_schedule(cfg, plan)
    rep = CouplingReport(
        eps_sk=sk_res.transcript.eps[0],
        eps_zsk=zsk_res.transcript.eps[0],
        factor=sch.factor[sch.stage],
        zoom_ok=zsk_res.zoom_ok[0],
        sk_correct=bool(sk_res.decoded[0] == message),
        zsk_correct=bool(zsk_res.decoded[0] == message),
        scale=build_schedule(cfg).sigma,
    )
    rep._zoom_iters = np.asarray(plan.zoom_iters)
    return rep


@dataclass(frozen=True)
class CouplingSummary:
    trials: int
    all_ok: int
    zoom_failures: int
    max_rel_dev: float
    decode_agree: int


def coupling_summary(cfg, plan, trials, seed, snr_index=0):
    """Batch coupling statistics over ``trials`` shared-noise trials.

    ``max_rel_dev`` is taken over trials whose zooms all succeeded;
    ``zoom_failures`` counts trials with at least one failed zoom.
    """
    ids = [trial_stream_id(snr_index, t) for t in range(trials)]
    messages = message_block(cfg.rate_bits, seed, ids)
    noise = noise_block(cfg.channel, cfg.n_iters, seed, ids)
    sk_res, zsk_res = coupled_batch(cfg, plan, messages, noise)
    sch = build_zsk_schedule(cfg, plan)
    ref = sch.factor[sch.stage] * sk_res.transcript.eps
    with np.errstate(divide="ignore", invalid="ignore"):
        dev = np.abs(zsk_res.transcript.eps - ref) / np.abs(ref)
    dev[(ref == 0) & (zsk_res.transcript.eps == 0)] = 0.0
    ok = np.all(zsk_res.zoom_ok, axis=1) if zsk_res.zoom_ok.size else np.ones(trials, bool)
    agree = (sk_res.decoded == messages) == (zsk_res.decoded == messages)
    return CouplingSummary(
        trials=trials,
        all_ok=int(ok.sum()),
        zoom_failures=int((~ok).sum()),
        max_rel_dev=float(np.max(dev[ok])) if ok.any() else float("nan"),
        decode_agree=int(agree.sum()),
    )
