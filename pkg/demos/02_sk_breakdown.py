"""Plain SK in binary64 against binary16.

The error standard deviation shrinks by sqrt(1 + SNR) every round.  After a
handful of rounds it falls below what binary16 can resolve next to the
estimate, and the half-precision error rate stops improving with SNR.

Run: python3 demos/02_sk_breakdown.py
"""
from zoomsk import ChannelConfig, SkConfig, sk_error_exact
from zoomsk.channel import db_to_linear
from zoomsk.montecarlo import SweepSpec, estimate_ser

snr_grid = [-1.0, 0.0, 1.0, 2.0, 3.0]
cfg = SkConfig(n_iters=25, rate_bits=12, channel=ChannelConfig(1.0))

double = estimate_ser(SweepSpec("sk", cfg, snr_grid, trials=20_000, seed=1))
half = estimate_ser(SweepSpec("sk", cfg.with_precision("half"), snr_grid, trials=20_000, seed=1))

print(f"{'SNR dB':>7} {'exact':>10} {'double':>10} {'half':>10} {'half non-finite':>16}")
for d, h in zip(double, half):
    exact = sk_error_exact(cfg.with_snr(db_to_linear(d.snr_db)))
    print(f"{d.snr_db:7.1f} {exact:10.3g} {d.ser:10.3g} {h.ser:10.3g} {h.nonfinite:16d}")
