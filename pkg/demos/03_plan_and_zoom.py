"""Planning zooms offline and running the zoom-in scheme in binary16.

The planner picks the SNR at which plain SK meets the target error, then
walks the SK variance book and zooms whenever a window can be selected with
error below epsilon times the target.

Run: python3 demos/03_plan_and_zoom.py
"""
from zoomsk import PlannerInput, SkConfig, ChannelConfig, make_plan, zsk_error_bound
from zoomsk.channel import db_to_linear, linear_to_db
from zoomsk.montecarlo import SweepSpec, estimate_ser
from zoomsk.zsk import dynamic_range_report

inp = PlannerInput(n_iters=25, rate_bits=12, pe_target=1e-6, epsilon=1e-3)
snr, plan, report = make_plan(inp, "half")
print("plan:", plan.describe())
print(f"SNR_target {linear_to_db(snr):.3f} dB, bound {report.zsk_bound:.3e} vs SK {report.sk_bound:.3e}")

# min_zoom_bits=2 forbids zooms by 2 and gives fewer, larger steps
_, sparse, _ = make_plan(inp, "half", min_zoom_bits=2)
print("sparser plan:", sparse.describe())

cfg = SkConfig(25, 12, ChannelConfig(snr), "half")
print("half-precision dynamic range:", dynamic_range_report(cfg, plan))

grid = [-0.5, 0.0, 0.5]
sk = estimate_ser(SweepSpec("sk", cfg.with_precision("double"), grid, 20_000, seed=2))
zsk = estimate_ser(SweepSpec("zsk", cfg, grid, 20_000, seed=2, plan=plan))
for a, b in zip(sk, zsk):
    bound = zsk_error_bound(cfg.with_snr(db_to_linear(a.snr_db)), plan)
    print(f"{a.snr_db:+.1f} dB  SK double {a.ser:.3g}  ZSK half {b.ser:.3g}  bound {min(bound, 1):.3g}")
