"""SK and ZSK driven by the same noise.

With identical noise, every stage error of the zoom-in scheme is the SK
error times the product of the zoom sizes so far, as long as each zoom
window contained the message.  A large noise sample injected just before a
zoom breaks that condition.

Run: python3 demos/04_coupling.py
"""
import numpy as np

from zoomsk import ChannelConfig, SkConfig, ZoomPlan
from zoomsk.channel import db_to_linear
from zoomsk.montecarlo import coupled_run

plan = ZoomPlan.from_lists([4, 8, 4], [4, 6, 8])
cfg = SkConfig(10, plan.rate_bits, ChannelConfig(db_to_linear(5.0)))

rep = coupled_run(cfg, plan, message=77, seed=1)
np.set_printoptions(precision=3)
print("ratio eps_zsk / eps_sk:", rep.ratio)
print("zoom factors:          ", rep.factor)
print("max relative deviation:", rep.max_rel_dev)

bad = coupled_run(cfg, plan, message=77, seed=1, inject={4: 40.0})
print("\nwith a noise spike at round 4")
print("zooms ok:", bad.zoom_ok, "conditioning lost from round", bad.diverged_after)
print("SK decodes correctly:", bad.sk_correct, " ZSK decodes correctly:", bad.zsk_correct)
