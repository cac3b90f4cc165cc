"""How close SK gets to capacity at a fixed error target, from the bound alone.

Run: python3 demos/05_capacity_gap.py
"""
from zoomsk import PlannerInput, solve_snr_target
from zoomsk.channel import linear_to_db

for n, bits in [(10, 7), (25, 22), (30, 28), (50, 46)]:
    snr = solve_snr_target(PlannerInput(n, bits, 1e-6, 1e-3))
    cap = 2.0 ** (2.0 * bits / n) - 1.0  # SNR at which capacity equals the rate
    print(f"N={n:2d} K={bits:2d} rate {bits / n:.2f}: needs {linear_to_db(snr):.3f} dB, "
          f"capacity at {linear_to_db(cap):.3f} dB, gap {linear_to_db(snr) - linear_to_db(cap):.3f} dB")
