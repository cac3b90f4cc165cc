"""Schalkwijk-Kailath feedback coding and its zoom-in variant, simulated in
emulated binary16/binary32/binary64 arithmetic."""

__version__ = "0.1.0"

from .lowprec import Precision, quantize, qop
from .pam import PamSpec, pam_map, pam_power, ml_decode, q_function, log_q_function, pam_error_prob
from .channel import ChannelConfig, NoiseSequence, draw_noise, transmit
from .sk import SkConfig, SkSchedule, Transcript, build_schedule, sk_run, sk_run_batch, \
    sk_error_bound, sk_error_bound_tight, sk_error_exact
from .zsk import ZoomPlan, ZskSchedule, StageOffsets, PlanError, zoom_index, zoom_transform, \
    build_zsk_schedule, zsk_run, zsk_run_batch, zsk_bound_terms, zsk_error_bound
from .planner import PlannerInput, PlanInfeasible, solve_snr_target, find_zoom_parameters, \
    validate_plan, make_plan
from .montecarlo import SweepSpec, SerPoint, estimate_ser, coupled_run, wilson_interval
