import numpy as np
import pytest
from scipy import stats

from zoomsk.channel import ChannelConfig, db_to_linear, message_block, noise_block, trial_stream_id
from zoomsk.montecarlo import (BLOCK_SIZE, CSV_COLUMNS, SweepSpec, coupled_run, coupling_summary,
                               estimate_ser, sweep_csv, wilson_interval)
from zoomsk.sk import SkConfig, sk_error_exact, sk_run_batch
from zoomsk.zsk import ZoomPlan

PLAN10 = ZoomPlan.from_lists([4, 8, 4], [4, 6, 8])


def sk_cfg(n=10, bits=7, p="double"):
    return SkConfig(n, bits, ChannelConfig(1.0), p)


def test_wilson_matches_closed_form():
    k, n, z = 37, 1000, stats.norm.ppf(0.975)
    ph = k / n
    centre = (ph + z * z / (2 * n)) / (1 + z * z / n)
    half = z / (1 + z * z / n) * np.sqrt(ph * (1 - ph) / n + z * z / (4 * n * n))
    assert wilson_interval(k, n) == pytest.approx((centre - half, centre + half), rel=1e-10)
    lo, hi = wilson_interval(0, 100)
    assert lo == 0.0 and 0 < hi < 0.05


def test_spec_validation():
    with pytest.raises(ValueError):
        SweepSpec("sk", sk_cfg(), [1.0], 0)
    with pytest.raises(ValueError):
        SweepSpec("zsk", sk_cfg(), [1.0], 10)
    with pytest.raises(ValueError):
        SweepSpec("sk", sk_cfg(), [1.0], 10, plan=PLAN10)
    with pytest.raises(ValueError):
        SweepSpec("bpsk", sk_cfg(), [1.0], 10)


def test_ser_against_exact_law():
    cfg = sk_cfg()
    spec = SweepSpec("sk", cfg, [2.0], 10_000, seed=1)
    pt = estimate_ser(spec)[0]
    pe = sk_error_exact(cfg.with_snr(db_to_linear(2.0)))
    assert pt.ci_low <= pe <= pt.ci_high
    assert pt.trials == 10_000 and pt.ser == pt.errors / pt.trials


def test_matches_direct_batch():
    cfg = sk_cfg()
    spec = SweepSpec("sk", cfg, [1.0, 2.0], 300, seed=5)
    pts = estimate_ser(spec)
    for s, pt in enumerate(pts):
        ids = [trial_stream_id(s, t) for t in range(300)]
        c = cfg.with_snr(db_to_linear(spec.snr_grid_db[s]))
        msgs = message_block(7, 5, ids)
        res = sk_run_batch(c, msgs, noise_block(c.channel, 10, 5, ids))
        assert pt.errors == int(np.sum(res.decoded != msgs))


def test_worker_count_does_not_change_output():
    spec = SweepSpec("zsk", sk_cfg(p="half"), [2.0, 3.0], 2 * BLOCK_SIZE + 100, seed=9,
                     plan=PLAN10, max_errors=150)
    outs = [sweep_csv(spec, estimate_ser(spec, workers=w)) for w in (1, 3, 4)]
    assert outs[0] == outs[1] == outs[2]


def test_early_stop():
    spec = SweepSpec("sk", sk_cfg(), [-3.0], 5 * BLOCK_SIZE, seed=2, max_errors=10)
    pt = estimate_ser(spec)[0]
    assert pt.trials == BLOCK_SIZE and pt.errors >= 10


def test_symbol_errors_uniform():
    cfg = sk_cfg(8, 3).with_snr(db_to_linear(-1.0))
    ids = [trial_stream_id(0, t) for t in range(100_000)]
    msgs = message_block(3, 4, ids)
    res = sk_run_batch(cfg, msgs, noise_block(cfg.channel, 8, 4, ids))
    wrong = msgs[res.decoded != msgs]
    sent = np.bincount(msgs, minlength=8)
    # interior points err twice as often as the two edge points
    weight = np.array([1, 2, 2, 2, 2, 2, 2, 1]) * sent
    expected = weight / weight.sum() * len(wrong)
    assert stats.chisquare(np.bincount(wrong, minlength=8), expected).pvalue > 1e-3


def test_csv_layout():
    spec = SweepSpec("sk", sk_cfg(), [0.0, 1.5], 100, seed=3)
    text = sweep_csv(spec, estimate_ser(spec))
    lines = text.splitlines()
    assert lines[0].startswith("# {") and '"seed": 3' in lines[0]
    assert lines[1] == ",".join(CSV_COLUMNS)
    assert len(lines) == 4 and lines[3].startswith("1.5000,100,")


def test_coupled_run_reports():
    cfg = sk_cfg().with_snr(db_to_linear(5.0))
    rep = coupled_run(cfg, PLAN10, 77, seed=1)
    assert rep.all_zooms_ok and rep.coupled and rep.decode_agree
    assert rep.diverged_after is None
    trivial = coupled_run(cfg, ZoomPlan.plain(7), 77, seed=1)
    assert np.array_equal(trivial.ratio, np.ones(10))


def test_coupled_run_flags_forced_failure():
    cfg = sk_cfg().with_snr(db_to_linear(5.0))
    rep = coupled_run(cfg, PLAN10, 77, seed=1, inject={4: 40.0})
    assert not rep.all_zooms_ok
    assert rep.valid_until == 3
    assert rep.diverged_after == 4
    assert rep.sk_correct and not rep.zsk_correct and not rep.decode_agree


def test_coupling_summary():
    cfg = sk_cfg().with_snr(db_to_linear(5.0))
    s = coupling_summary(cfg, PLAN10, 500, seed=2)
    assert s.trials == 500 and s.all_ok + s.zoom_failures == 500
    # binary64 SK carries its own rounding; tight agreement is checked against exact SK in test_zsk
    assert s.max_rel_dev < 1e-6
    assert s.decode_agree == 500
