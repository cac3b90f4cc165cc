import numpy as np
import pytest

from zoomsk.channel import ChannelConfig, db_to_linear, draw_noise, message_block, noise_block
from zoomsk.pam import q_function
from zoomsk.sk import (SkConfig, build_schedule, plain_sigma_sq, sk_error_bound,
                       sk_error_bound_tight, sk_error_exact, sk_run, sk_run_batch)
from oracles import sk_schedule_ref, zsk_ref


def cfg_at(n, bits, db, p="double"):
    return SkConfig(n, bits, ChannelConfig(db_to_linear(db)), p)


def batch(cfg, trials, seed=0):
    ids = list(range(trials))
    return message_block(cfg.rate_bits, seed, ids), noise_block(cfg.channel, cfg.n_iters, seed, ids)


def test_config_validation():
    with pytest.raises(ValueError):
        SkConfig(0, 4, ChannelConfig(1.0))
    with pytest.raises(ValueError):
        SkConfig(5, 0, ChannelConfig(1.0))
    c = SkConfig(10, 7, ChannelConfig(1.0), "half")
    assert c.m == 128 and c.rate == 0.7 and c.capacity == 0.5


def test_schedule_against_reference():
    c = cfg_at(12, 6, 2.0)
    sch = build_schedule(c)
    sigma, beta, gain, g0 = sk_schedule_ref(12, 6, c.channel.snr_linear)
    assert np.allclose(sch.sigma, sigma, rtol=1e-13)
    assert np.allclose(sch.beta, beta, rtol=1e-13)
    assert np.allclose(sch.tx_gain, gain, rtol=1e-13)
    assert np.isclose(sch.gain0, g0, rtol=1e-14)


def test_zero_noise_round_trip():
    c = cfg_at(8, 6, 3.0)
    for msg in [0, 17, 63]:
        decoded, tr = sk_run(c, msg, np.zeros(8))
        assert decoded == msg
        assert np.all(np.abs(tr.eps) < 1e-15)


@pytest.mark.parametrize("p", ["half", "single", "double"])
def test_matches_scalar_reference(p):
    c = cfg_at(10, 7, 3.0, p)
    msgs, z = batch(c, 60, seed=4)
    res = sk_run_batch(c, msgs, z, record=True)
    for t in range(len(msgs)):
        dec, eps = zsk_ref(10, 7, c.channel.snr_linear, int(msgs[t]), z[t], p)
        assert res.decoded[t] == dec
        if p == "double":
            assert np.allclose(res.transcript.eps[t], eps, rtol=1e-9, atol=1e-300)
        else:
            assert np.array_equal(res.transcript.eps[t], eps)


def test_transcript_deterministic_and_consistent():
    c = cfg_at(10, 5, 1.0)
    z = draw_noise(c.channel, 10, 3, 4)
    d1, t1 = sk_run(c, 9, z)
    d2, t2 = sk_run(c, 9, z)
    assert d1 == d2 and np.array_equal(t1.theta_hat, t2.theta_hat)
    assert np.array_equal(t1.y, t1.x + t1.z)
    assert np.array_equal(t1.z, z.samples)


def test_error_variance_and_power():
    c = cfg_at(10, 7, 0.0)
    msgs, z = batch(c, 40_000, seed=1)
    tr = sk_run_batch(c, msgs, z, record=True).transcript
    sigma2 = build_schedule(c).sigma ** 2
    assert np.allclose(tr.eps.var(axis=0), sigma2, rtol=0.05)
    # unit average transmit power in every round
    assert np.allclose(np.mean(tr.x ** 2, axis=0), 1.0, rtol=0.05)


def test_lmmse_orthogonality_and_white_outputs():
    c = cfg_at(8, 6, 1.0)
    msgs, z = batch(c, 40_000, seed=2)
    tr = sk_run_batch(c, msgs, z, record=True).transcript
    theta = (2 * msgs + 1 - c.m) / (2 * c.m)
    for n in range(1, 8):
        # the update leaves the error uncorrelated with the output it used
        assert abs(np.corrcoef(tr.eps[:, n], tr.y[:, n])[0, 1]) < 0.03
        assert abs(np.corrcoef(tr.eps[:, n], theta)[0, 1]) < 0.03
        for m in range(1, n):
            assert abs(np.corrcoef(tr.y[:, n], tr.y[:, m])[0, 1]) < 0.03


def test_bounds_relations():
    c = cfg_at(10, 7, 2.0)
    sigma = np.sqrt(plain_sigma_sq(10, 7, c.channel.snr_linear)[-1])
    tight = 2 * q_function(1 / (2 * c.m * sigma))
    assert np.isclose(sk_error_bound_tight(c), tight)
    assert np.isclose(sk_error_exact(c), (1 - 1 / c.m) * tight)
    # capacity form is the same quantity with A**2 ~ 1/12
    assert np.isclose(sk_error_bound(c), tight, rtol=0.02)
    lo, hi = cfg_at(10, 7, 1.0), cfg_at(10, 7, 3.0)
    assert sk_error_bound(hi) < sk_error_bound(c) < sk_error_bound(lo)


def test_ser_matches_exact_law():
    c = cfg_at(10, 7, 2.0)
    msgs, z = batch(c, 40_000, seed=8)
    ser = np.mean(sk_run_batch(c, msgs, z).decoded != msgs)
    pe = sk_error_exact(c)
    assert abs(ser - pe) < 4 * np.sqrt(pe * (1 - pe) / len(msgs))


def test_half_precision_breaks_down():
    c = cfg_at(25, 12, 3.0, "half")
    msgs, z = batch(c, 2000, seed=3)
    res = sk_run_batch(c, msgs, z)
    assert np.mean(res.decoded != msgs) > 0.1


def test_rejects_bad_inputs():
    c = cfg_at(5, 3, 1.0)
    with pytest.raises(ValueError):
        sk_run_batch(c, [8], np.zeros((1, 5)))
    with pytest.raises(ValueError):
        sk_run_batch(c, [1], np.zeros((1, 4)))
