import math

import numpy as np
import pytest

from conftest import random_taps
from wiener_imdd.channel import LinkParams, build_conv_operator, sample_cir
from wiener_imdd.constellation import build_pam
from wiener_imdd.errors import DomainError
from wiener_imdd.shaping import optimize_span
from wiener_imdd.sim import (
    SweepPointError,
    achievable_rate_lb,
    calibrate_noise,
    edge_symbols,
    electrical_receive_power,
    launch_power,
    point_seed,
    received_power,
    run_monte_carlo,
    run_sweep,
    sample_statistics,
    shape_at_snr,
)
from wiener_imdd.wiener import WienerFilter, design_filter, output_stats

SCALAR = build_conv_operator([1.0], 1)


def test_launch_power_reference_link():
    pb = launch_power(LinkParams(), 0.1)
    assert pb.l_eff == pytest.approx((1 - math.exp(-0.92)) / 0.046, rel=1e-14)
    assert pb.l_eff == pytest.approx(13.0757, abs=1e-4)
    assert pb.p_tx_opt == pytest.approx(6.0219e-3, rel=1e-4)
    assert pb.phi_max == 0.1


def test_launch_power_limits():
    assert launch_power(LinkParams(alpha=0.0), 0.1).l_eff == 20.0
    assert launch_power(LinkParams(), 0.0).p_tx_opt == 0.0
    with pytest.raises(DomainError):
        launch_power(LinkParams(gamma_kerr=0.0), 0.1)
    with pytest.raises(DomainError):
        launch_power(LinkParams(length=0.0), 0.1)


def test_receive_power_scalar():
    pam = build_pam(2, 1.0, 2.0)
    for sig in (0.0, 1.0, 100.0):
        st = output_stats(SCALAR, pam.mean, pam.var, pam.mu4, sig)
        assert electrical_receive_power(st, sig, 1, 2) == 4.0
    st = output_stats(SCALAR, 0.0, 0.0, 0.0, 0.0)
    assert electrical_receive_power(st, 0.0, 1, 2) == 0.0


def test_receive_power_matches_sample_power(rng):
    op = build_conv_operator(random_taps(rng, 4), 5)
    pam = build_pam(4, 1.0, 1.5)
    mc = sample_statistics(op, np.sqrt(pam.points), 0.0, 400_000, 1)
    sample = (np.trace(mc.c_uu) + mc.mu_u @ mc.mu_u) / (op.n_prime * 2)
    assert received_power(op, pam) == pytest.approx(sample, rel=5e-3)


def test_calibrate_noise():
    pam = build_pam(2, 1.0, 2.0)
    st = output_stats(SCALAR, pam.mean, pam.var, pam.mu4, 0.0)
    assert calibrate_noise(st, 0.0, 1, 2) == 4.0
    assert calibrate_noise(st, 10.0, 1, 2) == pytest.approx(0.4, rel=1e-15)
    for snr in (-13.0, 7.5, 42.0):
        sig = calibrate_noise(st, snr, 1, 2)
        noisy = output_stats(SCALAR, pam.mean, pam.var, pam.mu4, sig)
        back = 10 * math.log10(electrical_receive_power(noisy, sig, 1, 2) / sig)
        assert back == pytest.approx(snr, rel=1e-12)


def test_shape_at_snr_is_a_fixed_point(link20):
    opp = shape_at_snr(link20.op, 4, link20.p_tx, 40.72)
    assert opp.snr_el_db == pytest.approx(40.72, abs=1e-8)
    res = optimize_span(link20.op, 4, link20.p_tx, opp.sigma_eta2)
    assert res.d_norm == opp.d_norm and res.esr == opp.esr
    p_rx = received_power(link20.op, opp.constellation)
    assert p_rx / opp.sigma_eta2 == pytest.approx(10 ** 4.072, rel=1e-9)


def test_edge_symbols():
    assert edge_symbols(143, 143) == 72
    assert edge_symbols(3, 10) == 5
    assert edge_symbols(1, 1) == 1


def test_back_to_back_noiseless_recovery(link_btb):
    breve = build_pam(4, link_btb.p_tx, 1.5 * link_btb.p_tx)
    f, _ = design_filter("matched", link_btb.op, breve, 0.0)
    mc = run_monte_carlo(link_btb.op, link_btb.cir, f, breve, 0.0, 20_000, 1)
    assert mc.esr_empirical <= 1e-4


def test_prior_mean_estimator_has_unit_esr(link20):
    breve = build_pam(4, link20.p_tx, link20.p_tx)
    f = WienerFilter(taps=np.zeros(link20.op.K), bias=breve.mean, variant="matched")
    mc = run_monte_carlo(link20.op, link20.cir, f, breve, 1e-9, 100_000, 2)
    assert abs(mc.esr_empirical - 1.0) < 4 * mc.esr_stderr
    assert mc.estimates.size == mc.symbols.size == 100_000 - 2 * edge_symbols(link20.cir.M, link20.op.K)


def test_monte_carlo_errors(link20):
    breve = build_pam(4, link20.p_tx, link20.p_tx)
    f = WienerFilter(taps=np.zeros(link20.op.K), bias=breve.mean, variant="matched")
    with pytest.raises(DomainError):
        run_monte_carlo(link20.op, link20.cir, f, breve, 0.0, 100, 0)
    short = WienerFilter(taps=np.zeros(3), bias=0.0, variant="matched")
    with pytest.raises(DomainError):
        run_monte_carlo(link20.op, link20.cir, short, breve, 0.0, 10_000, 0)
    with pytest.raises(DomainError):
        run_monte_carlo(link20.op, link20.cir, f, build_pam(4, link20.p_tx, 0.0), 0.0, 10_000, 0)


def test_monte_carlo_is_seeded(link20):
    breve = build_pam(4, link20.p_tx, link20.p_tx)
    f, _ = design_filter("matched", link20.op, breve, 1e-9)
    a = run_monte_carlo(link20.op, link20.cir, f, breve, 1e-9, 10_000, 3)
    b = run_monte_carlo(link20.op, link20.cir, f, breve, 1e-9, 10_000, 3)
    np.testing.assert_array_equal(a.estimates, b.estimates)


def test_monte_carlo_estimate_matches_operator_model():
    # the streaming estimate at one instant equals g @ (|Psi s|^2) for the window symbols
    rng = np.random.default_rng(8)
    taps = random_taps(rng, 5)
    op = build_conv_operator(taps, 6)
    breve = build_pam(4, 1.0, 1.0)
    f, _ = design_filter("matched", op, breve, 0.0)
    mc = run_monte_carlo(op, taps, f, breve, 0.0, 10_000, 11)
    # regenerate the same stream
    g = np.random.default_rng(11)
    idx = g.integers(0, 4, size=10_000)
    amp = np.sqrt(breve.points[idx])
    edge = edge_symbols(5, 6)
    for nu in (edge, edge + 17, 5000):
        window = amp[nu - op.m_prime : nu - op.m_prime + op.n_prime]
        u = np.abs(op.psi_mat @ window) ** 2
        assert mc.estimates[nu - edge] == pytest.approx(f.apply(u), rel=1e-10, abs=1e-12)
        assert mc.symbols[nu - edge] == idx[nu]


def test_rate_bound_separated_and_independent():
    rng = np.random.default_rng(0)
    sym = rng.integers(0, 4, 40_000)
    levels = np.array([0.0, 1.0, 2.0, 3.0])
    assert achievable_rate_lb(levels[sym], sym, 4) == pytest.approx(2.0, abs=0.01)
    assert achievable_rate_lb(levels[sym] + 1e-3 * rng.standard_normal(sym.size), sym, 4) == pytest.approx(2.0, abs=0.01)
    assert achievable_rate_lb(rng.standard_normal(sym.size), sym, 4) < 0.01


@pytest.mark.parametrize("seed", range(10))
def test_rate_bound_range(seed):
    rng = np.random.default_rng(seed)
    Q = int(rng.choice([2, 4, 8]))
    sym = rng.integers(0, Q, 400 * Q)
    est = rng.uniform(0, 1) * sym + rng.exponential(rng.uniform(0.01, 5), sym.size)
    rate = achievable_rate_lb(est, sym, Q)
    assert 0.0 <= rate <= math.log2(Q)


def test_rate_bound_errors():
    sym = np.repeat(np.arange(4), 99)
    with pytest.raises(DomainError):
        achievable_rate_lb(np.zeros(sym.size), sym, 4)
    with pytest.raises(DomainError):
        achievable_rate_lb(np.zeros(3), np.zeros(4, dtype=int), 4)


def test_empirical_esr_converges_at_root_v():
    rng = np.random.default_rng(21)
    taps = random_taps(rng, 5)
    op = build_conv_operator(taps, 5)
    breve = build_pam(4, 1.0, 1.2)
    f, esr = design_filter("matched", op, breve, 0.02)
    dev, se = [], []
    for V in (10_000, 100_000, 1_000_000):
        runs = [run_monte_carlo(op, taps, f, breve, 0.02, V, point_seed(5, V, b)) for b in range(8)]
        dev.append(np.sqrt(np.mean([(r.esr_empirical - esr) ** 2 for r in runs])))
        se.append(np.mean([r.esr_stderr for r in runs]))
        assert dev[-1] < 3 * se[-1]
    for a, b in zip(dev, dev[1:]):
        assert 1.5 < a / b < 7.0
    for a, b in zip(se, se[1:]):
        assert a / b == pytest.approx(math.sqrt(10), rel=0.1)


def _small_link():
    cir = sample_cir(LinkParams(length=20.0), truncation_rel=0.1)
    op = build_conv_operator(cir, cir.M)
    return cir, op


def test_sweep_independent_of_threads():
    cir, op = _small_link()
    p = launch_power(LinkParams(), 0.1).p_tx_opt
    args = (op, cir, 4, p, [0.0, 20.0, 35.0], ("matched", "naive"), 10_000, 7)
    a = run_sweep(*args, threads=1)
    b = run_sweep(*args, threads=3)
    assert a == b
    assert [(r.sweep_index, r.variant) for r in a] == [
        (0, "matched"), (0, "naive"), (1, "matched"), (1, "naive"), (2, "matched"), (2, "naive")
    ]
    assert all(0.0 <= r.rate_bpcu <= 2.0 and np.isfinite(r.esr_empirical) for r in a)


def test_sweep_error_names_the_point():
    cir, op = _small_link()
    with pytest.raises(SweepPointError) as info:
        run_sweep(op, cir, 4, 1e-3, [10.0, 20.0], ("matched",), 100, 0)
    assert info.value.index == 0 and info.value.snr_el_db == 10.0
    assert isinstance(info.value.cause, DomainError)


def test_point_seeds_differ():
    a = np.random.default_rng(point_seed(1, 0)).random()
    b = np.random.default_rng(point_seed(1, 1)).random()
    c = np.random.default_rng(point_seed(2, 0)).random()
    assert len({a, b, c}) == 3
    assert a == np.random.default_rng(point_seed(1, 0, 0)).random()


def test_sample_statistics_rejects_single_draw():
    with pytest.raises(DomainError):
        sample_statistics(SCALAR, [1.0], 0.0, 1, 0)
