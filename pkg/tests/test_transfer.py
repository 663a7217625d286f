import math

import numpy as np
import pytest
from scipy.linalg import expm

from spinxfer.chain import (
    ChainConfig,
    DisorderSpec,
    EndpointParams,
    build_hamiltonian,
    extend_with_endpoints,
    ordered_realization,
    sample_realization,
)
from spinxfer.spectral import eigendecompose
from spinxfer.transfer import (
    IntegratorAccuracyError,
    PulsedChain,
    StaticProtocolParams,
    StirapParams,
    TransferTrace,
    dark_state,
    effective_three_state,
    first_peak_time,
    integrate_tdse,
    propagate_static,
    pulse_area,
    pulse_value,
    run_effective_stirap,
    run_static_protocol,
    run_stirap_batch,
    run_stirap_protocol,
)


def three_state_Pr(omega, t):
    return np.abs(-0.5 + 0.5 * np.cos(math.sqrt(2) * omega * t)) ** 2


def test_propagate_static_matches_expm():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((6, 6))
    H = A + A.T
    psi0 = np.eye(6)[2]
    for t in (0.0, 0.7, 5.3):
        np.testing.assert_allclose(propagate_static(H, psi0, t), expm(-1j * H * t) @ psi0, atol=1e-12)
    states = propagate_static(H, psi0, np.array([0.0, 1.0]))
    assert states.shape == (2, 6)


def test_three_state_exact_and_rk4():
    omega = 0.37
    H = effective_three_state(0.0, omega, omega)
    t = np.linspace(0, 40, 401)
    P = np.abs(propagate_static(H, [1, 0, 0], t)) ** 2
    np.testing.assert_allclose(P[:, 2], three_state_Pr(omega, t), atol=1e-12)
    res = integrate_tdse(lambda s: H, np.array([1, 0, 0], dtype=complex), 40.0, 0.01)
    np.testing.assert_allclose(np.abs(res.samples[-1, 2]) ** 2, three_state_Pr(omega, 40.0), atol=1e-9)


def test_rk4_fourth_order():
    omega = 1.0
    H = effective_three_state(0.3, omega, 0.7 * omega)
    psi0 = np.array([1, 0, 0], dtype=complex)
    exact = expm(-1j * H * 10.0) @ psi0
    errs = []
    for dt in (0.04, 0.02):
        res = integrate_tdse(lambda s: H, psi0, 10.0, dt, tol=1.0)
        errs.append(np.linalg.norm(res.samples[-1] - exact))
    assert errs[0] / errs[1] == pytest.approx(16, rel=0.1)


def test_integrator_guards():
    H = np.diag([0.0, 50.0])
    psi0 = np.array([1, 0], dtype=complex)
    with pytest.raises(ValueError, match="too large"):
        integrate_tdse(lambda s: H, psi0, 1.0, 0.01)
    with pytest.raises(ValueError):
        integrate_tdse(lambda s: H, psi0, -1.0, 0.001)
    G = effective_three_state(0.0, 1.0, 1.0)
    with pytest.raises(IntegratorAccuracyError):
        integrate_tdse(lambda s: G, np.array([1, 0, 0], dtype=complex), 50.0, 0.05, tol=1e-30, max_halvings=1)


def test_sample_cap():
    H = effective_three_state(0.0, 1.0, 1.0)
    res = integrate_tdse(lambda s: H, np.array([1, 0, 0], dtype=complex), 10.0, 0.001, max_samples=100)
    assert len(res.times) == 101 and res.times[-1] == pytest.approx(10.0)


def test_dark_state_zero_energy():
    for os_, or_ in [(0.3, 0.3), (0.05, 0.9), (1.2, 0.0)]:
        d = dark_state(os_, or_)
        H = effective_three_state(0.0, os_, or_)
        np.testing.assert_allclose(H @ d, 0.0, atol=1e-15)
        assert d[1] == 0.0
    # a detuned chain state does not change the dark state either
    np.testing.assert_allclose(effective_three_state(0.4, 0.2, 0.5) @ dark_state(0.2, 0.5), 0.0, atol=1e-15)
    with pytest.raises(ValueError):
        dark_state(0.0, 0.0)


def test_first_peak_refinement():
    t = np.arange(0, 10, 0.1)
    P = np.sin(t) ** 2
    tr = TransferTrace(t, 1 - P, 0 * t, P, 0.0, 10.0, 0)
    peak = first_peak_time(tr)
    assert peak.found and abs(peak.time - math.pi / 2) < 2e-3
    flat = TransferTrace(t, 1 - t / 10, 0 * t, t / 10, 0.0, 10.0, 0)
    assert first_peak_time(flat) == (t[-1], len(t) - 1, False)


def test_pulse_shape_values():
    p = StirapParams().for_chain(11)
    tau, Jm = p.tau, p.J_max
    assert tau == pytest.approx(14.1 * 11 + 6.9)
    assert Jm == pytest.approx(0.5 / math.sqrt(11))
    assert pulse_value(0.0, p, "sender") / Jm == pytest.approx(0.5 * (1 + math.tanh(-2.3)))
    assert pulse_value(0.0, p, "receiver") / Jm == pytest.approx(0.5 * (1 - math.tanh(-3.6)))
    assert pulse_value(tau, p, "sender") / Jm == pytest.approx(0.5 * (1 + math.tanh(3.7)))
    # receiver coupling left at the end of the sequence
    assert pulse_value(tau, p, "receiver") / Jm == pytest.approx(0.0081625, abs=1e-6)
    swapped = StirapParams(counterintuitive=False).for_chain(11)
    assert pulse_value(0.0, swapped, "sender") == pytest.approx(pulse_value(0.0, p, "receiver"))
    with pytest.raises(ValueError):
        pulse_value(0.0, StirapParams(), "sender")


def test_params_validation():
    with pytest.raises(ValueError):
        StaticProtocolParams(c=0)
    with pytest.raises(ValueError):
        StirapParams(tau=100.0, dt=1.0)
    with pytest.raises(ValueError):
        StirapParams(energy_mode="nope")
    p = StirapParams().for_chain(11)
    assert p.dt == pytest.approx(min(0.01, p.tau / 1e4))


def _static_trace(N, c=0.49):
    return run_static_protocol(ordered_realization(ChainConfig(N)), StaticProtocolParams(c=c))


def test_static_probability_closed():
    tr = _static_trace(21)
    np.testing.assert_allclose(tr.P_s + tr.P_c + tr.P_r, 1.0, atol=1e-12)
    assert tr.peak_found and tr.times[-1] == tr.tau_used


def test_static_mirror_symmetry():
    # reflection-symmetric setup: sender->receiver equals receiver->sender
    N = 15
    H = build_hamiltonian(ordered_realization(ChainConfig(N)))
    es = eigendecompose(H)
    k = int(np.argmin(np.abs(es.values + 0.22)))
    J = 0.49 / math.sqrt(N)
    X = extend_with_endpoints(H, EndpointParams(es.values[k], es.values[k], J, J))
    t = np.linspace(0, 100, 51)
    fwd = np.abs(propagate_static(X, np.eye(N + 2)[0], t)) ** 2
    back = np.abs(propagate_static(X, np.eye(N + 2)[-1], t)) ** 2
    np.testing.assert_allclose(fwd[:, -1], back[:, 0], atol=1e-12)


def test_strong_end_coupling_leaks_into_chain():
    weak = _static_trace(21, 0.49)
    strong = _static_trace(21, 2.0)
    assert np.max(strong.P_r) < np.max(weak.P_r)
    assert strong.max_P_c > weak.max_P_c


def test_target_mode_detunes_end_spins():
    real = ordered_realization(ChainConfig(11))
    eig = run_static_protocol(real, StaticProtocolParams())
    tgt = run_static_protocol(real, StaticProtocolParams(energy_mode="target"))
    assert eig.eps_sr == eig.E_selected
    assert tgt.eps_sr == pytest.approx(-0.22)
    assert eig.k_selected == tgt.k_selected


def test_pulsed_chain_matches_site_basis():
    # eigenbasis operator must agree with the site-basis matrix up to a rotation
    N = 7
    H = build_hamiltonian(ordered_realization(ChainConfig(N)))
    es = eigendecompose(H)
    pulses = lambda t: (0.2, 0.3)
    op = PulsedChain(es.values, es.vectors[0], es.vectors[-1], 0.1, -0.1, pulses)
    U = np.eye(N + 2)
    U[1:-1, 1:-1] = es.vectors
    X = extend_with_endpoints(H, EndpointParams(0.1, -0.1, 0.2, 0.3)).entries
    np.testing.assert_allclose(U @ op(0.0) @ U.T, X, atol=1e-12)
    psi = np.random.default_rng(1).standard_normal((3, N + 2)).astype(complex)
    np.testing.assert_allclose(op.apply(0.0, psi), psi @ op(0.0).T, atol=1e-12)


def test_stirap_short_chain():
    tr = run_stirap_protocol(ordered_realization(ChainConfig(11)))
    assert tr.final_P_r > 0.99
    assert tr.norm_drift <= 1e-8
    assert tr.pulse_area >= 10
    np.testing.assert_allclose(tr.P_s + tr.P_c + tr.P_r, 1.0, atol=1e-8)
    assert tr.pulse_area == pytest.approx(pulse_area(ordered_realization(ChainConfig(11)), StirapParams()))


def test_intuitive_order_degrades():
    real = ordered_realization(ChainConfig(11))
    good = run_stirap_protocol(real)
    bad = run_stirap_protocol(real, StirapParams(counterintuitive=False))
    assert bad.final_P_r < good.final_P_r - 0.1


def test_effective_model_tracks_full_chain():
    real = ordered_realization(ChainConfig(11))
    full = run_stirap_protocol(real)
    eff = run_effective_stirap(real)
    assert eff.final_P_r == pytest.approx(full.final_P_r, abs=0.01)


def test_batch_equals_single():
    cfg = ChainConfig(11)
    spec = DisorderSpec(sigma_epsilon=0.1, base_seed=3)
    reals = [sample_realization(cfg, spec, i) for i in range(3)]
    p = StirapParams(energy_mode="target")
    batch = run_stirap_batch(reals, p)
    for r, b in zip(reals, batch):
        s = run_stirap_protocol(r, p)
        np.testing.assert_allclose(b.P_r, s.P_r, atol=1e-12)
    with pytest.raises(ValueError):
        run_stirap_batch([reals[0], ordered_realization(ChainConfig(12))], p)
    assert run_stirap_batch([], p) == []
