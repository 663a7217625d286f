import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinxfer.chain import (
    ChainConfig,
    DegenerateGeometryError,
    DisorderSpec,
    EndpointParams,
    Model,
    SpinChainRealization,
    build_hamiltonian,
    dipole_coupling,
    extend_with_endpoints,
    nn_coupling_sigma,
    ordered_realization,
    sample_realization,
)

disorders = st.builds(
    DisorderSpec,
    sigma_epsilon=st.floats(0, 0.5),
    sigma_x=st.floats(0, 0.1),
    sigma_y=st.floats(0, 0.1),
    base_seed=st.integers(0, 2**64 - 1),
)


def test_ordered_long_range_entries():
    H = build_hamiltonian(ordered_realization(ChainConfig(6))).entries
    for i in range(6):
        for j in range(6):
            expect = 0.0 if i == j else 1.0 / abs(i - j) ** 3
            assert H[i, j] == pytest.approx(expect, rel=1e-15)


def test_pairs_counted_once():
    # 2-site chain: one coupling C3/a^3 in each off-diagonal slot, nothing doubled
    H = build_hamiltonian(ordered_realization(ChainConfig(2, a=2.0, C3=4.0))).entries
    np.testing.assert_allclose(H, [[0, 0.5], [0.5, 0]])


def test_nearest_neighbor_is_tridiagonal():
    H = build_hamiltonian(ordered_realization(ChainConfig(7, model="nearest_neighbor"))).entries
    np.testing.assert_array_equal(H, np.diag(np.ones(6), 1) + np.diag(np.ones(6), -1))


def test_units_follow_c3_over_a_cubed():
    cfg = ChainConfig(5, a=0.5, C3=2.0)
    assert cfg.J == 16.0
    H = build_hamiltonian(ordered_realization(cfg)).entries
    assert H[0, 1] == pytest.approx(16.0)
    assert H[0, 2] == pytest.approx(2.0)


def test_dipole_coupling_in_plane():
    assert dipole_coupling((0, 0), (3, 4), C3=125.0) == pytest.approx(1.0)
    with pytest.raises(DegenerateGeometryError):
        dipole_coupling((1, 1), (1, 1))


def test_coincident_sites_raise():
    cfg = ChainConfig(3)
    pos = np.array([[1.0, 0.0], [2.0, 0.0], [2.0, 0.0]])
    real = SpinChainRealization(pos, np.zeros(3), cfg)
    with pytest.raises(DegenerateGeometryError, match="2 and 3"):
        build_hamiltonian(real)


def test_nn_sigma_from_positions():
    # |d(C3/r^3)/dx| at (a, 0) is 3 C3 / a^4; the y term vanishes
    assert nn_coupling_sigma(0.05, 0.3) == pytest.approx(0.15)
    assert nn_coupling_sigma(0.1, 0.0, a=2.0, C3=1.0) == pytest.approx(0.3 / 16)


def test_sigma_j_override_and_derived():
    cfg = ChainConfig(400, model=Model.NEAREST_NEIGHBOR)
    derived = sample_realization(cfg, DisorderSpec(sigma_x=0.05), 3)
    assert np.std(derived.bonds - 1.0) == pytest.approx(0.15, rel=0.15)
    fixed = sample_realization(cfg, DisorderSpec(sigma_x=0.05, sigma_J=0.0), 3)
    np.testing.assert_array_equal(fixed.bonds, 1.0)


def test_sampler_statistics():
    # pooled deviates over many realizations follow the requested widths
    cfg = ChainConfig(200)
    spec = DisorderSpec(sigma_epsilon=0.3, sigma_x=0.02, sigma_y=0.07, epsilon0=0.5, base_seed=11)
    eps, dx, dy = [], [], []
    for i in range(50):
        r = sample_realization(cfg, spec, i)
        eps.append(r.energies)
        dx.append(r.positions[:, 0] - np.arange(1, 201))
        dy.append(r.positions[:, 1])
    eps, dx, dy = map(np.concatenate, (eps, dx, dy))
    assert eps.mean() == pytest.approx(0.5, abs=0.02)
    assert eps.std() == pytest.approx(0.3, rel=0.03)
    assert dx.std() == pytest.approx(0.02, rel=0.03)
    assert dy.std() == pytest.approx(0.07, rel=0.03)


def test_draw_order_fixed():
    # switching on position disorder must not change the energy draws
    cfg = ChainConfig(20)
    a = sample_realization(cfg, DisorderSpec(sigma_epsilon=0.1, base_seed=5), 2)
    b = sample_realization(cfg, DisorderSpec(sigma_epsilon=0.1, sigma_x=0.1, base_seed=5), 2)
    np.testing.assert_array_equal(a.energies, b.energies)


@given(disorders, st.integers(2, 40), st.sampled_from(list(Model)))
@settings(max_examples=40, deadline=None)
def test_hamiltonian_symmetric_and_diagonal(spec, N, model):
    real = sample_realization(ChainConfig(N, model=model), spec, 0)
    H = build_hamiltonian(real).entries
    np.testing.assert_array_equal(H, H.T)
    np.testing.assert_array_equal(np.diag(H), real.energies)


@given(disorders, st.integers(0, 1000))
@settings(max_examples=25, deadline=None)
def test_realization_reproducible(spec, idx):
    cfg = ChainConfig(15)
    a = sample_realization(cfg, spec, idx)
    b = sample_realization(cfg, spec, idx)
    np.testing.assert_array_equal(a.positions, b.positions)
    np.testing.assert_array_equal(a.energies, b.energies)


def test_endpoints_attached():
    H = build_hamiltonian(ordered_realization(ChainConfig(4)))
    X = extend_with_endpoints(H, EndpointParams(0.1, 0.2, 0.3, 0.4))
    assert X.dimension == 6 and X.has_endpoints
    assert X.labels[0] == "sender" and X.labels[-1] == "receiver"
    E = X.entries
    assert (E[0, 0], E[-1, -1], E[0, 1], E[-1, -2]) == (0.1, 0.2, 0.3, 0.4)
    assert E[0, 2:].sum() == 0 and E[-1, :-2].sum() == 0
    np.testing.assert_array_equal(E[1:-1, 1:-1], H.entries)
    with pytest.raises(ValueError):
        extend_with_endpoints(X, EndpointParams())


def test_config_validation():
    with pytest.raises(ValueError):
        ChainConfig(1)
    with pytest.raises(ValueError):
        ChainConfig(5, a=0)
    with pytest.raises(ValueError):
        DisorderSpec(sigma_x=-0.1)
    with pytest.raises(ValueError):
        DisorderSpec(base_seed=-3)
    assert DisorderSpec().is_ordered
    assert not DisorderSpec(sigma_J=0.1).is_ordered


def test_realization_arrays_read_only():
    r = ordered_realization(ChainConfig(4))
    with pytest.raises(ValueError):
        r.energies[0] = 1.0
