"""Disordered spin chains in the single-excitation sector.

A chain of ``N`` spins on a line of period ``a`` couples pairwise through
``C3 / r**nu`` (long-range model) or through nearest-neighbour bonds only.
Everything here works with the ``N x N`` single-excitation matrix: site
energies on the diagonal, couplings off the diagonal.

Units: energies in ``J = C3 / a**3``, lengths in ``a``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .seeding import realization_rng


class DegenerateGeometryError(ValueError):
    """Two spins landed on the same point; the position disorder is too large."""


class Model(str, enum.Enum):
    LONG_RANGE = "long_range"
    NEAREST_NEIGHBOR = "nearest_neighbor"


def site_labels(N: int) -> tuple:
    return tuple(f"site:{i}" for i in range(1, N + 1))


def _frozen(arr) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ChainConfig:
    """Geometry and interaction law of an (undisordered) chain."""

    N: int
    a: float = 1.0
    C3: float = 1.0
    nu: float = 3.0
    model: Model = Model.LONG_RANGE

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"N must be an integer >= 2, got {self.N}")
        if not self.a > 0:
            raise ValueError(f"a must be > 0, got {self.a}")
        if not self.C3 > 0:
            raise ValueError(f"C3 must be > 0, got {self.C3}")
        if not self.nu > 0:
            raise ValueError(f"nu must be > 0, got {self.nu}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "model", Model(self.model))

    @property
    def J(self) -> float:
        """Nearest-neighbour coupling of the ordered lattice, the energy unit."""
        return self.C3 / self.a**3


@dataclass(frozen=True)
class DisorderSpec:
    """Gaussian disorder strengths.

    ``sigma_J`` overrides the bond disorder of the nearest-neighbour model;
    left as ``None`` it follows from ``sigma_x`` and ``sigma_y`` through
    :func:`nn_coupling_sigma`.
    """

    sigma_epsilon: float = 0.0
    sigma_x: float = 0.0
    sigma_y: float = 0.0
    epsilon0: float = 0.0
    base_seed: int = 0
    sigma_J: Optional[float] = None

    def __post_init__(self):
        for name in ("sigma_epsilon", "sigma_x", "sigma_y"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.sigma_J is not None and not self.sigma_J >= 0:
            raise ValueError(f"sigma_J must be >= 0, got {self.sigma_J}")
        if not 0 <= int(self.base_seed) < 2**64:
            raise ValueError(f"base_seed must be an unsigned 64-bit integer, got {self.base_seed}")

    @property
    def is_ordered(self) -> bool:
        return (
            self.sigma_epsilon == 0
            and self.sigma_x == 0
            and self.sigma_y == 0
            and not self.sigma_J
        )


@dataclass(frozen=True)
class SpinChainRealization:
    """One disorder sample.

    ``bonds`` holds the ``N - 1`` nearest-neighbour couplings ``J + dJ_i`` and
    is only set for the nearest-neighbour model.
    """

    positions: np.ndarray
    energies: np.ndarray
    config: ChainConfig
    bonds: Optional[np.ndarray] = None
    index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "positions", _frozen(self.positions))
        object.__setattr__(self, "energies", _frozen(self.energies))
        if self.bonds is not None:
            object.__setattr__(self, "bonds", _frozen(self.bonds))
        N = self.config.N
        if self.positions.shape != (N, 2) or self.energies.shape != (N,):
            raise ValueError("positions must be (N, 2) and energies (N,)")
        if self.bonds is not None and self.bonds.shape != (N - 1,):
            raise ValueError("bonds must have N - 1 entries")


@dataclass(frozen=True)
class HamiltonianMatrix:
    """Dense real symmetric single-excitation matrix with site labels."""

    entries: np.ndarray
    labels: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "entries", _frozen(self.entries))
        n = self.entries.shape[0]
        if self.entries.shape != (n, n):
            raise ValueError("Hamiltonian must be a square matrix")
        if not self.labels:
            object.__setattr__(self, "labels", site_labels(n))
        if len(self.labels) != n:
            raise ValueError("need one label per basis state")

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]

    @property
    def has_endpoints(self) -> bool:
        return self.labels[0] == "sender"


@dataclass(frozen=True)
class EndpointParams:
    eps_s: float = 0.0
    eps_r: float = 0.0
    J_s: float = 0.0
    J_r: float = 0.0


def sample_realization(
    config: ChainConfig, disorder: DisorderSpec, realization_index: int
) -> SpinChainRealization:
    """Draw realization ``realization_index`` of the ensemble.

    Deviates are drawn in a fixed order (energies, x, y, bonds) from a
    generator seeded by ``(disorder.base_seed, realization_index)``.
    """
    rng = realization_rng(int(disorder.base_seed), realization_index)
    N, a = config.N, config.a
    d_eps = rng.standard_normal(N)
    d_x = rng.standard_normal(N)
    d_y = rng.standard_normal(N)
    d_J = rng.standard_normal(N - 1)

    sites = np.arange(1, N + 1, dtype=float)
    positions = np.column_stack(
        [a * sites + disorder.sigma_x * d_x, 0.0 + disorder.sigma_y * d_y]
    )
    energies = disorder.epsilon0 + disorder.sigma_epsilon * d_eps

    bonds = None
    if config.model is Model.NEAREST_NEIGHBOR:
        sigma_J = disorder.sigma_J
        if sigma_J is None:
            sigma_J = nn_coupling_sigma(disorder.sigma_x, disorder.sigma_y, a, config.C3)
        bonds = config.J + sigma_J * d_J
    return SpinChainRealization(positions, energies, config, bonds, realization_index)


def dipole_coupling(pos_i, pos_j, C3: float = 1.0, nu: float = 3.0) -> float:
    """In-plane dipole-dipole coupling ``C3 / |r_ij|**nu`` between two points."""
    r = float(np.hypot(pos_i[0] - pos_j[0], pos_i[1] - pos_j[1]))
    if r == 0.0:
        raise DegenerateGeometryError(f"degenerate geometry: coincident spins at {tuple(pos_i)}")
    return C3 / r**nu


def nn_coupling_sigma(sigma_x: float, sigma_y: float, a: float = 1.0, C3: float = 1.0) -> float:
    """First-order spread of a nearest-neighbour bond under position noise.

    ``|dD/dx| sigma_x + |dD/dy| sigma_y`` for ``D(x, y) = C3 / (x^2 + y^2)^(3/2)``,
    evaluated at the nominal bond ``(a, 0)`` where the y-derivative vanishes.
    """
    if not a > 0:
        raise ValueError(f"a must be > 0, got {a}")
    x, y = a, 0.0
    r2 = x * x + y * y
    dD_dx = -3.0 * C3 * x / r2**2.5
    dD_dy = -3.0 * C3 * y / r2**2.5
    return abs(dD_dx) * sigma_x + abs(dD_dy) * sigma_y


def _pair_couplings(positions: np.ndarray, C3: float, nu: float):
    N = len(positions)
    iu, ju = np.triu_indices(N, k=1)
    diff = positions[iu] - positions[ju]
    r = np.hypot(diff[:, 0], diff[:, 1])
    if np.any(r == 0.0):
        bad = int(np.flatnonzero(r == 0.0)[0])
        raise DegenerateGeometryError(
            f"degenerate geometry: spins {iu[bad] + 1} and {ju[bad] + 1} coincide"
        )
    return iu, ju, C3 / r**nu


def build_hamiltonian(realization: SpinChainRealization) -> HamiltonianMatrix:
    cfg = realization.config
    N = cfg.N
    H = np.zeros((N, N))
    if cfg.model is Model.LONG_RANGE:
        iu, ju, vals = _pair_couplings(realization.positions, cfg.C3, cfg.nu)
    else:
        bonds = realization.bonds
        if bonds is None:
            bonds = np.full(N - 1, cfg.J)
        iu = np.arange(N - 1)
        ju = iu + 1
        vals = bonds
    H[iu, ju] = vals
    H[ju, iu] = vals
    H[np.diag_indices(N)] = realization.energies
    return HamiltonianMatrix(H)


def extend_with_endpoints(H_chain: HamiltonianMatrix, ep: EndpointParams) -> HamiltonianMatrix:
    """Attach a sender before site 1 and a receiver after site N.

    Basis order is ``(sender, site 1, ..., site N, receiver)``.
    """
    if H_chain.has_endpoints:
        raise ValueError("Hamiltonian already carries sender and receiver")
    N = H_chain.dimension
    H = np.zeros((N + 2, N + 2))
    H[1:-1, 1:-1] = H_chain.entries
    H[0, 0] = ep.eps_s
    H[-1, -1] = ep.eps_r
    H[0, 1] = H[1, 0] = ep.J_s
    H[-1, -2] = H[-2, -1] = ep.J_r
    labels = ("sender",) + tuple(H_chain.labels) + ("receiver",)
    return HamiltonianMatrix(H, labels)


def ordered_realization(config: ChainConfig, epsilon0: float = 0.0) -> SpinChainRealization:
    """The disorder-free lattice ``x_j = a j``."""
    return sample_realization(config, DisorderSpec(epsilon0=epsilon0), 0)


def as_matrix(H) -> np.ndarray:
    return H.entries if isinstance(H, HamiltonianMatrix) else np.asarray(H)
