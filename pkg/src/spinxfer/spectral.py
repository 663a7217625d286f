"""Eigenstates of chain Hamiltonians and their localization diagnostics.

Vector-valued diagnostics accept a single eigenvector (1-D) or a matrix whose
columns are eigenvectors (2-D, as returned by :func:`eigendecompose`) and
return a scalar or one value per column accordingly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from .chain import as_matrix

AMPLITUDE_FLOOR = 1e-12


class AsymmetricMatrixError(ValueError):
    pass


@dataclass(frozen=True)
class EigenSystem:
    """Ascending eigenvalues with eigenvectors stored as columns."""

    values: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        for name in ("values", "vectors"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self):
        return len(self.values)

    def vector(self, k: int) -> np.ndarray:
        return self.vectors[:, k]


class LocalizationRecord(NamedTuple):
    k: int
    E: float
    xi: float
    mu: float
    number_variance: float
    ipr: float
    boundary_support: float


@dataclass(frozen=True)
class Diagnostics:
    """Per-eigenstate diagnostics of one eigensystem, as parallel arrays."""

    E: np.ndarray
    xi: np.ndarray
    mu: np.ndarray
    number_variance: np.ndarray
    ipr: np.ndarray
    boundary_support: np.ndarray

    def records(self) -> Iterator[LocalizationRecord]:
        for k in range(len(self.E)):
            yield LocalizationRecord(
                k,
                float(self.E[k]),
                float(self.xi[k]),
                float(self.mu[k]),
                float(self.number_variance[k]),
                float(self.ipr[k]),
                float(self.boundary_support[k]),
            )


def eigendecompose(H) -> EigenSystem:
    """Full spectrum of a real symmetric matrix (LAPACK ``syevd``)."""
    M = as_matrix(H)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise AsymmetricMatrixError(f"expected a square matrix, got shape {M.shape}")
    scale = max(float(np.max(np.abs(M))), 1.0) if M.size else 1.0
    if not np.allclose(M, M.T, rtol=0.0, atol=1e-12 * scale):
        raise AsymmetricMatrixError("matrix is not symmetric")
    values, vectors = np.linalg.eigh(M)
    return EigenSystem(values, vectors)


def ordered_long_range_spectrum(N: int, J: float = 1.0) -> np.ndarray:
    """Closed-form single-excitation energies of the ordered 1/r^3 chain, k = 1..N.

    Treats every coupling as a standing-wave cosine; values are returned in
    order of ``k`` (so descending for ``k -> N``), not sorted.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    k = np.arange(1, N + 1)[:, None]
    m = np.arange(1, N + 1)[None, :]
    return 2.0 * (J / m**3 * np.cos(np.pi * k * m / (N + 1))).sum(axis=1)


def _columns(v) -> tuple[np.ndarray, bool]:
    v = np.asarray(v, dtype=float)
    if v.ndim == 1:
        return v[:, None], True
    return v, False


def localization_length(v, a: float = 1.0, floor: float = AMPLITUDE_FLOOR):
    """Fit ``|v_i| ~ exp(-|a i - mu| / xi)`` around the largest amplitude.

    ``mu`` is the position ``a i`` (sites counted from 1) of the largest
    ``|v_i|``; ``xi`` comes from an unweighted least-squares line through
    ``(|a i - mu|, ln |v_i|)`` using sites with ``|v_i| > floor * max |v|``.
    States whose slope is flatter than ``-1 / (10 a N)`` count as delocalized
    and all lengths are capped at ``a N``.

    Returns ``(xi, mu)``, each a float for one vector or an array per column.
    """
    V, single = _columns(v)
    N = V.shape[0]
    A = np.abs(V)
    peak = A.max(axis=0)
    if np.any(peak == 0):
        raise ValueError("null vector: all amplitudes below the floor")
    mu = a * (np.argmax(A, axis=0) + 1)
    x = np.abs(a * np.arange(1, N + 1)[:, None] - mu[None, :])
    keep = A > floor * peak
    w = keep.astype(float)
    y = np.log(np.where(keep, A, 1.0))

    n = w.sum(axis=0)
    sx = (w * x).sum(axis=0)
    sy = (w * y).sum(axis=0)
    sxx = (w * x * x).sum(axis=0)
    sxy = (w * x * y).sum(axis=0)
    denom = n * sxx - sx * sx
    # a lone surviving site decays past the floor within one lattice step
    steepest = -np.log(1.0 / floor) / a
    with np.errstate(divide="ignore", invalid="ignore"):
        slope = np.where(denom > 0, (n * sxy - sx * sy) / denom, steepest)
        xi_max = a * N
        delocalized = slope >= -1.0 / (10.0 * a * N)
        xi = np.where(delocalized, xi_max, np.minimum(-1.0 / slope, xi_max))
    if single:
        return float(xi[0]), float(mu[0])
    return xi, mu.astype(float)


def number_variance(v):
    """Variance ``p - p^2`` of the excitation count in the left ``floor(N/2)`` sites."""
    V, single = _columns(v)
    p = (V[: V.shape[0] // 2] ** 2).sum(axis=0)
    out = p - p * p
    return float(out[0]) if single else out


def ipr(v):
    V, single = _columns(v)
    out = (V**4).sum(axis=0)
    return float(out[0]) if single else out


def boundary_support(v):
    """``|v_1 v_N|``, how strongly a state reaches both chain ends."""
    V, single = _columns(v)
    out = np.abs(V[0] * V[-1])
    return float(out[0]) if single else out


def expected_number_variance(xi: float, N: int, a: float = 1.0) -> float:
    """Number variance of a normalized exponential profile, averaged over its peak.

    The peak runs over the lattice sites ``mu / a = 1..N``. For ``xi < a N / 2``
    the result is close to ``(3/8) xi / (a N)``.
    """
    if not xi > 0:
        raise ValueError("xi must be > 0")
    i = np.arange(1, N + 1)
    d = np.abs(i[:, None] - i[None, :]) * a
    # log-space normalization keeps tiny xi finite
    logv = -d / xi
    logv -= logv.max(axis=0)
    prob = np.exp(2.0 * logv)
    prob /= prob.sum(axis=0)
    p = prob[: N // 2].sum(axis=0)
    return float(np.mean(p - p * p))


def diagnostics(es: EigenSystem, a: float = 1.0) -> Diagnostics:
    xi, mu = localization_length(es.vectors, a)
    return Diagnostics(
        E=np.asarray(es.values),
        xi=xi,
        mu=mu,
        number_variance=number_variance(es.vectors),
        ipr=ipr(es.vectors),
        boundary_support=boundary_support(es.vectors),
    )


def select_target_state(es: EigenSystem, E_target: float) -> int:
    """Index of the eigenvalue closest to ``E_target``.

    Equidistant candidates are separated by boundary support, largest first.
    """
    if len(es) == 0:
        raise ValueError("empty spectrum")
    dist = np.abs(np.asarray(es.values) - E_target)
    best = np.flatnonzero(dist == dist.min())
    if len(best) == 1:
        return int(best[0])
    support = boundary_support(es.vectors[:, best])
    return int(best[np.argmax(support)])


def coupling_rates(v, J_s: float, J_r: float) -> tuple[float, float]:
    """Effective sender and receiver couplings to one chain eigenstate."""
    v = np.asarray(v, dtype=float)
    return float(J_s * v[0]), float(J_r * v[-1])
