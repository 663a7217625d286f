"""Seeded disorder ensembles.

Realizations are cut into fixed-size chunks by index; a chunk is processed
end to end by one worker and results are folded in index order. Chunk
boundaries never depend on the worker count, so the output is bitwise the
same for any number of workers.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .chain import (
    ChainConfig,
    DegenerateGeometryError,
    DisorderSpec,
    build_hamiltonian,
    sample_realization,
)
from .seeding import realization_seed
from .spectral import diagnostics, eigendecompose
from .transfer import (
    StaticProtocolParams,
    StirapParams,
    run_static_protocol,
    run_stirap_batch,
)

__all__ = [
    "EnsembleConfig",
    "EnsembleError",
    "EnsembleSummary",
    "LocalizationProfile",
    "Protocol",
    "localization_sweep",
    "law_ratio",
    "profile_peak",
    "realization_seed",
    "transfer_sweep",
    "transfer_time_fit",
]

MAX_FAILURE_FRACTION = 0.01


class EnsembleError(RuntimeError):
    pass


class Protocol(str, enum.Enum):
    LOCALIZATION = "localization"
    STATIC = "static"
    STIRAP = "stirap"


@dataclass(frozen=True)
class EnsembleConfig:
    chain: ChainConfig
    disorder: DisorderSpec = DisorderSpec()
    n_realizations: int = 1000
    protocol: Protocol = Protocol.LOCALIZATION
    static: StaticProtocolParams = StaticProtocolParams(energy_mode="target")
    stirap: StirapParams = StirapParams(energy_mode="target")
    workers: int = 1
    chunk_size: int = 25

    def __post_init__(self):
        if self.n_realizations < 1:
            raise ValueError(f"n_realizations must be >= 1, got {self.n_realizations}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if self.chunk_size < 1:
            raise ValueError(f"chunk_size must be >= 1, got {self.chunk_size}")
        object.__setattr__(self, "protocol", Protocol(self.protocol))


@dataclass(frozen=True)
class LocalizationProfile:
    """Per sorted eigen-index ``k``: ensemble means and standard errors."""

    mean_E: np.ndarray
    mean_xi: np.ndarray
    mean_dn2: np.ndarray
    se_E: np.ndarray
    se_xi: np.ndarray
    se_dn2: np.ndarray
    N: int
    a: float
    disorder: DisorderSpec
    n_realizations: int
    failures: int = 0

    @property
    def k(self) -> np.ndarray:
        return np.arange(len(self.mean_E))


@dataclass(frozen=True)
class EnsembleSummary:
    """Mean terminal receiver population per chain length."""

    N: np.ndarray
    mean_Pr: np.ndarray
    se_Pr: np.ndarray
    mean_tau: np.ndarray
    failures: np.ndarray
    protocol: Protocol = Protocol.STATIC
    n_realizations: int = 0
    meta: dict = field(default_factory=dict)


def _mean_se(samples: np.ndarray):
    n = samples.shape[0]
    mean = samples.mean(axis=0)
    if n < 2:
        return mean, np.zeros_like(mean)
    return mean, samples.std(axis=0, ddof=1) / math.sqrt(n)


def _chunks(n: int, size: int):
    return [range(lo, min(lo + size, n)) for lo in range(0, n, size)]


def _run_chunks(task, args_list, workers: int):
    if workers == 1 or len(args_list) == 1:
        return [task(*args) for args in args_list]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task, *zip(*args_list)))


def _localization_chunk(chain: ChainConfig, disorder: DisorderSpec, indices: range):
    rows = []
    for i in indices:
        try:
            real = sample_realization(chain, disorder, i)
            diag = diagnostics(eigendecompose(build_hamiltonian(real)), chain.a)
        except DegenerateGeometryError:
            rows.append(None)
            continue
        rows.append(np.stack([diag.E, diag.xi, diag.number_variance]))
    return rows


def _check_failures(failures: int, total: int):
    if failures > MAX_FAILURE_FRACTION * total:
        raise EnsembleError(
            f"degenerate geometry in {failures} of {total} realizations (limit 1%)"
        )


def localization_sweep(cfg: EnsembleConfig) -> LocalizationProfile:
    """Average energies, localization lengths and number variances per eigen-index."""
    if cfg.protocol is not Protocol.LOCALIZATION:
        raise ValueError("localization_sweep needs protocol=localization")
    jobs = [(cfg.chain, cfg.disorder, idx) for idx in _chunks(cfg.n_realizations, cfg.chunk_size)]
    rows = [r for chunk in _run_chunks(_localization_chunk, jobs, cfg.workers) for r in chunk]
    good = [r for r in rows if r is not None]
    failures = len(rows) - len(good)
    _check_failures(failures, len(rows))
    data = np.stack(good)  # (realization, quantity, k)
    mean, se = _mean_se(data)
    return LocalizationProfile(
        mean_E=mean[0], mean_xi=mean[1], mean_dn2=mean[2],
        se_E=se[0], se_xi=se[1], se_dn2=se[2],
        N=cfg.chain.N, a=cfg.chain.a, disorder=cfg.disorder,
        n_realizations=len(good), failures=failures,
    )


def _transfer_chunk(chain: ChainConfig, disorder: DisorderSpec, protocol: Protocol,
                    params, indices: range):
    reals, out = [], []
    for i in indices:
        try:
            real = sample_realization(chain, disorder, i)
            build_hamiltonian(real)
        except DegenerateGeometryError:
            out.append(None)
            continue
        reals.append(real)
        out.append(len(reals) - 1)
    if protocol is Protocol.STATIC:
        traces = [run_static_protocol(r, params) for r in reals]
    else:
        traces = run_stirap_batch(reals, params)
    return [None if j is None else (traces[j].final_P_r, traces[j].tau_used) for j in out]


def transfer_sweep(cfg: EnsembleConfig, Ns: Sequence[int]) -> EnsembleSummary:
    """Ensemble-mean receiver population at readout for each chain length.

    Static runs read out at the first receiver maximum, STIRAP runs at the
    end of the pulse sequence.
    """
    if cfg.protocol is Protocol.LOCALIZATION:
        raise ValueError("transfer_sweep needs protocol=static or protocol=stirap")
    params = cfg.static if cfg.protocol is Protocol.STATIC else cfg.stirap
    means, ses, taus, fails = [], [], [], []
    for N in Ns:
        chain = replace(cfg.chain, N=int(N))
        jobs = [
            (chain, cfg.disorder, cfg.protocol, params, idx)
            for idx in _chunks(cfg.n_realizations, cfg.chunk_size)
        ]
        rows = [r for chunk in _run_chunks(_transfer_chunk, jobs, cfg.workers) for r in chunk]
        good = np.array([r for r in rows if r is not None], dtype=float)
        failures = len(rows) - len(good)
        _check_failures(failures, len(rows))
        mean, se = _mean_se(good)
        means.append(mean[0])
        ses.append(se[0])
        taus.append(mean[1])
        fails.append(failures)
    return EnsembleSummary(
        N=np.array([int(n) for n in Ns]),
        mean_Pr=np.array(means), se_Pr=np.array(ses),
        mean_tau=np.array(taus), failures=np.array(fails),
        protocol=cfg.protocol, n_realizations=cfg.n_realizations,
    )


def transfer_time_fit(Ns: Sequence[float], taus: Sequence[float]):
    """Least-squares line ``tau J = slope N + intercept``; returns ``(slope, intercept, rms)``."""
    x = np.asarray(Ns, dtype=float)
    y = np.asarray(taus, dtype=float)
    if len(x) != len(y):
        raise ValueError("Ns and taus differ in length")
    if len(x) < 2 or np.ptp(x) == 0:
        raise ValueError("need at least two distinct chain lengths for a line fit")
    A = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    rms = float(np.sqrt(np.mean((A @ [slope, intercept] - y) ** 2)))
    return float(slope), float(intercept), rms


def profile_peak(profile: LocalizationProfile, E_window, smooth: int = 1, require_local: bool = False):
    """Largest (optionally running-mean smoothed) ``<xi_k>`` with ``<E_k>`` in a window.

    Returns ``(k, <E_k>, smoothed <xi_k>)``. With ``require_local`` the maximum
    must not sit on the window edge, i.e. it has to be a genuine local peak.
    """
    lo, hi = E_window
    xi = np.asarray(profile.mean_xi)
    if smooth > 1:
        kernel = np.ones(smooth) / smooth
        xi = np.convolve(np.pad(xi, smooth // 2, mode="edge"), kernel, mode="valid")[: len(xi)]
    inside = np.flatnonzero((profile.mean_E >= lo) & (profile.mean_E <= hi))
    if len(inside) == 0:
        raise ValueError(f"no eigen-index with mean energy in [{lo}, {hi}]")
    k = int(inside[np.argmax(xi[inside])])
    if require_local and k in (inside[0], inside[-1]):
        return None
    return k, float(profile.mean_E[k]), float(xi[k])


def law_ratio(profile: LocalizationProfile, interior: float = 0.05):
    """``<dn2_k> / (<xi_k> / (a N))`` on interior indices with ``<xi_k> < a N / 2``.

    ``interior`` is the fraction of indices dropped at each band edge.
    """
    N = profile.N
    cut = int(round(interior * N))
    k = np.arange(N)
    sel = (profile.mean_xi < profile.a * N / 2) & (k >= cut) & (k < N - cut)
    return k[sel], profile.mean_dn2[sel] / (profile.mean_xi[sel] / (profile.a * N))

