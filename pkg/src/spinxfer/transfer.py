"""Sender -> chain -> receiver excitation transfer.

Two protocols move an excitation from a sender spin, coupled to site 1, to a
receiver spin coupled to site N:

* static: constant weak couplings, both end spins tuned to one chain
  eigenstate, read out at the first maximum of the receiver population;
* STIRAP: tanh-shaped couplings in counterintuitive order (receiver first),
  read out at the end of the pulse sequence.

hbar = 1; times are in units of 1/J.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np
from scipy.signal import find_peaks

from .chain import (
    EndpointParams,
    Model,
    SpinChainRealization,
    as_matrix,
    build_hamiltonian,
    extend_with_endpoints,
)
from .spectral import EigenSystem, coupling_rates, eigendecompose, select_target_state

# Receiver first-peak times of the ordered chain and STIRAP durations, tau*J = slope*N + offset.
STATIC_TIME_FIT = (3.2, 2.3)
STIRAP_TIME_FIT = (14.1, 6.9)

NORM_TOLERANCE = 1e-8
MAX_HALVINGS = 6
MAX_TRACE_SAMPLES = 10_000
PEAK_PROMINENCE = 1e-4


class IntegratorAccuracyError(RuntimeError):
    """Norm drift stayed above tolerance after all step halvings."""


def default_target_energy(model: Model, J: float = 1.0) -> float:
    return -0.22 * J if Model(model) is Model.LONG_RANGE else 0.0


ENERGY_MODES = ("eigenstate", "target")


@dataclass(frozen=True)
class StaticProtocolParams:
    """Constant couplings ``J_s = J_r = c J / sqrt(N)``.

    ``energy_mode="eigenstate"`` puts both end spins exactly on the selected
    chain eigenvalue (benchmark runs on ordered chains); ``"target"`` leaves
    them at ``E_target`` (disorder ensembles, where the chain spectrum is not
    known to the experimenter). ``None`` fields are filled per chain by
    :meth:`for_chain`.
    """

    c: float = 0.49
    E_target: Optional[float] = None
    horizon: Optional[float] = None
    sample_dt: float = 0.1
    energy_mode: str = "eigenstate"

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"coupling_scale must be > 0, got {self.c}")
        if self.horizon is not None and not self.horizon > 0:
            raise ValueError(f"horizon must be > 0, got {self.horizon}")
        if not self.sample_dt > 0:
            raise ValueError(f"sample_dt must be > 0, got {self.sample_dt}")
        if self.energy_mode not in ENERGY_MODES:
            raise ValueError(f"energy_mode must be one of {ENERGY_MODES}, got {self.energy_mode!r}")

    def for_chain(self, N: int, J: float = 1.0, model: Model = Model.LONG_RANGE):
        slope, offset = STATIC_TIME_FIT
        return replace(
            self,
            E_target=default_target_energy(model, J) if self.E_target is None else self.E_target,
            horizon=2.0 * (slope * N + offset) / J if self.horizon is None else self.horizon,
        )


@dataclass(frozen=True)
class StirapParams:
    """Pulse sequence ``J_{s,r}(t) = (J_max/2) (1 +- tanh(gamma t / tau - beta_{s,r}))``.

    The sender takes the ``+`` branch and the receiver the ``-`` branch, so the
    receiver coupling is on at ``t = 0`` and the sender coupling at ``t = tau``.
    ``counterintuitive=False`` swaps the two pulses.
    """

    c: float = 0.5
    gamma: float = 6.0
    beta_s: float = 2.3
    beta_r: float = 3.6
    tau: Optional[float] = None
    dt: Optional[float] = None
    J_max: Optional[float] = None
    E_target: Optional[float] = None
    energy_mode: str = "eigenstate"
    counterintuitive: bool = True

    def __post_init__(self):
        if not self.c >= 0:
            raise ValueError(f"coupling_scale must be >= 0, got {self.c}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if self.tau is not None and not self.tau > 0:
            raise ValueError(f"tau must be > 0, got {self.tau}")
        if self.tau is not None and self.dt is not None and not 0 < self.dt <= self.tau / 1000:
            raise ValueError(f"dt must satisfy 0 < dt <= tau/1000, got dt={self.dt}, tau={self.tau}")
        if self.energy_mode not in ENERGY_MODES:
            raise ValueError(f"energy_mode must be one of {ENERGY_MODES}, got {self.energy_mode!r}")

    def for_chain(self, N: int, J: float = 1.0, model: Model = Model.LONG_RANGE):
        slope, offset = STIRAP_TIME_FIT
        tau = (slope * N + offset) / J if self.tau is None else self.tau
        return replace(
            self,
            tau=tau,
            dt=min(0.01 / J, tau / 1e4) if self.dt is None else self.dt,
            J_max=self.c * J / math.sqrt(N) if self.J_max is None else self.J_max,
            E_target=default_target_energy(model, J) if self.E_target is None else self.E_target,
        )

    @property
    def resolved(self) -> bool:
        return self.tau is not None and self.J_max is not None and self.dt is not None


@dataclass(frozen=True)
class TransferTrace:
    """Populations of sender, chain and receiver on a time grid."""

    times: np.ndarray
    P_s: np.ndarray
    P_c: np.ndarray
    P_r: np.ndarray
    norm_drift: float
    tau_used: float
    k_selected: int
    E_selected: float = float("nan")
    eps_sr: float = float("nan")
    pulse_area: Optional[float] = None
    peak_found: bool = True
    meta: dict = field(default_factory=dict)

    @property
    def final_P_r(self) -> float:
        return float(self.P_r[-1])

    @property
    def max_P_c(self) -> float:
        return float(np.max(self.P_c))


class Peak(NamedTuple):
    time: float
    index: int
    found: bool


def pulse_value(t, p: StirapParams, which: str):
    """Sender (``which="sender"``) or receiver coupling at time ``t``."""
    if p.tau is None or p.J_max is None:
        raise ValueError("pulse parameters are unresolved; call StirapParams.for_chain first")
    if which not in ("sender", "receiver"):
        raise ValueError(f"which must be 'sender' or 'receiver', got {which!r}")
    if not p.counterintuitive:
        # intuitive order: each end takes the other end's pulse
        which = "receiver" if which == "sender" else "sender"
    x = p.gamma * np.asarray(t, dtype=float) / p.tau
    if which == "sender":
        out = 0.5 * p.J_max * (1.0 + np.tanh(x - p.beta_s))
    else:
        out = 0.5 * p.J_max * (1.0 - np.tanh(x - p.beta_r))
    return out if out.ndim else float(out)


def _area(v1: float, vN: float, p: StirapParams) -> float:
    n = max(int(math.ceil(p.tau / p.dt)), 1)
    t = np.linspace(0.0, p.tau, n + 1)
    omega_s = pulse_value(t, p, "sender") * v1
    omega_r = pulse_value(t, p, "receiver") * vN
    return float(np.trapezoid(np.hypot(omega_s, omega_r), t))


def _chain_setup(realization: SpinChainRealization):
    H = build_hamiltonian(realization)
    return H, eigendecompose(H)


def pulse_area(realization: SpinChainRealization, params: StirapParams) -> float:
    """Effective pulse area ``int_0^tau sqrt(Omega_s^2 + Omega_r^2) dt`` (trapezoid, step dt)."""
    cfg = realization.config
    p = params if params.resolved else params.for_chain(cfg.N, cfg.J, cfg.model)
    _, es = _chain_setup(realization)
    k = select_target_state(es, p.E_target)
    v = es.vector(k)
    return _area(v[0], v[-1], p)


def propagate_static(H, psi0, t):
    """Exact evolution ``V exp(-i Lambda t) V^T psi0`` under a constant Hamiltonian.

    ``t`` may be a scalar (returns one state) or a 1-D array of times
    (returns one row per time).
    """
    es = H if isinstance(H, EigenSystem) else eigendecompose(H)
    V = es.vectors
    coeff = V.T @ np.asarray(psi0, dtype=complex)
    t_arr = np.asarray(t, dtype=float)
    phases = np.exp(-1j * np.multiply.outer(t_arr, es.values))
    states = (phases * coeff) @ V.T
    return states


class TdseResult(NamedTuple):
    times: np.ndarray
    samples: np.ndarray
    norm_drift: float
    dt: float


def _rk4(apply, psi0, tau, dt, observe, max_samples):
    n_steps = max(int(math.ceil(tau / dt - 1e-9)), 1)
    h = tau / n_steps
    stride = max(int(math.ceil(n_steps / max_samples)), 1)
    psi = np.array(psi0, dtype=complex)
    norm0 = np.sum(np.abs(psi) ** 2, axis=-1)

    times = [0.0]
    samples = [observe(psi)]
    drift = 0.0
    for step in range(1, n_steps + 1):
        t = (step - 1) * h
        k1 = apply(t, psi)
        k2 = apply(t + 0.5 * h, psi - 0.5j * h * k1)
        k3 = apply(t + 0.5 * h, psi - 0.5j * h * k2)
        k4 = apply(t + h, psi - 1j * h * k3)
        psi = psi - (1j * h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if step % stride == 0 or step == n_steps:
            times.append(step * h)
            samples.append(observe(psi))
            norm = np.sum(np.abs(psi) ** 2, axis=-1)
            drift = max(drift, float(np.max(np.abs(norm - norm0))))
            if not np.isfinite(drift):
                break
    return np.array(times), np.array(samples), drift, psi


def _as_apply(H_of_t):
    if hasattr(H_of_t, "apply"):
        return H_of_t.apply
    return lambda t, psi: psi @ np.asarray(as_matrix(H_of_t(t))).T


def _norm_bound(H_of_t, tau):
    if hasattr(H_of_t, "norm_bound"):
        return H_of_t.norm_bound()
    return max(np.linalg.norm(as_matrix(H_of_t(s)), 2) for s in (0.0, 0.5 * tau, tau))


def integrate_tdse(
    H_of_t,
    psi0,
    tau: float,
    dt: float,
    *,
    observe: Optional[Callable] = None,
    max_samples: int = MAX_TRACE_SAMPLES,
    tol: float = NORM_TOLERANCE,
    max_halvings: int = MAX_HALVINGS,
) -> TdseResult:
    """Classical fixed-step RK4 for ``i dpsi/dt = H(t) psi``.

    ``H_of_t`` is either a callable returning the matrix at time ``t`` or an
    object with ``apply(t, psi)`` returning ``H(t) psi`` (``psi`` may carry
    leading batch axes). The run is repeated with half the step while the
    norm drift exceeds ``tol``, at most ``max_halvings`` times.

    ``observe(psi)`` selects what is stored at each of at most
    ``max_samples + 1`` sample times; by default the state itself.
    """
    if not tau > 0 or not dt > 0:
        raise ValueError("tau and dt must be positive")
    if dt * _norm_bound(H_of_t, tau) > 0.1 + 1e-12:
        raise ValueError(f"time step {dt} too large for the Hamiltonian norm (need dt*|H| <= 0.1)")
    apply = _as_apply(H_of_t)
    observe = observe or (lambda psi: psi.copy())
    for _ in range(max_halvings + 1):
        times, samples, drift, _ = _rk4(apply, psi0, tau, dt, observe, max_samples)
        if drift <= tol:
            return TdseResult(times, samples, drift, dt)
        dt = 0.5 * dt
    raise IntegratorAccuracyError(
        f"integrator accuracy: norm drift {drift:.3e} > {tol:.0e} after {max_halvings} halvings"
    )


def first_peak_time(trace: TransferTrace, prominence: float = PEAK_PROMINENCE) -> Peak:
    """Time of the first local maximum of ``P_r`` with at least ``prominence``.

    The sampled maximum is refined by a parabola through its two neighbours.
    Without such a maximum the last sample time is returned with ``found=False``.
    """
    times = np.asarray(trace.times)
    P_r = np.asarray(trace.P_r)
    if len(times) == 0:
        raise ValueError("empty trace")
    peaks, _ = find_peaks(P_r, prominence=prominence)
    if len(peaks) == 0:
        return Peak(float(times[-1]), len(times) - 1, False)
    i = int(peaks[0])
    y0, y1, y2 = P_r[i - 1], P_r[i], P_r[i + 1]
    curv = y0 - 2.0 * y1 + y2
    shift = 0.5 * (y0 - y2) / curv if curv < 0 else 0.0
    shift = min(max(shift, -0.5), 0.5)
    step = times[i + 1] - times[i] if shift > 0 else times[i] - times[i - 1]
    return Peak(float(times[i] + shift * step), i, True)


def _populations(psi):
    p = np.abs(psi) ** 2
    return np.stack([p[..., 0], p[..., 1:-1].sum(axis=-1), p[..., -1]], axis=-1)


def _resolve_energy(es: EigenSystem, mode: str, E_target: float):
    k = select_target_state(es, E_target)
    E_k = float(es.values[k])
    return k, E_k, (E_k if mode == "eigenstate" else float(E_target))


def run_static_protocol(
    realization: SpinChainRealization, params: StaticProtocolParams = StaticProtocolParams()
) -> TransferTrace:
    cfg = realization.config
    p = params.for_chain(cfg.N, cfg.J, cfg.model)
    H, es = _chain_setup(realization)
    k, E_k, eps = _resolve_energy(es, p.energy_mode, p.E_target)
    J_sr = p.c * cfg.J / math.sqrt(cfg.N)
    return _static_trace(H, k, E_k, eps, J_sr, p)


def _static_trace(H, k, E_k, eps, J_sr, p: StaticProtocolParams) -> TransferTrace:
    Hx = extend_with_endpoints(H, EndpointParams(eps, eps, J_sr, J_sr))
    ex = eigendecompose(Hx)
    psi0 = np.zeros(Hx.dimension)
    psi0[0] = 1.0
    n = max(int(round(p.horizon / p.sample_dt)), 2)
    grid = np.linspace(0.0, p.horizon, n + 1)
    pops = _populations(propagate_static(ex, psi0, grid))
    full = TransferTrace(grid, pops[:, 0], pops[:, 1], pops[:, 2], 0.0, p.horizon, k, E_k, eps)

    peak = first_peak_time(full)
    if peak.found:
        keep = grid < peak.time
        end = _populations(propagate_static(ex, psi0, np.array([peak.time])))
        times = np.append(grid[keep], peak.time)
        pops = np.vstack([pops[keep], end])
    else:
        times = grid
    drift = float(np.max(np.abs(pops.sum(axis=1) - 1.0)))
    return TransferTrace(
        times, pops[:, 0], pops[:, 1], pops[:, 2], drift, peak.time, k, E_k, eps,
        peak_found=peak.found,
    )


class PulsedChain:
    """Sender + chain + receiver with time-dependent end couplings.

    Works in the chain eigenbasis: basis order is ``(sender, mode 1, ...,
    mode N, receiver)``, the modes coupling to the sender through ``v_1`` and
    to the receiver through ``v_N``. Populations of sender, receiver and the
    chain as a whole are the same as in the site basis. Arrays may carry a
    leading batch axis (one row per realization).

    ``frame`` shifts all energies by a constant, which only changes the
    global phase.
    """

    def __init__(self, mode_energies, v_first, v_last, eps_s, eps_r, pulses, frame=0.0):
        self.E = np.asarray(mode_energies, dtype=float) - np.asarray(frame)[..., None]
        self.v1 = np.asarray(v_first, dtype=float)
        self.vN = np.asarray(v_last, dtype=float)
        self.eps_s = np.asarray(eps_s, dtype=float) - frame
        self.eps_r = np.asarray(eps_r, dtype=float) - frame
        self.pulses = pulses

    def apply(self, t, psi):
        J_s, J_r = self.pulses(t)
        s = psi[..., 0]
        r = psi[..., -1]
        c = psi[..., 1:-1]
        out = np.empty_like(psi)
        out[..., 0] = self.eps_s * s + J_s * (self.v1 * c).sum(axis=-1)
        out[..., -1] = self.eps_r * r + J_r * (self.vN * c).sum(axis=-1)
        out[..., 1:-1] = self.E * c + J_s * self.v1 * s[..., None] + J_r * self.vN * r[..., None]
        return out

    def __call__(self, t):
        if self.E.ndim != 1:
            raise ValueError("matrix form is only available for a single realization")
        J_s, J_r = self.pulses(t)
        n = len(self.E)
        H = np.zeros((n + 2, n + 2))
        H[0, 0] = self.eps_s
        H[-1, -1] = self.eps_r
        H[1:-1, 1:-1] = np.diag(self.E)
        H[0, 1:-1] = H[1:-1, 0] = J_s * self.v1
        H[-1, 1:-1] = H[1:-1, -1] = J_r * self.vN
        return H

    def norm_bound(self):
        J_s, J_r = self.pulses(np.array([0.0]))
        peak = 0.0
        for part in (self.E, self.eps_s, self.eps_r):
            peak = max(peak, float(np.max(np.abs(part))))
        return peak + float(np.max(np.abs(J_s)) + np.max(np.abs(J_r)))


def _pulse_pair(p: StirapParams):
    return lambda t: (pulse_value(t, p, "sender"), pulse_value(t, p, "receiver"))


def run_stirap_batch(
    realizations: Sequence[SpinChainRealization], params: StirapParams = StirapParams()
) -> list:
    """STIRAP traces for several realizations of one chain length, integrated together."""
    if not realizations:
        return []
    cfg = realizations[0].config
    if any(r.config != cfg for r in realizations):
        raise ValueError("all realizations in a batch must share one chain configuration")
    p = params if params.resolved else params.for_chain(cfg.N, cfg.J, cfg.model)

    energies, v1, vN, eps, info = [], [], [], [], []
    for real in realizations:
        _, es = _chain_setup(real)
        k, E_k, e = _resolve_energy(es, p.energy_mode, p.E_target)
        V = es.vectors
        energies.append(es.values)
        v1.append(V[0])
        vN.append(V[-1])
        eps.append(e)
        info.append((k, E_k, e, _area(V[0, k], V[-1, k], p)))
    eps = np.array(eps)
    op = PulsedChain(np.array(energies), np.array(v1), np.array(vN), eps, eps, _pulse_pair(p), frame=eps)

    psi0 = np.zeros((len(realizations), cfg.N + 2), dtype=complex)
    psi0[:, 0] = 1.0
    res = integrate_tdse(op, psi0, p.tau, p.dt, observe=_populations)
    traces = []
    for i, (k, E_k, e, area) in enumerate(info):
        pops = res.samples[:, i, :]
        traces.append(
            TransferTrace(
                res.times, pops[:, 0], pops[:, 1], pops[:, 2], res.norm_drift, p.tau, k, E_k, e,
                pulse_area=area, meta={"dt": res.dt},
            )
        )
    return traces


def run_stirap_protocol(
    realization: SpinChainRealization, params: StirapParams = StirapParams()
) -> TransferTrace:
    return run_stirap_batch([realization], params)[0]


def effective_three_state(delta_eps: float, omega_s: float, omega_r: float) -> np.ndarray:
    """Three-level Hamiltonian in the basis ``(sender, chain eigenstate, receiver)``."""
    return np.array(
        [
            [0.0, omega_s, 0.0],
            [omega_s, delta_eps, omega_r],
            [0.0, omega_r, 0.0],
        ]
    )


def dark_state(omega_s: float, omega_r: float) -> np.ndarray:
    """Zero-energy state ``(Omega_r, 0, -Omega_s)`` of the resonant three-level model."""
    v = np.array([omega_r, 0.0, -omega_s], dtype=float)
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ValueError("dark state undefined when both couplings vanish")
    return v / norm


def run_effective_stirap(
    realization: SpinChainRealization, params: StirapParams = StirapParams()
) -> TransferTrace:
    """STIRAP through the selected chain eigenstate alone, other modes dropped.

    The couplings are the instantaneous ``J(t) v`` of the full pulse sequence,
    so the three-level model is evaluated on frozen snapshots of the pulses.
    """
    cfg = realization.config
    p = params if params.resolved else params.for_chain(cfg.N, cfg.J, cfg.model)
    _, es = _chain_setup(realization)
    k, E_k, eps = _resolve_energy(es, p.energy_mode, p.E_target)
    v = es.vector(k)

    def H_of_t(t):
        omega_s, omega_r = coupling_rates(
            v, pulse_value(t, p, "sender"), pulse_value(t, p, "receiver")
        )
        return effective_three_state(E_k - eps, omega_s, omega_r)

    res = integrate_tdse(H_of_t, np.array([1.0, 0.0, 0.0], dtype=complex), p.tau, p.dt,
                         observe=lambda psi: np.abs(psi) ** 2)
    P = res.samples
    return TransferTrace(
        res.times, P[:, 0], P[:, 1], P[:, 2], res.norm_drift, p.tau, k, E_k, eps,
        pulse_area=_area(v[0], v[-1], p), meta={"dt": res.dt},
    )
