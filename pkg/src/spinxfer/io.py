"""Run configuration (YAML) and CSV output.

A configuration is a YAML mapping. Only ``N`` and ``protocol`` are required::

    N: 400
    protocol: localization        # localization | static | stirap
    model: long_range             # or nearest_neighbor
    sigma_x: 0.025
    sigma_y: 0.025
    n_realizations: 100
    static:
      coupling_scale: 0.49
    stirap:
      gamma: 6.0

CSV files start with ``#`` comment lines (kind, units, metadata), then a
column-name row, then data rows with floats printed to 17 significant digits.
"""

from __future__ import annotations

import csv
import io as _io
from pathlib import Path
from typing import List, Literal, Optional

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .chain import ChainConfig, DisorderSpec, Model, SpinChainRealization
from .ensemble import EnsembleConfig, EnsembleSummary, LocalizationProfile, Protocol
from .transfer import StaticProtocolParams, StirapParams, TransferTrace

UNITS_LINE = "units: energies in J, lengths in a, times in 1/J"


class ConfigError(ValueError):
    """Invalid configuration document; ``key`` and ``line`` locate the problem."""

    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        super().__init__(message)
        self.key = key
        self.line = line

    def diagnostic(self) -> str:
        parts = ["error=config"]
        if self.key:
            parts.append(f"key={self.key}")
        if self.line:
            parts.append(f"line={self.line}")
        parts.append(f"message={str(self).replace(chr(10), ' ')}")
        return " ".join(parts)


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class StaticSection(_Strict):
    coupling_scale: float = Field(0.49, gt=0)
    E_target: Optional[float] = None
    horizon: Optional[float] = Field(None, gt=0)
    sample_dt: float = Field(0.1, gt=0)
    energy_mode: Optional[Literal["eigenstate", "target"]] = None


class StirapSection(_Strict):
    coupling_scale: float = Field(0.5, ge=0)
    gamma: float = Field(6.0, gt=0)
    beta_s: float = 2.3
    beta_r: float = 3.6
    tau: Optional[float] = Field(None, gt=0)
    dt: Optional[float] = Field(None, gt=0)
    E_target: Optional[float] = None
    energy_mode: Optional[Literal["eigenstate", "target"]] = None
    counterintuitive: bool = True


class RunConfig(_Strict):
    N: int = Field(ge=2)
    protocol: Protocol
    Ns: Optional[List[int]] = None
    model: Model = Model.LONG_RANGE
    a: float = Field(1.0, gt=0)
    C3: float = Field(1.0, gt=0)
    nu: float = Field(3.0, gt=0)
    sigma_epsilon: float = Field(0.0, ge=0)
    sigma_x: float = Field(0.0, ge=0)
    sigma_y: float = Field(0.0, ge=0)
    sigma_J: Optional[float] = Field(None, ge=0)
    epsilon0: float = 0.0
    seed: int = Field(0, ge=0, lt=2**64)
    n_realizations: int = Field(100, ge=1)
    workers: int = Field(1, ge=1)
    out: str = "out"
    static: StaticSection = StaticSection()
    stirap: StirapSection = StirapSection()

    @property
    def chain(self) -> ChainConfig:
        return ChainConfig(self.N, self.a, self.C3, self.nu, self.model)

    @property
    def disorder(self) -> DisorderSpec:
        return DisorderSpec(
            self.sigma_epsilon, self.sigma_x, self.sigma_y, self.epsilon0, self.seed, self.sigma_J
        )

    @property
    def chain_lengths(self) -> List[int]:
        return list(self.Ns) if self.Ns else [self.N]

    # energy_mode left unset means: exact eigenvalue for single benchmark
    # runs, fixed target energy inside disorder ensembles
    def static_params(self, default_mode: str = "eigenstate") -> StaticProtocolParams:
        s = self.static
        return StaticProtocolParams(
            c=s.coupling_scale, E_target=s.E_target, horizon=s.horizon,
            sample_dt=s.sample_dt, energy_mode=s.energy_mode or default_mode,
        )

    def stirap_params(self, default_mode: str = "eigenstate") -> StirapParams:
        s = self.stirap
        return StirapParams(
            c=s.coupling_scale, gamma=s.gamma, beta_s=s.beta_s, beta_r=s.beta_r,
            tau=s.tau, dt=s.dt, E_target=s.E_target, energy_mode=s.energy_mode or default_mode,
            counterintuitive=s.counterintuitive,
        )

    def ensemble(self) -> EnsembleConfig:
        return EnsembleConfig(
            chain=self.chain, disorder=self.disorder, n_realizations=self.n_realizations,
            protocol=self.protocol, workers=self.workers,
            static=self.static_params("target"), stirap=self.stirap_params("target"),
        )


def _key_lines(node, prefix=()):
    """Map dotted key paths of a YAML mapping to 1-based line numbers."""
    lines = {}
    if isinstance(node, yaml.MappingNode):
        for key_node, value_node in node.value:
            path = prefix + (str(key_node.value),)
            lines[path] = key_node.start_mark.line + 1
            lines.update(_key_lines(value_node, path))
    return lines


def parse_config(text: str) -> RunConfig:
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"syntax error: {exc}", line=mark.line + 1 if mark else None) from None
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping of keys to values", line=1)
    lines = _key_lines(node)
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        err = exc.errors()[0]
        loc = tuple(str(p) for p in err["loc"])
        key = ".".join(loc)
        line = lines.get(loc)
        if line is None and len(loc) > 1:
            line = lines.get(loc[:-1])
        kind = "unknown key" if err["type"] == "extra_forbidden" else "invalid value"
        raise ConfigError(f"{kind} {key!r}: {err['msg']}", key=key, line=line) from None


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def serialize_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.model_dump(mode="json"), sort_keys=False)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _table(result):
    if isinstance(result, LocalizationProfile):
        d = result.disorder
        meta = [
            "kind: localization_profile",
            f"N: {result.N}",
            f"n_realizations: {result.n_realizations}",
            f"failures: {result.failures}",
            f"disorder: sigma_epsilon={_fmt(d.sigma_epsilon)} sigma_x={_fmt(d.sigma_x)} "
            f"sigma_y={_fmt(d.sigma_y)} sigma_J={d.sigma_J if d.sigma_J is None else _fmt(d.sigma_J)} "
            f"seed={d.base_seed}",
        ]
        cols = ["k", "mean_E", "mean_xi", "mean_dn2", "se_E", "se_xi", "se_dn2"]
        data = [result.k, result.mean_E, result.mean_xi, result.mean_dn2,
                result.se_E, result.se_xi, result.se_dn2]
    elif isinstance(result, EnsembleSummary):
        meta = [
            "kind: ensemble_summary",
            f"protocol: {Protocol(result.protocol).value}",
            f"n_realizations: {result.n_realizations}",
        ]
        cols = ["N", "mean_Pr", "se_Pr", "mean_tau", "failures"]
        data = [result.N, result.mean_Pr, result.se_Pr, result.mean_tau, result.failures]
    elif isinstance(result, TransferTrace):
        meta = [
            "kind: transfer_trace",
            f"tau_used: {_fmt(result.tau_used)}",
            f"k_selected: {result.k_selected}",
            f"norm_drift: {_fmt(result.norm_drift)}",
        ]
        if result.pulse_area is not None:
            meta.append(f"pulse_area: {_fmt(result.pulse_area)}")
        cols = ["t", "P_s", "P_c", "P_r"]
        data = [result.times, result.P_s, result.P_c, result.P_r]
    elif isinstance(result, SpinChainRealization):
        meta = ["kind: realization", f"N: {result.config.N}", f"index: {result.index}"]
        cols = ["site", "x", "y", "epsilon"]
        data = [np.arange(1, result.config.N + 1), result.positions[:, 0],
                result.positions[:, 1], result.energies]
        if result.bonds is not None:
            cols.append("bond_to_next")
            data.append(np.append(result.bonds, np.nan))
    else:
        raise TypeError(f"cannot write {type(result).__name__} as CSV")
    return meta, cols, list(zip(*data))


def format_csv(result=None, *, meta=(), columns=None, rows=None) -> str:
    """Render a result object, or explicit ``columns``/``rows``, as CSV text."""
    if result is not None:
        meta, columns, rows = _table(result)
    buf = _io.StringIO()
    for line in list(meta) + [UNITS_LINE]:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def emit_csv(result, path, **kwargs) -> Path:
    path = Path(path)
    text = format_csv(result, **kwargs)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path
