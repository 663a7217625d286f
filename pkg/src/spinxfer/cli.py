"""Command-line front end: one subcommand per data set.

Exit codes: 0 success, 2 configuration error, 3 numerical error, 4 I/O error.
Failures print a single ``error=<kind> ... message=...`` line on stderr.
"""

from __future__ import annotations

import functools
import sys
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from .chain import (
    ChainConfig,
    DegenerateGeometryError,
    Model,
    build_hamiltonian,
    ordered_realization,
    sample_realization,
)
from .ensemble import EnsembleError, Protocol, localization_sweep, transfer_sweep, transfer_time_fit
from .io import ConfigError, emit_csv, load_config
from .spectral import boundary_support, eigendecompose, ordered_long_range_spectrum
from .transfer import IntegratorAccuracyError, run_static_protocol, run_stirap_protocol

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def _fail(kind: str, code: int, exc: Exception):
    message = str(exc).replace("\n", " ")
    click.echo(f"error={kind} message={message}", err=True)
    sys.exit(code)


def _load(ctx_opts):
    cfg = load_config(ctx_opts["config"])
    updates = {}
    if ctx_opts["seed"] is not None:
        updates["seed"] = ctx_opts["seed"]
    if ctx_opts["workers"] is not None:
        updates["workers"] = ctx_opts["workers"]
    if ctx_opts["out"] is not None:
        updates["out"] = ctx_opts["out"]
    if updates:
        cfg = cfg.model_validate({**cfg.model_dump(), **updates})
    return cfg


def experiment(func):
    """Shared options and error-to-exit-code mapping for every subcommand."""

    @click.option("--config", "config", required=True, type=click.Path(dir_okay=False),
                  help="YAML run configuration.")
    @click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None,
                  help="Override the configured base seed.")
    @click.option("--out", type=click.Path(file_okay=False), default=None,
                  help="Output directory (overrides config).")
    @click.option("--workers", type=click.IntRange(1), default=None,
                  help="Worker processes for ensembles.")
    @click.option("--quiet", is_flag=True, help="Do not list written files.")
    @functools.wraps(func)
    def wrapper(**opts):
        try:
            try:
                cfg = _load(opts)
            except OSError as exc:
                _fail("io", EXIT_IO, exc)
            written = func(cfg)
        except ConfigError as exc:
            click.echo(exc.diagnostic(), err=True)
            sys.exit(EXIT_CONFIG)
        except (IntegratorAccuracyError, DegenerateGeometryError, EnsembleError,
                np.linalg.LinAlgError) as exc:
            _fail("numerical", EXIT_NUMERICAL, exc)
        except OSError as exc:
            _fail("io", EXIT_IO, exc)
        except ValueError as exc:
            _fail("config", EXIT_CONFIG, exc)
        if not opts["quiet"]:
            for path in written:
                click.echo(str(path))

    return wrapper


@click.group()
def main():
    """Localization and excitation transfer in disordered dipolar spin chains."""


@main.command()
@experiment
def spectrum(cfg):
    """Ordered-chain spectrum: numerical eigenvalues against the closed form."""
    chain = cfg.chain
    numeric = eigendecompose(build_hamiltonian(ordered_realization(chain))).values
    if chain.model is Model.LONG_RANGE:
        formula = np.sort(ordered_long_range_spectrum(chain.N, chain.J))
    else:
        k = np.arange(1, chain.N + 1)
        formula = np.sort(2 * chain.J * np.cos(np.pi * k / (chain.N + 1)))
    meta = [
        "kind: spectrum",
        f"model: {chain.model.value}",
        f"N: {chain.N}",
        f"numerical_min: {float(numeric[0])!r}",
        f"numerical_max: {float(numeric[-1])!r}",
        f"formula_max: {float(formula[-1])!r}",
    ]
    rows = zip(range(chain.N), numeric, formula)
    return [emit_csv(None, Path(cfg.out) / "spectrum.csv", meta=meta,
                     columns=["k", "E_numerical", "E_formula"], rows=rows)]


@main.command("boundary-support")
@experiment
def boundary_support_cmd(cfg):
    """Boundary amplitudes |v_1 v_N| of every eigenstate of the ordered chain."""
    es = eigendecompose(build_hamiltonian(ordered_realization(cfg.chain)))
    V = es.vectors
    rows = zip(range(len(es)), es.values, boundary_support(V), V[0], V[-1])
    meta = ["kind: boundary_support", f"N: {cfg.N}", f"model: {cfg.model.value}"]
    return [emit_csv(None, Path(cfg.out) / "boundary_support.csv", meta=meta,
                     columns=["k", "E", "boundary_support", "v_first", "v_last"], rows=rows)]


@main.command()
@experiment
def localization(cfg):
    """Ensemble-averaged localization profile per eigen-index."""
    ens = replace(cfg.ensemble(), protocol=Protocol.LOCALIZATION)
    profile = localization_sweep(ens)
    return [emit_csv(profile, Path(cfg.out) / "localization.csv")]


def _single_runs(cfg, name, run, params, extra):
    written, rows = [], []
    for N in cfg.chain_lengths:
        chain = ChainConfig(N, cfg.a, cfg.C3, cfg.nu, cfg.model)
        real = sample_realization(chain, cfg.disorder, 0)
        trace = run(real, params)
        written.append(emit_csv(trace, Path(cfg.out) / f"{name}_N{N}.csv"))
        rows.append([N] + extra(trace))
    return written, rows


@main.command("transfer-static")
@experiment
def transfer_static(cfg):
    """Static-coupling transfer traces and first-peak times per chain length."""
    written, rows = _single_runs(
        cfg, "static", run_static_protocol, cfg.static_params(),
        lambda tr: [tr.tau_used, tr.final_P_r, tr.peak_found, tr.k_selected, tr.E_selected],
    )
    meta = ["kind: static_summary"]
    if len(rows) >= 2:
        slope, intercept, rms = transfer_time_fit([r[0] for r in rows], [r[1] for r in rows])
        meta.append(f"fit: tau*J = {slope!r} * N + {intercept!r} (rms {rms!r})")
    written.append(emit_csv(None, Path(cfg.out) / "static_summary.csv", meta=meta,
                            columns=["N", "tau", "P_r", "peak_found", "k_selected", "E_selected"],
                            rows=rows))
    return written


@main.command("transfer-stirap")
@experiment
def transfer_stirap(cfg):
    """STIRAP transfer traces per chain length."""
    written, rows = _single_runs(
        cfg, "stirap", run_stirap_protocol, cfg.stirap_params(),
        lambda tr: [tr.tau_used, tr.final_P_r, tr.max_P_c, tr.pulse_area, tr.norm_drift],
    )
    written.append(emit_csv(None, Path(cfg.out) / "stirap_summary.csv", meta=["kind: stirap_summary"],
                            columns=["N", "tau", "P_r", "max_P_c", "pulse_area", "norm_drift"],
                            rows=rows))
    return written


@main.command()
@experiment
def ensemble(cfg):
    """Disorder-averaged transfer probability against chain length."""
    ens = cfg.ensemble()
    if ens.protocol is Protocol.LOCALIZATION:
        raise ConfigError("ensemble needs protocol 'static' or 'stirap'", key="protocol")
    summary = transfer_sweep(ens, cfg.chain_lengths)
    return [emit_csv(summary, Path(cfg.out) / f"ensemble_{ens.protocol.value}.csv")]


if __name__ == "__main__":
    main()
