"""
Command-line entry point.

    speclab gen --model rp --dim 400 --lambda 0.475 --realizations 200 --seed 42 --out runs/rp
    speclab analyze --levels runs/rp/levels_0000.csv,runs/rp/levels_0001.csv --observables nnsd
    speclab fit-lambda --levels 'runs/rp/*.csv' --out runs/fit
    speclab scatter --model rp --lambda 0.25 --Ta 0.6 --Tb 0.68 --tau-abs 0.75 --out runs/s
    speclab fit-xi --ccross 0.8 --Ta 0.6 --Tb 0.68 --tau-abs 1.6 --table xi.csv --out runs/xi
    speclab fit-tau --curve runs/s/correlation.csv --oracle tau.csv --out runs/tau
    speclab billiard --radius 0.25 --fmax 20 --out runs/circle

Exit codes: 0 success, 2 usage, 3 data, 4 numeric failure.
"""

from __future__ import annotations

import glob
import sys
import time
import uuid
from collections.abc import Callable
from pathlib import Path
from typing import Any

import click

from app.application import api
from app.infrastructure.config import get_settings
from app.infrastructure.exceptions import (
    EXIT_OK,
    create_user_friendly_error_message,
    exit_code_for,
    log_error_details,
)
from app.infrastructure.logging import LogContext, configure_from_settings, get_logger

logger = get_logger("speclab")

MODELS = ["poisson", "goe", "gue", "rp", "goe2gue"]


def _expand(patterns: tuple[str, ...]) -> list[str]:
    """Comma lists and shell-style patterns to a sorted list of files."""
    paths: list[str] = []
    for pattern in patterns:
        for item in pattern.split(","):
            item = item.strip()
            if not item:
                continue
            matches = sorted(glob.glob(item))
            paths.extend(matches if matches else [item])
    return paths


def _run(
    command: str, out_dir: str, use_case: Callable[..., api.RunResult], **kwargs: Any
) -> None:
    started = time.perf_counter()
    run_id = uuid.uuid4().hex[:12]
    with LogContext(run_id=run_id, command=command):
        try:
            result = use_case(out_dir, **kwargs)
            manifest = api.write_run_manifest(out_dir, sys.argv, result, started)
        except Exception as e:
            logger.error("Command %s failed", command, extra=log_error_details(e))
            click.echo(f"error: {e}", err=True)
            click.echo(create_user_friendly_error_message(e), err=True)
            sys.exit(exit_code_for(e))
    click.echo(f"{len(result.outputs)} files written; manifest {manifest}")
    fit = result.results.get("fit")
    if fit:
        bound = f" ({fit['bound']} bound)" if fit.get("bound") else ""
        click.echo(f"{fit['parameter_name']} = {fit['estimate']:.4f}{bound}")
    sys.exit(EXIT_OK)


def _out_option(func: Callable[..., Any]) -> Callable[..., Any]:
    return click.option(
        "--out",
        "out_dir",
        type=click.Path(file_okay=False),
        default=None,
        help="Output directory (default: APP_OUTPUT_DIR/<command>).",
    )(func)


def _threads_option(func: Callable[..., Any]) -> Callable[..., Any]:
    return click.option(
        "--threads",
        type=click.IntRange(min=-1),
        default=None,
        envvar="SIM_THREADS",
        help="Worker threads (-1: all cores).",
    )(func)


def _out(out_dir: str | None, command: str) -> str:
    return out_dir or str(Path(get_settings().app.output_dir) / command)


def _progress() -> bool:
    return get_settings().simulation.show_progress


@click.group()
@click.version_option(package_name="spectral-transition-lab")
def cli() -> None:
    """Spectral statistics of transition ensembles and microwave-billiard models."""
    configure_from_settings(get_settings().logging)


@cli.command()
@click.option("--model", type=click.Choice(MODELS), required=True)
@click.option("--dim", type=int, default=None, help="Matrix dimension N.")
@click.option("--lambda", "lam", type=float, default=None, help="RP coupling.")
@click.option("--xi", type=float, default=None, help="T-violation strength.")
@click.option("--realizations", type=int, default=None)
@click.option("--seed", type=int, default=None)
@_threads_option
@_out_option
def gen(
    model: str,
    dim: int | None,
    lam: float | None,
    xi: float | None,
    realizations: int | None,
    seed: int | None,
    threads: int | None,
    out_dir: str | None,
) -> None:
    """Sample an ensemble and write one eigenvalue file per realization."""
    sim = get_settings().simulation
    _run(
        "gen",
        _out(out_dir, "gen"),
        api.generate_spectra,
        model=model,
        dim=dim if dim is not None else sim.default_dim,
        realizations=realizations if realizations is not None else sim.default_realizations,
        seed=seed if seed is not None else sim.default_seed,
        lam=lam,
        xi=xi,
        threads=threads,
        progress=_progress(),
    )


@cli.command()
@click.option("--levels", multiple=True, required=True, help="Level files (comma list or glob).")
@click.option("--unfold", type=click.Choice(["auto", "weyl", "poly2", "none"]), default="auto")
@click.option("--observables", default="nnsd,sigma2", show_default=True)
@click.option("--trim", type=float, default=None, help="Edge fraction dropped before unfolding.")
@click.option("--lmax", "l_max", type=float, default=8.0, show_default=True)
@click.option("--radius", "radius_m", type=float, default=None, help="Billiard radius in m.")
@_out_option
def analyze(
    levels: tuple[str, ...],
    unfold: str,
    observables: str,
    trim: float | None,
    l_max: float,
    radius_m: float | None,
    out_dir: str | None,
) -> None:
    """Level statistics with Poisson, GOE and GUE reference curves."""
    _run(
        "analyze",
        _out(out_dir, "analyze"),
        api.analyze_levels,
        level_files=_expand(levels),
        observables=observables,
        unfold=unfold,
        trim=trim,
        l_max=l_max,
        radius_m=radius_m,
    )


@cli.command("fit-lambda")
@click.option("--levels", multiple=True, required=True)
@click.option("--unfold", type=click.Choice(["auto", "weyl", "poly2", "none"]), default="auto")
@click.option("--lmax", "l_max", type=float, default=None)
@click.option("--lambda-min", type=float, default=None)
@click.option("--lambda-max", type=float, default=None)
@click.option("--tolerance", type=float, default=None)
@click.option("--radius", "radius_m", type=float, default=None)
@click.option("--windows", default=None, help="Comma-separated frequency window edges.")
@_out_option
def fit_lambda(
    levels: tuple[str, ...],
    unfold: str,
    l_max: float | None,
    lambda_min: float | None,
    lambda_max: float | None,
    tolerance: float | None,
    radius_m: float | None,
    windows: str | None,
    out_dir: str | None,
) -> None:
    """Fit the RP coupling to the number variance."""
    try:
        edges = [float(x) for x in windows.split(",")] if windows else None
    except ValueError as e:
        raise click.BadParameter("window edges must be numbers", param_hint="--windows") from e
    _run(
        "fit-lambda",
        _out(out_dir, "fit-lambda"),
        api.fit_lambda,
        level_files=_expand(levels),
        unfold=unfold,
        l_max=l_max,
        lambda_min=lambda_min,
        lambda_max=lambda_max,
        tolerance=tolerance,
        radius_m=radius_m,
        window_edges=edges,
    )


@cli.command()
@click.option("--model", type=click.Choice(MODELS), default="rp", show_default=True)
@click.option("--lambda", "lam", type=float, default=None)
@click.option("--xi", type=float, default=None)
@click.option("--Ta", "t_a", type=float, required=True)
@click.option("--Tb", "t_b", type=float, required=True)
@click.option("--tau-abs", type=float, required=True)
@click.option("--dim", type=int, default=None)
@click.option("--realizations", type=int, default=50, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--save-series", is_flag=True, help="Also write the S matrix of realization 0.")
@_threads_option
@_out_option
def scatter(
    model: str,
    lam: float | None,
    xi: float | None,
    t_a: float,
    t_b: float,
    tau_abs: float,
    dim: int | None,
    realizations: int,
    seed: int | None,
    save_series: bool,
    threads: int | None,
    out_dir: str | None,
) -> None:
    """Simulate two-antenna S-matrix spectra with absorption."""
    sim = get_settings().simulation
    _run(
        "scatter",
        _out(out_dir, "scatter"),
        api.run_scattering,
        model=model,
        t_a=t_a,
        t_b=t_b,
        tau_abs=tau_abs,
        dim=dim if dim is not None else sim.default_dim,
        realizations=realizations,
        seed=seed if seed is not None else sim.default_seed,
        lam=lam,
        xi=xi,
        threads=threads,
        progress=_progress(),
        save_series=save_series,
    )


@cli.command("fit-xi")
@click.option("--ccross", type=float, default=None)
@click.option("--Ta", "t_a", type=float, default=None)
@click.option("--Tb", "t_b", type=float, default=None)
@click.option("--tau-abs", type=float, required=True)
@click.option("--table", "table_path", type=click.Path(dir_okay=False), default=None)
@click.option("--smatrix", "smatrix_path", type=click.Path(dir_okay=False), default=None)
@click.option("--dim", type=int, default=None)
@click.option("--realizations", type=int, default=None)
@click.option("--seed", type=int, default=None)
@_threads_option
@_out_option
def fit_xi(
    ccross: float | None,
    t_a: float | None,
    t_b: float | None,
    tau_abs: float,
    table_path: str | None,
    smatrix_path: str | None,
    dim: int | None,
    realizations: int | None,
    seed: int | None,
    threads: int | None,
    out_dir: str | None,
) -> None:
    """Infer the T-violation strength from C^cross."""
    if ccross is None and smatrix_path is None:
        raise click.UsageError("give --ccross or --smatrix")
    _run(
        "fit-xi",
        _out(out_dir, "fit-xi"),
        api.fit_xi,
        tau_abs=tau_abs,
        ccross=ccross,
        t_a=t_a,
        t_b=t_b,
        table_path=table_path,
        smatrix_path=smatrix_path,
        dim=dim,
        seed=seed,
        realizations=realizations,
        threads=threads,
        progress=_progress(),
    )


@cli.command("fit-tau")
@click.option("--curve", "curve_path", type=click.Path(dir_okay=False), default=None)
@click.option("--smatrix", "smatrix_path", type=click.Path(dir_okay=False), default=None)
@click.option("--spacing-ghz", type=float, default=None, help="Mean level spacing in GHz.")
@click.option("--oracle", "oracle_path", type=click.Path(dir_okay=False), default=None)
@click.option("--model", type=click.Choice(MODELS), default="goe", show_default=True)
@click.option("--lambda", "lam", type=float, default=None)
@click.option("--xi", type=float, default=None)
@click.option("--Ta", "t_a", type=float, default=None)
@click.option("--Tb", "t_b", type=float, default=None)
@click.option("--dim", type=int, default=None)
@click.option("--realizations", type=int, default=None)
@click.option("--seed", type=int, default=None)
@_threads_option
@_out_option
def fit_tau(
    curve_path: str | None,
    smatrix_path: str | None,
    spacing_ghz: float | None,
    oracle_path: str | None,
    model: str,
    lam: float | None,
    xi: float | None,
    t_a: float | None,
    t_b: float | None,
    dim: int | None,
    realizations: int | None,
    seed: int | None,
    threads: int | None,
    out_dir: str | None,
) -> None:
    """Infer the absorption strength from the autocorrelation C_ab(ε)."""
    if (curve_path is None) == (smatrix_path is None):
        raise click.UsageError("give exactly one of --curve and --smatrix")
    _run(
        "fit-tau",
        _out(out_dir, "fit-tau"),
        api.fit_tau,
        curve_path=curve_path,
        smatrix_path=smatrix_path,
        spacing_ghz=spacing_ghz,
        oracle_path=oracle_path,
        model=model,
        lam=lam,
        xi=xi,
        t_a=t_a,
        t_b=t_b,
        dim=dim,
        seed=seed,
        realizations=realizations,
        threads=threads,
        progress=_progress(),
    )


@cli.command()
@click.option("--radius", "radius_m", type=float, default=0.25, show_default=True)
@click.option("--fmax", "f_max_ghz", type=float, default=20.0, show_default=True)
@_out_option
def billiard(radius_m: float, f_max_ghz: float, out_dir: str | None) -> None:
    """Write the eigenfrequencies and orbit lengths of a circular billiard."""
    _run(
        "billiard",
        _out(out_dir, "billiard"),
        api.billiard_levels,
        radius_m=radius_m,
        f_max_ghz=f_max_ghz,
    )


def main() -> None:
    cli()


if __name__ == "__main__":
    main()
