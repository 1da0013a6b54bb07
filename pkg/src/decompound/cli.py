"""Command-line entry point.

    decompound simulate --config exp.conf --out runs/sim
    decompound fit      --config exp.conf --out runs/fit --data runs/sim/increments.csv
    decompound diagnose --config exp.conf --out runs/diag --trace runs/fit/trace.csv
    decompound distance --config dist.conf
    decompound contract --config exp.conf --out runs/contract

Failures exit nonzero and print ``error[<category>]: <message>`` on stderr.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, Mode, RunConfig, parse_config
from .diagnostics import (
    autocorrelation,
    contraction_experiment,
    contraction_radius,
    known_counts_fitter,
    mcmc_fitter,
    posterior_mean_density,
    posterior_mean_params,
    posterior_summary,
    relabel,
)
from .distances import DivergenceKind, QuadratureError, increment_divergence, limit_divergence
from .io import (
    DataError,
    fmt,
    load_observations,
    read_acceptance_csv,
    read_trace_csv,
    write_acceptance_csv,
    write_aux_csv,
    write_columns_csv,
    write_increments_csv,
    write_metadata,
    write_path_csv,
    write_trace_csv,
)
from .model import IncrementLaw, TruncationError, mixture_pdf
from .sampler import SamplerError, run_chain
from .simulate import simulate_increments

log = logging.getLogger("decompound")

EXIT_CODES = {"usage": 2, "config": 3, "data": 4, "numerical": 5, "io": 6}


class CliError(Exception):
    def __init__(self, category: str, message: str):
        super().__init__(message)
        self.category = category


def _prepare_out(out: Path | None, required: bool = True) -> Path | None:
    if out is None:
        if required:
            raise CliError("usage", "--out is required for this subcommand")
        return None
    if out.exists() and (not out.is_dir() or any(out.iterdir())):
        raise CliError("io", f"output directory {out} exists and is not empty; refusing to overwrite")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _base_meta(cfg: RunConfig) -> dict:
    return {"mode": cfg.mode.value, "seed": cfg.seed, "version": __version__}


def cmd_simulate(cfg: RunConfig, out: Path) -> None:
    truth = cfg.truth()
    obs, aux = simulate_increments(truth, np.full(cfg.n, cfg.delta), cfg.seed)
    write_increments_csv(obs, out / "increments.csv")
    write_path_csv(obs, out / "path.csv")
    write_aux_csv(aux, out / "aux.csv")
    meta = _base_meta(cfg)
    meta.update(
        psi=truth.psi.tolist(),
        mu=truth.mu.tolist(),
        tau=truth.tau,
        n=cfg.n,
        delta=cfg.delta,
        n_nonzero=int(obs.n_active),
        data_sha256=obs.digest(),
    )
    write_metadata(out / "metadata.json", meta)
    log.info("simulated %d increments (%d nonzero)", obs.n, obs.n_active)


def cmd_fit(cfg: RunConfig, out: Path) -> None:
    obs = load_observations(cfg.data, cfg.data_format, cfg.zero_threshold)
    hyper = cfg.hyperparameters()
    init = cfg.truth() if cfg.init_params == "truth" else None
    trace = run_chain(
        obs,
        hyper,
        cfg.n_iter,
        thin=cfg.thin,
        seed=cfg.seed,
        init_policy=cfg.init_policy,
        init_params=init,
        burn_in=cfg.burn_in,
    )
    write_trace_csv(trace, out / "trace.csv")
    write_acceptance_csv(trace, out / "acceptance.csv")
    meta = _base_meta(cfg)
    meta.update(
        data=str(cfg.data),
        data_format=cfg.data_format,
        data_sha256=obs.digest(),
        n_segments=obs.n,
        n_nonzero=int(obs.n_active),
        hyperparameters=hyper.as_dict(),
        n_iter=cfg.n_iter,
        thin=cfg.thin,
        burn_in=cfg.burn_in,
        init_policy=cfg.init_policy.value,
        init_params=cfg.init_params,
        acceptance_rate=trace.acceptance_rate(cfg.burn_in),
    )
    write_metadata(out / "metadata.json", meta)
    log.info("fit done: acceptance rate %.3f", trace.acceptance_rate(cfg.burn_in))


def cmd_diagnose(cfg: RunConfig, out: Path) -> None:
    trace = read_trace_csv(cfg.trace)
    acc_path = Path(cfg.trace).with_name("acceptance.csv")
    if acc_path.exists():
        trace.accepted, trace.n_active = read_acceptance_csv(acc_path)
    truth = cfg.truth()
    if cfg.relabel and truth is not None and truth.J == trace.J:
        trace = relabel(trace, truth.mu, cfg.burn_in)
    summary = posterior_summary(trace, cfg.burn_in)
    lines = [
        f"n_retained = {summary.n_retained}",
        f"burn_in = {cfg.burn_in}",
        f"acceptance_rate = {fmt(summary.acceptance_rate)}",
    ]
    for name, s in summary.params.items():
        for stat in ("mean", "sd", "q025", "q50", "q975", "ess"):
            lines.append(f"{name}.{stat} = {fmt(getattr(s, stat))}")
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    stats = ("mean", "sd", "q025", "q50", "q975", "ess")
    with open(out / "summary.csv", "w") as fh:
        fh.write("param," + ",".join(stats) + "\n")
        for name, s in summary.params.items():
            fh.write(name + "," + ",".join(fmt(getattr(s, k)) for k in stats) + "\n")

    pm = posterior_mean_params(trace, cfg.burn_in)
    lo, hi = pm.jump_density.window(4.0)
    grid = np.linspace(cfg.grid_min if cfg.grid_min is not None else lo, cfg.grid_max if cfg.grid_max is not None else hi, cfg.grid_points)
    cols = {"x": grid, "posterior_mean": posterior_mean_density(trace, cfg.burn_in, 1, grid, cfg.predictive)}
    if truth is not None:
        cols["truth"] = mixture_pdf(truth.jump_density, grid)
    write_columns_csv(out / "density.csv", cols)

    rows = trace.retained(cfg.burn_in)
    max_lag = min(cfg.max_lag, rows.size - 1)
    acf = {"lag": np.arange(max_lag + 1)}
    for name, col in trace.columns().items():
        try:
            acf[name] = autocorrelation(col[rows], max_lag)
        except ValueError:
            acf[name] = np.full(max_lag + 1, math.nan)
    write_columns_csv(out / "acf.csv", acf)


def distance_lines(cfg: RunConfig) -> list[str]:
    model, ref = cfg.truth(), cfg.reference()
    kinds = list(DivergenceKind) if cfg.distance_kind == "all" else [DivergenceKind.parse(cfg.distance_kind)]
    law = IncrementLaw(model, cfg.delta)
    law0 = IncrementLaw(ref, cfg.delta)
    lines = [f"delta = {fmt(cfg.delta)}", f"lambda = {fmt(model.lam)}", f"lambda0 = {fmt(ref.lam)}"]
    for kind in kinds:
        raw = increment_divergence(kind, law, law0)
        lim = limit_divergence(kind, model.lam, model.jump_density, ref.lam, ref.jump_density)
        lines += [
            f"kind = {kind.value}",
            f"{kind.value}.raw = {fmt(raw.value)}",
            f"{kind.value}.scaled = {fmt(raw.value / cfg.delta)}",
            f"{kind.value}.limit = {fmt(lim.value)}",
            f"{kind.value}.quadrature_error = {fmt(max(raw.error, lim.error))}",
        ]
    return lines


def cmd_distance(cfg: RunConfig, out: Path | None) -> None:
    lines = distance_lines(cfg)
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if out is not None:
        (out / "distance.txt").write_text(text)


def cmd_contract(cfg: RunConfig, out: Path) -> None:
    truth = cfg.truth()
    delta = cfg.contract_delta if cfg.contract_delta is not None else cfg.delta
    if cfg.contract_fitter == "mcmc":
        fitter = mcmc_fitter(cfg.n_iter, cfg.burn_in, cfg.thin)
    else:
        fitter = known_counts_fitter()
    report = contraction_experiment(
        truth,
        [(n, delta) for n in cfg.contract_n],
        cfg.replications,
        cfg.seed,
        hyper=cfg.hyperparameters(),
        fitter=fitter,
        radius_multiplier=cfg.radius_multiplier,
        workers=cfg.workers,
    )
    write_columns_csv(
        out / "contraction.csv",
        {
            "n": [r.n for r in report.rows],
            "delta": [r.delta for r in report.rows],
            "n_delta": [r.n_delta for r in report.rows],
            "replicate": [r.replicate for r in report.rows],
            "distance": [r.distance for r in report.rows],
            "mass_outside": [r.mass_outside for r in report.rows],
        },
    )
    lines = [
        f"slope = {fmt(report.slope)}",
        f"slope_se = {fmt(report.slope_se)}",
        f"intercept = {fmt(report.intercept)}",
        f"slope_defined = {str(report.slope_defined).lower()}",
        f"radius_multiplier = {fmt(cfg.radius_multiplier)}",
        f"failures = {len(report.failures)}",
    ]
    for n, d, dist, mass in report.cell_means():
        lines.append(f"cell n={n} delta={fmt(d)} radius={fmt(contraction_radius(n * d))} mean_distance={fmt(dist)} mean_mass_outside={fmt(mass)}")
    for r in report.failures:
        lines.append(f"failure n={r.n} replicate={r.replicate}: {r.error}")
    (out / "contraction_summary.txt").write_text("\n".join(lines) + "\n")


COMMANDS = {
    Mode.SIMULATE: cmd_simulate,
    Mode.FIT: cmd_fit,
    Mode.DIAGNOSE: cmd_diagnose,
    Mode.DISTANCE: cmd_distance,
    Mode.CONTRACT: cmd_contract,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="decompound", description="Bayesian decompounding of compound Poisson data")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="{simulate,fit,diagnose,distance,contract}")
    for mode in Mode:
        p = sub.add_parser(mode.value)
        p.add_argument("--config", required=True, type=Path, help="key = value configuration file")
        p.add_argument("--out", type=Path, help="output directory (must not exist or be empty)")
        p.add_argument("--seed", type=int, help="override the configured seed")
        if mode is Mode.FIT:
            p.add_argument("--data", type=Path, help="override the configured data file")
        if mode is Mode.DIAGNOSE:
            p.add_argument("--trace", type=Path, help="override the configured trace file")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) if exc.code in (0, None) else EXIT_CODES["usage"]
    if args.command is None:
        parser.print_usage(sys.stderr)
        sys.stderr.write("error[usage]: a subcommand is required\n")
        return EXIT_CODES["usage"]
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    mode = Mode(args.command)
    overrides = {"mode": mode, "seed": args.seed}
    if getattr(args, "data", None) is not None:
        overrides["data"] = args.data.resolve()
    if getattr(args, "trace", None) is not None:
        overrides["trace"] = args.trace.resolve()
    try:
        cfg = parse_config(args.config, overrides)
        out = _prepare_out(args.out, required=mode is not Mode.DISTANCE)
        COMMANDS[mode](cfg, out)
    except CliError as exc:
        sys.stderr.write(f"error[{exc.category}]: {exc}\n")
        return EXIT_CODES[exc.category]
    except ConfigError as exc:
        sys.stderr.write(f"error[config]: {exc}\n")
        return EXIT_CODES["config"]
    except DataError as exc:
        sys.stderr.write(f"error[data]: {exc}\n")
        return EXIT_CODES["data"]
    except (SamplerError, QuadratureError, TruncationError, FloatingPointError) as exc:
        sys.stderr.write(f"error[numerical]: {exc}\n")
        return EXIT_CODES["numerical"]
    except OSError as exc:
        sys.stderr.write(f"error[io]: {exc}\n")
        return EXIT_CODES["io"]
    return 0


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
