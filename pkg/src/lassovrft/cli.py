"""Command-line experiment driver.

Verbs: ``generate``, ``design``, ``evaluate`` and ``experiment``, each taking
``--config <path>`` to a JSON experiment file. Exit codes: 0 success,
1 configuration error, 2 runtime or data error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .closed_loop import (ClosedLoopResult, DictionaryController, eval_reference,
                          ideal_controller, simulate_closed_loop)
from .config import ConfigError, DesignSpec, ExperimentConfig
from .plant import NoiseSpec, builtin_plant, excitation_filter, gen_input, simulate_plant
from .solvers import ControllerParams, lasso_cd, nonzero_count, ols_solve
from .vrft import Dataset, DataFormatError, build_regression, read_dataset_csv, write_dataset_csv

log = logging.getLogger("lassovrft")


class RunError(RuntimeError):
    """Failure while executing a pipeline step (I/O or data)."""


def _outdir(cfg: ExperimentConfig, path=None) -> Path:
    out = Path(path if path is not None else cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise RunError(f"cannot create output directory {out}: {exc}") from None
    return out


def _write_json(path: Path, doc: dict) -> None:
    try:
        path.write_text(json.dumps(doc, indent=2))
    except OSError as exc:
        raise RunError(f"cannot write {path}: {exc}") from None


# -- pipeline steps -----------------------------------------------------------

def make_dataset(cfg: ExperimentConfig) -> Dataset:
    u = gen_input(cfg.input_kind, cfg.N, cfg.amplitude, cfg.seed, cfg.td, cfg.dwell)
    y = simulate_plant(builtin_plant(cfg.plant), u, NoiseSpec(cfg.sigma, cfg.noise_seed))
    return Dataset(u, y)


def cmd_generate(cfg: ExperimentConfig, out=None) -> Path:
    out = _outdir(cfg, out)
    data = make_dataset(cfg)
    f, a = excitation_filter(cfg.td)
    csv_path = out / "dataset.csv"
    try:
        write_dataset_csv(csv_path, data.u, data.y)
    except OSError as exc:
        raise RunError(f"cannot write {csv_path}: {exc}") from None
    _write_json(out / "dataset.json", {
        "plant": cfg.plant, "seed": cfg.seed, "noise_seed": cfg.noise_seed, "sigma": cfg.sigma,
        "excitation_filter": f.to_dict(), "filter_gain_a": a, "config": cfg.to_dict(),
    })
    return csv_path


def design(cfg: ExperimentConfig, data: Dataset, spec: DesignSpec | None = None,
           alpha: float | None = None, rho0=None) -> ControllerParams:
    spec = spec or DesignSpec(cfg.dictionary, cfg.solver, cfg.alpha)
    problem = build_regression(data, cfg.td, cfg.dictionary_obj(spec.dictionary))
    if spec.solver == "ols":
        return ols_solve(problem)
    a = spec.alphas[0] if alpha is None else alpha
    return lasso_cd(problem, a, cfg.tol, cfg.max_iter, rho0=rho0, stopping=cfg.stopping,
                    objective_scaling=cfg.objective_scaling, standardize=cfg.standardize)


def summary_line(params: ControllerParams) -> str:
    d = params.diagnostics
    conv = d.get("converged", True)
    return (f"m={params.dictionary.m} nonzero={nonzero_count(params)} "
            f"objective={d.get('objective', float('nan')):.6g} converged={str(conv).lower()}")


def cmd_design(cfg: ExperimentConfig, dataset_path=None, out=None) -> Path:
    out = _outdir(cfg, out)
    dataset_path = Path(dataset_path) if dataset_path else out / "dataset.csv"
    try:
        data = read_dataset_csv(dataset_path)
    except FileNotFoundError:
        raise RunError(f"dataset not found: {dataset_path}") from None
    params = design(cfg, data)
    path = out / "controller.json"
    try:
        params.save(path, {"config": cfg.to_dict(), "dataset": str(dataset_path)})
    except OSError as exc:
        raise RunError(f"cannot write {path}: {exc}") from None
    print(summary_line(params))
    return path


def evaluate(cfg: ExperimentConfig, controller, seed: int | None = None) -> ClosedLoopResult:
    r = eval_reference(cfg.reference_amplitudes, cfg.reference_dwell)
    ctrl = controller if not isinstance(controller, ControllerParams) else DictionaryController(controller)
    noise = NoiseSpec(cfg.eval_sigma, cfg.noise_seed + 1 if seed is None else seed)
    return simulate_closed_loop(builtin_plant(cfg.plant), ctrl, r, cfg.td, noise, cfg.oscillation_tol)


def cmd_evaluate(cfg: ExperimentConfig, controller_path=None, ideal: bool = False, out=None) -> Path:
    out = _outdir(cfg, out)
    params = None
    if ideal:
        ctrl = ideal_controller(cfg.plant)
    else:
        controller_path = Path(controller_path) if controller_path else out / "controller.json"
        try:
            params = ControllerParams.load(controller_path)
        except FileNotFoundError:
            raise RunError(f"controller file not found: {controller_path}") from None
        except (KeyError, ValueError, TypeError) as exc:
            raise RunError(f"{controller_path}: malformed controller file ({exc})") from None
        if params.dictionary != cfg.dictionary_obj():
            raise ConfigError(
                f"controller dictionary {params.dictionary.to_dict()} does not match config "
                f"dictionary {cfg.dictionary}")
        ctrl = params
    res = evaluate(cfg, ctrl)
    try:
        res.write_csv(out / "closed_loop.csv")
    except OSError as exc:
        raise RunError(f"cannot write results: {exc}") from None
    doc = res.summary(params)
    doc["controller"] = "ideal" if ideal else str(controller_path)
    doc["config"] = cfg.to_dict()
    _write_json(out / "closed_loop.json", doc)
    print(json.dumps({k: doc[k] for k in ("J", "stable", "divergence_index", "nonzero_count")}))
    return out / "closed_loop.json"


# -- experiment matrix ----------------------------------------------------------

@dataclass
class Cell:
    seed: int
    label: str
    dictionary: str
    m: int
    solver: str
    alpha: float
    nonzero: int | None = None
    J: float | None = None
    stable: bool | None = None
    converged: bool | None = None
    controller_file: str | None = None
    error: str | None = None

    def row(self) -> dict:
        return dict(self.__dict__)


def run_experiment(cfg: ExperimentConfig, out=None, write: bool = True) -> dict:
    """Generate data, design every cell of the matrix, evaluate, and report.

    Each seed in ``cfg.seed_list`` gets its own dataset; every design of that
    seed is fit to the same data. Failures are recorded per cell.
    """
    specs = cfg.design_specs()
    if not specs:
        raise ConfigError("experiment needs a nonempty 'designs' list")
    out = _outdir(cfg, out) if write else None
    cells: list[Cell] = []
    index = 0
    for seed in cfg.seed_list:
        scfg = cfg.replace(seed=seed, seeds=None)
        data = make_dataset(scfg)
        sdir = None
        if write:
            sdir = out / f"seed{seed}"
            sdir.mkdir(exist_ok=True)
            write_dataset_csv(sdir / "dataset.csv", data.u, data.y)
            _write_json(sdir / "dataset.json", {"seed": seed, "noise_seed": scfg.noise_seed,
                                                "config": scfg.to_dict()})
        for spec in specs:
            alphas = spec.alphas
            # descending alpha with warm starts
            order = sorted(range(len(alphas)), key=lambda i: -alphas[i])
            rho = None
            for i in order:
                alpha = alphas[i]
                d = spec.dictionary
                cell = Cell(seed, spec.label(alpha), d["kind"], int(d["m"]), spec.solver, alpha)
                cell_seed = seed * 10_007 + index
                index += 1
                try:
                    params = design(scfg, data, spec, alpha, rho0=rho)
                    if spec.solver == "lasso":
                        rho = params.rho
                    res = evaluate(scfg, params, seed=cell_seed)
                    cell.nonzero = nonzero_count(params)
                    cell.J = res.J if res.stable else None
                    cell.stable = res.stable
                    cell.converged = bool(params.diagnostics.get("converged", True))
                    if write:
                        cpath = sdir / f"{cell.label}.json"
                        params.save(cpath, {"config": scfg.to_dict(), "cell": cell.label})
                        res.write_csv(sdir / f"{cell.label}_closed_loop.csv")
                        res.write_summary(sdir / f"{cell.label}_closed_loop.json", params,
                                          {"config": scfg.to_dict()})
                        cell.controller_file = str(cpath)
                except Exception as exc:  # noqa: BLE001 -- recorded per cell
                    log.warning("cell %s seed %s failed: %s", cell.label, seed, exc)
                    cell.error = f"{type(exc).__name__}: {exc}"
                cells.append(cell)
    report = {"config": cfg.to_dict(), "cells": [c.row() for c in cells],
              "aggregate": aggregate(cells)}
    if write:
        _write_json(out / "report.json", report)
        (out / "report.txt").write_text(format_table(report))
    return report


def aggregate(cells: list[Cell]) -> list[dict]:
    groups: dict[str, list[Cell]] = {}
    for c in cells:
        groups.setdefault(c.label, []).append(c)
    rows = []
    for label, cs in groups.items():
        ok = [c for c in cs if c.error is None]
        js = [c.J for c in ok if c.J is not None]
        rows.append({
            "label": label, "dictionary": cs[0].dictionary, "m": cs[0].m, "solver": cs[0].solver,
            "alpha": cs[0].alpha, "runs": len(cs), "errors": len(cs) - len(ok),
            "mean_nonzero": float(np.mean([c.nonzero for c in ok])) if ok else None,
            "stable_runs": sum(bool(c.stable) for c in ok),
            "mean_J_stable": float(np.mean(js)) if js else None,
        })
    return rows


def format_table(report: dict) -> str:
    head = f"{'dictionary':<16}{'m':>5}  {'solver':<6}{'alpha':>9}{'seed':>6}{'nonzero':>9}{'J':>12}  stable"
    lines = [head, "-" * len(head)]
    for c in report["cells"]:
        if c["error"]:
            lines.append(f"{c['dictionary']:<16}{c['m']:>5}  {c['solver']:<6}{c['alpha']:>9g}{c['seed']:>6}"
                         f"  ERROR {c['error']}")
            continue
        j = f"{c['J']:.4g}" if c["J"] is not None else "inf"
        lines.append(f"{c['dictionary']:<16}{c['m']:>5}  {c['solver']:<6}{c['alpha']:>9g}{c['seed']:>6}"
                     f"{c['nonzero']:>9}{j:>12}  {str(c['stable']).lower()}")
    lines.append("")
    lines.append("means over seeds:")
    for a in report["aggregate"]:
        nz = f"{a['mean_nonzero']:.1f}" if a["mean_nonzero"] is not None else "-"
        j = f"{a['mean_J_stable']:.4g}" if a["mean_J_stable"] is not None else "-"
        lines.append(f"  {a['label']:<24} nonzero={nz:<8} J(stable)={j:<10} stable {a['stable_runs']}/{a['runs']}")
    return "\n".join(lines) + "\n"


# -- entry point ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lassovrft", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="verb", required=True)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", required=True, help="JSON experiment file")
        sp.add_argument("--out", help="output directory (default: config output_dir)")
        sp.add_argument("-v", "--verbose", action="store_true")
        return sp

    add("generate", "simulate a plant and write dataset.csv")
    sp = add("design", "fit a controller to a dataset")
    sp.add_argument("--data", help="dataset CSV (default: <out>/dataset.csv)")
    sp = add("evaluate", "closed-loop evaluation of a controller")
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--controller", help="controller JSON (default: <out>/controller.json)")
    g.add_argument("--ideal", action="store_true", help="use the plant's exact ideal controller")
    add("experiment", "run the full design matrix and write a report")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        cfg = ExperimentConfig.load(args.config)
        if args.verb == "generate":
            path = cmd_generate(cfg, args.out)
            log.info("wrote %s", path)
        elif args.verb == "design":
            cmd_design(cfg, args.data, args.out)
        elif args.verb == "evaluate":
            cmd_evaluate(cfg, args.controller, args.ideal, args.out)
        else:
            report = run_experiment(cfg, args.out)
            print(format_table(report), end="")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (RunError, DataFormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
