"""Command-line entry point: dynamics | ipr | collapse | phase-scan | scaling.

Every output file embeds the software version, RNG identity, master seed and
the fully-resolved configuration, so a run is reproducible from its own
metadata.  Exit codes: 0 success, 2 usage error, 3 numeric failure,
4 unconverged (with --strict-convergence).
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys

import numpy as np

from . import RNG_ID, __version__
from .crossover import (
    DEFAULT_TARGET,
    classify_point,
    fit_crossover_line,
    isoprobability_line,
)
from .dynamics import default_time_grid
from .ensemble import EnsembleJob, run_ensemble
from .errors import DomainError, NumericError, UnconvergedError
from .lattice import LatticeSpec
from .observables import lognormal_collapse_fit, _scaled, _fd_edges

_CSV_SCHEMA_PREFIX = "dipoloc"


def _add_common(sub):
    sub.add_argument("--n", type=int, default=None, help="sites per dimension (N)")
    sub.add_argument("--p", type=float, default=None, help="occupation probability")
    sub.add_argument("--w", type=float, default=None, help="on-site disorder width")
    sub.add_argument("--alpha", type=float, default=None, help="hopping exponent")
    sub.add_argument("--realizations", type=int, default=None, help="ensemble size")
    sub.add_argument("--seed", type=int, default=None, help="master seed")
    sub.add_argument("--time-min", type=float, default=None)
    sub.add_argument("--time-max", type=float, default=None)
    sub.add_argument("--time-points", type=int, default=None)
    sub.add_argument("--coverage", type=float, default=None, help="density coverage for L")
    sub.add_argument("--workers", type=int, default=None)
    sub.add_argument("--out", type=str, default=None, help="output directory")
    sub.add_argument("--config", type=str, default=None, help="INI config file")


_DEFAULTS = {
    "n": 15,
    "p": 0.5,
    "w": 5.0,
    "alpha": 3.0,
    "realizations": 50,
    "seed": 1,
    "time_min": 1e-1,
    "time_max": 1e17,
    "time_points": 60,
    "coverage": 0.9,
    "workers": 1,
    "out": ".",
    "shell_width": 0.5,
    "edge_lo": 0.1,
    "edge_hi": 0.9,
    "p_list": "0.2,0.4,0.6,0.8",
    "w_list": "2,5,10,20",
    "n_list": "21,31,41,101",
    "p_grid": "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8",
    "target": DEFAULT_TARGET,
    "strict_convergence": False,
}


def _resolve(args, section: str) -> dict:
    """Defaults < config-file section < explicit CLI flags."""
    cfg = dict(_DEFAULTS)
    if args.config:
        parser = configparser.ConfigParser()
        if not parser.read(args.config):
            raise DomainError(f"config file not found: {args.config}")
        if parser.has_section(section):
            for key, value in parser.items(section):
                key = key.replace("-", "_")
                if key not in cfg:
                    raise DomainError(f"unknown config key {key!r} in [{section}]")
                base = cfg[key]
                if isinstance(base, bool):
                    cfg[key] = value.lower() in ("1", "true", "yes")
                elif isinstance(base, int):
                    cfg[key] = int(value)
                elif isinstance(base, float):
                    cfg[key] = float(value)
                else:
                    cfg[key] = value
    for key in cfg:
        val = getattr(args, key, None)
        if val is not None and val is not False:
            cfg[key] = val
    return cfg


def _metadata(cfg: dict) -> dict:
    return {
        "software_version": __version__,
        "rng_id": RNG_ID,
        "master_seed": cfg["seed"],
        # the output directory and worker count are execution details that do
        # not affect results; echoing them would make otherwise identical
        # runs byte-different
        "config": {k: cfg[k] for k in sorted(cfg) if k not in ("out", "workers")},
    }


def _write_csv(path, schema: str, meta: dict, header, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# schema={_CSV_SCHEMA_PREFIX}.{schema}.v1\n")
        for key, value in sorted(meta.items()):
            if key == "config":
                value = json.dumps(value, sort_keys=True)
            fh.write(f"# {key}={value}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(v) if isinstance(v, float) else str(v) for v in row) + "\n")


def _write_json(path, payload: dict):
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _make_job(cfg: dict, observables, time_grid=None) -> EnsembleJob:
    spec = LatticeSpec(
        n_per_dim=cfg["n"], occupation=cfg["p"], disorder_width=cfg["w"], alpha=cfg["alpha"]
    )
    return EnsembleJob(
        spec=spec,
        n_realizations=cfg["realizations"],
        master_seed=cfg["seed"],
        time_grid=() if time_grid is None else tuple(time_grid),
        observables=frozenset(observables),
        coverage=cfg["coverage"],
        shell_width=cfg["shell_width"],
        workers=cfg["workers"],
        record_path=os.path.join(cfg["out"], "records.jsonl"),
    )


def _grid(cfg) -> np.ndarray:
    return default_time_grid(cfg["time_min"], cfg["time_max"], cfg["time_points"])


def cmd_dynamics(args) -> int:
    cfg = _resolve(args, "dynamics")
    os.makedirs(cfg["out"], exist_ok=True)
    grid = _grid(cfg)
    job = _make_job(cfg, {"L_of_t", "ipr"}, grid)
    summary = run_ensemble(job, progress=_progress(cfg))
    meta = _metadata(cfg)
    payload = summary.to_dict()
    payload["metadata"] = meta
    _write_json(os.path.join(cfg["out"], "summary.json"), payload)
    se = summary.se_l if summary.se_l is not None else np.full(len(grid), np.nan)
    rows = zip(grid.tolist(), summary.mean_l.tolist(), se.tolist())
    _write_csv(
        os.path.join(cfg["out"], "l_of_t.csv"),
        "l_of_t",
        {**meta, "n_per_dim": cfg["n"]},
        ["time", "mean_L", "se_L"],
        rows,
    )
    return _convergence_exit(cfg, summary)


def cmd_ipr(args) -> int:
    cfg = _resolve(args, "ipr")
    os.makedirs(cfg["out"], exist_ok=True)
    job = _make_job(cfg, {"ipr"})
    summary = run_ensemble(job, progress=_progress(cfg))
    meta = _metadata(cfg)
    payload = summary.to_dict()
    payload["metadata"] = meta
    _write_json(os.path.join(cfg["out"], "summary.json"), payload)
    edges = np.linspace(0.0, 1.0, len(summary.ipr_hist) + 1)
    rows = zip(edges[:-1].tolist(), edges[1:].tolist(), summary.ipr_hist.tolist())
    _write_csv(
        os.path.join(cfg["out"], "ipr_hist.csv"),
        "ipr_hist",
        {**meta, "i_min_ratio_min": summary.i_min_ratio_min},
        ["bin_lo", "bin_hi", "count"],
        rows,
    )
    return 0


def cmd_collapse(args) -> int:
    cfg = _resolve(args, "collapse")
    os.makedirs(cfg["out"], exist_ok=True)
    grid = _grid(cfg)
    job = _make_job(cfg, {"shells"}, grid)
    summary = run_ensemble(job, progress=_progress(cfg))
    meta = _metadata(cfg)
    fit = lognormal_collapse_fit(summary.pooled_shells)
    _write_json(
        os.path.join(cfg["out"], "collapse_fit.json"),
        {
            "schema": "dipoloc.collapse_fit.v1",
            "loc_length": fit.loc_length,
            "sigma": fit.sigma,
            "goodness": fit.goodness,
            "shells_used": list(fit.shells_used),
            "metadata": meta,
        },
    )
    rows = []
    for r in fit.shells_used:
        x = _scaled(summary.pooled_shells[r], r, fit.loc_length, fit.sigma)
        edges = _fd_edges(x)
        hist, _ = np.histogram(x, bins=edges, density=True)
        for lo, hi, h in zip(edges[:-1], edges[1:], hist):
            rows.append((float(r), float(lo), float(hi), float(h)))
    _write_csv(
        os.path.join(cfg["out"], "shell_hist.csv"),
        "shell_hist",
        meta,
        ["radius", "x_lo", "x_hi", "density"],
        rows,
    )
    payload = summary.to_dict()
    payload["metadata"] = meta
    _write_json(os.path.join(cfg["out"], "summary.json"), payload)
    return 0


def _parse_list(text) -> list:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def cmd_phase_scan(args) -> int:
    cfg = _resolve(args, "phase-scan")
    os.makedirs(cfg["out"], exist_ok=True)
    grid = _grid(cfg)
    meta = _metadata(cfg)
    rows = []
    summaries = []
    unconverged = 0
    for p in _parse_list(cfg["p_list"]):
        for w in _parse_list(cfg["w_list"]):
            point_dir = os.path.join(cfg["out"], "points")
            os.makedirs(point_dir, exist_ok=True)
            spec = LatticeSpec(n_per_dim=cfg["n"], occupation=p, disorder_width=w,
                               alpha=cfg["alpha"])
            job = EnsembleJob(
                spec=spec,
                n_realizations=cfg["realizations"],
                master_seed=cfg["seed"],
                time_grid=tuple(grid),
                observables=frozenset({"L_of_t"}),
                coverage=cfg["coverage"],
                workers=cfg["workers"],
                record_path=os.path.join(point_dir, f"records_p{p:g}_w{w:g}.jsonl"),
            )
            summary = run_ensemble(job, progress=_progress(cfg))
            label = classify_point(
                summary, spec, lo=cfg["edge_lo"], hi=cfg["edge_hi"], require_converged=False
            )
            if not summary.converged:
                unconverged += 1
            rows.append(
                (float(p), float(w), float(summary.mean_l[-1]), summary.edge_fraction, label)
            )
            payload = summary.to_dict()
            payload["classification"] = label
            summaries.append(payload)
    _write_csv(
        os.path.join(cfg["out"], "phase_grid.csv"),
        "phase_grid",
        {**meta, "n_per_dim": cfg["n"]},
        ["p", "w", "mean_final_L", "edge_fraction", "classification"],
        rows,
    )
    _write_json(
        os.path.join(cfg["out"], "summaries.json"),
        {"schema": "dipoloc.phase_summaries.v1", "metadata": meta, "points": summaries},
    )
    if unconverged and cfg["strict_convergence"]:
        raise UnconvergedError(f"{unconverged} phase-scan points unconverged")
    return 0


def cmd_scaling(args) -> int:
    cfg = _resolve(args, "scaling")
    os.makedirs(cfg["out"], exist_ok=True)
    meta = _metadata(cfg)
    p_grid = _parse_list(cfg["p_grid"])
    lines = []
    for n in [int(v) for v in _parse_list(cfg["n_list"])]:
        line = isoprobability_line(n, cfg["target"], p_grid)
        lines.append(line)
        _write_csv(
            os.path.join(cfg["out"], f"line_N{n}.csv"),
            "scaling_line",
            {**meta, "n_per_dim": n, "target": cfg["target"]},
            ["p", "w_solved"],
            zip(line.p_values, line.w_values),
        )
    fit = fit_crossover_line(lines)
    _write_json(
        os.path.join(cfg["out"], "fit.json"),
        {
            "schema": "dipoloc.scaling_fit.v1",
            "A": fit.fit_a,
            "B": fit.fit_b,
            "rms_residual": fit.rms_residual,
            "N_list": list(fit.n_list),
            "target": fit.target,
            "metadata": meta,
        },
    )
    return 0


def _progress(cfg):
    if not sys.stderr.isatty():
        return None
    state = {"done": 0}

    def advance(rec):
        state["done"] += 1
        sys.stderr.write(f"\r{state['done']}/{cfg['realizations']} realizations")
        sys.stderr.flush()

    return advance


def _convergence_exit(cfg, summary) -> int:
    if cfg["strict_convergence"] and not summary.converged:
        raise UnconvergedError("ensemble did not meet the convergence criterion")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dipoloc",
        description="Localization of dipolar-hopping particles on finite diluted lattices",
    )
    parser.add_argument("--version", action="version", version=f"dipoloc {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    sp = subs.add_parser("dynamics", help="ensemble wavepacket-size curves L(t)")
    _add_common(sp)
    sp.add_argument("--strict-convergence", action="store_true", default=False)
    sp.set_defaults(func=cmd_dynamics)

    sp = subs.add_parser("ipr", help="eigenstate IPR distributions")
    _add_common(sp)
    sp.set_defaults(func=cmd_ipr)

    sp = subs.add_parser("collapse", help="log-normal shell histograms and fit")
    _add_common(sp)
    sp.add_argument("--shell-width", type=float, default=None)
    sp.set_defaults(func=cmd_collapse)

    sp = subs.add_parser("phase-scan", help="(p, w) crossover grid")
    _add_common(sp)
    sp.add_argument("--p-list", type=str, default=None, help="comma-separated p values")
    sp.add_argument("--w-list", type=str, default=None, help="comma-separated w values")
    sp.add_argument("--edge-lo", type=float, default=None)
    sp.add_argument("--edge-hi", type=float, default=None)
    sp.add_argument("--strict-convergence", action="store_true", default=False)
    sp.set_defaults(func=cmd_phase_scan)

    sp = subs.add_parser("scaling", help="isoprobability lines and (A, B) fit")
    _add_common(sp)
    sp.add_argument("--n-list", type=str, default=None, help="comma-separated N values")
    sp.add_argument("--p-grid", type=str, default=None, help="comma-separated p values")
    sp.add_argument("--target", type=float, default=None, help="no-resonance probability")
    sp.set_defaults(func=cmd_scaling)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except UnconvergedError as exc:
        print(f"unconverged: {exc}", file=sys.stderr)
        return 4
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
