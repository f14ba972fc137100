"""Command-line front end: parameter sweeps to CSV."""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Callable

import numpy as np

from . import aging, flos, metrics, prony, sampler
from .errors import DomainError
from .laplace import DEFAULT_CONTOUR, ContourSpec

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3

# (linear key, dB key) pairs; at most one of each pair may be set
DB_PAIRS = [("gamma_bar", "gamma_bar_db"), ("K", "K_db"), ("kappa", "kappa_db")]
COLUMN_NAMES = {"lam": "lambda"}

PRESETS = {
    "fig2": {"command": "pdf", "gamma_bar_db": 0.0, "lam": 5.0, "K_db": 10.0, "k": [0.5, 1, 2, 5],
             "x_max": 4.0, "points": 200},
    "fig3": {"command": "pdf", "k": 1.0, "K_db": 10.0, "lam": [0, 2, 5, 10], "gamma_bar": [1, 2],
             "x_max": 6.0, "points": 200},
    "fig4": {"command": "op", "k": 1.5, "K_db": 13.0, "lam": [0, 2, 5],
             "snr_db_min": 0.0, "snr_db_max": 50.0, "points": 51},
    "fig5": {"command": "ec", "K_db": 13.0, "lam": 0.0, "k": [0.5, 2, 8],
             "snr_db_min": 0.0, "snr_db_max": 30.0, "points": 7},
    "fig6": {"command": "aging", "N": 4, "kappa_db": 10.0, "gamma_bar_db": 10.0, "gamma_th": 1.0,
             "fd_ts": [0.005, 0.01, 0.02], "n_max": 120},
}

DEFAULTS = {
    "gamma_bar": 1.0, "K": 10.0, "k": 1.0, "lam": 0.0, "omega": None,
    "x_max": 5.0, "points": 200, "s_min": -10.0, "s_max": 0.0, "n_max": 4,
    "snr_db_min": 0.0, "snr_db_max": 50.0, "gamma_th": 1.0,
    "draws": 100_000, "seed": 0, "stream": 0,
    "N": 4, "kappa": 10.0, "fd_ts": 0.01,
    "segments": None, "M": 12, "L": 256, "reference": False,
}


def _floats(text):
    if isinstance(text, (int, float)):
        return [float(text)]
    if isinstance(text, list):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--config", help="JSON file with option values (flags take precedence)")
    p.add_argument("--output", "-o", help="CSV path (default: standard output)")
    g = p.add_argument_group("contour overrides")
    g.add_argument("--contour-epsilon", dest="contour_epsilon", type=float)
    g.add_argument("--contour-T", dest="contour_T", type=float)
    g.add_argument("--contour-nodes", dest="contour_nodes", type=int)


def _add_flos(p: argparse.ArgumentParser):
    g = p.add_argument_group("distribution (comma lists sweep)")
    g.add_argument("--gamma-bar", dest="gamma_bar")
    g.add_argument("--gamma-bar-db", dest="gamma_bar_db")
    g.add_argument("--K", dest="K")
    g.add_argument("--K-db", dest="K_db")
    g.add_argument("--k", dest="k")
    g.add_argument("--lambda", dest="lam")
    g.add_argument("--omega", dest="omega")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flos", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_ in [("pdf", "SNR density"), ("cdf", "SNR distribution function")]:
        p = sub.add_parser(name, help=help_)
        _add_common(p)
        _add_flos(p)
        p.add_argument("--x-max", dest="x_max", type=float)
        p.add_argument("--points", type=int)

    p = sub.add_parser("mgf", help="moment generating function on a real grid")
    _add_common(p)
    _add_flos(p)
    p.add_argument("--s-min", dest="s_min", type=float)
    p.add_argument("--s-max", dest="s_max", type=float)
    p.add_argument("--points", type=int)

    p = sub.add_parser("moments", help="raw moments 1..n-max")
    _add_common(p)
    _add_flos(p)
    p.add_argument("--n-max", dest="n_max", type=int)

    for name, help_ in [("op", "outage probability vs gamma_bar/gamma_th"), ("ec", "ergodic capacity vs gamma_bar")]:
        p = sub.add_parser(name, help=help_)
        _add_common(p)
        _add_flos(p)
        p.add_argument("--snr-db-min", dest="snr_db_min", type=float)
        p.add_argument("--snr-db-max", dest="snr_db_max", type=float)
        p.add_argument("--points", type=int)
        if name == "ec":
            p.add_argument("--reference", action="store_true", default=None,
                           help="add the quadrature reference column")

    p = sub.add_parser("sample", help="Monte Carlo draws against the analytic CDF")
    _add_common(p)
    _add_flos(p)
    p.add_argument("--draws", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--stream", type=int)
    p.add_argument("--x-max", dest="x_max", type=float)
    p.add_argument("--points", type=int)

    p = sub.add_parser("aging", help="coverage probability vs time index under channel aging")
    _add_common(p)
    p.add_argument("--N", dest="N", type=int)
    p.add_argument("--kappa", dest="kappa")
    p.add_argument("--kappa-db", dest="kappa_db")
    p.add_argument("--fd-ts", dest="fd_ts")
    p.add_argument("--gamma-bar", dest="gamma_bar")
    p.add_argument("--gamma-bar-db", dest="gamma_bar_db")
    p.add_argument("--gamma-th", dest="gamma_th", type=float)
    p.add_argument("--n-max", dest="n_max", type=int)

    p = sub.add_parser("fit-log1p", help="fit ln(1+x) and write the fit as JSON")
    p.add_argument("--config")
    p.add_argument("--output", "-o")
    p.add_argument("--x-max", dest="x_max", type=float)
    p.add_argument("--segments", help="comma-separated segment edges starting at 0")
    p.add_argument("--M", dest="M", type=int)
    p.add_argument("--L", dest="L", type=int)

    sub.add_parser("selftest", help="run the invariant checks and print a table")
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    """Merge defaults, preset, JSON config and flags (in that order)."""
    cfg = dict(DEFAULTS)
    flags = {k: v for k, v in vars(args).items() if v is not None}
    if flags.get("preset"):
        preset = dict(PRESETS[flags["preset"]])
        if preset.pop("command") != args.command:
            raise DomainError(f"preset {flags['preset']} does not apply to '{args.command}'")
        layered = [preset]
    else:
        layered = []
    if flags.get("config"):
        with open(flags["config"], encoding="utf-8") as fh:
            layered.append(json.load(fh))
    layered.append(flags)
    for layer in layered:
        for lin, db in DB_PAIRS:
            if lin in layer and db in layer:
                raise DomainError(f"give either {lin} or {db}, not both")
            if db in layer:
                cfg.pop(lin, None)
                cfg[db] = layer[db]
            elif lin in layer:
                cfg.pop(db, None)
                cfg[lin] = layer[lin]
        cfg.update({k: v for k, v in layer.items() if k not in dict(DB_PAIRS) and k not in dict(DB_PAIRS).values()})
    # convert dB once at the boundary
    for lin, db in DB_PAIRS:
        if db in cfg:
            cfg[lin] = [10.0 ** (v / 10.0) for v in _floats(cfg.pop(db))]
    return cfg


def _sweep(cfg: dict, keys: list[str]) -> list[tuple[str, dict]]:
    lists = {}
    for key in keys:
        if cfg.get(key) is None:
            lists[key] = [None]
        else:
            lists[key] = _floats(cfg[key])
    swept = [k for k in keys if len(lists[k]) > 1]
    runs = []
    for combo in itertools.product(*(lists[k] for k in keys)):
        values = dict(zip(keys, combo))
        suffix = "".join(f"_{COLUMN_NAMES.get(k, k)}={_label(values[k])}" for k in swept)
        runs.append((suffix, values))
    return runs


def _label(v: float) -> str:
    text = repr(float(v))
    return text[:-2] if text.endswith(".0") else text


def _fmt(v: float) -> str:
    return "%.17g" % v


def _params(v: dict) -> flos.FLoSParams:
    return flos.FLoSParams(gamma_bar=v["gamma_bar"], K=v["K"], k=v["k"], lam=v["lam"], omega=v["omega"])


def _contour(cfg: dict) -> ContourSpec:
    keys = {"contour_epsilon": "epsilon", "contour_T": "T", "contour_nodes": "nodes"}
    return replace(DEFAULT_CONTOUR, **{f: cfg[k] for k, f in keys.items() if cfg.get(k) is not None})


def _threads() -> int:
    return max(1, int(os.environ.get("FLOS_THREADS", "1")))


def _columns(runs, fn: Callable) -> list:
    """Evaluate ``fn(values)`` per sweep point in a pool, keeping input order."""
    values = [v for _, v in runs]
    if _threads() == 1 or len(values) == 1:
        return [fn(v) for v in values]
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        return list(pool.map(fn, values))


def write_csv(path, header: list[str], columns: list) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in zip(*columns):
        writer.writerow([_fmt(float(v)) for v in row])
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


def _grid(lo: float, hi: float, points: int) -> np.ndarray:
    if points < 2 or not hi > lo:
        raise DomainError("need points >= 2 and an increasing range")
    return np.linspace(lo, hi, points)


def cmd_density(cfg, which):
    runs = _sweep(cfg, ["gamma_bar", "K", "k", "lam", "omega"])
    x = _grid(0.0, float(cfg["x_max"]), int(cfg["points"]))
    fn = flos.pdf if which == "pdf" else flos.cdf
    contour = _contour(cfg)
    cols = _columns(runs, lambda v: fn(_params(v), x, contour))
    return ["x"] + [which + s for s, _ in runs], [x] + cols


def cmd_mgf(cfg):
    runs = _sweep(cfg, ["gamma_bar", "K", "k", "lam", "omega"])
    s = _grid(float(cfg["s_min"]), float(cfg["s_max"]), int(cfg["points"]))
    cols = _columns(runs, lambda v: np.array([flos.mgf(_params(v), si) for si in s]))
    return ["s"] + ["mgf" + sfx for sfx, _ in runs], [s] + cols


def cmd_moments(cfg):
    runs = _sweep(cfg, ["gamma_bar", "K", "k", "lam", "omega"])
    n = np.arange(1, int(cfg["n_max"]) + 1)
    cols = _columns(runs, lambda v: np.array([flos.moment(_params(v), int(i)) for i in n]))
    return ["n"] + ["moment" + s for s, _ in runs], [n] + cols


def cmd_op(cfg):
    runs = _sweep(cfg, ["K", "k", "lam", "omega"])
    snr_db = _grid(float(cfg["snr_db_min"]), float(cfg["snr_db_max"]), int(cfg["points"]))
    g_th = float(cfg["gamma_th"])
    contour = _contour(cfg)

    def one(v):
        ps = [_params({**v, "gamma_bar": g_th * 10.0 ** (d / 10.0)}) for d in snr_db]
        op = np.array([metrics.outage_probability(p, g_th, contour) for p in ps])
        asym = np.array([metrics.outage_asymptotic(p, g_th) for p in ps])
        return op, asym

    header, cols = ["snr_db"], [snr_db]
    for (s, _), (op, asym) in zip(runs, _columns(runs, one)):
        header += ["op" + s, "op" + s + "_asymp"]
        cols += [op, asym]
    return header, cols


def cmd_ec(cfg):
    runs = _sweep(cfg, ["K", "k", "lam", "omega"])
    snr_db = _grid(float(cfg["snr_db_min"]), float(cfg["snr_db_max"]), int(cfg["points"]))
    gammas = 10.0 ** (snr_db / 10.0)
    with_ref = bool(cfg.get("reference"))
    contour = _contour(cfg)

    def one(v):
        out = {"ec": [], "asymp": [], "ref": []}
        for g in gammas:
            p = _params({**v, "gamma_bar": g})
            out["ec"].append(metrics.ergodic_capacity(p, contour=contour).value_bps_hz)
            out["asymp"].append(metrics.ergodic_capacity_asymptotic(p, contour=contour))
            if with_ref:
                out["ref"].append(metrics.ergodic_capacity_reference(p, contour).value_bps_hz)
        return out

    header, cols = ["snr_db"], [snr_db]
    for (s, _), res in zip(runs, _columns(runs, one)):
        header += ["ec" + s, "ec" + s + "_asymp"]
        cols += [res["ec"], res["asymp"]]
        if with_ref:
            header.append("ec" + s + "_reference")
            cols.append(res["ref"])
    header.append("awgn")
    cols.append(np.log2(1.0 + gammas))
    return header, cols


def cmd_sample(cfg):
    runs = _sweep(cfg, ["gamma_bar", "K", "k", "lam", "omega"])
    x = _grid(0.0, float(cfg["x_max"]), int(cfg["points"]))
    contour = _contour(cfg)
    header, cols = ["x"], [x]
    for idx, (s, v) in enumerate(runs):
        p = _params(v)
        stream = sampler.SeededStream(int(cfg["seed"]), int(cfg["stream"]) + idx)
        draws = sampler.sample_snr(p, stream, int(cfg["draws"]))
        ecdf = sampler.empirical_cdf(draws)(x)
        grid = np.linspace(0.0, float(np.max(draws)), 1201)
        cdf_grid = np.asarray(flos.cdf(p, grid, contour))
        ks = sampler.ks_statistic(draws, lambda d: np.interp(d, grid, cdf_grid))
        limit = 1.63 / math.sqrt(draws.size)
        print(f"ks{s}: {ks:.6g} (1% threshold {limit:.6g}) {'pass' if ks < limit else 'FAIL'}", file=sys.stderr)
        header += ["ecdf" + s, "cdf" + s]
        cols += [ecdf, flos.cdf(p, x, contour)]
    return header, cols


def cmd_aging(cfg):
    runs = _sweep(cfg, ["fd_ts"])
    gamma_bar = _floats(cfg["gamma_bar"])
    kappa = _floats(cfg["kappa"])
    if len(gamma_bar) != 1 or len(kappa) != 1:
        raise DomainError("aging sweeps only fd_ts")

    def one(v):
        ac = aging.AgingConfig(int(cfg["N"]), kappa[0], v["fd_ts"], gamma_bar[0], float(cfg["gamma_th"]))
        return aging.coverage_vs_time(ac, int(cfg["n_max"]), _contour(cfg))[1]

    n = np.arange(int(cfg["n_max"]) + 1)
    return ["n"] + ["pcov" + s for s, _ in runs], [n] + _columns(runs, one)


def cmd_fit(cfg, path):
    if cfg.get("segments"):
        edges = _floats(cfg["segments"])
        segs = [prony.Segment(a, b, int(cfg["M"]), int(cfg["L"])) for a, b in zip(edges[:-1], edges[1:])]
    else:
        segs = prony.default_segmentation(float(cfg.get("x_max") or 1024.0), int(cfg["M"]), int(cfg["L"]))
    text = prony.fit_log1p(segs).to_json() + "\n"
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run_selftest() -> bool:
    from .selftest import run_checks

    results = run_checks()
    width = max(len(name) for name, _, _ in results)
    for name, ok, detail in results:
        print(f"{name:<{width}}  {'PASS' if ok else 'FAIL'}  {detail}")
    return all(ok for _, ok, _ in results)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "selftest":
            return EXIT_OK if run_selftest() else 1
        cfg = resolve_config(args)
        if args.command == "fit-log1p":
            cmd_fit(cfg, cfg.get("output"))
            return EXIT_OK
        handlers = {
            "pdf": lambda: cmd_density(cfg, "pdf"),
            "cdf": lambda: cmd_density(cfg, "cdf"),
            "mgf": lambda: cmd_mgf(cfg),
            "moments": lambda: cmd_moments(cfg),
            "op": lambda: cmd_op(cfg),
            "ec": lambda: cmd_ec(cfg),
            "sample": lambda: cmd_sample(cfg),
            "aging": lambda: cmd_aging(cfg),
        }
        header, cols = handlers[args.command]()
        write_csv(cfg.get("output"), header, cols)
    except (ValueError, TypeError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ArithmeticError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
