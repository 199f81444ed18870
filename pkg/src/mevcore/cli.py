"""Command-line experiment runner.

Subcommands: analyze-game, simulate, sweep, calibrate, phi, empirics,
synthesize. Output goes to stdout unless ``--out`` is given; files are written
atomically so a failed run leaves nothing behind.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import bundles, empirics, game_core, mechanisms, stochastic


class CLIError(Exception):
    pass


def _atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(args, text: str) -> None:
    if args.out:
        _atomic_write(Path(args.out), text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _flat_csv(obj: dict) -> str:
    """Two-column key,value rendering of a nested record."""
    rows = []

    def walk(prefix, v):
        if isinstance(v, dict):
            for k, sub in v.items():
                walk(f"{prefix}.{k}" if prefix else k, sub)
        elif isinstance(v, (list, tuple)) and any(isinstance(e, dict) for e in v):
            for i, sub in enumerate(v):
                walk(f"{prefix}[{i}]", sub)
        elif isinstance(v, (list, tuple)):
            rows.append((prefix, " ".join("" if e is None else _scalar(e) for e in v)))
        else:
            rows.append((prefix, "" if v is None else _scalar(v)))

    walk("", obj)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    w.writerows(rows)
    return buf.getvalue()


def _scalar(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _render(args, record: dict, default: str = "json") -> str:
    fmt = args.format or default
    return _json(record) if fmt == "json" else _flat_csv(record)


# -- analyze-game ------------------------------------------------------------


def analyze_report(game: game_core.ExplicitGame, matrix=None, capacity=None) -> dict:
    diag = game_core.validate_game(game)
    report = {
        "n_searchers": game.n_searchers,
        "n_blocks": game.n_blocks,
        "grand_value": game_core.grand_value(game),
        "marginals": [float(v) for v in game_core.marginals(game)],
        "diagnostics": diag.to_dict(),
        "validator_optimal": game_core.validator_optimal_allocation(game).to_dict(),
        "searcher_optimal": None,
        "vcg": None,
    }
    if diag.is_submodular:
        report["searcher_optimal"] = game_core.searcher_optimal_allocation(game).to_dict()
    if game.is_passive:
        report["vcg"] = mechanisms.vcg_payments(game).to_dict()
    if matrix is not None:
        report["validator_floor"] = list(bundles.validator_floor(matrix).per_opportunity)
        if capacity is None:
            report["gsp"] = mechanisms.gsp_bundle_auction(matrix).to_dict()
        else:
            report["capacity"] = bundles.capacity_floor_diagnostic(matrix, capacity).to_dict()
    return report


def cmd_analyze_game(args) -> None:
    path = Path(args.file)
    matrix = None
    try:
        if path.suffix.lower() == ".csv":
            matrix = bundles.load_matrix(path)
            game = bundles.to_general_game(matrix, args.capacity)
        else:
            if args.capacity is not None:
                raise CLIError("--capacity applies to matrix (.csv) inputs only")
            game = game_core.load_game(path)
    except ValueError as exc:
        raise CLIError(f"{path}: {exc}") from exc
    _emit(args, _render(args, analyze_report(game, matrix, args.capacity)))


# -- simulate / sweep ------------------------------------------------------------


def _sim_params(args) -> dict:
    params = {}
    if args.config:
        try:
            with open(args.config) as fh:
                params = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CLIError(f"{args.config}: line {exc.lineno}: {exc.msg}") from exc
        if not isinstance(params, dict):
            raise CLIError(f"{args.config}: expected a JSON object")
    for key in ("n", "m", "p", "capacity", "trials"):
        v = getattr(args, key, None)
        if v is not None:
            params[key] = v
    if getattr(args, "alpha", None) is not None:
        if "m" not in params:
            raise CLIError("--alpha needs m")
        params["capacity"] = stochastic.capacity_for(args.alpha, params["m"])
    params["seed"] = args.seed
    return params


def cmd_simulate(args) -> None:
    params = _sim_params(args)
    missing = {"n", "m", "p"} - set(params)
    if missing:
        raise CLIError(f"missing parameters: {', '.join(sorted(missing))}")
    cfg = stochastic.SimConfig.from_dict(params)
    report = stochastic.run_trials(cfg).to_dict()
    exact = vars(stochastic.exact_event_probabilities(cfg.n, cfg.m, cfg.p))
    if cfg.capacity is not None:
        # these closed forms assume unit values and no capacity
        exact["p_no_singleton"] = exact["p_searchers_take_all_given_positive"] = None
    report["exact"] = exact
    _emit(args, _render(args, report))


def _p_grid(args, n: int) -> list[float]:
    if args.p_grid:
        try:
            return [float(s) for s in args.p_grid.split(",") if s.strip()]
        except ValueError as exc:
            raise CLIError(f"--p-grid: {exc}") from exc
    if args.p_min is None or args.p_max is None:
        # default: bracket the 2 ln(n)/n threshold
        centre = 2 * math.log(n) / n if n > 1 else 0.5
        lo, hi = centre / 4, min(1.0, centre * 2)
    else:
        lo, hi = args.p_min, args.p_max
    return [float(v) for v in np.linspace(lo, hi, args.p_steps)]


def cmd_sweep(args) -> None:
    params = _sim_params(args)
    missing = {"n", "m"} - set(params)
    if missing:
        raise CLIError(f"missing parameters: {', '.join(sorted(missing))}")
    grid = _p_grid(args, params["n"])
    rows = stochastic.threshold_sweep(
        params["n"],
        params["m"],
        grid,
        trials=params.get("trials", 1000),
        seed=params["seed"],
        capacity=params.get("capacity"),
    )
    if (args.format or "csv") == "csv":
        text = stochastic.sweep_to_csv(rows)
    else:
        text = _json(stochastic.sweep_rows_as_dicts(rows))
    _emit(args, text)


# -- calibrate / phi ---------------------------------------------------------------


def _scalar_out(args, record: dict, key: str) -> str:
    if args.format is None:
        return f"{record[key]!r}\n"
    return _render(args, record)


def cmd_calibrate(args) -> None:
    p = stochastic.calibrate_p(args.n, args.q)
    record = {"n": args.n, "clash_fraction": args.q, "p": p, "p_y_lt2": stochastic.p_y_lt2(args.n, p)}
    _emit(args, _scalar_out(args, record, "p"))


def cmd_phi(args) -> None:
    phi = stochastic.solve_phi(args.alpha)
    record = {"alpha": args.alpha, "phi": phi, "residual": stochastic.phi_residual(phi, args.alpha)}
    _emit(args, _scalar_out(args, record, "phi"))


# -- empirics ----------------------------------------------------------------------


def cmd_empirics(args) -> None:
    try:
        with open(args.file, newline="") as fh:
            records = empirics.parse_backrun_csv(fh)
    except empirics.BackrunParseError as exc:
        raise CLIError(f"{args.file}: {exc}") from exc
    groups, hist, reg = empirics.analyze(records, args.bin_width, args.weighted)
    fmt = args.format or "csv"
    if fmt == "csv":
        parts = {
            "medians.csv": empirics.groups_to_csv(groups),
            "histogram.csv": empirics.histogram_to_csv(hist),
            "regression.json": reg.to_json() + "\n",
        }
    else:
        doc = {
            "medians": [
                {"backrun_count": g.backrun_count, "median_profit": float(f"{g.median:.6g}"), "group_size": g.size}
                for g in groups
            ],
            "histogram": [{"bin_low": b.low, "bin_high": b.high, "count": b.count} for b in hist],
            "regression": json.loads(reg.to_json()),
        }
        parts = {"empirics.json": _json(doc)}
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for name, text in parts.items():
            _atomic_write(out / name, text)
    else:
        for name, text in parts.items():
            sys.stdout.write(f"# {name}\n{text}")


def cmd_synthesize(args) -> None:
    records = empirics.synthesize_backruns(args.targets, args.n, args.p, args.seed, profit=args.profit)
    _emit(args, empirics.records_to_csv(records))


# -- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mevcore", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed_required=False):
        p.add_argument("--seed", type=int, required=seed_required, default=None if seed_required else 0)
        p.add_argument("--out", help="output file (directory for empirics)")
        p.add_argument("--format", choices=["csv", "json"], default=None)
        return p

    p = common(sub.add_parser("analyze-game", help="core, VCG and GSP report for a game (.json) or bundle matrix (.csv)"))
    p.add_argument("file")
    p.add_argument("--capacity", type=int)
    p.set_defaults(func=cmd_analyze_game)

    for name, func, help_ in [
        ("simulate", cmd_simulate, "Monte Carlo trials of the Bernoulli competition model"),
        ("sweep", cmd_sweep, "Monte Carlo vs exact probabilities over a grid of p"),
    ]:
        p = common(sub.add_parser(name, help=help_), seed_required=True)
        p.add_argument("--config", help="JSON file with SimConfig fields; flags override it")
        p.add_argument("--n", type=int)
        p.add_argument("--m", type=int)
        p.add_argument("--trials", type=int)
        cap = p.add_mutually_exclusive_group()
        cap.add_argument("--capacity", type=int)
        cap.add_argument("--alpha", type=float, help="capacity ceil((1 - alpha) m)")
        if name == "simulate":
            p.add_argument("--p", type=float)
        else:
            p.add_argument("--p-grid", help="comma-separated p values")
            p.add_argument("--p-min", type=float)
            p.add_argument("--p-max", type=float)
            p.add_argument("--p-steps", type=int, default=9)
        p.set_defaults(func=func)

    p = common(sub.add_parser("calibrate", help="p with P[Y < 2] = q for n searchers"))
    p.add_argument("n", type=int)
    p.add_argument("q", type=float)
    p.set_defaults(func=cmd_calibrate)

    p = common(sub.add_parser("phi", help="root of (1 + phi) e^-phi = alpha / e"))
    p.add_argument("alpha", type=float)
    p.set_defaults(func=cmd_phi)

    p = common(sub.add_parser("empirics", help="median profit by backrun count, histogram and OLS"))
    p.add_argument("file")
    p.add_argument("--bin-width", type=int, default=5)
    p.add_argument("--weighted", action="store_true", help="weight groups by size in the regression")
    p.set_defaults(func=cmd_empirics)

    p = common(sub.add_parser("synthesize", help="backrun records drawn from the competition model"), seed_required=True)
    p.add_argument("--targets", type=int, default=10_000)
    p.add_argument("--n", type=int, default=125)
    p.add_argument("--p", type=float, default=0.03)
    p.add_argument("--profit", choices=["floor", "unit"], default="floor")
    p.set_defaults(func=cmd_synthesize)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (CLIError, ValueError, OSError, IndexError) as exc:
        print(f"mevcore: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
