"""Command-line front end.

Exit codes: 0 satisfied / success, 1 violated, 2 inconclusive,
64 usage error, 65 numeric domain error, 74 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import math
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .boxes import BipartiteBox, TripartiteBox, load_box, slice_box, xor_game_box
from .criteria import VIOLATION_TOL, evaluate
from .curves import (
    CURVE_CRITERIA,
    CurvePoint,
    SweepConfig,
    gamma_max,
    max_violation_over_eps,
    ns_bound,
    quantum_bound,
    reference_threshold,
    security_bound,
    security_threshold,
    sweep,
)

EXIT_OK, EXIT_VIOLATED, EXIT_INCONCLUSIVE = 0, 1, 2
EXIT_USAGE, EXIT_DOMAIN, EXIT_IO = 64, 65, 74
THREADS_ENV = "ICMONOGAMY_THREADS"

CHECK_CRITERIA = ("original", "generalized", "tripartite", "tripartite-ic", "tripartite-sender1", "tripartite-sender2")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _status_code(status: str) -> int:
    return {"satisfied": EXIT_OK, "violated": EXIT_VIOLATED}.get(status, EXIT_INCONCLUSIVE)


def _status_of(value: float, tol: float) -> str:
    if value > tol:
        return "violated"
    if value < -tol:
        return "satisfied"
    return "inconclusive"


def _threads(arg: int | None) -> int:
    if arg is not None:
        return arg
    env = os.environ.get(THREADS_ENV)
    if env:
        return int(env)
    return os.cpu_count() or 1


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        import tomllib  # type: ignore[import-not-found]
    except ModuleNotFoundError:
        import tomli as tomllib
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    known = {f.name for f in dataclasses.fields(SweepConfig)}
    unknown = set(data) - known
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    if "alpha_grid" in data:
        data["alpha_grid"] = tuple(float(a) for a in data["alpha_grid"])
    return data


def _sweep_config(args) -> SweepConfig:
    values = _load_config(getattr(args, "config", None))
    for name in ("criterion", "gamma_tolerance", "delta_min", "delta_points", "rhs_convention"):
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    if getattr(args, "alpha", None):
        values["alpha_grid"] = tuple(args.alpha)
    values["threads"] = _threads(getattr(args, "threads", None))
    return SweepConfig(**values)


def _config_digest(cfg: SweepConfig) -> str:
    # thread count does not change results, so it is left out of the digest
    items = [(k, v) for k, v in sorted(dataclasses.asdict(cfg).items()) if k != "threads"]
    return hashlib.sha256(repr(items).encode()).hexdigest()[:16]


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


# --- check --------------------------------------------------------------

def _box_from_args(args):
    if args.xor_game:
        return xor_game_box()
    if args.box:
        return load_box(args.box)
    if args.alpha is None or args.gamma is None:
        raise UsageError("give --alpha and --gamma, --xor-game, or --box")
    return slice_box(args.alpha, args.gamma)


def cmd_check(args) -> int:
    box = _box_from_args(args)
    crit = args.criterion
    bipartite = crit in ("original", "generalized")
    if bipartite and isinstance(box, TripartiteBox):
        box = box.marginal_ab()
    if not bipartite and isinstance(box, BipartiteBox):
        raise UsageError(f"criterion {crit} needs a tripartite box")
    if args.auto_eps:
        if bipartite:
            raise UsageError("--auto-eps is available for tripartite criteria only")
        name = "tripartite-summed" if crit == "tripartite" else crit
        opt = max_violation_over_eps(box, name, SweepConfig())
        crit = opt.binding
        eps1, eps2 = opt.eps
    else:
        eps1, eps2 = args.eps1, args.eps2
    if crit == "tripartite-ic":
        reports = [evaluate(f"tripartite-sender{k}", box, eps1, eps2, tol=args.tol) for k in (1, 2)]
        report = max(reports, key=lambda r: r.scaled_margin)
    else:
        report = evaluate(crit, box, eps1, eps2, rhs_convention=args.rhs_convention, tol=args.tol)
    sys.stdout.write(report.to_record())
    # tiny channels make both sides small; decide on the bound-scaled margin
    status = _status_of(report.scaled_margin, args.tol) if args.auto_eps else report.status
    if status != report.status:
        print(f"decision = {status} (scaled margin)")
    return _status_code(status)


# --- curve --------------------------------------------------------------

def _point_to_progress(p: CurvePoint) -> list[str]:
    return [repr(p.alpha), repr(p.gamma_max), p.criterion, repr(float(p.argmax_eps[0])), repr(float(p.argmax_eps[1])), repr(float(p.margin_at_bound))]


def _point_from_progress(row: list[str]) -> CurvePoint:
    return CurvePoint(float(row[0]), float(row[1]), row[2], (float(row[3]), float(row[4])), float(row[5]))


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_reference_curves(out: Path, n: int = 201) -> list[Path]:
    """NS, quantum and security-bound curves on beta_AB, for overlay plotting."""
    import numpy as np

    files = []
    betas = np.linspace(0.5, 1.0, n)
    specs = [
        ("reference_ns.csv", lambda b: ns_bound(b), betas),
        ("reference_quantum.csv", lambda b: quantum_bound(b), betas[betas <= 0.5 * (1 + 1 / math.sqrt(2))]),
        ("reference_security.csv", lambda b: security_bound(b), betas),
    ]
    for name, fn, bs in specs:
        path = out / name
        _write_csv(path, ("beta_ab", "beta_be_max"), [[f"{b:.12g}", f"{fn(float(b)):.12g}"] for b in bs])
        files.append(path)
    return files


def run_curve(cfg: SweepConfig, out: Path, resume: bool = True) -> tuple[list[CurvePoint], Path]:
    out.mkdir(parents=True, exist_ok=True)
    digest = _config_digest(cfg)
    progress = out / f"progress_{cfg.criterion}.txt"
    done: dict[float, CurvePoint] = {}
    if resume and progress.exists():
        lines = progress.read_text().splitlines()
        if lines and lines[0] == f"config {digest}":
            for ln in lines[1:]:
                row = ln.split(",")
                if len(row) == 6:
                    p = _point_from_progress(row)
                    done[p.alpha] = p
    if not progress.exists() or not done:
        progress.write_text(f"config {digest}\n")
    started = _now()
    todo = [a for a in sorted(cfg.alpha_grid) if a not in done]

    def record(p: CurvePoint):
        # single writer: called from the orchestrating process only
        with open(progress, "a") as fh:
            fh.write(",".join(_point_to_progress(p)) + "\n")
        done[p.alpha] = p

    if todo:
        sweep(cfg, todo, on_point=record)
    curve = [done[a] for a in sorted(cfg.alpha_grid)]
    csv_path = out / f"curve_{cfg.criterion}.csv"
    _write_csv(csv_path, CurvePoint.CSV_HEADER, [p.csv_row() for p in curve])
    refs = write_reference_curves(out)
    manifest = out / f"manifest_{cfg.criterion}.txt"
    lines = [f"tool = icmonogamy {__version__}", f"config_digest = {digest}"]
    lines += [f"config.{k} = {v}" for k, v in dataclasses.asdict(cfg).items()]
    lines += [f"started = {started}", f"finished = {_now()}"]
    lines += [f"point {a!r} = {'done' if a in done else 'pending'}" for a in sorted(cfg.alpha_grid)]
    lines += [f"sha256 {p.name} = {_sha256(p)}" for p in [csv_path, *refs]]
    manifest.write_text("\n".join(lines) + "\n")
    return curve, csv_path


def cmd_curve(args) -> int:
    cfg = _sweep_config(args)
    curve, path = run_curve(cfg, Path(args.out), resume=not args.fresh)
    print(f"wrote {path}")
    for p in curve:
        print(",".join(p.csv_row()))
    return EXIT_OK


def read_curve_csv(path) -> list[CurvePoint]:
    pts = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            pts.append(CurvePoint(float(row["alpha"]), float(row["gamma_max"]), row["criterion"],
                                  (float(row["eps1"]), float(row["eps2"])), float(row["margin"])))
    return pts


# --- threshold ----------------------------------------------------------

def cmd_threshold(args) -> int:
    crit = args.criterion
    if crit in ("ns", "quantum"):
        res = reference_threshold(crit)
    else:
        cfg = _sweep_config(args)
        if args.curve:
            curve = read_curve_csv(args.curve)
        else:
            curve, _ = run_curve(cfg, Path(args.out), resume=True)
        refine = None
        if not args.no_refine:
            refine = lambda b: gamma_max(2.0 * b - 1.0, cfg=cfg).beta_be_max  # noqa: E731
        res = security_threshold(curve, refine=refine)
    sys.stdout.write(res.to_record(crit))
    return EXIT_OK


# --- wirings ------------------------------------------------------------

def cmd_wirings(args) -> int:
    from .wiring import ranked_wirings, write_margins_csv

    box = _box_from_args(args)
    if not isinstance(box, TripartiteBox):
        raise UsageError("wiring search needs a tripartite box")
    if args.limit == (args.eps is not None):
        raise UsageError("give exactly one of --eps and --limit")
    eps = None if args.limit else args.eps
    parts = ("A|BE", "E|AB") if args.bipartition == "all" else (args.bipartition,)
    best = -math.inf
    for bp in parts:
        ranked, distinct = ranked_wirings(box, eps, bipartition=bp, top_k=args.top_k)
        print(f"bipartition {bp}: {distinct} distinct effective bias pairs over 262144 wirings")
        print("rank,index,wiring," + ("proxy" if eps is None else "margin"))
        for r, (w, v) in enumerate(ranked, 1):
            print(f"{r},{w.index},{w.to_hex()},{v:.12g}")
        best = max(best, ranked[0][1])
        if args.csv:
            path = Path(args.out) / f"{args.csv}_{bp.replace('|', '-')}.csv"
            path.parent.mkdir(parents=True, exist_ok=True)
            write_margins_csv(box, eps, path, bipartition=bp)
    status = _status_of(best, args.tol)
    print(f"best = {best:.12g}\nstatus = {status}")
    return _status_code(status)


# --- selftest -----------------------------------------------------------

def cmd_selftest(args) -> int:
    from . import selftest

    ok = selftest.run(print)
    return EXIT_OK if ok else EXIT_VIOLATED


# --- parser -------------------------------------------------------------

def _add_box_args(p):
    p.add_argument("--alpha", type=float, help="slice weight of the AB PR box")
    p.add_argument("--gamma", type=float, help="slice weight of the BE PR box")
    p.add_argument("--xor-game", action="store_true", help="use the tripartite XOR-game box")
    p.add_argument("--box", help="box file to load instead of a slice point")


def _add_sweep_args(p, criterion_default=None):
    p.add_argument("--config", help="TOML file with SweepConfig keys")
    p.add_argument("--alpha", type=float, action="append", help="alpha grid point (repeatable)")
    p.add_argument("--gamma-tolerance", type=float)
    p.add_argument("--delta-min", type=float)
    p.add_argument("--delta-points", type=int)
    p.add_argument("--rhs-convention", choices=("consistent", "printed"))
    p.add_argument("--threads", type=int, help=f"worker processes (default ${THREADS_ENV} or CPU count)")
    p.add_argument("--out", default="out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="icmonogamy", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check", help="evaluate one criterion at one point")
    _add_box_args(p)
    p.add_argument("--criterion", choices=CHECK_CRITERIA, default="tripartite-ic")
    p.add_argument("--eps1", type=float, default=0.0)
    p.add_argument("--eps2", type=float, default=0.0)
    p.add_argument("--auto-eps", action="store_true", help="optimise the channel noise")
    p.add_argument("--rhs-convention", choices=("consistent", "printed"), default="consistent")
    p.add_argument("--tol", type=float, default=VIOLATION_TOL)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("curve", help="sweep gamma_max over an alpha grid")
    p.add_argument("--criterion", choices=CURVE_CRITERIA)
    _add_sweep_args(p)
    p.add_argument("--fresh", action="store_true", help="ignore saved progress")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("threshold", help="security threshold of a curve")
    p.add_argument("--criterion", choices=CURVE_CRITERIA, required=True)
    _add_sweep_args(p)
    p.add_argument("--curve", help="existing curve CSV to use instead of sweeping")
    p.add_argument("--no-refine", action="store_true", help="interpolate instead of recomputing inside the bracket")
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("wirings", help="rank all wirings of a box")
    _add_box_args(p)
    p.add_argument("--eps", type=float)
    p.add_argument("--limit", action="store_true", help="rank by the small-capacity proxy")
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--bipartition", choices=("A|BE", "E|AB", "B|AE", "all"), default="all")
    p.add_argument("--csv", help="also write per-wiring values to OUT/CSV_<bipartition>.csv")
    p.add_argument("--out", default="out")
    p.add_argument("--tol", type=float, default=VIOLATION_TOL)
    p.set_defaults(func=cmd_wirings)

    p = sub.add_parser("selftest", help="run quick invariant checks")
    p.set_defaults(func=cmd_selftest)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"icmonogamy: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, ArithmeticError) as exc:
        print(f"icmonogamy: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"icmonogamy: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
