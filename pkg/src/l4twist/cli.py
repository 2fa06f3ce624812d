"""Command-line interface: every capability as a subcommand emitting datasets.

Outputs are plot-ready CSV/JSON files with fixed 17-significant-digit
formatting and no timestamps, so identical invocations produce byte-identical
data; run metadata (command line, version) goes to a separate sidecar file.

Exit status: 0 success, 1 argument/validation error, 2 computational failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import replace
from fractions import Fraction

import numpy as np

from . import __version__
from .dynamics import MU1, frequencies, mass_ratio_for_resonance, validate_mu
from .errors import L4TwistError
from .integrate import IntegratorConfig, default_config
from .section import SectionPoint, crossing_stream, orbit_trace, write_crossings_csv
from .rotation import DEFAULT_DIRECTION, find_fixed_point, rotation_profile
from .normalform import nf_verify, normal_form, short_period_W_of_E
from .twist import (
    action_action_chart,
    critical_mass_ratio,
    reconnection_locus_nf,
    reconnection_search_numeric,
    twistless_curve,
)
from .scan import SweepSpec, run_sweep

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_COMPUTE = 2

#: Table-1 frequency ratios between the 1/4 and 1/3 resonances
TABLE_RATIOS = (
    Fraction(4, 1),
    Fraction(11, 3),
    Fraction(7, 2),
    Fraction(10, 3),
    Fraction(16, 5),
    Fraction(3, 1),
)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


class _Parser(argparse.ArgumentParser):
    """argparse that exits with status 1 on usage errors (default is 2)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [_fmt(v) if isinstance(v, float) else v for v in row]
            )


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def _sidecar(outdir, argv):
    _write_json(
        os.path.join(outdir, "run_meta.json"),
        {"tool": "l4twist", "version": __version__, "argv": list(argv)},
    )


def _parse_pair(text, n, name):
    parts = text.split(",")
    if len(parts) != n:
        raise ValueError(f"{name} needs {n} comma-separated values")
    return [float(p) for p in parts]


def _parse_rational(text) -> Fraction:
    return Fraction(text)


def build_parser() -> _Parser:
    parser = _Parser(prog="l4twist", description=__doc__)
    parser.add_argument("--config", help="JSON file of flag defaults (flags win)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        return p

    p = add("resonance-table", "mass ratios of the rational frequency ratios (Table-1 style)")
    p.add_argument("--include-critical", action="store_true",
                   help="append the vanishing-twist mass ratio (needs a normal form)")

    p = add("section", "crossing streams for phase portraits")
    p.add_argument("--mu", type=float, required=True, help="mass ratio in (0, MU1)")
    p.add_argument("--E", type=float, required=True, help="energy level (0 at L4)")
    p.add_argument("--seed-ray", required=True,
                   help="a0,pa0,a1,pa1,count: seeds on a segment in the (a, p_a) chart")
    p.add_argument("--max-crossings", type=int, default=400)
    p.add_argument("--direction", type=int, choices=(-1, 1), default=DEFAULT_DIRECTION)
    p.add_argument("--tol", type=float, default=1e-9, help="energy-drift tolerance")

    p = add("orbit", "configuration-space trace of one section seed")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--E", type=float, required=True)
    p.add_argument("--seed", required=True, help="a,pa")
    p.add_argument("--direction", type=int, choices=(-1, 1), default=DEFAULT_DIRECTION)
    p.add_argument("--steps", type=int, default=200_000)
    p.add_argument("--sample-every", type=int, default=20)

    p = add("profile", "action vs rotation number along a ray in the island")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--E", type=float, required=True)
    p.add_argument("--seed-ray", help="a0,pa0,a1,pa1,count (default: auto ray from the fixed point)")
    p.add_argument("--max-crossings", type=int, default=1024)
    p.add_argument("--workers", type=int, default=4)

    p = add("fixed-point-contours", "fixed-point rotation numbers on a (mu, E) grid")
    p.add_argument("--grid", required=True, help="muMin,muMax,muN,EMin,EMax,EN")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--checkpoint", help="resume file (newline-delimited JSON)")

    p = add("reconnect", "reconnection locus of a rational rotation number")
    p.add_argument("--rational", required=True, help="p/q, e.g. 2/7")
    p.add_argument("--method", choices=("nf", "numeric"), default="nf")
    p.add_argument("--mu-grid", help="min,max,count (nf method)")
    p.add_argument("--E", type=float, help="energy (numeric method)")
    p.add_argument("--bracket", help="muLo,muHi (numeric method)")
    p.add_argument("--tol", type=float, default=5e-5)

    p = add("nf", "normal form coefficients as JSON")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--order", type=int, default=8)

    p = add("nf-contours", "short-period-family rotation number on a (mu, E) grid")
    p.add_argument("--grid", required=True, help="muMin,muMax,muN,EMin,EMax,EN")
    p.add_argument("--order", type=int, default=4)

    p = add("chart", "action-action chart dataset (grid + iso-lines)")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--grid-n", type=int, default=80)
    p.add_argument("--order", type=int, default=8)

    p = add("sweep", "batch (mu, E) sweep with checkpoint/resume")
    p.add_argument("--grid", required=True, help="muMin,muMax,muN,EMin,EMax,EN")
    p.add_argument("--tasks", default="fixed_point_W",
                   help="comma list: fixed_point_W,reconnection:2/7,reconnection:3/10,nf_chart")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--checkpoint", help="resume file (newline-delimited JSON)")

    return parser


def _cmd_resonance_table(args, outdir):
    rows = []
    for frac in TABLE_RATIOS:
        mu = mass_ratio_for_resonance(float(frac))
        rows.append([f"{frac.numerator}/{frac.denominator}", mu])
    if args.include_critical:
        rows.append(["c", critical_mass_ratio()])
        rows.sort(key=lambda r: -r[1])
    path = os.path.join(outdir, "resonance_table.csv")
    if args.format == "json":
        path = os.path.join(outdir, "resonance_table.json")
        _write_json(path, [{"r": r, "mu": mu} for r, mu in rows])
    else:
        _write_csv(path, ["r", "mu"], rows)
    return [path]


def _cmd_section(args, outdir):
    validate_mu(args.mu, elliptic=True)
    a0, pa0, a1, pa1, count = _parse_pair(args.seed_ray, 5, "--seed-ray")
    config = replace(default_config(args.mu), drift_tolerance=args.tol)
    points = []
    for t in np.linspace(0.0, 1.0, int(count)):
        seed = SectionPoint(
            a0 + t * (a1 - a0), pa0 + t * (pa1 - pa0), args.E, args.direction
        )
        try:
            points.extend(crossing_stream(seed, args.mu, args.max_crossings, config))
        except L4TwistError:
            continue  # seeds outside the bounded region contribute nothing
    path = os.path.join(outdir, f"section_mu{args.mu:.6f}_E{args.E:.6f}.csv")
    write_crossings_csv(path, points, args.mu)
    return [path]


def _cmd_orbit(args, outdir):
    validate_mu(args.mu, elliptic=True)
    a, pa = _parse_pair(args.seed, 2, "--seed")
    seed = SectionPoint(a, pa, args.E, args.direction)
    trace = orbit_trace(seed, args.mu, args.steps, args.sample_every)
    path = os.path.join(outdir, f"orbit_mu{args.mu:.6f}_E{args.E:.6f}.csv")
    _write_csv(path, ["t", "x", "y", "px", "py"], [list(map(float, r)) for r in trace])
    return [path]


def _cmd_profile(args, outdir):
    validate_mu(args.mu, elliptic=True)
    seeds = None
    if args.seed_ray:
        a0, pa0, a1, pa1, count = _parse_pair(args.seed_ray, 5, "--seed-ray")
        seeds = [
            SectionPoint(
                a0 + t * (a1 - a0), pa0 + t * (pa1 - pa0), args.E, DEFAULT_DIRECTION
            )
            for t in np.linspace(0.0, 1.0, int(count))
        ]
    profile = rotation_profile(
        args.mu, args.E, seeds=seeds, n_crossings=args.max_crossings,
        workers=args.workers,
    )
    path = os.path.join(outdir, f"profile_mu{args.mu:.6f}_E{args.E:.6f}.csv")
    rows = [
        [p.index, p.I, p.W, p.error, p.flag]
        for p in profile
    ]
    _write_csv(path, ["seed_index", "I", "W", "error", "flag"], rows)
    return [path]


def _parse_grid(text):
    mu_min, mu_max, mu_n, e_min, e_max, e_n = _parse_pair(text, 6, "--grid")
    return mu_min, mu_max, int(mu_n), e_min, e_max, int(e_n)


def _cmd_fixed_point_contours(args, outdir):
    g = _parse_grid(args.grid)
    spec = SweepSpec(*g, tasks=("fixed_point_W",), worker_count=args.workers)
    path = os.path.join(outdir, "fixed_point_W.csv")
    run_sweep(spec, args.checkpoint, path)
    return [path]


def _cmd_reconnect(args, outdir):
    frac = _parse_rational(args.rational)
    tag = f"{frac.numerator}_{frac.denominator}"
    if args.method == "nf":
        if not args.mu_grid:
            raise ValueError("--mu-grid is required for --method nf")
        lo, hi, n = _parse_pair(args.mu_grid, 3, "--mu-grid")
        locus = reconnection_locus_nf(frac, np.linspace(lo, hi, int(n)))
    else:
        if args.E is None or not args.bracket:
            raise ValueError("--E and --bracket are required for --method numeric")
        blo, bhi = _parse_pair(args.bracket, 2, "--bracket")
        mu_star = reconnection_search_numeric(frac, args.E, (blo, bhi), tol=args.tol)
        from .twist import ReconnectionLocus

        locus = ReconnectionLocus(frac, "numeric", ((mu_star, args.E),))
    path = os.path.join(outdir, f"reconnect_{tag}_{locus.method}.json")
    _write_json(path, locus.as_json_dict())
    csv_path = os.path.join(outdir, f"reconnect_{tag}_{locus.method}.csv")
    _write_csv(csv_path, ["mu", "E"], [[mu, e] for mu, e in locus.points])
    return [path, csv_path]


def _cmd_nf(args, outdir):
    validate_mu(args.mu, elliptic=True)
    result = normal_form(args.mu, args.order)
    report = nf_verify(result.taylor, result)
    d = result.normal_form.to_json_dict()
    d["residual"] = report.non_action_residual
    d["imag_residue"] = report.imag_residue
    path = os.path.join(outdir, f"nf_mu{args.mu:.6f}.json")
    _write_json(path, d)
    return [path]


def _cmd_nf_contours(args, outdir):
    g = _parse_grid(args.grid)
    rows = []
    for mu in np.linspace(g[0], g[1], g[2]):
        try:
            nf = normal_form(float(mu), args.order).normal_form
        except L4TwistError as exc:
            for e in np.linspace(g[3], g[4], g[5]):
                rows.append([float(mu), float(e), "", type(exc).__name__])
            continue
        for e in np.linspace(g[3], g[4], g[5]):
            try:
                rows.append([float(mu), float(e), short_period_W_of_E(nf, float(e)), "ok"])
            except L4TwistError as exc:
                rows.append([float(mu), float(e), "", type(exc).__name__])
    path = os.path.join(outdir, "short_period_W.csv")
    _write_csv(path, ["mu", "E", "W", "status"], rows)
    return [path]


def _cmd_chart(args, outdir):
    validate_mu(args.mu, elliptic=True)
    chart = action_action_chart(args.mu, n_grid=args.grid_n, order=args.order)
    grid_path = os.path.join(outdir, f"chart_mu{args.mu:.6f}.csv")
    rows = []
    for i, a in enumerate(chart.i_s):
        for j, b in enumerate(chart.i_l):
            rows.append(
                [float(a), float(b), float(chart.H[i, j]), float(chart.W[i, j]),
                 float(chart.C[i, j])]
            )
    _write_csv(grid_path, ["Is", "Il", "H", "W", "C"], rows)
    curves_path = os.path.join(outdir, f"chart_curves_mu{args.mu:.6f}.json")
    _write_json(
        curves_path,
        [
            {
                "kind": c["kind"],
                "level": c["level"],
                "points": [[float(p[0]), float(p[1])] for p in c["points"]],
            }
            for c in chart.curves
        ],
    )
    return [grid_path, curves_path]


def _cmd_sweep(args, outdir):
    g = _parse_grid(args.grid)
    tasks = tuple(t.strip() for t in args.tasks.split(",") if t.strip())
    spec = SweepSpec(*g, tasks=tasks, worker_count=args.workers)
    path = os.path.join(outdir, "sweep.csv")
    run_sweep(spec, args.checkpoint, path)
    return [path]


_COMMANDS = {
    "resonance-table": _cmd_resonance_table,
    "section": _cmd_section,
    "orbit": _cmd_orbit,
    "profile": _cmd_profile,
    "fixed-point-contours": _cmd_fixed_point_contours,
    "reconnect": _cmd_reconnect,
    "nf": _cmd_nf,
    "nf-contours": _cmd_nf_contours,
    "chart": _cmd_chart,
    "sweep": _cmd_sweep,
}


def dispatch(argv=None) -> int:
    """Parse arguments, run the subcommand, write artifacts; returns exit status."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    # config file provides defaults; explicit flags win by normal parsing order
    if "--config" in argv:
        idx = argv.index("--config")
        try:
            with open(argv[idx + 1]) as fh:
                defaults = json.load(fh)
        except (OSError, json.JSONDecodeError, IndexError):
            print("could not read --config file", file=sys.stderr)
            return EXIT_USAGE
        for p in parser._subparsers._group_actions[0].choices.values():
            p.set_defaults(**{k.replace("-", "_"): v for k, v in defaults.items()})
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        outdir = args.out
        os.makedirs(outdir, exist_ok=True)
        paths = _COMMANDS[args.command](args, outdir)
        _sidecar(outdir, argv)
        for p in paths:
            print(p)
        return EXIT_OK
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except L4TwistError as exc:
        print(f"computation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


def main() -> None:
    raise SystemExit(dispatch())


if __name__ == "__main__":
    main()
