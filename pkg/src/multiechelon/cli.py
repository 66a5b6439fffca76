"""Command-line interface: ``multiechelon <subcommand> --config FILE``.

Exit codes: 0 success, 1 usage or config error, 2 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import itertools
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import aggregate, chain, echelon, oracle, twophase
from .errors import ConfigError, NotApplicableError, SolverError
from .linalg import gershgorin
from .netspec import ChainSpec, EchelonSpec, FullNetworkSpec, expand_gamma, load_config

EXIT_OK, EXIT_USAGE, EXIT_SOLVER = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- output helpers --------------------------------------------------------


def _cell(value, digits: int | None) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value)) if digits is None else f"{float(value):.{digits}f}"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    return "" if value is None else str(value)


def emit(header: list[str], rows: list[list], fmt: str, digits: int, out) -> None:
    """Write rows as CSV (full precision) or as an aligned table (rounded)."""
    if fmt == "csv":
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v, None) for v in row])
        return
    cells = [header] + [[_cell(v, digits) for v in row] for row in rows]
    widths = [max(len(r[i]) for r in cells if i < len(r)) for i in range(len(header))]
    for r in cells:
        out.write("  ".join(c.rjust(w) for c, w in zip(r, widths)).rstrip() + "\n")


def _load(path: str):
    if path is None:
        raise UsageError("--config is required")
    return load_config(path)


def _initial(spec, size: int) -> np.ndarray:
    return np.zeros(size) if spec.initial_levels is None else np.array(spec.initial_levels)


# -- equilibrium -----------------------------------------------------------


def cmd_equilibrium(args, out) -> int:
    spec = _load(args.config)
    if isinstance(spec, EchelonSpec):
        report = echelon.equilibrium(spec, args.method)
        header = [f"y{i + 1}" for i in range(spec.n)]
        row = list(report.levels)
        if args.aggregate:
            p = aggregate.aggregate_params(spec)
            header += ["total", "y_a"]
            row += [report.total, aggregate.aggregated_equilibrium(p)]
        emit(header, [row], args.format, args.digits, out)
        return EXIT_OK
    chain_spec = twophase.phase1_aggregate(spec) if isinstance(spec, FullNetworkSpec) else spec
    x, trace = chain.newton_solve(chain_spec)
    if x is None:
        raise SolverError(f"Newton iteration did not converge (|F|={trace.residual_norms[-1]:.3e})")
    emit([f"x{i + 1}" for i in range(chain_spec.m)], [list(x)], args.format, args.digits, out)
    return EXIT_OK


# -- simulate --------------------------------------------------------------


def cmd_simulate(args, out) -> int:
    if not args.t_max > 0:
        raise UsageError("--t-max must be positive")
    if args.samples < 1:
        raise UsageError("--samples must be at least 1")
    spec = _load(args.config)
    times = np.concatenate([[0.0], args.t_max * np.arange(1, args.samples + 1) / args.samples])
    if isinstance(spec, EchelonSpec):
        sys_ = echelon.build_system(spec)
        y0 = _initial(spec, spec.n)
        series = echelon.solve_trajectory(sys_, y0, times, args.method)
        header = ["t"] + [f"y{i + 1}" for i in range(spec.n)]
        levels = series.levels
        if args.oracle:
            ref = oracle.rk4_sample(echelon.linear_rhs(sys_), y0, times, args.step)
            header += [f"rk4_y{i + 1}" for i in range(spec.n)]
            levels = np.hstack([levels, ref.levels])
    else:
        chain_spec = twophase.phase1_aggregate(spec) if isinstance(spec, FullNetworkSpec) else spec
        x0 = _initial(chain_spec, chain_spec.m) if isinstance(spec, ChainSpec) else np.zeros(chain_spec.m)
        series = chain.simulate_chain(chain_spec, x0, times, args.step)
        header = ["t"] + [f"x{i + 1}" for i in range(chain_spec.m)]
        levels = series.levels
        if args.oracle:
            ref = chain.simulate_chain(chain_spec, x0, times, args.step / 2)
            header += [f"rk4_half_x{i + 1}" for i in range(chain_spec.m)]
            levels = np.hstack([levels, ref.levels])
    rows = [[float(t)] + list(row) for t, row in zip(times, levels)]
    emit(header, rows, args.format, args.digits, out)
    return EXIT_OK


# -- stability -------------------------------------------------------------


def _chain_stability_lines(spec: ChainSpec) -> list[str]:
    cert = chain.kantorovich_certificate(spec)
    lines = [f"condition (m={spec.m}) flags: " + ", ".join("true" if f else "false" for f in cert.flags)]
    lines.append(f"condition satisfied: {'true' if cert.satisfied else 'false'} ({cert.note})")
    k = cert.kantorovich
    if k.applicable:
        lines.append(
            f"kantorovich: M={k.lipschitz:.6g} |F(0)|={k.residual_norm:.6g} "
            f"inv_bound={k.jacobian_inverse_bound:.6g} ratio={k.ratio:.6g} (<= 1/16) "
            f"satisfied={'true' if k.satisfied else 'false'}"
        )
    else:
        lines.append("kantorovich: not applicable (stability condition fails)")
    x, trace = chain.newton_solve(spec)
    if x is not None:
        bound = chain.jacobian_gershgorin_bound(spec, x)
        lines.append(f"jacobian gershgorin bound at equilibrium: {bound:.6g}")
    return lines


def cmd_stability(args, out) -> int:
    spec = _load(args.config)
    if isinstance(spec, EchelonSpec):
        sys_ = echelon.build_system(spec)
        bound = gershgorin(sys_.A).bound
        out.write(f"gershgorin bound: {bound:.6g}\n")
        out.write(f"stable: {'true' if bound < 0 else 'false'}\n")
        return EXIT_OK
    chain_spec = twophase.phase1_aggregate(spec) if isinstance(spec, FullNetworkSpec) else spec
    for line in _chain_stability_lines(chain_spec):
        out.write(line + "\n")
    return EXIT_OK


# -- two-phase -------------------------------------------------------------


def cmd_two_phase(args, out) -> int:
    spec = _load(args.config)
    if not isinstance(spec, FullNetworkSpec):
        raise UsageError("two-phase needs a full-network config")
    if args.echelon is not None and not 1 <= args.echelon <= spec.m:
        raise UsageError(f"--echelon must be in 1..{spec.m}")
    targets = None if args.echelon is None else [args.echelon]
    result = twophase.two_phase(spec, targets, args.method)
    width = max(len(r.levels) for r in result.echelons.values())
    header = ["echelon", "x_star", "total"] + [f"w{i + 1}" for i in range(width)]
    rows = []
    for e, report in result.echelons.items():
        levels = list(report.levels) + [None] * (width - len(report.levels))
        rows.append([e, float(result.chain_levels[e - 1]), report.total] + levels)
    if args.format == "table":
        out.write("phase 1: " + ", ".join(f"{v:.{args.digits}f}" for v in result.chain_levels))
        out.write(f"  (newton iterations: {result.trace.iterations})\n")
    emit(header, rows, args.format, args.digits, out)
    if args.format == "table":
        handled, full = result.state_counts
        out.write(f"states handled: {handled} (full model: {full})\n")
    return EXIT_OK


# -- sweep -----------------------------------------------------------------

ECHELON_PARAMS = ("mu", "lambda", "theta", "L", "gamma", "n")
CHAIN_PARAMS = ("lambda_c", "theta", "C")
NETWORK_PARAMS = ("gamma", "theta_scale", "lambda_c")


def _parse_vary(items: list[str]) -> list[tuple[str, list[float]]]:
    grid = []
    for item in items:
        name, sep, values = item.partition("=")
        if not sep or not values:
            raise UsageError(f"--vary expects name=v1,v2,..., got {item!r}")
        try:
            grid.append((name.strip(), [float(v) for v in values.split(",")]))
        except ValueError:
            raise UsageError(f"--vary {name}: values must be numbers") from None
    return grid


def _labels(combo: dict) -> list[str]:
    return [f"{v:g}" for v in combo.values()]


def _vary_echelon(spec: EchelonSpec, changes: dict) -> EchelonSpec:
    n = int(changes.get("n", spec.n))
    if n != changes.get("n", n) or not 1 <= n <= spec.n:
        raise UsageError(f"n must be an integer in 1..{spec.n}")
    ws = list(spec.warehouses[:n])
    gamma = spec.transshipment[:n, :n]
    field_of = {"mu": "max_supply", "lambda": "demand", "theta": "deterioration", "L": "max_level"}
    for name, value in changes.items():
        if name in field_of:
            ws = [dataclasses.replace(w, **{field_of[name]: value}) for w in ws]
        elif name == "gamma":
            gamma = expand_gamma(value, n)
    return EchelonSpec(tuple(ws), gamma)


def _vary_network(net: FullNetworkSpec, changes: dict) -> FullNetworkSpec:
    echelons = []
    for e in net.echelons:
        ws, gamma = list(e.warehouses), e.transshipment
        if "theta_scale" in changes:
            ws = [dataclasses.replace(w, deterioration=(i + 1) * changes["theta_scale"]) for i, w in enumerate(ws)]
        if "gamma" in changes:
            gamma = expand_gamma(changes["gamma"], e.n)
        echelons.append(EchelonSpec(tuple(ws), gamma))
    return FullNetworkSpec(tuple(echelons), net.supply_rates, changes.get("lambda_c", net.terminal_demand))


def _vary_chain(spec: ChainSpec, changes: dict) -> ChainSpec:
    ech = spec.echelons
    if "theta" in changes:
        ech = tuple(dataclasses.replace(e, deterioration=changes["theta"]) for e in ech)
    if "C" in changes:
        ech = tuple(dataclasses.replace(e, capacity=changes["C"]) for e in ech)
    return ChainSpec(ech, changes.get("lambda_c", spec.terminal_demand))


def cmd_sweep(args, out) -> int:
    spec = _load(args.config)
    grid = _parse_vary(args.vary or [])
    if not grid:
        raise UsageError("sweep needs at least one --vary name=values")
    allowed = (
        ECHELON_PARAMS if isinstance(spec, EchelonSpec) else NETWORK_PARAMS if isinstance(spec, FullNetworkSpec) else CHAIN_PARAMS
    )
    for name, _ in grid:
        if name not in allowed:
            raise UsageError(f"unknown sweep parameter {name!r}; expected one of {', '.join(allowed)}")
    names = [name for name, _ in grid]
    combos = [dict(zip(names, values)) for values in itertools.product(*(v for _, v in grid))]

    if isinstance(spec, EchelonSpec):
        variants = [_vary_echelon(spec, c) for c in combos]

        def solve(s):
            rep = echelon.equilibrium(s, args.method)
            y_a = aggregate.aggregated_equilibrium(aggregate.aggregate_params(s))
            return [rep.method, rep.total, y_a] + list(rep.levels)

        with ThreadPoolExecutor() as pool:
            results = list(pool.map(solve, variants))
        width = max(s.n for s in variants)
        header = names + ["method", "total", "y_a"] + [f"y{i + 1}" for i in range(width)]
        rows = [_labels(c) + r + [None] * (len(header) - len(names) - len(r)) for c, r in zip(combos, results)]
    elif isinstance(spec, FullNetworkSpec):
        variants = [_vary_network(spec, c) for c in combos]
        with ThreadPoolExecutor() as pool:
            results = list(pool.map(lambda s: twophase.two_phase(s, method=args.method), variants))
        width = max(e.n for e in spec.echelons)
        header = names + ["echelon", "x_star", "total"] + [f"w{i + 1}" for i in range(width)]
        rows = []
        for c, res in zip(combos, results):
            for e, rep in res.echelons.items():
                levels = list(rep.levels) + [None] * (width - len(rep.levels))
                rows.append(_labels(c) + [e, float(res.chain_levels[e - 1]), rep.total] + levels)
    else:
        variants = [_vary_chain(spec, c) for c in combos]
        with ThreadPoolExecutor() as pool:
            results = list(pool.map(chain.newton_solve, variants))
        header = names + ["iterations"] + [f"x{i + 1}" for i in range(spec.m)]
        rows = []
        for c, (x, trace) in zip(combos, results):
            if x is None:
                raise SolverError(f"Newton iteration did not converge for {c}")
            rows.append(_labels(c) + [trace.iterations] + list(x))

    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            emit(header, rows, "csv", args.digits, fh)
    else:
        emit(header, rows, args.format, args.digits, out)
    return EXIT_OK


# -- entry point -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="multiechelon", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help, default_format="table"):
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", required=True, help="path to a JSON config document")
        p.add_argument("--format", choices=("table", "csv"), default=default_format)
        p.add_argument("--method", choices=("auto", "dense"), default="auto")
        p.add_argument("--digits", type=int, default=3, help="decimals shown in table output")
        return p

    p = add("equilibrium", "equilibrium inventory levels")
    p.add_argument("--aggregate", action="store_true", help="add the total and the aggregated equilibrium")
    p.set_defaults(func=cmd_equilibrium)

    p = add("simulate", "inventory trajectory as CSV", default_format="csv")
    p.add_argument("--t-max", type=float, required=True)
    p.add_argument("--samples", type=int, default=10)
    p.add_argument("--step", type=float, default=oracle.DEFAULT_STEP, help="RK4 step size")
    p.add_argument("--oracle", action="store_true", help="add reference RK4 columns")
    p.set_defaults(func=cmd_simulate)

    p = add("stability", "stability certificates")
    p.set_defaults(func=cmd_stability)

    p = add("two-phase", "aggregate-then-disaggregate equilibria")
    p.add_argument("--echelon", type=int, default=None, help="1-based echelon index (default: all)")
    p.set_defaults(func=cmd_two_phase)

    p = add("sweep", "equilibria over a parameter grid")
    p.add_argument("--vary", action="append", metavar="NAME=V1,V2,...")
    p.add_argument("--output", help="write CSV to this path instead of stdout")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, out)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverError, NotApplicableError, ValueError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


def run(argv) -> tuple[int, str]:
    """Run the CLI in-process and capture stdout."""
    buf = io.StringIO()
    code = main(argv, buf)
    return code, buf.getvalue()


if __name__ == "__main__":
    sys.exit(main())
