"""Batch command line front end.

Subcommands: `sample-tau` writes a seeded period matrix, `check` runs the
full normality pipeline, `span` runs the subgroup span check. Human
summaries go to stdout, JSON reports to a file (`--json -` streams the JSON
to stdout instead). Exit codes are a contract: 0 verdict produced, 1 usage
or input error, 2 inconclusive.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .errors import (
    ConsistencyError,
    DegenerateInputError,
    InconclusiveRankError,
    InvalidParameterError,
    PrecisionError,
)
from .normality import (
    Tolerances,
    full_check,
    subgroup_span_report,
)
from .ranks import rank_report_json
from .torus import (
    TorusPoint,
    polarization_type,
    sample_tau,
    tau_from_json,
    tau_to_json,
    zero_point,
)

OUTPUT_DIR_ENV = "THETANORM_OUT_DIR"

EXIT_VERDICT = 0
EXIT_USAGE = 1
EXIT_INCONCLUSIVE = 2


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; the contract wants 1
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


@dataclass(frozen=True)
class RunConfig:
    command: str
    g: int
    divisors: tuple[int, ...] | None
    tau_path: str | None
    seed: int
    r_list: tuple[int, ...]
    tolerances: Tolerances
    out: str | None
    json_stream: bool


def _parse_type(text: str, g: int) -> tuple[int, ...]:
    try:
        divisors = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise InvalidParameterError(f"cannot parse type {text!r}")
    if len(divisors) != g:
        raise InvalidParameterError(
            f"type {divisors} has length {len(divisors)}, expected g={g}"
        )
    return divisors


def _parse_rationals(text: str) -> list[Fraction]:
    out = []
    for piece in text.split(","):
        piece = piece.strip()
        # decimals like 0.333 are exact rationals with huge order; require a/b
        if "." in piece:
            raise InvalidParameterError(
                f"subgroup generators must be integer ratios like 1/3, got {piece!r}"
            )
        try:
            out.append(Fraction(piece))
        except (ValueError, ZeroDivisionError):
            raise InvalidParameterError(
                f"subgroup generators must be exact rationals, got {piece!r}"
            )
    return out


def _generator_point(text: str, g: int) -> TorusPoint:
    coords = _parse_rationals(text)
    if len(coords) == g:
        return TorusPoint((Fraction(0),) * g, tuple(coords))
    if len(coords) == 2 * g:
        return TorusPoint(tuple(coords[:g]), tuple(coords[g:]))
    raise InvalidParameterError(
        f"generator needs {g} (q only) or {2 * g} (p then q) rationals, "
        f"got {len(coords)}"
    )


def _generated_subgroup(generators: list[TorusPoint], g: int, cap: int = 4096):
    points = {zero_point(g).reduce()._key(): zero_point(g).reduce()}
    frontier = [zero_point(g)]
    while frontier:
        nxt = []
        for base in frontier:
            for gen in generators:
                cand = (base + gen).reduce()
                key = cand._key()
                if key not in points:
                    points[key] = cand
                    nxt.append(cand)
                    if len(points) > cap:
                        raise InvalidParameterError(
                            f"subgroup order exceeds {cap}; generators not torsion "
                            "of reasonable order"
                        )
        frontier = nxt
    return list(points.values())


def _load_tau(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidParameterError(f"cannot read tau file {path}: {exc}")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidParameterError(
            f"malformed tau file {path}: {exc.msg} at line {exc.lineno}, "
            f"column {exc.colno}"
        )
    return tau_from_json(obj)


def _resolve_out(path_arg: str | None, default_name: str) -> Path:
    if path_arg:
        return Path(path_arg)
    base = os.environ.get(OUTPUT_DIR_ENV, ".")
    return Path(base) / default_name


def _emit(report: dict, out_path: Path | None, json_stream: bool) -> None:
    payload = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if json_stream:
        sys.stdout.write(payload)
        return
    assert out_path is not None
    out_path.parent.mkdir(parents=True, exist_ok=True)
    try:
        out_path.write_text(payload)
    except OSError as exc:
        raise InvalidParameterError(f"cannot write report to {out_path}: {exc}")
    print(f"report written to {out_path}")


def _margin_json(margin: float):
    return "inf" if math.isinf(margin) else float(margin)


def _tolerances(args) -> Tolerances:
    return Tolerances(
        theta_epsilon=args.theta_eps,
        rank_rel_tol=args.rank_tol,
        zero_tol=args.zero_tol,
    )


def _add_common(parser):
    parser.add_argument("--g", type=int, required=True, help="torus dimension")
    parser.add_argument("--seed", type=int, default=0, help="master seed")
    parser.add_argument("--theta-eps", type=float, default=1e-12)
    parser.add_argument("--rank-tol", type=float, default=1e-14)
    parser.add_argument("--zero-tol", type=float, default=1e-6)
    parser.add_argument("--out", default=None, help="report path")
    parser.add_argument(
        "--json",
        default=None,
        metavar="DASH",
        help="pass '-' to stream the JSON report to stdout",
    )


def build_parser() -> _Parser:
    parser = _Parser(prog="thetanorm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_tau = sub.add_parser("sample-tau", parents=[], help="write a seeded period matrix")
    p_tau.add_argument("--g", type=int, required=True)
    p_tau.add_argument("--seed", type=int, default=0)
    p_tau.add_argument("--scale", type=float, default=1.0)
    p_tau.add_argument("--out", default=None)

    p_check = sub.add_parser("check", help="full projective-normality check")
    _add_common(p_check)
    p_check.add_argument("--type", required=True, help="comma-separated divisors")
    p_check.add_argument("--tau", default=None, help="period matrix JSON file")
    p_check.add_argument("--r", default="2,3", help="comma-separated degrees in {2,3,4}")

    p_span = sub.add_parser("span", help="subgroup span check")
    _add_common(p_span)
    p_span.add_argument("--type", default=None, help="divisors, default all ones")
    p_span.add_argument("--tau", default=None)
    p_span.add_argument("--level", type=int, default=1)
    p_span.add_argument(
        "--subgroup",
        action="append",
        default=[],
        help="generator as comma-separated rationals (repeatable)",
    )
    p_span.add_argument(
        "--subgroup-dual",
        action="store_true",
        help="use the dual descent subgroup and check each translated square system",
    )
    return parser


def _cmd_sample_tau(args) -> int:
    tau = sample_tau(args.g, args.seed, args.scale)
    out = _resolve_out(args.out, f"tau_g{args.g}_seed{args.seed}.json")
    payload = json.dumps(tau_to_json(tau), sort_keys=True, indent=2) + "\n"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(payload)
    print(f"tau (g={args.g}, seed={args.seed}) written to {out}")
    return EXIT_VERDICT


def _get_tau(args, g: int):
    if args.tau is not None:
        tau = _load_tau(args.tau)
        if tau.g != g:
            raise InvalidParameterError(f"tau file has g={tau.g}, expected {g}")
        return tau
    return sample_tau(g, args.seed, 1.0)


def check_report(verdict) -> dict:
    """Stable JSON form of a NormalityVerdict."""
    ptype = verdict.divisors
    rhs = (2**verdict.g) * math.factorial(verdict.g)
    blocks = []
    kummer = []
    for idx, (c_vec, rep) in enumerate(sorted(verdict.block_ranks.items())):
        blocks.append(
            {
                "sigma_index": idx,
                "rank": rep.rank,
                "expected": 2**verdict.g,
                "margin": _margin_json(rep.margin),
            }
        )
        kummer.append(verdict.kummer_span[c_vec])
    rho2 = verdict.rho_reports[2]
    return {
        "g": verdict.g,
        "type": list(ptype.divisors),
        "h0": ptype.h0,
        "bound": {"lhs": ptype.h0, "rhs": rhs, "holds": verdict.bound_holds},
        "two_normal": verdict.two_normal,
        "r_normal": {str(r): v for r, v in sorted(verdict.r_normal.items())},
        "dim_I2": verdict.dim_I2,
        "rank": {
            "value": rho2.rank,
            "expected": verdict.expected_rho2,
            "margin": _margin_json(rho2.margin),
            "stable": rho2.verdict_stable,
        },
        "blocks": blocks,
        "kummer_span": kummer,
        "tolerances": verdict.tolerances.as_json(),
        "seed": verdict.seed,
        "genericity_assumed": verdict.genericity_assumed,
        "model": "standard",
    }


def _cmd_check(args) -> int:
    divisors = _parse_type(args.type, args.g)
    r_list = tuple(int(x) for x in args.r.split(","))
    tau = _get_tau(args, args.g)
    verdict = full_check(
        args.g, divisors, tau, r_list, _tolerances(args), seed=args.seed
    )
    report = check_report(verdict)
    name = f"check_g{args.g}_type{'-'.join(map(str, divisors))}_seed{args.seed}.json"
    stream = args.json == "-"
    _emit(report, None if stream else _resolve_out(args.out, name), stream)
    bound = report["bound"]
    print(
        f"type {divisors} on g={args.g}: h0={report['h0']}, "
        f"bound {bound['lhs']} > {bound['rhs']}: {bound['holds']}"
    )
    print(
        f"two_normal={report['two_normal']}  "
        f"rank rho_2 = {report['rank']['value']}/{report['rank']['expected']}  "
        f"dim I_2 = {report['dim_I2']}"
    )
    print(f"blocks full: {sum(report['kummer_span'])}/{len(report['kummer_span'])}")
    return EXIT_VERDICT


def _cmd_span(args) -> int:
    g = args.g
    divisors = _parse_type(args.type, g) if args.type else (1,) * g
    tau = _get_tau(args, g)
    tol = _tolerances(args)
    ptype = polarization_type(divisors)

    if args.subgroup_dual:
        if args.subgroup:
            raise InvalidParameterError("--subgroup-dual excludes --subgroup")
        from .normality import block_rho_ranks

        blocks = block_rho_ranks(ptype, tau, tol, seed=args.seed)
        per_sigma = []
        for idx, (c_vec, rep) in enumerate(sorted(blocks.items())):
            per_sigma.append(
                {
                    "sigma_index": idx,
                    "rank": rep.rank,
                    "expected": 2**g,
                    "margin": _margin_json(rep.margin),
                    "spanning": rep.rank == 2**g,
                }
            )
        report = {
            "g": g,
            "type": list(ptype.divisors),
            "mode": "dual",
            "blocks": per_sigma,
            "seed": args.seed,
            "tolerances": tol.as_json(),
        }
        spanning_all = all(b["spanning"] for b in per_sigma)
        summary = f"dual subgroup spans all {len(per_sigma)} translated systems: {spanning_all}"
    else:
        if not args.subgroup:
            raise InvalidParameterError("provide --subgroup generators or --subgroup-dual")
        generators = [_generator_point(text, g) for text in args.subgroup]
        group = _generated_subgroup(generators, g)
        result = subgroup_span_report(ptype, tau, args.level, group, tol)
        threshold = result.h0 * math.factorial(g)
        report = {
            "g": g,
            "type": list(ptype.divisors),
            "level": args.level,
            "h0": result.h0,
            "subgroup_order": result.group_order,
            "bound": {
                "order": result.group_order,
                "threshold": threshold,
                "in_hypothesis": result.in_hypothesis,
            },
            "rank": rank_report_json(result.report, result.h0),
            "spanning": result.spanning,
            "excluded_base_points": result.excluded_base_points,
            "seed": args.seed,
            "tolerances": tol.as_json(),
        }
        hyp = "" if result.in_hypothesis else " (out of hypothesis: order <= h0 * g!)"
        summary = (
            f"subgroup of order {result.group_order} spanning "
            f"h0={result.h0} system: {result.spanning}{hyp}"
        )

    name = f"span_g{g}_seed{args.seed}.json"
    stream = args.json == "-"
    _emit(report, None if stream else _resolve_out(args.out, name), stream)
    print(summary)
    return EXIT_VERDICT


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "sample-tau":
            return _cmd_sample_tau(args)
        if args.command == "check":
            return _cmd_check(args)
        if args.command == "span":
            return _cmd_span(args)
        parser.error(f"unknown command {args.command}")
    except InconclusiveRankError as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except (
        InvalidParameterError,
        DegenerateInputError,
        PrecisionError,
        ConsistencyError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
