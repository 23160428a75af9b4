"""Command-line front end.

Subcommands wire the library to JSON manifests, CSV sweep tables, and
SVG heatmaps.  Exit codes follow one contract everywhere: 0 for a pass
or a completed computation, 1 for a domain-level failure (an axiom
violation, an infeasible construction), 2 for usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from . import serialize
from .axioms import (
    AxiomReport,
    check_aru_rational,
    check_limited_monotonicity,
    check_partial_ru,
    check_ru_rational,
)
from .errors import AggChoiceError, AxiomViolated, NotRURational, VariantUnavailable
from .model import StochasticChoice
from .geometry import (
    approx_caratheodory,
    aru_distance,
    aru_vertices,
    vertex_count_lower_bound,
)
from .model import ChoiceDomain, forward_evaluate
from .rationalize import rationalize
from .render import heatmap_svg
from .serialize import Manifest, ManifestError
from .simulation import (
    MARKET_MENUS,
    SweepConfig,
    bias,
    composition_from_triples,
    fit_aggregated_logit,
    make_world,
    minmax_bias,
    reduce_dataset,
    sweep,
)

PASS, FAIL, USAGE = 0, 1, 2


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _emit(payload: dict, output: str | None) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load(path: str | None) -> Manifest:
    if not path:
        raise CliError("--input is required for this command", USAGE)
    try:
        return serialize.load(path)
    except FileNotFoundError:
        raise CliError(f"no such file: {path}", USAGE) from None
    except ManifestError as err:
        raise CliError(str(err), USAGE) from err


def _need_choice(manifest: Manifest):
    if manifest.choice is None:
        raise CliError("manifest carries no stochastic choice table", USAGE)
    return manifest.choice


def _encode_report(report: AxiomReport, space) -> dict:
    def encode_subject(subject) -> list:
        out = []
        for part in subject:
            if isinstance(part, frozenset):
                out.append(list(space.sort(part)))
            else:
                out.append(part)
        return out

    payload: dict = {
        "passed": report.passed,
        "method": report.method,
        "violations": [
            {
                "kind": v.kind,
                "subject": encode_subject(v.subject),
                "lhs": v.lhs,
                "rhs": v.rhs,
                "slack": v.slack,
            }
            for v in report.violations
        ],
    }
    if report.certificate is not None:
        payload["certificate"] = [
            {"ranking": list(order.ranking), "weight": w}
            for order, w in report.certificate.items()
        ]
    return payload


def _cmd_check(args) -> int:
    manifest = _load(args.input)
    rho = _need_choice(manifest)
    space = manifest.space
    checks = {
        "lm": lambda: check_limited_monotonicity(rho, space),
        "partial": lambda: check_partial_ru(rho, space, method=args.method),
        "ru": lambda: check_ru_rational(rho, space),
        "aru": lambda: check_aru_rational(rho, space),
    }
    report = checks[args.axiom]()
    payload = {"axiom": args.axiom, **_encode_report(report, space)}
    _emit(payload, args.output)
    return PASS if report.passed else FAIL


def _cmd_rationalize(args) -> int:
    manifest = _load(args.input)
    rho = _need_choice(manifest)
    try:
        result = rationalize(rho, manifest.space, variant=args.variant)
    except VariantUnavailable as err:
        raise CliError(str(err), USAGE) from err
    except AxiomViolated as err:
        payload = {"error": str(err)}
        if err.report is not None:
            payload["report"] = _encode_report(err.report, manifest.space)
        _emit(payload, args.output)
        return FAIL
    out = Manifest(
        space=manifest.space,
        correspondence=result.correspondence,
        preferences=result.prefs,
        composition=result.composition,
        metadata={
            **result.metadata,
            "verification_residual": result.residual,
        },
    )
    text = serialize.to_json(out)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return PASS


def _cmd_evaluate(args) -> int:
    manifest = _load(args.input)
    missing = [
        name
        for name, value in (
            ("preference_distribution", manifest.preferences),
            ("correspondence", manifest.correspondence),
            ("composition_distribution", manifest.composition),
        )
        if value is None
    ]
    if missing:
        raise CliError(f"manifest lacks {', '.join(missing)}", USAGE)
    if manifest.choice is not None:
        domain = manifest.choice.domain()
    else:
        domain = ChoiceDomain.full(manifest.space)
    rho = forward_evaluate(
        manifest.preferences, manifest.correspondence, manifest.composition, domain
    )
    out = Manifest(space=manifest.space, choice=rho, metadata={"evaluated": True})
    text = serialize.to_json(out)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return PASS


def _cmd_distance(args) -> int:
    manifest = _load(args.input)
    rho = _need_choice(manifest)
    result = aru_distance(rho, manifest.space)
    payload = {
        "squared_distance": result.squared_distance,
        "duality_gap": result.duality_gap,
        "iterations": result.iterations,
        "hit_iteration_cap": result.hit_iteration_cap,
        "mixture": [
            {"ranking": list(order.ranking), "weight": w}
            for order, w in result.mixture.items()
            if w > 0.0
        ],
    }
    _emit(payload, args.output)
    return PASS


def _cmd_caratheodory(args) -> int:
    manifest = _load(args.input)
    rho = _need_choice(manifest)
    try:
        result = approx_caratheodory(rho, args.k, manifest.space)
    except NotRURational as err:
        _emit({"error": str(err)}, args.output)
        return FAIL
    payload = {
        "k": args.k,
        "achieved": result.achieved,
        "bound": result.bound,
        "fw_achieved": result.fw_achieved,
        "certifies_ru_n": result.certifies_ru_n,
        "vertices": [
            {
                "ranking": list(order.ranking),
                "deviations": {
                    a: [sorted(menu) for menu in sorted(menus, key=sorted)]
                    for a, menus in family.per_aggregate.items()
                },
            }
            for order, family in result.vertices
        ],
    }
    _emit(payload, args.output)
    return PASS


def _cmd_vertices(args) -> int:
    if args.n is None and not args.input:
        raise CliError("provide --n and/or --input", USAGE)
    payload: dict = {}
    if args.n is not None:
        count, ratio_bound = vertex_count_lower_bound(args.n)
        payload["n"] = args.n
        payload["vertex_count_lower_bound"] = str(count)
        payload["ratio_lower_bound"] = str(ratio_bound)
        threshold = 2 ** (2 ** (args.n - 1))
        payload["ratio_exceeds_2^2^(n-1)"] = ratio_bound >= threshold
    if args.input:
        manifest = _load(args.input)
        space = manifest.space
        if len(space.members) > 5:
            raise CliError("vertex enumeration is capped at 5 aggregates", USAGE)
        domain = (
            manifest.choice.domain()
            if manifest.choice is not None
            else ChoiceDomain.full(space)
        )
        payload["aru_vertices"] = [
            {
                "ranking": list(order.ranking),
                "table": [
                    {"menu": list(space.sort(menu)), "chosen": order.best(menu)}
                    for menu in domain.menus
                ],
            }
            for order, _ in aru_vertices(space, domain)
        ]
    _emit(payload, args.output)
    return PASS


def _parse_triple(text: str) -> tuple[float, float, float]:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 3:
        raise CliError("composition triples need three comma-separated numbers", USAGE)
    if abs(sum(parts) - 1.0) > 1e-9 or min(parts) < 0:
        raise CliError("composition triple must be a probability vector", USAGE)
    return tuple(parts)  # type: ignore[return-value]


def _cmd_simulate(args) -> int:
    utilities = {"x": args.ux, "y": args.uy, "z": args.uz, "w": args.uw}
    triples = {
        frozenset({"x", "a0"}): _parse_triple(args.lambda_x),
        frozenset({"y", "a0"}): _parse_triple(args.lambda_y),
        frozenset({"x", "y", "a0"}): _parse_triple(args.lambda_xy),
    }
    space, correspondence, domain = make_world()
    composition = composition_from_triples(triples, domain)
    rho = reduce_dataset(utilities, correspondence, composition, domain.menus)
    markets = StochasticChoice(space, {m: rho.row(m) for m in MARKET_MENUS})
    estimates = fit_aggregated_logit(markets, normalize="a0")
    distance = aru_distance(rho, space)
    payload = {
        "utilities": utilities,
        "estimates": {a: float(v) for a, v in estimates.items()},
        "estimation": {
            "menu_weighting": "equal-per-menu",
            "normalized": "a0",
            "menus": [sorted(m) for m in MARKET_MENUS],
        },
        "bias": bias(estimates, utilities),
        "squared_distance": distance.squared_distance,
        "reduced": [
            {
                "menu": list(space.sort(menu)),
                "probs": {a: rho.prob(menu, a) for a in space.sort(menu)},
            }
            for menu in rho.menus
        ],
    }
    if args.seed is not None:
        payload["seed"] = args.seed
    _emit(payload, args.output)
    return PASS


def _write_csv(path: str, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    def fmt(value) -> str:
        if isinstance(value, float):
            return f"{value:.9g}"
        return str(value)

    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _cmd_sweep(args) -> int:
    if args.mode == "minmax":
        rows = minmax_bias(outer_step=args.grid, inner_step=args.resolution)
        header = [
            "lam_w",
            "lam_z",
            "max_bias",
            "min_bias",
            "min_abs_bias",
            "independent_bias",
        ]
        data = [
            (r.lam_w, r.lam_z, r.max_bias, r.min_bias, r.min_abs_bias, r.independent_bias)
            for r in rows
        ]
        _write_csv(args.output_csv, header, data)
        if args.output_svg:
            points = [(r.lam_w, r.lam_z) for r in rows]
            svg = heatmap_svg(
                points,
                [r.max_bias for r in rows],
                "lam_w",
                "lam_z",
                "max bias over binary-market compositions",
                signed=True,
            )
            with open(args.output_svg, "w", encoding="utf-8") as fh:
                fh.write(svg)
        return PASS

    config = SweepConfig(
        mode=args.mode,
        lambda_step=args.grid,
        utility_step=args.resolution if args.mode == "utility" else 0.5,
        measures=args.measures,
    )
    rows = _run_sweep(config, args.jobs)
    axes = [name for name, _ in rows[0].point]
    header = axes + ["bias", "squared_distance"]
    data = [
        tuple(v for _, v in r.point) + (r.bias, r.squared_distance) for r in rows
    ]
    _write_csv(args.output_csv, header, data)
    if args.output_svg:
        measure = "bias" if args.measures == "bias" else "squared_distance"
        values = [
            (r.bias if measure == "bias" else r.squared_distance) for r in rows
        ]
        points = [(r.point[0][1], r.point[1][1]) for r in rows]
        highlight = (0.8, 0.1) if args.mode == "lambda" else None
        svg = heatmap_svg(
            points,
            values,
            rows[0].point[0][0],
            rows[0].point[1][0],
            f"{measure} ({args.mode} sweep)",
            highlight=highlight,
            signed=measure == "bias",
        )
        with open(args.output_svg, "w", encoding="utf-8") as fh:
            fh.write(svg)
    return PASS


def _run_sweep(config: SweepConfig, jobs: int):
    if jobs <= 1:
        return sweep(config)
    try:
        from concurrent.futures import ProcessPoolExecutor

        if config.mode == "lambda":
            from .simulation import simplex_grid

            grid = simplex_grid(config.lambda_step)
            configs = [
                (config, ("lambda-point", point)) for point in grid
            ]
        else:
            return sweep(config)
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_point, configs))
        return results
    except OSError as err:
        print(f"parallel sweep unavailable ({err}); running sequentially",
              file=sys.stderr)
        return sweep(config)


def _sweep_point(item):
    from .simulation import SweepRow, _measure

    config, (_, point) = item
    z, w, zw = point
    triples = dict(config.fixed_triples)
    triples[config.vary_menu] = (z, w, zw)
    b, d = _measure(config.utilities, triples, config.measures)
    return SweepRow((("lam_z", z), ("lam_w", w), ("lam_zw", zw)), b, d)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aggchoice",
        description="Rationality tests and simulations for aggregated choice data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", help="run an axiom check on a dataset")
    check.add_argument("--input", required=True)
    check.add_argument("--output")
    check.add_argument(
        "--axiom", choices=("lm", "partial", "ru", "aru"), default="ru"
    )
    check.add_argument("--method", choices=("bm", "lp", "auto"), default="auto")
    check.set_defaults(func=_cmd_check)

    rat = sub.add_parser("rationalize", help="construct a rationalizing model")
    rat.add_argument("--input", required=True)
    rat.add_argument("--output")
    rat.add_argument(
        "--variant", choices=("multi", "outside_option"), default="multi"
    )
    rat.set_defaults(func=_cmd_rationalize)

    ev = sub.add_parser("evaluate", help="forward-evaluate a model manifest")
    ev.add_argument("--input", required=True)
    ev.add_argument("--output")
    ev.set_defaults(func=_cmd_evaluate)

    dist = sub.add_parser("distance", help="distance to the ARU polytope")
    dist.add_argument("--input", required=True)
    dist.add_argument("--output")
    dist.set_defaults(func=_cmd_distance)

    car = sub.add_parser(
        "caratheodory", help="sparse uniform-mixture approximation"
    )
    car.add_argument("--input", required=True)
    car.add_argument("--output")
    car.add_argument("--k", type=int, required=True)
    car.set_defaults(func=_cmd_caratheodory)

    vert = sub.add_parser("vertices", help="vertex counts and enumeration")
    vert.add_argument("--n", type=int)
    vert.add_argument("--input")
    vert.add_argument("--output")
    vert.set_defaults(func=_cmd_vertices)

    sim = sub.add_parser("simulate", help="one bias/distance evaluation")
    sim.add_argument("--ux", type=float, default=2.0)
    sim.add_argument("--uy", type=float, default=1.0)
    sim.add_argument("--uz", type=float, default=3.0)
    sim.add_argument("--uw", type=float, default=0.0)
    sim.add_argument("--lambda-x", default="0.8,0.1,0.1")
    sim.add_argument("--lambda-y", default="0.8,0.1,0.1")
    sim.add_argument("--lambda-xy", default="0.8,0.1,0.1")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--output")
    sim.set_defaults(func=_cmd_simulate)

    sw = sub.add_parser("sweep", help="grid sweeps behind the heatmaps")
    sw.add_argument("--mode", choices=("lambda", "utility", "minmax"), default="lambda")
    sw.add_argument("--grid", type=float, default=0.1, help="outer grid step")
    sw.add_argument(
        "--resolution", type=float, default=0.1, help="inner or utility step"
    )
    sw.add_argument("--measures", choices=("bias", "distance", "both"), default="both")
    sw.add_argument("--jobs", type=int, default=1)
    sw.add_argument("--seed", type=int)
    sw.add_argument("--output-csv", required=True)
    sw.add_argument("--output-svg")
    sw.set_defaults(func=_cmd_sweep)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as err:
        print(f"error: {err}", file=sys.stderr)
        return err.code
    except ManifestError as err:
        print(f"error: {err}", file=sys.stderr)
        return USAGE
    except AggChoiceError as err:
        print(f"error: {err}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
