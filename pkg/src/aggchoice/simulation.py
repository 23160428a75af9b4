"""Misspecification-bias experiments for aggregated logit estimation.

The data generating process is a logit model over four underlying
alternatives x, y, z, w; the analyst observes three markets over the
aggregates {x, a0}, {y, a0}, {x, y, a0}, where the outside aggregate a0
stands for z, w, or both, with market-specific frequencies.  Fitting an
aggregated logit (outside utility pinned to zero) to the reduced data
and comparing the estimated utility gap between x and y to the true gap
quantifies the cost of wrongly imposing an aggregate-level random
utility model; the squared Euclidean distance to the ARU polytope
measures the same misspecification geometrically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import MissingUtility, NoConvergence, NotIdentified
from .geometry import aru_distance
from .model import (
    AggregateSpace,
    AggregationCorrespondence,
    ChoiceDomain,
    CompositionDistribution,
    CompositionTuple,
    Menu,
    StochasticChoice,
)

UtilityMap = Mapping[str, float]

#: Newton stops when the gradient's max norm falls below this.
GRADIENT_TOL = 1e-10

MAX_NEWTON_ITERATIONS = 200
MAX_STEP_HALVINGS = 40


def logit_choice(utilities: UtilityMap, menu: Iterable[str]) -> dict[str, float]:
    """Softmax choice probabilities over the menu."""
    items = list(menu)
    try:
        values = np.array([utilities[i] for i in items])
    except KeyError as err:
        raise MissingUtility(f"no utility for {err.args[0]!r}") from None
    values = values - values.max()
    weights = np.exp(values)
    weights /= weights.sum()
    return {i: float(p) for i, p in zip(items, weights)}


def reduce_dataset(
    utilities: UtilityMap,
    correspondence: AggregationCorrespondence,
    composition: CompositionDistribution,
    menus: Iterable[Menu],
) -> StochasticChoice:
    """Observable aggregate-level data implied by a logit ground process.

    Equivalent to forward-evaluating the logit preference distribution,
    but computed directly from the closed form: per composition tuple,
    the realized set's softmax mass is summed within each aggregate.
    """
    space = correspondence.space
    table: dict[Menu, dict[str, float]] = {}
    for menu in menus:
        menu = frozenset(menu)
        atoms = [a for a in space.sort(menu) if a in space.atomic_set]
        extras = menu & space.non_atomic_set
        row = {a: 0.0 for a in menu}
        if extras:
            tuples = composition.for_menu(menu)
        else:
            tuples = {CompositionTuple(()): 1.0}
        for t, w in tuples.items():
            realized = [correspondence.sole(a) for a in atoms]
            owner = {correspondence.sole(a): a for a in atoms}
            for a, s in t.parts:
                for x in sorted(s):
                    realized.append(x)
                    owner[x] = a
            probs = logit_choice(utilities, realized)
            for x, p in probs.items():
                row[owner[x]] += w * p
        table[menu] = row
    return StochasticChoice(space, table)


def _check_identified(rho: StochasticChoice, pinned: str) -> list[str]:
    aggregates: set[str] = set()
    for menu in rho.menus:
        aggregates |= menu
    if pinned not in aggregates:
        raise NotIdentified(f"pinned aggregate {pinned!r} appears in no menu")
    reached = {pinned}
    frontier = [pinned]
    adjacency: dict[str, set[str]] = {a: set() for a in aggregates}
    for menu in rho.menus:
        for a in menu:
            adjacency[a] |= menu - {a}
    while frontier:
        nxt = adjacency[frontier.pop()] - reached
        reached |= nxt
        frontier.extend(nxt)
    if reached != aggregates:
        missing = sorted(aggregates - reached)
        raise NotIdentified(f"aggregates {missing} share no menu path to {pinned!r}")
    return sorted(aggregates - {pinned})


def _log_likelihood(
    rho: StochasticChoice, values: dict[str, float]
) -> tuple[float, dict[str, float], np.ndarray, list[str]]:
    params = sorted(values)
    index = {a: i for i, a in enumerate(params)}
    ll = 0.0
    grad = {a: 0.0 for a in params}
    hess = np.zeros((len(params), len(params)))
    for menu in rho.menus:
        items = sorted(menu)
        u = np.array([values.get(a, 0.0) for a in items])
        u = u - u.max()
        p = np.exp(u)
        p /= p.sum()
        for a, pa in zip(items, p):
            share = rho.prob(menu, a)
            if share > 0.0:
                ll += share * math.log(pa)
            if a in index:
                grad[a] += share - pa
        free = [i for i, a in enumerate(items) if a in index]
        for i in free:
            for j in free:
                gi, gj = index[items[i]], index[items[j]]
                hess[gi, gj] -= (1.0 if i == j else 0.0) * p[i] - p[i] * p[j]
    grad_vec = np.array([grad[a] for a in params])
    return ll, grad, hess, params


def fit_aggregated_logit(
    rho: StochasticChoice, normalize: str = "a0"
) -> dict[str, float]:
    """Maximum-likelihood aggregated logit with one utility pinned to 0.

    Maximizes the equally-menu-weighted log likelihood by damped Newton
    (concave objective; step halving up to 40 times per iteration).
    Returns the utility map including the pinned aggregate at exactly 0.
    Raises `NotIdentified` for a disconnected menu graph and
    `NoConvergence` if 200 iterations do not reach gradient norm 1e-10.
    """
    free = _check_identified(rho, normalize)
    values = {a: 0.0 for a in free}
    if not free:
        return {normalize: 0.0}

    def objective(vals: dict[str, float]) -> float:
        ll = 0.0
        for menu in rho.menus:
            items = sorted(menu)
            u = np.array([vals.get(a, 0.0) for a in items])
            u = u - u.max()
            logits = u - math.log(np.exp(u).sum())
            for a, lp in zip(items, logits):
                share = rho.prob(menu, a)
                if share > 0.0:
                    ll += share * lp
        return ll

    current = objective(values)
    for _ in range(MAX_NEWTON_ITERATIONS):
        _, grad, hess, params = _log_likelihood(rho, values)
        grad_vec = np.array([grad[a] for a in params])
        if np.abs(grad_vec).max() <= GRADIENT_TOL:
            out = {a: values[a] for a in free}
            out[normalize] = 0.0
            return out
        try:
            step = np.linalg.solve(-hess, grad_vec)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(-hess, grad_vec, rcond=None)[0]
        scale = 1.0
        for _ in range(MAX_STEP_HALVINGS):
            trial = {a: values[a] + scale * s for a, s in zip(params, step)}
            improved = objective(trial)
            if improved >= current - 1e-15:
                values, current = trial, improved
                break
            scale *= 0.5
        else:
            raise NoConvergence("step halving failed to improve the likelihood")
    raise NoConvergence("Newton hit the iteration cap before the gradient tolerance")


def bias(
    estimated: UtilityMap,
    true_utilities: UtilityMap,
    first: str = "x",
    second: str = "y",
) -> float:
    """Distortion of the estimated utility gap between two aggregates."""
    for m, who in ((estimated, "estimated"), (true_utilities, "true")):
        for key in (first, second):
            if key not in m:
                raise MissingUtility(f"{who} utilities lack {key!r}")
    return (estimated[first] - estimated[second]) - (
        true_utilities[first] - true_utilities[second]
    )


# ---------------------------------------------------------------------------
# The three-market world of the experiments
# ---------------------------------------------------------------------------

SUBSET_ORDER = ("z", "w", "zw")  # coordinate convention for composition triples

DEFAULT_UTILITIES: dict[str, float] = {"x": 2.0, "y": 1.0, "z": 3.0, "w": 0.0}

BENCHMARK_TRIPLE = (0.8, 0.1, 0.1)


def make_world() -> tuple[AggregateSpace, AggregationCorrespondence, ChoiceDomain]:
    """Aggregates {x, y, a0} with the outside aggregate covering {z, w}."""
    space = AggregateSpace(("x", "y"), ("a0",))
    correspondence = AggregationCorrespondence.identity_atomic(
        space, {"a0": ("z", "w")}
    )
    return space, correspondence, ChoiceDomain.full(space)


MARKET_MENUS: tuple[Menu, ...] = (
    frozenset({"x", "a0"}),
    frozenset({"y", "a0"}),
    frozenset({"x", "y", "a0"}),
)


def triple_to_tuples(triple: Sequence[float]) -> dict[CompositionTuple, float]:
    """(z, w, zw) probabilities into composition-tuple weights."""
    z, w, zw = triple
    parts = {
        CompositionTuple.of({"a0": {"z"}}): z,
        CompositionTuple.of({"a0": {"w"}}): w,
        CompositionTuple.of({"a0": {"z", "w"}}): zw,
    }
    return {t: p for t, p in parts.items() if p > 0.0}


def composition_from_triples(
    triples: Mapping[Menu, Sequence[float]], domain: ChoiceDomain
) -> CompositionDistribution:
    """Per-menu triples for the outside-aggregate menus of the domain.

    Menus containing a0 but missing from `triples` reuse the full-menu
    triple (markets outside the three observed ones share its mix).
    """
    fallback = triples.get(frozenset({"x", "y", "a0"}))
    per_menu = {}
    for menu in domain.menus:
        if "a0" not in menu:
            continue
        triple = triples.get(frozenset(menu), fallback)
        if triple is None:
            raise KeyError(f"no composition triple for menu {sorted(menu)}")
        per_menu[frozenset(menu)] = triple_to_tuples(triple)
    return CompositionDistribution(per_menu)


def simplex_grid(step: float) -> list[tuple[float, float, float]]:
    """(z, w, zw) triples with z and w on a step grid, zw the residual."""
    steps = round(1.0 / step)
    if abs(steps * step - 1.0) > 1e-9:
        raise ValueError("step must divide 1")
    out = []
    for i in range(steps + 1):
        for j in range(steps + 1 - i):
            z = i / steps
            w = j / steps
            out.append((z, w, 1.0 - z - w))
    return out


@dataclass(frozen=True)
class SweepConfig:
    """Protocol for one heatmap sweep."""

    mode: str  # "lambda" (vary one menu's composition) or "utility"
    utilities: Mapping[str, float] = field(
        default_factory=lambda: dict(DEFAULT_UTILITIES)
    )
    vary_menu: Menu = frozenset({"x", "a0"})
    fixed_triples: Mapping[Menu, tuple[float, float, float]] = field(
        default_factory=lambda: {
            frozenset({"y", "a0"}): BENCHMARK_TRIPLE,
            frozenset({"x", "y", "a0"}): BENCHMARK_TRIPLE,
        }
    )
    lambda_step: float = 0.1
    utility_low: float = -5.0
    utility_high: float = 5.0
    utility_step: float = 0.5
    measures: str = "both"  # "bias", "distance", or "both"


@dataclass(frozen=True)
class SweepRow:
    point: tuple[tuple[str, float], ...]
    bias: float | None
    squared_distance: float | None


def _measure(
    utilities: Mapping[str, float],
    triples: Mapping[Menu, Sequence[float]],
    measures: str,
) -> tuple[float | None, float | None]:
    space, correspondence, domain = make_world()
    composition = composition_from_triples(triples, domain)
    rho_full = reduce_dataset(utilities, correspondence, composition, domain.menus)
    bias_value = None
    if measures in ("bias", "both"):
        markets = StochasticChoice(
            space, {m: rho_full.row(m) for m in MARKET_MENUS}
        )
        estimates = fit_aggregated_logit(markets, normalize="a0")
        bias_value = bias(estimates, utilities)
    distance_value = None
    if measures in ("distance", "both"):
        distance_value = aru_distance(rho_full, space).squared_distance
    return bias_value, distance_value


def sweep(config: SweepConfig) -> list[SweepRow]:
    """Evaluate bias and ARU distance over a parameter grid.

    Lambda mode varies one menu's composition triple over the simplex
    grid while the other menus stay fixed; utility mode varies the
    utilities of the two underlying outside alternatives over a square
    grid while all composition triples stay fixed.  Rows come out in
    grid order.
    """
    rows: list[SweepRow] = []
    if config.mode == "lambda":
        for z, w, zw in simplex_grid(config.lambda_step):
            triples = dict(config.fixed_triples)
            triples[config.vary_menu] = (z, w, zw)
            b, d = _measure(config.utilities, triples, config.measures)
            rows.append(
                SweepRow((("lam_z", z), ("lam_w", w), ("lam_zw", zw)), b, d)
            )
        return rows
    if config.mode == "utility":
        steps = round((config.utility_high - config.utility_low) / config.utility_step)
        marks = [config.utility_low + i * config.utility_step for i in range(steps + 1)]
        for uz in marks:
            for uw in marks:
                utilities = dict(config.utilities)
                utilities["z"] = uz
                utilities["w"] = uw
                b, d = _measure(utilities, config.fixed_triples, config.measures)
                rows.append(SweepRow((("u_z", uz), ("u_w", uw)), b, d))
        return rows
    raise ValueError(f"unknown sweep mode {config.mode!r}")


# ---------------------------------------------------------------------------
# Extremal-bias table
# ---------------------------------------------------------------------------


def _market_vectors(utilities: Mapping[str, float]) -> dict[str, np.ndarray]:
    """Per-subset logit shares for each market, in SUBSET_ORDER."""
    realizations = {"z": ["z"], "w": ["w"], "zw": ["z", "w"]}

    def shares(base: list[str], item: str) -> np.ndarray:
        return np.array(
            [
                logit_choice(utilities, base + realizations[s])[item]
                for s in SUBSET_ORDER
            ]
        )

    return {
        "xa0_x": shares(["x"], "x"),
        "ya0_y": shares(["y"], "y"),
        "xya0_x": shares(["x", "y"], "x"),
        "xya0_y": shares(["x", "y"], "y"),
    }


@dataclass(frozen=True)
class MinMaxRow:
    lam_w: float
    lam_z: float
    max_bias: float
    min_bias: float
    min_abs_bias: float
    independent_bias: float


def minmax_bias(
    utilities: Mapping[str, float] | None = None,
    outer_step: float = 0.1,
    inner_step: float = 0.1,
) -> list[MinMaxRow]:
    """Extremal biases over all admissible market compositions.

    Each binary market exactly identifies its own utility against the
    pinned outside aggregate (u_hat(x) is the log share ratio of the
    {x, a0} market, likewise for y), which is the aggregated-logit fit
    on those two markets.  For each composition triple of the grand menu
    {x, y, a0}, the inner grid ranges over every pair of triples for the
    two binary markets; reported per outer point are the most positive
    bias, the most negative bias, the smallest absolute bias, and the
    bias of the menu-independent point where all three triples coincide.
    Rows come out in (lam_w, lam_z) grid order, matching the table axes.
    """
    utilities = dict(DEFAULT_UTILITIES if utilities is None else utilities)
    vectors = _market_vectors(utilities)
    true_gap = utilities["x"] - utilities["y"]

    def fit(share: float) -> float:
        return math.log(share / (1.0 - share))

    inner = np.array(simplex_grid(inner_step))
    ux_all = np.log(inner @ vectors["xa0_x"]) - np.log1p(-(inner @ vectors["xa0_x"]))
    uy_all = np.log(inner @ vectors["ya0_y"]) - np.log1p(-(inner @ vectors["ya0_y"]))
    biases = ux_all[:, None] - uy_all[None, :] - true_gap

    rows: list[MinMaxRow] = []
    for z, w, zw in sorted(simplex_grid(outer_step), key=lambda t: (t[1], t[0])):
        triple = np.array([z, w, zw])
        independent = (
            fit(float(triple @ vectors["xa0_x"]))
            - fit(float(triple @ vectors["ya0_y"]))
            - true_gap
        )
        rows.append(
            MinMaxRow(
                lam_w=w,
                lam_z=z,
                max_bias=float(biases.max()),
                min_bias=float(biases.min()),
                min_abs_bias=float(np.abs(biases).min()),
                independent_bias=independent,
            )
        )
    return rows
