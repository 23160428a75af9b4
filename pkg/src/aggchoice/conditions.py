"""The two representation conditions that restore aggregate-level RUM.

A representation (preference distribution over underlying alternatives,
composition distribution) generates ARU-rational data whenever either

* the preferences are non-overlapping: each aggregate's underlying
  alternatives occupy a contiguous block of every support ranking, or
* the composition distribution is menu-independent: one unconditional
  joint distribution generates every per-menu distribution as a
  marginal.

Both conditions are properties of representations, not of datasets: the
same dataset may be generated by representations that satisfy them and
by representations that do not, so this module never infers a condition
from choice frequencies alone.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import linprog
from .errors import GroundMismatch, NotMenuIndependent, TooLarge, VerificationBug
from .model import (
    AggregationCorrespondence,
    ChoiceDomain,
    CompositionDistribution,
    CompositionTuple,
    LinearOrder,
    Menu,
    PreferenceDistribution,
    aru_evaluate,
    forward_evaluate,
)

#: Total-variation tolerance when comparing per-menu compositions.
MARGINAL_TOL = 1e-10

#: Joint atom cap for the menu-independence feasibility LP.
MAX_JOINT_ATOMS = 1_000_000


@dataclass(frozen=True)
class ConditionReport:
    holds: bool
    witnesses: tuple = ()

    def __post_init__(self):
        if self.holds != (len(self.witnesses) == 0):
            raise ValueError("holds flag must match emptiness of witnesses")


def is_non_overlapping(
    prefs: PreferenceDistribution, correspondence: AggregationCorrespondence
) -> ConditionReport:
    """Check the contiguous-block condition on every support ranking.

    A witness is a (ranking, aggregate, foreign id) triple: some id from
    outside the aggregate sits strictly between two of its members.
    """
    space = correspondence.space
    needed = set(correspondence.ground)
    if not needed <= set(prefs.ground):
        raise GroundMismatch("distribution must rank every underlying alternative")
    witnesses = []
    for order in prefs.support:
        for a in space.non_atomic:
            members = correspondence.underlying(a)
            positions = [order.rank(x) for x in members]
            lo, hi = min(positions), max(positions)
            for foreign in order.ranking[lo + 1 : hi]:
                if foreign not in members:
                    witnesses.append((order, a, foreign))
    return ConditionReport(holds=not witnesses, witnesses=tuple(witnesses))


def lift_aru_to_nonoverlapping(
    prefs_agg: PreferenceDistribution, correspondence: AggregationCorrespondence
) -> PreferenceDistribution:
    """Expand each aggregate-level ranking into a block ranking.

    Every aggregate is replaced by its underlying alternatives in the
    correspondence's fixed order, so the result is non-overlapping by
    construction and generates the same data under any composition
    distribution.
    """
    space = correspondence.space
    if prefs_agg.ground != frozenset(space.members):
        raise GroundMismatch("expected a distribution over the aggregates")
    weights: dict[LinearOrder, float] = {}
    for order, w in prefs_agg.items():
        ranking: list[str] = []
        for a in order.ranking:
            ranking.extend(correspondence.underlying(a))
        lifted = LinearOrder(tuple(ranking))
        weights[lifted] = weights.get(lifted, 0.0) + w
    return PreferenceDistribution(weights)


def _tuple_space(
    correspondence: AggregationCorrespondence, aggregates: tuple[str, ...]
) -> list[tuple[frozenset[str], ...]]:
    per_aggregate = []
    for a in aggregates:
        members = correspondence.underlying(a)
        subsets = [
            frozenset(c)
            for r in range(1, len(members) + 1)
            for c in itertools.combinations(members, r)
        ]
        per_aggregate.append(subsets)
    return list(itertools.product(*per_aggregate))


def is_menu_independent(
    composition: CompositionDistribution,
    correspondence: AggregationCorrespondence,
    domain: ChoiceDomain,
) -> ConditionReport:
    """Does one unconditional joint distribution explain every menu?

    With a single non-atomic aggregate this is equality of the per-menu
    distributions; in general it is LP feasibility of a joint
    distribution over full composition profiles whose marginals match
    every observed menu (correlation across aggregates is allowed).
    Witnesses are (menu pair, tuple, mismatch) records from the pairwise
    necessary condition, or a single infeasibility record when the
    marginals are pairwise consistent but admit no joint distribution.
    """
    space = correspondence.space
    menus = [m for m in domain.menus if m & space.non_atomic_set]
    menus = [m for m in menus if frozenset(m) in set(composition.menus())]

    witnesses = []
    for first, second in itertools.combinations(menus, 2):
        shared = first & second & space.non_atomic_set
        if not shared:
            continue
        shared = space.sort(shared)
        marg_a = _marginal(composition.for_menu(first), shared)
        marg_b = _marginal(composition.for_menu(second), shared)
        for t in sorted(
            set(marg_a) | set(marg_b), key=lambda t: repr(t.parts)
        ):
            gap = abs(marg_a.get(t, 0.0) - marg_b.get(t, 0.0))
            if gap > MARGINAL_TOL:
                witnesses.append(((first, second), t, gap))
    if witnesses:
        return ConditionReport(holds=False, witnesses=tuple(witnesses))

    non_atomic = space.non_atomic
    if len(non_atomic) <= 1 or len(menus) <= 1:
        return ConditionReport(holds=True)

    atoms = 1
    for a in non_atomic:
        atoms *= 2 ** len(correspondence.underlying(a)) - 1
    if atoms > MAX_JOINT_ATOMS:
        raise TooLarge(f"joint composition space has {atoms} atoms")

    joint = _tuple_space(correspondence, non_atomic)
    index = {
        profile: j for j, profile in enumerate(joint)
    }
    rows, rhs = [], []
    for menu in menus:
        present = space.sort(menu & space.non_atomic_set)
        positions = [non_atomic.index(a) for a in present]
        groups: dict[CompositionTuple, list[int]] = {}
        for profile, j in index.items():
            key = CompositionTuple.of(
                {a: profile[p] for a, p in zip(present, positions)}
            )
            groups.setdefault(key, []).append(j)
        dist = composition.for_menu(menu)
        for key in set(groups) | set(dist):
            row = np.zeros(len(joint))
            for j in groups.get(key, []):
                row[j] = 1.0
            rows.append(row)
            rhs.append(dist.get(key, 0.0))
    rows.append(np.ones(len(joint)))
    rhs.append(1.0)
    result = linprog.solve_feasibility(
        np.array(rows), np.array(rhs), tol=MARGINAL_TOL * 10
    )
    if result.feasible:
        return ConditionReport(holds=True)
    witness = ("no-joint-distribution", None, result.residual)
    return ConditionReport(holds=False, witnesses=(witness,))


def _marginal(
    dist: dict[CompositionTuple, float], keep: tuple[str, ...]
) -> dict[CompositionTuple, float]:
    out: dict[CompositionTuple, float] = {}
    for t, w in dist.items():
        sub = CompositionTuple.of({a: t.part(a) for a in keep if a in t.aggregates})
        out[sub] = out.get(sub, 0.0) + w
    return out


def unconditional_joint(
    composition: CompositionDistribution,
    correspondence: AggregationCorrespondence,
    domain: ChoiceDomain,
) -> dict[CompositionTuple, float]:
    """A joint composition profile generating every per-menu distribution.

    For a single non-atomic aggregate this is any menu's distribution;
    in general it is extracted from the feasibility LP.  Aggregates that
    appear in no menu default to their full underlying set.
    """
    space = correspondence.space
    non_atomic = space.non_atomic
    atoms = 1
    for a in non_atomic:
        atoms *= 2 ** len(correspondence.underlying(a)) - 1
    if atoms > MAX_JOINT_ATOMS:
        raise TooLarge(f"joint composition space has {atoms} atoms")
    menus = [
        m
        for m in domain.menus
        if m & space.non_atomic_set and frozenset(m) in set(composition.menus())
    ]

    covered: set[str] = set()
    for m in menus:
        covered |= set(m) & set(non_atomic)
    defaults = {
        a: frozenset(correspondence.underlying(a))
        for a in non_atomic
        if a not in covered
    }

    if len(non_atomic) == 1:
        (a,) = non_atomic
        if not menus:
            return {CompositionTuple.of({a: defaults[a]}): 1.0}
        base = composition.for_menu(menus[0])
        return dict(base)

    full_menus = [m for m in menus if set(non_atomic) <= m]
    if full_menus:
        return dict(composition.for_menu(full_menus[0]))

    joint = _tuple_space(correspondence, non_atomic)
    rows, rhs = [], []
    for menu in menus:
        present = space.sort(menu & space.non_atomic_set)
        positions = [non_atomic.index(a) for a in present]
        groups: dict[CompositionTuple, list[int]] = {}
        for j, profile in enumerate(joint):
            key = CompositionTuple.of(
                {a: profile[p] for a, p in zip(present, positions)}
            )
            groups.setdefault(key, []).append(j)
        dist = composition.for_menu(menu)
        for key in set(groups) | set(dist):
            row = np.zeros(len(joint))
            for j in groups.get(key, []):
                row[j] = 1.0
            rows.append(row)
            rhs.append(dist.get(key, 0.0))
    rows.append(np.ones(len(joint)))
    rhs.append(1.0)
    result = linprog.solve_feasibility(
        np.array(rows), np.array(rhs), tol=MARGINAL_TOL * 10
    )
    if not result.feasible:
        raise NotMenuIndependent("no unconditional joint distribution exists")
    out: dict[CompositionTuple, float] = {}
    for profile, w in zip(joint, result.x):
        if w <= 1e-15:
            continue
        parts = {a: profile[i] for i, a in enumerate(non_atomic)}
        out[CompositionTuple.of(parts)] = out.get(
            CompositionTuple.of(parts), 0.0
        ) + float(w)
    total = math.fsum(out.values())
    return {t: w / total for t, w in out.items()}


def collapse_to_aru(
    prefs: PreferenceDistribution,
    correspondence: AggregationCorrespondence,
    composition: CompositionDistribution,
    domain: ChoiceDomain,
) -> PreferenceDistribution:
    """Project a menu-independent representation onto the aggregates.

    For each full composition profile and each support ranking, the
    induced aggregate ranking puts a above b exactly when the best
    realized member of a beats every realized member of b; profile and
    ranking weights multiply.  The result reproduces the representation's
    forward evaluation as an aggregate-level random utility model
    (verified internally before returning).
    """
    space = correspondence.space
    report = is_menu_independent(composition, correspondence, domain)
    if not report.holds:
        raise NotMenuIndependent(
            "composition distribution is not menu-independent"
        )
    joint = unconditional_joint(composition, correspondence, domain)

    weights: dict[LinearOrder, float] = {}
    for profile, pw in joint.items():
        realized = {}
        for a in space.members:
            if a in space.atomic_set:
                realized[a] = frozenset({correspondence.sole(a)})
            else:
                realized[a] = profile.part(a)
        for order, ow in prefs.items():
            best_rank = {
                a: min(order.rank(x) for x in realized[a]) for a in space.members
            }
            induced = LinearOrder(
                tuple(sorted(space.members, key=best_rank.__getitem__))
            )
            weights[induced] = weights.get(induced, 0.0) + pw * ow

    collapsed = PreferenceDistribution(weights)
    produced = forward_evaluate(prefs, correspondence, composition, domain)
    replayed = aru_evaluate(collapsed, domain)
    residual = replayed.max_cell_difference(produced)
    if residual > 1e-9:
        raise VerificationBug(
            f"collapsed distribution misses the forward evaluation by {residual!r}"
        )
    return collapsed
