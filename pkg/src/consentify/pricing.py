"""Price sets, pricey choices, and the "prices are good" check.

``R_b(p)`` holds the choices ``y`` of ``b`` that forbid every counterparty
choice ``x`` with ``p . x_0(b) >= p . y_0(a)`` (``>`` under the strict
reading).  A choice is pricey for ``p`` when, toward every other agent, its
forbidden set is exactly that agent's price set; its self coordinate must be
empty (forbidding oneself only ever lowers utility, so this loses no
generality for the best-response comparison).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .economy import EconomySpec, Profile, evaluate_utility
from .exchange import ExchangeSpec, Price, dot, format_price
from .extreal import argmax
from .towers import (
    TowerChoice,
    TowerSet,
    closure,
    forbidden_set,
    forbids,
    format_tower,
    no_forbid_tower,
    project,
)

PASS, FAIL, VACUOUS_FAIL, REFUSED = "PASS", "FAIL", "VACUOUS-FAIL", "REFUSED"


@dataclass(frozen=True)
class PriceReading:
    """How to read the price-set definition: inequality and counterparty quantifier.

    ``designated`` maps each agent to the single counterparty it faces; when
    absent under the designated reading, the first other agent is used.
    """

    strict: bool = False
    designated: bool = False
    counterparty: Mapping[str, str] | None = None

    @property
    def name(self) -> str:
        return f"{'gt' if self.strict else 'geq'}/{'designated' if self.designated else 'universal'}"

    def holds(self, lhs: Fraction, rhs: Fraction) -> bool:
        return lhs > rhs if self.strict else lhs >= rhs

    def counterparties(self, beta: str, agents: Sequence[str]) -> tuple[str, ...]:
        others = tuple(a for a in agents if a != beta)
        if not self.designated or not others:
            return others
        if self.counterparty and beta in self.counterparty:
            return (self.counterparty[beta],)
        return others[:1]


READINGS = tuple(
    PriceReading(strict=s, designated=d) for s in (False, True) for d in (False, True)
)


def condition_bases(spec: ExchangeSpec, p: Price, beta: str, alpha: str, y_base, reading: PriceReading) -> list:
    """Base choices ``s`` of ``alpha`` whose take from ``beta`` the price condition covers."""
    rhs = dot(p, y_base.take(alpha))
    return [s for s in spec.schedules(alpha) if reading.holds(dot(p, s.take(beta)), rhs)]


def price_member(
    spec: ExchangeSpec,
    p: Price,
    beta: str,
    y: TowerChoice,
    universe: Mapping[str, Iterable[TowerChoice]],
    reading: PriceReading,
) -> bool:
    """Whether ``y`` lies in ``R_beta(p)``, quantifying ``x`` over ``universe``."""
    for alpha in reading.counterparties(beta, spec.agents):
        rhs = dot(p, y.base.take(alpha))
        lhs_cache = {}
        for x in universe[alpha]:
            lhs = lhs_cache.get(x.base)
            if lhs is None:
                lhs = lhs_cache[x.base] = dot(p, x.base.take(beta))
            if reading.holds(lhs, rhs) and not forbids(y, x):
                return False
    return True


def price_set(
    spec: ExchangeSpec, p: Price, beta: str, universe: Mapping[str, TowerSet], reading: PriceReading = PriceReading()
) -> TowerSet:
    return universe[beta].subset(y for y in universe[beta] if price_member(spec, p, beta, y, universe, reading))


class MaterializedPricing:
    """Price sets computed member by member over explicit universes."""

    def __init__(self, spec: ExchangeSpec, universe: Mapping[str, TowerSet], reading: PriceReading = PriceReading()):
        self.spec = spec
        self.universe = universe
        self.reading = reading
        self.depth = next(iter(universe.values())).depth
        self._sets = {}

    def price_set(self, p: Price, beta: str) -> TowerSet:
        key = (p, beta)
        if key not in self._sets:
            self._sets[key] = price_set(self.spec, p, beta, self.universe, self.reading)
        return self._sets[key]

    def image(self, p: Price, beta: str) -> frozenset:
        return frozenset(project(y, self.depth - 1) for y in self.price_set(p, beta))

    def closedness_witness(self, p: Price, beta: str, closure_fn=closure):
        R = self.price_set(p, beta)
        extra = [y for y in closure_fn(R, self.depth - 1, self.universe[beta]) if y not in R]
        if not extra:
            return None
        y_out = extra[0]
        y_in = next(y for y in R if project(y, self.depth - 1) == project(y_out, self.depth - 1))
        return y_in, y_out

    def closed_image(self, p: Price, beta: str) -> frozenset | None:
        return None if self.closedness_witness(p, beta) is not None else self.image(p, beta)

    def is_pricey(self, x: TowerChoice, prices: Sequence[Price]) -> list[Price]:
        if x.top(x.owner):
            return []
        out = []
        for p in prices:
            if all(
                forbidden_set(x, b, self.universe[b]) == self.price_set(p, b)
                for b in self.spec.agents
                if b != x.owner
            ):
                out.append(p)
        return out


class ClassPricing:
    """Depth-1 price sets over exhaustive universes, decided one base class at a time.

    At depth 1, ``forbids(y, x)`` reads only the base of ``x`` and the price
    condition reads only bases, so one representative per base of each
    counterparty decides membership; and membership is monotone in the
    forbidden sets, so a class lies entirely inside ``R`` exactly when its
    forbid-nothing tower does.
    """

    def __init__(self, spec: ExchangeSpec, reading: PriceReading = PriceReading()):
        if spec.depth != 1:
            raise ValueError("class pricing is defined for depth 1")
        self.spec = spec
        self.reading = reading
        self.space = spec.space()
        self.depth = 1
        self.reps = {a: [no_forbid_tower(self.space, a, s, 1) for s in spec.schedules(a)] for a in spec.agents}
        self._classes = {}

    def _minimal(self, p: Price, beta: str, base) -> TowerChoice:
        top = {a: () for a in self.spec.agents}
        for alpha in self.reading.counterparties(beta, self.spec.agents):
            top[alpha] = [TowerChoice(alpha, s) for s in condition_bases(self.spec, p, beta, alpha, base, self.reading)]
        return TowerChoice.build(beta, base, top, 1)

    def classes(self, p: Price, beta: str) -> list[tuple[object, bool, bool]]:
        """Per base of ``beta``: (base, some member in R, all members in R)."""
        key = (p, beta)
        if key not in self._classes:
            rows = []
            for base in self.spec.schedules(beta):
                some = price_member(self.spec, p, beta, self._minimal(p, beta, base), self.reps, self.reading)
                every = price_member(
                    self.spec, p, beta, no_forbid_tower(self.space, beta, base, 1), self.reps, self.reading
                )
                rows.append((base, some, every))
            self._classes[key] = rows
        return self._classes[key]

    def image(self, p: Price, beta: str) -> frozenset:
        return frozenset(TowerChoice(beta, b) for b, some, _ in self.classes(p, beta) if some)

    def closedness_witness(self, p: Price, beta: str):
        for base, some, every in self.classes(p, beta):
            if some and not every:
                return self._minimal(p, beta, base), no_forbid_tower(self.space, beta, base, 1)
        return None

    def closed_image(self, p: Price, beta: str) -> frozenset | None:
        return None if self.closedness_witness(p, beta) is not None else self.image(p, beta)


def pricey_towers(source, spec: ExchangeSpec, owner: str, p: Price, bases=None) -> list[TowerChoice]:
    """The pricey towers of ``owner`` for ``p`` (one per base), or none."""
    space = spec.space()
    top = {owner: frozenset()}
    for b in spec.agents:
        if b != owner:
            image = source.closed_image(p, b)
            if image is None:
                return []
            top[b] = image
    return [TowerChoice.build(owner, s, top, source.depth) for s in (bases or space.choices(owner))]


def price_forbidding_towers(source, spec: ExchangeSpec, owner: str, p: Price, bases=None) -> list[TowerChoice]:
    """Towers forbidding the closure of every counterparty's price set (self coordinate empty).

    These coincide with the pricey towers whenever the price sets are closed.
    """
    top = {owner: frozenset()}
    for b in spec.agents:
        if b != owner:
            top[b] = source.image(p, b)
    return [TowerChoice.build(owner, s, top, source.depth) for s in (bases or spec.schedules(owner))]


@dataclass
class PriceCheck:
    agent: str
    reading: str
    verdict: str
    profiles_checked: int = 0
    overall_value: str | None = None
    overall_witness: str | None = None
    pricey_value: str | None = None
    pricey_witness: str | None = None
    counter_profile: dict | None = None
    diagnostics: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "agent": self.agent,
            "reading": self.reading,
            "verdict": self.verdict,
            "profiles_checked": self.profiles_checked,
            "overall_value": self.overall_value,
            "overall_witness": self.overall_witness,
            "pricey_value": self.pricey_value,
            "pricey_witness": self.pricey_witness,
            "counter_profile": self.counter_profile,
            "diagnostics": self.diagnostics,
        }


def check_prices_are_good(
    econ: EconomySpec,
    spec: ExchangeSpec,
    profile: Profile,
    alpha: str,
    universe: Mapping[str, TowerSet],
    reading: PriceReading = PriceReading(),
    pricing: MaterializedPricing | None = None,
) -> PriceCheck:
    """Compare the best utility of ``alpha`` over its universe with the best over its pricey choices."""
    pricing = pricing or MaterializedPricing(spec, universe, reading)
    for b in spec.agents:
        if b != alpha and not pricing.is_pricey(profile[b], spec.prices):
            raise ValueError(f"choice of {b} is not pricey for any dictionary price")
    value = lambda x: evaluate_utility(econ, profile.replace(alpha, x), alpha)  # noqa: E731
    best_all, v_all = argmax(universe[alpha], value)
    pricey = [x for x in universe[alpha] if pricing.is_pricey(x, spec.prices)]
    check = PriceCheck(alpha, reading.name, PASS, 1, str(v_all), format_tower(best_all[0]))
    check.counter_profile = {b: format_tower(profile[b]) for b in spec.agents if b != alpha}
    if not pricey:
        check.verdict = VACUOUS_FAIL
        check.diagnostics.append(f"no pricey choice of {alpha} in the universe")
        return check
    best_p, v_p = argmax(pricey, value)
    check.pricey_value, check.pricey_witness = str(v_p), format_tower(best_p[0])
    check.verdict = PASS if v_p >= v_all else FAIL
    return check


def merge_checks(agent: str, reading: PriceReading, checks: list[PriceCheck], diagnostics: list[str]) -> PriceCheck:
    """One verdict over all pricey counter-profiles: the first FAIL, else PASS; none at all is vacuous."""
    if not checks:
        return PriceCheck(agent, reading.name, VACUOUS_FAIL, 0, diagnostics=diagnostics)
    for c in checks:
        if c.verdict == FAIL:
            c.profiles_checked = len(checks)
            c.diagnostics = diagnostics + c.diagnostics
            return c
    if all(c.verdict == VACUOUS_FAIL for c in checks):
        c = checks[0]
    else:
        c = next(c for c in checks if c.verdict == PASS)
    c.profiles_checked = len(checks)
    c.diagnostics = diagnostics + c.diagnostics
    return c


def run_prices_materialized(
    econ: EconomySpec, spec: ExchangeSpec, universe: Mapping[str, TowerSet], reading: PriceReading
) -> list[PriceCheck]:
    """``check_prices_are_good`` for every agent against every pricey counter-profile."""
    pricing = MaterializedPricing(spec, universe, reading)
    pricey = {
        a: [x for x in universe[a] if pricing.is_pricey(x, spec.prices)] for a in spec.agents
    }
    out = []
    for alpha in spec.agents:
        others = [b for b in spec.agents if b != alpha]
        diagnostics = [f"no pricey choice of {b}" for b in others if not pricey[b]]
        checks = []
        if not diagnostics:
            filler = universe[alpha].members[0]
            for combo in itertools.product(*(pricey[b] for b in others)):
                choices = dict(zip(others, combo))
                choices[alpha] = filler
                profile = Profile(spec.agents, tuple(choices[a] for a in spec.agents))
                checks.append(check_prices_are_good(econ, spec, profile, alpha, universe, reading, pricing))
        out.append(merge_checks(alpha, reading, checks, diagnostics))
    return out


def describe_price(p: Price) -> str:
    return format_price(p)
