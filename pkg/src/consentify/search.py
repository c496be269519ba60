"""Choice families, best responses, pure Nash enumeration and the Walrasian comparator."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Hashable, Mapping, Sequence

from .economy import EconomySpec, Profile, evaluate_utility
from .exchange import (
    Bundle,
    ExchangeSpec,
    Price,
    build_consentified_exchange,
    decompose_allocation,
    dot,
    format_price,
)
from .extreal import ExtendedReal, argmax, ext
from .pricing import MaterializedPricing, price_forbidding_towers, pricey_towers
from .towers import (
    DEFAULT_BUDGET,
    BaseSpace,
    BudgetExceeded,
    TowerChoice,
    TowerSet,
    enumerate_towers,
    forbid_constructor,
    format_tower,
    no_forbid_tower,
)


# -- generators ----------------------------------------------------------


@dataclass(frozen=True)
class Exhaustive:
    """Every tower of the owner (budget-guarded)."""


@dataclass(frozen=True)
class Explicit:
    towers: tuple[TowerChoice, ...]


@dataclass(frozen=True)
class Forbid:
    """``forbid_constructor(base, carrier, target, towers)``."""

    base: Hashable
    carrier: TowerChoice
    target: str
    towers: tuple[TowerChoice, ...]


@dataclass(frozen=True)
class NoForbid:
    """One tower per base choice (or per listed base) forbidding nothing."""

    bases: tuple[Hashable, ...] | None = None


@dataclass(frozen=True)
class PriceGen:
    """Price-forbidding towers for one dictionary price (see ``price_forbidding_towers``)."""

    price: Price
    bases: tuple[Hashable, ...] | None = None
    pricey_only: bool = False


Generator = Exhaustive | Explicit | Forbid | NoForbid | PriceGen


@dataclass(frozen=True)
class ChoiceFamily:
    owner: str
    depth: int
    generators: tuple[Generator, ...]

    def towers(
        self,
        space: BaseSpace,
        budget: int = DEFAULT_BUDGET,
        pricing=None,
        exchange: ExchangeSpec | None = None,
    ) -> TowerSet:
        """Generated members, deduplicated in generator order."""
        members = []
        for g in self.generators:
            if isinstance(g, Exhaustive):
                members.extend(enumerate_towers(space, self.owner, self.depth, budget))
            elif isinstance(g, Explicit):
                members.extend(g.towers)
            elif isinstance(g, Forbid):
                members.append(forbid_constructor(g.base, g.carrier, g.target, g.towers))
            elif isinstance(g, NoForbid):
                for b in g.bases or space.choices(self.owner):
                    members.append(no_forbid_tower(space, self.owner, b, self.depth))
            elif isinstance(g, PriceGen):
                if pricing is None or exchange is None:
                    raise ValueError("PRICE generators need an exchange economy and a pricing source")
                make = pricey_towers if g.pricey_only else price_forbidding_towers
                members.extend(make(pricing, exchange, self.owner, g.price, g.bases))
            else:
                raise TypeError(f"unknown generator {g!r}")
        return TowerSet(self.owner, self.depth, members)


# -- best responses and Nash ---------------------------------------------


def best_response(
    economy: EconomySpec, profile: Profile, agent: str, family: Sequence[TowerChoice]
) -> tuple[list[TowerChoice], ExtendedReal]:
    """All maximisers of the agent's utility over ``family`` (family order) and the maximum."""
    family = list(family)
    if not family:
        raise ValueError("best response over an empty family")
    for t in family:
        if t.owner != agent or t.depth != economy.depth:
            raise ValueError(f"family member {format_tower(t)} does not belong to {agent} at depth {economy.depth}")
    return argmax(family, lambda t: evaluate_utility(economy, profile.replace(agent, t), agent))


@dataclass
class EquilibriumReport:
    equilibria: list[tuple[Profile, dict[str, ExtendedReal]]]
    scope: dict[str, int]
    profiles_searched: int

    @property
    def empty(self) -> bool:
        return not self.equilibria

    def as_dict(self) -> dict:
        return {
            "scope": self.scope,
            "profiles_searched": self.profiles_searched,
            "empty": self.empty,
            "equilibria": [
                {"profile": p.texts(), "utilities": {a: str(v) for a, v in u.items()}}
                for p, u in self.equilibria
            ],
        }


def nash_enumerate(
    economy: EconomySpec, families: Mapping[str, Sequence[TowerChoice]], budget: int = DEFAULT_BUDGET
) -> EquilibriumReport:
    """Exact pure-strategy Nash equilibria within the given families."""
    agents = economy.agents
    members = [list(families[a]) for a in agents]
    size = math.prod(len(m) for m in members)
    if size > budget:
        raise BudgetExceeded("profile space", size, budget)
    cache: dict = {}
    found = []
    for combo in itertools.product(*members):
        profile = Profile(agents, combo)
        values = {}
        for k, a in enumerate(agents):
            key = (a, combo[:k] + combo[k + 1 :])
            if key not in cache:
                winners, v = best_response(economy, profile, a, members[k])
                cache[key] = (frozenset(winners), v)
            winners, v = cache[key]
            if combo[k] not in winners:
                break
            values[a] = v
        else:
            found.append((profile, values))
    return EquilibriumReport(found, {a: len(m) for a, m in zip(agents, members)}, size)


def is_equilibrium(
    economy: EconomySpec,
    profile: Profile,
    families: Mapping[str, Sequence[TowerChoice]],
    cache: dict | None = None,
) -> bool:
    """Best-response check from scratch; ``cache`` may be shared across calls that
    use the same economy and families."""
    cache = {} if cache is None else cache
    for k, a in enumerate(economy.agents):
        key = (a, profile.choices[:k] + profile.choices[k + 1 :])
        if key not in cache:
            winners, _ = best_response(economy, profile, a, families[a])
            cache[key] = frozenset(winners)
        if profile[a] not in cache[key]:
            return False
    return True


# -- Walrasian comparator ------------------------------------------------


@dataclass
class WalrasianEquilibrium:
    price: Price
    allocation: dict[str, Bundle]
    utilities: dict[str, ExtendedReal]

    def as_dict(self) -> dict:
        return {
            "price": format_price(self.price),
            "allocation": {a: list(b) for a, b in self.allocation.items()},
            "utilities": {a: str(v) for a, v in self.utilities.items()},
        }


def demand(spec: ExchangeSpec, agent: str, p: Price) -> list[Bundle]:
    income = dot(p, spec.endowments[agent])
    affordable = [z for z in spec.box(agent) if dot(p, z) <= income]
    winners, _ = argmax(affordable, lambda z: ext(spec.utilities[agent](z)))
    return winners


def walrasian_oracle(spec: ExchangeSpec, budget: int = DEFAULT_BUDGET) -> list[WalrasianEquilibrium]:
    """Every (dictionary price, grid allocation) where demands clear the market exactly."""
    total = tuple(sum(spec.endowments[a][i] for a in spec.agents) for i in range(spec.goods))
    out = []
    for p in spec.prices:
        demands = [demand(spec, a, p) for a in spec.agents]
        size = math.prod(len(d) for d in demands)
        if size > budget:
            raise BudgetExceeded(f"demand product at price {format_price(p)}", size, budget)
        for combo in itertools.product(*demands):
            if tuple(map(sum, zip(*combo))) == total:
                allocation = dict(zip(spec.agents, combo))
                utilities = {a: ext(spec.utilities[a](allocation[a])) for a in spec.agents}
                out.append(WalrasianEquilibrium(p, allocation, utilities))
    return out


@dataclass
class ComparatorRow:
    walrasian: WalrasianEquilibrium
    representable: bool
    schedules: dict[str, str] = field(default_factory=dict)
    candidate: dict[str, str] = field(default_factory=dict)
    candidate_pricey: dict[str, bool] = field(default_factory=dict)
    consentified_utilities: dict[str, str] = field(default_factory=dict)
    survives: bool | None = None
    deviations: list[dict] = field(default_factory=list)
    note: str = ""

    def as_dict(self) -> dict:
        d = self.walrasian.as_dict()
        d.update(
            representable=self.representable,
            schedules=self.schedules,
            candidate=self.candidate,
            candidate_pricey=self.candidate_pricey,
            consentified_utilities=self.consentified_utilities,
            survives=self.survives,
            deviations=self.deviations,
            note=self.note,
        )
        return d


def consentification_comparator(
    spec: ExchangeSpec,
    pricing,
    families: Mapping[str, Sequence[TowerChoice]] | None = None,
    equilibria: list[WalrasianEquilibrium] | None = None,
    budget: int = DEFAULT_BUDGET,
) -> list[ComparatorRow]:
    """Embed each Walrasian equilibrium as a consentified profile and test it for Nash.

    Candidate: the allocation's takings (own endowment first) as bases, with
    price-forbidding towers at the equilibrium price.  Each agent may deviate
    within its family plus its candidate tower.
    """
    economy = build_consentified_exchange(spec)
    if equilibria is None:
        equilibria = walrasian_oracle(spec, budget)
    rows = []
    for eq in equilibria:
        schedules = decompose_allocation(spec, eq.allocation)
        if schedules is None:
            rows.append(ComparatorRow(eq, False, note="allocation has no takings inside the consumption boxes"))
            continue
        candidate = {}
        pricey = {}
        for a in spec.agents:
            (t,) = price_forbidding_towers(pricing, spec, a, eq.price, [schedules[a]])
            candidate[a] = t
            pricey[a] = bool(pricey_towers(pricing, spec, a, eq.price, [schedules[a]]))
        profile = Profile(spec.agents, tuple(candidate[a] for a in spec.agents))
        row = ComparatorRow(
            eq,
            True,
            schedules={a: str(s) for a, s in schedules.items()},
            candidate=profile.texts(),
            candidate_pricey=pricey,
        )
        row.consentified_utilities = {a: str(evaluate_utility(economy, profile, a)) for a in spec.agents}
        survives = True
        for a in spec.agents:
            fam = list(families[a]) if families else []
            if candidate[a] not in fam:
                fam.append(candidate[a])
            winners, v = best_response(economy, profile, a, fam)
            current = evaluate_utility(economy, profile, a)
            if v > current:
                survives = False
                row.deviations.append({"agent": a, "tower": format_tower(winners[0]), "value": str(v), "current": str(current)})
        row.survives = survives
        rows.append(row)
    return rows


def default_exchange_families(spec: ExchangeSpec, pricing) -> dict[str, TowerSet]:
    space = spec.space()
    gens = (NoForbid(),) + tuple(PriceGen(p) for p in spec.prices)
    return {
        a: ChoiceFamily(a, spec.depth, gens).towers(space, pricing=pricing, exchange=spec)
        for a in spec.agents
    }


def materialized_pricing(spec: ExchangeSpec, reading, budget: int = DEFAULT_BUDGET) -> MaterializedPricing:
    space = spec.space()
    universe = {a: enumerate_towers(space, a, spec.depth, budget) for a in spec.agents}
    return MaterializedPricing(spec, universe, reading)
