"""Pure exchange economies recast as consentified abstract economies."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

from .economy import EconomySpec, RightsStructure
from .extreal import NEG_INF, ExtendedReal, ext
from .towers import BaseSpace, TowerChoice

Bundle = tuple[int, ...]
Price = tuple[Fraction, ...]


def dot(p: Sequence[Fraction], bundle: Sequence[int]) -> Fraction:
    return sum((Fraction(a) * b for a, b in zip(p, bundle)), Fraction(0))


def parse_price(text: str | Sequence[str], goods: int) -> Price:
    """``"1/2"`` (one good) or a list of rational strings."""
    parts = [text] if isinstance(text, (str, int, Fraction)) else list(text)
    p = tuple(Fraction(str(x)) for x in parts)
    if len(p) != goods:
        raise ValueError(f"price {text!r} has {len(p)} coordinates, expected {goods}")
    return p


def format_price(p: Price) -> str:
    return ",".join(str(x) for x in p)


@dataclass(frozen=True)
class AppropriationSchedule:
    """What the owner takes from each agent's endowment (itself included)."""

    agents: tuple[str, ...]
    takes: tuple[Bundle, ...]

    def take(self, agent: str) -> Bundle:
        return self.takes[self.agents.index(agent)]

    def total(self) -> Bundle:
        return tuple(map(sum, zip(*self.takes)))

    def __str__(self):
        return "+".join(f"{a}={'_'.join(map(str, b))}" for a, b in zip(self.agents, self.takes))


def linear_utility(weights: Sequence[Fraction]) -> Callable[[Bundle], Fraction]:
    w = tuple(Fraction(x) for x in weights)
    return lambda bundle: dot(w, bundle)


def leontief_utility(weights: Sequence[Fraction]) -> Callable[[Bundle], Fraction]:
    w = tuple(Fraction(x) for x in weights)
    return lambda bundle: min(a * b for a, b in zip(w, bundle))


@dataclass(frozen=True)
class ExchangeSpec:
    agents: tuple[str, ...]
    goods: int
    caps: Mapping[str, Bundle]
    endowments: Mapping[str, Bundle]
    utilities: Mapping[str, Callable[[Bundle], Fraction]]
    depth: int = 1
    prices: tuple[Price, ...] = ()
    allow_zero_price: bool = True
    _schedules: dict = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if self.goods < 1:
            raise ValueError("at least one good")
        if len(set(self.agents)) != len(self.agents) or not self.agents:
            raise ValueError("agents must be a nonempty list of unique ids")
        for a in self.agents:
            for name, vec in (("cap", self.caps[a]), ("endowment", self.endowments[a])):
                if len(vec) != self.goods:
                    raise ValueError(f"{name} of {a} has {len(vec)} goods, expected {self.goods}")
                if any(int(v) != v or v < 0 for v in vec):
                    raise ValueError(f"{name} of {a} must be non-negative integers")
            if a not in self.utilities:
                raise ValueError(f"no utility for {a}")
        for p in self.prices:
            if len(p) != self.goods:
                raise ValueError(f"price {p} has the wrong number of goods")
            if not any(p) and not self.allow_zero_price:
                raise ValueError("the zero price vector was not requested")
        if self.depth < 1:
            raise ValueError("the consentified exchange economy needs depth >= 1")
        object.__setattr__(self, "_schedules", {})

    def box(self, agent: str) -> list[Bundle]:
        return list(itertools.product(*(range(c + 1) for c in self.caps[agent])))

    def schedules(self, agent: str) -> list[AppropriationSchedule]:
        if agent not in self._schedules:
            box = self.box(agent)
            self._schedules[agent] = [
                AppropriationSchedule(self.agents, takes)
                for takes in itertools.product(box, repeat=len(self.agents))
            ]
        return self._schedules[agent]

    def space(self) -> BaseSpace:
        return BaseSpace(self.agents, tuple(tuple(self.schedules(a)) for a in self.agents))

    def over_budget(self, agent: str, bases: Mapping[str, AppropriationSchedule]) -> bool:
        taken = [bases[b].take(agent) for b in self.agents]
        return any(sum(t[i] for t in taken) > self.endowments[agent][i] for i in range(self.goods))

    def base_utility(self, agent: str) -> Callable[[Mapping[str, AppropriationSchedule]], ExtendedReal]:
        u = self.utilities[agent]

        def value(bases):
            if self.over_budget(agent, bases):
                return NEG_INF
            return ext(u(bases[agent].total()))

        return value


def takes_nothing_from(holder: str) -> Callable[[TowerChoice], bool]:
    """Rights of ``holder``: it may forbid only choices that take something from it."""

    def permitted(y: TowerChoice) -> bool:
        return any(y.base.take(holder))

    return permitted


def exchange_rights(spec: ExchangeSpec) -> RightsStructure:
    return RightsStructure({(a, b): takes_nothing_from(a) for a in spec.agents for b in spec.agents})


def build_consentified_exchange(spec: ExchangeSpec) -> EconomySpec:
    """Abstract economy whose utility applies the three support conditions.

    Rights: an agent may forbid only choices that take from it.  Non-aggression:
    a forbidden choice is worthless.  Budget: takings from an agent may not
    exceed its endowment (folded into the base utility).
    """
    return EconomySpec(
        space=spec.space(),
        depth=spec.depth,
        base_utility={a: spec.base_utility(a) for a in spec.agents},
        rights=exchange_rights(spec),
        non_aggression=True,
        self_aggression=True,
    )


def autarky_schedule(spec: ExchangeSpec, agent: str, bundle: Bundle | None = None) -> AppropriationSchedule:
    zero = (0,) * spec.goods
    own = tuple(spec.endowments[agent]) if bundle is None else bundle
    return AppropriationSchedule(spec.agents, tuple(own if b == agent else zero for b in spec.agents))


def decompose_allocation(
    spec: ExchangeSpec, allocation: Mapping[str, Bundle]
) -> dict[str, AppropriationSchedule] | None:
    """Takings realising ``allocation``: each agent draws on its own endowment first,
    then greedily on the others in agent order.  ``None`` when a taking would
    leave the owner's box or the endowments run out.
    """
    remaining = {a: list(spec.endowments[a]) for a in spec.agents}
    plan = {a: {b: [0] * spec.goods for b in spec.agents} for a in spec.agents}
    for a in spec.agents:
        for i in range(spec.goods):
            own = min(allocation[a][i], remaining[a][i])
            plan[a][a][i] = own
            remaining[a][i] -= own
    for a in spec.agents:
        for i in range(spec.goods):
            need = allocation[a][i] - plan[a][a][i]
            for b in spec.agents:
                if need == 0:
                    break
                if b == a:
                    continue
                got = min(need, remaining[b][i])
                plan[a][b][i] += got
                remaining[b][i] -= got
                need -= got
            if need:
                return None
    out = {}
    for a in spec.agents:
        takes = tuple(tuple(plan[a][b]) for b in spec.agents)
        if any(t[i] > spec.caps[a][i] for t in takes for i in range(spec.goods)):
            return None
        out[a] = AppropriationSchedule(spec.agents, takes)
    return out
