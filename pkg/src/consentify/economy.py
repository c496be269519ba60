"""Abstract economies over consentified choice spaces.

Utilities live in the extended reals; every constraint (rights, the
non-aggression principle, a government's punishments) is a filter that can
only force ``NEG_INF``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Container, Hashable, Iterable, Mapping, Sequence

from .extreal import NEG_INF, ExtendedReal, ext
from .towers import (
    BaseSpace,
    DepthError,
    TowerChoice,
    TowerSet,
    forbidden_set,
    forbids,
    format_tower,
    sort_key,
)

FILTER_ORDER = ("rights", "non_aggression", "government")


class ProfileError(ValueError):
    """A profile that does not fit its economy."""


@dataclass(frozen=True)
class Profile:
    """One tower per agent, in the economy's agent order."""

    agents: tuple[str, ...]
    choices: tuple[TowerChoice, ...]

    def __post_init__(self):
        if len(self.agents) != len(self.choices):
            raise ProfileError("one choice per agent")
        for a, t in zip(self.agents, self.choices):
            if t.owner != a:
                raise ProfileError(f"choice for {a} is owned by {t.owner}")
        if len({t.depth for t in self.choices}) > 1:
            raise ProfileError("profile depths are not uniform")

    @classmethod
    def of(cls, choices: Mapping[str, TowerChoice]) -> Profile:
        return cls(tuple(choices), tuple(choices.values()))

    def __getitem__(self, agent: str) -> TowerChoice:
        return self.choices[self.agents.index(agent)]

    @property
    def depth(self) -> int:
        return self.choices[0].depth

    def replace(self, agent: str, tower: TowerChoice) -> Profile:
        i = self.agents.index(agent)
        return Profile(self.agents, self.choices[:i] + (tower,) + self.choices[i + 1 :])

    def bases(self) -> dict[str, Hashable]:
        return {a: t.base for a, t in zip(self.agents, self.choices)}

    def texts(self) -> dict[str, str]:
        return {a: format_tower(t) for a, t in zip(self.agents, self.choices)}


def allow_all(tower: TowerChoice) -> bool:
    return True


class RightsStructure:
    """Per ordered pair ``(holder, target)``, which towers ``holder`` may forbid.

    Predicates act on depth-``(D-1)`` towers of the target, the members of a
    tower's top-level forbidden sets; a predicate that only reads the base
    label is valid at every depth.  Pairs without a rule use ``default``.
    """

    def __init__(
        self,
        rules: Mapping[tuple[str, str], Callable[[TowerChoice], bool] | Iterable[TowerChoice]] = (),
        default: Callable[[TowerChoice], bool] = allow_all,
    ):
        self._rules = {}
        for pair, rule in dict(rules).items():
            if not callable(rule):
                allowed = frozenset(rule)
                rule = allowed.__contains__
            self._rules[pair] = rule
        self.default = default

    def permits(self, holder: str, target: str, tower: TowerChoice) -> bool:
        return bool(self._rules.get((holder, target), self.default)(tower))

    def materialize(self, holder: str, target: str, universe: TowerSet) -> TowerSet:
        return universe.subset(t for t in universe if self.permits(holder, target, t))

    def enlarged(self, other: RightsStructure) -> RightsStructure:
        """Pointwise union with ``other``."""
        pairs = set(self._rules) | set(other._rules)

        def union(pair):
            return lambda t: self.permits(*pair, t) or other.permits(*pair, t)

        default = lambda t: self.default(t) or other.default(t)  # noqa: E731
        return RightsStructure({p: union(p) for p in pairs}, default)


@dataclass(frozen=True)
class PunishmentChoice:
    """A base label of the government with its punishment goods adjoined."""

    label: Hashable
    punished: frozenset[str]

    def __str__(self):
        return f"{self.label}/punish={'.'.join(sorted(self.punished))}"


PenalCode = Callable[[Profile], Mapping[str, Container[TowerChoice]]]


@dataclass(frozen=True)
class GovernmentConfig:
    """A government agent and its penal code (a function of the whole profile).

    A static list of sets is the constant function.
    """

    agent: str
    penal_code: PenalCode

    @staticmethod
    def static(agent: str, sets: Mapping[str, Container[TowerChoice]]) -> GovernmentConfig:
        frozen = dict(sets)
        return GovernmentConfig(agent, lambda profile: frozen)


def with_punishment_goods(space: BaseSpace, government: str) -> BaseSpace:
    """Adjoin one Boolean punishment good per non-government agent to ``X^0`` of ``government``."""
    others = [a for a in space.agents if a != government]
    flags = [frozenset(c) for r in range(len(others) + 1) for c in itertools.combinations(others, r)]
    choices = [PunishmentChoice(label, f) for label in space.choices(government) for f in flags]
    return space.replace_choices(government, choices)


def strip_label(label: Hashable) -> Hashable:
    return label.label if isinstance(label, PunishmentChoice) else label


BaseUtility = Callable[[Mapping[str, Hashable]], "ExtendedReal | int | float"]


@dataclass(frozen=True)
class EconomySpec:
    """Agents, base choices, truncation depth, utilities and the constraint filters.

    ``base_utility[a]`` receives the base labels of the profile (punishment
    goods stripped from the government's label).
    """

    space: BaseSpace
    depth: int
    base_utility: Mapping[str, BaseUtility]
    rights: RightsStructure | None = None
    non_aggression: bool = False
    self_aggression: bool = True
    government: GovernmentConfig | None = None
    filter_order: tuple[str, ...] = field(default=FILTER_ORDER)
    # towers already found to fit this economy
    _checked: set = field(default_factory=set, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if self.depth < 0:
            raise DepthError("depth must be non-negative")
        missing = set(self.space.agents) - set(self.base_utility)
        if missing:
            raise ValueError(f"no base utility for {sorted(missing)}")
        uses_consent = self.rights is not None or self.non_aggression or self.government is not None
        if uses_consent and self.depth < 1:
            raise DepthError("rights, non-aggression and governments need depth >= 1")
        if self.government is not None:
            g = self.government.agent
            if g not in self.space.agents:
                raise ValueError(f"government {g!r} is not an agent")
            if not all(isinstance(c, PunishmentChoice) for c in self.space.choices(g)):
                raise ValueError("the government's base choices must carry punishment goods")
        if sorted(self.filter_order) != sorted(FILTER_ORDER):
            raise ValueError(f"filter order must permute {FILTER_ORDER}")

    @property
    def agents(self) -> tuple[str, ...]:
        return self.space.agents


def check_profile(spec: EconomySpec, profile: Profile):
    if profile.agents != spec.agents:
        raise ProfileError(f"profile agents {profile.agents} differ from {spec.agents}")
    seen = spec._checked
    for t in profile.choices:
        if t in seen:
            continue
        if t.depth != spec.depth:
            raise ProfileError(f"choice of {t.owner} has depth {t.depth}, economy depth is {spec.depth}")
        if t.base not in spec.space.choices(t.owner):
            raise ProfileError(f"base {t.base!r} is not a choice of {t.owner}")
        if t.levels and set(t.counterparties) != set(spec.agents):
            raise ProfileError(f"choice of {t.owner} lacks coordinates for some agents")
        if len(seen) < 1 << 16:
            seen.add(t)


def rights_violation(spec: EconomySpec, profile: Profile, agent: str) -> tuple[str, TowerChoice] | None:
    """A tower the agent forbids without the right to, as ``(target, tower)``."""
    if spec.rights is None:
        return None
    x = profile[agent]
    for b in spec.agents:
        top = x.top(b)
        if all(spec.rights.permits(agent, b, y) for y in top):
            continue
        # sorted only to make the reported witness canonical
        for y in sorted(top, key=sort_key):
            if not spec.rights.permits(agent, b, y):
                return b, y
    return None


def aggression_witness(profile: Profile, agent: str, include_self: bool = True) -> str | None:
    """Some agent whose choice forbids ``agent``'s choice."""
    if profile.depth < 1:
        raise DepthError("aggression needs depth >= 1")
    x = profile[agent]
    for b, y in zip(profile.agents, profile.choices):
        if b == agent and not include_self:
            continue
        if forbids(y, x):
            return b
    return None


@dataclass(frozen=True)
class GovernmentVerdict:
    penalized: frozenset[str]
    legal: bool
    unpunished: tuple[str, ...]


def government_filter(config: GovernmentConfig, profile: Profile) -> GovernmentVerdict:
    g = profile[config.agent].base
    punished = g.punished if isinstance(g, PunishmentChoice) else frozenset()
    code = config.penal_code(profile)
    unpunished = tuple(
        a
        for a in profile.agents
        if a != config.agent and a not in punished and profile[a] in code.get(a, ())
    )
    return GovernmentVerdict(frozenset(punished), not unpunished, unpunished)


class _ForbiddenByAny:
    """Towers of ``victim`` forbidden by some choice in ``profile``."""

    def __init__(self, profile: Profile, victim: str, include_self: bool):
        self.profile = profile
        self.victim = victim
        self.include_self = include_self

    def __contains__(self, tower: TowerChoice) -> bool:
        for b, x in zip(self.profile.agents, self.profile.choices):
            if b == self.victim and not self.include_self:
                continue
            if forbids(x, tower):
                return True
        return False


def minarchy_penal_code(
    profile: Profile,
    universe: Mapping[str, TowerSet] | None = None,
    include_self: bool = True,
) -> dict[str, Container[TowerChoice]]:
    """Penal code punishing any choice someone forbids.

    With a ``universe`` the sets are materialized within it; otherwise they
    are membership tests.
    """
    code = {a: _ForbiddenByAny(profile, a, include_self) for a in profile.agents}
    if universe is None:
        return code
    out = {}
    for a in profile.agents:
        members = []
        for b, x in zip(profile.agents, profile.choices):
            if b == a and not include_self:
                continue
            members.extend(forbidden_set(x, a, universe[a]))
        out[a] = TowerSet(a, profile.depth, sorted(set(members), key=lambda t: universe[a].members.index(t)))
    return out


def minarchy(agent: str, include_self: bool = True) -> GovernmentConfig:
    return GovernmentConfig(agent, lambda profile: minarchy_penal_code(profile, include_self=include_self))


def base_value(spec: EconomySpec, profile: Profile, agent: str) -> ExtendedReal:
    bases = {a: strip_label(b) for a, b in profile.bases().items()}
    return ext(spec.base_utility[agent](bases))


def filter_fires(spec: EconomySpec, profile: Profile, agent: str, name: str) -> bool:
    if name == "rights":
        return rights_violation(spec, profile, agent) is not None
    if name == "non_aggression":
        return spec.non_aggression and aggression_witness(profile, agent, spec.self_aggression) is not None
    if name == "government":
        if spec.government is None:
            return False
        verdict = government_filter(spec.government, profile)
        if agent == spec.government.agent:
            return not verdict.legal
        return agent in verdict.penalized
    raise ValueError(f"unknown filter {name!r}")


def evaluate_utility(
    spec: EconomySpec, profile: Profile, agent: str, order: Sequence[str] | None = None
) -> ExtendedReal:
    """Filters in order, then the base utility; the first filter that fires gives ``NEG_INF``."""
    check_profile(spec, profile)
    for name in order or spec.filter_order:
        if filter_fires(spec, profile, agent, name):
            return NEG_INF
    return base_value(spec, profile, agent)
