"""Scenario files: a pydantic schema, semantic checks, and the build into engine objects."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, NonNegativeInt, ValidationError

from .economy import (
    EconomySpec,
    GovernmentConfig,
    RightsStructure,
    minarchy,
    with_punishment_goods,
)
from .exchange import ExchangeSpec, build_consentified_exchange, leontief_utility, linear_utility, parse_price
from .extreal import ExtendedReal
from .kernel import KERNEL_BUDGET
from .pricing import PriceReading
from .search import ChoiceFamily, Exhaustive, Explicit, Forbid, NoForbid, PriceGen
from .towers import AGENT_ID, DEFAULT_BUDGET, BaseSpace, parse_tower

SCHEMA_VERSION = 1

Rational = Annotated[str, Field(pattern=r"^\d+(/\d+)?$")]
Value = Annotated[str, Field(pattern=r"^(-?\d+(/\d+)?|-inf)$")]


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class Budgets(_Model):
    enumeration: int = Field(DEFAULT_BUDGET, ge=1)
    kernel: int = Field(KERNEL_BUDGET, ge=1)
    profiles: int = Field(DEFAULT_BUDGET, ge=1)
    time_seconds: float | None = Field(None, gt=0)


class TableRow(_Model):
    when: dict[str, str]
    value: Value


class TableUtility(_Model):
    kind: Literal["table"]
    rows: list[TableRow] = []
    default: Value = "0"


class ConstantUtility(_Model):
    kind: Literal["constant"]
    value: Value = "0"


class LinearUtility(_Model):
    kind: Literal["linear"]
    weights: list[Rational]


class LeontiefUtility(_Model):
    kind: Literal["leontief"]
    weights: list[Rational]


Utility = Annotated[
    Union[TableUtility, ConstantUtility, LinearUtility, LeontiefUtility], Field(discriminator="kind")
]


class Agent(_Model):
    id: str
    choices: list[str] | None = None
    cap: list[NonNegativeInt] | None = None
    endowment: list[NonNegativeInt] | None = None
    utility: Utility = ConstantUtility(kind="constant")


class RightsRule(_Model):
    holder: str
    target: str
    allow_bases: list[str] = []
    allow_towers: list[str] = []


class NonAggression(_Model):
    enabled: bool = False
    include_self: bool = True


class Government(_Model):
    agent: str
    penal_code: Literal["minarchy", "static"] = "minarchy"
    include_self: bool = True
    static: dict[str, list[str]] = {}


class GeneratorSpec(_Model):
    kind: Literal["exhaustive", "explicit", "forbid", "no_forbid", "price"]
    towers: list[str] = []
    base: str | None = None
    carrier: str | None = None
    target: str | None = None
    price: Rational | list[Rational] | None = None
    bases: list[str] | None = None
    pricey_only: bool = False


class LawsConfig(_Model):
    random_sets: int = Field(1000, ge=0)
    slice_cap: int = Field(12, ge=1, le=12)
    pair_cap: int = Field(4096, ge=1)
    equivalence_cap: int = Field(10**6, ge=1)


class Scenario(_Model):
    schema_version: Literal[1]
    mode: Literal["abstract", "exchange"]
    depth: int = Field(ge=0)
    observation_depth: int | None = Field(None, ge=0)
    seed: int = 0
    budgets: Budgets = Budgets()
    goods: int | None = Field(None, ge=1)
    price_dictionary: list[Rational | list[Rational]] = []
    agents: list[Agent] = Field(min_length=1)
    rights: list[RightsRule] = []
    non_aggression: NonAggression = NonAggression()
    government: Government | None = None
    generators: dict[str, list[GeneratorSpec]] = {}
    designated_counterparty: dict[str, str] = {}
    laws: LawsConfig = LawsConfig()


class ScenarioError(ValueError):
    """Schema or invariant violations, each with the offending field path."""

    def __init__(self, issues: list[tuple[str, str]]):
        self.issues = issues
        super().__init__("; ".join(f"{p}: {m}" for p, m in issues))


class ScenarioParseError(ValueError):
    pass


def format_loc(loc) -> str:
    out = ""
    for part in loc:
        if isinstance(part, int):
            out += f"[{part}]"
        else:
            out += ("." if out else "") + str(part)
    return out or "<root>"


def parse_scenario(raw: bytes) -> Scenario:
    """Parse scenario bytes; ``ScenarioParseError`` for malformed JSON, ``ScenarioError`` otherwise."""
    try:
        data = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as err:
        raise ScenarioParseError(f"not a JSON document: {err}") from None
    try:
        scenario = Scenario.model_validate(data)
    except ValidationError as err:
        issues = []
        for e in err.errors():
            loc = e["loc"]
            # drop the union-member tag pydantic appends for discriminated unions
            loc = tuple(p for p in loc if p not in ("table", "constant", "linear", "leontief"))
            issues.append((format_loc(loc), e["msg"]))
        raise ScenarioError(issues) from None
    issues = semantic_issues(scenario)
    if issues:
        raise ScenarioError(issues)
    return scenario


def semantic_issues(s: Scenario) -> list[tuple[str, str]]:
    issues: list[tuple[str, str]] = []
    add = lambda path, msg: issues.append((path, msg))  # noqa: E731
    ids = [a.id for a in s.agents]
    for i, a in enumerate(s.agents):
        if not AGENT_ID.match(a.id):
            add(f"agents[{i}].id", f"invalid agent id {a.id!r}")
        if ids.index(a.id) != i:
            add(f"agents[{i}].id", f"duplicate agent id {a.id!r}")
    known = set(ids)

    if s.mode == "abstract":
        if s.goods is not None:
            add("goods", "goods belong to exchange scenarios")
        if s.price_dictionary:
            add("price_dictionary", "prices belong to exchange scenarios")
        for i, a in enumerate(s.agents):
            if not a.choices:
                add(f"agents[{i}].choices", "an abstract agent needs at least one base choice")
            elif len(set(a.choices)) != len(a.choices):
                add(f"agents[{i}].choices", "duplicate base choice")
            for name in ("cap", "endowment"):
                if getattr(a, name) is not None:
                    add(f"agents[{i}].{name}", "exchange-only field")
            if a.utility.kind not in ("table", "constant"):
                add(f"agents[{i}].utility.kind", "abstract utilities are table or constant")
            if isinstance(a.utility, TableUtility):
                for r, row in enumerate(a.utility.rows):
                    for who, label in row.when.items():
                        path = f"agents[{i}].utility.rows[{r}].when.{who}"
                        if who not in known:
                            add(path, f"unknown agent {who!r}")
                        elif label not in (s.agents[ids.index(who)].choices or []):
                            add(path, f"unknown base choice {label!r}")
    else:
        if s.goods is None:
            add("goods", "exchange scenarios need the number of goods")
        if s.depth < 1:
            add("depth", "the consentified exchange economy needs depth >= 1")
        if s.rights:
            add("rights", "exchange rights are fixed by the economy")
        if s.government is not None:
            add("government", "exchange scenarios have no government")
        if "non_aggression" in s.model_fields_set:
            add("non_aggression", "non-aggression is fixed by the exchange economy")
        for i, a in enumerate(s.agents):
            if a.choices is not None:
                add(f"agents[{i}].choices", "exchange base choices are derived from caps")
            for name in ("cap", "endowment"):
                vec = getattr(a, name)
                if vec is None:
                    add(f"agents[{i}].{name}", "required in exchange scenarios")
                elif s.goods is not None and len(vec) != s.goods:
                    add(f"agents[{i}].{name}", f"expected {s.goods} entries, got {len(vec)}")
            if a.utility.kind not in ("linear", "leontief"):
                add(f"agents[{i}].utility.kind", "exchange utilities are linear or leontief")
            elif s.goods is not None and len(a.utility.weights) != s.goods:
                add(f"agents[{i}].utility.weights", f"expected {s.goods} entries")
        for k, p in enumerate(s.price_dictionary):
            n = 1 if isinstance(p, str) else len(p)
            if s.goods is not None and n != s.goods:
                add(f"price_dictionary[{k}]", f"expected {s.goods} coordinates, got {n}")
            for q in [p] if isinstance(p, str) else p:
                if "/" in q and int(q.split("/")[1]) == 0:
                    add(f"price_dictionary[{k}]", "zero denominator")

    if s.depth == 0:
        if s.non_aggression.enabled:
            add("non_aggression.enabled", "non-aggression needs depth >= 1")
        if s.rights:
            add("rights", "rights structures need depth >= 1")
        if s.government is not None:
            add("government", "governments need depth >= 1")
    if s.observation_depth is not None and s.observation_depth > s.depth:
        add("observation_depth", f"must not exceed depth {s.depth}")
    for r, rule in enumerate(s.rights):
        for name in ("holder", "target"):
            if getattr(rule, name) not in known:
                add(f"rights[{r}].{name}", f"unknown agent {getattr(rule, name)!r}")
    if s.government is not None:
        g = s.government
        if g.agent not in known:
            add("government.agent", f"unknown agent {g.agent!r}")
        if g.penal_code == "static":
            for who in g.static:
                if who not in known or who == g.agent:
                    add(f"government.static.{who}", "penal code sets name non-government agents")
        elif g.static:
            add("government.static", "only used with the static penal code")
    for who, gens in s.generators.items():
        if who not in known:
            add(f"generators.{who}", f"unknown agent {who!r}")
        for j, g in enumerate(gens):
            path = f"generators.{who}[{j}]"
            if g.kind == "price" and s.mode != "exchange":
                add(f"{path}.kind", "price generators need an exchange scenario")
            if g.kind == "price" and g.price is None:
                add(f"{path}.price", "required for price generators")
            if g.kind == "forbid":
                for name in ("base", "carrier", "target"):
                    if getattr(g, name) is None:
                        add(f"{path}.{name}", "required for forbid generators")
                if g.target is not None and g.target not in known:
                    add(f"{path}.target", f"unknown agent {g.target!r}")
            if g.kind == "explicit" and not g.towers:
                add(f"{path}.towers", "explicit generators list at least one tower")
    for who, other in s.designated_counterparty.items():
        if who not in known:
            add(f"designated_counterparty.{who}", f"unknown agent {who!r}")
        elif other not in known or other == who:
            add(f"designated_counterparty.{who}", f"counterparty must be another agent, got {other!r}")
    return issues


# -- build ---------------------------------------------------------------


@dataclass
class Built:
    scenario: Scenario
    space: BaseSpace
    economy: EconomySpec
    exchange: ExchangeSpec | None = None
    generators: dict[str, tuple] = field(default_factory=dict)

    @property
    def depth(self) -> int:
        return self.scenario.depth

    def readings(self) -> tuple[PriceReading, ...]:
        cp = dict(self.scenario.designated_counterparty) or None
        return tuple(
            PriceReading(strict=st, designated=d, counterparty=cp if d else None)
            for st in (False, True)
            for d in (False, True)
        )

    def families(self) -> dict[str, ChoiceFamily]:
        return {a: ChoiceFamily(a, self.depth, self.generators[a]) for a in self.space.agents}


def _table(u: TableUtility):
    rows = [(dict(r.when), ExtendedReal(r.value)) for r in u.rows]
    default = ExtendedReal(u.default)

    def value(bases):
        for when, v in rows:
            if all(str(bases[a]) == label for a, label in when.items()):
                return v
        return default

    return value


def _abstract_utility(u):
    if isinstance(u, ConstantUtility):
        v = ExtendedReal(u.value)
        return lambda bases: v
    return _table(u)


def build(s: Scenario) -> Built:
    """Engine objects for a validated scenario; tower texts are parsed here."""
    ids = tuple(a.id for a in s.agents)
    issues: list[tuple[str, str]] = []
    if s.mode == "exchange":
        goods = s.goods
        weights = {a.id: [Fraction(w) for w in a.utility.weights] for a in s.agents}
        utilities = {
            a.id: (linear_utility if a.utility.kind == "linear" else leontief_utility)(weights[a.id]) for a in s.agents
        }
        xspec = ExchangeSpec(
            agents=ids,
            goods=goods,
            caps={a.id: tuple(a.cap) for a in s.agents},
            endowments={a.id: tuple(a.endowment) for a in s.agents},
            utilities=utilities,
            depth=s.depth,
            prices=tuple(parse_price(p, goods) for p in s.price_dictionary),
        )
        economy = build_consentified_exchange(xspec)
        space = economy.space
    else:
        xspec = None
        space = BaseSpace(ids, tuple(tuple(a.choices) for a in s.agents))
        if s.government is not None:
            space = with_punishment_goods(space, s.government.agent)
        rights = None
        if s.rights:
            rules = {}
            for r, rule in enumerate(s.rights):
                towers = set()
                for k, text in enumerate(rule.allow_towers):
                    try:
                        towers.add(parse_tower(text, rule.target, space))
                    except ValueError as err:
                        issues.append((f"rights[{r}].allow_towers[{k}]", str(err)))
                bases = frozenset(rule.allow_bases)
                rules[(rule.holder, rule.target)] = (
                    lambda t, bases=bases, towers=frozenset(towers): str(t.base) in bases or t in towers
                )
            rights = RightsStructure(rules)
        government = None
        if s.government is not None:
            g = s.government
            if g.penal_code == "minarchy":
                government = minarchy(g.agent, g.include_self)
            else:
                sets = {}
                for who, texts in g.static.items():
                    members = set()
                    for k, text in enumerate(texts):
                        try:
                            members.add(parse_tower(text, who, space))
                        except ValueError as err:
                            issues.append((f"government.static.{who}[{k}]", str(err)))
                    sets[who] = frozenset(members)
                government = GovernmentConfig.static(g.agent, sets)
        if issues:
            raise ScenarioError(issues)
        economy = EconomySpec(
            space=space,
            depth=s.depth,
            base_utility={a.id: _abstract_utility(a.utility) for a in s.agents},
            rights=rights,
            non_aggression=s.non_aggression.enabled,
            self_aggression=s.non_aggression.include_self,
            government=government,
        )
    generators = {}
    for a in ids:
        specs = s.generators.get(a)
        if specs is None:
            generators[a] = _default_generators(s, xspec)
            continue
        gens = []
        for j, g in enumerate(specs):
            try:
                gens.append(_generator(g, a, space, s.depth, s.goods))
            except ValueError as err:
                issues.append((f"generators.{a}[{j}]", str(err)))
        generators[a] = tuple(gens)
    if issues:
        raise ScenarioError(issues)
    return Built(s, space, economy, xspec, generators)


def _default_generators(s: Scenario, xspec: ExchangeSpec | None) -> tuple:
    if xspec is None:
        return (Exhaustive(),)
    return (NoForbid(),) + tuple(PriceGen(p) for p in xspec.prices)


def _generator(g: GeneratorSpec, owner: str, space: BaseSpace, depth: int, goods: int | None):
    bases = tuple(space.label(owner, b) for b in g.bases) if g.bases is not None else None
    if g.kind == "exhaustive":
        return Exhaustive()
    if g.kind == "no_forbid":
        return NoForbid(bases)
    if g.kind == "explicit":
        towers = tuple(parse_tower(t, owner, space) for t in g.towers)
        for t in towers:
            if t.depth != depth:
                raise ValueError(f"explicit tower has depth {t.depth}, expected {depth}")
        return Explicit(towers)
    if g.kind == "forbid":
        carrier = parse_tower(g.carrier, owner, space)
        if carrier.depth != depth:
            raise ValueError(f"carrier has depth {carrier.depth}, expected {depth}")
        towers = tuple(parse_tower(t, g.target, space) for t in g.towers)
        return Forbid(space.label(owner, g.base), carrier, g.target, towers)
    return PriceGen(parse_price(g.price, goods), bases, g.pricey_only)


def load(raw: bytes) -> Built:
    return build(parse_scenario(raw))
