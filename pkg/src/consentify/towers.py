"""Finite-depth consentification towers and the closure topology on them.

A depth-``D`` tower of agent ``a`` is a base label plus, for every level
``n = 1..D`` and every agent ``b``, the set of depth-``(n-1)`` towers of ``b``
that ``a`` forbids at that level.  Valid towers are determined by their base
and top level; the lower levels are the elementwise projections.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Hashable, Iterable, Iterator, Mapping, Sequence

DEFAULT_BUDGET = 10**6

AGENT_ID = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_RESERVED = frozenset("^<>{};:,") | frozenset(" \t\r\n")


class DepthError(ValueError):
    """A depth or observation depth outside the allowed range."""


class BudgetExceeded(RuntimeError):
    """Refusal to enumerate a space larger than the configured budget."""

    def __init__(self, what: str, predicted: int | float, budget: int):
        self.what = what
        self.predicted = predicted
        self.budget = budget
        super().__init__(
            f"{what}: predicted cardinality {describe_count(predicted)} exceeds budget {budget}"
        )


class ClosureMismatch(AssertionError):
    """The cylinder form and the level-by-level form of the closure disagree."""


def describe_count(n: int | float) -> str:
    if isinstance(n, float):
        return "inf" if math.isinf(n) else f"~2^{n:.1f}"
    if n.bit_length() > 64:
        return f"~2^{n.bit_length() - 1}"
    return str(n)


@dataclass(frozen=True)
class BaseSpace:
    """Agents and their finite base choice sets ``X^0``."""

    agents: tuple[str, ...]
    base_choices: tuple[tuple[Hashable, ...], ...]
    _by_text: dict = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if len(set(self.agents)) != len(self.agents):
            raise ValueError("agent identifiers must be unique")
        if len(self.agents) != len(self.base_choices):
            raise ValueError("one base choice set per agent")
        by_text = {}
        for agent, choices in zip(self.agents, self.base_choices):
            if not AGENT_ID.match(agent):
                raise ValueError(f"bad agent identifier {agent!r}")
            if not choices:
                raise ValueError(f"base choice set of {agent} is empty")
            texts = {}
            for label in choices:
                text = str(label)
                if not text or _RESERVED & set(text):
                    raise ValueError(f"label {text!r} of {agent} is empty or uses reserved characters")
                if text in texts:
                    raise ValueError(f"duplicate base label {text!r} for {agent}")
                texts[text] = label
            by_text[agent] = texts
        object.__setattr__(self, "_by_text", by_text)

    @classmethod
    def of(cls, choices: Mapping[str, Iterable[Hashable]]) -> BaseSpace:
        return cls(tuple(choices), tuple(tuple(c) for c in choices.values()))

    def choices(self, agent: str) -> tuple[Hashable, ...]:
        return self.base_choices[self.agents.index(agent)]

    def label(self, agent: str, text: str) -> Hashable:
        try:
            return self._by_text[agent][text]
        except KeyError:
            raise ValueError(f"unknown base label {text!r} for agent {agent!r}") from None

    def replace_choices(self, agent: str, choices: Sequence[Hashable]) -> BaseSpace:
        i = self.agents.index(agent)
        new = list(self.base_choices)
        new[i] = tuple(choices)
        return BaseSpace(self.agents, tuple(new))


class TowerChoice:
    """One truncated consentified choice.

    ``levels[k]`` is level ``k + 1``: a tuple of ``(agent, frozenset)`` pairs
    sorted by agent, whose sets hold depth-``k`` towers of that agent.
    Instances are immutable and compare structurally.
    """

    __slots__ = ("owner", "base", "levels", "_hash", "_text")

    def __init__(self, owner: str, base: Hashable, levels: Sequence[Mapping[str, Iterable[TowerChoice]]] = ()):
        self.owner = owner
        self.base = base
        self.levels = tuple(
            tuple(sorted(((b, frozenset(s)) for b, s in dict(level).items()), key=lambda kv: kv[0]))
            for level in levels
        )
        self._hash = hash((owner, base, self.levels))
        self._text = None

    @classmethod
    def leaf(cls, owner: str, base: Hashable) -> TowerChoice:
        return cls(owner, base)

    @classmethod
    def build(cls, owner: str, base: Hashable, top: Mapping[str, Iterable[TowerChoice]], depth: int) -> TowerChoice:
        """Tower from its top level, deriving lower levels by projection."""
        if depth == 0:
            if any(top.values()):
                raise DepthError("a depth-0 tower forbids nothing")
            return cls(owner, base)
        levels = [None] * depth
        levels[depth - 1] = {b: frozenset(s) for b, s in top.items()}
        for n in range(depth - 1, 0, -1):
            levels[n - 1] = {b: frozenset(project(y, n - 1) for y in s) for b, s in levels[n].items()}
        return cls(owner, base, levels)

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def counterparties(self) -> tuple[str, ...]:
        return tuple(b for b, _ in self.levels[0]) if self.levels else ()

    def level_set(self, n: int, agent: str) -> frozenset:
        """Level-``n`` forbidden set toward ``agent`` (members have depth ``n - 1``)."""
        for b, s in self.levels[n - 1]:
            if b == agent:
                return s
        raise KeyError(f"tower of {self.owner} has no coordinate for {agent!r}")

    def top(self, agent: str) -> frozenset:
        return self.level_set(self.depth, agent)

    def top_level(self) -> dict[str, frozenset]:
        return dict(self.levels[-1]) if self.levels else {}

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, TowerChoice):
            return NotImplemented
        return (
            self._hash == other._hash
            and self.owner == other.owner
            and self.base == other.base
            and self.levels == other.levels
        )

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"TowerChoice({self.owner}: {format_tower(self)})"

    def __lt__(self, other: TowerChoice):
        return sort_key(self) < sort_key(other)


def sort_key(t: TowerChoice) -> tuple[str, str]:
    return (t.owner, format_tower(t))


def sorted_towers(towers: Iterable[TowerChoice]) -> list[TowerChoice]:
    return sorted(towers, key=sort_key)


class TowerSet:
    """A finite set of towers sharing owner and depth; iteration order is stable."""

    __slots__ = ("owner", "depth", "members", "_set", "_proj", "_index")

    def __init__(self, owner: str, depth: int, members: Iterable[TowerChoice] = ()):
        seen = {}
        for t in members:
            if t.owner != owner or t.depth != depth:
                raise ValueError(
                    f"tower of {t.owner} at depth {t.depth} in a TowerSet of {owner} at depth {depth}"
                )
            seen.setdefault(t, None)
        self.owner = owner
        self.depth = depth
        self.members = tuple(seen)
        self._set = frozenset(seen)
        self._proj = {}
        self._index = None

    @classmethod
    def _trusted(cls, owner: str, depth: int, members: tuple[TowerChoice, ...]) -> TowerSet:
        """Skip validation: ``members`` are distinct and already fit."""
        out = cls.__new__(cls)
        out.owner, out.depth, out.members = owner, depth, members
        out._set = frozenset(members)
        out._proj = {}
        out._index = None
        return out

    def index(self) -> dict[TowerChoice, int]:
        if self._index is None:
            self._index = {t: i for i, t in enumerate(self.members)}
        return self._index

    def projections(self, n: int) -> tuple[tuple[int, ...], dict[TowerChoice, int]]:
        """Per member, the id of its depth-``n`` projection; and the id table (cached)."""
        cached = self._proj.get(n)
        if cached is None:
            table: dict[TowerChoice, int] = {}
            ids = tuple(table.setdefault(project(t, n), len(table)) for t in self.members)
            cached = self._proj[n] = (ids, table)
        return cached

    def __iter__(self) -> Iterator[TowerChoice]:
        return iter(self.members)

    def __len__(self):
        return len(self.members)

    def __contains__(self, t):
        return t in self._set

    def __eq__(self, other):
        if isinstance(other, TowerSet):
            return self.owner == other.owner and self.depth == other.depth and self._set == other._set
        if isinstance(other, (set, frozenset)):
            return self._set == other
        return NotImplemented

    def __hash__(self):
        return hash((self.owner, self.depth, self._set))

    def __or__(self, other: Iterable[TowerChoice]) -> TowerSet:
        return TowerSet(self.owner, self.depth, itertools.chain(self.members, other))

    def __le__(self, other: TowerSet) -> bool:
        return self._set <= set(other)

    def __lt__(self, other: TowerSet) -> bool:
        return self._set < set(other)

    def __repr__(self):
        return f"TowerSet({self.owner}, depth={self.depth}, n={len(self)})"

    def as_frozenset(self) -> frozenset:
        return self._set

    def subset(self, members: Iterable[TowerChoice]) -> TowerSet:
        return TowerSet(self.owner, self.depth, members)

    def texts(self) -> list[str]:
        return sorted(format_tower(t) for t in self.members)


# -- projection ----------------------------------------------------------


def project(t: TowerChoice, m: int) -> TowerChoice:
    """Depth-``m`` truncation along the connecting morphisms.

    Follows the recurrence from the top level down: the new top level is the
    elementwise projection of the old top level, and lower levels are rebuilt
    from it.
    """
    if not 0 <= m <= t.depth:
        raise DepthError(f"cannot project a depth-{t.depth} tower to depth {m}")
    if m == t.depth:
        return t
    return _project(t, m)


# equal projections share one object so set lookups rarely need deep equality
_INTERNED: dict[TowerChoice, TowerChoice] = {}


@lru_cache(maxsize=1 << 18)
def _project(t: TowerChoice, m: int) -> TowerChoice:
    if m == 0:
        out = TowerChoice(t.owner, t.base)
    else:
        top = {b: frozenset(project(y, m - 1) for y in s) for b, s in t.levels[-1]}
        out = TowerChoice.build(t.owner, t.base, top, m)
    if len(_INTERNED) >= 1 << 18:
        _INTERNED.clear()
    return _INTERNED.setdefault(out, out)


# -- validation ----------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    """First invariant broken by a tower; ``level`` indexes ``R^level``."""

    level: int | None
    counterparty: str | None
    reason: str


def validate_tower(t: TowerChoice, space: BaseSpace | None = None) -> Violation | None:
    """Return ``None`` when every tower invariant holds, else the first violation."""
    if space is not None:
        if t.owner not in space.agents:
            return Violation(None, None, f"unknown owner {t.owner!r}")
        if t.base not in space.choices(t.owner):
            return Violation(None, None, f"base {t.base!r} not in X^0 of {t.owner}")
    if not t.levels:
        return None
    agents = t.counterparties
    if space is not None and tuple(sorted(agents)) != tuple(sorted(space.agents)):
        return Violation(1, None, "counterparty coordinates do not match the agent list")
    for n, level in enumerate(t.levels, start=1):
        if tuple(b for b, _ in level) != agents:
            return Violation(n - 1, None, "levels disagree on counterparties")
        for b, s in level:
            for y in s:
                if not isinstance(y, TowerChoice) or y.owner != b or y.depth != n - 1:
                    return Violation(n - 1, b, f"member is not a depth-{n - 1} tower of {b}")
                inner = validate_tower(y, space)
                if inner is not None:
                    return Violation(n - 1, b, f"invalid member: {inner.reason}")
    for n in range(1, t.depth):
        for b in agents:
            image = frozenset(project(y, n - 1) for y in t.level_set(n + 1, b))
            if image != t.level_set(n, b):
                return Violation(n, b, f"projection of R^{n} does not equal R^{n - 1}")
    return None


# -- enumeration ---------------------------------------------------------


def tower_count(space: BaseSpace, owner: str, depth: int, cap: int | None = None) -> int:
    """``|X^depth_owner|`` from the recurrence; saturates at ``cap + 1`` when given."""
    if depth == 0:
        n = len(space.choices(owner))
        return n if cap is None else min(n, cap + 1)
    exponent = 0
    limit = None if cap is None else cap.bit_length() + 1
    for b in space.agents:
        exponent += tower_count(space, b, depth - 1, None if cap is None else 2 * limit)
        if limit is not None and exponent > limit:
            return cap + 1
    n = len(space.choices(owner)) << exponent
    return n if cap is None else min(n, cap + 1)


def log2_tower_count(space: BaseSpace, owner: str, depth: int) -> float:
    if depth == 0:
        return math.log2(len(space.choices(owner)))
    try:
        exponent = sum(2.0 ** log2_tower_count(space, b, depth - 1) for b in space.agents)
    except OverflowError:
        return math.inf
    return math.log2(len(space.choices(owner))) + exponent


def predicted_cardinality(space: BaseSpace, owner: str, depth: int) -> int | float:
    """Exact count when it is representable, else its base-2 logarithm as a float."""
    lg = log2_tower_count(space, owner, depth)
    if lg < 4096:
        return tower_count(space, owner, depth)
    return lg


def subsets_by_mask(universe: Sequence[TowerChoice]) -> list[frozenset]:
    """All subsets of ``universe``; subset ``i`` holds member ``j`` iff bit ``j`` of ``i`` is set."""
    out = [frozenset()]
    for t in universe:
        out += [s | {t} for s in out]
    return out


def enumerate_towers(space: BaseSpace, owner: str, depth: int, budget: int = DEFAULT_BUDGET) -> TowerSet:
    """Every valid depth-``depth`` tower of ``owner``, in canonical order.

    Canonical order: base labels in ``space`` order, then one forbidden-set
    bitmask per agent (first agent most significant) over that agent's
    canonical depth-``(depth - 1)`` enumeration.
    """
    if depth < 0:
        raise DepthError("depth must be non-negative")
    if tower_count(space, owner, depth, cap=budget) > budget:
        raise BudgetExceeded(f"X^{depth} of {owner}", predicted_cardinality(space, owner, depth), budget)
    return TowerSet(owner, depth, _enumerate(space, owner, depth))


def _enumerate(space: BaseSpace, owner: str, depth: int) -> list[TowerChoice]:
    if depth == 0:
        return [TowerChoice(owner, c) for c in space.choices(owner)]
    subs = [subsets_by_mask(_enumerate(space, b, depth - 1)) for b in space.agents]
    out = []
    for base in space.choices(owner):
        for combo in itertools.product(*subs):
            out.append(TowerChoice.build(owner, base, dict(zip(space.agents, combo)), depth))
    return out


def no_forbid_tower(space: BaseSpace, owner: str, base: Hashable, depth: int) -> TowerChoice:
    return TowerChoice.build(owner, base, {b: () for b in space.agents}, depth)


# -- the forbids relation ------------------------------------------------


def _check_pair(x: TowerChoice, y: TowerChoice):
    if x.depth != y.depth:
        raise DepthError(f"depth mismatch: {x.depth} vs {y.depth}")
    if x.depth < 1:
        raise DepthError("forbidding needs depth >= 1")


def forbids(x: TowerChoice, y: TowerChoice) -> bool:
    """Whether ``x`` forbids ``y``, read off the top level."""
    d = len(x.levels)
    if d != len(y.levels) or d < 1:
        _check_pair(x, y)
    y = _project(y, d - 1)
    for b, s in x.levels[-1]:
        if b == y.owner:
            return y in s
    raise KeyError(f"tower of {x.owner} has no coordinate for {y.owner!r}")


def forbids_levelwise(x: TowerChoice, y: TowerChoice) -> bool:
    """Same relation, checked at every level ``n = 0..D-1``."""
    _check_pair(x, y)
    return all(project(y, n) in x.level_set(n + 1, y.owner) for n in range(x.depth))


def forbid_constructor(
    base: Hashable, carrier: TowerChoice, target: str, forbidden: Iterable[TowerChoice]
) -> TowerChoice:
    """The forbidding choice: forbid ``forbidden`` (towers of ``target``), copy the rest.

    The result has the carrier's depth; its level-``n`` set toward ``target``
    is the depth-``(n-1)`` image of ``forbidden``.  Other coordinates are
    the carrier's.
    """
    depth = carrier.depth
    if depth < 1:
        raise DepthError("the carrier must have depth >= 1")
    members = list(forbidden)
    for y in members:
        if y.owner != target or y.depth != depth:
            raise DepthError(f"forbidden towers must be depth-{depth} towers of {target}")
    top = carrier.top_level()
    if target not in top:
        raise KeyError(f"carrier has no coordinate for {target!r}")
    top[target] = frozenset(project(y, depth - 1) for y in members)
    return TowerChoice.build(carrier.owner, base, top, depth)


def forbidden_set(x: TowerChoice, target: str, universe: TowerSet) -> TowerSet:
    """Members of ``universe`` (towers of ``target``) forbidden by ``x``."""
    if universe.owner != target:
        raise ValueError(f"universe belongs to {universe.owner}, not {target}")
    if universe.depth != x.depth:
        raise DepthError(f"universe depth {universe.depth} differs from tower depth {x.depth}")
    return universe.subset(y for y in universe if forbids(x, y))


# -- closure topology ----------------------------------------------------


def _check_obs(n: int, universe: TowerSet):
    if not 0 <= n <= universe.depth:
        raise DepthError(f"observation depth {n} outside 0..{universe.depth}")


def closure(R: Iterable[TowerChoice], n: int, universe: TowerSet, check: bool = True) -> TowerSet:
    """Towers of ``universe`` agreeing with some member of ``R`` up to level ``n``.

    With ``check`` the level-by-level form (for every ``m <= n`` some member
    agrees at ``m``) is computed as well and must match.
    """
    _check_obs(n, universe)
    R = list(R)
    members = universe.members
    where = universe.index()

    def classes(m):
        ids, table = universe.projections(m)
        return ids, {ids[where[y]] if y in where else table.get(project(y, m), -1) for y in R}

    ids, keys = classes(n)
    kept = tuple(y for y, c in zip(members, ids) if c in keys)
    if check:
        hit = set(range(len(members)))
        for m in range(n + 1):
            ids_m, level = classes(m)
            hit &= {i for i, c in enumerate(ids_m) if c in level}
        literal = tuple(members[i] for i in sorted(hit))
        if literal != kept:
            raise ClosureMismatch(f"closure forms disagree at observation depth {n}")
    return TowerSet._trusted(universe.owner, universe.depth, kept)


def is_closed(R: Iterable[TowerChoice], n: int, universe: TowerSet) -> bool:
    R = frozenset(R)
    return closure(R, n, universe).as_frozenset() == R


def separating_depth(x: TowerChoice, y: TowerChoice) -> int | None:
    """Smallest ``n`` at which the projections of ``x`` and ``y`` differ."""
    if x.owner != y.owner or x.depth != y.depth:
        raise ValueError("separating_depth needs towers of one owner and depth")
    for n in range(x.depth + 1):
        if project(x, n) != project(y, n):
            return n
    return None


# -- canonical text ------------------------------------------------------


def format_tower(t: TowerChoice) -> str:
    """Canonical text: ``base`` at depth 0, else ``base^D<agent:{...};...>``.

    Only the top level is written; lower levels of a valid tower follow from it.
    """
    if t._text is None:
        if not t.levels:
            text = str(t.base)
        else:
            parts = [f"{b}:{{{','.join(sorted(format_tower(y) for y in s))}}}" for b, s in t.levels[-1]]
            text = f"{t.base}^{t.depth}<{';'.join(parts)}>"
        t._text = text
    return t._text


def parse_tower(text: str, owner: str, space: BaseSpace) -> TowerChoice:
    parser = _Parser(text, space)
    t = parser.tower(owner)
    parser.skip_ws()
    if parser.pos != len(text):
        parser.fail("trailing characters")
    return t


class _Parser:
    def __init__(self, text: str, space: BaseSpace):
        self.text = text
        self.pos = 0
        self.space = space

    def fail(self, msg: str):
        raise ValueError(f"bad tower text at offset {self.pos}: {msg}: {self.text!r}")

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            self.fail(f"expected {ch!r}")
        self.pos += 1

    def token(self) -> str:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] not in _RESERVED:
            self.pos += 1
        if start == self.pos:
            self.fail("expected a token")
        return self.text[start : self.pos]

    def tower(self, owner: str) -> TowerChoice:
        base = self.space.label(owner, self.token())
        if self.peek() != "^":
            return TowerChoice(owner, base)
        self.pos += 1
        depth_text = self.token()
        if not depth_text.isdigit() or int(depth_text) < 1:
            self.fail("depth must be a positive integer")
        depth = int(depth_text)
        self.expect("<")
        top = {}
        while True:
            agent = self.token()
            if agent not in self.space.agents:
                self.fail(f"unknown agent {agent!r}")
            if agent in top:
                self.fail(f"duplicate coordinate {agent!r}")
            self.expect(":")
            self.expect("{")
            members = []
            if self.peek() != "}":
                members.append(self.tower(agent))
                while self.peek() == ",":
                    self.pos += 1
                    members.append(self.tower(agent))
            self.expect("}")
            for m in members:
                if m.depth != depth - 1:
                    self.fail(f"member of depth {m.depth} inside a depth-{depth} tower")
            top[agent] = members
            if self.peek() == ";":
                self.pos += 1
                continue
            break
        self.expect(">")
        missing = set(self.space.agents) - set(top)
        if missing:
            self.fail(f"missing coordinates {sorted(missing)}")
        return TowerChoice.build(owner, base, top, depth)


def random_subset(universe: TowerSet, rng, p: float = 0.5) -> TowerSet:
    return universe.subset(t for t in universe if rng.random() < p)


def counterparty_slice(
    space: BaseSpace, owner: str, counterparty: str, depth: int = 1, cap: int = 12, budget: int = DEFAULT_BUDGET
) -> TowerSet:
    """Towers of ``owner`` whose top level is empty except toward ``counterparty``.

    Truncated to the first ``cap`` members in canonical order.
    """
    full = enumerate_towers(space, owner, depth, budget)
    keep = [
        t for t in full if all(not s for b, s in t.levels[-1] if b != counterparty)
    ] if depth else list(full)
    return TowerSet(owner, depth, keep[:cap])


Closure = Callable[[Iterable[TowerChoice], int, TowerSet], TowerSet]
