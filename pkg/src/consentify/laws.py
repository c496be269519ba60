"""Law suites: each runner returns ``Check`` rows with re-verifiable witnesses."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .economy import EconomySpec, Profile, rights_violation
from .exchange import ExchangeSpec, format_price
from .pricing import FAIL, PASS, REFUSED, PriceReading, price_member, pricey_towers
from .towers import (
    BaseSpace,
    BudgetExceeded,
    TowerChoice,
    TowerSet,
    closure,
    counterparty_slice,
    forbid_constructor,
    forbidden_set,
    forbids,
    forbids_levelwise,
    format_tower,
    no_forbid_tower,
    project,
    separating_depth,
    subsets_by_mask,
    validate_tower,
)

ClosureFn = Callable[[Iterable[TowerChoice], int, TowerSet], TowerSet]


@dataclass
class Check:
    name: str
    verdict: str
    detail: dict = field(default_factory=dict)
    witness: dict | None = None

    def as_dict(self) -> dict:
        d = {"name": self.name, "verdict": self.verdict, "detail": self.detail}
        if self.witness is not None:
            d["witness"] = self.witness
        return d


def refused(name: str, err: BudgetExceeded) -> Check:
    return Check(name, REFUSED, {"reason": str(err), "budget": err.budget})


def _texts(ts: Iterable[TowerChoice]) -> list[str]:
    return sorted(format_tower(t) for t in ts)


# -- consent-core --------------------------------------------------------


def check_validity(universe: TowerSet, space: BaseSpace) -> Check:
    for t in universe:
        v = validate_tower(t, space)
        if v is not None:
            return Check(f"validate[{universe.owner}]", FAIL, {"reason": v.reason}, {"tower": format_tower(t)})
    return Check(f"validate[{universe.owner}]", PASS, {"towers": len(universe)})


def check_projection(universe: TowerSet) -> Check:
    """Identity, idempotence, composition, and agreement with plain truncation."""
    name = f"projection[{universe.owner}]"
    D = universe.depth
    for t in universe:
        for m in range(D + 1):
            pm = project(t, m)
            truncated = TowerChoice(t.owner, t.base, t.levels[:m])
            if pm != truncated or project(pm, m) != pm:
                return Check(name, FAIL, {"m": m}, {"tower": format_tower(t)})
            for k in range(m + 1):
                if project(pm, k) != project(t, k):
                    return Check(name, FAIL, {"k": k, "m": m}, {"tower": format_tower(t)})
    return Check(name, PASS, {"towers": len(universe)})


def _pairs(a: Sequence, b: Sequence, rng: random.Random, cap: int) -> tuple[list, bool]:
    """Every pair of ``a x b`` when at most ``cap``, else ``cap`` seeded draws."""
    if len(a) * len(b) <= cap:
        return list(itertools.product(a, b)), True
    return [(rng.choice(a), rng.choice(b)) for _ in range(cap)], False


def check_kuratowski(
    universe: TowerSet,
    n: int,
    rng: random.Random,
    samples: int = 1000,
    closure_fn: ClosureFn = closure,
    pair_cap: int = 4096,
) -> Check:
    """Closure axioms over random subsets plus every singleton and singleton pair
    (sampled pairs when the universe has more than ``pair_cap`` of them)."""
    name = f"kuratowski[{universe.owner},obs={n}]"
    cl = lambda R: closure_fn(R, n, universe).as_frozenset()  # noqa: E731
    members = universe.members

    def fail(axiom, **sets):
        return Check(name, FAIL, {"axiom": axiom}, {k: _texts(v) for k, v in sets.items()})

    if cl(()) != frozenset():
        return fail("empty", closure=cl(()))
    randoms = [frozenset(t for t in members if rng.random() < 0.5) for _ in range(samples)]
    singles = [frozenset([t]) for t in members]
    tested = 0
    for R in randoms + singles:
        c = cl(R)
        if not R <= c:
            return fail("extensive", R=R, closure=c)
        if cl(c) != c:
            return fail("idempotent", R=R, closure=c)
        tested += 1
    pairs = list(zip(randoms, randoms[1:] + randoms[:1]))
    singleton_pairs, exhaustive = _pairs(members, members, rng, pair_cap)
    pairs += [(frozenset([a]), frozenset([b])) for a, b in singleton_pairs]
    for A, B in pairs:
        if cl(A | B) != cl(A) | cl(B):
            return fail("additive", A=A, B=B)
    detail = {"sets": tested, "pairs": len(pairs), "universe": len(members), "singleton_pairs_exhaustive": exhaustive}
    return Check(name, PASS, detail)


def check_forbids_equivalence(
    universes: dict[str, TowerSet], rng: random.Random | None = None, cap: int = 10**6
) -> Check:
    """Top-level and levelwise forbidding agree; exhaustive per agent pair up to ``cap`` pairs."""
    count, exhaustive = 0, True
    rng = rng or random.Random(0)
    for ua, ub in itertools.product(universes.values(), repeat=2):
        pairs, full = _pairs(ua.members, ub.members, rng, cap)
        exhaustive &= full
        for x, y in pairs:
            count += 1
            if forbids(x, y) != forbids_levelwise(x, y):
                return Check("forbids_equivalence", FAIL, {}, {"x": format_tower(x), "y": format_tower(y)})
    return Check("forbids_equivalence", PASS, {"pairs": count, "exhaustive": exhaustive})


def check_forbidden_sets_closed(universes: dict[str, TowerSet], closure_fn: ClosureFn = closure) -> Check:
    """Every forbidden set is closed at observation depth ``D - 1``."""
    count = 0
    for ua in universes.values():
        for x in ua:
            for b, ub in universes.items():
                F = forbidden_set(x, b, ub)
                count += 1
                if closure_fn(F, ub.depth - 1, ub).as_frozenset() != F.as_frozenset():
                    return Check(
                        "forbidden_sets_closed", FAIL, {"target": b},
                        {"x": format_tower(x), "forbidden": F.texts()},
                    )
    return Check("forbidden_sets_closed", PASS, {"forbidden_sets": count})


def check_forbid_constructor(
    space: BaseSpace, holder: str, target: str, depth: int, cap: int, budget: int, closure_fn: ClosureFn = closure
) -> tuple[Check, Check]:
    """Forbidding a set forbids exactly its closure, over every subset of a slice;
    and the constructor is not injective, with witnesses."""
    name = f"forbid_constructor_closure[{holder}->{target}]"
    slice_ = counterparty_slice(space, target, holder, depth, cap, budget)
    base = space.choices(holder)[0]
    carrier = no_forbid_tower(space, holder, base, depth)
    images: dict = {}
    strict_witness = None
    collision = None
    subsets = subsets_by_mask(slice_.members)
    for R in subsets:
        x = forbid_constructor(base, carrier, target, R)
        F = forbidden_set(x, target, slice_).as_frozenset()
        cl = closure_fn(R, depth - 1, slice_).as_frozenset()
        if F != cl:
            return (
                Check(name, FAIL, {"slice": len(slice_)}, {"R": _texts(R), "forbidden": _texts(F), "closure": _texts(cl)}),
                Check(f"forbid_not_injective[{holder}->{target}]", REFUSED, {"reason": "identity failed"}),
            )
        if strict_witness is None and R < F:
            strict_witness = (R, F)
        if collision is None and F in images and images[F] != R:
            collision = (images[F], R, F)
        images.setdefault(F, R)
    ok = Check(name, PASS, {"slice": len(slice_), "subsets": len(subsets)})
    noninj_name = f"forbid_not_injective[{holder}->{target}]"
    witness = {}
    if strict_witness:
        witness["strict"] = {"R": _texts(strict_witness[0]), "forbidden": _texts(strict_witness[1])}
    if collision:
        witness["collision"] = {"R": _texts(collision[0]), "R_prime": _texts(collision[1]), "forbidden": _texts(collision[2])}
    verdict = PASS if strict_witness and collision else FAIL
    return ok, Check(noninj_name, verdict, {"slice": len(slice_)}, witness)


def check_separation(universe: TowerSet, rng: random.Random | None = None, cap: int = 10**6) -> Check:
    """Distinct towers first differ at their separating depth and agree below it."""
    name = f"separating_depth[{universe.owner}]"
    pairs, exhaustive = _pairs(universe.members, universe.members, rng or random.Random(0), cap)
    for x, y in pairs:
        if x == y:
            continue
        n = separating_depth(x, y)
        if n is None or project(x, n) == project(y, n) or any(project(x, m) != project(y, m) for m in range(n)):
            return Check(name, FAIL, {}, {"x": format_tower(x), "y": format_tower(y)})
    return Check(name, PASS, {"pairs": len(pairs), "exhaustive": exhaustive})


# -- exchange ------------------------------------------------------------


def price_closedness(spec: ExchangeSpec, source, reading: PriceReading, route: str) -> list[Check]:
    """Each dictionary price set is closed at observation depth ``D - 1``; FAILs carry
    a same-class pair re-checked member by member with ``price_member``."""
    checks = []
    reps = None
    for p in spec.prices:
        for b in spec.agents:
            name = f"price_closed[{format_price(p)},{b},{reading.name}]"
            w = source.closedness_witness(p, b)
            detail = {"route": route}
            if hasattr(source, "member_count"):
                detail["members"] = source.member_count(p, b)
            if w is None:
                checks.append(Check(name, PASS, detail))
                continue
            y_in, y_out = w
            if spec.depth == 1:
                if reps is None:
                    space = spec.space()
                    reps = {a: [no_forbid_tower(space, a, s, 1) for s in spec.schedules(a)] for a in spec.agents}
                confirmed = (
                    price_member(spec, p, b, y_in, reps, reading)
                    and not price_member(spec, p, b, y_out, reps, reading)
                    and project(y_in, 0) == project(y_out, 0)
                )
                detail["witness_confirmed"] = confirmed
            checks.append(Check(name, FAIL, detail, {"in_price_set": format_tower(y_in), "outside_price_set": format_tower(y_out)}))
    return checks


def route_agreement(spec: ExchangeSpec, kernel_source, class_source, reading: PriceReading) -> Check:
    """Exhaustive kernel and per-class analysis agree on every image and closedness verdict."""
    name = f"pricing_routes_agree[{reading.name}]"
    for p in spec.prices:
        for b in spec.agents:
            k_closed = kernel_source.closedness_witness(p, b) is None
            c_closed = class_source.closedness_witness(p, b) is None
            if k_closed != c_closed or kernel_source.image(p, b) != class_source.image(p, b):
                return Check(name, FAIL, {"price": format_price(p), "agent": b})
    return Check(name, PASS, {"prices": len(spec.prices)})


def pricey_respects_rights(spec: ExchangeSpec, econ: EconomySpec, source, reading: PriceReading) -> Check:
    """No pricey choice forbids a choice that takes nothing from its owner."""
    name = f"pricey_respects_rights[{reading.name}]"
    space = spec.space()
    count = 0
    for a in spec.agents:
        for p in spec.prices:
            for t in pricey_towers(source, spec, a, p):
                count += 1
                choices = {b: no_forbid_tower(space, b, space.choices(b)[0], spec.depth) for b in spec.agents}
                choices[a] = t
                profile = Profile(spec.agents, tuple(choices[b] for b in spec.agents))
                v = rights_violation(econ, profile, a)
                if v is not None:
                    return Check(
                        name, FAIL, {"price": format_price(p), "pricey_checked": count},
                        {"pricey": format_tower(t), "target": v[0], "forbidden_zero_taker": format_tower(v[1])},
                    )
    return Check(name, PASS, {"pricey_checked": count})
