"""Command runners: each turns a built scenario into a ``RunReport``."""

from __future__ import annotations

import itertools
import math
import random
import time
from dataclasses import dataclass, field

from .economy import EconomySpec, Profile, evaluate_utility, government_filter
from .exchange import format_price
from .kernel import Depth1Kernel, KernelPricing
from .laws import (
    Check,
    ClosureFn,
    check_forbid_constructor,
    check_forbidden_sets_closed,
    check_forbids_equivalence,
    check_kuratowski,
    check_projection,
    check_separation,
    check_validity,
    price_closedness,
    pricey_respects_rights,
    refused,
    route_agreement,
)
from .pricing import FAIL, PASS, REFUSED, VACUOUS_FAIL, ClassPricing, MaterializedPricing, run_prices_materialized
from .scenario import Built
from .search import (
    consentification_comparator,
    is_equilibrium,
    nash_enumerate,
    walrasian_oracle,
)
from .towers import BudgetExceeded, TowerSet, closure, enumerate_towers, forbids, format_tower

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_REFUSED = 0, 1, 2, 3


@dataclass
class RunReport:
    command: str
    checks: list[Check] = field(default_factory=list)
    tables: dict = field(default_factory=dict)

    def summary(self) -> dict[str, int]:
        out = {v: 0 for v in (PASS, FAIL, VACUOUS_FAIL, REFUSED)}
        for c in self.checks:
            out[c.verdict] += 1
        return out

    @property
    def exit_code(self) -> int:
        s = self.summary()
        if s[FAIL] or s[VACUOUS_FAIL]:
            return EXIT_FAIL
        if s[REFUSED]:
            return EXIT_REFUSED
        return EXIT_OK


class Deadline:
    """Wall-clock budget; steps past it are reported as REFUSED."""

    def __init__(self, seconds: float | None):
        self.end = None if seconds is None else time.monotonic() + seconds
        self.seconds = seconds

    def expired(self) -> bool:
        return self.end is not None and time.monotonic() > self.end

    def refusal(self, name: str) -> Check:
        return Check(name, REFUSED, {"reason": f"time budget of {self.seconds}s exhausted"})


def universes_or_refusals(built: Built, budget: int) -> tuple[dict[str, TowerSet] | None, list[Check]]:
    universes, checks = {}, []
    for a in built.space.agents:
        try:
            universes[a] = enumerate_towers(built.space, a, built.depth, budget)
        except BudgetExceeded as err:
            checks.append(refused(f"enumerate[{a}]", err))
    return (universes if not checks else None), checks


# -- laws ----------------------------------------------------------------


def run_laws(built: Built, seed: int, closure_fn: ClosureFn = closure) -> RunReport:
    s = built.scenario
    budgets = s.budgets
    deadline = Deadline(budgets.time_seconds)
    report = RunReport("laws")
    rng = random.Random(seed)
    universes, refusals = universes_or_refusals(built, budgets.enumeration)
    report.checks.extend(refusals)
    D = built.depth

    def step(name, fn):
        if deadline.expired():
            report.checks.append(deadline.refusal(name))
            return
        out = fn()
        report.checks.extend(out if isinstance(out, (list, tuple)) else [out])

    if universes is not None:
        obs = [s.observation_depth] if s.observation_depth is not None else range(D + 1)
        for a, u in universes.items():
            step(f"validate[{a}]", lambda u=u: check_validity(u, built.space))
            step(f"projection[{a}]", lambda u=u: check_projection(u))
            for n in obs:
                step(
                    f"kuratowski[{a},obs={n}]",
                    lambda u=u, n=n: check_kuratowski(u, n, rng, s.laws.random_sets, closure_fn, s.laws.pair_cap),
                )
            step(f"separating_depth[{a}]", lambda u=u: check_separation(u, rng, s.laws.equivalence_cap))
        if D >= 1:
            step("forbids_equivalence", lambda: check_forbids_equivalence(universes, rng, s.laws.equivalence_cap))
            step("forbidden_sets_closed", lambda: check_forbidden_sets_closed(universes, closure_fn))
            for holder, target in itertools.product(built.space.agents, repeat=2):
                step(
                    f"forbid_constructor_closure[{holder}->{target}]",
                    lambda h=holder, t=target: check_forbid_constructor(
                        built.space, h, t, D, s.laws.slice_cap, budgets.enumeration, closure_fn
                    ),
                )
        if built.economy.government is not None and D >= 1:
            step("minarchy_no_aggression", lambda: check_minarchy(built.economy, universes, budgets.profiles))
    elif built.economy.government is not None:
        report.checks.append(Check("minarchy_no_aggression", REFUSED, {"reason": "universes over budget"}))

    if built.exchange is not None:
        for reading in built.readings():
            step(f"price_closed[{reading.name}]", lambda r=reading: _price_laws(built, r, universes))
    return report


def pricing_source(built: Built, reading, universes=None):
    """Exhaustive pricing source and its route name; ``(None, "refused")`` when none fits."""
    spec = built.exchange
    if spec.depth == 1:
        try:
            return KernelPricing(Depth1Kernel(spec, built.scenario.budgets.kernel), reading), "kernel"
        except BudgetExceeded:
            pass
    if universes is not None:
        return MaterializedPricing(spec, universes, reading), "materialized"
    if spec.depth == 1:
        return ClassPricing(spec, reading), "per-class"
    return None, "refused"


def _price_laws(built: Built, reading, universes) -> list[Check]:
    spec = built.exchange
    source, route = pricing_source(built, reading, universes)
    if source is None:
        return [Check(f"price_closed[{reading.name}]", REFUSED, {"reason": "no exhaustive pricing route within budget"})]
    checks = price_closedness(spec, source, reading, route)
    if route == "kernel":
        checks.append(route_agreement(spec, source, ClassPricing(spec, reading), reading))
    checks.append(pricey_respects_rights(spec, built.economy, source, reading))
    return checks


def check_minarchy(economy: EconomySpec, universes: dict[str, TowerSet], budget: int) -> Check:
    """Legal government and finite non-government utilities leave no aggression among
    the non-government agents, over every profile.

    With non-aggression on, a citizen choice forbidden by a citizen is worth
    ``NEG_INF`` whatever the government does, so such citizen sub-profiles are
    skipped whole; each skip is confirmed by ``evaluate_utility`` against the
    first government tower.
    """
    name = "minarchy_no_aggression"
    g = economy.government.agent
    agents = economy.agents
    citizens = [a for a in agents if a != g]
    size = math.prod(len(universes[a]) for a in agents)
    if size > budget:
        return refused(name, BudgetExceeded("profile space", size, budget))
    include_self = economy.self_aggression

    def aggression(choices):
        for a, b in itertools.product(citizens, repeat=2):
            if (a != b or include_self) and forbids(choices[b], choices[a]):
                return b, a
        return None

    qualifying = pruned = 0
    gov = universes[g].members
    for combo in itertools.product(*(universes[a].members for a in citizens)):
        choices = dict(zip(citizens, combo))
        hit = aggression(choices)
        if hit is not None and economy.non_aggression:
            profile = Profile(agents, tuple(choices.get(a, gov[0]) for a in agents))
            if evaluate_utility(economy, profile, hit[1]).is_finite:
                return Check(name, FAIL, {"reason": "pruning unsound"}, {"profile": profile.texts()})
            pruned += len(gov)
            continue
        for t in gov:
            choices[g] = t
            profile = Profile(agents, tuple(choices[a] for a in agents))
            if any(not evaluate_utility(economy, profile, a).is_finite for a in citizens):
                continue
            if not government_filter(economy.government, profile).legal:
                continue
            qualifying += 1
            if hit is not None:
                return Check(
                    name, FAIL, {"profiles": size},
                    {"profile": profile.texts(), "aggressor": hit[0], "victim": hit[1]},
                )
    return Check(name, PASS, {"profiles": size, "qualifying": qualifying, "skipped_by_citizen_aggression": pruned})


# -- prices --------------------------------------------------------------


def run_prices(built: Built, seed: int) -> RunReport:
    report = RunReport("prices")
    if built.exchange is None:
        report.checks.append(Check("prices", REFUSED, {"reason": "price checks need an exchange scenario"}))
        return report
    spec = built.exchange
    deadline = Deadline(built.scenario.budgets.time_seconds)
    universes = None
    table = {a: {} for a in spec.agents}
    for reading in built.readings():
        if deadline.expired():
            report.checks.append(deadline.refusal(f"prices_are_good[{reading.name}]"))
            continue
        results = None
        if spec.depth == 1:
            try:
                kernel = Depth1Kernel(spec, built.scenario.budgets.kernel)
                results = kernel.run_prices(built.economy, reading)
            except BudgetExceeded:
                results = None
        if results is None:
            if universes is None:
                universes, refusals = universes_or_refusals(built, built.scenario.budgets.enumeration)
            if universes is None:
                for c in refusals:
                    report.checks.append(Check(f"prices_are_good[{reading.name}]", REFUSED, c.detail))
                continue
            results = run_prices_materialized(built.economy, spec, universes, reading)
        for r in results:
            d = r.as_dict()
            verdict = d.pop("verdict")
            witness = {k: d.pop(k) for k in ("overall_witness", "pricey_witness", "counter_profile")}
            report.checks.append(Check(f"prices_are_good[{r.agent},{reading.name}]", verdict, d, witness))
            table[r.agent][reading.name] = verdict
    report.tables["verdicts"] = table
    report.tables["price_dictionary"] = [format_price(p) for p in spec.prices]
    return report


# -- equilibria ----------------------------------------------------------


def run_equilibria(built: Built, seed: int) -> RunReport:
    report = RunReport("equilibria")
    s = built.scenario
    spec = built.exchange
    pricing = None
    if spec is not None:
        pricing, _ = pricing_source(built, built.readings()[0])
        if pricing is None:
            report.checks.append(Check("pricing", REFUSED, {"reason": "no exhaustive pricing route within budget"}))
            return report
    try:
        families = {
            a: fam.towers(built.space, s.budgets.enumeration, pricing, spec) for a, fam in built.families().items()
        }
    except BudgetExceeded as err:
        report.checks.append(refused("families", err))
        return report
    try:
        eq = nash_enumerate(built.economy, families, s.budgets.profiles)
    except BudgetExceeded as err:
        report.checks.append(refused("nash", err))
    else:
        fresh: dict = {}
        bad = [p for p, _ in eq.equilibria if not is_equilibrium(built.economy, p, families, fresh)]
        detail = {"profiles_searched": eq.profiles_searched, "equilibria": len(eq.equilibria), "scope": eq.scope}
        if bad:
            report.checks.append(Check("nash", FAIL, detail, {"profile": bad[0].texts()}))
        else:
            report.checks.append(Check("nash", PASS, detail))
        report.tables["equilibria"] = eq.as_dict()
        report.tables["families"] = {a: t.texts() for a, t in families.items()}
    if spec is not None:
        try:
            walras = walrasian_oracle(spec, s.budgets.profiles)
        except BudgetExceeded as err:
            report.checks.append(refused("walrasian", err))
            return report
        report.checks.append(Check("walrasian", PASS, {"equilibria": len(walras), "prices": len(spec.prices)}))
        report.tables["walrasian"] = [w.as_dict() for w in walras]
        rows = consentification_comparator(spec, pricing, families, walras, s.budgets.profiles)
        report.checks.append(
            Check(
                "comparator",
                PASS,
                {
                    "rows": len(rows),
                    "representable": sum(r.representable for r in rows),
                    "surviving": sum(bool(r.survives) for r in rows),
                },
            )
        )
        report.tables["comparator"] = [r.as_dict() for r in rows]
    return report


# -- enumerate -----------------------------------------------------------


def run_enumerate(built: Built, seed: int, agent: str | None = None, depth: int | None = None) -> RunReport:
    report = RunReport("enumerate")
    depth = built.depth if depth is None else depth
    for a in [agent] if agent else built.space.agents:
        try:
            u = enumerate_towers(built.space, a, depth, built.scenario.budgets.enumeration)
        except BudgetExceeded as err:
            report.checks.append(refused(f"enumerate[{a}]", err))
            continue
        report.checks.append(Check(f"enumerate[{a}]", PASS, {"towers": len(u), "depth": depth}))
        report.tables[a] = [format_tower(t) for t in u]
    return report


COMMANDS = {"laws": run_laws, "prices": run_prices, "equilibria": run_equilibria, "enumerate": run_enumerate}
