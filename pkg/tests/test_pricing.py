from fractions import Fraction
from functools import cache

import pytest
from exchange_fixtures import SMALL, SMALL_ECON, SMALL_U
from oracles import oracle_price_condition

from consentify.economy import Profile
from consentify.exchange import ExchangeSpec, build_consentified_exchange, linear_utility
from consentify.kernel import Depth1Kernel
from consentify.laws import price_closedness, pricey_respects_rights, route_agreement
from consentify.pricing import (
    FAIL,
    PASS,
    READINGS,
    VACUOUS_FAIL,
    ClassPricing,
    MaterializedPricing,
    PriceReading,
    check_prices_are_good,
    pricey_towers,
    run_prices_materialized,
)
from consentify.towers import BudgetExceeded, TowerChoice, TowerSet, enumerate_towers, project

GEQ = [r for r in READINGS if not r.strict]
GT = [r for r in READINGS if r.strict]
ZERO, ONE = SMALL.prices
KERNEL = Depth1Kernel(SMALL)
ids = pytest.mark.parametrize("reading", READINGS, ids=lambda r: r.name)


@cache
def materialized_run(reading):
    return run_prices_materialized(SMALL_ECON, SMALL, SMALL_U, reading)


def oracle_members(p, beta, reading):
    """Count of ``R_beta(p)`` from raw take vectors and forbidden base sets."""
    count = 0
    for y in SMALL_U[beta]:
        ok = True
        for alpha in reading.counterparties(beta, SMALL.agents):
            banned = {t.base for t in y.top(alpha)}
            for s in SMALL.schedules(alpha):
                if oracle_price_condition(p, s.take(beta), y.base.take(alpha), reading.strict) and s not in banned:
                    ok = False
        count += ok
    return count


@pytest.fixture(scope="module")
def sources():
    return {r: (MaterializedPricing(SMALL, SMALL_U, r), KERNEL.pricing(r), ClassPricing(SMALL, r)) for r in READINGS}


@ids
def test_membership_matches_oracle(reading, sources):
    mat, ker, _ = sources[reading]
    for p in SMALL.prices:
        for beta in SMALL.agents:
            expected = oracle_members(p, beta, reading)
            assert len(mat.price_set(p, beta)) == expected == ker.member_count(p, beta)


@ids
def test_pricing_routes_agree(reading, sources):
    mat, ker, cls = sources[reading]
    assert route_agreement(SMALL, ker, cls, reading).verdict == PASS
    for p in SMALL.prices:
        for beta in SMALL.agents:
            assert mat.image(p, beta) == ker.image(p, beta) == cls.image(p, beta)
            closed = {s.closedness_witness(p, beta) is None for s in (mat, ker, cls)}
            assert len(closed) == 1


def test_zero_price_set_forbids_the_whole_counterparty_universe(sources):
    mat, _, _ = sources[PriceReading()]
    everything = frozenset(TowerChoice("alpha", s) for s in SMALL.schedules("alpha"))
    members = mat.price_set(ZERO, "beta")
    assert len(members) > 0
    assert all(y.top("alpha") == everything for y in members)
    assert len(members) == sum(1 for y in SMALL_U["beta"] if y.top("alpha") == everything)


def test_strict_zero_price_set_is_everything(sources):
    for r in GT:
        assert sources[r][0].price_set(ZERO, "beta") == SMALL_U["beta"]


@ids
def test_non_closed_price_sets_ship_confirmed_witnesses(reading, sources):
    _, ker, _ = sources[reading]
    checks = price_closedness(SMALL, ker, reading, "kernel")
    failing = [c for c in checks if c.verdict == FAIL]
    assert failing
    for c in failing:
        assert c.detail["witness_confirmed"] is True
        assert c.witness["in_price_set"] != c.witness["outside_price_set"]


@ids
@pytest.mark.xfail(strict=True, reason="price sets are not closed at observation depth 0 on this instance; see notes")
def test_price_sets_closed(reading, sources):
    mat, _, _ = sources[reading]
    for p in SMALL.prices:
        for beta in SMALL.agents:
            assert mat.closedness_witness(p, beta) is None


def test_witness_pair_shares_a_depth0_class(sources):
    mat, _, _ = sources[PriceReading()]
    y_in, y_out = mat.closedness_witness(ONE, "beta")
    assert project(y_in, 0) == project(y_out, 0)
    assert y_in in mat.price_set(ONE, "beta") and y_out not in mat.price_set(ONE, "beta")


# -- pricey choices ------------------------------------------------------


def forbid_everything(owner):
    other = "beta" if owner == "alpha" else "alpha"
    top = {owner: [], other: [TowerChoice(other, s) for s in SMALL.schedules(other)]}
    return TowerChoice.build(owner, SMALL.schedules(owner)[0], top, 1)


@pytest.mark.parametrize("reading", GT, ids=lambda r: r.name)
def test_forbid_everything_is_pricey_at_zero_strict(reading, sources):
    assert sources[reading][0].is_pricey(forbid_everything("alpha"), SMALL.prices) == [ZERO]


@pytest.mark.parametrize("reading", GEQ, ids=lambda r: r.name)
@pytest.mark.xfail(strict=True, reason="under >= the zero-price set is not closed, so nothing is pricey")
def test_forbid_everything_is_pricey_at_zero_geq(reading, sources):
    assert ZERO in sources[reading][0].is_pricey(forbid_everything("alpha"), SMALL.prices)


@ids
@pytest.mark.xfail(strict=True, reason="the p=1 price set is not closed, so no tower's forbidden set can equal it")
def test_tower_built_from_price_set_round_trips(reading, sources):
    mat, ker, _ = sources[reading]
    (t,) = pricey_towers(ker, SMALL, "alpha", ONE, [SMALL.schedules("alpha")[0]])
    assert ONE in mat.is_pricey(t, SMALL.prices)


@ids
def test_arbitrary_forbidden_set_is_not_pricey(reading, sources):
    mat, _, _ = sources[reading]
    s = SMALL.schedules("beta")
    x = TowerChoice.build("alpha", SMALL.schedules("alpha")[0], {"alpha": [], "beta": [TowerChoice("beta", s[1])]}, 1)
    assert mat.is_pricey(x, SMALL.prices) == []


@ids
def test_pricey_towers_exist_only_for_closed_price_sets(reading, sources):
    mat, ker, _ = sources[reading]
    for p in SMALL.prices:
        made = pricey_towers(ker, SMALL, "alpha", p)
        assert bool(made) == (ker.closedness_witness(p, "beta") is None)
        for t in made:
            assert p in mat.is_pricey(t, SMALL.prices)


@pytest.mark.parametrize("reading", GEQ, ids=lambda r: r.name)
def test_pricey_choices_respect_rights_geq(reading, sources):
    check = pricey_respects_rights(SMALL, SMALL_ECON, sources[reading][1], reading)
    assert check.verdict == PASS and check.detail["pricey_checked"] == 0


@pytest.mark.parametrize("reading", GT, ids=lambda r: r.name)
@pytest.mark.xfail(strict=True, reason="the strict zero-price tower forbids choices that take nothing; see notes")
def test_pricey_choices_respect_rights_strict(reading, sources):
    assert pricey_respects_rights(SMALL, SMALL_ECON, sources[reading][1], reading).verdict == PASS


# -- prices are good -----------------------------------------------------


def test_all_pricey_universe_passes():
    solo = ExchangeSpec(("solo",), 1, {"solo": (1,)}, {"solo": (1,)}, {"solo": linear_utility([1])},
                        prices=((Fraction(1),),))
    econ = build_consentified_exchange(solo)
    full = enumerate_towers(solo.space(), "solo", 1)
    universe = {"solo": TowerSet("solo", 1, [t for t in full if not t.top("solo")])}
    profile = Profile(("solo",), (universe["solo"].members[0],))
    check = check_prices_are_good(econ, solo, profile, "solo", universe)
    assert check.verdict == PASS
    assert check.overall_value == check.pricey_value == "1"


@pytest.mark.parametrize("reading", GT, ids=lambda r: r.name)
def test_neg_inf_best_passes_vacuously(reading):
    checks = materialized_run(reading)
    for c in checks:
        assert c.verdict == PASS
        assert c.overall_value == c.pricey_value == "-inf"


@pytest.mark.parametrize("reading", GEQ, ids=lambda r: r.name)
def test_no_pricey_counterparty_is_vacuous_fail(reading):
    checks = materialized_run(reading)
    assert [c.verdict for c in checks] == [VACUOUS_FAIL, VACUOUS_FAIL]
    assert all(c.diagnostics for c in checks)


@ids
def test_kernel_and_materialized_verdicts_agree(reading):
    k = [c.as_dict() for c in KERNEL.run_prices(SMALL_ECON, reading)]
    m = [c.as_dict() for c in materialized_run(reading)]
    assert [(c["verdict"], c["overall_value"], c["pricey_value"], c["profiles_checked"]) for c in k] == [
        (c["verdict"], c["overall_value"], c["pricey_value"], c["profiles_checked"]) for c in m
    ]


def test_check_requires_pricey_counterparty():
    profile = Profile(SMALL.agents, (SMALL_U["alpha"].members[0], SMALL_U["beta"].members[0]))
    with pytest.raises(ValueError):
        check_prices_are_good(SMALL_ECON, SMALL, profile, "alpha", SMALL_U)


# -- kernel indexing -----------------------------------------------------


def test_kernel_index_follows_enumeration_order():
    for i in (0, 1, 255, 256, 700, 1023):
        t = KERNEL.tower("alpha", i)
        assert t == SMALL_U["alpha"].members[i]
        assert KERNEL.index(t) == i


def test_kernel_refuses_large_universes():
    big = ExchangeSpec(("a", "b"), 2, {"a": (3, 3), "b": (3, 3)}, {"a": (1, 1), "b": (1, 1)},
                       {"a": linear_utility([1, 1]), "b": linear_utility([1, 1])})
    with pytest.raises(BudgetExceeded):
        Depth1Kernel(big)
