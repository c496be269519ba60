from fractions import Fraction

import pytest
from exchange_fixtures import ACCEPTANCE, SMALL, SMALL_ECON
from hypothesis import given
from hypothesis import strategies as st

from consentify.economy import Profile, evaluate_utility
from consentify.exchange import (
    AppropriationSchedule,
    ExchangeSpec,
    autarky_schedule,
    decompose_allocation,
    format_price,
    leontief_utility,
    linear_utility,
    parse_price,
)
from consentify.extreal import NEG_INF
from consentify.towers import TowerChoice, no_forbid_tower

SPACE = SMALL.space()


def sched(a_take, b_take):
    return AppropriationSchedule(("alpha", "beta"), ((a_take,), (b_take,)))


def tower(owner, base, forbid=()):
    top = {"alpha": [], "beta": []}
    for target, s in forbid:
        top[target].append(TowerChoice(target, s))
    return TowerChoice.build(owner, base, top, 1)


def test_schedule_count_and_text():
    assert len(SMALL.schedules("alpha")) == 4
    assert len(ACCEPTANCE.schedules("alpha")) == 9
    assert str(sched(1, 0)) == "alpha=1+beta=0"
    assert sched(1, 1).total() == (2,)


def test_spec_validation():
    with pytest.raises(ValueError):
        ExchangeSpec(("a",), 1, {"a": (1,)}, {"a": (-1,)}, {"a": linear_utility([1])})
    with pytest.raises(ValueError):
        ExchangeSpec(("a",), 0, {"a": ()}, {"a": ()}, {"a": linear_utility([])})
    with pytest.raises(ValueError):
        ExchangeSpec(("a",), 1, {"a": (1,)}, {"a": (1,)}, {"a": linear_utility([1])}, prices=((Fraction(0),),),
                     allow_zero_price=False)


def test_prices_parse_exactly():
    assert parse_price("1/2", 1) == (Fraction(1, 2),)
    assert parse_price(["1", "2/3"], 2) == (Fraction(1), Fraction(2, 3))
    assert format_price((Fraction(1, 2), Fraction(2))) == "1/2,2"
    with pytest.raises(ValueError):
        parse_price(["1"], 2)


def test_utility_shapes():
    assert leontief_utility([1, 2])((3, 1)) == 2
    assert linear_utility(["1/2", 1])((2, 1)) == 2


def test_autarky_profile_has_base_utility():
    p = Profile(SPACE.agents, tuple(no_forbid_tower(SPACE, a, autarky_schedule(SMALL, a), 1) for a in SPACE.agents))
    assert [evaluate_utility(SMALL_ECON, p, a) for a in SPACE.agents] == [1, 1]


def test_overdrawn_endowment_is_neg_inf():
    p = Profile(SPACE.agents, (tower("alpha", sched(0, 1)), tower("beta", sched(0, 1))))
    assert evaluate_utility(SMALL_ECON, p, "beta") == NEG_INF
    assert evaluate_utility(SMALL_ECON, p, "alpha") == 1


def test_forbidding_a_zero_taker_is_neg_inf():
    x = tower("alpha", sched(1, 0), [("beta", sched(0, 1))])
    p = Profile(SPACE.agents, (x, tower("beta", sched(0, 0))))
    assert evaluate_utility(SMALL_ECON, p, "alpha") == NEG_INF
    allowed = tower("alpha", sched(1, 0), [("beta", sched(1, 0))])
    assert evaluate_utility(SMALL_ECON, p.replace("alpha", allowed), "alpha") == 1


def test_forbidden_choice_is_worthless():
    y = tower("beta", sched(1, 0))
    x = tower("alpha", sched(1, 0), [("beta", sched(1, 0))])
    assert evaluate_utility(SMALL_ECON, Profile(SPACE.agents, (x, y)), "beta") == NEG_INF


schedules = st.sampled_from(ACCEPTANCE.schedules("alpha"))


@given(schedules, st.sampled_from(ACCEPTANCE.schedules("beta")), st.sampled_from(["alpha", "beta"]),
       st.sampled_from(["alpha", "beta"]))
def test_budget_closed_under_reduction(sa, sb, who, victim):
    bases = {"alpha": sa, "beta": sb}
    if any(ACCEPTANCE.over_budget(a, bases) for a in ACCEPTANCE.agents):
        return
    s = bases[who]
    takes = [list(t) for t in s.takes]
    k = ACCEPTANCE.agents.index(victim)
    if takes[k][0] == 0:
        return
    takes[k][0] -= 1
    bases[who] = AppropriationSchedule(s.agents, tuple(map(tuple, takes)))
    assert not any(ACCEPTANCE.over_budget(a, bases) for a in ACCEPTANCE.agents)


def test_decompose_allocation():
    plan = decompose_allocation(ACCEPTANCE, {"alpha": (3,), "beta": (1,)})
    assert plan["alpha"].takes == ((2,), (1,))
    assert plan["beta"].takes == ((0,), (1,))
    # caps bound each taking, not the total
    assert decompose_allocation(ACCEPTANCE, {"alpha": (4,), "beta": (0,)})["alpha"].takes == ((2,), (2,))
    tight = ExchangeSpec(("alpha", "beta"), 1, {"alpha": (1,), "beta": (1,)}, {"alpha": (2,), "beta": (0,)},
                         {"alpha": linear_utility([1]), "beta": linear_utility([1])})
    assert decompose_allocation(tight, {"alpha": (2,), "beta": (0,)}) is None
    assert decompose_allocation(ACCEPTANCE, {"alpha": (5,), "beta": (0,)}) is None


@given(st.integers(0, 4))
def test_decomposed_takings_clear_the_endowments(q):
    plan = decompose_allocation(ACCEPTANCE, {"alpha": (q,), "beta": (4 - q,)})
    if plan is None:
        return
    for a in ACCEPTANCE.agents:
        assert plan[a].total() == ((q,) if a == "alpha" else (4 - q,))
        assert not ACCEPTANCE.over_budget(a, plan)
