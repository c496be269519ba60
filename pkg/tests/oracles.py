"""Independent reference implementations used to derive expected values.

Towers here are plain nested tuples ``(base, ((agent, frozenset), ...), ...)``
built straight from the recurrence, sharing no code with the package.
"""

from __future__ import annotations

import itertools
from fractions import Fraction


def powerset(items):
    items = list(items)
    return [frozenset(c) for r in range(len(items) + 1) for c in itertools.combinations(items, r)]


def oracle_universe(choices: dict[str, list], depth: int) -> dict[str, list]:
    """Depth-``depth`` truncated towers as ``(base, level_1, ..., level_D)`` tuples.

    Level ``k`` maps each agent to a set of that agent's depth-``k-1`` towers;
    consistency is enforced by truncating level ``k`` sets to depth ``k-2``.
    """
    levels = {a: [(c,) for c in cs] for a, cs in choices.items()}
    for d in range(1, depth + 1):
        nxt = {}
        for a, cs in choices.items():
            out = []
            # the top level determines the lower ones by truncation
            per_agent = [powerset(levels[b]) for b in choices]
            for c in cs:
                for tops in itertools.product(*per_agent):
                    top = tuple(zip(choices, tops))
                    out.append(_with_lower((c,), top, d))
            nxt[a] = out
        levels = nxt
    return levels


def truncate(t: tuple, m: int) -> tuple:
    """Depth-``m`` truncation of an oracle tower: drop levels above ``m`` and
    truncate every member of the new top level."""
    if m == 0:
        return t[:1]
    top = tuple((b, frozenset(truncate(y, m - 1) for y in s)) for b, s in t[m])
    return _with_lower(t[:1], top, m)


def _with_lower(base: tuple, top: tuple, d: int) -> tuple:
    levels = [None] * d
    levels[d - 1] = top
    for k in range(d - 1, 0, -1):
        levels[k - 1] = tuple((b, frozenset(truncate(y, k - 1) for y in s)) for b, s in levels[k])
    return base + tuple(levels)


def oracle_count(n_choices: dict[str, int], depth: int) -> dict[str, int]:
    """|X^{k+1}_a| = |X^0_a| * prod_b 2^{|X^k_b|}."""
    counts = dict(n_choices)
    for _ in range(depth):
        counts = {a: n_choices[a] * 2 ** sum(counts.values()) for a in n_choices}
    return counts


def oracle_closure(R, n, universe, key):
    """Members of ``universe`` whose depth-``n`` truncation equals that of a member of ``R``."""
    targets = {key(y, n) for y in R}
    return {y for y in universe if key(y, n) in targets}


# -- exchange ------------------------------------------------------------


def oracle_schedules(agents, caps, goods):
    box = list(itertools.product(*(range(c + 1) for c in caps)))
    return list(itertools.product(box, repeat=len(agents)))


def oracle_price_condition(p, take_from_beta, take_from_alpha, strict):
    lhs = sum(Fraction(a) * b for a, b in zip(p, take_from_beta))
    rhs = sum(Fraction(a) * b for a, b in zip(p, take_from_alpha))
    return lhs > rhs if strict else lhs >= rhs


def oracle_walrasian(endowments, caps, utilities, prices):
    """All (p, allocation) on the grid where each bundle is a budget-feasible
    utility maximiser and markets clear exactly."""
    agents = list(endowments)
    goods = len(next(iter(endowments.values())))
    total = tuple(sum(endowments[a][i] for a in agents) for i in range(goods))
    found = []
    for p in prices:
        best = {}
        for a in agents:
            income = sum(Fraction(x) * w for x, w in zip(p, endowments[a]))
            boxes = itertools.product(*(range(c + 1) for c in caps[a]))
            feasible = [z for z in boxes if sum(Fraction(x) * q for x, q in zip(p, z)) <= income]
            top = max(utilities[a](z) for z in feasible)
            best[a] = [z for z in feasible if utilities[a](z) == top]
        for combo in itertools.product(*(best[a] for a in agents)):
            if tuple(map(sum, zip(*combo))) == total:
                found.append((p, dict(zip(agents, combo))))
    return found
