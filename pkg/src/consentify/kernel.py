"""Exhaustive depth-1 computations over exchange universes, vectorized.

A depth-1 tower of ``owner`` is indexed by its base position and one
forbidden-set bitmask per agent, laid out exactly as ``enumerate_towers``
orders them: base most significant, then the first agent's mask, ..., the
last agent's mask least significant.  Everything here is exhaustive over that
index range; nothing is sampled.
"""

from __future__ import annotations

import itertools

import numpy as np

from .economy import EconomySpec, Profile, base_value, evaluate_utility
from .exchange import ExchangeSpec, Price, dot
from .extreal import NEG_INF, ExtendedReal
from .pricing import (
    FAIL,
    PASS,
    VACUOUS_FAIL,
    PriceCheck,
    PriceReading,
    merge_checks,
    pricey_towers,
)
from .towers import BudgetExceeded, TowerChoice, format_tower

KERNEL_BUDGET = 10**7
MAX_MASK_BITS = 62


class Depth1Kernel:
    def __init__(self, spec: ExchangeSpec, budget: int = KERNEL_BUDGET):
        if spec.depth != 1:
            raise ValueError("the kernel handles depth-1 economies only")
        self.spec = spec
        self.agents = spec.agents
        self.schedules = {a: spec.schedules(a) for a in self.agents}
        self.n = {a: len(self.schedules[a]) for a in self.agents}
        self.bits = sum(self.n.values())
        for a in self.agents:
            size = self.n[a] << self.bits if self.bits <= MAX_MASK_BITS else 2.0 ** self.bits * self.n[a]
            if self.bits > MAX_MASK_BITS or size > budget:
                raise BudgetExceeded(f"depth-1 kernel universe of {a}", int(size) if self.bits < 1024 else size, budget)
        self.offset = {}
        shift = self.bits
        for a in self.agents:
            shift -= self.n[a]
            self.offset[a] = shift
        self.position = {a: {s: i for i, s in enumerate(self.schedules[a])} for a in self.agents}
        self._arrays = {}

    def size(self, owner: str) -> int:
        return self.n[owner] << self.bits

    def _decode(self, owner: str):
        if owner not in self._arrays:
            idx = np.arange(self.size(owner), dtype=np.int64)
            masks = {b: ((idx >> self.offset[b]) & ((1 << self.n[b]) - 1)) for b in self.agents}
            self._arrays[owner] = masks
        return self._arrays[owner]

    def tower(self, owner: str, i: int) -> TowerChoice:
        i = int(i)
        base = self.schedules[owner][i >> self.bits]
        top = {}
        for b in self.agents:
            mask = (i >> self.offset[b]) & ((1 << self.n[b]) - 1)
            top[b] = [TowerChoice(b, s) for j, s in enumerate(self.schedules[b]) if mask >> j & 1]
        return TowerChoice.build(owner, base, top, 1)

    def index(self, t: TowerChoice) -> int:
        i = self.position[t.owner][t.base] << self.bits
        for b in self.agents:
            for y in t.top(b):
                i |= 1 << (self.offset[b] + self.position[b][y.base])
        return i

    def block(self, owner: str) -> int:
        return 1 << self.bits

    # -- prices ----------------------------------------------------------

    def price_members(self, p: Price, beta: str, reading: PriceReading) -> np.ndarray:
        masks = self._decode(beta)
        base = np.repeat(np.arange(self.n[beta], dtype=np.int64), self.block(beta))
        member = np.ones(self.size(beta), dtype=bool)
        for alpha in reading.counterparties(beta, self.agents):
            need = np.zeros(self.n[beta], dtype=np.int64)
            for t_pos, t in enumerate(self.schedules[beta]):
                rhs = dot(p, t.take(alpha))
                m = 0
                for s_pos, s in enumerate(self.schedules[alpha]):
                    if reading.holds(dot(p, s.take(beta)), rhs):
                        m |= 1 << s_pos
                need[t_pos] = m
            c = need[base]
            member &= (masks[alpha] & c) == c
        return member

    def class_status(self, p: Price, beta: str, reading: PriceReading):
        member = self.price_members(p, beta, reading).reshape(self.n[beta], self.block(beta))
        return member, member.any(axis=1), member.all(axis=1)

    def pricing(self, reading: PriceReading) -> KernelPricing:
        return KernelPricing(self, reading)

    # -- utilities -------------------------------------------------------

    def utility_classes(self, econ: EconomySpec, alpha: str, others: dict[str, TowerChoice]):
        """Per base of ``alpha`` its base value and whether others aggress it, plus the
        per-tower mask of towers passing alpha's own filters (rights, self-aggression)."""
        if econ.government is not None:
            raise ValueError("the kernel does not model governments")
        masks = self._decode(alpha)
        ok = np.ones(self.size(alpha), dtype=bool)
        if econ.rights is not None:
            for b in self.agents:
                banned = 0
                for j, t in enumerate(self.schedules[b]):
                    if not econ.rights.permits(alpha, b, TowerChoice(b, t)):
                        banned |= 1 << j
                ok &= (masks[b] & banned) == 0
        if econ.non_aggression and econ.self_aggression:
            base = np.repeat(np.arange(self.n[alpha], dtype=np.int64), self.block(alpha))
            ok &= ((masks[alpha] >> base) & 1) == 0
        values, aggressed = [], []
        for s in self.schedules[alpha]:
            x = TowerChoice(alpha, s)
            profile = dict(others)
            profile[alpha] = TowerChoice.build(alpha, s, {b: () for b in self.agents}, 1)
            values.append(base_value(econ, Profile(self.agents, tuple(profile[a] for a in self.agents)), alpha))
            aggressed.append(econ.non_aggression and any(x in others[b].top(alpha) for b in others))
        return values, aggressed, ok.reshape(self.n[alpha], self.block(alpha))

    def best(self, econ: EconomySpec, alpha: str, others: dict[str, TowerChoice]):
        """Maximum utility of ``alpha`` over its whole universe and the first tower attaining it."""
        values, aggressed, ok = self.utility_classes(econ, alpha, others)
        any_ok = ok.any(axis=1)
        best_v, best_i = None, None
        for pos in range(self.n[alpha]):
            v = values[pos] if any_ok[pos] and not aggressed[pos] else NEG_INF
            if best_v is None or v > best_v:
                best_v = v
                first = int(np.argmax(ok[pos])) if any_ok[pos] and not aggressed[pos] else 0
                best_i = (pos << self.bits) + first
        return best_v, best_i

    def value_of(self, econ: EconomySpec, alpha: str, others: dict[str, TowerChoice], t: TowerChoice) -> ExtendedReal:
        values, aggressed, ok = self.utility_classes(econ, alpha, others)
        i = self.index(t)
        pos, off = i >> self.bits, i & (self.block(alpha) - 1)
        return values[pos] if ok[pos, off] and not aggressed[pos] else NEG_INF

    def run_prices(self, econ: EconomySpec, reading: PriceReading) -> list[PriceCheck]:
        """Prices-are-good for every agent, against every pricey counter-profile, exhaustively."""
        pricing = self.pricing(reading)
        pricey = {}
        for a in self.agents:
            seen = {}
            for p in self.spec.prices:
                for t in pricey_towers(pricing, self.spec, a, p):
                    seen.setdefault(t, None)
            pricey[a] = list(seen)
        out = []
        for alpha in self.agents:
            others = [b for b in self.agents if b != alpha]
            diagnostics = [f"no pricey choice of {b}" for b in others if not pricey[b]]
            checks = []
            if not diagnostics:
                for combo in itertools.product(*(pricey[b] for b in others)):
                    checks.append(self._check(econ, alpha, dict(zip(others, combo)), pricey[alpha], reading))
            out.append(merge_checks(alpha, reading, checks, diagnostics))
        return out

    def _check(self, econ, alpha, others, pricey_alpha, reading) -> PriceCheck:
        v_all, i_all = self.best(econ, alpha, others)
        w_all = self.tower(alpha, i_all)
        check = PriceCheck(alpha, reading.name, PASS, 1, str(v_all), format_tower(w_all))
        check.counter_profile = {b: format_tower(t) for b, t in others.items()}
        self._reverify(econ, alpha, others, w_all, v_all)
        if not pricey_alpha:
            check.verdict = VACUOUS_FAIL
            check.diagnostics.append(f"no pricey choice of {alpha} in the universe")
            return check
        values, aggressed, ok = self.utility_classes(econ, alpha, others)
        best_v, best_t = None, None
        for t in pricey_alpha:
            i = self.index(t)
            pos = i >> self.bits
            v = values[pos] if ok[pos, i & (self.block(alpha) - 1)] and not aggressed[pos] else NEG_INF
            if best_v is None or v > best_v:
                best_v, best_t = v, t
        self._reverify(econ, alpha, others, best_t, best_v)
        check.pricey_value, check.pricey_witness = str(best_v), format_tower(best_t)
        check.verdict = PASS if best_v >= v_all else FAIL
        return check

    def _reverify(self, econ, alpha, others, t, value):
        choices = dict(others)
        choices[alpha] = t
        profile = Profile(self.agents, tuple(choices[a] for a in self.agents))
        again = evaluate_utility(econ, profile, alpha)
        if again != value:
            raise AssertionError(f"kernel value {value} disagrees with evaluate_utility {again} at {profile.texts()}")


class KernelPricing:
    """Pricing source backed by exhaustive kernel membership."""

    def __init__(self, kernel: Depth1Kernel, reading: PriceReading):
        self.kernel = kernel
        self.reading = reading
        self.depth = 1
        self._status = {}

    def status(self, p: Price, beta: str):
        key = (p, beta)
        if key not in self._status:
            self._status[key] = self.kernel.class_status(p, beta, self.reading)
        return self._status[key]

    def image(self, p: Price, beta: str) -> frozenset:
        _, some, _ = self.status(p, beta)
        return frozenset(TowerChoice(beta, s) for s, hit in zip(self.kernel.schedules[beta], some) if hit)

    def closedness_witness(self, p: Price, beta: str):
        member, some, every = self.status(p, beta)
        block = self.kernel.block(beta)
        for pos in range(self.kernel.n[beta]):
            if some[pos] and not every[pos]:
                row = member[pos]
                i_in = (pos * block) + int(np.argmax(row))
                i_out = (pos * block) + int(np.argmin(row))
                return self.kernel.tower(beta, i_in), self.kernel.tower(beta, i_out)
        return None

    def closed_image(self, p: Price, beta: str) -> frozenset | None:
        return None if self.closedness_witness(p, beta) is not None else self.image(p, beta)

    def member_count(self, p: Price, beta: str) -> int:
        member, _, _ = self.status(p, beta)
        return int(member.sum())
