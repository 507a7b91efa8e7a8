"""Brute-force references and the three-agent counterexample fixture.

The enumerator and the subset-scan preferred-set reference are deliberately
independent of the solver-side implementations (different enumeration order
and data path) so the two can cross-check each other.

The counterexample is a seven-item, three-agent instance with a partial EFX
allocation from which no complete EFX allocation can keep agent 0's value:
every complete EFX allocation leaves agent 0 strictly below her partial-
allocation value, so no potential that ranks agent 0 first can progress to
completeness from there. The valuation tables are one concrete instantiation
of a family of inequality constraints; ``verify_counterexample`` re-checks
every constraint and the full brute-force claim rather than trusting the
construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .core import (
    Allocation,
    Additive,
    Bundle,
    FullTable,
    GuardExceeded,
    Instance,
    ProofCheckError,
    SUBSET_ENUM_LIMIT,
    make_allocation,
    proof_check,
    validate_instance,
)
from .envy import is_efx

ENUMERATION_GUARD = 10**7


def enumerate_complete_efx(
    inst: Instance, start: int = 0, stop: Optional[int] = None
) -> list[Allocation]:
    """All complete EFX allocations, ascending by assignment code.

    An assignment maps each item to an agent; its code reads the agent
    indices as base-n digits with item 0 least significant. The optional
    code range allows partitioned runs whose concatenation equals the full
    enumeration.
    """
    n, m = inst.n, inst.m
    total = n**m
    if total > ENUMERATION_GUARD:
        raise GuardExceeded(f"{total} assignments exceed the {ENUMERATION_GUARD} guard")
    if stop is None:
        stop = total
    found = []
    for code in range(start, stop):
        masks = [0] * n
        remaining = code
        for j in range(m):
            masks[remaining % n] |= 1 << j
            remaining //= n
        candidate = Allocation(tuple(Bundle(mask) for mask in masks), Bundle(0))
        if is_efx(inst, candidate):
            found.append(candidate)
    return found


def brute_min_preferred(
    inst: Instance, x: Allocation, i: int, s: Bundle
) -> Optional[Bundle]:
    """Reference minimum preferred set by scanning every submask of s.

    Same contract and tie-break as envy.min_preferred_set: smallest
    cardinality first, then smallest subset code; None when no subset of s is
    preferred to the agent's own bundle.
    """
    if len(s) > SUBSET_ENUM_LIMIT:
        raise GuardExceeded(f"subset scan is limited to |S| <= {SUBSET_ENUM_LIMIT}")
    own = x.bundles[i]
    best: Optional[tuple[int, int]] = None
    sub = s.mask
    while sub:
        if inst.prefers(i, Bundle(sub), own):
            key = (sub.bit_count(), sub)
            if best is None or key < best:
                best = key
        sub = (sub - 1) & s.mask
    return None if best is None else Bundle(best[1])


_ITEMS = ("g1", "g2", "g3", "g4", "g5", "g6", "g7")
# item indices: g1=0, g2=1, ..., g7=6
_G1, _G2, _G3, _G4, _G5, _G6, _G7 = range(7)


def _branch_table(high_pair: tuple[int, int], low_pair: tuple[int, int]) -> FullTable:
    # Shared shape of the two table valuations: singleton g1 is worth 100,
    # any larger set containing g1 is worth 200 + |S|, the high pair lifts a
    # set to 150 + |S|, the low pair to 120 + |S|, and anything else is worth
    # its cardinality.
    high = (1 << high_pair[0]) | (1 << high_pair[1])
    low = (1 << low_pair[0]) | (1 << low_pair[1])
    values = []
    for mask in range(1 << 7):
        size = mask.bit_count()
        if mask >> _G1 & 1:
            values.append(Fraction(100) if size == 1 else Fraction(200 + size))
        elif mask & high == high:
            values.append(Fraction(150 + size))
        elif mask & low == low:
            values.append(Fraction(120 + size))
        else:
            values.append(Fraction(size))
    return FullTable(tuple(values))


def counterexample_instance() -> Instance:
    """Three agents, seven items; progress past the baseline cannot keep agent 0.

    Agent 0 values only g1 and g2 (weight 1 each). Agents 1 and 2 hold table
    valuations built from the branch formula above with pairs (g5,g7)/(g3,g4)
    and (g3,g7)/(g5,g6) respectively.
    """
    agent0 = Additive((Fraction(1), Fraction(1)) + (Fraction(0),) * 5)
    agent1 = _branch_table((_G5, _G7), (_G3, _G4))
    agent2 = _branch_table((_G3, _G7), (_G5, _G6))
    return validate_instance(_ITEMS, (agent0, agent1, agent2))


def counterexample_baseline(inst: Optional[Instance] = None) -> Allocation:
    """The partial EFX allocation ({g1,g2}, {g3,g4}, {g5,g6}) with g7 unallocated."""
    if inst is None:
        inst = counterexample_instance()
    return make_allocation(
        inst,
        [Bundle.of(_G1, _G2), Bundle.of(_G3, _G4), Bundle.of(_G5, _G6)],
    )


@dataclass(frozen=True)
class CounterexampleReport:
    inequalities_checked: int
    baseline_value: Fraction
    complete_efx_count: int
    max_complete_value: Optional[Fraction]


def _check_table_conditions(
    inst: Instance, agent: int, high_pair: tuple[int, int], low_pair: tuple[int, int],
    low_triple: tuple[int, int, int],
) -> int:
    """Re-check the inequality family one table valuation must satisfy.

    Returns the number of inequalities verified; raises on any failure.
    """
    def v(*items: int) -> Fraction:
        return inst.value(agent, Bundle.of(*items))

    checked = 0
    g1_value = v(_G1)
    for i in range(1, 7):
        proof_check(v(i) < g1_value, f"agent {agent}: singleton {i} must sit below g1")
        checked += 1
    for i in range(1, 7):
        for j in range(i + 1, 7):
            if {i, j} in ({*high_pair}, {*low_pair}):
                continue
            proof_check(v(i, j) < g1_value, f"agent {agent}: pair {{{i},{j}}} must sit below g1")
            checked += 1
    proof_check(v(*low_triple) < g1_value, f"agent {agent}: the low triple must sit below g1")
    proof_check(g1_value < v(*low_pair), f"agent {agent}: g1 must sit below the low pair")
    proof_check(v(*low_pair) < v(*high_pair), f"agent {agent}: low pair must sit below high pair")
    checked += 3
    for i in range(1, 7):
        proof_check(v(*high_pair) < v(_G1, i),
                    f"agent {agent}: high pair must sit below g1 plus item {i}")
        checked += 1
    # monotonicity and normalization, re-checked explicitly over all entries
    table = inst.valuations[agent]
    proof_check(table.value_of(0) == 0, f"agent {agent}: table not normalized")
    checked += 1
    for mask in range(1 << 7):
        for j in range(7):
            if not mask >> j & 1:
                proof_check(table.value_of(mask) <= table.value_of(mask | 1 << j),
                            f"agent {agent}: table not monotone at {Bundle(mask)} + {j}")
                checked += 1
    return checked


def verify_counterexample() -> CounterexampleReport:
    """Re-derive every claim of the counterexample; any failure raises.

    Checks (a) the inequality constraints and monotonicity of both tables plus
    the shape of agent 0's weights, (b) that the baseline partial allocation
    is EFX, and (c) that each of the 3**7 complete allocations that is EFX
    gives agent 0 strictly less than her baseline value of 2. The number of
    complete EFX allocations is reported, not asserted.
    """
    inst = counterexample_instance()
    checked = _check_table_conditions(inst, 1, (_G5, _G7), (_G3, _G4), (_G4, _G5, _G6))
    checked += _check_table_conditions(inst, 2, (_G3, _G7), (_G5, _G6), (_G3, _G4, _G6))
    weights = inst.valuations[0].weights
    proof_check(weights[_G1] == weights[_G2] > 0, "agent 0 must value g1 and g2 equally, positively")
    proof_check(all(w == 0 for w in weights[2:]), "agent 0 must value g3..g7 at zero")
    checked += 2

    baseline = counterexample_baseline(inst)
    proof_check(is_efx(inst, baseline), "the baseline partial allocation must be EFX")
    baseline_value = inst.value(0, baseline.bundles[0])
    proof_check(baseline_value == 2, "agent 0's baseline value must be 2")

    complete = enumerate_complete_efx(inst)
    worst = None
    for allocation in complete:
        agent0_value = inst.value(0, allocation.bundles[0])
        if agent0_value >= baseline_value:
            raise ProofCheckError(
                f"complete EFX allocation {allocation.bundles} keeps agent 0 at {agent0_value}"
            )
        if worst is None or agent0_value > worst:
            worst = agent0_value
    return CounterexampleReport(
        inequalities_checked=checked,
        baseline_value=baseline_value,
        complete_efx_count=len(complete),
        max_complete_value=worst,
    )
