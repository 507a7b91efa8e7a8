"""Complete EFX solver for instances where each agent holds one of two valuations.

Progress is measured by the partition-leximin potential: group-A own-bundle
values sorted ascending, then group-B, compared lexicographically. Every step
either resolves a Pareto-improvable cycle or reallocates along the champion
decomposition of the poorest group-B agent's bundle, repairs the result from
semi-EFX back to EFX, and (in the harder cases) closes an explicit short
cycle anchored at the poorest group-A agent. Each structural claim the
construction relies on is re-checked at runtime and raises ProofCheckError
when violated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .core import (
    Allocation,
    Bundle,
    Instance,
    Order,
    PLexminVector,
    PreconditionError,
    ValidationError,
    compare_lex,
    empty_allocation,
    plexmin_vector,
    proof_check,
    reassigned,
)
from .cycles import PICycle, find_pi_cycle, resolve_pi_cycle
from .envy import build_graph, decompose, efx_envies, envies, is_efx, most_envious


class EmptyGroup(PreconditionError):
    """Both groups must be nonempty; single-valuation instances belong elsewhere."""


@dataclass(frozen=True)
class Grouping:
    """Partition of the agents into the two valuation classes."""

    group_a: tuple[int, ...]
    group_b: tuple[int, ...]


def validate_grouping(inst: Instance, grouping: Grouping) -> None:
    if not grouping.group_a or not grouping.group_b:
        raise EmptyGroup("both groups must contain at least one agent")
    if sorted([*grouping.group_a, *grouping.group_b]) != list(range(inst.n)):
        raise ValidationError("grouping must cover every agent exactly once")
    for group in (grouping.group_a, grouping.group_b):
        if len({inst.valuations[i] for i in group}) > 1:
            raise ValidationError("agents within a group must share one valuation")


def infer_grouping(inst: Instance) -> Grouping:
    """Group agents by valuation equality; agent 0's class becomes group A.

    Raises when the instance does not have exactly two distinct valuations.
    """
    first = inst.valuations[0]
    group_a = tuple(i for i in range(inst.n) if inst.valuations[i] == first)
    group_b = tuple(i for i in range(inst.n) if inst.valuations[i] != first)
    if not group_b or len({inst.valuations[i] for i in group_b}) > 1:
        raise PreconditionError("instance does not have exactly two distinct valuations")
    return Grouping(group_a, group_b)


def is_semi_efx(inst: Instance, x: Allocation, grouping: Grouping) -> bool:
    """EFX except that group-B agents may EFX-envy each other."""
    for i in grouping.group_a:
        for j in range(inst.n):
            if i != j and efx_envies(inst, x, i, x.bundles[j]):
                return False
    for i in grouping.group_b:
        for j in grouping.group_a:
            if efx_envies(inst, x, i, x.bundles[j]):
                return False
    return True


def semi_to_efx(inst: Instance, x: Allocation, grouping: Grouping) -> Allocation:
    """Repair a semi-EFX allocation to EFX by shedding items inside group B.

    While some group-B agent EFX-envies another, the witness item is removed
    from the envied bundle and returned to the pool; the allocated item count
    strictly decreases, so this terminates. Group-A bundles and the bundle of
    the group-B agent with the smallest own value are never touched.
    """
    if not is_semi_efx(inst, x, grouping):
        raise PreconditionError("semi_to_efx needs a semi-EFX allocation")
    b0 = min(grouping.group_b, key=lambda b: inst.perturbed(b, x.bundles[b]))
    entry_b0_bundle = x.bundles[b0]
    current = x
    while True:
        removal = None
        for bi in grouping.group_b:
            for bj in grouping.group_b:
                if bi == bj:
                    continue
                for h in current.bundles[bj]:
                    if envies(inst, current, bi, current.bundles[bj].drop(h)):
                        removal = (bj, h)
                        break
                if removal:
                    break
            if removal:
                break
        if removal is None:
            break
        bj, h = removal
        current = reassigned(inst, current, {bj: current.bundles[bj].drop(h)})
    proof_check(is_efx(inst, current), "repair loop must end in an EFX allocation")
    for a in grouping.group_a:
        proof_check(current.bundles[a] == x.bundles[a], "repair must not touch group A")
    proof_check(current.bundles[b0] == entry_b0_bundle,
                "repair must not touch the poorest group-B bundle")
    return current


def best_proper_subset(inst: Instance, b_valuation_agent: int, s: Bundle) -> Bundle:
    """The size |s|-1 subset of s with the highest group-B value.

    Drops the item whose removal hurts least; unique because the tie-broken
    order is strict.
    """
    if not s:
        raise PreconditionError("the empty bundle has no proper subset to pick")
    best = None
    for h in s:
        candidate = s.drop(h)
        if best is None or inst.prefers(b_valuation_agent, candidate, best):
            best = candidate
    return best


def _anchored_cycle(
    inst: Instance,
    x: Allocation,
    a0: int,
    g_prime: int,
    grouping: Grouping,
    b0: int,
    g_dprime: Optional[int] = None,
) -> PICycle:
    """Close the short cycle through a0 that a champion of X_a0 + g' induces.

    If a0 champions herself the one-step cycle suffices. A group-A champion l
    is reached by the direct envy edge a0 -> l. Otherwise the poorest group-B
    agent b0 is also a champion (same valuation, smaller bundle); the cycle
    closes through a0's envy toward b0 or, when that envy is absent, through
    a0 championing X_b0 + g'' for the supplied second item.
    """
    target = x.bundles[a0].add(g_prime)
    enviers = most_envious(inst, x, target)
    proof_check(enviers is not None, "someone must champion a0 for the bottom-half item")
    if a0 in enviers.agents:
        return PICycle(((a0, g_prime),))
    group_a_set = set(grouping.group_a)
    in_a = [l for l in enviers.agents if l in group_a_set]
    if in_a:
        l = in_a[0]
        proof_check(envies(inst, x, a0, x.bundles[l]),
                    "a0 must envy the richer group-A champion")
        return PICycle(((a0, None), (l, g_prime)))
    proof_check(b0 in enviers.agents,
                "the poorest group-B agent must champion a0 when group B does")
    if envies(inst, x, a0, x.bundles[b0]):
        return PICycle(((a0, None), (b0, g_prime)))
    proof_check(g_dprime is not None, "a0 must envy b0 unless a second item is available")
    second = most_envious(inst, x, x.bundles[b0].add(g_dprime))
    proof_check(second is not None and a0 in second.agents,
                "a0 must champion b0 for the item dropped from the proper subset")
    return PICycle(((a0, g_dprime), (b0, g_prime)))


def improve_step_twoval(
    inst: Instance, x: Allocation, grouping: Grouping
) -> tuple[Allocation, str]:
    """One partition-leximin-increasing EFX step for a partial EFX allocation."""
    if not x.pool:
        raise PreconditionError("improve step needs at least one unallocated item")
    graph = build_graph(inst, x)
    cycle = find_pi_cycle(graph)
    if cycle is not None:
        return resolve_pi_cycle(inst, x, cycle), "pi"

    g = min(x.pool)
    a_sorted = sorted(grouping.group_a, key=lambda a: inst.perturbed(a, x.bundles[a]))
    b_sorted = sorted(grouping.group_b, key=lambda b: inst.perturbed(b, x.bundles[b]))
    a0, b0 = a_sorted[0], b_sorted[0]

    # with no cycle available, a0 cannot envy b0 and must champion her
    proof_check(not envies(inst, x, a0, x.bundles[b0]),
                "a0 envying b0 would force a resolvable cycle")
    enviers = most_envious(inst, x, x.bundles[b0].add(g))
    proof_check(enviers is not None, "b0 always envies her own bundle plus g")
    proof_check(enviers.canonical in set(grouping.group_a),
                "the canonical champion of b0 must sit in group A")
    proof_check(a0 in enviers.agents, "the poorest group-A agent must champion b0")
    dec = decompose(inst, x, g, b0, champion=a0)
    top_with_g = dec.top.add(g)

    # U_a: the agent's bundle, or its best proper subset when b0 envies it
    u: dict[int, Bundle] = {}
    for a in a_sorted:
        if envies(inst, x, b0, x.bundles[a]):
            u[a] = best_proper_subset(inst, b0, x.bundles[a])
        else:
            u[a] = x.bundles[a]

    z = top_with_g
    achiever: Optional[int] = None
    for a in a_sorted:
        if inst.prefers(b0, u[a], z):
            z = u[a]
            achiever = a

    changes = {b0: z}
    if achiever is not None:
        changes[achiever] = top_with_g
    x1 = reassigned(inst, x, changes)
    proof_check(is_semi_efx(inst, x1, grouping),
                "the reallocation must be semi-EFX by construction")
    proof_check(
        all(b == b0 or inst.prefers(b, x1.bundles[b], x1.bundles[b0]) for b in b_sorted),
        "b0 must stay the poorest group-B agent after the reallocation",
    )

    if achiever == a0:
        # Case 1: a0 herself got the top half; group A only improved.
        return semi_to_efx(inst, x1, grouping), "case-1"

    if achiever is None:
        # Case 2: b0 took the top half and a0 now envies her.
        x2 = semi_to_efx(inst, x1, grouping)
        proof_check(envies(inst, x2, a0, x2.bundles[b0]),
                    "a0 must envy the top half handed to b0")
        g_prime = min(dec.bottom)
        proof_check(g_prime in x2.pool, "the bottom half must stay unallocated")
        cycle = _anchored_cycle(inst, x2, a0, g_prime, grouping, b0)
        return resolve_pi_cycle(inst, x2, cycle), "case-2"

    # Case 3: some richer group-A agent's candidate won.
    a_r = achiever
    if u[a_r] == x.bundles[a_r]:
        # b0 holds a_r's old bundle, which a0 envies; same closing as case 2.
        x2 = semi_to_efx(inst, x1, grouping)
        proof_check(envies(inst, x2, a0, x2.bundles[b0]),
                    "a0 must envy the bundle moved to b0")
        g_prime = min(dec.bottom)
        proof_check(g_prime in x2.pool, "the bottom half must stay unallocated")
        cycle = _anchored_cycle(inst, x2, a0, g_prime, grouping, b0)
        return resolve_pi_cycle(inst, x2, cycle), "case-3a"

    # b0 holds a proper subset of a_r's old bundle; work on the semi-EFX
    # allocation directly and repair only after the cycle resolution.
    dropped = x.bundles[a_r] - u[a_r]
    proof_check(len(dropped) == 1, "the proper subset drops exactly one item")
    g_dprime = dropped.members[0]
    proof_check(g_dprime in x1.pool, "the dropped item must be unallocated")
    g_prime = min(dec.bottom)
    proof_check(g_prime in x1.pool, "the bottom half must stay unallocated")
    cycle = _anchored_cycle(inst, x1, a0, g_prime, grouping, b0, g_dprime)
    x3 = resolve_pi_cycle(inst, x1, cycle)
    proof_check(is_semi_efx(inst, x3, grouping),
                "cycle resolution must preserve semi-EFX")
    label = "case-3b-B" if cycle.labels[0] == g_dprime else "case-3b-A"
    return semi_to_efx(inst, x3, grouping), label


def solve_twoval(
    inst: Instance, grouping: Grouping, trace: Optional[list] = None
) -> Allocation:
    """Complete EFX allocation when each agent has one of two valuations.

    Iterates improve steps from the empty allocation until the pool is empty;
    termination follows from the strict partition-leximin increase, which is
    re-checked every iteration.
    """
    validate_grouping(inst, grouping)
    x = empty_allocation(inst)
    previous = _psi(inst, x, grouping)
    if trace is not None:
        trace.append(("start", previous))
    while x.pool:
        x, label = improve_step_twoval(inst, x, grouping)
        current = _psi(inst, x, grouping)
        proof_check(compare_lex(current, previous) is Order.GREATER,
                    "every step must strictly increase the partition-leximin potential")
        proof_check(is_efx(inst, x), "every step must preserve EFX")
        previous = current
        if trace is not None:
            trace.append((label, current))
    return x


def _psi(inst: Instance, x: Allocation, grouping: Grouping) -> PLexminVector:
    return plexmin_vector(inst, x, grouping.group_a, grouping.group_b)
