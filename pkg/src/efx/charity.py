"""Charity solver: EFX with at most max(0, n-2) unallocated, un-envied items.

Starting from the empty allocation (trivially EFX), every step produces an
EFX allocation that is strictly larger under the lexicographic potential
(own-bundle values in agent order, agent 0 most important), so the loop
terminates on a finite allocation space. Steps fall back from cycle
resolution to an explicit reallocation along a champion path when the pool
has exactly n-1 items and no envy exists.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .core import (
    Allocation,
    Bundle,
    Instance,
    Order,
    PreconditionError,
    compare_lex,
    empty_allocation,
    lex_vector,
    make_allocation,
    proof_check,
    reassigned,
)
from .cycles import PICycle, resolve_pi_cycle
from .envy import Decomposition, NotADecomposition, champion_of, decompose, envies, is_efx, most_envious


class NoEnvyTowardPool(PreconditionError):
    """claim_from_pool was called while nobody envies the pool."""


@dataclass(frozen=True)
class DecompositionPath:
    """Champion path a_n -> ... -> a_1 over all n agents.

    agents[0] is a_1; labels[k] is the pool item on the edge from
    agents[k+1] to agents[k], and preferred[k] that champion's minimum
    preferred set. decompositions is per-edge when every edge splits its
    target (guaranteed when no envy edge exists), else None.
    """

    agents: tuple[int, ...]
    labels: tuple[int, ...]
    preferred: tuple[Bundle, ...]
    decompositions: Optional[tuple[Decomposition, ...]]


def _champion_walk(
    inst: Instance,
    x: Allocation,
    agents: list[int],
    labels: list[Optional[int]],
    stop_at_full: bool,
) -> Union[PICycle, tuple[list[int], list[Optional[int]], list[Optional[Bundle]]]]:
    """Extend a path by canonical champions until a cycle closes.

    agents[k+1] is the champion of agents[k] for the k-th consumed pool item
    (ascending item order); a champion already on the path closes a cycle and
    the closing segment is returned. With stop_at_full the walk instead stops
    once all n agents are on the path.
    """
    preferred: list[Optional[Bundle]] = [None] * len(labels)
    pool_items = iter(sorted(x.pool))
    while True:
        if stop_at_full and len(agents) == inst.n:
            return agents, labels, preferred
        g = next(pool_items, None)
        proof_check(g is not None, "champion walk ran out of unallocated items")
        tail = agents[-1]
        champ, champ_preferred = champion_of(inst, x, g, tail)
        if champ in agents:
            pos = agents.index(champ)
            steps = [(champ, g)]
            for t in range(len(agents) - 1, pos, -1):
                steps.append((agents[t], labels[t - 1]))
            return PICycle(tuple(steps))
        agents.append(champ)
        labels.append(g)
        preferred.append(champ_preferred)


def build_decomposition_path(
    inst: Instance, x: Allocation, a1: int
) -> Union[PICycle, DecompositionPath]:
    """Walk canonical champions from a1 until a cycle closes or n agents stand.

    Needs at least n-1 unallocated items. On a full path, each edge is turned
    into a decomposition of its target; an edge whose preferred set is {g} or
    the whole target signals a self champion and the corresponding one-step
    cycle is returned instead.
    """
    if len(x.pool) < inst.n - 1:
        raise PreconditionError("the walk needs at least n-1 unallocated items")
    result = _champion_walk(inst, x, [a1], [], stop_at_full=True)
    if isinstance(result, PICycle):
        return result
    agents, labels, preferred = result
    decompositions: Optional[list[Decomposition]] = []
    for k, g in enumerate(labels):
        target, champ, p = agents[k], agents[k + 1], preferred[k]
        whole = x.bundles[target].add(g)
        if p == Bundle.single(g):
            return PICycle(((champ, g),))
        if p == whole:
            return PICycle(((target, g),))
        if g not in p or decompositions is None:
            # champion envies the target; only possible when envy edges exist
            decompositions = None
            continue
        decompositions.append(
            Decomposition(champ, target, g, p, p.drop(g), whole - p)
        )
    return DecompositionPath(
        tuple(agents),
        tuple(labels),
        tuple(preferred),
        None if decompositions is None else tuple(decompositions),
    )


def improve_step_charity(inst: Instance, x: Allocation) -> tuple[Allocation, str]:
    """One potential-increasing step for an EFX x with at least n-1 pool items.

    With an envy edge (or a pool of at least n items) some champion walk
    closes a resolvable cycle. Otherwise the pool has exactly n-1 items and no
    envy exists: a full decomposition path is built from the least important
    agent a_1, who then takes her favorite bundle Z among the decomposition
    tops (each with its item) and the other agents' bundles; depending on
    which bundle Z is, the path is rotated directly or a_1's take creates an
    envy edge that a second walk resolves.
    """
    n = inst.n
    if len(x.pool) < n - 1:
        raise PreconditionError("improve step needs at least n-1 unallocated items")
    envy_pairs = sorted(
        (i, j)
        for i in range(n)
        for j in range(n)
        if i != j and envies(inst, x, i, x.bundles[j])
    )
    if envy_pairs:
        envier, envied = envy_pairs[0]
        cycle = _champion_walk(inst, x, [envied, envier], [None], stop_at_full=False)
        proof_check(isinstance(cycle, PICycle), "walk from an envy edge must close a cycle")
        result, label = resolve_pi_cycle(inst, x, cycle), "one-edge-envy"
    elif len(x.pool) >= n:
        cycle = _champion_walk(inst, x, [n - 1], [], stop_at_full=False)
        proof_check(isinstance(cycle, PICycle), "walk with n pool items must close a cycle")
        result, label = resolve_pi_cycle(inst, x, cycle), "one-edge-pool"
    else:
        # exactly n-1 pool items, no envy anywhere
        result, label = _improve_along_path(inst, x)
    proof_check(is_efx(inst, result), "every step must preserve EFX")
    proof_check(compare_lex(lex_vector(inst, result), lex_vector(inst, x)) is Order.GREATER,
                "every step must strictly increase the lexicographic potential")
    return result, label


def _improve_along_path(inst: Instance, x: Allocation) -> tuple[Allocation, str]:
    n = inst.n
    path = build_decomposition_path(inst, x, n - 1)
    if isinstance(path, PICycle):
        return resolve_pi_cycle(inst, x, path), "path-pi"
    proof_check(path.decompositions is not None,
                "every path edge must decompose when no envy edge exists")
    a1 = path.agents[0]
    # candidates: (bundle, 1-based path position, kind)
    candidates = [
        (dec.top.add(dec.item), k + 1, "top") for k, dec in enumerate(path.decompositions)
    ] + [
        (x.bundles[path.agents[i]], i + 1, "bundle") for i in range(1, n)
    ]
    best = candidates[0]
    for cand in candidates[1:]:
        if inst.prefers(a1, cand[0], best[0]):
            best = cand
    z, position, kind = best

    if kind == "top" and position == 1:
        # a_1 takes the top of her own decomposition; the displaced bottom
        # half re-fills the pool and a_2 now envies a_1, so a second walk
        # from that envy edge must close a resolvable cycle.
        x1 = reassigned(inst, x, {a1: z})
        a2 = path.agents[1]
        proof_check(envies(inst, x1, a2, x1.bundles[a1]),
                    "the displaced champion must envy a_1 after the take")
        proof_check(len(x1.pool) >= n - 1, "pool must keep at least n-1 items")
        proof_check(is_efx(inst, x1), "intermediate allocation must stay EFX")
        cycle = _champion_walk(inst, x1, [a1, a2], [None], stop_at_full=False)
        proof_check(isinstance(cycle, PICycle), "walk from the new envy edge must close a cycle")
        return resolve_pi_cycle(inst, x1, cycle), "case-2"

    # Z sits at position i >= 2: a_1 takes Z and every agent a_j with
    # 2 <= j <= i shifts to the top of her predecessor's decomposition.
    changes = {a1: z}
    for j in range(2, position + 1):
        dec = path.decompositions[j - 2]
        changes[path.agents[j - 1]] = dec.top.add(dec.item)
    return reassigned(inst, x, changes), "case-1"


def claim_from_pool(inst: Instance, x: Allocation) -> Allocation:
    """Hand the pool's canonical most envious agent her preferred set of it.

    Her old bundle returns to the pool; the result Pareto dominates x and
    stays EFX because nobody EFX-envies a most envious agent's minimum
    preferred set.
    """
    claimant = most_envious(inst, x, x.pool)
    if claimant is None:
        raise NoEnvyTowardPool("no agent envies the unallocated items")
    result = reassigned(inst, x, {claimant.canonical: claimant.preferred})
    proof_check(is_efx(inst, result), "a claimed preferred set must keep the allocation EFX")
    return result


def solve_charity(inst: Instance, trace: Optional[list] = None) -> Allocation:
    """EFX allocation with at most max(0, n-2) unallocated, un-envied items.

    Iterates improve steps while the pool holds at least n-1 items, then lets
    envious agents claim from the pool (which may re-grow it past n-2 and
    re-enter the improvement loop). Each step strictly increases the
    lexicographic potential, which is re-checked at runtime.
    """
    if inst.n == 1:
        result = make_allocation(inst, [inst.full_bundle()])
        if trace is not None:
            trace.append(("all-to-single-agent", lex_vector(inst, result)))
        return result
    x = empty_allocation(inst)
    previous = lex_vector(inst, x)
    if trace is not None:
        trace.append(("start", previous))
    while True:
        if len(x.pool) >= inst.n - 1:
            x, label = improve_step_charity(inst, x)
        elif any(envies(inst, x, i, x.pool) for i in range(inst.n)):
            x, label = claim_from_pool(inst, x), "claim-from-pool"
        else:
            break
        current = lex_vector(inst, x)
        proof_check(compare_lex(current, previous) is Order.GREATER,
                    "every step must strictly increase the lexicographic potential")
        proof_check(is_efx(inst, x), "every step must preserve EFX")
        previous = current
        if trace is not None:
            trace.append((label, current))
    proof_check(len(x.pool) <= max(0, inst.n - 2), "too many unallocated items")
    return x
