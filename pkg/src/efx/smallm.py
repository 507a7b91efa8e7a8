"""Complete EFX solver for instances with at most n+3 items.

When no Pareto-improvable cycle exists, the allocation is forced into a rigid
shape: every agent holds something, exactly two agents hold two items, the
rest hold one, and exactly one item is unallocated. The chosen in-edges
(envy edges into one-item holders, champion edges into the two-item holders)
close a directed cycle with at most two champion edges, and the four case
rotations below turn it into a strictly lexicographically larger EFX
allocation. Every structural fact the cases rely on is re-checked at runtime.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .core import (
    Allocation,
    Bundle,
    Instance,
    Order,
    PreconditionError,
    compare_lex,
    empty_allocation,
    lex_vector,
    proof_check,
    reassigned,
)
from .cycles import PICycle, find_pi_cycle, resolve_pi_cycle
from .envy import build_graph, champion_of, decompose, envies, is_efx


@dataclass(frozen=True)
class DiCycle:
    """Directed cycle over agents with per-edge labels (None marks envy).

    labels[k] belongs to the edge from agents[k] to agents[(k+1) % len].
    """

    agents: tuple[int, ...]
    labels: tuple[Optional[int], ...]

    def index(self, agent: int) -> int:
        return self.agents.index(agent)

    def succ(self, agent: int) -> int:
        return self.agents[(self.index(agent) + 1) % len(self.agents)]

    def pred(self, agent: int) -> int:
        return self.agents[(self.index(agent) - 1) % len(self.agents)]

    def in_label(self, agent: int) -> Optional[int]:
        return self.labels[(self.index(agent) - 1) % len(self.agents)]

    def arc(self, start: int, stop: int) -> tuple[int, ...]:
        """Vertices along the unique forward path from start to stop, inclusive."""
        vertices = [start]
        current = start
        while current != stop:
            current = self.succ(current)
            vertices.append(current)
        return tuple(vertices)


def classify_one_agents(inst: Instance, x: Allocation) -> tuple[list[int], list[int]]:
    """Partition agents by bundle size 1 versus larger, re-checking the shape.

    Callable only when no Pareto-improvable cycle exists in the partial
    allocation and m <= n+3; then exactly two agents hold two items each,
    exactly one item is unallocated, every one-item holder is envied, and no
    two-item holder is envied. Any violation means the caller missed a cycle.
    """
    proof_check(all(x.bundles[i] for i in range(inst.n)),
                "an empty bundle forces a self champion, hence a cycle")
    one_agents = [i for i in range(inst.n) if len(x.bundles[i]) == 1]
    non_one_agents = [i for i in range(inst.n) if len(x.bundles[i]) >= 2]
    proof_check(len(non_one_agents) == 2, "exactly two agents must hold more than one item")
    proof_check(all(len(x.bundles[i]) == 2 for i in non_one_agents),
                "the two larger bundles must hold exactly two items")
    proof_check(len(x.pool) == 1, "exactly one item must be unallocated")
    envied = {j for j in range(inst.n)
              if any(i != j and envies(inst, x, i, x.bundles[j]) for i in range(inst.n))}
    proof_check(all(i in envied for i in one_agents), "every one-item holder must be envied")
    proof_check(all(i not in envied for i in non_one_agents),
                "no two-item holder may be envied")
    return one_agents, non_one_agents


def _walk_cycle(inst: Instance, x: Allocation, one_agents: list[int], g: int) -> DiCycle:
    # In-edge per agent: lowest-index envier for one-item holders, canonical
    # champion for the two-item holders; walking in-edges backward from agent
    # 0 must repeat a vertex, and the repeated segment is the cycle.
    one_set = set(one_agents)
    in_edge: dict[int, tuple[int, Optional[int]]] = {}
    for v in range(inst.n):
        if v in one_set:
            enviers = [u for u in range(inst.n) if u != v and envies(inst, x, u, x.bundles[v])]
            proof_check(bool(enviers), "every one-item holder must have an envier")
            in_edge[v] = (min(enviers), None)
        else:
            champ, _ = champion_of(inst, x, g, v)
            in_edge[v] = (champ, g)
    sequence = [0]
    position = {0: 0}
    while True:
        source = in_edge[sequence[-1]][0]
        if source in position:
            backward = sequence[position[source]:]
            agents = tuple(reversed(backward))
            labels = tuple(in_edge[agents[(k + 1) % len(agents)]][1]
                           for k in range(len(agents)))
            return DiCycle(agents, labels)
        position[source] = len(sequence)
        sequence.append(source)


def improve_step_smallm(inst: Instance, x: Allocation) -> tuple[Allocation, str]:
    """One lexicographic-potential-increasing EFX step for a partial EFX x."""
    if inst.m > inst.n + 3:
        raise PreconditionError("this solver handles at most n+3 items")
    if not x.pool:
        raise PreconditionError("improve step needs at least one unallocated item")
    graph = build_graph(inst, x)
    cycle = find_pi_cycle(graph)
    if cycle is not None:
        return resolve_pi_cycle(inst, x, cycle), "pi"

    one_agents, non_one_agents = classify_one_agents(inst, x)
    g = x.pool.members[0]
    dicycle = _walk_cycle(inst, x, one_agents, g)
    champion_count = sum(1 for label in dicycle.labels if label is not None)
    proof_check(champion_count <= 2, "the walk cycle has at most two champion edges")
    if champion_count <= 1:
        # labels are trivially distinct, so the walk cycle resolves directly
        steps = tuple(zip(dicycle.agents, dicycle.labels))
        return resolve_pi_cycle(inst, x, PICycle(steps)), "walk-cycle"

    endpoints = set()
    for k, label in enumerate(dicycle.labels):
        if label is not None:
            endpoints.add(dicycle.agents[k])
            endpoints.add(dicycle.agents[(k + 1) % len(dicycle.agents)])
    i = max(endpoints)

    if dicycle.in_label(i) is None:
        # Case 1: i is a one-item holder that champions her successor.
        proof_check(i in set(one_agents), "an envied champion endpoint holds one item")
        s = dicycle.succ(i)
        proof_check(s in set(non_one_agents), "i's successor must hold two items")
        j = next(a for a in non_one_agents if a != s)
        dec_s = decompose(inst, x, g, s)
        proof_check(dec_s.champion == i, "i must be the canonical champion of her successor")
        dec_j = decompose(inst, x, g, j)
        proof_check(dec_j.champion == dicycle.pred(j),
                    "j's cycle predecessor must be her canonical champion")
        top_j = dec_j.top.add(g)
        if inst.prefers(i, top_j, x.bundles[s]):
            # Case 1-1: i takes the decomposition top of j; the arc from j up
            # to i's predecessor shifts forward by one bundle.
            changes: dict[int, Bundle] = {i: top_j}
            for k in dicycle.arc(j, dicycle.pred(i)):
                changes[k] = x.bundles[dicycle.succ(k)]
            result = reassigned(inst, x, changes)
            label = "case-1-1"
        else:
            # Case 1-2: everyone on the cycle shifts forward except j's
            # predecessor, who takes the decomposition top of j.
            pj = dicycle.pred(j)
            changes = {pj: top_j}
            for k in dicycle.agents:
                if k != pj:
                    changes[k] = x.bundles[dicycle.succ(k)]
            result = reassigned(inst, x, changes)
            label = "case-1-2"
    else:
        # Case 2: i is a two-item holder championed by her predecessor.
        proof_check(i in set(non_one_agents), "a championed endpoint holds two items")
        j = next(a for a in non_one_agents if a != i)
        dec_i = decompose(inst, x, g, i)
        proof_check(dec_i.champion == dicycle.pred(i),
                    "i's cycle predecessor must be her canonical champion")
        dec_j = decompose(inst, x, g, j)
        proof_check(dec_j.champion == dicycle.pred(j),
                    "j's cycle predecessor must be her canonical champion")
        top_i = dec_i.top.add(g)
        if inst.prefers(i, top_i, x.bundles[j]):
            # Case 2-1: i keeps her top half plus g; the freed bottom item
            # lets an anchored search close a cycle through j.
            x1 = reassigned(inst, x, {i: top_i})
            proof_check(is_efx(inst, x1), "the intermediate allocation must be EFX")
            proof_check(envies(inst, x1, dicycle.pred(i), x1.bundles[i]),
                        "i's old champion must envy her new bundle")
            graph1 = build_graph(inst, x1)
            anchored = find_pi_cycle(graph1, anchor=j)
            proof_check(anchored is not None, "a cycle through j must exist after the take")
            result = resolve_pi_cycle(inst, x1, anchored)
            label = "case-2-1"
        else:
            # Case 2-2: i takes j's whole bundle, her predecessor takes her
            # top half plus g, and the arc from j shifts forward.
            pi_ = dicycle.pred(i)
            changes = {i: x.bundles[j], pi_: top_i}
            for k in dicycle.arc(j, pi_):
                if k != pi_:
                    changes[k] = x.bundles[dicycle.succ(k)]
            result = reassigned(inst, x, changes)
            label = "case-2-2"

    proof_check(is_efx(inst, result), "every step must preserve EFX")
    proof_check(compare_lex(lex_vector(inst, result), lex_vector(inst, x)) is Order.GREATER,
                "every step must strictly increase the lexicographic potential")
    return result, label


def solve_smallm(inst: Instance, trace: Optional[list] = None) -> Allocation:
    """Complete EFX allocation for m <= n+3, from the empty allocation."""
    if inst.m > inst.n + 3:
        raise PreconditionError(f"m={inst.m} exceeds n+3={inst.n + 3}")
    x = empty_allocation(inst)
    previous = lex_vector(inst, x)
    if trace is not None:
        trace.append(("start", previous))
    while x.pool:
        x, label = improve_step_smallm(inst, x)
        current = lex_vector(inst, x)
        proof_check(compare_lex(current, previous) is Order.GREATER,
                    "every step must strictly increase the lexicographic potential")
        previous = current
        if trace is not None:
            trace.append((label, current))
    proof_check(is_efx(inst, x), "the final allocation must be EFX")
    return x
