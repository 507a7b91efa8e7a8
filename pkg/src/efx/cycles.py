"""Pareto-improvable cycles: detection and resolution.

A cycle in the champion graph whose non-empty item labels are pairwise
distinct can be resolved into an allocation that Pareto dominates the current
one: every agent on the cycle receives her minimum preferred set of the next
agent's bundle (plus the label item, if any), everyone else keeps her bundle,
and displaced items return to the pool. For an EFX input the result is EFX
again, because in an EFX allocation the only preferred subset of another
agent's bundle is the whole bundle, and champion preferred sets are exactly
the sets nobody EFX-envies.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .core import (
    Allocation,
    Bundle,
    EfxError,
    Instance,
    proof_check,
    reassigned,
)
from .envy import ChampionGraph, envies, min_preferred_set, most_envious


class InvalidCycle(EfxError):
    """A step of the cycle is not an edge of the current champion graph."""


@dataclass(frozen=True)
class PICycle:
    """A cycle as (agent, label) steps; label None marks an envy edge.

    Step k is an edge from its agent to the next step's agent (wrapping
    around), labeled with a pool item for champion edges. Agents are pairwise
    distinct and so are the non-None labels.
    """

    steps: tuple[tuple[int, Optional[int]], ...]

    def __post_init__(self):
        if not self.steps:
            raise ValueError("a cycle needs at least one step")
        agents = [a for a, _ in self.steps]
        if len(set(agents)) != len(agents):
            raise ValueError("cycle agents must be pairwise distinct")
        labels = [g for _, g in self.steps if g is not None]
        if len(set(labels)) != len(labels):
            raise ValueError("cycle labels must be pairwise distinct")

    @property
    def agents(self) -> tuple[int, ...]:
        return tuple(a for a, _ in self.steps)

    @property
    def labels(self) -> tuple[Optional[int], ...]:
        return tuple(g for _, g in self.steps)


def find_pi_cycle(graph: ChampionGraph, anchor: Optional[int] = None) -> Optional[PICycle]:
    """Exhaustive backtracking search for a cycle with distinct labels.

    Deterministic: start agents ascending (only the anchor when given, so the
    returned cycle passes through it), and from each agent the edges are tried
    by target ascending, envy edge before champion edges, labels ascending.
    """
    out: dict[int, list[tuple[int, Optional[int]]]] = {u: [] for u in range(graph.n)}
    for i, j in graph.envy_edges:
        out[i].append((j, None))
    for i, j, g in graph.champion_edges:
        out[i].append((j, g))
    for u in out:
        out[u].sort(key=lambda e: (e[0], 0 if e[1] is None else 1 + e[1]))

    def search(u: int, start: int, visited: set[int], used: set[int],
               steps: list[tuple[int, Optional[int]]]) -> Optional[tuple]:
        for w, g in out[u]:
            if g is not None and g in used:
                continue
            if w == start:
                return tuple(steps + [(u, g)])
            if w in visited:
                continue
            visited.add(w)
            if g is not None:
                used.add(g)
            found = search(w, start, visited, used, steps + [(u, g)])
            if found:
                return found
            visited.remove(w)
            if g is not None:
                used.remove(g)
        return None

    starts = range(graph.n) if anchor is None else (anchor,)
    for start in starts:
        found = search(start, start, {start}, set(), [])
        if found:
            return PICycle(found)
    return None


def resolve_pi_cycle(inst: Instance, x: Allocation, cycle: PICycle) -> Allocation:
    """Resolve a cycle into an allocation Pareto dominating x.

    Each cycle agent receives her minimum preferred set of the successor's
    bundle united with the step label; every edge is re-validated against x
    and InvalidCycle is raised if one is missing.
    """
    steps = cycle.steps
    changes: dict[int, Bundle] = {}
    for idx, (agent, label) in enumerate(steps):
        successor = steps[(idx + 1) % len(steps)][0]
        if label is None:
            if not envies(inst, x, agent, x.bundles[successor]):
                raise InvalidCycle(f"agent {agent} does not envy agent {successor}")
            target = x.bundles[successor]
        else:
            if label not in x.pool:
                raise InvalidCycle(f"label item {label} is not unallocated")
            target = x.bundles[successor].add(label)
            envier = most_envious(inst, x, target)
            if envier is None or agent not in envier.agents:
                raise InvalidCycle(
                    f"agent {agent} is not a most envious agent for bundle of {successor} plus {label}"
                )
        preferred = min_preferred_set(inst, x, agent, target)
        proof_check(preferred is not None, "validated cycle edge must yield a preferred set")
        changes[agent] = preferred
    result = reassigned(inst, x, changes)
    for agent, _ in steps:
        proof_check(
            inst.prefers(agent, result.bundles[agent], x.bundles[agent]),
            "every cycle agent must be strictly better off",
        )
    return result
