"""Envy and EFX-envy predicates, minimum preferred sets, champions, graphs.

All comparisons go through the tie-broken strict order of :mod:`efx.core`,
so "envies" below always means a strict preference and no two distinct
bundles ever tie.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterator, Optional

from .core import (
    SUBSET_ENUM_LIMIT,
    Allocation,
    Bundle,
    EfxError,
    GuardExceeded,
    Instance,
    Order,
    PreconditionError,
    proof_check,
)


class NotADecomposition(EfxError):
    """The champion's preferred set does not split the target bundle.

    Raised when P = {g}, g not in P, or P = X_j + g; the first and last cases
    mean the champion or the target is a self champion for g, which the caller
    resolves as a cycle instead.
    """

    def __init__(self, message: str, preferred: Bundle):
        super().__init__(message)
        self.preferred = preferred


def envies(inst: Instance, x: Allocation, i: int, s: Bundle) -> bool:
    """True iff agent i strictly prefers s to her own bundle."""
    return inst.pcompare(i, x.bundles[i], s) is Order.LESS


def efx_envies(inst: Instance, x: Allocation, i: int, s: Bundle) -> bool:
    """True iff agent i envies s after removing some single item from s."""
    return any(envies(inst, x, i, s.drop(h)) for h in s)


def efx_witness(inst: Instance, x: Allocation) -> Optional[tuple[int, int, int]]:
    """First (i, j, h) with X_i < X_j - h, scanning i, j, h ascending."""
    for i in range(inst.n):
        own = x.bundles[i]
        for j in range(inst.n):
            if i == j:
                continue
            for h in x.bundles[j]:
                if inst.pcompare(i, own, x.bundles[j].drop(h)) is Order.LESS:
                    return (i, j, h)
    return None


def is_efx(inst: Instance, x: Allocation) -> bool:
    """True iff no agent EFX-envies another."""
    return efx_witness(inst, x) is None


def fairness_witness(
    inst: Instance, x: Allocation, level: str = "efx", perturbed: bool = True
) -> Optional[tuple[int, int, Optional[int]]]:
    """First violation of the requested fairness level, or None.

    level is one of "efx", "ef1", "envy-free". With perturbed=False the raw
    values are compared instead of the tie-broken order (strictly weaker for
    efx/envy-free, so a perturbed pass implies a raw pass).
    """

    def worse(own: Bundle, other: Bundle, agent: int) -> bool:
        if perturbed:
            return inst.pcompare(agent, own, other) is Order.LESS
        return inst.value(agent, own) < inst.value(agent, other)

    for i in range(inst.n):
        own = x.bundles[i]
        for j in range(inst.n):
            if i == j:
                continue
            other = x.bundles[j]
            if level == "envy-free":
                if worse(own, other, i):
                    return (i, j, None)
            elif level == "efx":
                for h in other:
                    if worse(own, other.drop(h), i):
                        return (i, j, h)
            elif level == "ef1":
                if other and all(worse(own, other.drop(h), i) for h in other):
                    return (i, j, None)
            else:
                raise ValueError(f"unknown fairness level {level!r}")
    return None


def _subsets_ascending(s: Bundle) -> Iterator[Bundle]:
    # Nonempty subsets of s: cardinality ascending, code ascending within
    # each cardinality. This fixes the tie-break for preferred sets.
    members = s.members
    for k in range(1, len(members) + 1):
        level = sorted(
            sum(1 << j for j in combo) for combo in combinations(members, k)
        )
        for mask in level:
            yield Bundle(mask)


def min_preferred_set(inst: Instance, x: Allocation, i: int, s: Bundle) -> Optional[Bundle]:
    """Smallest subset of s that agent i strictly prefers to her own bundle.

    Returns None when i does not prefer s itself (then no subset qualifies
    either, by monotonicity plus the code tie-break). Ties among minimum
    cardinality candidates go to the smallest subset code.
    """
    if len(s) > SUBSET_ENUM_LIMIT:
        raise GuardExceeded(f"preferred-set search is limited to |S| <= {SUBSET_ENUM_LIMIT}")
    own = x.bundles[i]
    if not inst.prefers(i, s, own):
        return None
    for candidate in _subsets_ascending(s):
        if inst.prefers(i, candidate, own):
            return candidate
    raise AssertionError("s was preferred but no subset was")  # pragma: no cover


@dataclass(frozen=True)
class MostEnvious:
    """Agents minimizing the size of a preferred subset of the queried set.

    kappa is that minimum size, canonical the lowest-index minimizer, and
    preferred the canonical agent's minimum preferred set.
    """

    agents: tuple[int, ...]
    kappa: int
    canonical: int
    preferred: Bundle


def most_envious(inst: Instance, x: Allocation, s: Bundle) -> Optional[MostEnvious]:
    """The set of most envious agents for s, or None when nobody envies s."""
    if len(s) > SUBSET_ENUM_LIMIT:
        raise GuardExceeded(f"preferred-set search is limited to |S| <= {SUBSET_ENUM_LIMIT}")
    candidates = [i for i in range(inst.n) if inst.prefers(i, s, x.bundles[i])]
    if not candidates:
        return None
    members = s.members
    for k in range(1, len(members) + 1):
        level = sorted(
            sum(1 << j for j in combo) for combo in combinations(members, k)
        )
        hits: dict[int, Bundle] = {}
        for mask in level:
            bundle = Bundle(mask)
            for i in candidates:
                if i not in hits and inst.prefers(i, bundle, x.bundles[i]):
                    hits[i] = bundle
        if hits:
            agents = tuple(sorted(hits))
            canonical = agents[0]
            return MostEnvious(agents, k, canonical, hits[canonical])
    raise AssertionError("an envier of s must prefer some subset")  # pragma: no cover


def champion_of(inst: Instance, x: Allocation, g: int, j: int) -> tuple[int, Bundle]:
    """Canonical most envious agent for X_j + g, with its preferred set.

    Never absent: agent j herself strictly prefers X_j + g to X_j because the
    subset code grows, so the envier set is nonempty.
    """
    if g not in x.pool:
        raise PreconditionError(f"item {g} is not unallocated")
    result = most_envious(inst, x, x.bundles[j].add(g))
    proof_check(result is not None, "a champion must exist for every agent and pool item")
    return result.canonical, result.preferred


@dataclass(frozen=True)
class Decomposition:
    """Split of a target bundle induced by a champion's preferred set.

    P is the champion's minimum preferred set for X_target + item, with
    {item} strictly inside P strictly inside X_target + item; top = P - item
    and bottom = (X_target + item) - P partition X_target, both nonempty.
    """

    champion: int
    target: int
    item: int
    preferred: Bundle
    top: Bundle
    bottom: Bundle


def decompose(
    inst: Instance, x: Allocation, g: int, j: int, champion: Optional[int] = None
) -> Decomposition:
    """Decompose X_j by the champion's preferred set for X_j + g.

    The champion defaults to the canonical one; passing an explicit agent is
    allowed when the caller has established that agent is also most envious.
    Raises NotADecomposition when the sandwich {g} < P < X_j + g fails, which
    signals a self-champion situation the caller must resolve as a cycle.
    """
    if champion is None:
        champion, preferred = champion_of(inst, x, g, j)
    else:
        if g not in x.pool:
            raise PreconditionError(f"item {g} is not unallocated")
        preferred = min_preferred_set(inst, x, champion, x.bundles[j].add(g))
        proof_check(preferred is not None, "explicit champion does not envy the target set")
    whole = x.bundles[j].add(g)
    if g not in preferred:
        raise NotADecomposition(f"item {g} missing from the preferred set", preferred)
    if preferred == Bundle.single(g):
        raise NotADecomposition(f"preferred set is exactly {{{g}}}", preferred)
    if preferred == whole:
        raise NotADecomposition("preferred set is the whole target bundle", preferred)
    top = preferred.drop(g)
    bottom = whole - preferred
    proof_check(bool(top) and bool(bottom), "decomposition halves must be nonempty")
    proof_check((top | bottom) == x.bundles[j] and top.isdisjoint(bottom),
                "decomposition halves must partition the target bundle")
    return Decomposition(champion, j, g, preferred, top, bottom)


@dataclass(frozen=True)
class ChampionGraph:
    """Labeled directed multigraph over agents.

    envy_edges holds (i, j) whenever i envies j. champion_edges holds
    (i, j, g) for every pool item g, every agent j, and every most envious
    agent i for X_j + g (all of them, not only the canonical one).
    """

    n: int
    envy_edges: frozenset[tuple[int, int]]
    champion_edges: frozenset[tuple[int, int, int]]


def build_graph(inst: Instance, x: Allocation) -> ChampionGraph:
    envy_edges = frozenset(
        (i, j)
        for i in range(inst.n)
        for j in range(inst.n)
        if i != j and envies(inst, x, i, x.bundles[j])
    )
    champion_edges = set()
    for g in x.pool:
        for j in range(inst.n):
            result = most_envious(inst, x, x.bundles[j].add(g))
            proof_check(result is not None, "every agent has a champion for every pool item")
            for i in result.agents:
                champion_edges.add((i, j, g))
    return ChampionGraph(inst.n, envy_edges, frozenset(champion_edges))
