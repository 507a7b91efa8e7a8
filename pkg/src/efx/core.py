"""Exact-arithmetic model: instances, bundles, preference order, potentials.

Items are indexed 0..m-1 and a bundle is a bitmask over them, so every bundle
has a unique integer code (bit j set iff item j is present). All values are
exact rationals (`fractions.Fraction`); nothing in this package ever rounds.

Every agent's preference order is made strict by breaking value ties with the
bundle code. This is exactly the order obtained by adding ``eps * code`` to
each value for any sufficiently small ``eps > 0``. ``compute_epsilon`` returns
one such eps for export and testing; the comparisons themselves never
materialize it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence, Union

ZERO = Fraction(0)

#: Largest m for which full subset enumeration (tables, epsilon, preferred
#: sets) is allowed; 2**20 exact values is the practical ceiling.
SUBSET_ENUM_LIMIT = 20


class EfxError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(EfxError):
    """An instance or allocation violates a structural invariant."""


class NonMonotone(ValidationError):
    """Witness: v(S) > v(S + item j) for the given agent."""

    def __init__(self, agent: int, subset: "Bundle", item: int):
        self.agent = agent
        self.subset = subset
        self.item = item
        super().__init__(
            f"agent {agent}: value drops when item {item} is added to {subset}"
        )


class NotNormalized(ValidationError):
    def __init__(self, agent: int):
        self.agent = agent
        super().__init__(f"agent {agent}: value of the empty bundle is not 0")


class LengthMismatch(ValidationError):
    pass


class TableTooLarge(ValidationError):
    pass


class InvalidValuation(ValidationError):
    pass


class AllocationError(EfxError):
    """Bundles overlap or do not partition the item set."""


class GuardExceeded(EfxError):
    """An enumeration would exceed the configured size guard."""


class PreconditionError(EfxError):
    """A solver or operation was called outside its stated precondition."""


class ProofCheckError(EfxError):
    """A runtime check of a step the solvers rely on failed.

    The solvers re-verify every structural claim they depend on (existence of
    champions, decompositions, envy edges, potential increase). A failure on a
    valid instance is a bug, never a condition to ignore.
    """


def proof_check(condition: bool, message: str) -> None:
    if not condition:
        raise ProofCheckError(message)


def iter_bits(mask: int) -> Iterator[int]:
    """Yield the set bit positions of ``mask`` in ascending order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


class Order(enum.IntEnum):
    """Result of a three-way comparison.

    For bundle comparisons the middle value means "same set": the tie-broken
    order is strict, so two distinct bundles never compare equal. ``EQUAL`` is
    an alias used when comparing potential vectors.
    """

    LESS = -1
    SAME_SET = 0
    EQUAL = 0
    GREATER = 1


@dataclass(frozen=True, slots=True)
class Bundle:
    """An immutable set of item indices stored as a bitmask."""

    mask: int = 0

    @classmethod
    def of(cls, *items: int) -> "Bundle":
        return cls.from_members(items)

    @classmethod
    def from_members(cls, items: Iterable[int]) -> "Bundle":
        mask = 0
        for j in items:
            if j < 0:
                raise ValueError(f"negative item index {j}")
            mask |= 1 << j
        return cls(mask)

    @classmethod
    def single(cls, item: int) -> "Bundle":
        return cls(1 << item)

    @property
    def code(self) -> int:
        """Integer subset code: sum of 2**j over members j."""
        return self.mask

    @property
    def members(self) -> tuple[int, ...]:
        return tuple(iter_bits(self.mask))

    def add(self, item: int) -> "Bundle":
        return Bundle(self.mask | (1 << item))

    def drop(self, item: int) -> "Bundle":
        return Bundle(self.mask & ~(1 << item))

    def issubset(self, other: "Bundle") -> bool:
        return self.mask & ~other.mask == 0

    def isdisjoint(self, other: "Bundle") -> bool:
        return self.mask & other.mask == 0

    def __or__(self, other: "Bundle") -> "Bundle":
        return Bundle(self.mask | other.mask)

    def __and__(self, other: "Bundle") -> "Bundle":
        return Bundle(self.mask & other.mask)

    def __sub__(self, other: "Bundle") -> "Bundle":
        return Bundle(self.mask & ~other.mask)

    def __contains__(self, item: int) -> bool:
        return bool(self.mask >> item & 1)

    def __iter__(self) -> Iterator[int]:
        return iter_bits(self.mask)

    def __len__(self) -> int:
        return self.mask.bit_count()

    def __bool__(self) -> bool:
        return self.mask != 0

    def __repr__(self) -> str:
        return f"Bundle{{{','.join(map(str, self.members))}}}"


EMPTY = Bundle(0)


@dataclass(frozen=True, slots=True, order=True)
class PerturbedValue:
    """A (value, subset code) pair; ordering is lexicographic.

    Two distinct bundles always produce distinct perturbed values for any
    agent because their codes differ, which makes every induced preference
    order strict.
    """

    value: Fraction
    code: int


@dataclass(frozen=True)
class Additive:
    """Additive valuation: v(S) is the sum of per-item weights over S."""

    weights: tuple[Fraction, ...]
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    @property
    def num_items(self) -> int:
        return len(self.weights)

    def value_of(self, mask: int) -> Fraction:
        cached = self._cache.get(mask)
        if cached is None:
            cached = sum((self.weights[j] for j in iter_bits(mask)), ZERO)
            self._cache[mask] = cached
        return cached


@dataclass(frozen=True)
class FullTable:
    """Explicit valuation table indexed by subset code (length 2**m)."""

    values: tuple[Fraction, ...]

    @property
    def num_items(self) -> int:
        return len(self.values).bit_length() - 1

    def value_of(self, mask: int) -> Fraction:
        return self.values[mask]


@dataclass(frozen=True)
class SparseClosure:
    """Monotone valuation generated by a sparse list of (bundle, value) pairs.

    v(S) is the maximum value over generators whose bundle is contained in S,
    and 0 when no generator applies.
    """

    generators: tuple[tuple[Bundle, Fraction], ...]
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def value_of(self, mask: int) -> Fraction:
        cached = self._cache.get(mask)
        if cached is None:
            cached = ZERO
            for bundle, weight in self.generators:
                if bundle.mask & ~mask == 0 and weight > cached:
                    cached = weight
            self._cache[mask] = cached
        return cached


Valuation = Union[Additive, FullTable, SparseClosure]


@dataclass(frozen=True)
class Instance:
    """A fair-division instance: n agents, m items, one valuation per agent.

    Construct through :func:`validate_instance`, which checks that every
    valuation is normalized and monotone.
    """

    n: int
    m: int
    item_names: tuple[str, ...]
    valuations: tuple[Valuation, ...]

    def full_bundle(self) -> Bundle:
        return Bundle((1 << self.m) - 1)

    def check_agent(self, i: int) -> None:
        if not 0 <= i < self.n:
            raise IndexError(f"agent index {i} out of range (n={self.n})")

    def check_bundle(self, bundle: Bundle) -> None:
        if bundle.mask >> self.m:
            raise IndexError(f"{bundle} has items outside 0..{self.m - 1}")

    def value(self, i: int, bundle: Bundle) -> Fraction:
        """Exact value agent i assigns to the bundle."""
        self.check_agent(i)
        self.check_bundle(bundle)
        return self.valuations[i].value_of(bundle.mask)

    def perturbed(self, i: int, bundle: Bundle) -> PerturbedValue:
        return PerturbedValue(self.value(i, bundle), bundle.code)

    def pcompare(self, i: int, s: Bundle, t: Bundle) -> Order:
        """Strictly order bundles s and t for agent i.

        Orders by value first, then by subset code, so SAME_SET is returned
        only when s and t are the same set.
        """
        if s.mask == t.mask:
            return Order.SAME_SET
        vs = self.value(i, s)
        vt = self.value(i, t)
        if vs != vt:
            return Order.GREATER if vs > vt else Order.LESS
        return Order.GREATER if s.mask > t.mask else Order.LESS

    def prefers(self, i: int, s: Bundle, t: Bundle) -> bool:
        """True iff agent i strictly prefers s to t under the tie-broken order."""
        return self.pcompare(i, s, t) is Order.GREATER


def value(inst: Instance, i: int, bundle: Bundle) -> Fraction:
    return inst.value(i, bundle)


def pcompare(inst: Instance, i: int, s: Bundle, t: Bundle) -> Order:
    return inst.pcompare(i, s, t)


def validate_instance(
    item_names: Sequence[str], valuations: Sequence[Valuation]
) -> Instance:
    """Check all instance invariants and return the validated Instance.

    Rejections carry a witness: NonMonotone(agent, S, j) names the first pair
    with v(S) > v(S + j) in (subset code, item) order.
    """
    m = len(item_names)
    if len(set(item_names)) != m:
        raise ValidationError("duplicate item names")
    if not valuations:
        raise ValidationError("an instance needs at least one agent")
    for agent, valuation in enumerate(valuations):
        _validate_valuation(agent, valuation, m)
    return Instance(len(valuations), m, tuple(item_names), tuple(valuations))


def _validate_valuation(agent: int, valuation: Valuation, m: int) -> None:
    if isinstance(valuation, Additive):
        if len(valuation.weights) != m:
            raise LengthMismatch(f"agent {agent}: {len(valuation.weights)} weights for {m} items")
        for j, w in enumerate(valuation.weights):
            if w < 0:
                raise NonMonotone(agent, EMPTY, j)
    elif isinstance(valuation, FullTable):
        if m > SUBSET_ENUM_LIMIT:
            raise TableTooLarge(f"full tables are limited to m <= {SUBSET_ENUM_LIMIT}")
        if len(valuation.values) != 1 << m:
            raise LengthMismatch(f"agent {agent}: table has {len(valuation.values)} entries, expected {1 << m}")
        if valuation.values[0] != 0:
            raise NotNormalized(agent)
        for mask in range(1 << m):
            v = valuation.values[mask]
            for j in range(m):
                if not mask >> j & 1 and v > valuation.values[mask | 1 << j]:
                    raise NonMonotone(agent, Bundle(mask), j)
    elif isinstance(valuation, SparseClosure):
        for bundle, weight in valuation.generators:
            if bundle.mask >> m:
                raise LengthMismatch(f"agent {agent}: generator {bundle} exceeds {m} items")
            if weight < 0:
                raise InvalidValuation(f"agent {agent}: negative generator value")
            if not bundle and weight != 0:
                raise NotNormalized(agent)
    else:
        raise InvalidValuation(f"agent {agent}: unknown valuation type {type(valuation)!r}")


def compute_epsilon(inst: Instance) -> Fraction:
    """Return an eps > 0 with eps * 2**m strictly below every value gap.

    delta is the smallest nonzero difference |v_i(S) - v_i(T)| over all agents
    and subset pairs; the returned eps = delta / 2**(m+1) realizes the
    tie-broken order as an explicit perturbation. When every agent assigns one
    constant to all bundles, delta is undefined and eps = 1 by convention.
    """
    if inst.m > SUBSET_ENUM_LIMIT:
        raise GuardExceeded(f"epsilon enumeration is limited to m <= {SUBSET_ENUM_LIMIT}")
    delta = None
    seen: list[Valuation] = []
    for valuation in inst.valuations:
        if any(valuation is v for v in seen):
            continue
        seen.append(valuation)
        values = sorted(valuation.value_of(mask) for mask in range(1 << inst.m))
        for a, b in zip(values, values[1:]):
            if a != b:
                gap = b - a
                if delta is None or gap < delta:
                    delta = gap
    if delta is None:
        return Fraction(1)
    return delta / (1 << (inst.m + 1))


@dataclass(frozen=True, slots=True)
class Allocation:
    """n pairwise-disjoint bundles plus the pool of unallocated items.

    The bundles and the pool always partition the full item set; an
    allocation is complete when the pool is empty.
    """

    bundles: tuple[Bundle, ...]
    pool: Bundle

    @property
    def complete(self) -> bool:
        return not self.pool

    def allocated(self) -> Bundle:
        mask = 0
        for b in self.bundles:
            mask |= b.mask
        return Bundle(mask)


def empty_allocation(inst: Instance) -> Allocation:
    return Allocation((EMPTY,) * inst.n, inst.full_bundle())


def make_allocation(inst: Instance, bundles: Sequence[Bundle]) -> Allocation:
    """Build an allocation from bundles; the pool is the complement."""
    if len(bundles) != inst.n:
        raise AllocationError(f"{len(bundles)} bundles for {inst.n} agents")
    union = 0
    for i, b in enumerate(bundles):
        inst.check_bundle(b)
        if union & b.mask:
            raise AllocationError(f"bundle of agent {i} overlaps an earlier bundle")
        union |= b.mask
    return Allocation(tuple(bundles), inst.full_bundle() - Bundle(union))


def reassigned(inst: Instance, x: Allocation, changes: Mapping[int, Bundle]) -> Allocation:
    """Allocation with the given agents' bundles replaced; pool recomputed."""
    return make_allocation(
        inst, [changes.get(i, x.bundles[i]) for i in range(inst.n)]
    )


def check_allocation(inst: Instance, x: Allocation) -> None:
    """Raise AllocationError unless x satisfies every allocation invariant."""
    if len(x.bundles) != inst.n:
        raise AllocationError(f"{len(x.bundles)} bundles for {inst.n} agents")
    union = 0
    for i, b in enumerate(x.bundles):
        inst.check_bundle(b)
        if union & b.mask:
            raise AllocationError(f"bundle of agent {i} overlaps an earlier bundle")
        union |= b.mask
    if union & x.pool.mask:
        raise AllocationError("pool overlaps an allocated bundle")
    if Bundle(union) | x.pool != inst.full_bundle():
        raise AllocationError("bundles and pool do not cover the item set")


@dataclass(frozen=True, slots=True)
class LexVector:
    """Own-bundle perturbed values in fixed agent order (agent 0 first)."""

    entries: tuple[PerturbedValue, ...]


@dataclass(frozen=True, slots=True)
class PLexminVector:
    """Group-A own values sorted ascending, then group-B, concatenated."""

    entries: tuple[PerturbedValue, ...]


def lex_vector(inst: Instance, x: Allocation) -> LexVector:
    return LexVector(tuple(inst.perturbed(i, x.bundles[i]) for i in range(inst.n)))


def compare_lex(a, b) -> Order:
    """Lexicographic comparison of two potential vectors of equal length."""
    ea = a.entries if hasattr(a, "entries") else tuple(a)
    eb = b.entries if hasattr(b, "entries") else tuple(b)
    if len(ea) != len(eb):
        raise ValueError(f"vector length mismatch: {len(ea)} vs {len(eb)}")
    for va, vb in zip(ea, eb):
        if va != vb:
            return Order.GREATER if va > vb else Order.LESS
    return Order.EQUAL


def plexmin_vector(
    inst: Instance, x: Allocation, group_a: Sequence[int], group_b: Sequence[int]
) -> PLexminVector:
    """Partition-leximin potential for a two-group instance.

    Within each group all agents must hold the same valuation; the entries
    are each group's own-bundle perturbed values sorted ascending (strictly,
    by the tie-broken order), group A first.
    """
    if sorted([*group_a, *group_b]) != list(range(inst.n)):
        raise ValidationError("grouping must cover every agent exactly once")
    for group in (group_a, group_b):
        vals = {inst.valuations[i] for i in group}
        if len(vals) > 1:
            raise ValidationError("agents within a group must share one valuation")
    part_a = sorted(inst.perturbed(a, x.bundles[a]) for a in group_a)
    part_b = sorted(inst.perturbed(b, x.bundles[b]) for b in group_b)
    return PLexminVector(tuple(part_a) + tuple(part_b))


def two_agent_example() -> Instance:
    """Two agents, two items, additive weights (3,1) and (1,3)."""
    return validate_instance(
        ("g1", "g2"),
        (
            Additive((Fraction(3), Fraction(1))),
            Additive((Fraction(1), Fraction(3))),
        ),
    )


def three_agent_example() -> Instance:
    """Three agents, four items; agents 0 and 1 share one additive valuation."""
    shared = Additive((Fraction(5), Fraction(3), Fraction(1), Fraction(1)))
    other = Additive((Fraction(1), Fraction(1), Fraction(3), Fraction(5)))
    return validate_instance(("g1", "g2", "g3", "g4"), (shared, shared, other))
