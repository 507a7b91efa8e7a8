"""Exact-arithmetic EFX allocation library.

Solvers for envy-freeness up to any item under general monotone valuations:
a charity solver leaving at most max(0, n-2) un-envied items unallocated, a
complete solver for instances where every agent holds one of two valuations,
and a complete solver for instances with at most n+3 items, plus brute-force
verification oracles and a command-line interface.
"""

from .core import (
    Additive,
    Allocation,
    AllocationError,
    Bundle,
    EMPTY,
    EfxError,
    FullTable,
    GuardExceeded,
    Instance,
    LengthMismatch,
    LexVector,
    NonMonotone,
    NotNormalized,
    Order,
    PLexminVector,
    PerturbedValue,
    PreconditionError,
    ProofCheckError,
    SparseClosure,
    TableTooLarge,
    ValidationError,
    check_allocation,
    compare_lex,
    compute_epsilon,
    empty_allocation,
    lex_vector,
    make_allocation,
    pcompare,
    plexmin_vector,
    reassigned,
    validate_instance,
    value,
)
from .envy import (
    ChampionGraph,
    Decomposition,
    MostEnvious,
    NotADecomposition,
    build_graph,
    champion_of,
    decompose,
    efx_envies,
    efx_witness,
    envies,
    fairness_witness,
    is_efx,
    min_preferred_set,
    most_envious,
)
from .cycles import InvalidCycle, PICycle, find_pi_cycle, resolve_pi_cycle
from .charity import (
    DecompositionPath,
    NoEnvyTowardPool,
    build_decomposition_path,
    claim_from_pool,
    improve_step_charity,
    solve_charity,
)
from .twoval import (
    EmptyGroup,
    Grouping,
    best_proper_subset,
    improve_step_twoval,
    infer_grouping,
    is_semi_efx,
    semi_to_efx,
    solve_twoval,
)
from .smallm import DiCycle, classify_one_agents, improve_step_smallm, solve_smallm
from .oracle import (
    CounterexampleReport,
    brute_min_preferred,
    counterexample_baseline,
    counterexample_instance,
    enumerate_complete_efx,
    verify_counterexample,
)

__version__ = "0.1.0"
