"""Swarm and differential-evolution detectors, plus linear-seeded hybrids.

Both heuristics minimize the real-domain residual fitness over a box
search space. The swarm keeps positions/velocities column-stacked in
(dim, n_pop) matrices; velocity updates are

    V <- w V + c1 U1 o (M_pb - P) + c2 U2 o (M_gb - P),    P <- P + V,

with U1, U2 uniform [0, 1] matrices, velocities clamped entrywise to
[-v_max, v_max], and inertia decaying by a factor 0.99 per iteration.
Positions are intentionally not clamped to the box; the fitness penalizes
far excursions on its own.

Differential evolution uses the rand/1/bin strategy: mutants
iota_r1 + F_mut (iota_r2 - iota_r3) with distinct random indices, binomial
crossover with one forced dimension, and greedy selection on strict
fitness improvement. Both the current individuals and the trial vectors
are evaluated every generation (2 n_ind evaluations), which is the
accounting the complexity model charges.

Hybrid detectors seed the initial population around a linear detector's
soft estimate: one member is the unperturbed estimate itself, the rest add
unit Gaussian perturbations, so the hybrid can never end with worse
fitness than its seed.

All state arrays accept an optional leading batch axis; the Monte Carlo
engine batches every subcarrier of an OFDM frame through one state.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .detectors import apply_equalizer, mf_equalizer, mmse_equalizer
from .linalg import SingularMatrixError
from .ofdm import Constellation
from .realdomain import RealSystem, complexify, fitness, fitness_columns, realify_vec
from .rng import RngStream

log = logging.getLogger(__name__)

INERTIA_DECAY = 0.99

INIT_UNIFORM = "uniform-random"
INIT_SEEDED = "seeded-member"
INIT_GAUSSIAN = "gaussian-perturbed"

HYBRID_KINDS = ("pso-mf", "pso-mmse", "de-mf", "de-mmse")


@dataclass(frozen=True)
class PsoParams:
    c1: float
    c2: float
    w0: float
    n_pop: int = 40
    n_iter: int = 50
    v_max: float = 2.0
    search_lo: float = -1.0
    search_hi: float = 1.0

    def __post_init__(self):
        if self.c1 < 0 or self.c2 < 0:
            raise ValueError("c1 and c2 must be >= 0")
        if self.n_pop < 2:
            raise ValueError("n_pop must be >= 2")
        if self.n_iter < 0:
            raise ValueError("n_iter must be >= 0")
        if not self.v_max > 0:
            raise ValueError("v_max must be positive")
        if not self.search_lo < self.search_hi:
            raise ValueError("search_lo must be below search_hi")


@dataclass(frozen=True)
class DeParams:
    f_mut: float
    f_cr: float
    n_ind: int = 40
    n_gen: int = 50
    search_lo: float = -1.0
    search_hi: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.f_mut <= 2.0:
            raise ValueError("f_mut must be in [0, 2]")
        if not 0.0 <= self.f_cr <= 1.0:
            raise ValueError("f_cr must be in [0, 1]")
        if self.n_ind < 4:
            raise ValueError("n_ind must be >= 4 (mutation draws three distinct partners)")
        if self.n_gen < 0:
            raise ValueError("n_gen must be >= 0")


@dataclass(frozen=True)
class InitStrategy:
    """How the initial swarm/population is placed.

    uniform-random draws every member from U[lo, hi]. seeded-member plants
    seed_vector as one member among uniform draws. gaussian-perturbed adds
    N(0, perturb_sigma^2) per dimension to the seed for every member;
    include_seed_member additionally keeps member 0 unperturbed, which is
    how the hybrid detectors guarantee the linear answer is never lost.
    """

    kind: str
    seed_vector: np.ndarray | None = None
    perturb_sigma: float = 1.0
    include_seed_member: bool = False

    def __post_init__(self):
        if self.kind not in (INIT_UNIFORM, INIT_SEEDED, INIT_GAUSSIAN):
            raise ValueError(f"unknown init strategy {self.kind!r}")
        if self.kind != INIT_UNIFORM and self.seed_vector is None:
            raise ValueError(f"{self.kind} requires a seed_vector")


@dataclass
class SwarmState:
    positions: np.ndarray      # (..., dim, n_pop)
    velocities: np.ndarray     # (..., dim, n_pop)
    personal_best: np.ndarray  # (..., dim, n_pop)
    pb_fitness: np.ndarray     # (..., n_pop)
    p_gb: np.ndarray           # (..., dim)
    gb_fitness: np.ndarray | float
    w: float
    w0: float
    iteration: int = 0


@dataclass
class PopulationState:
    individuals: np.ndarray    # (..., dim, n_ind)
    fitness_cache: np.ndarray  # (..., n_ind)
    generation: int = 0


@dataclass
class HeuristicRun:
    """Outcome of one batched heuristic detection."""

    symbols: np.ndarray                     # (..., n_tx) hard complex decisions
    trace: np.ndarray                       # (..., n_steps + 1) best fitness per step
    checkpoint_symbols: dict = field(default_factory=dict)
    used_fallback: bool = False


def hard_decision(position, constellation: Constellation) -> np.ndarray:
    """Snap each real dimension to the nearest per-axis level, then complexify."""
    levels = constellation.axis_levels
    mids = (levels[1:] + levels[:-1]) / 2.0
    idx = np.searchsorted(mids, np.asarray(position))
    return complexify(levels[idx])


def initial_positions(rng: RngStream, n_dim: int, n_members: int,
                      strategy: InitStrategy, lo: float, hi: float,
                      batch_shape: tuple = ()) -> np.ndarray:
    shape = batch_shape + (n_dim, n_members)
    if strategy.kind == INIT_UNIFORM:
        return rng.uniform(lo, hi, shape)
    seed = np.asarray(strategy.seed_vector, dtype=float)
    if seed.shape[-1] != n_dim:
        raise ValueError(f"seed vector dimension {seed.shape[-1]} != {n_dim}")
    if strategy.kind == INIT_SEEDED:
        pos = rng.uniform(lo, hi, shape)
        pos[..., 0] = seed
        return pos
    pos = seed[..., None] + strategy.perturb_sigma * rng.standard_normal(shape)
    if strategy.include_seed_member:
        pos[..., 0] = seed
    return pos


def _best_member(members: np.ndarray, fits: np.ndarray):
    """Lowest-fitness column per batch entry (first index wins ties)."""
    idx = np.argmin(fits, axis=-1)
    best = np.take_along_axis(members, idx[..., None, None], axis=-1)[..., 0]
    best_fit = np.take_along_axis(fits, idx[..., None], axis=-1)[..., 0]
    if best_fit.ndim == 0:
        return best, float(best_fit)
    return best, best_fit


# ---------------------------------------------------------------------------
# PSO
# ---------------------------------------------------------------------------

def init_swarm(rng: RngStream, params: PsoParams, strategy: InitStrategy,
               sys: RealSystem, counter=None) -> SwarmState:
    batch_shape = sys.h.shape[:-2]
    pos = initial_positions(rng, sys.dim, params.n_pop, strategy,
                            params.search_lo, params.search_hi, batch_shape)
    fit = fitness_columns(sys, pos, counter)
    p_gb, gb_fit = _best_member(pos, fit)
    return SwarmState(
        positions=pos,
        velocities=np.zeros_like(pos),
        personal_best=pos.copy(),
        pb_fitness=fit,
        p_gb=p_gb,
        gb_fitness=gb_fit,
        w=params.w0,
        w0=params.w0,
    )


def pso_iterate(rng: RngStream, state: SwarmState, params: PsoParams,
                sys: RealSystem, counter=None, uniforms=None) -> SwarmState:
    """Advance the swarm one iteration in place.

    `uniforms` is a test hook overriding the U1, U2 draws; leave it None in
    real runs so both matrices come from the stream.
    """
    shape = state.positions.shape
    if uniforms is None:
        u1 = rng.uniform(size=shape)
        u2 = rng.uniform(size=shape)
    else:
        u1, u2 = (np.broadcast_to(u, shape) for u in uniforms)
    pull_pb = state.personal_best - state.positions
    pull_gb = state.p_gb[..., None] - state.positions
    vel = state.w * state.velocities + params.c1 * u1 * pull_pb + params.c2 * u2 * pull_gb
    np.clip(vel, -params.v_max, params.v_max, out=vel)
    state.velocities = vel
    state.positions = state.positions + vel
    if counter is not None:
        # 9 flops per dimension for the velocity update, 1 for the position.
        counter.add(10 * vel.size)
    fit = fitness_columns(sys, state.positions, counter)
    improved = fit < state.pb_fitness
    state.personal_best = np.where(improved[..., None, :], state.positions, state.personal_best)
    state.pb_fitness = np.where(improved, fit, state.pb_fitness)
    state.p_gb, state.gb_fitness = _best_member(state.personal_best, state.pb_fitness)
    state.iteration += 1
    state.w = state.w0 * INERTIA_DECAY ** state.iteration
    return state


def run_swarm(rng: RngStream, sys: RealSystem, params: PsoParams,
              strategy: InitStrategy, constellation: Constellation,
              checkpoints=(), counter=None) -> HeuristicRun:
    """Full PSO detection; optionally record hard decisions at checkpoints."""
    state = init_swarm(rng, params, strategy, sys, counter)
    trace = [np.asarray(state.gb_fitness)]
    marks = {}
    wanted = set(checkpoints)
    if 0 in wanted:
        marks[0] = hard_decision(state.p_gb, constellation)
    for it in range(1, params.n_iter + 1):
        pso_iterate(rng, state, params, sys, counter)
        trace.append(np.asarray(state.gb_fitness))
        if it in wanted:
            marks[it] = hard_decision(state.p_gb, constellation)
    return HeuristicRun(hard_decision(state.p_gb, constellation),
                        np.stack(trace, axis=-1), marks)


def pso_detect(rng: RngStream, sys: RealSystem, params: PsoParams,
               strategy: InitStrategy, constellation: Constellation,
               counter=None):
    """Detect one symbol vector with PSO; returns (hard symbols, fitness trace)."""
    run = run_swarm(rng, sys, params, strategy, constellation, counter=counter)
    return run.symbols, run.trace


# ---------------------------------------------------------------------------
# Differential evolution, strategy rand/1/bin
# ---------------------------------------------------------------------------

def _mutation_indices(rng: RngStream, n_ind: int, batch_shape: tuple) -> np.ndarray:
    """Three distinct partner indices per individual, all different from it.

    Rejection sampling: every invalid triple is redrawn whole, keeping the
    marginals uniform over the valid set.
    """
    own = np.arange(n_ind)
    r = rng.integers(0, n_ind, (3,) + batch_shape + (n_ind,))
    while True:
        bad = (
            (r[0] == r[1]) | (r[0] == r[2]) | (r[1] == r[2])
            | (r[0] == own) | (r[1] == own) | (r[2] == own)
        )
        if not bad.any():
            return r
        r = np.where(bad, rng.integers(0, n_ind, r.shape), r)


def de_mutation(rng: RngStream, individuals: np.ndarray, f_mut: float, k: int) -> np.ndarray:
    """Mutant vector for individual k: iota_r1 + f_mut (iota_r2 - iota_r3)."""
    individuals = np.asarray(individuals)
    n_ind = individuals.shape[-1]
    if n_ind < 4:
        raise ValueError("need at least 4 individuals for distinct mutation indices")
    while True:
        r1, r2, r3 = (int(v) for v in rng.integers(0, n_ind, 3))
        if len({r1, r2, r3, k}) == 4:
            break
    return individuals[..., r1] + f_mut * (individuals[..., r2] - individuals[..., r3])


def de_crossover(rng: RngStream, iota_k: np.ndarray, nu_k: np.ndarray,
                 f_cr: float) -> np.ndarray:
    """Binomial crossover: take the mutant where rand <= f_cr or at one forced index."""
    iota_k = np.asarray(iota_k)
    nu_k = np.asarray(nu_k)
    if iota_k.shape != nu_k.shape:
        raise ValueError("individual and mutant must have equal shapes")
    n_dim = iota_k.shape[-1]
    take = rng.uniform(size=iota_k.shape) <= f_cr
    forced = int(rng.integers(0, n_dim))
    take[..., forced] = True
    return np.where(take, nu_k, iota_k)


def de_selection(pop: PopulationState, trials: np.ndarray, sys: RealSystem,
                 counter=None) -> PopulationState:
    """Greedy selection; evaluates both incumbents and trials (2 n_ind evals)."""
    trials = np.asarray(trials)
    if trials.shape != pop.individuals.shape:
        raise ValueError("trial set must match the population shape")
    f_inc = fitness_columns(sys, pop.individuals, counter)
    f_tri = fitness_columns(sys, trials, counter)
    take = f_tri < f_inc
    pop.individuals = np.where(take[..., None, :], trials, pop.individuals)
    pop.fitness_cache = np.where(take, f_tri, f_inc)
    pop.generation += 1
    return pop


def init_population(rng: RngStream, params: DeParams, strategy: InitStrategy,
                    sys: RealSystem, counter=None) -> PopulationState:
    batch_shape = sys.h.shape[:-2]
    pos = initial_positions(rng, sys.dim, params.n_ind, strategy,
                            params.search_lo, params.search_hi, batch_shape)
    return PopulationState(pos, fitness_columns(sys, pos, counter))


def de_generation(rng: RngStream, pop: PopulationState, params: DeParams,
                  sys: RealSystem, counter=None) -> PopulationState:
    """One mutation/crossover/selection cycle over the whole population."""
    iota = pop.individuals
    n_dim, n_ind = iota.shape[-2], iota.shape[-1]
    batch_shape = iota.shape[:-2]
    r = _mutation_indices(rng, n_ind, batch_shape)
    pick = lambda idx: np.take_along_axis(iota, idx[..., None, :], axis=-1)
    mutants = pick(r[0]) + params.f_mut * (pick(r[1]) - pick(r[2]))
    take = rng.uniform(size=iota.shape) <= params.f_cr
    forced = rng.integers(0, n_dim, batch_shape + (n_ind,))
    take |= np.arange(n_dim)[:, None] == forced[..., None, :]
    trials = np.where(take, mutants, iota)
    if counter is not None:
        # 3 flops per dimension for mutation, 3 for crossover bookkeeping;
        # matches the complexity model's per-generation convention.
        counter.add(6 * iota.size)
    return de_selection(pop, trials, sys, counter)


def run_population(rng: RngStream, sys: RealSystem, params: DeParams,
                   strategy: InitStrategy, constellation: Constellation,
                   checkpoints=(), counter=None) -> HeuristicRun:
    """Full DE detection; optionally record hard decisions at checkpoints."""
    pop = init_population(rng, params, strategy, sys, counter)
    best, best_fit = _best_member(pop.individuals, pop.fitness_cache)
    trace = [np.asarray(best_fit)]
    marks = {}
    wanted = set(checkpoints)
    if 0 in wanted:
        marks[0] = hard_decision(best, constellation)
    for gen in range(1, params.n_gen + 1):
        de_generation(rng, pop, params, sys, counter)
        best, best_fit = _best_member(pop.individuals, pop.fitness_cache)
        trace.append(np.asarray(best_fit))
        if gen in wanted:
            marks[gen] = hard_decision(best, constellation)
    return HeuristicRun(hard_decision(best, constellation),
                        np.stack(trace, axis=-1), marks)


def de_detect(rng: RngStream, sys: RealSystem, params: DeParams,
              strategy: InitStrategy, constellation: Constellation,
              counter=None):
    """Detect one symbol vector with DE; returns (hard symbols, fitness trace)."""
    run = run_population(rng, sys, params, strategy, constellation, counter=counter)
    return run.symbols, run.trace


# ---------------------------------------------------------------------------
# Hybrid linear-heuristic detectors
# ---------------------------------------------------------------------------

def linear_seed(h: np.ndarray, y: np.ndarray, linear_kind: str,
                n0_over_es: float, counter=None) -> np.ndarray:
    """Real-domain seed vector from a linear detector's soft estimate."""
    if linear_kind == "mf":
        eq = mf_equalizer(h, counter)
    elif linear_kind == "mmse":
        eq = mmse_equalizer(h, n0_over_es, counter)
    else:
        raise ValueError(f"unsupported seed detector {linear_kind!r}")
    return realify_vec(apply_equalizer(eq, y, counter))


def run_hybrid(rng: RngStream, sys: RealSystem, seed_vec: np.ndarray, kind: str,
               params, constellation: Constellation, checkpoints=(),
               counter=None, used_fallback: bool = False) -> HeuristicRun:
    """Heuristic refinement around a precomputed seed vector.

    Checkpoint 0 and the zero-budget output are the sliced seed itself,
    which is exactly the linear detector's decision.
    """
    heuristic = kind.split("-")[0]
    if heuristic == "pso":
        budget, runner = params.n_iter, run_swarm
    elif heuristic == "de":
        budget, runner = params.n_gen, run_population
    else:
        raise ValueError(f"unsupported hybrid kind {kind!r}")
    seed_symbols = hard_decision(seed_vec, constellation)
    if budget == 0:
        trace = np.asarray(fitness(sys, np.asarray(seed_vec)))[..., None]
        marks = {0: seed_symbols} if 0 in set(checkpoints) else {}
        return HeuristicRun(seed_symbols, trace, marks, used_fallback)
    if used_fallback:
        strategy = InitStrategy(INIT_UNIFORM)
    else:
        strategy = InitStrategy(INIT_GAUSSIAN, seed_vector=np.asarray(seed_vec),
                                include_seed_member=True)
    run = runner(rng, sys, params, strategy, constellation, checkpoints, counter)
    if 0 in run.checkpoint_symbols:
        run.checkpoint_symbols[0] = seed_symbols
    run.used_fallback = used_fallback
    return run


def hybrid_detect(rng: RngStream, sys: RealSystem, h: np.ndarray, y: np.ndarray,
                  kind: str, params, n0_over_es: float,
                  constellation: Constellation, counter=None):
    """Two-stage detection: linear soft estimate, then heuristic refinement.

    kind is one of pso-mf / pso-mmse / de-mf / de-mmse. If the linear stage
    fails (singular channel), the heuristic falls back to uniform-random
    initialization and the event is logged. Returns (hard symbols, trace).
    """
    if kind not in HYBRID_KINDS:
        raise ValueError(f"unsupported hybrid kind {kind!r}")
    linear_kind = kind.split("-")[1]
    fallback = False
    try:
        seed_vec = linear_seed(h, y, linear_kind, n0_over_es, counter)
    except SingularMatrixError:
        log.warning("hybrid %s: linear seed failed, falling back to uniform init", kind)
        fallback = True
        seed_vec = np.zeros(sys.dim)
    run = run_hybrid(rng, sys, seed_vec, kind, params, constellation,
                     counter=counter, used_fallback=fallback)
    return run.symbols, run.trace
