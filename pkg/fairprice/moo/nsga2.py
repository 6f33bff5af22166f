"""
Elitist NSGA-II over a black-box objective function.

Randomness is keyed by (seed, generation, pair index), so the offspring of a
generation do not depend on how many worker threads evaluate them.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from tqdm import tqdm

from fairprice.config import settings
from fairprice.core.resilience import CircuitBreaker
from fairprice.moo.dominance import crowding_distance, fast_nondominated_sort
from fairprice.moo.hypervolume import hypervolume
from fairprice.moo.operators import as_bounds, polynomial_mutation, sbx_crossover, tournament_select
from fairprice.utils.monitor import get_optimal_workers

logger = logging.getLogger(__name__)

Objective = Callable[[np.ndarray], np.ndarray]


class NsgaConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    population: int = 50
    generations: int = 25
    p_crossover: float = 0.9
    p_mutation: float = 0.1
    eta_c: float = 15.0
    eta_m: float = 20.0
    bounds: Tuple[float, float] = (-settings.ensemble.genome_bound, settings.ensemble.genome_bound)
    seed: Optional[int] = None
    reference: Optional[List[float]] = None  # hypervolume trace when set

    @field_validator("population")
    @classmethod
    def even_population(cls, v: int) -> int:
        if v < 2 or v % 2:
            raise ValueError("population must be an even number >= 2")
        return v

    @field_validator("generations")
    @classmethod
    def non_negative_generations(cls, v: int) -> int:
        if v < 0:
            raise ValueError("generations must be >= 0")
        return v

    @field_validator("p_crossover", "p_mutation")
    @classmethod
    def probability(cls, v: float) -> float:
        if not 0.0 <= v <= 1.0:
            raise ValueError("probabilities must lie in [0, 1]")
        return v

    @model_validator(mode="after")
    def ordered_bounds(self) -> "NsgaConfig":
        if self.bounds[0] >= self.bounds[1]:
            raise ValueError("genome bounds must satisfy lower < upper")
        if self.eta_c < 0 or self.eta_m < 0:
            raise ValueError("distribution indices must be >= 0")
        return self

    def resolved_seed(self) -> int:
        return settings.seed if self.seed is None else self.seed


@dataclass
class Individual:
    genome: np.ndarray
    objectives: np.ndarray
    rank: int = 0
    crowding: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "genome": self.genome.tolist(),
            "objectives": self.objectives.tolist(),
            "rank": self.rank,
            "crowding": self.crowding,
        }


@dataclass
class NsgaResult:
    population: List[Individual]
    archive: List[Individual]
    evaluations: int
    hypervolume_trace: List[float] = field(default_factory=list)
    failures: int = 0


def assign_rank_and_crowding(individuals: List[Individual]) -> List[np.ndarray]:
    F = np.array([ind.objectives for ind in individuals])
    fronts = fast_nondominated_sort(F)
    for k, front in enumerate(fronts, start=1):
        crowd = crowding_distance(F[front])
        for idx, c in zip(front, crowd):
            individuals[idx].rank = k
            individuals[idx].crowding = float(c)
    return fronts


def select_survivors(combined: List[Individual], size: int) -> List[Individual]:
    """Fill by whole fronts; the last front is cut by descending crowding (stable)."""
    fronts = assign_rank_and_crowding(combined)
    chosen: List[int] = []
    for front in fronts:
        if len(chosen) + front.size <= size:
            chosen.extend(front.tolist())
            continue
        crowd = np.array([combined[i].crowding for i in front])
        order = np.argsort(-crowd, kind="stable")
        chosen.extend(front[order[: size - len(chosen)]].tolist())
        break
    return [combined[i] for i in chosen]


def rank_one(individuals: List[Individual]) -> List[Individual]:
    F = np.array([ind.objectives for ind in individuals])
    return [individuals[i] for i in fast_nondominated_sort(F)[0]]


class _Evaluator:
    def __init__(self, evaluate: Objective, n_objectives: int, breaker: Optional[CircuitBreaker] = None):
        self.breaker = breaker or CircuitBreaker(n_objectives, failure_threshold=None)
        self.evaluate = evaluate
        self.count = 0

    def __call__(self, genomes: List[np.ndarray]) -> List[np.ndarray]:
        self.count += len(genomes)
        with ThreadPoolExecutor(max_workers=get_optimal_workers(len(genomes))) as pool:
            return list(pool.map(lambda g: self.breaker.call(self.evaluate, g), genomes))


def nsga2_evolve(
    evaluate: Objective,
    config: NsgaConfig,
    n_genes: int,
    n_objectives: int,
    breaker: Optional[CircuitBreaker] = None,
) -> NsgaResult:
    """
    Runs config.generations generations of N offspring on top of a uniform
    random initial population: N * (generations + 1) evaluations in total.
    Non-finite or failing evaluations score +inf on every objective.
    """
    seed = config.resolved_seed()
    N = config.population
    bounds = as_bounds(config.bounds, n_genes)
    lo, hi = bounds
    run = _Evaluator(evaluate, n_objectives, breaker)

    init_rng = np.random.default_rng([seed, 0])
    genomes = [lo + (hi - lo) * init_rng.random(n_genes) for _ in range(N)]
    population = [Individual(g, f) for g, f in zip(genomes, run(genomes))]
    assign_rank_and_crowding(population)

    trace: List[float] = []

    def record_hv() -> None:
        if config.reference is not None:
            front = np.array([ind.objectives for ind in rank_one(population)])
            trace.append(hypervolume(front[np.all(np.isfinite(front), axis=1)], config.reference))

    record_hv()
    for gen in tqdm(range(1, config.generations + 1), desc="NSGA-II", disable=not settings.progress, leave=False):
        ranks = [ind.rank for ind in population]
        crowd = [ind.crowding for ind in population]
        children: List[np.ndarray] = []
        for k in range(N // 2):
            rng = np.random.default_rng([seed, gen, k])
            p1 = population[tournament_select(ranks, crowd, rng)].genome
            p2 = population[tournament_select(ranks, crowd, rng)].genome
            c1, c2 = sbx_crossover(p1, p2, config.p_crossover, config.eta_c, bounds, rng)
            children.append(polynomial_mutation(c1, config.p_mutation, config.eta_m, bounds, rng))
            children.append(polynomial_mutation(c2, config.p_mutation, config.eta_m, bounds, rng))
        offspring = [Individual(g, f) for g, f in zip(children, run(children))]
        population = select_survivors(population + offspring, N)
        assign_rank_and_crowding(population)
        record_hv()
        if config.reference is not None:
            logger.debug("generation %d: hypervolume %.6g", gen, trace[-1])

    archive = rank_one(population)
    logger.info(
        "NSGA-II finished: %d evaluations, %d rank-1 solutions, %d failed evaluations",
        run.count, len(archive), run.breaker.total_failures,
    )
    return NsgaResult(
        population=population,
        archive=archive,
        evaluations=run.count,
        hypervolume_trace=trace,
        failures=run.breaker.total_failures,
    )
