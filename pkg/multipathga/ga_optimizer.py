"""
Binary-chromosome genetic algorithm minimizing an objective over a box.

Each parameter is a gene of ``bits`` bits (most significant bit first) mapped
affinely onto [lower, upper]. Generations are built by roulette-wheel parent
selection, one-point (or n-point) crossover and per-bit mutation, with the best
``elitism_count`` chromosomes copied over unchanged. The objective is minimized;
selection works on the fitness 1 / (1 + objective).

The generator is consumed only while building the next generation, never while
evaluating the objective, so evaluations may be mapped concurrently without
changing the result.

Usage Examples:
  layout = GeneLayout([Gene(-5.12, 5.12, 16)] * 3)
  result = run_ga(dejong_f1, layout, GaConfig(max_generations=200, seed=7))
"""
from    dataclasses import dataclass, field
import  logging
import  math
from    typing import Callable, List, Optional

import  numpy as np

from    multipathga.error import DomainError, GaRunError

logger = logging.getLogger(__name__)

TERMINATION_RULES = ('max_generations', 'fitness_plateau', 'uniform_population')


@dataclass(frozen=True)
class Gene():
    lower: float
    upper: float
    bits: int = 16
    name: str = ''

    def __post_init__(self):
        if self.bits < 1:
            raise DomainError(f'gene {self.name!r} needs at least one bit')
        if not self.lower < self.upper:
            raise DomainError(f'gene {self.name!r} has an empty range [{self.lower}, {self.upper}]')


class GeneLayout():
    """
    Ordered genes making up a chromosome of ``gamma`` bits.

    :param list genes: ``Gene`` records, one per optimized parameter.
    """

    def __init__(self, genes):
        self.genes = list(genes)
        if not self.genes:
            raise DomainError('a gene layout needs at least one gene')

        self.lower = np.array([g.lower for g in self.genes], dtype=float)
        self.upper = np.array([g.upper for g in self.genes], dtype=float)
        self.offsets = np.cumsum([0] + [g.bits for g in self.genes])

    @property
    def gamma(self):
        return int(self.offsets[-1])

    @property
    def names(self):
        return [g.name for g in self.genes]

    def __len__(self):
        return len(self.genes)

    def contains(self, values):
        values = np.asarray(values)
        return bool(np.all(values >= self.lower) and np.all(values <= self.upper))


@dataclass(frozen=True)
class GaConfig():
    """
    :param int   population_size:  Chromosomes per generation. (Default: 50)
    :param float crossover_prob:   Probability Pc that a parent pair is recombined. (Default: 0.6)
    :param float mutation_prob:    Per-bit flip probability Pm. (Default: 0.001)
    :param int   elitism_count:    Best chromosomes copied unchanged to the next generation. (Default: 1)
    :param int   crossover_points: 1 for one-point crossover, n for n-point. (Default: 1)
    :param str   termination:      'max_generations', 'fitness_plateau' or 'uniform_population'.
                                   ``max_generations`` is always enforced as a hard cap.
    :param int   max_generations:  Number of generations evaluated at most. (Default: 500)
    :param int   plateau_window:   Generations over which the best-ever objective must improve. (Default: 50)
    :param float plateau_epsilon:  Smallest improvement over the window that keeps the run going. (Default: 1e-9)
    :param int   seed:             Seed for the generator when none is passed to ``run_ga``.
    """
    population_size: int = 50
    crossover_prob: float = 0.6
    mutation_prob: float = 0.001
    elitism_count: int = 1
    crossover_points: int = 1
    termination: str = 'max_generations'
    max_generations: int = 500
    plateau_window: int = 50
    plateau_epsilon: float = 1e-9
    seed: Optional[int] = None

    def __post_init__(self):
        if self.population_size < 2:
            raise DomainError(f'population_size must be at least 2, got {self.population_size}')
        for name in ('crossover_prob', 'mutation_prob'):
            if not 0 <= getattr(self, name) <= 1:
                raise DomainError(f'{name} must lie in [0, 1], got {getattr(self, name)}')
        if not 0 <= self.elitism_count < self.population_size:
            raise DomainError(f'elitism_count must lie in [0, population_size), got {self.elitism_count}')
        if self.crossover_points < 1:
            raise DomainError(f'crossover_points must be at least 1, got {self.crossover_points}')
        if self.termination not in TERMINATION_RULES:
            raise DomainError(f'unknown termination rule {self.termination!r}')
        if self.max_generations < 1:
            raise DomainError(f'max_generations must be at least 1, got {self.max_generations}')
        if self.plateau_window < 1:
            raise DomainError(f'plateau_window must be at least 1, got {self.plateau_window}')


def fitness_of(objective_value):
    return 1.0 / (1.0 + objective_value)


@dataclass
class Individual():
    chromosome: np.ndarray
    objective_value: float

    @property
    def fitness(self):
        return fitness_of(self.objective_value)


@dataclass
class GaHistory():
    best: List[float] = field(default_factory=list)
    mean: List[float] = field(default_factory=list)
    best_ever: List[float] = field(default_factory=list)

    def __len__(self):
        return len(self.best)


@dataclass
class GaResult():
    best: np.ndarray
    best_objective: float
    history: GaHistory
    chromosome: np.ndarray = None

    @property
    def generations(self):
        return len(self.history)


def decode(chromosome, layout: GeneLayout):
    """
    Maps each gene's unsigned integer u onto lower + u (upper - lower) / (2^bits - 1).
    Accepts a single chromosome or a 2-D array of them.
    """
    chromosome = np.asarray(chromosome, dtype=np.uint8)
    if chromosome.shape[-1] != layout.gamma:
        raise DomainError(f'chromosome has {chromosome.shape[-1]} bits, layout expects {layout.gamma}')

    values = np.empty(chromosome.shape[:-1] + (len(layout),))
    for i, gene in enumerate(layout.genes):
        segment = chromosome[..., layout.offsets[i]:layout.offsets[i + 1]].astype(float)
        weights = 2.0 ** np.arange(gene.bits - 1, -1, -1)
        t = (segment @ weights) / (2.0 ** gene.bits - 1)
        values[..., i] = gene.lower * (1 - t) + gene.upper * t

    return np.clip(values, layout.lower, layout.upper)


def encode(values, layout: GeneLayout):
    """Nearest chromosome for a point of the box. Used to seed populations."""
    values = np.asarray(values, dtype=float)
    bits = []
    for value, gene in zip(values, layout.genes):
        t = (min(max(value, gene.lower), gene.upper) - gene.lower) / (gene.upper - gene.lower)
        u = int(round(t * (2 ** gene.bits - 1)))
        bits.extend((u >> shift) & 1 for shift in range(gene.bits - 1, -1, -1))
    return np.array(bits, dtype=np.uint8)


def _selection_probabilities(fitness):
    fitness = np.asarray(fitness, dtype=float)
    total = fitness.sum()
    if not total > 0:
        raise DomainError('roulette selection needs positive total fitness')
    if np.any(fitness < 0):
        raise DomainError('roulette selection needs nonnegative fitness values')
    return fitness / total


def select_parent(population, rng, exclude=None):
    """
    Roulette-wheel draw: individual i is returned with probability fitness_i / sum(fitness).

    :param Individual exclude: Individual taken off the wheel before the draw, so a mate is
                               never its own partner. (Default: None)
    """
    if exclude is not None and len(population) > 1:
        population = [ind for ind in population if ind is not exclude]
    probabilities = _selection_probabilities([ind.fitness for ind in population])
    return population[rng.choice(len(population), p=probabilities)]


def crossover_one_point(p1, p2, rng, crossover_prob=0.6, cut=None):
    """
    With probability ``crossover_prob`` swaps the suffixes of the parents after a cut
    drawn uniformly from 1 .. gamma - 1; otherwise returns copies of the parents.
    ``cut`` forces the cut point and skips the draws.
    """
    p1, p2 = np.asarray(p1, dtype=np.uint8), np.asarray(p2, dtype=np.uint8)
    if p1.size != p2.size:
        raise DomainError(f'parents differ in length ({p1.size} vs {p2.size})')

    if cut is None:
        if p1.size < 2 or rng.random() >= crossover_prob:
            return p1.copy(), p2.copy()
        cut = int(rng.integers(1, p1.size))

    return (np.concatenate([p1[:cut], p2[cut:]]),
            np.concatenate([p2[:cut], p1[cut:]]))


def crossover_n_point(p1, p2, rng, points, crossover_prob=0.6):
    """Alternates parent segments between ``points`` distinct cut points."""
    p1, p2 = np.asarray(p1, dtype=np.uint8), np.asarray(p2, dtype=np.uint8)
    if p1.size != p2.size:
        raise DomainError(f'parents differ in length ({p1.size} vs {p2.size})')
    if p1.size < 2 or rng.random() >= crossover_prob:
        return p1.copy(), p2.copy()

    cuts = np.sort(rng.choice(np.arange(1, p1.size), size=min(points, p1.size - 1), replace=False))
    # segment index parity decides which parent feeds which child
    swap = (np.searchsorted(cuts, np.arange(p1.size), side='right') % 2).astype(bool)
    return np.where(swap, p2, p1), np.where(swap, p1, p2)


def mutate_bitflip(chromosome, rng, mutation_prob=0.001, positions=None):
    """
    Flips each bit independently with probability ``mutation_prob``.
    ``positions`` (0-based) forces flips at exactly those bits instead.
    """
    chromosome = np.asarray(chromosome, dtype=np.uint8)
    if positions is not None:
        mask = np.zeros(chromosome.size, dtype=bool)
        mask[list(positions)] = True
    else:
        mask = rng.random(chromosome.size) < mutation_prob
    return np.where(mask, 1 - chromosome, chromosome).astype(np.uint8)


class _CachedObjective():
    """Evaluates decoded chromosomes, reusing values for chromosomes seen before."""

    def __init__(self, objective, layout, map_fn):
        self.objective = objective
        self.layout = layout
        self.map_fn = map_fn
        self._cache = {}

    def __call__(self, population):
        keys = [chromosome.tobytes() for chromosome in population]
        pending = {}
        for key, chromosome in zip(keys, population):
            if key not in self._cache and key not in pending:
                pending[key] = chromosome

        if pending:
            decoded = decode(np.array(list(pending.values())), self.layout)
            for key, params, value in zip(pending, decoded, self.map_fn(self.objective, list(decoded))):
                value = float(value)
                if not math.isfinite(value) or value <= -1:
                    raise GaRunError(f'objective returned {value} at {params.tolist()}', params=params)
                self._cache[key] = value

        return np.array([self._cache[key] for key in keys])


def _should_stop(config: GaConfig, history: GaHistory, population):
    if len(history) >= config.max_generations:
        return True
    if config.termination == 'fitness_plateau' and len(history) > config.plateau_window:
        improvement = history.best_ever[-config.plateau_window - 1] - history.best_ever[-1]
        return improvement <= config.plateau_epsilon
    if config.termination == 'uniform_population':
        return bool(np.all(population == population[0]))
    return False


def _crossover(config, p1, p2, rng):
    if config.crossover_points == 1:
        return crossover_one_point(p1, p2, rng, config.crossover_prob)
    return crossover_n_point(p1, p2, rng, config.crossover_points, config.crossover_prob)


def _next_generation(population, objectives, config: GaConfig, rng):
    size = config.population_size
    elites = np.argsort(objectives, kind='stable')[:config.elitism_count]
    offspring = [population[i].copy() for i in elites]
    individuals = [Individual(chromosome, value) for chromosome, value in zip(population, objectives)]

    while len(offspring) < size:
        first = select_parent(individuals, rng)
        second = select_parent(individuals, rng, exclude=first)
        for child in _crossover(config, first.chromosome, second.chromosome, rng):
            if len(offspring) < size:
                offspring.append(mutate_bitflip(child, rng, config.mutation_prob))

    return np.array(offspring, dtype=np.uint8)


def run_ga(objective: Callable, layout: GeneLayout, config: GaConfig = None, rng=None,
           initial_population=None, map_fn=map, starting_points=None):
    """
    Minimizes ``objective`` (called with a decoded parameter vector) over the layout's box.
    Objective values must stay above -1 so that the fitness 1 / (1 + E) is positive.

    :param rng:                numpy Generator; built from ``config.seed`` when omitted.
    :param initial_population: Optional (population_size, gamma) bit array for generation 0.
    :param map_fn:             ``map``-like callable used for objective evaluation,
                               e.g. ``executor.map`` to evaluate a generation concurrently.
    :param starting_points:    Points of the box encoded into the first rows of the random
                               generation 0. Ignored when ``initial_population`` is given.

    :returns GaResult with the best-ever point, its objective and per-generation history.
    :raises GaRunError: if the objective returns a non-finite value or one at or below -1.
    """
    config = config or GaConfig()
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    evaluate = _CachedObjective(objective, layout, map_fn)

    if initial_population is None:
        population = rng.integers(0, 2, size=(config.population_size, layout.gamma), dtype=np.uint8)
        for row, point in enumerate(list(starting_points or ())[:config.population_size]):
            population[row] = encode(point, layout)
    else:
        population = np.array(initial_population, dtype=np.uint8)
        if population.shape != (config.population_size, layout.gamma):
            raise DomainError(f'initial population has shape {population.shape}, '
                              f'expected {(config.population_size, layout.gamma)}')

    history = GaHistory()
    best_chromosome, best_objective = None, math.inf

    while True:
        objectives = evaluate(population)
        leader = int(np.argmin(objectives))
        if objectives[leader] < best_objective:
            best_chromosome, best_objective = population[leader].copy(), float(objectives[leader])

        history.best.append(float(objectives[leader]))
        history.mean.append(float(objectives.mean()))
        history.best_ever.append(best_objective)
        logger.debug('generation %d: best=%.6g mean=%.6g best_ever=%.6g',
                     len(history) - 1, history.best[-1], history.mean[-1], best_objective)

        if _should_stop(config, history, population):
            break
        population = _next_generation(population, objectives, config, rng)

    return GaResult(best=decode(best_chromosome, layout),
                    best_objective=best_objective,
                    history=history,
                    chromosome=best_chromosome)


def dejong_f1(x):
    """Sphere, minimum 0 at the origin."""
    return float(np.sum(np.square(x)))


def dejong_f2(x):
    """Rosenbrock saddle, minimum 0 at (1, 1)."""
    return float(100 * (x[0] ** 2 - x[1]) ** 2 + (1 - x[0]) ** 2)


def dejong_f3(x):
    """Step function shifted to be nonnegative on [-5.12, 5.12]^n."""
    return float(6 * len(x) + np.sum(np.floor(x)))
