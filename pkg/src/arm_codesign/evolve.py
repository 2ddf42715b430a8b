"""Genetic algorithm over a flat decision vector of controller weights and,
in the co-design condition, the two link lengths.

One genome is one candidate solution. Control-only genomes hold exactly the
network weights; co-design genomes prepend the two morphology genes, which
are clamped into their bounds both during variation and on decode. Fitness
is the time-averaged squared end-effector-to-target distance plus the
weighted collision penalty (plus optional regularizers).

Determinism: every random draw comes from a generator derived from the
master seed and a (generation, slot) spawn key, so traces are reproducible
bit-for-bit and do not depend on how fitness evaluations are scheduled.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Callable

import numpy as np

from .analysis import trajectory_error
from .dynamics import Morphology, SimulationDiverged, rollout
from .geometry import collision_penalty, target_feasible
from .policy import Condition, NetLayout, PolicyNet, make_policy

if TYPE_CHECKING:
    from .experiment import Scenario

__all__ = [
    "GAConfig",
    "GenerationTrace",
    "Genome",
    "GenomeCodec",
    "INIT_CTRL_SIGMA",
    "SENTINEL_LOSS",
    "decode",
    "encode",
    "evolve",
    "fitness",
    "genome_from_dict",
    "genome_to_dict",
    "project_morphology",
    "save_trace_csv",
]

# Loss assigned to rollouts that blow up numerically; large enough to lose
# every tournament while keeping the population totally ordered.
SENTINEL_LOSS = 1e6

# Std dev of the seeded Gaussian used for initial controller genes.
INIT_CTRL_SIGMA = 0.5

MORPH_GENES = 2


@dataclass(frozen=True)
class GenomeCodec:
    """Everything needed to decode a flat gene vector.

    ``baseline`` supplies the fixed morphology (control-only) and the link
    bounds used to project morphology genes (co-design). ``torque_scale``
    becomes the decoded network's output scale.
    """

    condition: Condition
    layout: NetLayout
    baseline: Morphology
    torque_scale: float = 1.0

    def __post_init__(self) -> None:
        expect = 9 if self.condition.kind == "co_design" else 7
        if self.layout.d_in != expect:
            raise ValueError(
                f"{self.condition.kind} needs d_in={expect}, layout has {self.layout.d_in}"
            )
        if self.condition.kind == "control_only" and self.condition.baseline != self.baseline:
            raise ValueError("codec baseline must match the condition's baseline")

    @property
    def n_genes(self) -> int:
        extra = MORPH_GENES if self.condition.kind == "co_design" else 0
        return extra + self.layout.n_params


@dataclass
class Genome:
    genes: np.ndarray
    codec: GenomeCodec

    def __post_init__(self) -> None:
        self.genes = np.asarray(self.genes, dtype=np.float64)
        if self.genes.shape != (self.codec.n_genes,):
            raise ValueError(
                f"genome has {self.genes.shape} genes, codec needs ({self.codec.n_genes},)"
            )


@dataclass(frozen=True)
class GAConfig:
    population: int = 64
    generations: int = 120
    tournament_k: int = 3
    crossover_rate: float = 0.7
    mutation_sigma_ctrl: float = 0.1
    mutation_sigma_morph: float = 0.01
    elitism: int = 2
    seed: int = 0
    length_sum_weight: float = 0.0  # optional (l1 + l2) regularizer
    morph_step_limit: float | None = None  # per-generation |d morph| clamp

    def __post_init__(self) -> None:
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        if not 0 <= self.elitism < self.population:
            raise ValueError("elitism must be in [0, population)")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ValueError("crossover_rate must be in [0, 1]")
        if self.tournament_k < 1:
            raise ValueError("tournament_k must be >= 1")
        if self.mutation_sigma_ctrl < 0 or self.mutation_sigma_morph < 0:
            raise ValueError("mutation sigmas must be >= 0")
        if self.length_sum_weight < 0:
            raise ValueError("length_sum_weight must be >= 0")
        if self.morph_step_limit is not None and self.morph_step_limit <= 0:
            raise ValueError("morph_step_limit must be positive when set")


@dataclass
class GenerationTrace:
    """Per-generation best loss, the overall champion, and its morphology.

    Entry 0 covers the initial population; entry g the population after g
    variation rounds. With elitism >= 1 the sequence is non-increasing.
    """

    best_loss: list[float] = field(default_factory=list)
    champion_morphologies: list[tuple[float, float]] = field(default_factory=list)
    best_genome: Genome | None = None


def project_morphology(
    raw: tuple[float, float],
    bounds: tuple[tuple[float, float], tuple[float, float]],
) -> Morphology:
    """Clamp raw link lengths component-wise into their bounds."""
    (lo1, hi1), (lo2, hi2) = bounds
    l1 = min(max(float(raw[0]), lo1), hi1)
    l2 = min(max(float(raw[1]), lo2), hi2)
    return Morphology(l1, l2, bounds)


def decode(g: Genome) -> tuple[Morphology, PolicyNet]:
    """Split a genome into its (projected) morphology and policy network."""
    codec = g.codec
    if codec.condition.kind == "co_design":
        morph = project_morphology(
            (g.genes[0], g.genes[1]), codec.baseline.bounds
        )
        weights = g.genes[MORPH_GENES:]
    else:
        morph = codec.baseline
        weights = g.genes
    return morph, PolicyNet(codec.layout, weights, torque_scale=codec.torque_scale)


def encode(morph: Morphology, weights: np.ndarray, codec: GenomeCodec) -> Genome:
    """Inverse of :func:`decode` for in-bounds morphologies."""
    weights = np.asarray(weights, dtype=np.float64)
    if codec.condition.kind == "co_design":
        genes = np.concatenate(([morph.l1, morph.l2], weights))
    else:
        genes = weights.copy()
    return Genome(genes=genes, codec=codec)


def fitness(
    g: Genome,
    scenario: "Scenario",
    target: tuple[float, float],
    length_sum_weight: float = 0.0,
) -> float:
    """Task loss plus weighted collision penalty for one genome.

    Task loss is the mean squared end-effector-to-target distance over the
    episode's post-initial states. Numerically diverged rollouts score
    ``SENTINEL_LOSS``. Raises ValueError for targets that are out of reach of
    the baseline or inside an obstacle's safety margin.
    """
    codec = g.codec
    if not target_feasible(
        target, list(scenario.obstacles), codec.baseline, scenario.safety_margin
    ):
        raise ValueError(f"target {target} is not feasible in this scenario")
    morph, net = decode(g)
    policy = make_policy(net, codec.condition)
    try:
        traj = rollout(policy, morph, scenario, target)
    except SimulationDiverged:
        return SENTINEL_LOSS
    loss = trajectory_error(traj, target)
    if scenario.collision.lambda_coll > 0.0 and scenario.obstacles:
        coll = collision_penalty(traj, morph, list(scenario.obstacles), scenario.collision)
        loss += scenario.collision.lambda_coll * coll.penalty
    if length_sum_weight > 0.0:
        loss += length_sum_weight * (morph.l1 + morph.l2)
    return loss


def _rng(seed: int, generation: int, slot: int) -> np.random.Generator:
    """Independent stream for one (generation, slot) cell of the run."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(generation, slot))
    )


def _init_genome(codec: GenomeCodec, rng: np.random.Generator) -> Genome:
    n_ctrl = codec.layout.n_params
    if codec.condition.kind == "co_design":
        (lo1, hi1), (lo2, hi2) = codec.baseline.bounds
        morph = np.array([rng.uniform(lo1, hi1), rng.uniform(lo2, hi2)])
        ctrl = rng.normal(0.0, INIT_CTRL_SIGMA, n_ctrl)
        genes = np.concatenate((morph, ctrl))
    else:
        genes = rng.normal(0.0, INIT_CTRL_SIGMA, n_ctrl)
    return Genome(genes=genes, codec=codec)


def _tournament(
    rng: np.random.Generator, losses: list[float], k: int
) -> int:
    """Index of the best of k uniformly drawn individuals."""
    candidates = rng.integers(0, len(losses), size=k)
    best = candidates[0]
    for c in candidates[1:]:
        if losses[c] < losses[best]:
            best = c
    return int(best)


def _clamp_morph_genes(genes: np.ndarray, codec: GenomeCodec) -> None:
    (lo1, hi1), (lo2, hi2) = codec.baseline.bounds
    genes[0] = min(max(genes[0], lo1), hi1)
    genes[1] = min(max(genes[1], lo2), hi2)


def _make_child(
    rng: np.random.Generator,
    pop: list[Genome],
    losses: list[float],
    cfg: GAConfig,
    codec: GenomeCodec,
) -> Genome:
    """Tournament selection, blend crossover, block mutation, projection."""
    ia = _tournament(rng, losses, cfg.tournament_k)
    parent_a = pop[ia].genes
    if rng.random() < cfg.crossover_rate:
        ib = _tournament(rng, losses, cfg.tournament_k)
        parent_b = pop[ib].genes
        u = rng.uniform(-0.25, 1.25, parent_a.shape[0])
        genes = parent_a + u * (parent_b - parent_a)
    else:
        genes = parent_a.copy()

    co = codec.condition.kind == "co_design"
    if co:
        genes[:MORPH_GENES] += rng.normal(0.0, cfg.mutation_sigma_morph, MORPH_GENES)
        genes[MORPH_GENES:] += rng.normal(
            0.0, cfg.mutation_sigma_ctrl, genes.shape[0] - MORPH_GENES
        )
        if cfg.morph_step_limit is not None:
            lim = cfg.morph_step_limit
            for j in range(MORPH_GENES):
                lo = parent_a[j] - lim
                hi = parent_a[j] + lim
                genes[j] = min(max(genes[j], lo), hi)
        _clamp_morph_genes(genes, codec)
    else:
        genes += rng.normal(0.0, cfg.mutation_sigma_ctrl, genes.shape[0])
    return Genome(genes=genes, codec=codec)


def evolve(
    cfg: GAConfig,
    scenario: "Scenario | None",
    target: tuple[float, float] | None,
    codec: GenomeCodec,
    fitness_fn: Callable[[Genome], float] | None = None,
    workers: int = 1,
) -> GenerationTrace:
    """Run the GA and return its trace.

    ``fitness_fn`` overrides the standard rollout-based fitness (used by
    surrogate benchmarks and tests); otherwise ``scenario`` and ``target``
    must be given. Evaluations are pure, so running them on a thread pool
    (``workers > 1``) gives exactly the same trace as serial execution.
    """
    if fitness_fn is None:
        if scenario is None or target is None:
            raise ValueError("scenario and target are required without a fitness_fn")
        scn, tgt, lsw = scenario, target, cfg.length_sum_weight

        def fitness_fn(g: Genome) -> float:
            return fitness(g, scn, tgt, length_sum_weight=lsw)

    def eval_one(g: Genome) -> float:
        try:
            return fitness_fn(g)
        except SimulationDiverged:
            return SENTINEL_LOSS

    def evaluate(pop: list[Genome]) -> list[float]:
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                return list(pool.map(eval_one, pop))
        return [eval_one(g) for g in pop]

    pop = [
        _init_genome(codec, _rng(cfg.seed, 0, i)) for i in range(cfg.population)
    ]
    losses = evaluate(pop)

    trace = GenerationTrace()
    best_i = int(np.argmin(losses))
    best_loss = losses[best_i]
    best_genome = Genome(pop[best_i].genes.copy(), codec)

    def record() -> None:
        trace.best_loss.append(best_loss)
        morph, _ = decode(best_genome)
        trace.champion_morphologies.append((morph.l1, morph.l2))

    record()

    for gen in range(1, cfg.generations + 1):
        order = sorted(range(cfg.population), key=lambda i: (losses[i], i))
        elites = [Genome(pop[i].genes.copy(), codec) for i in order[: cfg.elitism]]
        elite_losses = [losses[i] for i in order[: cfg.elitism]]

        children = [
            _make_child(_rng(cfg.seed, gen, slot), pop, losses, cfg, codec)
            for slot in range(cfg.population - cfg.elitism)
        ]
        child_losses = evaluate(children)

        pop = elites + children
        losses = elite_losses + child_losses
        gen_best = int(np.argmin(losses))
        if losses[gen_best] < best_loss:
            best_loss = losses[gen_best]
            best_genome = Genome(pop[gen_best].genes.copy(), codec)
        record()

    trace.best_genome = best_genome
    return trace


def genome_to_dict(g: Genome) -> dict:
    """JSON-ready description of a genome: codec descriptor plus gene array."""
    codec = g.codec
    return {
        "condition": codec.condition.kind,
        "layout": {
            "d_in": codec.layout.d_in,
            "hidden": codec.layout.hidden,
            "d_out": codec.layout.d_out,
        },
        "baseline": {
            "l1": codec.baseline.l1,
            "l2": codec.baseline.l2,
            "bounds": [list(b) for b in codec.baseline.bounds],
        },
        "torque_scale": codec.torque_scale,
        "genes": [float(x) for x in g.genes],
    }


def genome_from_dict(d: dict) -> Genome:
    baseline = Morphology(
        d["baseline"]["l1"],
        d["baseline"]["l2"],
        tuple(tuple(b) for b in d["baseline"]["bounds"]),
    )
    if d["condition"] == "co_design":
        cond = Condition.co_design()
    else:
        cond = Condition.control_only(baseline)
    codec = GenomeCodec(
        condition=cond,
        layout=NetLayout(d["layout"]["d_in"], d["layout"]["hidden"], d["layout"]["d_out"]),
        baseline=baseline,
        torque_scale=d["torque_scale"],
    )
    return Genome(genes=np.array(d["genes"]), codec=codec)


def save_trace_csv(trace: GenerationTrace, path: Path | str) -> None:
    """Write (generation, best_loss, champion l1, champion l2) rows."""
    path = Path(path)
    lines = ["generation,best_loss,l1,l2"]
    for g, (loss, (l1, l2)) in enumerate(
        zip(trace.best_loss, trace.champion_morphologies)
    ):
        lines.append(f"{g},{loss!r},{l1!r},{l2!r}")
    path.write_text("\n".join(lines) + "\n")


def save_genome_json(g: Genome, path: Path | str) -> None:
    Path(path).write_text(json.dumps(genome_to_dict(g), indent=1) + "\n")


def load_genome_json(path: Path | str) -> Genome:
    return genome_from_dict(json.loads(Path(path).read_text()))
