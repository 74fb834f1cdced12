"""Seeded Monte Carlo harness: drop, schedule, precode, allocate, evaluate.

Every trial derives its seed from the master seed and its index through a
splitmix64-style mix, so trials are independent, reproducible, and identical
under any worker count or execution order. SNR sweeps scale per-antenna power
only; scheduling does not depend on it and runs once per trial.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import channel, evaluation, scheduling
from .channel import LinkBudget
from .evaluation import (COORDINATED, FREQUENCY_SPLIT, FULL_COOPERATION,
                         INDEPENDENT)
from .power_alloc import solve_pac
from .precoding import SingularChannelError, antenna_load, zf_precoder

MAX_REDRAWS = 10

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

# which allocators make sense for which scenario
APPLICABLE_ALGORITHMS = {
    FULL_COOPERATION: ("random", "sus"),
    COORDINATED: ("siua", "sus"),
    INDEPENDENT: ("random",),
    FREQUENCY_SPLIT: ("sus", "random"),
}

DEFAULT_SCENARIOS = (FULL_COOPERATION, COORDINATED, INDEPENDENT,
                     FREQUENCY_SPLIT)
DEFAULT_ALGORITHMS = ("siua", "sus", "random")


class ExperimentError(RuntimeError):
    """Nothing usable came out of an experiment (all trials discarded)."""


def mix64(*parts) -> int:
    """Deterministic 64-bit mix of integer parts.

    Folds each part into the state and applies the splitmix64 finalizer
    (add golden-ratio constant, two multiply-xor-shift rounds). Trial seeds
    are mix64(master_seed, trial_index); redraw r within a trial reseeds
    with mix64(trial_seed, r); role-specific streams hang one more level off
    the attempt seed.
    """
    z = 0
    for p in parts:
        z = (z + (int(p) & _MASK64) + _GOLDEN) & _MASK64
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        z = z ^ (z >> 31)
    return z


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run needs; defaults follow the reference link budget."""

    trials: int = 100
    master_seed: int = 1
    pool_size: int = 700
    snr_points_db: tuple = (0.0, 5.0, 10.0, 15.0, 21.0, 25.0, 30.0)
    pool_sweep: tuple = tuple(range(100, 1300, 100))
    pool_sweep_snr_db: float = 20.0
    scenarios: tuple = DEFAULT_SCENARIOS
    algorithms: tuple = DEFAULT_ALGORITHMS
    workers: int = 1

    beams_per_satellite: int = 7
    beam_diameter_km: float = 600.0
    # half-power radius of one beam; the lattice spacing above is the cell
    # size, the taper steepness is set independently (real multibeam edge
    # tapers are much steeper than a half-power crossover at the cell edge)
    half_power_radius_km: float = 85.0
    # shift of satellite 2's lattice; see the geometry notes in the README
    lattice_offset_km: tuple = (150.0, 0.0)
    sat_altitude_km: float = 35786.0
    u_coeff: float = channel.DEFAULT_U_COEFF
    budget: LinkBudget = field(default_factory=LinkBudget)
    induced_over_unallocated: bool = False
    score_factor_floor: float = scheduling.FACTOR_FLOOR
    solver_tol: float = 1e-6

    def validate(self):
        if self.trials < 1:
            raise ValueError("experiment.trials must be >= 1")
        if self.pool_size < 2 * self.beams_per_satellite:
            raise ValueError(
                "experiment.pool_size must be at least twice the beam count")
        if not all(np.isfinite(self.snr_points_db)):
            raise ValueError("experiment.snr_points_db must be finite")
        if self.workers < 1:
            raise ValueError("experiment.workers must be >= 1")
        if self.score_factor_floor < 0:
            raise ValueError("scheduling.factor_floor must be >= 0")
        for sc in self.scenarios:
            if sc not in APPLICABLE_ALGORITHMS:
                raise ValueError(f"unknown scenario {sc!r}")
        for alg in self.algorithms:
            if alg not in DEFAULT_ALGORITHMS:
                raise ValueError(f"unknown algorithm {alg!r}")
        return self

    def pattern(self) -> channel.BeamPattern:
        theta_3db = np.arctan(self.half_power_radius_km
                              / self.sat_altitude_km)
        g_max = 10.0 ** (self.budget.g_tx_dbi / 10.0)
        return channel.BeamPattern(g_max=g_max, theta_3db=theta_3db,
                                   u_coeff=self.u_coeff)

    def grids(self):
        return channel.make_grids(self.beams_per_satellite,
                                  self.beam_diameter_km,
                                  self.lattice_offset_km)

    def combos(self):
        return [(sc, alg) for sc in self.scenarios
                for alg in APPLICABLE_ALGORITHMS[sc]
                if alg in self.algorithms]


@dataclass
class TrialResult:
    trial_index: int
    seed: int
    results: dict
    discarded: bool = False
    redraws: int = 0


@dataclass
class SummaryRow:
    scenario: str
    algorithm: str
    snr_db: float
    pool_size: int
    mean_sr: float
    std_sr: float
    trials: int
    discards: int


@dataclass
class ExperimentSummary:
    rows: list
    trial_results: list = field(default_factory=list)

    def cell(self, scenario, algorithm, snr_db, pool_size=None) -> SummaryRow:
        for r in self.rows:
            if (r.scenario == scenario and r.algorithm == algorithm
                    and r.snr_db == snr_db
                    and (pool_size is None or r.pool_size == pool_size)):
                return r
        raise KeyError((scenario, algorithm, snr_db, pool_size))


def _allocations(cfg: ExperimentConfig, h1, h2, attempt_seed, combos):
    """Selection sets per (scenario, algorithm), computed once per trial."""
    n = cfg.beams_per_satellite
    ids = list(range(cfg.pool_size))
    alloc = {}
    need = set(combos)
    if (COORDINATED, "siua") in need:
        alloc[(COORDINATED, "siua")] = scheduling.siua(
            h1, h2, n, n,
            induced_over_unallocated=cfg.induced_over_unallocated,
            factor_floor=cfg.score_factor_floor)
    if (COORDINATED, "sus") in need or (FREQUENCY_SPLIT, "sus") in need:
        s1 = scheduling.sus(h1, n)
        s2 = scheduling.sus(h2, n,
                            candidates=[k for k in ids if k not in s1])
        alloc[(COORDINATED, "sus")] = (s1, s2)
        alloc[(FREQUENCY_SPLIT, "sus")] = (s1, s2)
    if (INDEPENDENT, "random") in need or (FREQUENCY_SPLIT, "random") in need:
        pair = scheduling.random_alloc(ids, n, n, mix64(attempt_seed, 2))
        alloc[(INDEPENDENT, "random")] = pair
        alloc[(FREQUENCY_SPLIT, "random")] = pair
    if (FULL_COOPERATION, "sus") in need:
        h_tot = np.hstack([h1, h2])
        alloc[(FULL_COOPERATION, "sus")] = scheduling.sus(h_tot, 2 * n)
    if (FULL_COOPERATION, "random") in need:
        rng = np.random.default_rng(mix64(attempt_seed, 3))
        alloc[(FULL_COOPERATION, "random")] = sorted(
            rng.choice(cfg.pool_size, size=2 * n, replace=False).tolist())
    return alloc


def _attempt(cfg: ExperimentConfig, attempt_seed: int) -> dict:
    """One full pipeline pass; raises SingularChannelError to request
    a redraw."""
    pattern = cfg.pattern()
    grid1, grid2 = cfg.grids()
    center, radius = channel.coverage_disc((grid1, grid2))
    users = channel.drop_users(cfg.pool_size, center, radius,
                               mix64(attempt_seed, 1),
                               g_rx=cfg.budget.g_rx_max())
    h1 = channel.build_channel(users, grid1, pattern, cfg.budget,
                               cfg.sat_altitude_km).entries
    h2 = channel.build_channel(users, grid2, pattern, cfg.budget,
                               cfg.sat_altitude_km).entries
    h_tot = np.hstack([h1, h2])
    combos = cfg.combos()
    alloc = _allocations(cfg, h1, h2, attempt_seed, combos)

    # precoders and antenna loads are SNR-independent
    pre = {}
    for key, sets in alloc.items():
        if key[0] == FULL_COOPERATION:
            w = zf_precoder(h_tot[sets])
            pre[key] = (w, antenna_load(w).entries)
        else:
            s1, s2 = sets
            w1 = zf_precoder(h1[s1], satellite_id=1, served_user_ids=s1)
            w2 = zf_precoder(h2[s2], satellite_id=2, served_user_ids=s2)
            pre[key] = (w1, antenna_load(w1).entries,
                        w2, antenna_load(w2).entries)

    n = cfg.beams_per_satellite
    results = {}
    for snr in cfg.snr_points_db:
        pj = cfg.budget.per_antenna_power(snr)
        pac_cache = {}

        def powers(tag, load, scale=1.0):
            if tag not in pac_cache:
                pac_cache[tag] = solve_pac(load, np.full(load.shape[0],
                                                         scale * pj),
                                           tol=cfg.solver_tol).p
            return pac_cache[tag]

        for sc, alg in combos:
            key = (sc, alg)
            if sc == FULL_COOPERATION:
                load = pre[key][1]
                p = powers(key, load)
                r = np.log2(1.0 + p)
                results[(sc, alg, snr)] = evaluation.ScenarioResult(
                    scenario=sc, per_user_sinr=p, sum_rate=float(r.sum()),
                    per_satellite_rates=(float(r[:n].sum()),
                                         float(r[n:].sum())))
            elif sc == FREQUENCY_SPLIT:
                s1, s2 = alloc[key]
                _, load1, _, load2 = pre[key]
                q = np.concatenate([powers((key, 1), load1, scale=2.0),
                                    powers((key, 2), load2, scale=2.0)])
                r = 0.5 * np.log2(1.0 + q)
                results[(sc, alg, snr)] = evaluation.ScenarioResult(
                    scenario=sc, per_user_sinr=q, sum_rate=float(r.sum()),
                    per_satellite_rates=(float(r[:len(s1)].sum()),
                                         float(r[len(s1):].sum())))
            else:
                s1, s2 = alloc[key]
                w1, load1, w2, load2 = pre[key]
                p1 = powers((key, 1), load1)
                p2 = powers((key, 2), load2)
                results[(sc, alg, snr)] = evaluation.coordinated_sum_rate(
                    s1, s2, h1, h2, w1, w2, p1, p2, scenario=sc)
    return results


def run_trial(cfg: ExperimentConfig, trial_index: int) -> TrialResult:
    """One seeded trial; redraws the user drop on singular channels."""
    trial_seed = mix64(cfg.master_seed, trial_index)
    for redraw in range(MAX_REDRAWS + 1):
        try:
            results = _attempt(cfg, mix64(trial_seed, redraw))
        except SingularChannelError:
            continue
        return TrialResult(trial_index=trial_index, seed=trial_seed,
                           results=results, redraws=redraw)
    return TrialResult(trial_index=trial_index, seed=trial_seed, results={},
                       discarded=True, redraws=MAX_REDRAWS + 1)


def _trial_star(args):
    return run_trial(*args)


def summarize(cfg: ExperimentConfig, trials, pool_size=None
              ) -> ExperimentSummary:
    """Aggregate retained trials; order-independent given the index sort."""
    trials = sorted(trials, key=lambda t: t.trial_index)
    retained = [t for t in trials if not t.discarded]
    discards = len(trials) - len(retained)
    if not retained:
        raise ExperimentError("all trials were discarded")
    pool = cfg.pool_size if pool_size is None else pool_size
    rows = []
    for sc, alg in cfg.combos():
        for snr in cfg.snr_points_db:
            vals = np.array([t.results[(sc, alg, snr)].sum_rate
                             for t in retained])
            rows.append(SummaryRow(
                scenario=sc, algorithm=alg, snr_db=snr, pool_size=pool,
                mean_sr=float(vals.mean()), std_sr=float(vals.std(ddof=0)),
                trials=len(retained), discards=discards))
    return ExperimentSummary(rows=rows, trial_results=trials)


def run_experiment(cfg: ExperimentConfig, trial_indices=None
                   ) -> ExperimentSummary:
    """All trials, serial or process-parallel, summarized identically."""
    cfg.validate()
    indices = (list(range(cfg.trials)) if trial_indices is None
               else list(trial_indices))
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            trials = list(pool.map(_trial_star,
                                   [(cfg, i) for i in indices],
                                   chunksize=1))
    else:
        trials = [run_trial(cfg, i) for i in indices]
    return summarize(cfg, trials)


def sweep_pool_size(cfg: ExperimentConfig, sizes=None) -> ExperimentSummary:
    """Sum rate vs pool size at the fixed sweep SNR, for SIUA and SUS."""
    cfg.validate()
    sizes = list(cfg.pool_sweep if sizes is None else sizes)
    if sizes != sorted(sizes):
        raise ValueError("pool sizes must be ascending")
    algs = tuple(a for a in cfg.algorithms if a in ("siua", "sus"))
    if not algs:
        raise ValueError("pool sweep needs siua or sus among the algorithms")
    rows = []
    trials = []
    for size in sizes:
        sub = replace(cfg, pool_size=size,
                      snr_points_db=(cfg.pool_sweep_snr_db,),
                      scenarios=(COORDINATED,), algorithms=algs)
        summary = run_experiment(sub)
        rows.extend(summary.rows)
        trials.extend(summary.trial_results)
    return ExperimentSummary(rows=rows, trial_results=trials)
