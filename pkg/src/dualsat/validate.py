"""Built-in property and oracle checks behind the `validate` CLI verb.

Each check returns a CheckResult; parameters exist so a harness can inject
broken inputs (wrong pattern constant, noisy solver output) and confirm the
checks actually catch them.
"""

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import channel, montecarlo, scheduling
from .channel import BeamPattern, LinkBudget
from .evaluation import COORDINATED, INDEPENDENT, coordinated_sum_rate
from .power_alloc import LN2, P_FLOOR, SolverFailure, solve_pac
from .precoding import SingularChannelError, antenna_load, zf_precoder


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _default_pattern():
    theta = np.arctan(300.0 / channel.GEO_ALTITUDE_KM)
    return BeamPattern(g_max=10.0 ** 5.2, theta_3db=theta)


def check_gain_boresight(pattern: BeamPattern = None) -> CheckResult:
    pattern = pattern or _default_pattern()
    g0 = channel.beam_gain(pattern, 0.0)
    err = abs(g0 - pattern.g_max) / pattern.g_max
    return CheckResult("gain_boresight", err < 1e-12,
                       f"relative error {err:.2e}")


def check_gain_half_power(pattern: BeamPattern = None) -> CheckResult:
    pattern = pattern or _default_pattern()
    ratio = channel.beam_gain(pattern, pattern.theta_3db) / pattern.g_max
    err = abs(ratio - 0.5) / 0.5
    return CheckResult("gain_half_power", err < 0.01,
                       f"ratio {ratio:.6f}, relative error {err:.2e}")


def check_boresight_snr(budget: LinkBudget = None) -> CheckResult:
    budget = budget or LinkBudget()
    pattern = _default_pattern()
    grid = channel.BeamGrid(np.zeros((1, 2)), 600.0, satellite_id=1)
    user = channel.UserTerminal(0, np.zeros(2), budget.g_rx_max())
    h = channel.build_channel([user], grid, pattern, budget)
    snr_db = 10.0 * np.log10(h.entries[0, 0] ** 2)
    err = abs(snr_db - budget.snr_ref_db)
    return CheckResult("boresight_snr", err <= 0.1,
                       f"boresight SNR {snr_db:.4f} dB")


def check_zf_residuals(n_cases: int = 200, seed: int = 7) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(n_cases):
        n = int(rng.integers(2, 9))
        s = n if i % 2 == 0 else int(rng.integers(1, n + 1))
        h = rng.normal(size=(s, n))
        w = zf_precoder(h)
        worst = max(worst, float(np.abs(h @ w.entries - np.eye(s)).max()))
    return CheckResult("zf_residual", worst <= 1e-8,
                       f"max |HW - I| = {worst:.2e} over {n_cases} cases")


def _random_load(rng, n, s):
    b = rng.uniform(0.5, 2.0, size=(n, s))
    b[rng.random(size=(n, s)) < 0.3] = 0.0
    for k in range(s):
        if not (b[:, k] > 0).any():
            b[int(rng.integers(0, n)), k] = rng.uniform(0.5, 2.0)
    return b


def kkt_residuals(b, p_vec, p, lam):
    """Worst-case KKT residuals of a candidate solution."""
    slack = p_vec - b @ p
    a = b.T @ lam
    sup = p > P_FLOOR
    stat = 0.0
    if sup.any():
        stat = float(np.max(np.abs(1.0 / ((1.0 + p[sup]) * LN2) - a[sup])
                            / np.maximum(1.0, a[sup])))
    return {
        "violation": float(np.max(-slack)),
        "stationarity": stat,
        "comp_slack": float(np.max(lam * slack / p_vec)),
    }


def check_solver_kkt(n_cases: int = 200, seed: int = 11,
                     power_noise: float = 0.0) -> CheckResult:
    """KKT invariants on random instances; power_noise simulates a sloppy
    solver for negative-control testing."""
    rng = np.random.default_rng(seed)
    worst = {"violation": 0.0, "stationarity": 0.0, "comp_slack": 0.0}
    for _ in range(n_cases):
        n = 7
        b = _random_load(rng, n, n)
        p_vec = rng.uniform(0.5, 2.0, size=n)
        alloc = solve_pac(b, p_vec)
        p = alloc.p + power_noise * rng.random(n)
        res = kkt_residuals(b, p_vec, p, alloc.multipliers)
        for k in worst:
            worst[k] = max(worst[k], res[k])
    ok = (worst["violation"] <= 1e-6 and worst["stationarity"] <= 1e-5
          and worst["comp_slack"] <= 1e-5)
    return CheckResult("solver_kkt", ok,
                       ", ".join(f"{k}={v:.2e}" for k, v in worst.items()))


def _grid_optimum(b, p_vec, step=1e-3):
    """Package-side brute-force reference for S <= 2 (full grid)."""
    n, s = b.shape
    caps = [float(np.min(p_vec[b[:, k] > 0] / b[b[:, k] > 0, k]))
            for k in range(s)]
    if s == 1:
        p1 = np.arange(0.0, caps[0] + step, step)
        feas = np.all(np.outer(b[:, 0], p1) <= p_vec[:, None] + 1e-12, axis=0)
        return float(np.max(np.log2(1.0 + p1[feas])))
    p1 = np.arange(0.0, caps[0] + step, step)
    p2 = np.arange(0.0, caps[1] + step, step)
    lhs = (b[:, 0][:, None, None] * p1[None, :, None]
           + b[:, 1][:, None, None] * p2[None, None, :])
    feas = np.all(lhs <= p_vec[:, None, None] + 1e-12, axis=0)
    obj = np.log2(1.0 + p1)[:, None] + np.log2(1.0 + p2)[None, :]
    return float(np.where(feas, obj, -np.inf).max())


def check_solver_grid(n_cases: int = 40, seed: int = 13) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_cases):
        s = int(rng.integers(1, 3))
        n = int(rng.integers(s, s + 3))
        b = _random_load(rng, n, s)
        p_vec = rng.uniform(0.2, 0.9, size=n)
        alloc = solve_pac(b, p_vec)
        worst = max(worst, abs(alloc.objective - _grid_optimum(b, p_vec)))
    return CheckResult("solver_grid_oracle", worst <= 1e-2,
                       f"max objective deviation {worst:.2e}")


def _tiny_instance_rates(h1, h2, pj=1.0):
    """Coordinated SR of every (2, 2) allocation of a 6-user pool.

    pj = 1.0 is the 21 dB reference operating point.
    """
    p_vec = np.full(2, pj)
    rates = {}
    for s1 in combinations(range(6), 2):
        rest = [u for u in range(6) if u not in s1]
        for s2 in combinations(rest, 2):
            try:
                w1 = zf_precoder(h1[list(s1)])
                w2 = zf_precoder(h2[list(s2)])
                p1 = solve_pac(antenna_load(w1).entries, p_vec).p
                p2 = solve_pac(antenna_load(w2).entries, p_vec).p
            except (SingularChannelError, SolverFailure):
                continue
            r = coordinated_sum_rate(list(s1), list(s2), h1, h2, w1, w2,
                                     p1, p2)
            rates[(s1, s2)] = r.sum_rate
    return rates


def check_siua_exhaustive(n_cases: int = 20, seed: int = 17) -> CheckResult:
    """SIUA against brute-force enumeration on tiny dual-satellite drops."""
    cfg = montecarlo.ExperimentConfig(
        beams_per_satellite=2, pool_size=6, snr_points_db=(21.0,),
        scenarios=(COORDINATED, INDEPENDENT))
    pattern = cfg.pattern()
    grid1, grid2 = cfg.grids()
    center, radius = channel.coverage_disc((grid1, grid2))
    ratios = []
    rand_gap = []
    for case in range(n_cases):
        users = channel.drop_users(6, center, radius,
                                   montecarlo.mix64(seed, case),
                                   g_rx=cfg.budget.g_rx_max())
        h1 = channel.build_channel(users, grid1, pattern, cfg.budget).entries
        h2 = channel.build_channel(users, grid2, pattern, cfg.budget).entries
        rates = _tiny_instance_rates(h1, h2)
        if not rates:
            continue
        s1, s2 = scheduling.siua(h1, h2, 2, 2)
        got = rates.get((tuple(sorted(s1)), tuple(sorted(s2))))
        if got is None:
            continue
        best = max(rates.values())
        mean_random = sum(rates.values()) / len(rates)
        ratios.append(got / best)
        rand_gap.append(got - mean_random)
    ratio = float(np.mean(ratios))
    ok = ratio >= 0.9 and float(np.mean(rand_gap)) >= 0.0
    return CheckResult(
        "siua_exhaustive", ok,
        f"mean SR ratio to optimum {ratio:.3f}, "
        f"mean gap over random {np.mean(rand_gap):+.3f} bps/Hz")


def check_determinism() -> CheckResult:
    cfg = montecarlo.ExperimentConfig(
        trials=2, pool_size=30, beams_per_satellite=3,
        snr_points_db=(21.0,), master_seed=99,
        scenarios=(COORDINATED, INDEPENDENT), algorithms=("siua", "random"))
    a = montecarlo.run_experiment(cfg)
    b = montecarlo.run_experiment(cfg)
    same = a.rows == b.rows
    return CheckResult("determinism", same,
                       "identical summaries on rerun" if same
                       else "summaries differ between reruns")


ALL_CHECKS = (
    check_gain_boresight,
    check_gain_half_power,
    check_boresight_snr,
    check_zf_residuals,
    check_solver_kkt,
    check_solver_grid,
    check_siua_exhaustive,
    check_determinism,
)


def run_all(out=print) -> bool:
    ok = True
    for fn in ALL_CHECKS:
        res = fn()
        ok &= res.passed
        out(f"{'PASS' if res.passed else 'FAIL'}  {res.name}: {res.detail}")
    return ok
