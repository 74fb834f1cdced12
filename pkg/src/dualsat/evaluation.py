"""End-to-end sum rates of the four coexistence scenarios.

Rates are per Hz of the total band, sum_k log2(1 + SINR_k). Under channel
inversion the useful term of user k is its allocated power; the coordinated
and independent scenarios add the other satellite's precoded streams as
interference, full cooperation inverts the joint channel with no residual
interference, and frequency splitting halves the band (and the noise each
satellite sees) in exchange for a 1/2 spectral prefactor.
"""

from dataclasses import dataclass

import numpy as np

from .power_alloc import solve_pac
from .precoding import antenna_load, zf_precoder
from .scheduling import random_alloc

FULL_COOPERATION = "full_cooperation"
COORDINATED = "coordinated"
INDEPENDENT = "independent"
FREQUENCY_SPLIT = "frequency_split"


@dataclass
class ScenarioResult:
    scenario: str
    per_user_sinr: np.ndarray
    sum_rate: float
    per_satellite_rates: tuple


def _rates(sinr):
    return np.log2(1.0 + np.asarray(sinr, dtype=float))


def _cross_interference(rows_toward_other, w_other, p_other):
    """sum_j p_j |h_k,other . w_j|^2 for each victim row."""
    x = np.atleast_2d(rows_toward_other) @ w_other.entries
    return (x * x) @ p_other


def coordinated_sum_rate(s1, s2, h1_pool, h2_pool, w1, w2, p1, p2,
                         scenario: str = COORDINATED) -> ScenarioResult:
    """Eq.-(7)-style rates: per-satellite ZF with cross-satellite terms.

    Useful power of user k in s1 is p1_k |h_k1 . w_k1|^2 (equal to p1_k under
    inversion), its interference 1 + sum_j p2_j |h_k2 . w_j2|^2; symmetric
    for s2.
    """
    h1_sel = h1_pool[s1]
    h2_sel = h2_pool[s2]
    sig1 = p1 * np.einsum("kn,nk->k", h1_sel, w1.entries) ** 2
    sig2 = p2 * np.einsum("kn,nk->k", h2_sel, w2.entries) ** 2
    int1 = _cross_interference(h2_pool[s1], w2, p2)
    int2 = _cross_interference(h1_pool[s2], w1, p1)
    sinr = np.concatenate([sig1 / (1.0 + int1), sig2 / (1.0 + int2)])
    r = _rates(sinr)
    n1 = len(s1)
    return ScenarioResult(scenario=scenario, per_user_sinr=sinr,
                          sum_rate=float(r.sum()),
                          per_satellite_rates=(float(r[:n1].sum()),
                                               float(r[n1:].sum())))


def full_coop_sum_rate(selected, h_tot_pool, p_vec,
                       tol: float = 1e-6) -> ScenarioResult:
    """Joint ZF over all feeds of both satellites, no residual interference.

    Users are not owned by either satellite here; per_satellite_rates is the
    positional split of the selection list into halves.
    """
    h = h_tot_pool[selected]
    if h.shape[0] != h.shape[1]:
        raise ValueError("full cooperation serves exactly one user per feed")
    w = zf_precoder(h)
    alloc = solve_pac(antenna_load(w).entries, p_vec, tol=tol)
    sinr = alloc.p
    r = _rates(sinr)
    half = len(selected) // 2
    return ScenarioResult(scenario=FULL_COOPERATION, per_user_sinr=sinr,
                          sum_rate=float(r.sum()),
                          per_satellite_rates=(float(r[:half].sum()),
                                               float(r[half:].sum())))


def freq_split_sum_rate(s1, s2, h1_pool, h2_pool, w1, w2, p_vec,
                        tol: float = 1e-6) -> ScenarioResult:
    """Half band per satellite: SINR doubles, 1/2 spectral prefactor.

    With fixed per-antenna power and halved noise bandwidth the effective
    per-user SINR is q = 2p; substituting q into the power program turns the
    budget into 2 P_vec, which is re-optimized per satellite.
    """
    q1 = solve_pac(antenna_load(w1).entries, 2.0 * np.asarray(p_vec, float),
                   tol=tol).p
    q2 = solve_pac(antenna_load(w2).entries, 2.0 * np.asarray(p_vec, float),
                   tol=tol).p
    sinr = np.concatenate([q1, q2])
    r = 0.5 * _rates(sinr)
    n1 = len(s1)
    return ScenarioResult(scenario=FREQUENCY_SPLIT, per_user_sinr=sinr,
                          sum_rate=float(r.sum()),
                          per_satellite_rates=(float(r[:n1].sum()),
                                               float(r[n1:].sum())))


def independent_sum_rate(pool_ids, h1_pool, h2_pool, p_vec, rng_seed,
                         m1=None, m2=None, tol: float = 1e-6
                         ) -> ScenarioResult:
    """Non-cooperative baseline: random disjoint sets, full-reuse rates."""
    m1 = h1_pool.shape[1] if m1 is None else m1
    m2 = h2_pool.shape[1] if m2 is None else m2
    s1, s2 = random_alloc(pool_ids, m1, m2, rng_seed)
    w1 = zf_precoder(h1_pool[s1], satellite_id=1, served_user_ids=s1)
    w2 = zf_precoder(h2_pool[s2], satellite_id=2, served_user_ids=s2)
    p1 = solve_pac(antenna_load(w1).entries, p_vec, tol=tol).p
    p2 = solve_pac(antenna_load(w2).entries, p_vec, tol=tol).p
    res = coordinated_sum_rate(s1, s2, h1_pool, h2_pool, w1, w2, p1, p2,
                               scenario=INDEPENDENT)
    return res
