"""User selection and allocation across the two interfering satellites.

Three allocators share the channel-pool interface (rows aligned by user id):

* siua: greedy interference-aware allocation. Each iteration scores every
  unprocessed user for each satellite by the norm of its channel projected
  onto the orthogonal complement of that satellite's already-selected users,
  divided by the product of a received-interference proxy (quadratic form in
  the other satellite's current precoder) and an induced-interference proxy
  (product of the interference the augmented precoder would cause the other
  set's users); the larger of the two best scores wins its user a slot.
* sus: the same greedy projection metric without the interference terms,
  one satellite at a time.
* random_alloc: seeded uniform disjoint sets.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .precoding import PrecodingMatrix, SingularChannelError, zf_precoder

# Each interference factor (a quadratic form in the unweighted precoder,
# i.e. per unit transmit power) is floored at the noise-equivalent coupling:
# at the reference operating point a coupling of 10^(-snr_ref/10) produces
# interference equal to the noise, so factors far below that are physically
# indistinguishable from zero. Without the floor a single large "criminal"
# factor can be masked inside the product by many negligible ones, and
# sub-noise coupling differences tyrannize the ranking, both of which make
# the allocator pick strictly worse sets. factor_floor=0 recovers the raw
# product. The whole denominator additionally keeps a tiny clamp so scores
# stay finite when couplings are exactly zero; clamp events are counted.
FACTOR_FLOOR = 10.0 ** -2.1
DENOMINATOR_FLOOR = 1e-12
_LOG_DENOM_FLOOR = math.log(DENOMINATOR_FLOOR)


class SchedulingError(ValueError):
    """Pool too small or no allocatable candidate left."""


@dataclass
class SchedulingMetrics:
    """Per-candidate scores of one SIUA iteration (trace output)."""

    user_id: int
    g1k: np.ndarray = None
    g2k: np.ndarray = None
    ir1: float = np.nan
    ir2: float = np.nan
    ii1: float = np.nan
    ii2: float = np.nan
    mu1: float = -np.inf
    mu2: float = -np.inf


@dataclass
class AllocationState:
    """Evolving selection sets and per-satellite orthogonal bases."""

    s1: list = field(default_factory=list)
    s2: list = field(default_factory=list)
    t: list = field(default_factory=list)
    basis1: list = field(default_factory=list)
    basis2: list = field(default_factory=list)
    iter: int = 0
    clamp_count: int = 0
    trace: list = field(default_factory=list)


@dataclass
class _SideScores:
    """Raw per-candidate numbers for one satellite in one iteration."""

    log_mu: np.ndarray
    g: np.ndarray
    ir: np.ndarray
    log_ii: np.ndarray
    clamps: int


def project_channel(h: np.ndarray, basis) -> np.ndarray:
    """Component of h orthogonal to every basis vector.

    The basis vectors are pairwise orthogonal by construction, so sequential
    subtraction equals applying I - sum g'g/||g||^2 while rounding less.
    """
    g = np.asarray(h, dtype=float).copy()
    for v in basis:
        nv = v @ v
        if nv > 0:
            g -= (g @ v) / nv * v
    return g


def received_interference(h_other: np.ndarray, w_other) -> float:
    """h (W W^T) h^T against the other satellite's current precoder.

    Returns the neutral guard value 1.0 while the other satellite has no
    precoder yet (division by it then leaves the score untouched).
    """
    if w_other is None or w_other.entries.size == 0:
        return 1.0
    x = np.asarray(h_other, dtype=float) @ w_other.entries
    return float(x @ x)


def induced_interference(other_rows_toward_own,
                         w_with_candidate: PrecodingMatrix) -> float:
    """Product over the other set's users of h_l (W W^T) h_l^T.

    ``other_rows_toward_own`` holds those users' channels toward the
    candidate's own satellite; an empty set gives the empty product 1.0.
    """
    rows = np.atleast_2d(np.asarray(other_rows_toward_own, dtype=float))
    if rows.size == 0:
        return 1.0
    x = rows @ w_with_candidate.entries
    return float(np.prod(np.einsum("ij,ij->i", x, x)))


def _log_quadform_product(rows, w_entries, factor_floor) -> float:
    """log of prod_l max(||rows_l W||^2, floor); 0 for the empty product."""
    if rows.shape[0] == 0:
        return 0.0
    x = rows @ w_entries
    q = np.maximum(np.einsum("ij,ij->i", x, x), factor_floor)
    if np.any(q <= 0.0):
        return -np.inf
    return float(np.sum(np.log(q)))


def _seed_strongest(h1_pool, h2_pool):
    """Step 1: strongest channel norm toward each satellite.

    If one user wins both satellites it keeps the side where its norm is
    larger and the other side takes its own runner-up.
    """
    n1 = np.linalg.norm(h1_pool, axis=1)
    n2 = np.linalg.norm(h2_pool, axis=1)
    pi1 = int(np.argmax(n1))
    pi2 = int(np.argmax(n2))
    if pi1 == pi2:
        if n1[pi1] >= n2[pi2]:
            n2 = n2.copy()
            n2[pi1] = -np.inf
            pi2 = int(np.argmax(n2))
        else:
            n1 = n1.copy()
            n1[pi2] = -np.inf
            pi1 = int(np.argmax(n1))
    return pi1, pi2


def _side_scores(h_own, h_other, s_own, s_other, basis_own, w_other,
                 candidates, induced_over_unallocated,
                 factor_floor) -> _SideScores:
    """All candidates' scores for one satellite, log domain.

    Candidates whose augmented channel is singular score -inf and are
    effectively skipped.
    """
    cand = np.asarray(candidates)
    g_all = h_own[cand].copy()
    for v in basis_own:
        nv = v @ v
        if nv > 0:
            g_all -= np.outer((g_all @ v) / nv, v)
    g_norms = np.linalg.norm(g_all, axis=1)

    x = h_other[cand] @ w_other.entries
    ir = np.einsum("ij,ij->i", x, x)

    h_sel = h_own[s_own]
    rows_other = h_own[s_other]

    ir = np.maximum(ir, factor_floor)
    log_mu = np.full(cand.size, -np.inf)
    log_ii = np.full(cand.size, np.nan)
    clamps = 0
    for i, k in enumerate(candidates):
        if g_norms[i] <= 0.0:
            continue
        try:
            w_aug = zf_precoder(np.vstack([h_sel, h_own[k]]))
        except SingularChannelError:
            continue
        if induced_over_unallocated:
            rows = h_own[[l for l in candidates if l != k]]
        else:
            rows = rows_other
        log_ii[i] = _log_quadform_product(rows, w_aug.entries, factor_floor)
        log_ir = math.log(ir[i]) if ir[i] > 0.0 else -np.inf
        log_den = log_ir + log_ii[i]
        if log_den < _LOG_DENOM_FLOOR:
            log_den = _LOG_DENOM_FLOOR
            clamps += 1
        log_mu[i] = math.log(g_norms[i]) - log_den
    return _SideScores(log_mu=log_mu, g=g_all, ir=ir, log_ii=log_ii,
                       clamps=clamps)


def _argmax(log_mu) -> tuple:
    """First index of the maximum (candidate order is ascending user id)."""
    i = int(np.argmax(log_mu))
    return i, float(log_mu[i])


def _exp_sat(v: float) -> float:
    return math.exp(min(v, 700.0)) if np.isfinite(v) else 0.0


def run_siua(h1_pool, h2_pool, m1: int, m2: int,
             induced_over_unallocated: bool = False,
             factor_floor: float = FACTOR_FLOOR,
             keep_trace: bool = False) -> AllocationState:
    """Full SIUA run returning the final allocation state."""
    h1 = np.atleast_2d(np.asarray(h1_pool, dtype=float))
    h2 = np.atleast_2d(np.asarray(h2_pool, dtype=float))
    m = h1.shape[0]
    if h2.shape[0] != m:
        raise SchedulingError("channel pools must be row-aligned")
    if m < m1 + m2:
        raise SchedulingError(f"pool of {m} users cannot fill {m1}+{m2} slots")

    pi1, pi2 = _seed_strongest(h1, h2)
    st = AllocationState(s1=[pi1], s2=[pi2],
                         t=[k for k in range(m) if k not in (pi1, pi2)],
                         basis1=[h1[pi1].copy()], basis2=[h2[pi2].copy()],
                         iter=1)

    while len(st.s1) < m1 or len(st.s2) < m2:
        st.iter += 1
        if not st.t:
            raise SchedulingError("unprocessed pool exhausted")
        need1 = len(st.s1) < m1
        need2 = len(st.s2) < m2

        side1 = side2 = None
        if need1:
            w2 = zf_precoder(h2[st.s2])
            side1 = _side_scores(h1, h2, st.s1, st.s2, st.basis1, w2, st.t,
                                 induced_over_unallocated, factor_floor)
            st.clamp_count += side1.clamps
        if need2:
            w1 = zf_precoder(h1[st.s1])
            side2 = _side_scores(h2, h1, st.s2, st.s1, st.basis2, w1, st.t,
                                 induced_over_unallocated, factor_floor)
            st.clamp_count += side2.clamps

        i1, v1 = _argmax(side1.log_mu) if need1 else (None, -np.inf)
        i2, v2 = _argmax(side2.log_mu) if need2 else (None, -np.inf)
        if v1 == -np.inf and v2 == -np.inf:
            raise SchedulingError("all remaining candidates are singular")

        if keep_trace:
            snapshot = []
            for i, k in enumerate(st.t):
                mt = SchedulingMetrics(user_id=k)
                if side1 is not None:
                    mt.g1k = side1.g[i]
                    mt.ir1 = float(side1.ir[i])
                    mt.ii1 = _exp_sat(side1.log_ii[i])
                    mt.mu1 = _exp_sat(side1.log_mu[i])
                if side2 is not None:
                    mt.g2k = side2.g[i]
                    mt.ir2 = float(side2.ir[i])
                    mt.ii2 = _exp_sat(side2.log_ii[i])
                    mt.mu2 = _exp_sat(side2.log_mu[i])
                snapshot.append(mt)
            st.trace.append(snapshot)

        if need1 and (not need2 or v1 >= v2):
            k = st.t[i1]
            st.s1.append(k)
            st.basis1.append(side1.g[i1].copy())
        else:
            k = st.t[i2]
            st.s2.append(k)
            st.basis2.append(side2.g[i2].copy())
        st.t.remove(k)

    return st


def siua(h1_pool, h2_pool, m1: int, m2: int,
         induced_over_unallocated: bool = False,
         factor_floor: float = FACTOR_FLOOR):
    """(s1, s2) selected by the interference-aware greedy allocator."""
    st = run_siua(h1_pool, h2_pool, m1, m2, induced_over_unallocated,
                  factor_floor)
    return st.s1, st.s2


def sus(h_pool, m_cap: int, candidates=None) -> list:
    """Greedy max-projection selection toward a single satellite."""
    h = np.atleast_2d(np.asarray(h_pool, dtype=float))
    cand = list(range(h.shape[0])) if candidates is None else sorted(candidates)
    if len(cand) < m_cap:
        raise SchedulingError(f"pool of {len(cand)} cannot fill {m_cap} slots")
    selected = []
    g = h[cand].copy()
    cand = np.asarray(cand)
    alive = np.ones(cand.size, dtype=bool)
    for _ in range(m_cap):
        norms = np.where(alive, np.linalg.norm(g, axis=1), -np.inf)
        i = int(np.argmax(norms))
        selected.append(int(cand[i]))
        v = g[i].copy()
        nv = v @ v
        if nv > 0:
            g -= np.outer((g @ v) / nv, v)
        alive[i] = False
    return selected


def random_alloc(user_ids, m1: int, m2: int, rng_seed: int):
    """Seeded uniform disjoint sets of sizes (m1, m2)."""
    ids = list(user_ids)
    if len(ids) < m1 + m2:
        raise SchedulingError(f"pool of {len(ids)} cannot fill {m1}+{m2} slots")
    rng = np.random.default_rng(rng_seed)
    pick = rng.choice(len(ids), size=m1 + m2, replace=False)
    return [ids[i] for i in pick[:m1]], [ids[i] for i in pick[m1:]]
