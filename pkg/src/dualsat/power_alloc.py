"""Sum-rate power allocation under per-antenna power constraints.

Solves max sum_k log2(1 + p_k) s.t. B p <= P, p >= 0 where B is the
antenna-load matrix of a ZF precoder (so SINR_k = p_k). The solver is a
primal log-barrier Newton method (antenna loads from inverted channels can
span ten orders of magnitude, which first-order dual waterfilling cannot
survive); the recovered multipliers are then sharpened by Newton iterations
on the active-set KKT system so the certificates come out clean.
"""

from dataclasses import dataclass

import numpy as np

LN2 = float(np.log(2.0))

DEFAULT_TOL = 1e-6
MAX_ITER = 100_000
# powers below this are reported as exactly zero
P_FLOOR = 1e-9


class SolverFailure(RuntimeError):
    """Power solver exceeded its iteration cap; carries the residuals."""

    def __init__(self, msg, residuals=None):
        super().__init__(msg)
        self.residuals = residuals or {}


@dataclass
class PowerAllocation:
    """Per-user powers with the dual certificate of optimality."""

    p: np.ndarray
    multipliers: np.ndarray
    objective: float
    iterations: int


def _check_inputs(b, p_vec):
    b = np.atleast_2d(np.asarray(b, dtype=float))
    p_vec = np.asarray(p_vec, dtype=float)
    if b.ndim != 2 or p_vec.shape != (b.shape[0],):
        raise ValueError("B must be (N, S) with P_vec of length N")
    if np.any(b < 0):
        raise ValueError("antenna loads must be nonnegative")
    if np.any(~(b > 0).any(axis=0)):
        raise ValueError("every user must load at least one antenna")
    if np.any(p_vec <= 0):
        raise ValueError("per-antenna budgets must be positive")
    return b, p_vec


def solve_pac(b, p_vec, tol: float = DEFAULT_TOL,
              max_iter: int = MAX_ITER) -> PowerAllocation:
    """Optimal powers for max sum log2(1+p) s.t. B p <= P_vec, p >= 0.

    The returned objective is within tol (absolute, bps/Hz) of the optimum;
    the multipliers certify it through the KKT residuals, which are checked
    before returning.
    """
    b, p_vec = _check_inputs(b, p_vec)
    if not 0 < tol <= 1e-2:
        raise ValueError("tol must lie in (0, 1e-2]")
    n, s = b.shape

    # users whose feasible power cannot exceed the reporting floor are fixed
    # at zero; they contribute less than the tolerance and their huge antenna
    # loads would otherwise wreck the dual conditioning
    with np.errstate(divide="ignore"):
        caps = np.min(np.where(b > 0, p_vec[:, None] / np.where(b > 0, b, 1.0),
                               np.inf), axis=0)
    keep = caps > P_FLOOR
    if not keep.any():
        return PowerAllocation(p=np.zeros(s), multipliers=np.zeros(n),
                               objective=0.0, iterations=0)
    bk = b[:, keep]

    last_exc = None
    for push_mu in (False, True):
        p_red, lam, it = _barrier_descent(bk, p_vec, tol, max_iter, push_mu)
        p_red, lam = _polish(bk, p_vec, p_red, lam)
        p = np.zeros(s)
        p[keep] = np.where(p_red < P_FLOOR, 0.0, p_red)
        gap = float(lam @ (p_vec - b @ p))
        try:
            if not gap <= 0.9 * tol:
                raise SolverFailure(
                    "power allocation did not reach the optimality tolerance",
                    residuals={"violation": float(np.max(b @ p - p_vec)),
                               "gap": gap})
            _check_kkt(b, p_vec, p, lam)
        except SolverFailure as exc:
            last_exc = exc
            continue
        objective = float(np.sum(np.log2(1.0 + p)))
        return PowerAllocation(p=p, multipliers=lam, objective=objective,
                               iterations=it)
    raise last_exc


def _barrier_descent(b, p_vec, tol, max_iter, push_mu=False):
    """Log-barrier Newton descent on the primal powers.

    Minimizes -sum ln(1+p) - mu [sum ln(P - Bp) + sum ln(p)] over strictly
    feasible p for a decreasing barrier weight mu; iterates stay strictly
    inside the constraint polytope, so there are no waterfilling kinks to
    stumble over and conditioning of the loads does not matter (Newton is
    affine invariant). Multipliers are recovered as mu / slack and sharpened
    afterwards by the active-set polish.
    """
    n, s = b.shape
    c0 = equal_power_scale(b, p_vec)
    p = np.full(s, 0.5 * c0)
    mu = 1.0

    def centered_enough(p, mu):
        # the central-path KKT residuals are known in closed form: the duality
        # gap is n*mu/ln2 and each complementarity product is mu/ln2. The
        # supported users' stationarity residual mu/(p_k ln2) is normally
        # left to the active-set polish (chasing it with mu alone hits the
        # float64 slack-cancellation wall when caps span many scales), but
        # the push_mu fallback makes the barrier do it anyway for instances
        # whose faces the polish cannot identify.
        if n * mu / LN2 > 0.3 * tol:
            return False
        if mu / LN2 > 0.3e-5 * float(np.min(p_vec)):
            return False
        if not push_mu:
            return True
        sup = p > P_FLOOR
        if not sup.any():
            return True
        a = 1.0 / ((1.0 + p[sup]) * LN2)
        return bool(np.all(mu / (p[sup] * LN2)
                           <= 3e-6 * np.maximum(1.0, a)))

    it = 0
    while it < max_iter:
        for _ in range(60):
            it += 1
            slack = p_vec - b @ p
            inv_slack = 1.0 / slack
            grad = (-1.0 / (1.0 + p) + mu * (b.T @ inv_slack) - mu / p)
            # scale-free centering criterion: the gradient residual relative
            # to the objective-term magnitude bounds the stationarity error
            # of the recovered multipliers (a decrement test is blind to it
            # when tiny slacks blow up the Hessian scale)
            rel_grad = float(np.max(np.abs(grad)
                                    / (1.0 / (1.0 + p) + mu / p)))
            if rel_grad <= 1e-9:
                break
            hess = (np.diag(1.0 / (1.0 + p) ** 2 + mu / p**2)
                    + mu * (b.T * inv_slack**2) @ b)
            try:
                d = np.linalg.solve(hess, -grad)
            except np.linalg.LinAlgError:
                d = -grad
            if float(-grad @ d) <= 0.0:
                break

            # stay strictly inside the polytope, then Armijo
            t = 1.0
            bd = b @ d
            hit = bd > 0
            if hit.any():
                t = min(t, 0.99 * float(np.min(slack[hit] / bd[hit])))
            neg = d < 0
            if neg.any():
                t = min(t, 0.99 * float(np.min(p[neg] / -d[neg])))
            f0 = _barrier_value(b, p_vec, p, mu)
            accepted = False
            for _ in range(60):
                p_new = p + t * d
                f_new = _barrier_value(b, p_vec, p_new, mu)
                if f_new <= f0 + 1e-4 * t * float(grad @ d) + 1e-12 * abs(f0):
                    accepted = True
                    break
                t *= 0.5
            if not accepted:
                break
            p = p_new
        if centered_enough(p, mu):
            break
        if mu <= 1e-18:
            raise SolverFailure(
                "barrier could not reach the certificate tolerances",
                residuals={"mu": mu})
        mu = mu / 30.0
    else:
        raise SolverFailure("barrier descent exceeded the iteration cap",
                            residuals={"mu": mu})

    # the barrier runs in nats; the certificates are for the bit objective
    lam = mu * (1.0 / (p_vec - b @ p)) / LN2
    return p, lam, it


def _barrier_value(b, p_vec, p, mu):
    slack = p_vec - b @ p
    if np.any(slack <= 0) or np.any(p <= 0):
        return np.inf
    return float(-np.sum(np.log1p(p))
                 - mu * (np.sum(np.log(slack)) + np.sum(np.log(p))))


def _kkt_newton(b, p_vec, sup, act, p0, lam0, rounds: int = 40):
    """Newton solve of the equality KKT system on fixed (sup, act) sets.

    Equations: 1/((1+p_k) ln2) = (B^T lam)_k for supported users k and
    (B p)_j = P_j for active constraints j. Returns (p_sup, lam_act) or None
    when the system is singular or stalls.
    """
    bs = b[np.ix_(act, sup)]
    pk = np.maximum(p0[sup], 0.0).copy()
    lj = np.maximum(lam0[act], 0.0).copy()
    na, ns = bs.shape
    p_scale = np.maximum(p_vec[act], 1.0)

    def residuals(pk, lj):
        r1 = 1.0 / ((1.0 + pk) * LN2) - bs.T @ lj
        r2 = (bs @ pk - p_vec[act]) / p_scale
        return r1, r2

    r1, r2 = residuals(pk, lj)
    res = max(np.abs(r1).max(), np.abs(r2).max())
    for _ in range(rounds):
        if np.abs(r1).max() < 1e-10 and np.abs(r2).max() < 1e-11:
            return pk, lj
        jac = np.zeros((ns + na, ns + na))
        jac[:ns, :ns] = np.diag(-1.0 / ((1.0 + pk) ** 2 * LN2))
        jac[:ns, ns:] = -bs.T
        jac[ns:, :ns] = bs * (1.0 / p_scale)[:, None]
        try:
            delta = np.linalg.solve(jac, -np.concatenate([r1, r2]))
        except np.linalg.LinAlgError:
            return None
        # damped step: keep the residual norm decreasing
        t = 1.0
        for _ in range(30):
            pk_n = pk + t * delta[:ns]
            lj_n = lj + t * delta[ns:]
            if np.all(np.isfinite(pk_n)) and np.all(pk_n > -0.9):
                r1_n, r2_n = residuals(pk_n, lj_n)
                res_n = max(np.abs(r1_n).max(), np.abs(r2_n).max())
                if res_n <= res * (1.0 - 1e-4 * t) + 1e-15:
                    break
            t *= 0.5
        else:
            return None
        pk, lj, r1, r2, res = pk_n, lj_n, r1_n, r2_n, res_n
    return None


def _polish(b, p_vec, p, lam):
    """Active-set refinement of the KKT point seeded by the barrier solve.

    Repeatedly solves the equality KKT system, dropping users or constraints
    whose variables turn negative and adding violated constraints or
    strictly attractive users, until a consistent face is found. Falls back
    to the unpolished iterate if no face settles within the loop budget.
    """
    n, s = b.shape
    slack0 = p_vec - b @ p
    sup = p > P_FLOOR
    if not sup.any():
        return p, lam
    # symmetric complementarity watershed: on the central path
    # lam_j * slack_j = mu, so in normalized units a row is binding when its
    # multiplier outweighs its slack
    act = (lam * p_vec > slack0 / p_vec) & (lam > 0)
    # per-user cap structure: rows ordered by how hard they cap the user
    with np.errstate(divide="ignore"):
        cap_ratio = np.where(b > 0, p_vec[:, None] / np.where(b > 0, b, 1.0),
                             np.inf)
    # a supported user sitting at its cap needs that cap's row active
    caps = cap_ratio.min(axis=0)
    for k in np.flatnonzero(sup & (p >= 0.99 * caps)):
        act[int(np.argmin(cap_ratio[:, k]))] = True

    def expand_act(act):
        # activate the strongest inactive cap row of any supported user
        for k in np.flatnonzero(sup):
            order = np.argsort(cap_ratio[:, k])
            for j in order:
                if not np.isfinite(cap_ratio[j, k]):
                    break
                if not act[j]:
                    act[j] = True
                    return True
        return False

    tried_cap = set()
    for _ in range(3 * (n + s)):
        if not act.any() or not sup.any():
            return p, lam
        sol = _kkt_newton(b, p_vec, sup, act, p, lam)
        if sol is None:
            # inconsistent face, usually more pinned users than binding
            # rows; bring in the next cap row and retry
            if expand_act(act):
                continue
            return p, lam
        pk, lj = sol
        if np.any(pk < -1e-12):
            # a user forced negative is usually missing its cap row; try
            # that once, then conclude the user really is a zero user
            idx = np.flatnonzero(sup)
            k = idx[int(np.argmin(pk))]
            j = int(np.argmin(cap_ratio[:, k]))
            if not act[j] and k not in tried_cap:
                act[j] = True
                tried_cap.add(k)
            else:
                sup[k] = False
            continue
        if np.any(lj < -1e-12):
            idx = np.flatnonzero(act)
            act[idx[int(np.argmin(lj))]] = False
            continue
        p_new = np.zeros(s)
        p_new[sup] = np.maximum(pk, 0.0)
        lam_new = np.zeros(n)
        lam_new[act] = np.maximum(lj, 0.0)
        slack = p_vec - b @ p_new
        viol = slack / p_vec
        if np.min(viol) < -1e-12:
            j = int(np.argmin(viol))
            if act[j]:  # numerically inconsistent face
                return p, lam
            act[j] = True
            continue
        a = b.T @ lam_new
        attract = ~sup & (a < 1.0 / LN2 - 1e-9)
        if attract.any():
            k = int(np.argmax((1.0 / LN2 - a) * attract))
            if sup[k]:
                return p, lam
            sup[k] = True
            continue
        return p_new, lam_new
    return p, lam


def _check_kkt(b, p_vec, p, lam):
    """Raise on any violated KKT residual; success exits are certified."""
    slack = p_vec - b @ p
    if np.min(slack) < -1e-6:
        raise SolverFailure("feasibility residual too large",
                            residuals={"violation": float(-np.min(slack))})
    a = b.T @ lam
    sup = p > P_FLOOR
    grad = 1.0 / ((1.0 + p[sup]) * LN2)
    stat = np.abs(grad - a[sup])
    bound = 1e-5 * np.maximum(1.0, a[sup])
    if np.any(stat > bound):
        raise SolverFailure("stationarity residual too large",
                            residuals={"stationarity": float(stat.max())})
    cs = lam * slack
    if np.any(cs > 1e-5 * p_vec):
        raise SolverFailure("complementary slackness residual too large",
                            residuals={"comp_slack": float(cs.max())})


def equal_power_scale(b, p_vec) -> float:
    """Largest c with B (c * 1) <= P_vec."""
    b, p_vec = _check_inputs(b, p_vec)
    row_sums = b.sum(axis=1)
    used = row_sums > 0
    return float(np.min(p_vec[used] / row_sums[used]))


def equal_power_alloc(b, p_vec) -> PowerAllocation:
    """Equal powers p = c * 1 filling the tightest antenna exactly."""
    b, p_vec = _check_inputs(b, p_vec)
    c = equal_power_scale(b, p_vec)
    p = np.full(b.shape[1], c)
    objective = float(np.sum(np.log2(1.0 + p)))
    return PowerAllocation(p=p, multipliers=np.zeros(b.shape[0]),
                           objective=objective, iterations=0)
