"""Zero-forcing precoding by channel (pseudo)inversion.

The right inverse W = H^T (H H^T)^-1 reduces to plain inversion for square
channels and serves partially filled user sets during scheduling.
"""

from dataclasses import dataclass

import numpy as np

COND_LIMIT = 1e12


class SingularChannelError(np.linalg.LinAlgError):
    """Served-user channel too ill-conditioned to invert."""


@dataclass
class PrecodingMatrix:
    """N x S precoder; column k beamforms toward served user k."""

    entries: np.ndarray
    satellite_id: int = 0
    served_user_ids: tuple = ()

    @property
    def n_served(self) -> int:
        return self.entries.shape[1]


@dataclass
class AntennaLoadMatrix:
    """entries[j, k] = W[j, k]^2: power antenna j spends on user k's beam."""

    entries: np.ndarray


def zf_precoder(h_served: np.ndarray, satellite_id: int = 0,
                served_user_ids=()) -> PrecodingMatrix:
    """Right-inverse ZF precoder of the S x N served-channel rows.

    Raises SingularChannelError when the rows are dependent (condition number
    above 1e12); degenerate user drops surface explicitly instead of being
    regularized away.
    """
    h = np.atleast_2d(np.asarray(h_served, dtype=float))
    s, n = h.shape
    if s > n:
        raise ValueError(f"cannot serve {s} users with {n} antennas")
    if not np.all(np.isfinite(h)):
        raise ValueError("channel rows must be finite")
    sv = np.linalg.svd(h, compute_uv=False)
    if sv[-1] <= 0 or sv[0] / sv[-1] > COND_LIMIT:
        raise SingularChannelError(
            f"served channel condition number exceeds {COND_LIMIT:g}")
    gram = h @ h.T
    w = np.linalg.solve(gram, h).T
    return PrecodingMatrix(entries=w, satellite_id=satellite_id,
                           served_user_ids=tuple(served_user_ids))


def antenna_load(w: PrecodingMatrix) -> AntennaLoadMatrix:
    return AntennaLoadMatrix(entries=w.entries**2)


def effective_channel_gains(h_served: np.ndarray,
                            w: PrecodingMatrix) -> np.ndarray:
    """|h_k . w_k|^2 per served user; all ones under channel inversion."""
    h = np.atleast_2d(np.asarray(h_served, dtype=float))
    diag = np.einsum("kn,nk->k", h, w.entries)
    return diag**2
