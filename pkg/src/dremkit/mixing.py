"""Mixing step: adjugate/determinant manipulation that decouples the extended
matrix regression Y = Phi theta into m scalar regressions

    calY_i = Delta * theta_i,   Delta = det(Phi),   calY = adj(Phi) Y,

plus the transient-improving feedforward gain.

The adjugate satisfies adj(M) M = M adj(M) = det(M) I for every square M,
including singular ones, which is why it is computed by cofactors (m <= 4)
or the Faddeev-LeVerrier recursion (m > 4) and never as inverse times
determinant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signals import Trajectory


def _det2(M: np.ndarray) -> float:
    return M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]


def _det3(M: np.ndarray) -> float:
    return (
        M[0, 0] * (M[1, 1] * M[2, 2] - M[1, 2] * M[2, 1])
        - M[0, 1] * (M[1, 0] * M[2, 2] - M[1, 2] * M[2, 0])
        + M[0, 2] * (M[1, 0] * M[2, 1] - M[1, 1] * M[2, 0])
    )


def determinant(M: np.ndarray) -> float:
    """Determinant by direct expansion for m <= 4, LU with partial pivoting
    (LAPACK) above that."""
    M = np.asarray(M, dtype=float)
    m = _square_dim(M)
    if m == 1:
        return float(M[0, 0])
    if m == 2:
        return float(_det2(M))
    if m == 3:
        return float(_det3(M))
    if m == 4:
        total = 0.0
        sign = 1.0
        for j in range(4):
            minor = np.delete(M[1:], j, axis=1)
            total += sign * M[0, j] * _det3(minor)
            sign = -sign
        return float(total)
    return float(np.linalg.det(M))


def _square_dim(M: np.ndarray) -> int:
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    return M.shape[0]


def _adjugate_cofactor(M: np.ndarray) -> np.ndarray:
    m = M.shape[0]
    cof = np.empty_like(M)
    for i in range(m):
        for j in range(m):
            minor = np.delete(np.delete(M, i, axis=0), j, axis=1)
            cof[i, j] = (-1.0) ** (i + j) * determinant(minor)
    return cof.T


def _adjugate_faddeev_leverrier(M: np.ndarray) -> np.ndarray:
    # M_1 = I, c_1 = -tr(A); M_k = A M_{k-1} + c_{k-1} I; c_k = -tr(A M_k)/k
    # adj(A) = (-1)^(n-1) M_n
    n = M.shape[0]
    Mk = np.eye(n)
    ck = -np.trace(M)
    for k in range(2, n + 1):
        Mk = M @ Mk + ck * np.eye(n)
        ck = -np.trace(M @ Mk) / k
    return (-1.0) ** (n - 1) * Mk


def adjugate(M: np.ndarray) -> np.ndarray:
    """Adjugate (transposed cofactor) matrix; defined for all square M.

    For m = 1 the adjugate is [1] so that adj(M) M = det(M) I still holds.
    """
    M = np.asarray(M, dtype=float)
    m = _square_dim(M)
    if m == 1:
        return np.array([[1.0]])
    if m == 2:
        return np.array([[M[1, 1], -M[0, 1]], [-M[1, 0], M[0, 0]]])
    if m <= 4:
        return _adjugate_cofactor(M)
    return _adjugate_faddeev_leverrier(M)


def _adj_det_batch(Phis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Adjugates and determinants over the leading sample axis.

    The m = 1 and m = 2 cases are vectorized with the same formulas as the
    per-matrix routines, so both paths agree bit for bit.
    """
    n, m, _ = Phis.shape
    if m == 1:
        return np.ones_like(Phis), Phis[:, 0, 0].copy()
    if m == 2:
        adj = np.empty_like(Phis)
        adj[:, 0, 0] = Phis[:, 1, 1]
        adj[:, 0, 1] = -Phis[:, 0, 1]
        adj[:, 1, 0] = -Phis[:, 1, 0]
        adj[:, 1, 1] = Phis[:, 0, 0]
        det = Phis[:, 0, 0] * Phis[:, 1, 1] - Phis[:, 0, 1] * Phis[:, 1, 0]
        return adj, det
    adj = np.empty_like(Phis)
    det = np.empty(n)
    for k in range(n):
        adj[k] = adjugate(Phis[k])
        det[k] = determinant(Phis[k])
    return adj, det


@dataclass(frozen=True, eq=False)
class MixedRegression:
    """Per-sample mixed data: calY = adj(Phi) Y and Delta = det(Phi)."""

    calY: Trajectory
    Delta: Trajectory

    def __post_init__(self) -> None:
        if not self.calY.is_vector or not self.Delta.is_scalar:
            raise ValueError("calY must be a vector trajectory and Delta scalar")
        if self.calY.grid != self.Delta.grid or self.calY.kind != self.Delta.kind:
            raise ValueError("calY and Delta must share one grid and kind")

    @property
    def dim(self) -> int:
        return self.calY.dim


def mix(Y: Trajectory, Phi: Trajectory) -> MixedRegression:
    """Decouple the matrix regression sample by sample.

    When Y = Phi theta holds exactly, each component satisfies
    calY_i = Delta * theta_i.
    """
    if not Y.is_vector or not Phi.is_matrix:
        raise ValueError("mix expects vector Y and matrix Phi")
    if Y.grid != Phi.grid or Y.kind != Phi.kind:
        raise ValueError("Y and Phi must share one grid and kind")
    if Y.dim != Phi.values.shape[1]:
        raise ValueError("Y and Phi dimensions disagree")
    adj, det = _adj_det_batch(Phi.values)
    calY = np.einsum("kij,kj->ki", adj, Y.values)
    return MixedRegression(
        calY=Trajectory(Y.grid, calY, Y.kind),
        Delta=Trajectory(Y.grid, det, Y.kind),
    )


def feedforward_gain(Phi0: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Feedthrough vector d = adj(Phi0)^T phi.

    By the matrix determinant lemma det(A + u v^T) = det A + v^T adj(A) u,
    this choice gives

        det(Phi0 + d phi^T) = det(Phi0) + |adj(Phi0)^T phi|^2 >= det(Phi0),

    a guaranteed determinant boost; the untransposed variant adj(Phi0) phi
    makes the increment phi^T adj(Phi0)^2 phi, which is sign-indefinite.
    """
    Phi0 = np.asarray(Phi0, dtype=float)
    phi = np.asarray(phi, dtype=float)
    m = _square_dim(Phi0)
    if phi.shape != (m,):
        raise ValueError(f"phi must have shape ({m},)")
    return adjugate(Phi0).T @ phi


def extend_with_feedforward(
    bank0, y: Trajectory, phi: Trajectory
) -> tuple[Trajectory, Trajectory]:
    """Extended pair with the determinant-boosting feedthrough.

    ``bank0`` defines the zero-feedthrough part (Phi0, Y0); the per-sample
    gain d(t) then acts identically on y and on phi^T, preserving
    Y = Phi theta:

        Phi = Phi0 + d phi^T,   Y = Y0 + d y.
    """
    from .operators import extend

    for ch in bank0.channels:
        if not ch.has_zero_feedthrough():
            raise ValueError("bank0 must have zero feedthrough on every channel")
    Y0, Phi0 = extend(bank0, y, phi)
    adj, _ = _adj_det_batch(Phi0.values)
    d = np.einsum("kji,kj->ki", adj, phi.values)  # adj^T phi per sample
    Phi = Phi0.values + np.einsum("ki,kj->kij", d, phi.values)
    Yv = Y0.values + d * y.values[:, None]
    return Trajectory(y.grid, Yv, y.kind), Trajectory(y.grid, Phi, y.kind)
