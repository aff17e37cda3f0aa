"""Dense real kernels for the solver.

Ordered real generalized Schur (QZ) decomposition of the pencil
``(Gamma0, Gamma1)``, SVD-based pseudoinverse with a kernel basis, and the
discrete Lyapunov solve ``X = A' X A + W``.

Conventions
-----------
``ordered_real_qz`` returns ``Q`` and ``Z`` such that ``Q @ Gamma0 @ Z`` and
``Q @ Gamma1 @ Z`` are quasi upper triangular, i.e. ``Q`` is the transpose of
the left factor returned by :func:`scipy.linalg.ordqz`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import ReorderFailure, SingularPencil, UnitRoot, UnstableMatrix

Array = np.ndarray

DEFAULT_UNIT_TOL = 1e-8
DEFAULT_RANK_TOL = 1e-10

_SINGULAR_PROBES = 5
_SINGULAR_RADIUS = 1.1
_SINGULAR_SEED = 20240607


@dataclass(frozen=True)
class OrderedQz:
    """Real generalized Schur form with the stable block leading.

    Attributes
    ----------
    Q, Z : (n, n) ndarray
        Orthogonal factors, ``Q @ Gamma0 @ Z = Lambda``, ``Q @ Gamma1 @ Z = Omega``.
    Lambda, Omega : (n, n) ndarray
        Quasi upper triangular factors.
    n_stable : int
        Size of the leading block, whose recursion roots lie inside the unit
        circle (pencil zeros outside it).
    recursion_moduli : (n,) ndarray
        ``|beta_i / alpha_i|`` for each diagonal position after reordering;
        ``inf`` marks a zero ``alpha``.
    """

    Q: Array
    Z: Array
    Lambda: Array
    Omega: Array
    n_stable: int
    recursion_moduli: Array

    @property
    def n(self) -> int:
        return self.Lambda.shape[0]

    @property
    def Q1(self) -> Array:
        return self.Q[: self.n_stable]

    @property
    def Q2(self) -> Array:
        return self.Q[self.n_stable :]

    def blocks(self):
        """Return ``(Lambda11, Lambda12, Lambda22, Omega11, Omega12, Omega22)``."""
        s = self.n_stable
        L, O = self.Lambda, self.Omega
        return L[:s, :s], L[:s, s:], L[s:, s:], O[:s, :s], O[:s, s:], O[s:, s:]

    def pencil_zeros(self) -> Array:
        """Zeros of ``det(Gamma0 + Gamma1 x)``, i.e. ``x = -alpha/beta``.

        Infinite zeros (``beta == 0``) are reported as ``inf``.
        """
        alpha, beta = _diag_pairs(self.Lambda, self.Omega)
        with np.errstate(divide="ignore", invalid="ignore"):
            x = -alpha / beta
        return np.where(beta == 0, np.inf, x)


@dataclass(frozen=True)
class KernelData:
    """Pseudoinverse, numerical rank and orthonormal kernel basis of a matrix."""

    pinv: Array
    rank: int
    kernel_basis: Array
    singular_values: Array


def _diag_pairs(AA: Array, BB: Array) -> tuple[Array, Array]:
    """Generalized eigenvalue pairs ``(alpha, beta)`` of a real QZ form."""
    n = AA.shape[0]
    alpha = np.zeros(n, dtype=complex)
    beta = np.zeros(n, dtype=complex)
    i = 0
    while i < n:
        if i + 1 < n and AA[i + 1, i] != 0.0:
            a = AA[i : i + 2, i : i + 2]
            b = BB[i : i + 2, i : i + 2]
            ab = sla.eigvals(a, b, homogeneous_eigvals=True)
            alpha[i : i + 2] = ab[0]
            beta[i : i + 2] = ab[1]
            i += 2
        else:
            alpha[i] = AA[i, i]
            beta[i] = BB[i, i]
            i += 1
    return alpha, beta


def _check_square_pair(G0: Array, G1: Array) -> tuple[Array, Array]:
    G0 = np.asarray(G0, dtype=float)
    G1 = np.asarray(G1, dtype=float)
    if G0.ndim != 2 or G0.shape[0] != G0.shape[1] or G0.shape != G1.shape:
        raise ValueError(f"Gamma0 and Gamma1 must be square and of equal shape, got {G0.shape} and {G1.shape}")
    if not (np.all(np.isfinite(G0)) and np.all(np.isfinite(G1))):
        raise ValueError("Gamma0 and Gamma1 must have finite entries")
    return G0, G1


def is_singular_pencil(G0: Array, G1: Array, rank_tol: float = DEFAULT_RANK_TOL) -> bool:
    """Probe ``Gamma0 + Gamma1 x`` for rank deficiency at fixed random points.

    The points lie on the circle of radius 1.1 with angles drawn from a
    fixed-seed generator, so the outcome is deterministic.
    """
    n = G0.shape[0]
    if n == 0:
        return False
    rng = np.random.default_rng(_SINGULAR_SEED)
    angles = rng.uniform(0.0, 2.0 * np.pi, _SINGULAR_PROBES)
    scale = max(np.linalg.norm(G0, 2), np.linalg.norm(G1, 2), np.finfo(float).tiny)
    for x in _SINGULAR_RADIUS * np.exp(1j * angles):
        s = np.linalg.svd(G0 + G1 * x, compute_uv=False)
        if s[-1] > rank_tol * scale:
            return False
    return True


def ordered_real_qz(G0, G1, unit_tol: float = DEFAULT_UNIT_TOL) -> OrderedQz:
    """Real QZ decomposition of ``(Gamma0, Gamma1)`` with stable roots first.

    A diagonal block is stable when its recursion root ``beta/alpha`` (the
    eigenvalue of ``Lambda_ii^{-1} Omega_ii``) has modulus below
    ``1 - unit_tol``.

    Raises
    ------
    SingularPencil
        ``det(Gamma0 + Gamma1 x)`` is identically zero.
    UnitRoot
        Some root has modulus within ``unit_tol`` of one.
    ReorderFailure
        LAPACK could not reorder the Schur form, or the reordered form fails
        the post-check.
    """
    G0, G1 = _check_square_pair(G0, G1)
    n = G0.shape[0]
    if n == 0:
        e = np.zeros((0, 0))
        return OrderedQz(e, e, e, e, 0, np.zeros(0))
    if is_singular_pencil(G0, G1):
        raise SingularPencil("det(Gamma0 + Gamma1 x) vanishes identically")

    def stable(alpha, beta):
        return np.abs(beta) < (1.0 - unit_tol) * np.abs(alpha)

    try:
        AA, BB, _, _, Qs, Zs = sla.ordqz(G0, G1, sort=stable, output="real")
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise ReorderFailure(str(exc)) from exc

    alpha, beta = _diag_pairs(AA, BB)
    moduli = _recursion_moduli(alpha, beta)
    near = np.abs(moduli - 1.0) <= unit_tol
    if np.any(near):
        zeros = -1.0 / moduli[near]
        raise UnitRoot(f"pencil has zeros on the unit circle (|x| = {np.abs(zeros)})")

    is_stable = moduli < 1.0 - unit_tol
    n_stable = int(is_stable.sum())
    if not np.all(is_stable[:n_stable]):
        raise ReorderFailure("stable roots are not contiguous after reordering")
    # a 2x2 block must not straddle the partition
    if 0 < n_stable < n and AA[n_stable, n_stable - 1] != 0.0:
        raise ReorderFailure("partition splits a 2x2 diagonal block")

    Q = Qs.T
    Lam = np.triu(AA, -1)
    Om = np.triu(BB, -1)
    if n_stable < n:
        Lam[n_stable:, :n_stable] = 0.0
        Om[n_stable:, :n_stable] = 0.0
    return OrderedQz(Q=Q, Z=Zs, Lambda=Lam, Omega=Om, n_stable=n_stable, recursion_moduli=moduli)


def _recursion_moduli(alpha: Array, beta: Array) -> Array:
    a = np.abs(alpha)
    b = np.abs(beta)
    with np.errstate(divide="ignore", invalid="ignore"):
        m = b / a
    return np.where(a == 0, np.inf, m)


def pseudoinverse_and_kernel(M, rank_tol: float = DEFAULT_RANK_TOL) -> KernelData:
    """Moore-Penrose pseudoinverse, numerical rank and kernel basis of ``M``.

    Singular values at or below ``rank_tol`` times the largest one are
    discarded. Kernel columns are right singular vectors, each flipped so its
    largest-magnitude entry is positive.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError("M must be a matrix")
    if not np.all(np.isfinite(M)):
        raise ValueError("M must have finite entries")
    p, q = M.shape
    if p == 0 or q == 0:
        return KernelData(np.zeros((q, p)), 0, np.eye(q), np.zeros(0))

    U, s, Vt = np.linalg.svd(M, full_matrices=True)
    r = int(np.sum(s > rank_tol * s[0])) if s[0] > 0 else 0
    pinv = (Vt[:r].T / s[:r]) @ U[:, :r].T
    K = Vt[r:].T.copy()
    for j in range(K.shape[1]):
        col = K[:, j]
        if col[np.argmax(np.abs(col))] < 0:
            K[:, j] = -col
    return KernelData(pinv=pinv, rank=r, kernel_basis=K, singular_values=s)


def spectral_radius(A) -> float:
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(A))))


def solve_discrete_lyapunov(A, W, unit_tol: float = DEFAULT_UNIT_TOL) -> Array:
    """Solve ``X = A' X A + W`` for stable ``A``.

    Returns the symmetrized solution ``sum_j (A')^j W A^j``.

    Raises
    ------
    UnstableMatrix
        Spectral radius of ``A`` is at least ``1 - unit_tol``.
    """
    A = np.asarray(A, dtype=float)
    W = np.asarray(W, dtype=float)
    if A.shape != W.shape or A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"A and W must be square of equal shape, got {A.shape}, {W.shape}")
    if A.shape[0] == 0:
        return np.zeros((0, 0))
    rho = spectral_radius(A)
    if rho >= 1.0 - unit_tol:
        raise UnstableMatrix(f"spectral radius {rho:.6g} is not below 1")
    # scipy solves a X a^H - X + q = 0
    X = sla.solve_discrete_lyapunov(A.T, W, method="bilinear" if A.shape[0] > 10 else "direct")
    return 0.5 * (X + X.T)
