"""Canonical solution family of a linear rational expectations model.

The model is ``Gamma0 y(t) = Gamma1 y(t-1) + Psi z(t) + Pi eta(t)``. Every
covariance-stationary solution has the form::

    y(t)   = Theta1 y(t-1) + Theta_z z(t) + Theta_nu nu(t)
    eta(t) = K nu(t) - (Q2 Pi)^+ Q2 Psi z(t)

with ``nu`` an arbitrary martingale difference sequence. :func:`decompose`
computes these matrices; :func:`baseline_solution` and
:func:`general_solution` pick members of the family.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, NoSolution
from .pencil import (
    DEFAULT_RANK_TOL,
    DEFAULT_UNIT_TOL,
    OrderedQz,
    ordered_real_qz,
    pseudoinverse_and_kernel,
)

Array = np.ndarray


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds used along the pipeline."""

    unit_tol: float = DEFAULT_UNIT_TOL
    rank_tol: float = DEFAULT_RANK_TOL
    exist_tol: float = 1e-8
    unique_tol: float = 1e-8
    cond_tol: float = 1e-10


DEFAULT_TOLS = Tolerances()


def _matrix(x, name: str) -> Array:
    a = np.array(x, dtype=float)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2:
        raise DimensionMismatch(f"{name} must be a matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class LremModel:
    """Coefficients ``(Gamma0, Gamma1, Psi, Pi)`` and shock covariance."""

    Gamma0: Array
    Gamma1: Array
    Psi: Array
    Pi: Array
    Sigma_zz: Optional[Array] = None
    var_labels: Optional[Sequence[str]] = None
    shock_labels: Optional[Sequence[str]] = None
    description: str = ""

    def __post_init__(self):
        G0 = _matrix(self.Gamma0, "Gamma0")
        G1 = _matrix(self.Gamma1, "Gamma1")
        n = G0.shape[0]
        if G0.shape != (n, n) or G1.shape != (n, n):
            raise DimensionMismatch(f"Gamma0 {G0.shape} and Gamma1 {G1.shape} must both be {n}x{n}")
        Psi = np.zeros((n, 0)) if np.size(self.Psi) == 0 else _matrix(self.Psi, "Psi")
        Pi = np.zeros((n, 0)) if np.size(self.Pi) == 0 else _matrix(self.Pi, "Pi")
        if Psi.shape[0] != n or Pi.shape[0] != n:
            raise DimensionMismatch(f"Psi {Psi.shape} and Pi {Pi.shape} must have {n} rows")
        l = Psi.shape[1]
        S = np.eye(l) if self.Sigma_zz is None else _matrix(self.Sigma_zz, "Sigma_zz")
        if S.shape != (l, l):
            raise DimensionMismatch(f"Sigma_zz must be {l}x{l}, got {S.shape}")
        if not np.allclose(S, S.T, rtol=0, atol=1e-12 * max(1.0, np.abs(S).max(initial=0))):
            raise ValueError("Sigma_zz must be symmetric")
        if l and np.linalg.eigvalsh(S).min() <= 0:
            raise ValueError("Sigma_zz must be positive definite")
        var_labels = tuple(self.var_labels) if self.var_labels else tuple(f"y{i + 1}" for i in range(n))
        shock_labels = tuple(self.shock_labels) if self.shock_labels else tuple(f"z{j + 1}" for j in range(l))
        if len(var_labels) != n or len(shock_labels) != l:
            raise DimensionMismatch("label counts do not match model dimensions")
        for name, val in (("Gamma0", G0), ("Gamma1", G1), ("Psi", Psi), ("Pi", Pi), ("Sigma_zz", S)):
            val = np.asarray(val)
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        object.__setattr__(self, "var_labels", var_labels)
        object.__setattr__(self, "shock_labels", shock_labels)

    @property
    def n(self) -> int:
        return self.Gamma0.shape[0]

    @property
    def l(self) -> int:
        return self.Psi.shape[1]

    @property
    def k(self) -> int:
        return self.Pi.shape[1]


@dataclass(frozen=True)
class CanonicalForm:
    """Solved geometry of a model: the matrices spanning its solution family."""

    model: LremModel
    qz: OrderedQz
    Theta1: Array
    Theta_z: Array
    Theta_nu: Array
    K: Array
    eta_base: Array
    exist_residual: float
    unique_residual: float
    indeterminacy_dim: int
    # pieces kept for diagnostics and the regularized eta loading
    Q2Psi: Array = field(repr=False)
    Q1Pi: Array = field(repr=False)
    tols: Tolerances = DEFAULT_TOLS

    @property
    def m(self) -> int:
        return self.K.shape[1]


@dataclass(frozen=True)
class Solution:
    """One member of the solution family.

    ``y(t) = Theta1 y(t-1) + impact z(t) + sunspot_load C e(t)`` and
    ``eta(t) = eta_load z(t) + sunspot_eta_load C e(t)`` where ``e`` is a
    standardized extrinsic innovation uncorrelated with ``z``.
    """

    Theta1: Array
    impact: Array
    eta_load: Array
    sunspot_load: Array
    C: Array
    sunspot_eta_load: Array
    provenance: str
    B: Optional[Array] = None

    @property
    def n(self) -> int:
        return self.Theta1.shape[0]

    @property
    def has_sunspot(self) -> bool:
        return self.C.size > 0 and bool(np.any(self.C != 0)) and bool(np.any(self.sunspot_load != 0))

    def innovation_covariance(self, Sigma_zz) -> Array:
        """Covariance of ``impact z(t) + sunspot_load C e(t)``."""
        S = np.asarray(Sigma_zz, dtype=float)
        V = self.impact @ S @ self.impact.T
        if self.C.size:
            G = self.sunspot_load @ self.C
            V = V + G @ G.T
        return 0.5 * (V + V.T)

    def recursion_residual(self, model: LremModel) -> float:
        """Largest ``|(Gamma0 Theta1 - Gamma1) v|`` over the reachable subspace.

        The subspace is spanned by the columns of ``[Theta1, impact,
        sunspot_load]``; the residual is scaled by the norms of the spanning
        block.
        """
        span = np.hstack([self.Theta1, self.impact, self.sunspot_load])
        if span.size == 0:
            return 0.0
        R = (model.Gamma0 @ self.Theta1 - model.Gamma1) @ span
        return float(np.linalg.norm(R, 2))


def decompose(model: LremModel, tols: Tolerances = DEFAULT_TOLS) -> CanonicalForm:
    """Compute ``Theta1, Theta_z, Theta_nu, K`` and the existence/uniqueness residuals.

    Raises
    ------
    SingularPencil, UnitRoot, ReorderFailure
        Propagated from :func:`lremreg.pencil.ordered_real_qz`.
    """
    qz = ordered_real_qz(model.Gamma0, model.Gamma1, unit_tol=tols.unit_tol)
    n, s = model.n, qz.n_stable
    Z = qz.Z
    Q1, Q2 = qz.Q1, qz.Q2
    L11, _, _, O11, _, _ = qz.blocks()

    Q1Psi, Q2Psi = Q1 @ model.Psi, Q2 @ model.Psi
    Q1Pi, Q2Pi = Q1 @ model.Pi, Q2 @ model.Pi

    kd = pseudoinverse_and_kernel(Q2Pi, rank_tol=tols.rank_tol)
    K = kd.kernel_basis
    proj = Q2Pi @ kd.pinv
    exist_residual = float(np.linalg.norm(Q2Psi - proj @ Q2Psi)) if Q2Psi.size else 0.0
    eta_base = -kd.pinv @ Q2Psi

    Z1 = Z[:, :s]
    if s:
        Theta1 = Z1 @ np.linalg.solve(L11, O11) @ Z1.T
        Theta_z = Z1 @ np.linalg.solve(L11, Q1Psi + Q1Pi @ eta_base)
        Theta_nu = Z1 @ np.linalg.solve(L11, Q1Pi @ K)
    else:
        Theta1 = np.zeros((n, n))
        Theta_z = np.zeros((n, model.l))
        Theta_nu = np.zeros((n, K.shape[1]))

    Q1PiK = Q1Pi @ K
    unique_residual = float(np.linalg.norm(Q1PiK)) if Q1PiK.size else 0.0
    indeterminacy_dim = pseudoinverse_and_kernel(Q1PiK, rank_tol=tols.rank_tol).rank if Q1PiK.size else 0

    return CanonicalForm(
        model=model,
        qz=qz,
        Theta1=Theta1,
        Theta_z=Theta_z,
        Theta_nu=Theta_nu,
        K=K,
        eta_base=eta_base,
        exist_residual=exist_residual,
        unique_residual=unique_residual,
        indeterminacy_dim=indeterminacy_dim,
        Q2Psi=Q2Psi,
        Q1Pi=Q1Pi,
        tols=tols,
    )


def check_existence(cf: CanonicalForm, tol: Optional[float] = None) -> tuple[bool, float]:
    """``im(Q2 Psi)`` inside ``im(Q2 Pi)``, as ``(holds, residual)``."""
    tol = cf.tols.exist_tol if tol is None else tol
    scale = float(np.linalg.norm(cf.Q2Psi)) if cf.Q2Psi.size else 0.0
    return cf.exist_residual <= tol * (1.0 + scale), cf.exist_residual


def check_uniqueness(cf: CanonicalForm, tol: Optional[float] = None) -> tuple[bool, float]:
    """``ker(Q2 Pi)`` inside ``ker(Q1 Pi)``, as ``(holds, residual)``."""
    tol = cf.tols.unique_tol if tol is None else tol
    if cf.m == 0:
        return True, 0.0
    scale = float(np.linalg.norm(cf.Q1Pi)) if cf.Q1Pi.size else 0.0
    return cf.unique_residual <= tol * (1.0 + scale), cf.unique_residual


def _require_existence(cf: CanonicalForm) -> None:
    ok, res = check_existence(cf)
    if not ok:
        raise NoSolution(f"no stationary solution: existence residual {res:.3e}")


def baseline_solution(cf: CanonicalForm) -> Solution:
    """The family member with ``nu = 0``."""
    _require_existence(cf)
    unique, _ = check_uniqueness(cf)
    n, k = cf.model.n, cf.model.k
    return Solution(
        Theta1=cf.Theta1,
        impact=cf.Theta_z,
        eta_load=cf.eta_base,
        sunspot_load=np.zeros((n, 0)),
        C=np.zeros((0, 0)),
        sunspot_eta_load=np.zeros((k, 0)),
        provenance="unique" if unique else "baseline",
    )


def general_solution(cf: CanonicalForm, B, C) -> Solution:
    """Family member with ``nu(t) = B z(t) + C e(t)``.

    ``B`` is ``m x l`` and ``C`` is ``m x m`` where ``m`` is the width of the
    kernel basis ``K``.
    """
    _require_existence(cf)
    m, l = cf.m, cf.model.l
    B = np.asarray(B, dtype=float).reshape(m, l) if np.size(B) == m * l else np.asarray(B, dtype=float)
    C = np.asarray(C, dtype=float).reshape(m, m) if np.size(C) == m * m else np.asarray(C, dtype=float)
    if B.shape != (m, l):
        raise DimensionMismatch(f"B must be {m}x{l}, got {B.shape}")
    if C.shape != (m, m):
        raise DimensionMismatch(f"C must be {m}x{m}, got {C.shape}")
    return Solution(
        Theta1=cf.Theta1,
        impact=cf.Theta_z + cf.Theta_nu @ B,
        eta_load=cf.K @ B + cf.eta_base,
        sunspot_load=cf.Theta_nu,
        C=C,
        sunspot_eta_load=cf.K,
        provenance="general",
        B=B,
    )
