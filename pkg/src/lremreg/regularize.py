"""Regularized solutions: minimize a weighted second moment over the family.

For a member ``nu(t) = B z(t) + C e(t)`` the loss is::

    L(B, C) = 1/2 tr( (Tz S Tz' + Tz S B' Tn' + Tn B S Tz' + Tn B S B' Tn' + Tn C C' Tn') Xi )

where ``Tz = Theta_z``, ``Tn = Theta_nu``, ``S = Sigma_zz`` and ``Xi``
aggregates the weight across lags (constant weight) or across frequencies
(frequency-dependent weight). The minimizer has ``C = 0`` and
``B = -(Tn' Xi Tn)^{-1} Tn' Xi Tz`` when the bracket is invertible.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import DimensionMismatch, NoSolution, QuadratureNonConvergence, UnstableMatrix
from .pencil import pseudoinverse_and_kernel, solve_discrete_lyapunov, spectral_radius
from .solver import (
    DEFAULT_TOLS,
    CanonicalForm,
    Solution,
    Tolerances,
    baseline_solution,
    check_existence,
    check_uniqueness,
)

Array = np.ndarray

BUSINESS_CYCLE_BAND = (2.0 * np.pi / 32.0, 2.0 * np.pi / 4.0)


def _psd_matrix(W, name: str = "W") -> Array:
    W = np.atleast_2d(np.asarray(W, dtype=float))
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got {W.shape}")
    scale = max(1.0, float(np.abs(W).max(initial=0.0)))
    if not np.allclose(W, W.T, rtol=0.0, atol=1e-12 * scale):
        raise ValueError(f"{name} must be symmetric")
    if W.size and np.linalg.eigvalsh(0.5 * (W + W.T)).min() < -1e-12 * scale:
        raise ValueError(f"{name} must be positive semi-definite")
    W = 0.5 * (W + W.T)
    W.setflags(write=False)
    return W


@dataclass(frozen=True)
class ConstantWeight:
    """Same weight ``W`` at every frequency."""

    W: Array

    def __post_init__(self):
        object.__setattr__(self, "W", _psd_matrix(self.W))

    @property
    def n(self) -> int:
        return self.W.shape[0]

    def breakpoints(self) -> list[float]:
        return []

    def at(self, omega: Array) -> Array:
        return np.broadcast_to(self.W, (len(omega),) + self.W.shape)


@dataclass(frozen=True)
class Band:
    lo: float
    hi: float
    W: Array


@dataclass(frozen=True)
class BandWeight:
    """Piecewise-constant weight: ``W_band`` on each ``[lo, hi]``, ``default`` elsewhere.

    Bands are given on ``[0, pi]`` and mirrored to negative frequencies.
    """

    bands: tuple
    default: Array

    def __post_init__(self):
        default = _psd_matrix(self.default, "default")
        bands = []
        for b in self.bands:
            lo, hi, W = (b.lo, b.hi, b.W) if isinstance(b, Band) else b
            lo, hi = float(lo), float(hi)
            if not (0.0 <= lo < hi <= np.pi + 1e-12):
                raise ValueError(f"band edges must satisfy 0 <= lo < hi <= pi, got ({lo}, {hi})")
            W = _psd_matrix(W, "band weight")
            if W.shape != default.shape:
                raise DimensionMismatch("band weight and default weight differ in shape")
            bands.append(Band(lo, min(hi, np.pi), W))
        bands.sort(key=lambda b: b.lo)
        for a, b in zip(bands, bands[1:]):
            if b.lo < a.hi:
                raise ValueError(f"bands [{a.lo}, {a.hi}] and [{b.lo}, {b.hi}] overlap")
        object.__setattr__(self, "bands", tuple(bands))
        object.__setattr__(self, "default", default)

    @property
    def n(self) -> int:
        return self.default.shape[0]

    def breakpoints(self) -> list[float]:
        return sorted({e for b in self.bands for e in (b.lo, b.hi)})

    def at(self, omega: Array) -> Array:
        omega = np.abs(np.asarray(omega, dtype=float))
        out = np.broadcast_to(self.default, (len(omega),) + self.default.shape).copy()
        for b in self.bands:
            mask = (omega >= b.lo) & (omega <= b.hi)
            out[mask] = b.W
        return out


@dataclass(frozen=True)
class SampledWeight:
    """Weight known on a frequency grid, linearly interpolated in between.

    Outside the sampled range the nearest sample is held constant.
    """

    omega: Array
    W: Array

    def __post_init__(self):
        om = np.asarray(self.omega, dtype=float).ravel()
        Ws = np.asarray(self.W, dtype=float)
        if Ws.ndim != 3 or Ws.shape[0] != om.size or om.size == 0:
            raise DimensionMismatch(f"need one matrix per frequency, got {Ws.shape} for {om.size} frequencies")
        if np.any(np.diff(om) <= 0):
            raise ValueError("sample frequencies must be strictly increasing")
        if om[0] < 0 or om[-1] > np.pi + 1e-12:
            raise ValueError("sample frequencies must lie in [0, pi]")
        Ws = np.stack([_psd_matrix(w, f"W[{j}]") for j, w in enumerate(Ws)])
        Ws.setflags(write=False)
        object.__setattr__(self, "omega", om)
        object.__setattr__(self, "W", Ws)

    @property
    def n(self) -> int:
        return self.W.shape[1]

    def breakpoints(self) -> list[float]:
        return [float(w) for w in self.omega if 0.0 < w < np.pi]

    def at(self, omega: Array) -> Array:
        omega = np.abs(np.asarray(omega, dtype=float))
        n = self.n
        flat = self.W.reshape(len(self.omega), n * n)
        out = np.empty((len(omega), n * n))
        for c in range(n * n):
            out[:, c] = np.interp(omega, self.omega, flat[:, c])
        return out.reshape(len(omega), n, n)


WeightSpec = Union[ConstantWeight, BandWeight, SampledWeight]


def business_cycle_weight(W_outside, lo: float = BUSINESS_CYCLE_BAND[0], hi: float = BUSINESS_CYCLE_BAND[1]) -> BandWeight:
    """Zero weight on ``lo <= |omega| <= hi``, ``W_outside`` elsewhere."""
    W = _psd_matrix(W_outside)
    return BandWeight(bands=((lo, hi, np.zeros_like(W)),), default=W)


@dataclass(frozen=True)
class QuadratureConfig:
    """Composite Gauss-Legendre settings for the frequency integral.

    ``threads=None`` reads ``LREM_REG_THREADS`` (default 1).
    """

    nodes: int = 64
    tol: float = 1e-10
    max_doublings: int = 10
    threads: Optional[int] = None

    def worker_count(self) -> int:
        if self.threads is not None:
            return max(1, int(self.threads))
        try:
            return max(1, int(os.environ.get("LREM_REG_THREADS", "1")))
        except ValueError:
            return 1


DEFAULT_QUAD = QuadratureConfig()


def _panel_contribution(Theta1: Array, spec, a: float, b: float, x: Array, w: Array) -> Array:
    """``Re sum_j w_j R_j^H W(omega_j) R_j`` over one panel, ``R = (I - Theta1 e^{-i omega})^{-1}``."""
    n = Theta1.shape[0]
    half = 0.5 * (b - a)
    om = 0.5 * (a + b) + half * x
    A = np.eye(n)[None] - Theta1[None] * np.exp(-1j * om)[:, None, None]
    R = np.linalg.solve(A, np.broadcast_to(np.eye(n, dtype=complex), A.shape))
    Wm = spec.at(om)
    F = np.conj(np.swapaxes(R, 1, 2)) @ Wm @ R
    return half * np.einsum("j,jab->ab", w, F).real


def _frequency_xi(Theta1: Array, spec, quad: QuadratureConfig) -> Array:
    edges = [0.0] + [e for e in spec.breakpoints() if 0.0 < e < np.pi] + [np.pi]
    edges = sorted(set(edges))
    x, w = np.polynomial.legendre.leggauss(quad.nodes)
    workers = quad.worker_count()
    prev = None
    for level in range(quad.max_doublings + 1):
        panels = []
        for a, b in zip(edges[:-1], edges[1:]):
            cuts = np.linspace(a, b, 2**level + 1)
            panels.extend(zip(cuts[:-1], cuts[1:]))
        if workers > 1 and len(panels) > 1:
            with ThreadPoolExecutor(max_workers=workers) as ex:
                parts = list(ex.map(lambda p: _panel_contribution(Theta1, spec, p[0], p[1], x, w), panels))
        else:
            parts = [_panel_contribution(Theta1, spec, a, b, x, w) for a, b in panels]
        total = np.zeros_like(Theta1)
        for part in parts:  # fixed order keeps the sum reproducible
            total = total + part
        Xi = total / np.pi
        Xi = 0.5 * (Xi + Xi.T)
        if prev is not None:
            change = np.linalg.norm(Xi - prev)
            if change < quad.tol * max(1.0, np.linalg.norm(Xi)):
                return Xi
        prev = Xi
    raise QuadratureNonConvergence(f"Xi did not converge after {quad.max_doublings} panel doublings")


def compute_xi(Theta1, spec: WeightSpec, quad: QuadratureConfig = DEFAULT_QUAD, unit_tol: float = DEFAULT_TOLS.unit_tol) -> Array:
    """Weight operator ``Xi`` for the recursion matrix ``Theta1``.

    Constant weights go through the Lyapunov equation ``Xi = Theta1' Xi Theta1 + W``;
    frequency-dependent weights are integrated over ``[0, pi]``.
    """
    Theta1 = np.asarray(Theta1, dtype=float)
    if spec.n != Theta1.shape[0]:
        raise DimensionMismatch(f"weight is {spec.n}x{spec.n} but the model has {Theta1.shape[0]} variables")
    if isinstance(spec, ConstantWeight):
        return solve_discrete_lyapunov(Theta1, spec.W, unit_tol=unit_tol)
    rho = spectral_radius(Theta1)
    if rho >= 1.0 - unit_tol:
        raise UnstableMatrix(f"spectral radius {rho:.6g} is not below 1")
    if Theta1.shape[0] == 0:
        return np.zeros((0, 0))
    return _frequency_xi(Theta1, spec, quad)


def loss(cf: CanonicalForm, B, C, Xi, Sigma_zz=None) -> float:
    """Weighted second-moment loss of the member ``nu = B z + C e``."""
    m, l = cf.m, cf.model.l
    B = np.asarray(B, dtype=float)
    C = np.asarray(C, dtype=float)
    Xi = np.asarray(Xi, dtype=float)
    S = cf.model.Sigma_zz if Sigma_zz is None else np.asarray(Sigma_zz, dtype=float)
    if B.size == 0 and m == 0:
        B = np.zeros((0, l))
    if C.size == 0 and m == 0:
        C = np.zeros((0, 0))
    if B.shape != (m, l) or C.shape != (m, m) or Xi.shape != (cf.model.n,) * 2 or S.shape != (l, l):
        raise DimensionMismatch("B, C, Xi or Sigma_zz has the wrong shape")
    Tz, Tn = cf.Theta_z, cf.Theta_nu
    V = (
        Tz @ S @ Tz.T
        + Tz @ S @ B.T @ Tn.T
        + Tn @ B @ S @ Tz.T
        + Tn @ B @ S @ B.T @ Tn.T
        + Tn @ C @ C.T @ Tn.T
    )
    return 0.5 * float(np.trace(V @ Xi))


def input_observability_matrix(Theta1, Theta_nu, W, lags: Optional[int] = None) -> Array:
    """Stack ``W^{1/2} Theta1^j Theta_nu`` for ``j = 0 .. lags-1`` (default ``n``)."""
    Theta1 = np.asarray(Theta1, dtype=float)
    Theta_nu = np.asarray(Theta_nu, dtype=float)
    vals, vecs = np.linalg.eigh(_psd_matrix(W))
    root = (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T
    lags = Theta1.shape[0] if lags is None else lags
    blocks, P = [], Theta_nu
    for _ in range(lags):
        blocks.append(root @ P)
        P = Theta1 @ P
    return np.vstack(blocks) if blocks else np.zeros((0, Theta_nu.shape[1]))


@dataclass(frozen=True)
class RegularizedSolution:
    """Loss-minimizing member of the family plus optimality diagnostics.

    When ``unique`` is False the returned member is the minimal-norm one and
    ``family_kernel`` spans the directions along which ``B`` (and ``C``) can
    move without changing the loss.
    """

    solution: Solution
    B_star: Array
    Xi: Array
    unique: bool
    foc_residual: float
    loss_value: float
    rcond: float
    family_kernel: Array


def regularize(
    cf: CanonicalForm,
    spec: WeightSpec,
    tols: Optional[Tolerances] = None,
    quad: QuadratureConfig = DEFAULT_QUAD,
) -> RegularizedSolution:
    """Select the solution minimizing the weighted loss.

    Raises
    ------
    NoSolution
        The model has no stationary solution.
    """
    tols = cf.tols if tols is None else tols
    ok, res = check_existence(cf, tols.exist_tol)
    if not ok:
        raise NoSolution(f"no stationary solution: existence residual {res:.3e}")
    l = cf.model.l
    Xi = compute_xi(cf.Theta1, spec, quad, unit_tol=tols.unit_tol)
    S = cf.model.Sigma_zz

    unique_model, _ = check_uniqueness(cf, tols.unique_tol)
    if unique_model:
        sol = baseline_solution(cf)
        B0 = np.zeros((cf.m, l))
        return RegularizedSolution(
            solution=sol,
            B_star=np.zeros((0, l)),
            Xi=Xi,
            unique=True,
            foc_residual=0.0,
            loss_value=loss(cf, B0, np.zeros((cf.m, cf.m)), Xi, S),
            rcond=1.0,
            family_kernel=np.zeros((cf.m, 0)),
        )

    Tz, Tn = cf.Theta_z, cf.Theta_nu
    M = Tn.T @ Xi @ Tn
    M = 0.5 * (M + M.T)
    rhs = Tn.T @ Xi @ Tz
    # smallest singular value against the largest M could have, so a
    # numerically null M is not mistaken for a well-conditioned one
    scale = np.linalg.norm(Tn, 2) ** 2 * np.linalg.norm(Xi, 2)
    smin = np.linalg.svd(M, compute_uv=False).min()
    rcond = float(smin / scale) if scale > 0 else 0.0
    if rcond >= tols.cond_tol:
        B_star = -np.linalg.solve(M, rhs)
        kernel = np.zeros((cf.m, 0))
        unique = True
    else:
        kd = pseudoinverse_and_kernel(M, rank_tol=tols.rank_tol)
        B_star = -kd.pinv @ rhs
        kernel = kd.kernel_basis
        unique = False

    sol = Solution(
        Theta1=cf.Theta1,
        impact=Tz + Tn @ B_star,
        eta_load=cf.K @ B_star + cf.eta_base,
        sunspot_load=np.zeros((cf.model.n, 0)),
        C=np.zeros((0, 0)),
        sunspot_eta_load=np.zeros((cf.model.k, 0)),
        provenance="regularized",
        B=B_star,
    )
    foc = float(np.linalg.norm(Tn.T @ Xi @ (Tz + Tn @ B_star)))
    return RegularizedSolution(
        solution=sol,
        B_star=B_star,
        Xi=Xi,
        unique=unique,
        foc_residual=foc,
        loss_value=loss(cf, B_star, np.zeros((cf.m, cf.m)), Xi, S),
        rcond=rcond,
        family_kernel=kernel,
    )
