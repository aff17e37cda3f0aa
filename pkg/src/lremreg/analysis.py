"""Impulse responses, spectra, covariances and simulation of a solution."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .pencil import solve_discrete_lyapunov, spectral_radius
from .solver import LremModel, Solution

Array = np.ndarray

BURN_IN_CAP = 100_000


@dataclass(frozen=True)
class IrfSequence:
    """``responses[h][i, j]``: response of variable ``i`` at lag ``h`` to a unit shock ``j``."""

    horizon: int
    responses: Array


@dataclass(frozen=True)
class SpectrumGrid:
    frequencies: Array
    densities: Array


def impulse_response(sol: Solution, horizon: int) -> IrfSequence:
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    out = np.empty((horizon + 1,) + sol.impact.shape)
    out[0] = sol.impact
    for h in range(1, horizon + 1):
        out[h] = sol.Theta1 @ out[h - 1]
    return IrfSequence(horizon=horizon, responses=out)


def _sigma(sol: Solution, Sigma_zz) -> Array:
    l = sol.impact.shape[1]
    return np.eye(l) if Sigma_zz is None else np.asarray(Sigma_zz, dtype=float)


def spectral_density(sol: Solution, grid, Sigma_zz=None) -> SpectrumGrid:
    """``f(w) = (1/2pi) R(w) V R(w)^H`` with ``R(w) = (I - Theta1 e^{-iw})^{-1}``.

    ``V`` is the innovation covariance including any sunspot term, so that
    ``integral_{-pi}^{pi} f(w) dw`` is the stationary covariance.
    """
    omega = np.asarray(grid, dtype=float).ravel()
    if np.any(omega < 0) or np.any(omega > np.pi + 1e-12):
        raise ValueError("frequencies must lie in [0, pi]")
    n = sol.n
    V = sol.innovation_covariance(_sigma(sol, Sigma_zz))
    A = np.eye(n)[None] - sol.Theta1[None] * np.exp(-1j * omega)[:, None, None]
    R = np.linalg.solve(A, np.broadcast_to(np.eye(n, dtype=complex), A.shape))
    F = R @ V @ np.conj(np.swapaxes(R, 1, 2)) / (2.0 * np.pi)
    F = 0.5 * (F + np.conj(np.swapaxes(F, 1, 2)))
    return SpectrumGrid(frequencies=omega, densities=F)


def stationary_covariance(sol: Solution, Sigma_zz=None) -> Array:
    """Solve ``V = Theta1 V Theta1' + innovation covariance``."""
    V = sol.innovation_covariance(_sigma(sol, Sigma_zz))
    return solve_discrete_lyapunov(sol.Theta1.T, V)


@dataclass(frozen=True)
class SimulationPath:
    """Simulated ``(y, z, eta)``; ``y_prev`` is the state just before ``y[0]``."""

    y: Array
    z: Array
    eta: Array
    y_prev: Array
    seed: int | None


def burn_in_length(Theta1) -> int:
    n = np.asarray(Theta1).shape[0]
    rho = spectral_radius(Theta1)
    if rho <= 0.0:
        return max(n, 1)
    if rho >= 1.0:
        return BURN_IN_CAP
    return int(min(BURN_IN_CAP, max(n, math.ceil(math.log(1e-12) / math.log(rho)))))


def simulate(sol: Solution, T: int, seed=None, Sigma_zz=None) -> SimulationPath:
    """Gaussian simulation of the solution from an approximately stationary start.

    Sunspot innovations, when present, are independent standard normals
    scaled by the solution's ``C``.
    """
    if T < 1:
        raise ValueError("T must be at least 1")
    rng = np.random.default_rng(seed)
    S = _sigma(sol, Sigma_zz)
    l = S.shape[0]
    m = sol.C.shape[0]
    L = np.linalg.cholesky(S) if l else np.zeros((0, 0))
    burn = burn_in_length(sol.Theta1)
    total = burn + T
    z = rng.standard_normal((total, l)) @ L.T
    e = rng.standard_normal((total, m))

    drive = z @ sol.impact.T
    eta = z @ sol.eta_load.T
    if m:
        drive = drive + e @ (sol.sunspot_load @ sol.C).T
        eta = eta + e @ (sol.sunspot_eta_load @ sol.C).T

    y = np.zeros((total, sol.n))
    prev = np.zeros(sol.n)
    A = sol.Theta1
    for t in range(total):
        prev = A @ prev + drive[t]
        y[t] = prev
    y_prev = y[burn - 1] if burn > 0 else np.zeros(sol.n)
    return SimulationPath(y=y[burn:], z=z[burn:], eta=eta[burn:], y_prev=y_prev, seed=seed)


@dataclass(frozen=True)
class ResidualReport:
    max_residual: float
    scale: float
    equation_ok: bool
    max_abs_corr: float
    corr_threshold: float
    martingale_ok: bool

    @property
    def passed(self) -> bool:
        return self.equation_ok and self.martingale_ok


def residual_check(model: LremModel, sol: Solution, path: SimulationPath, tol: float = 1e-8) -> ResidualReport:
    """Check ``Gamma0 y(t) - Gamma1 y(t-1) - Psi z(t) - Pi eta(t) = 0`` along a path.

    Also tests that ``eta(t)`` is uncorrelated with ``z(t-1)``: every sample
    correlation must stay below ``5/sqrt(T)``.
    """
    y, z, eta = path.y, path.z, path.eta
    if y.shape[1] != model.n or z.shape[1] != model.l or eta.shape[1] != model.k:
        raise ValueError("path dimensions do not match the model")
    lagged = np.vstack([path.y_prev[None], y[:-1]])
    R = y @ model.Gamma0.T - lagged @ model.Gamma1.T - z @ model.Psi.T - eta @ model.Pi.T
    max_res = float(np.abs(R).max(initial=0.0))
    scale = max(1.0, float(np.abs(y).max(initial=0.0)), float(np.abs(eta).max(initial=0.0)))

    T = y.shape[0]
    thr = 5.0 / math.sqrt(max(T - 1, 1))
    max_corr = 0.0
    if T > 2 and model.l and model.k:
        a = eta[1:] - eta[1:].mean(axis=0)
        b = z[:-1] - z[:-1].mean(axis=0)
        sa = np.sqrt((a * a).sum(axis=0))
        sb = np.sqrt((b * b).sum(axis=0))
        keep_a = sa > 1e-12 * max(1.0, scale) * math.sqrt(T)
        keep_b = sb > 0
        if keep_a.any() and keep_b.any():
            corr = (a[:, keep_a].T @ b[:, keep_b]) / np.outer(sa[keep_a], sb[keep_b])
            max_corr = float(np.abs(corr).max())
    return ResidualReport(
        max_residual=max_res,
        scale=scale,
        equation_ok=max_res <= tol * scale,
        max_abs_corr=max_corr,
        corr_threshold=thr,
        martingale_ok=max_corr <= thr,
    )
