"""Built-in example models: Cagan, a small New Keynesian model, and a non-generic system."""

from __future__ import annotations

import numpy as np

from .regularize import BandWeight, ConstantWeight, business_cycle_weight
from .solver import LremModel

NK_PARAMS = ("tau", "beta", "kappa", "rho_R", "psi1", "psi2", "rho_g", "rho_z")


def cagan() -> LremModel:
    """``X_t = 2 E_t X_{t+1} + eps_t`` with ``y = (X_t, E_t X_{t+1})``."""
    return LremModel(
        Gamma0=[[1.0, -2.0], [1.0, 0.0]],
        Gamma1=[[0.0, 0.0], [0.0, 1.0]],
        Psi=[[1.0], [0.0]],
        Pi=[[0.0], [1.0]],
        var_labels=("X", "EX"),
        shock_labels=("eps",),
        description="Cagan model X_t = 2 E_t X_{t+1} + eps_t",
    )


def cagan_weights() -> dict[str, ConstantWeight | BandWeight]:
    W = np.diag([1.0, 0.0])
    return {"constant": ConstantWeight(W), "band": business_cycle_weight(W)}


def new_keynesian(*, tau, beta, kappa, rho_R, psi1, psi2, rho_g, rho_z) -> LremModel:
    """Three-equation NK model with interest-rate smoothing and AR(1) demand/supply shocks.

    Variables are ``(x, pi, R, g, z)``; shocks are ``(eps_R, eps_g, eps_z)``.
    No parameter has a default: every value must come from the caller.
    """
    a = 1.0 - rho_R
    G0 = [
        [-1.0, -tau, 0.0, 0.0, 0.0],
        [0.0, -beta, 0.0, 0.0, 0.0],
        [-a * psi2, -a * psi1, 1.0, 0.0, a * psi2],
        [0.0, 0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 1.0],
    ]
    G1 = [
        [-1.0, 0.0, -tau, 1.0, 0.0],
        [kappa, -1.0, 0.0, 0.0, -kappa],
        [0.0, 0.0, rho_R, 0.0, 0.0],
        [0.0, 0.0, 0.0, rho_g, 0.0],
        [0.0, 0.0, 0.0, 0.0, rho_z],
    ]
    Psi = np.zeros((5, 3))
    Psi[2, 0] = Psi[3, 1] = Psi[4, 2] = 1.0
    Pi = np.zeros((5, 2))
    Pi[0, 0] = -1.0
    Pi[1, 1] = -beta
    return LremModel(
        Gamma0=G0,
        Gamma1=G1,
        Psi=Psi,
        Pi=Pi,
        var_labels=("x", "pi", "R", "g", "z"),
        shock_labels=("eps_R", "eps_g", "eps_z"),
        description="New Keynesian model " + ", ".join(f"{k}={v!r}" for k, v in zip(NK_PARAMS, (tau, beta, kappa, rho_R, psi1, psi2, rho_g, rho_z))),
    )


def nk_weights() -> dict[str, ConstantWeight | BandWeight]:
    W = np.diag([1.0, 1.0, 1.0, 0.0, 0.0])
    return {"constant": ConstantWeight(W), "band": business_cycle_weight(W)}


def nongeneric(theta: float) -> LremModel:
    """``E_t X_{1,t+2} = eps_1``, ``theta E_t X_{1,t+1} + X_{2,t} = eps_2`` in one-lag form.

    The one-lag rewrite is only equivalent for ``theta != 0``.
    """
    theta = float(theta)
    if theta == 0.0:
        raise ValueError("theta must be nonzero: the one-lag form is not equivalent at theta = 0")
    return LremModel(
        Gamma0=[[0, 0, 0, 1], [0, 1, theta, 0], [1, 0, 0, 0], [0, 1, 0, 0]],
        Gamma1=[[0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]],
        Psi=[[-theta, 0], [0, 1], [0, 0], [0, 0]],
        Pi=[[0, 0], [0, 0], [1, 0], [0, 1]],
        var_labels=("X1", "X2", "EX1", "EX2"),
        shock_labels=("eps1", "eps2"),
        description=f"non-generic system, theta={theta!r}",
    )


def nongeneric_weights() -> dict[str, ConstantWeight]:
    return {"constant": ConstantWeight(np.diag([1.0, 1.0, 0.0, 0.0]))}
