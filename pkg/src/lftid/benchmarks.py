"""Reference mass-spring-damper benchmark.

The plant realizes H(s, theta) = 100 / (m s^2 + mu s + k) with
m = 1 + theta_1, mu = 7 + theta_2, k = 25 + theta_3, through the
parameter-free blocks

    G_yu = 100 / d(s),            G_zu = 1,
    G_zv = -[s^2  s  1] / d(s),   G_yv = G_yu G_zv,
    d(s) = s^2 + 7 s + 25.

States 1-2 realize the perturbation channel (z reading), states 3-4 the
nominal output dynamics; the basis matrices are the unit columns so that
P(theta) = theta.
"""
from __future__ import annotations

import numpy as np

from .igs import InputGenerator
from .model import LftPlant

NOMINAL_MASS = 1.0
NOMINAL_DAMPING = 7.0
NOMINAL_STIFFNESS = 25.0
SENSOR_GAIN = 100.0

# theta bounds from m in [0.5, 1.5], mu in [3.5, 10.5], k in [12.5, 37.5]
THETA_BOX = ((-0.5, 0.5), (-3.5, 3.5), (-12.5, 12.5))

# parameter values used throughout the reference experiments
THETA_REFERENCE = np.array([0.1852, 0.5126, 6.2582])


def mass_spring_plant(basis=None) -> LftPlant:
    """The benchmark plant; ``basis`` overrides the P_i columns (used by
    degenerate-identifiability tests)."""
    A_xx = np.array([
        [-7.0, 1.0, 0.0, 0.0],
        [-25.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [-1.0, 0.0, -25.0, -7.0],
    ])
    B_xv = np.array([
        [-7.0, 1.0, 0.0],
        [-25.0, 0.0, 1.0],
        [0.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
    ])
    B_xu = np.array([[0.0], [0.0], [0.0], [1.0]])
    C_yx = np.array([[0.0, 0.0, SENSOR_GAIN, 0.0]])
    C_zx = np.array([[-1.0, 0.0, 0.0, 0.0]])
    if basis is None:
        basis = tuple(np.eye(3)[:, [i]] for i in range(3))
    return LftPlant(
        E=np.eye(4),
        A_xx=A_xx,
        B_xu=B_xu,
        B_xv=B_xv,
        C_yx=C_yx,
        C_zx=C_zx,
        D_zu=np.array([[1.0]]),
        D_zv=np.array([[-1.0, 0.0, 0.0]]),
        D_yu=np.array([[0.0]]),
        D_yv=np.array([[0.0, 0.0, 0.0]]),
        basis=basis,
        theta_box=THETA_BOX,
    )


def mass_spring_tf(theta, s) -> complex:
    """Closed-form 100 / (m s^2 + mu s + k) for cross-checking."""
    m = NOMINAL_MASS + theta[0]
    mu = NOMINAL_DAMPING + theta[1]
    k = NOMINAL_STIFFNESS + theta[2]
    return SENSOR_GAIN / (m * s * s + mu * s + k)


def two_tone_generator(omegas=(3.0, 4.5), sigmas=(0.0, 0.0),
                       xi0=(1.0, 1.0, 1.0, 1.0),
                       pi_row=(0.25, 0.25, 0.5, 0.5)) -> InputGenerator:
    """The reference probing generator: one rotation block per tone,
    Xi = diag([[sigma_i, omega_i], [-omega_i, sigma_i]])."""
    if len(omegas) != len(sigmas):
        raise ValueError("omegas and sigmas must have equal length")
    blocks = []
    for sig, omg in zip(sigmas, omegas):
        blocks.append(np.array([[sig, omg], [-omg, sig]]))
    m = 2 * len(omegas)
    Xi = np.zeros((m, m))
    for i, blk in enumerate(blocks):
        Xi[2 * i:2 * i + 2, 2 * i:2 * i + 2] = blk
    return InputGenerator(Xi=Xi, Pi=np.asarray(pi_row, float).reshape(1, -1),
                          xi0=np.asarray(xi0, float))
