"""Shared fixtures: random well-posed instances and independent oracles."""
import numpy as np
import pytest
import scipy.linalg

from lftid import LftPlant, InputGenerator, assemble, check_assumptions
from lftid.benchmarks import (THETA_REFERENCE, mass_spring_plant,
                              two_tone_generator)


@pytest.fixture
def plant():
    return mass_spring_plant()


@pytest.fixture
def generator():
    return two_tone_generator()


@pytest.fixture
def theta_ref():
    return THETA_REFERENCE.copy()


def random_plant(rng, m_x=4, m_u=2, m_y=2, m_v=2, m_z=2, m_theta=2,
                 e_kind="identity", stable=True):
    """Random regular well-posed instance; loops until the assumption
    report confirms regularity (and stability when asked)."""
    for _ in range(50):
        if e_kind == "identity":
            E = np.eye(m_x)
            A_xx = rng.standard_normal((m_x, m_x))
            if stable:
                shift = max(np.linalg.eigvals(A_xx).real.max(), 0.0) + 1.0
                A_xx = A_xx - shift * np.eye(m_x)
        elif e_kind == "invertible":
            E = rng.standard_normal((m_x, m_x)) + 3.0 * np.eye(m_x)
            A_xx = rng.standard_normal((m_x, m_x))
            if stable:
                lam = scipy.linalg.eigvals(A_xx, E)
                shift = max(lam.real.max(), 0.0) + 1.0
                A_xx = A_xx - shift * E
        elif e_kind == "singular":
            # built in Weierstrass coordinates: index-1 nilpotent part
            n2 = 1
            n1 = m_x - n2
            F = rng.standard_normal((n1, n1))
            F = F - (np.linalg.eigvals(F).real.max() + 1.0) * np.eye(n1)
            W = rng.standard_normal((m_x, m_x)) + 2.0 * np.eye(m_x)
            V = rng.standard_normal((m_x, m_x)) + 2.0 * np.eye(m_x)
            E = W @ np.block([[np.eye(n1), np.zeros((n1, n2))],
                              [np.zeros((n2, n1)), np.zeros((n2, n2))]]) @ V
            A_xx = W @ np.block([[F, np.zeros((n1, n2))],
                                 [np.zeros((n2, n1)), np.eye(n2)]]) @ V
        else:
            raise ValueError(e_kind)
        scale = 0.4 / max(m_theta, 1)
        plant = LftPlant(
            E=E, A_xx=A_xx,
            B_xu=rng.standard_normal((m_x, m_u)),
            B_xv=rng.standard_normal((m_x, m_v)),
            C_yx=rng.standard_normal((m_y, m_x)),
            C_zx=rng.standard_normal((m_z, m_x)),
            D_zu=rng.standard_normal((m_z, m_u)),
            D_zv=scale * rng.standard_normal((m_z, m_v)),
            D_yu=rng.standard_normal((m_y, m_u)),
            D_yv=rng.standard_normal((m_y, m_v)),
            basis=tuple(rng.standard_normal((m_v, m_z))
                        for _ in range(m_theta)),
            theta_box=tuple((-1.0, 1.0) for _ in range(m_theta)),
        )
        theta = random_theta(rng, plant)
        report = check_assumptions(plant, theta)
        if report.well_posed and report.regular and \
                (not stable or report.stable):
            return plant, theta
    raise RuntimeError("failed to draw a usable random instance")


def random_theta(rng, plant, scale=0.3):
    return np.array([scale * rng.uniform(lo, hi)
                     for lo, hi in plant.theta_box])


def random_generator(rng, m_u, m_r=1, m_c=1, real_range=(0.0, 1.5),
                     omega_range=(0.5, 5.0)):
    """Diagonalizable generator with m_r real modes and m_c rotation
    blocks, conjugated by a random similarity."""
    m_xi = m_r + 2 * m_c
    blocks = []
    reals = np.sort(rng.uniform(*real_range, m_r)) if m_r else []
    for lam in reals:
        blocks.append(np.array([[lam]]))
    omegas = np.sort(rng.uniform(*omega_range, m_c)) if m_c else []
    for w in omegas:
        sig = rng.uniform(0.0, 0.3)
        blocks.append(np.array([[sig, w], [-w, sig]]))
    Xi0 = scipy.linalg.block_diag(*blocks) if blocks else np.empty((0, 0))
    S = rng.standard_normal((m_xi, m_xi)) + 2.0 * np.eye(m_xi)
    Xi = S @ Xi0 @ np.linalg.inv(S)
    Pi = rng.standard_normal((m_u, m_xi))
    xi0 = rng.standard_normal(m_xi)
    return InputGenerator(Xi=Xi, Pi=Pi, xi0=xi0)


def kron_steady_solve(E, A, B, Pi, Xi):
    """Dense Kronecker-vectorized solve of EX - Z = 0,
    AX + B Pi - Z Xi = 0 (brute-force oracle)."""
    m_x = A.shape[0]
    m_xi = Xi.shape[0]
    lhs = np.kron(np.eye(m_xi), A) - np.kron(Xi.T, E)
    rhs = -(B @ Pi).ravel(order="F")
    X = np.linalg.solve(lhs, rhs).reshape((m_x, m_xi), order="F")
    return X, E @ X


def augmented_outputs(plant, theta, gen, x0, times):
    """Direct matrix-exponential simulation of the stacked plant+IGS
    state (only for invertible E; oracle for the response module)."""
    A, B, C, D = assemble(plant, theta)
    Einv = np.linalg.inv(plant.E)
    m_x, m_xi = plant.m_x, gen.m_xi
    Aaug = np.block([[Einv @ A, Einv @ B @ gen.Pi],
                     [np.zeros((m_xi, m_x)), gen.Xi]])
    Caug = np.hstack([C, D @ gen.Pi])
    z0 = np.concatenate([x0, gen.xi0])
    return np.array([Caug @ scipy.linalg.expm(Aaug * t) @ z0
                     for t in times])


def fd_tfm_derivative(plant, theta, s, h=None):
    """Central finite-difference oracle for the first TFM derivative."""
    from lftid import eval_tfm
    if h is None:
        h = 1e-5 * (1.0 + abs(s))
    return (eval_tfm(plant, theta, s + h) -
            eval_tfm(plant, theta, s - h)) / (2.0 * h)
