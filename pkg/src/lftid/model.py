"""LFT-structured descriptor plant: system-matrix assembly and transfer
function machinery.

The plant is

    E x'(t) = A(theta) x(t) + B(theta) u(t)
    y(t)    = C(theta) x(t) + D(theta) u(t)

where the four matrices depend on the parameter vector through the linear
fractional form

    [A B; C D] = [A_xx B_xu; C_yx D_yu]
                 + [B_xv; D_yv] (I - P(theta) D_zv)^-1 P(theta) [C_zx D_zu]

with P(theta) = sum_i theta_i P_i.  E is known and parameter independent.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import (DimensionMismatch, ParameterBoxWarning, SingularPencil,
                     WellPosednessViolated)
from .numerics import (DEFAULT_TOLS, Tolerances, is_numerically_singular,
                       rank_cutoff)


def _as_matrix(value, rows, cols, name):
    arr = np.atleast_2d(np.asarray(value, dtype=float))
    if arr.shape != (rows, cols):
        raise DimensionMismatch(
            f"{name} must be {rows}x{cols}, got {arr.shape}")
    return arr


@dataclass(frozen=True)
class LftPlant:
    """Known structural data of the plant.

    ``basis`` holds the matrices P_i (each m_v x m_z); ``theta_box`` holds
    one bounded (lo, hi) interval per parameter.
    """

    E: np.ndarray
    A_xx: np.ndarray
    B_xu: np.ndarray
    B_xv: np.ndarray
    C_yx: np.ndarray
    C_zx: np.ndarray
    D_zu: np.ndarray
    D_zv: np.ndarray
    D_yu: np.ndarray
    D_yv: np.ndarray
    basis: tuple[np.ndarray, ...]
    theta_box: tuple[tuple[float, float], ...]

    def __post_init__(self):
        E = np.atleast_2d(np.asarray(self.E, dtype=float))
        m_x = E.shape[0]
        if E.shape != (m_x, m_x):
            raise DimensionMismatch(f"E must be square, got {E.shape}")
        A_xx = _as_matrix(self.A_xx, m_x, m_x, "A_xx")
        B_xu = np.atleast_2d(np.asarray(self.B_xu, dtype=float))
        if B_xu.shape[0] != m_x:
            raise DimensionMismatch(
                f"B_xu must have {m_x} rows, got {B_xu.shape}")
        m_u = B_xu.shape[1]
        B_xv = np.atleast_2d(np.asarray(self.B_xv, dtype=float))
        if B_xv.shape[0] != m_x:
            raise DimensionMismatch(
                f"B_xv must have {m_x} rows, got {B_xv.shape}")
        m_v = B_xv.shape[1]
        C_yx = np.atleast_2d(np.asarray(self.C_yx, dtype=float))
        if C_yx.shape[1] != m_x:
            raise DimensionMismatch(
                f"C_yx must have {m_x} columns, got {C_yx.shape}")
        m_y = C_yx.shape[0]
        C_zx = np.atleast_2d(np.asarray(self.C_zx, dtype=float))
        if C_zx.shape[1] != m_x:
            raise DimensionMismatch(
                f"C_zx must have {m_x} columns, got {C_zx.shape}")
        m_z = C_zx.shape[0]
        D_zu = _as_matrix(self.D_zu, m_z, m_u, "D_zu")
        D_zv = _as_matrix(self.D_zv, m_z, m_v, "D_zv")
        D_yu = _as_matrix(self.D_yu, m_y, m_u, "D_yu")
        D_yv = _as_matrix(self.D_yv, m_y, m_v, "D_yv")
        basis = tuple(_as_matrix(P, m_v, m_z, f"P[{i}]")
                      for i, P in enumerate(self.basis))
        if len(basis) < 1:
            raise DimensionMismatch("basis must contain at least one matrix")
        box = tuple((float(lo), float(hi)) for lo, hi in self.theta_box)
        if len(box) != len(basis):
            raise DimensionMismatch(
                f"theta_box has {len(box)} intervals for {len(basis)} "
                "basis matrices")
        for i, (lo, hi) in enumerate(box):
            if not (np.isfinite(lo) and np.isfinite(hi) and lo <= hi):
                raise DimensionMismatch(
                    f"theta_box[{i}] = ({lo}, {hi}) is not a bounded "
                    "non-empty interval")
        for name, arr in (("E", E), ("A_xx", A_xx), ("B_xu", B_xu),
                          ("B_xv", B_xv), ("C_yx", C_yx), ("C_zx", C_zx),
                          ("D_zu", D_zu), ("D_zv", D_zv), ("D_yu", D_yu),
                          ("D_yv", D_yv)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        for P in basis:
            P.setflags(write=False)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "theta_box", box)

    @property
    def m_x(self) -> int:
        return self.E.shape[0]

    @property
    def m_u(self) -> int:
        return self.B_xu.shape[1]

    @property
    def m_y(self) -> int:
        return self.C_yx.shape[0]

    @property
    def m_v(self) -> int:
        return self.B_xv.shape[1]

    @property
    def m_z(self) -> int:
        return self.C_zx.shape[0]

    @property
    def m_theta(self) -> int:
        return len(self.basis)


class SystemMatrices(NamedTuple):
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray


class GValues(NamedTuple):
    """The four parameter-independent transfer blocks at one point."""

    yv: np.ndarray
    yu: np.ndarray
    zv: np.ndarray
    zu: np.ndarray


@dataclass
class AssumptionReport:
    """Outcome of the standing-assumption checks at one theta.

    ``regular``/``stable`` are None when the plant is so degenerate that
    the check cannot be evaluated (e.g. well-posedness already failed).
    """

    regular: bool | None
    well_posed: bool
    stable: bool | None
    finite_eigenvalues: np.ndarray
    theta_in_box: bool
    qz_all_indeterminate: bool = False
    notes: list[str] = field(default_factory=list)


def check_theta(plant: LftPlant, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.shape != (plant.m_theta,):
        raise DimensionMismatch(
            f"theta must have length {plant.m_theta}, got {theta.shape}")
    return theta


def theta_in_box(plant: LftPlant, theta) -> bool:
    theta = check_theta(plant, theta)
    return all(lo <= t <= hi for t, (lo, hi) in zip(theta, plant.theta_box))


def p_of_theta(plant: LftPlant, theta) -> np.ndarray:
    """P(theta) = sum_i theta_i P_i."""
    theta = check_theta(plant, theta)
    P = np.zeros((plant.m_v, plant.m_z))
    for t, Pi in zip(theta, plant.basis):
        P += t * Pi
    return P


def well_posed(plant: LftPlant, theta,
               tols: Tolerances = DEFAULT_TOLS) -> tuple[bool, float]:
    """Whether I - P(theta) D_zv is numerically invertible."""
    P = p_of_theta(plant, theta)
    M = np.eye(plant.m_v) - P @ plant.D_zv
    singular, smin = is_numerically_singular(M, tols.rank_rtol)
    return (not singular), smin


def assemble(plant: LftPlant, theta,
             tols: Tolerances = DEFAULT_TOLS) -> SystemMatrices:
    """System matrices A(theta), B(theta), C(theta), D(theta).

    Accepts theta outside the admissible box (flagged with a warning);
    raises WellPosednessViolated when I - P(theta) D_zv is singular.
    """
    theta = check_theta(plant, theta)
    if not theta_in_box(plant, theta):
        warnings.warn("theta lies outside the admissible box",
                      ParameterBoxWarning, stacklevel=2)
    P = p_of_theta(plant, theta)
    M = np.eye(plant.m_v) - P @ plant.D_zv
    singular, smin = is_numerically_singular(M, tols.rank_rtol)
    if singular:
        raise WellPosednessViolated(
            f"I - P(theta) D_zv is numerically singular "
            f"(sigma_min = {smin:.3e})")
    K = np.linalg.solve(M, P)  # (I - P D_zv)^-1 P
    A = plant.A_xx + plant.B_xv @ K @ plant.C_zx
    B = plant.B_xu + plant.B_xv @ K @ plant.D_zu
    C = plant.C_yx + plant.D_yv @ K @ plant.C_zx
    D = plant.D_yu + plant.D_yv @ K @ plant.D_zu
    return SystemMatrices(A, B, C, D)


def _solve_pencil(E, A, s, rhs, rtol, what="(E, A)"):
    M = s * E - A
    singular, smin = is_numerically_singular(M, rtol)
    if singular:
        raise SingularPencil(
            f"s = {s} is numerically a generalized eigenvalue of {what} "
            f"(sigma_min = {smin:.3e})")
    return np.linalg.solve(M, rhs)


def eval_tfm(plant: LftPlant, theta, s,
             tols: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    """H(s, theta) = C(theta) (sE - A(theta))^-1 B(theta) + D(theta)."""
    A, B, C, D = assemble(plant, theta, tols)
    X = _solve_pencil(plant.E, A, complex(s), B.astype(complex),
                      tols.rank_rtol, "(E, A(theta))")
    return C @ X + D


def eval_g(plant: LftPlant, s, tols: Tolerances = DEFAULT_TOLS) -> GValues:
    """The 2x2 block transfer matrix of the parameter-free part at s."""
    rhs = np.hstack([plant.B_xv, plant.B_xu]).astype(complex)
    X = _solve_pencil(plant.E, plant.A_xx, complex(s), rhs,
                      tols.rank_rtol, "(E, A_xx)")
    m_v = plant.m_v
    Gy = np.hstack([plant.D_yv, plant.D_yu]) + plant.C_yx @ X
    Gz = np.hstack([plant.D_zv, plant.D_zu]) + plant.C_zx @ X
    return GValues(yv=Gy[:, :m_v], yu=Gy[:, m_v:],
                   zv=Gz[:, :m_v], zu=Gz[:, m_v:])


def eval_tfm_lft(plant: LftPlant, theta, s,
                 tols: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    """H(s, theta) through the parameter-free blocks:

    H = G_yu + G_yv P (I - G_zv P)^-1 G_zu
    """
    theta = check_theta(plant, theta)
    g = eval_g(plant, s, tols)
    P = p_of_theta(plant, theta)
    M = np.eye(plant.m_z) - g.zv @ P
    singular, smin = is_numerically_singular(M, tols.rank_rtol)
    if singular:
        raise WellPosednessViolated(
            f"I - G_zv(s) P(theta) is numerically singular at s = {s} "
            f"(sigma_min = {smin:.3e})")
    return g.yu + (g.yv @ P) @ np.linalg.solve(M, g.zu)


def eval_hbar(plant: LftPlant, theta, s,
              tols: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    """The parameter-carrying factor G_yv P (I - G_zv P)^-1 at s,
    so that H(s, theta) = G_yu(s) + Hbar(s, theta) G_zu(s)."""
    theta = check_theta(plant, theta)
    g = eval_g(plant, s, tols)
    P = p_of_theta(plant, theta)
    M = np.eye(plant.m_z) - g.zv @ P
    singular, smin = is_numerically_singular(M, tols.rank_rtol)
    if singular:
        raise WellPosednessViolated(
            f"I - G_zv(s) P(theta) is numerically singular at s = {s} "
            f"(sigma_min = {smin:.3e})")
    return np.linalg.solve(M.T, (g.yv @ P).T).T


def tfm_derivative(plant: LftPlant, theta, s, k: int,
                   tols: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    """k-th derivative of H(., theta) at s:

    d^k H / ds^k = k! * C [-(sE - A)^-1 E]^k (sE - A)^-1 B
    """
    if k < 1:
        raise ValueError("derivative order k must be >= 1")
    A, B, C, D = assemble(plant, theta, tols)
    M = complex(s) * plant.E - A
    singular, smin = is_numerically_singular(M, tols.rank_rtol)
    if singular:
        raise SingularPencil(
            f"s = {s} is numerically a generalized eigenvalue of "
            f"(E, A(theta)) (sigma_min = {smin:.3e})")
    lu, piv = scipy.linalg.lu_factor(M)
    R = scipy.linalg.lu_solve((lu, piv), B.astype(complex))
    for _ in range(k):
        R = -scipy.linalg.lu_solve((lu, piv), plant.E @ R)
    return float(math.factorial(k)) * (C @ R)


def finite_eigenvalues(E: np.ndarray, A: np.ndarray,
                       tols: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    """Finite generalized eigenvalues of the pencil sE - A, sorted."""
    alpha, beta = scipy.linalg.eig(A, E, right=False,
                                   homogeneous_eigvals=True)
    finite = np.abs(beta) > tols.infinite_eig * (np.abs(alpha) +
                                                 np.abs(beta))
    lam = alpha[finite] / beta[finite]
    order = np.lexsort((lam.imag, lam.real))
    return lam[order]


def _pencil_regular(E: np.ndarray, A: np.ndarray,
                    tols: Tolerances) -> tuple[bool, bool]:
    """(regular?, all-QZ-eigenvalues-indeterminate?) for sE - A.

    Regularity is decided by numerically probing det(s0 E - A) at three
    fixed pseudo-random points; the QZ indeterminacy pattern is reported
    alongside as a cross-check.
    """
    alpha, beta = scipy.linalg.eig(A, E, right=False,
                                   homogeneous_eigvals=True)
    scale = max(np.linalg.norm(A, ord=np.inf), np.linalg.norm(E, ord=np.inf),
                1.0)
    indeterminate = (np.abs(alpha) <= 1e-12 * scale) & (np.abs(beta)
                                                        <= 1e-12 * scale)
    all_indet = bool(indeterminate.size and indeterminate.all())
    rng = np.random.default_rng(0x5EED)
    any_nonsingular = False
    for _ in range(3):
        s0 = complex(rng.standard_normal(), rng.standard_normal()) * scale
        singular, _ = is_numerically_singular(s0 * E - A, tols.rank_rtol)
        if not singular:
            any_nonsingular = True
            break
    return (any_nonsingular and not all_indet), all_indet


def check_assumptions(plant: LftPlant, theta,
                      tols: Tolerances = DEFAULT_TOLS) -> AssumptionReport:
    """Report regularity, well-posedness, stability and the finite
    generalized eigenvalues at theta.  Degeneracies are reported, never
    raised."""
    theta = np.asarray(theta, dtype=float).reshape(-1)
    in_box = theta_in_box(plant, theta)
    posed, smin = well_posed(plant, theta, tols)
    notes = []
    if not posed:
        notes.append(f"I - P(theta) D_zv singular (sigma_min = {smin:.3e})")
        return AssumptionReport(regular=None, well_posed=False, stable=None,
                                finite_eigenvalues=np.empty(0, complex),
                                theta_in_box=in_box, notes=notes)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ParameterBoxWarning)
        A, _, _, _ = assemble(plant, theta, tols)
    regular, all_indet = _pencil_regular(plant.E, A, tols)
    if not regular:
        notes.append("pencil sE - A(theta) numerically singular "
                     "(irregular descriptor system)")
        return AssumptionReport(regular=False, well_posed=True, stable=None,
                                finite_eigenvalues=np.empty(0, complex),
                                theta_in_box=in_box,
                                qz_all_indeterminate=all_indet, notes=notes)
    lam = finite_eigenvalues(plant.E, A, tols)
    stable = bool(lam.size == 0 or np.all(lam.real < 0.0))
    if not stable:
        notes.append("a finite generalized eigenvalue has nonnegative "
                     "real part")
    return AssumptionReport(regular=True, well_posed=True, stable=stable,
                            finite_eigenvalues=lam, theta_in_box=in_box,
                            qz_all_indeterminate=all_indet, notes=notes)
