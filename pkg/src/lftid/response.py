"""Response decomposition: steady-state maps, transient flow, sampled
simulation, the single-Jordan-block steady matrix, and tangential values.

The total output splits as y(t) = y_t(t) + y_s(t) with

    y_s(t) = (C X + D Pi) xi(t),
    y_t(t) = C L^-1{(sE - A)^-1} [E x(0) - Z xi(0)],

where (X, Z) solve  E X - Z = 0,  A X + B Pi - Z Xi = 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import igs as igs_mod
from . import model as model_mod
from .errors import (DimensionMismatch, SharedEigenvalue, SingularPencil,
                     SingularT, UnsupportedIndex)
from .model import LftPlant
from .numerics import (DEFAULT_TOLS, Tolerances, is_numerically_singular)


@dataclass(frozen=True)
class SteadyStateMaps:
    """Solution (X, Z) of the steady-state matrix equations together with
    the transient seed xbar0 = E x(0) - Z xi(0) and the solve residual."""

    X: np.ndarray
    Z: np.ndarray
    xbar0: np.ndarray
    residual: float


@dataclass(frozen=True)
class SampleSet:
    """Non-uniform sampling instants with measured outputs.

    measurements has shape (N, m_y); noise_sigma and seed record how the
    noise stream was produced (PCG64 via numpy default_rng)."""

    times: np.ndarray
    measurements: np.ndarray
    noise_sigma: float
    seed: int | None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).reshape(-1)
        meas = np.atleast_2d(np.asarray(self.measurements, dtype=float))
        if meas.shape[0] != times.size:
            raise DimensionMismatch(
                f"{meas.shape[0]} measurement rows for {times.size} times")
        if times.size and np.any(np.diff(times) <= 0):
            raise DimensionMismatch("times must be strictly increasing")
        times.setflags(write=False)
        meas.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "measurements", meas)

    def __len__(self) -> int:
        return self.times.size


@dataclass(frozen=True)
class JordanGenerator:
    """IGS whose transition matrix is a single real Jordan block of size
    m_xi with eigenvalue lambda_r, expressed as Xi = T J T^-1 with a real
    invertible T."""

    lambda_r: float
    T: np.ndarray
    Pi: np.ndarray
    xi0: np.ndarray

    def __post_init__(self):
        T = np.atleast_2d(np.asarray(self.T, dtype=float))
        if T.shape[0] != T.shape[1]:
            raise DimensionMismatch(f"T must be square, got {T.shape}")
        m_xi = T.shape[0]
        singular, smin = is_numerically_singular(T)
        if singular:
            raise SingularT(f"T is numerically singular "
                            f"(sigma_min = {smin:.3e})")
        Pi = np.atleast_2d(np.asarray(self.Pi, dtype=float))
        if Pi.shape[1] != m_xi:
            raise DimensionMismatch(
                f"Pi must have {m_xi} columns, got {Pi.shape}")
        xi0 = np.asarray(self.xi0, dtype=float).reshape(-1)
        if xi0.shape != (m_xi,):
            raise DimensionMismatch(
                f"xi0 must have length {m_xi}, got {xi0.shape}")
        for name, arr in (("T", T), ("Pi", Pi), ("xi0", xi0)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def m_xi(self) -> int:
        return self.T.shape[0]

    def jordan_block(self) -> np.ndarray:
        J = np.eye(self.m_xi) * self.lambda_r
        J += np.diag(np.ones(self.m_xi - 1), k=1)
        return J

    def to_generator(self) -> igs_mod.InputGenerator:
        Xi = self.T @ self.jordan_block() @ np.linalg.inv(self.T)
        return igs_mod.InputGenerator(Xi=Xi, Pi=self.Pi, xi0=self.xi0)


def _check_disjoint_spectra(plant: LftPlant, A: np.ndarray,
                            igs_eigs: np.ndarray, tols: Tolerances) -> None:
    plant_eigs = model_mod.finite_eigenvalues(plant.E, A, tols)
    if plant_eigs.size == 0 or igs_eigs.size == 0:
        return
    rho = max(np.abs(plant_eigs).max(), np.abs(igs_eigs).max())
    dist = np.abs(igs_eigs[:, None] - plant_eigs[None, :]).min()
    if dist <= tols.shared_eig * (1.0 + rho):
        raise SharedEigenvalue(
            "an input-generator eigenvalue is within tolerance of a plant "
            f"eigenvalue (min distance {dist:.3e}); the steady-state "
            "decomposition requires disjoint spectra")


def solve_steady_maps(plant: LftPlant, theta, gen: igs_mod.InputGenerator,
                      x0=None,
                      tols: Tolerances = DEFAULT_TOLS) -> SteadyStateMaps:
    """Solve E X - Z = 0, A X + B Pi - Z Xi = 0 in the eigenbasis of Xi.

    With Z = E X the problem reduces, column by column of X T, to
    x_i = (lambda_i E - A)^-1 B pi_i.  x0 defaults to the zero vector.
    """
    A, B, _, _ = model_mod.assemble(plant, theta, tols)
    spec = igs_mod.decompose(gen, tols)
    _check_disjoint_spectra(plant, A, spec.eigenvalues, tols)
    PiT = gen.Pi.astype(complex) @ spec.T
    cols = np.empty((plant.m_x, gen.m_xi), dtype=complex)
    for i, lam in enumerate(spec.eigenvalues):
        M = lam * plant.E - A
        singular, smin = is_numerically_singular(M, tols.rank_rtol)
        if singular:
            raise SharedEigenvalue(
                f"generator eigenvalue {lam:.6g} makes sE - A(theta) "
                f"numerically singular (sigma_min = {smin:.3e})")
        cols[:, i] = np.linalg.solve(M, B @ PiT[:, i])
    X = (cols @ spec.T_inv).real
    Z = plant.E @ X
    resid = np.linalg.norm(plant.E @ X - Z) + \
        np.linalg.norm(A @ X + B @ gen.Pi - Z @ gen.Xi)
    if x0 is None:
        x0 = np.zeros(plant.m_x)
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape != (plant.m_x,):
        raise DimensionMismatch(
            f"x0 must have length {plant.m_x}, got {x0.shape}")
    xbar0 = plant.E @ x0 - Z @ gen.xi0
    return SteadyStateMaps(X=X, Z=Z, xbar0=xbar0, residual=float(resid))


def steady_matrix_from_tfm(plant: LftPlant, theta, spec: igs_mod.Spectrum,
                           tols: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    """C X + D Pi evaluated through transfer-function values:

    [H(lam_1) pibar_1  ...  H(lam_mxi) pibar_mxi] T^-1
    """
    cols = []
    for i in range(spec.m_r):
        lam = spec.real_eigs[i]
        try:
            H = model_mod.eval_tfm(plant, theta, lam, tols)
        except SingularPencil as exc:
            raise SharedEigenvalue(
                f"generator eigenvalue {lam:.6g} is a plant eigenvalue"
            ) from exc
        cols.append(H @ spec.pi_bar_real[:, i].astype(complex))
    for i in range(spec.m_c):
        lam = complex(spec.complex_pairs[i, 0], spec.complex_pairs[i, 1])
        try:
            H = model_mod.eval_tfm(plant, theta, lam, tols)
        except SingularPencil as exc:
            raise SharedEigenvalue(
                f"generator eigenvalue {lam:.6g} is a plant eigenvalue"
            ) from exc
        pib = spec.pi_bar_complex[:, i]
        cols.append(H @ pib)
        cols.append(H.conj() @ pib.conj())
    raw = np.column_stack(cols) @ spec.T_inv
    scale = 1.0 + np.abs(raw.real).max(initial=0.0)
    if np.abs(raw.imag).max(initial=0.0) > 1e-10 * scale:
        raise SingularT(
            "steady-state matrix has a large imaginary residue; the "
            "spectrum is inconsistent")
    return raw.real


def _real_block_form(gen: igs_mod.InputGenerator, spec: igs_mod.Spectrum):
    """Real similarity S putting Xi into block form
    diag(real modes, [[sigma, -omega], [omega, sigma]] blocks), plus the
    transformed output columns Pi S and initial state S^-1 xi0."""
    m_r, m_c = spec.m_r, spec.m_c
    S = np.empty((spec.m_xi, spec.m_xi))
    S[:, :m_r] = spec.T[:, :m_r].real
    for i in range(m_c):
        v = spec.T[:, m_r + 2 * i]
        S[:, m_r + 2 * i] = v.real
        S[:, m_r + 2 * i + 1] = -v.imag
    PiS = gen.Pi @ S
    zeta0 = np.linalg.solve(S, gen.xi0)
    return PiS, zeta0


def steady_output(plant: LftPlant, theta, gen: igs_mod.InputGenerator,
                  t: float, tols: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    """Steady-state response at time t, evaluated mode by mode:

    sum over real modes of H(lam_i) pi_i e^{lam_i t} zeta_i(0), plus the
    rotation-block terms built from [Re H, Im H] and the cos/sin matrix.
    """
    spec = igs_mod.decompose(gen, tols)
    PiS, zeta0 = _real_block_form(gen, spec)
    m_r, m_c = spec.m_r, spec.m_c
    y = np.zeros(plant.m_y)
    for i in range(m_r):
        lam = spec.real_eigs[i]
        try:
            H = model_mod.eval_tfm(plant, theta, lam, tols).real
        except SingularPencil as exc:
            raise SharedEigenvalue(
                f"generator eigenvalue {lam:.6g} is a plant eigenvalue"
            ) from exc
        y += (H @ PiS[:, i]) * (math.exp(lam * t) * zeta0[i])
    for i in range(m_c):
        sig, omg = spec.complex_pairs[i]
        try:
            H = model_mod.eval_tfm(plant, theta, complex(sig, omg), tols)
        except SingularPencil as exc:
            raise SharedEigenvalue(
                f"generator eigenvalue {complex(sig, omg):.6g} is a plant "
                "eigenvalue") from exc
        pr = PiS[:, m_r + 2 * i]
        pi = PiS[:, m_r + 2 * i + 1]
        direction = np.column_stack([np.concatenate([pr, pi]),
                                     np.concatenate([pi, -pr])])
        Hri = np.hstack([H.real, H.imag])
        c, s = math.cos(omg * t), math.sin(omg * t)
        rot = math.exp(sig * t) * np.array([[c, -s], [s, c]])
        y += Hri @ direction @ rot @ zeta0[m_r + 2 * i: m_r + 2 * i + 2]
    return y


@dataclass(frozen=True)
class TransientFlow:
    """Finite-dynamics flow of the pencil: y_t(t) = CR expm(F t) L xbar0."""

    F: np.ndarray
    CR: np.ndarray
    L: np.ndarray

    def outputs(self, xbar0: np.ndarray, times) -> np.ndarray:
        """Transient outputs, shape (N, m_y)."""
        times = np.asarray(times, dtype=float).reshape(-1)
        w0 = self.L @ xbar0
        n1 = self.F.shape[0]
        if n1 == 0 or times.size == 0:
            return np.zeros((times.size, self.CR.shape[0]))
        lam, V = np.linalg.eig(self.F)
        sv = np.linalg.svd(V, compute_uv=False)
        if sv[-1] > 1e-9 * sv[0]:
            c0 = np.linalg.solve(V, w0.astype(complex))
            states = (V @ (np.exp(np.outer(lam, times)) * c0[:, None])).real
        else:
            states = np.column_stack(
                [scipy.linalg.expm(self.F * t) @ w0 for t in times])
        return (self.CR @ states).T


def transient_flow(plant: LftPlant, theta,
                   tols: Tolerances = DEFAULT_TOLS) -> TransientFlow:
    """Split the pencil sE - A(theta) into its finite part (QZ reordering
    plus a decoupling Sylvester solve) and return the resulting flow.

    Raises UnsupportedIndex when the infinite block is not nilpotent of
    index <= 1 (impulsive modes)."""
    A, _, C, _ = model_mod.assemble(plant, theta, tols)
    E = plant.E
    n = plant.m_x

    def finite_sel(alpha, beta):
        return np.abs(beta) > tols.infinite_eig * (np.abs(alpha) +
                                                   np.abs(beta))

    AA, EE, alpha, beta, Q, Zm = scipy.linalg.ordqz(A, E, sort=finite_sel,
                                                    output="real")
    n1 = int(np.count_nonzero(finite_sel(alpha, beta)))
    A11, A12, A22 = AA[:n1, :n1], AA[:n1, n1:], AA[n1:, n1:]
    E11, E12, E22 = EE[:n1, :n1], EE[:n1, n1:], EE[n1:, n1:]
    n2 = n - n1
    if n2 and np.linalg.norm(E22) > 1e-8 * max(np.linalg.norm(E), 1.0):
        raise UnsupportedIndex(
            "pencil has nilpotency index >= 2 (impulsive modes are out of "
            "scope)")
    if n1 == 0:
        return TransientFlow(F=np.empty((0, 0)), CR=np.empty((plant.m_y, 0)),
                             L=np.empty((0, n)))
    Qt = Q.T
    if n2:
        # decouple: A11 R + L A22 = -A12, E11 R + L E22 = -E12
        In1, In2 = np.eye(n1), np.eye(n2)
        top = np.hstack([np.kron(In2, A11), np.kron(A22.T, In1)])
        bot = np.hstack([np.kron(In2, E11), np.kron(E22.T, In1)])
        rhs = -np.concatenate([A12.ravel(order="F"), E12.ravel(order="F")])
        sol = np.linalg.solve(np.vstack([top, bot]), rhs)
        Lc = sol[n1 * n2:].reshape((n1, n2), order="F")
        Lmap = np.linalg.solve(E11, Qt[:n1] + Lc @ Qt[n1:])
    else:
        Lmap = np.linalg.solve(E11, Qt)
    F = np.linalg.solve(E11, A11)
    return TransientFlow(F=F, CR=C @ Zm[:, :n1], L=Lmap)


def transient_output(plant: LftPlant, theta, x0,
                     gen: igs_mod.InputGenerator, t: float,
                     tols: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    """Transient response at time t from initial states (x0, xi0)."""
    maps = solve_steady_maps(plant, theta, gen, x0=x0, tols=tols)
    flow = transient_flow(plant, theta, tols)
    return flow.outputs(maps.xbar0, [t])[0]


def simulate_samples(plant: LftPlant, theta, x0,
                     gen: igs_mod.InputGenerator, times, sigma: float,
                     seed: int | None,
                     tols: Tolerances = DEFAULT_TOLS) -> SampleSet:
    """Sampled noisy measurements y_m(t_k) = y_s(t_k) + y_t(t_k) + n(t_k),
    with n drawn iid N(0, sigma^2 I) from a seeded PCG64 stream."""
    times = np.asarray(times, dtype=float).reshape(-1)
    if times.size and (np.any(np.diff(times) <= 0) or times[0] < 0):
        raise DimensionMismatch("times must be strictly increasing and >= 0")
    spec = igs_mod.decompose(gen, tols)
    maps = solve_steady_maps(plant, theta, gen, x0=x0, tols=tols)
    M = steady_matrix_from_tfm(plant, theta, spec, tols)
    ys = (M @ igs_mod.states_at(gen, times)).T
    flow = transient_flow(plant, theta, tols)
    yt = flow.outputs(maps.xbar0, times)
    y = ys + yt
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if sigma > 0:
        rng = np.random.default_rng(seed)
        y = y + sigma * rng.standard_normal(y.shape)
    return SampleSet(times=times, measurements=y, noise_sigma=float(sigma),
                     seed=seed)


def steady_matrix_jordan(plant: LftPlant, theta, jgen: JordanGenerator,
                         tols: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    """C X + D Pi for a single real Jordan block: column i collects
    sum_k d^k H(lambda_r)/ds^k * pibar_{i-k} / k!  mapped through T^-1."""
    lam = jgen.lambda_r
    m_xi = jgen.m_xi
    derivs = [model_mod.eval_tfm(plant, theta, lam, tols).real]
    for k in range(1, m_xi):
        derivs.append(model_mod.tfm_derivative(plant, theta, lam, k,
                                               tols).real / math.factorial(k))
    PiT = jgen.Pi @ jgen.T
    cols = []
    for i in range(1, m_xi + 1):
        col = np.zeros(plant.m_y)
        for k in range(i):
            col += derivs[k] @ PiT[:, i - k - 1]
        cols.append(col)
    return np.column_stack(cols) @ np.linalg.inv(jgen.T)


def tangential_value(H_at_lambda: np.ndarray, pi) -> np.ndarray:
    """Right tangential value H(lambda) pi, assembled from real and
    imaginary parts.

    With H(lambda) = Hr - j Hi (the conjugate-point split) and
    pi = pr + j pi_, the product is
    [Hr pr + Hi pi_] + j [Hr pi_ - Hi pr]; an identity rearrangement of
    the direct complex product."""
    H = np.atleast_2d(np.asarray(H_at_lambda, dtype=complex))
    pi = np.asarray(pi, dtype=complex).reshape(-1)
    if H.shape[1] != pi.size:
        raise DimensionMismatch(
            f"direction length {pi.size} != H columns {H.shape[1]}")
    Hr, Hi = H.real, -H.imag
    pr, pim = pi.real, pi.imag
    return (Hr @ pr + Hi @ pim) + 1j * (Hr @ pim - Hi @ pr)
