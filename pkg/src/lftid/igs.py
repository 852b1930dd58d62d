"""Autonomous input-generating system (IGS) and its spectral decomposition.

The probing signal is u(t) = Pi xi(t) with xi'(t) = Xi xi(t).  All
downstream estimation quantities are built from the eigen-decomposition
Xi = T Lambda T^-1, with T's columns ordered as

    [real modes ascending | (v, v*) per complex pair, omega ascending]

and every eigenvector scaled so its first significant entry equals 1.
This pins T (and hence all regressors) to a reproducible value.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (ComponentNotReal, DefectiveGenerator, DimensionMismatch,
                     GeneratorEigenvalueWarning, NearRepeatedEigenvalues)
from .numerics import DEFAULT_TOLS, Tolerances, rank_cutoff


@dataclass(frozen=True)
class InputGenerator:
    """The known signal generator: Xi (m_xi x m_xi), Pi (m_u x m_xi) and
    the initial state xi0."""

    Xi: np.ndarray
    Pi: np.ndarray
    xi0: np.ndarray

    def __post_init__(self):
        Xi = np.atleast_2d(np.asarray(self.Xi, dtype=float))
        if Xi.shape[0] != Xi.shape[1]:
            raise DimensionMismatch(f"Xi must be square, got {Xi.shape}")
        m_xi = Xi.shape[0]
        Pi = np.atleast_2d(np.asarray(self.Pi, dtype=float))
        if Pi.shape[1] != m_xi:
            raise DimensionMismatch(
                f"Pi must have {m_xi} columns, got {Pi.shape}")
        xi0 = np.asarray(self.xi0, dtype=float).reshape(-1)
        if xi0.shape != (m_xi,):
            raise DimensionMismatch(
                f"xi0 must have length {m_xi}, got {xi0.shape}")
        for name, arr in (("Xi", Xi), ("Pi", Pi), ("xi0", xi0)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def m_xi(self) -> int:
        return self.Xi.shape[0]

    @property
    def m_u(self) -> int:
        return self.Pi.shape[0]


@dataclass(frozen=True)
class Spectrum:
    """Eigen-structure of a diagonalizable generator.

    real_eigs       (m_r,) ascending
    complex_pairs   (m_c, 2) rows (sigma, omega), omega > 0, sorted by
                    (omega, sigma)
    T               (m_xi, m_xi) complex eigenvector matrix, columns
                    [t_r,1 .. t_r,mr, t_c,1, t_c,1*, ...]
    T_inv           cached inverse of T
    eigenvalues     (m_xi,) eigenvalues in T's column order
    pi_bar_real     (m_u, m_r) columns Pi t_r,i
    pi_bar_complex  (m_u, m_c) columns Pi t_c,i
    """

    real_eigs: np.ndarray
    complex_pairs: np.ndarray
    T: np.ndarray
    T_inv: np.ndarray
    eigenvalues: np.ndarray
    pi_bar_real: np.ndarray
    pi_bar_complex: np.ndarray

    @property
    def m_r(self) -> int:
        return self.real_eigs.size

    @property
    def m_c(self) -> int:
        return self.complex_pairs.shape[0]

    @property
    def m_xi(self) -> int:
        return self.T.shape[0]

    def complex_eigs(self) -> np.ndarray:
        """sigma + j omega for each pair."""
        if self.m_c == 0:
            return np.empty(0, complex)
        return self.complex_pairs[:, 0] + 1j * self.complex_pairs[:, 1]


def _normalize_column(v: np.ndarray) -> np.ndarray:
    """Scale an eigenvector so its first significant entry equals 1."""
    mags = np.abs(v)
    peak = mags.max()
    idx = int(np.argmax(mags > 1e-8 * peak))
    return v / v[idx]


def decompose(gen: InputGenerator,
              tols: Tolerances = DEFAULT_TOLS) -> Spectrum:
    """Spectral decomposition of Xi into real modes and conjugate pairs.

    Raises DefectiveGenerator when Xi is numerically non-diagonalizable.
    Near-repeated eigenvalues and eigenvalues with negative real part are
    reported as warnings, not errors.
    """
    lam, V = np.linalg.eig(gen.Xi)
    m_xi = gen.m_xi
    scale = 1.0 + np.abs(lam).max(initial=0.0)

    for i in range(m_xi):
        for j in range(i + 1, m_xi):
            if abs(lam[i] - lam[j]) <= tols.eig_distinct * scale:
                warnings.warn(
                    f"generator eigenvalues {lam[i]:.6g} and {lam[j]:.6g} "
                    "are closer than the distinctness tolerance",
                    NearRepeatedEigenvalues, stacklevel=2)
    if np.any(lam.real < -tols.eig_distinct * scale):
        warnings.warn("a generator eigenvalue has negative real part",
                      GeneratorEigenvalueWarning, stacklevel=2)

    imag_tol = 100 * np.finfo(float).eps * scale
    real_idx = [i for i in range(m_xi) if abs(lam[i].imag) <= imag_tol]
    pos_idx = [i for i in range(m_xi) if lam[i].imag > imag_tol]
    neg_idx = [i for i in range(m_xi) if lam[i].imag < -imag_tol]
    if len(pos_idx) != len(neg_idx):
        raise DefectiveGenerator(
            "complex eigenvalues of Xi do not split into conjugate pairs")

    real_idx.sort(key=lambda i: lam[i].real)
    pos_idx.sort(key=lambda i: (lam[i].imag, lam[i].real))

    real_eigs = np.array([lam[i].real for i in real_idx])
    pairs = np.array([[lam[i].real, lam[i].imag] for i in pos_idx])
    pairs = pairs.reshape(len(pos_idx), 2)

    cols: list[np.ndarray] = []
    for i in real_idx:
        v = _normalize_column(V[:, i])
        cols.append(v.real.astype(complex))
    for i in pos_idx:
        v = _normalize_column(V[:, i])
        cols.append(v)
        cols.append(v.conj())
    T = np.column_stack(cols) if cols else np.empty((0, 0), complex)

    sv = np.linalg.svd(T, compute_uv=False)
    if sv.size and sv[-1] <= rank_cutoff(sv, T.shape, tols.rank_rtol):
        raise DefectiveGenerator(
            "eigenvector matrix of Xi is numerically singular (geometric "
            "multiplicity below algebraic multiplicity)")
    T_inv = np.linalg.inv(T)

    eigvals = np.concatenate([
        real_eigs.astype(complex),
        np.ravel([[s + 1j * w, s - 1j * w] for s, w in pairs])
        if len(pairs) else np.empty(0, complex),
    ])
    Pi = gen.Pi.astype(complex)
    pi_bar_real = (Pi @ T[:, :len(real_idx)]).real
    pi_bar_complex = Pi @ T[:, len(real_idx)::2] if pos_idx else \
        np.empty((gen.m_u, 0), complex)
    return Spectrum(real_eigs=real_eigs, complex_pairs=pairs, T=T,
                    T_inv=T_inv, eigenvalues=eigvals,
                    pi_bar_real=pi_bar_real, pi_bar_complex=pi_bar_complex)


def state_at(gen: InputGenerator, t: float) -> np.ndarray:
    """xi(t) = expm(Xi t) xi(0) for t >= 0."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    return scipy.linalg.expm(gen.Xi * float(t)) @ gen.xi0


def states_at(gen: InputGenerator, times) -> np.ndarray:
    """xi(t_k) for an array of times, shape (m_xi, N).

    Uses the eigen-decomposition when Xi is diagonalizable, otherwise an
    expm per instant.
    """
    times = np.asarray(times, dtype=float).reshape(-1)
    try:
        spec = decompose(gen)
    except DefectiveGenerator:
        return np.column_stack([state_at(gen, t) for t in times]) \
            if times.size else np.empty((gen.m_xi, 0))
    c0 = spec.T_inv @ gen.xi0.astype(complex)
    phases = np.exp(np.outer(spec.eigenvalues, times))
    return (spec.T @ (phases * c0[:, None])).real


def xi_bar_components(spec: Spectrum, xi_t,
                      tols: Tolerances = DEFAULT_TOLS
                      ) -> tuple[np.ndarray, np.ndarray]:
    """Split T^-1 xi(t) into its m_r real scalars and the first member of
    each conjugate pair.

    Raises ComponentNotReal when a nominally real component has a large
    imaginary residue or a pair fails to be conjugate (mis-paired
    spectrum)."""
    xr, xc = xi_bar_matrix(spec, np.asarray(xi_t, dtype=float).reshape(-1, 1),
                           tols)
    return xr[:, 0], xc[:, 0]


def xi_bar_matrix(spec: Spectrum, states: np.ndarray,
                  tols: Tolerances = DEFAULT_TOLS
                  ) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized xi_bar_components over columns of ``states``."""
    if states.shape[0] != spec.m_xi:
        raise DimensionMismatch(
            f"state column length {states.shape[0]} != m_xi {spec.m_xi}")
    comps = spec.T_inv @ states.astype(complex)
    m_r = spec.m_r
    real_part = comps[:m_r]
    bad = np.abs(real_part.imag) > tols.component_imag * \
        (1.0 + np.abs(real_part.real))
    if bad.any():
        raise ComponentNotReal(
            "a nominally real spectral component has imaginary residue "
            f"{np.abs(real_part.imag).max():.3e}")
    first = comps[m_r::2]
    second = comps[m_r + 1::2]
    mism = np.abs(first - second.conj()) > tols.component_imag * \
        (1.0 + np.abs(first))
    if mism.any():
        raise ComponentNotReal(
            "a conjugate component pair is mis-paired (max mismatch "
            f"{np.abs(first - second.conj()).max():.3e})")
    return real_part.real, first


def reconstruct_state(spec: Spectrum, xr: np.ndarray,
                      xc: np.ndarray) -> np.ndarray:
    """Rebuild xi(t) from its split components (round-trip helper)."""
    comps = np.empty(spec.m_xi, complex)
    comps[:spec.m_r] = xr
    comps[spec.m_r::2] = xc
    comps[spec.m_r + 1::2] = np.conj(xc)
    return (spec.T @ comps).real
