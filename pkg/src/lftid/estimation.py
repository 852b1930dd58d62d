"""Two-step least-squares identification.

Step 1 (nonparametric): regress the shifted measurements Ybar on the
regressors Ubar built from the generator spectrum, giving the stacked
transfer values Hbar at the generator eigenvalues (batch or recursive).

Step 2 (parametric): vectorize the relations between Hbar, the
parameter-free blocks G_yv/G_zv and P(theta) into Psi theta = hbar + e
and solve by least squares.

Excitation and identifiability rank diagnostics live here as well.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import igs as igs_mod
from . import model as model_mod
from .errors import (Assumption7Violated, DimensionMismatch,
                     NotIdentifiableFromData, NotPersistentlyExciting,
                     SingularPencil)
from .igs import InputGenerator, Spectrum
from .model import GValues, LftPlant
from .numerics import (DEFAULT_TOLS, Tolerances, rank_cutoff,
                       right_null_basis)
from .response import SampleSet


@dataclass(frozen=True)
class Regression:
    """Column-per-sample regression data.

    Ybar    (m_y, N)                     shifted measurements
    Ubar    ((m_r + 2 m_c) m_z, N)       regressors (with the factor-2 /
                                         sign bookkeeping on complex blocks)
    Utilde  ((m_r + 2 m_c) m_u, N)       generator-only regressors
    """

    Ybar: np.ndarray
    Ubar: np.ndarray
    Utilde: np.ndarray
    spectrum: Spectrum
    g_real: tuple[GValues, ...]
    g_complex: tuple[GValues, ...]
    m_z: int
    m_u: int

    @property
    def n_samples(self) -> int:
        return self.Ybar.shape[1]


@dataclass(frozen=True)
class TfmEstimate:
    """Stacked nonparametric estimate of the transfer values.

    Hbar has one m_z-wide block per real eigenvalue followed by two
    blocks (real part, imaginary part) per complex pair; Phi is the
    inverse Gram matrix of the regressors."""

    Hbar: np.ndarray
    Phi: np.ndarray
    n_samples: int
    spectrum: Spectrum
    m_z: int

    def block_real(self, i: int) -> np.ndarray:
        w = self.m_z
        return self.Hbar[:, i * w:(i + 1) * w]

    def block_complex(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        w = self.m_z
        base = (self.spectrum.m_r + 2 * i) * w
        return (self.Hbar[:, base:base + w],
                self.Hbar[:, base + w:base + 2 * w])

    def block_labels(self) -> list[tuple[str, complex]]:
        labels = [("real", complex(lam)) for lam in self.spectrum.real_eigs]
        for sig, omg in self.spectrum.complex_pairs:
            lam = complex(sig, omg)
            labels.append(("complex_re", lam))
            labels.append(("complex_im", lam))
        return labels


@dataclass(frozen=True)
class ParametricSystem:
    """Vectorized parametric regression Psi theta = hbar + e, plus the
    diagnostic factors Psi_p (columns vec(P_k)) and optionally
    Psi_g(theta_ref)."""

    Psi: np.ndarray
    hbar: np.ndarray
    Psi_p: np.ndarray
    Psi_g: np.ndarray | None = None


@dataclass(frozen=True)
class ThetaEstimate:
    theta: np.ndarray
    residual: float
    sigma_min: float


@dataclass
class ExcitationReport:
    """Rank diagnostics for excitation (step 1) and identifiability
    (step 2)."""

    gzu_block: np.ndarray
    gzu_frr: bool
    gzu_sigma_min: float
    ubar_frr: bool
    ubar_sigma_min: float
    augmented_utilde_frr: bool
    augmented_utilde_sigma_min: float
    fsN: float
    psi_fcr: bool | None = None
    psi_sigma_min: float | None = None
    identifiable_at_theta: bool | None = None
    psi_g_psi_p_sigma_min: float | None = None
    notes: list[str] = field(default_factory=list)

    def as_text(self) -> str:
        lines = [
            f"gzu_frr = {_passfail(self.gzu_frr)}",
            f"gzu_sigma_min = {self.gzu_sigma_min:.6e}",
            f"ubar_frr = {_passfail(self.ubar_frr)}",
            f"ubar_sigma_min = {self.ubar_sigma_min:.6e}",
            f"augmented_utilde_frr = {_passfail(self.augmented_utilde_frr)}",
            f"augmented_utilde_sigma_min = {self.augmented_utilde_sigma_min:.6e}",
            f"fsN = {self.fsN:.6e}",
        ]
        if self.psi_fcr is not None:
            lines.append(f"psi_fcr = {_passfail(self.psi_fcr)}")
            lines.append(f"psi_sigma_min = {self.psi_sigma_min:.6e}")
        if self.identifiable_at_theta is not None:
            lines.append("identifiable_at_theta = "
                         f"{_passfail(self.identifiable_at_theta)}")
            lines.append("psi_g_psi_p_sigma_min = "
                         f"{self.psi_g_psi_p_sigma_min:.6e}")
        for note in self.notes:
            lines.append(f"note = {note}")
        return "\n".join(lines)


def _passfail(flag: bool) -> str:
    return "PASS" if flag else "FAIL"


def _g_at_eigenvalues(plant: LftPlant, spec: Spectrum, tols: Tolerances
                      ) -> tuple[tuple[GValues, ...], tuple[GValues, ...]]:
    g_real = []
    for lam in spec.real_eigs:
        try:
            g = model_mod.eval_g(plant, lam, tols)
        except SingularPencil as exc:
            raise Assumption7Violated(
                f"generator eigenvalue {lam:.6g} is a generalized "
                "eigenvalue of (E, A_xx)") from exc
        g_real.append(GValues(*(m.real for m in g)))
    g_complex = []
    for sig, omg in spec.complex_pairs:
        lam = complex(sig, omg)
        try:
            g = model_mod.eval_g(plant, lam, tols)
        except SingularPencil as exc:
            raise Assumption7Violated(
                f"generator eigenvalue {lam:.6g} is a generalized "
                "eigenvalue of (E, A_xx)") from exc
        g_complex.append(g)
    return tuple(g_real), tuple(g_complex)


def build_regression(plant: LftPlant, gen: InputGenerator,
                     samples: SampleSet,
                     tols: Tolerances = DEFAULT_TOLS) -> Regression:
    """Assemble (Ybar, Ubar, Utilde) from a sample set.

    Per sample: split T^-1 xi(t_k) into spectral components, subtract the
    G_yu steady contribution from y_m(t_k), and stack

        ubar  = col{ xi_r,i Gzu(lam_r,i) pibar_r,i ;
                     2 [Re w_i; -Im w_i] },   w_i = xi_c,i Gzu pibar_c,i
        utilde = col{ xi_r,i pibar_r,i ; [Re v_i; Im v_i] },
                     v_i = xi_c,i pibar_c,i
    """
    if samples.measurements.shape[1] != plant.m_y:
        raise DimensionMismatch(
            f"samples have {samples.measurements.shape[1]} output "
            f"channels but the plant has m_y = {plant.m_y}")
    spec = igs_mod.decompose(gen, tols)
    g_real, g_complex = _g_at_eigenvalues(plant, spec, tols)
    states = igs_mod.states_at(gen, samples.times)
    xr, xc = igs_mod.xi_bar_matrix(spec, states, tols)
    N = len(samples)
    m_z, m_u = plant.m_z, plant.m_u
    m_r, m_c = spec.m_r, spec.m_c

    Y = samples.measurements.T.copy()
    for i in range(m_r):
        gyu_pi = g_real[i].yu @ spec.pi_bar_real[:, i]
        Y -= np.outer(gyu_pi, xr[i])
    for i in range(m_c):
        gyu_pi = g_complex[i].yu @ spec.pi_bar_complex[:, i]
        Y -= 2.0 * np.real(np.outer(gyu_pi, xc[i]))

    Ubar = np.empty(((m_r + 2 * m_c) * m_z, N))
    Util = np.empty(((m_r + 2 * m_c) * m_u, N))
    for i in range(m_r):
        gzu_pi = g_real[i].zu @ spec.pi_bar_real[:, i]
        Ubar[i * m_z:(i + 1) * m_z] = np.outer(gzu_pi, xr[i])
        Util[i * m_u:(i + 1) * m_u] = np.outer(spec.pi_bar_real[:, i], xr[i])
    for i in range(m_c):
        w = np.outer(g_complex[i].zu @ spec.pi_bar_complex[:, i], xc[i])
        base = (m_r + 2 * i) * m_z
        Ubar[base:base + m_z] = 2.0 * w.real
        Ubar[base + m_z:base + 2 * m_z] = -2.0 * w.imag
        v = np.outer(spec.pi_bar_complex[:, i], xc[i])
        base = (m_r + 2 * i) * m_u
        Util[base:base + m_u] = v.real
        Util[base + m_u:base + 2 * m_u] = v.imag
    return Regression(Ybar=Y, Ubar=Ubar, Utilde=Util, spectrum=spec,
                      g_real=g_real, g_complex=g_complex, m_z=m_z, m_u=m_u)


def estimate_tfm(reg: Regression,
                 tols: Tolerances = DEFAULT_TOLS) -> TfmEstimate:
    """Batch least squares: Hbar_hat = Ybar Ubar^T (Ubar Ubar^T)^-1."""
    rows, N = reg.Ubar.shape
    if N < rows:
        raise NotPersistentlyExciting(
            f"{N} samples cannot excite {rows} regressor rows", 0.0)
    sv = np.linalg.svd(reg.Ubar, compute_uv=False)
    cut = rank_cutoff(sv, reg.Ubar.shape, tols.rank_rtol)
    if sv[-1] <= cut:
        raise NotPersistentlyExciting(
            f"regressor matrix is numerically rank deficient "
            f"(sigma_min = {sv[-1]:.3e})", float(sv[-1]))
    gram = reg.Ubar @ reg.Ubar.T
    Phi = np.linalg.inv(gram)
    Phi = 0.5 * (Phi + Phi.T)
    Hbar = reg.Ybar @ reg.Ubar.T @ Phi
    return TfmEstimate(Hbar=Hbar, Phi=Phi, n_samples=N,
                       spectrum=reg.spectrum, m_z=reg.m_z)


def update_tfm(est: TfmEstimate, y_new, u_new) -> TfmEstimate:
    """Rank-one recursive update:

    Phi(N)  = Phi(N-1) - [Phi u][Phi u]^T / (1 + u^T Phi u)
    Hbar(N) = Hbar(N-1) + [y - Hbar(N-1) u] [Phi(N-1) u]^T /
              (1 + u^T Phi(N-1) u)
    """
    u = np.asarray(u_new, dtype=float).reshape(-1)
    y = np.asarray(y_new, dtype=float).reshape(-1)
    Phi_u = est.Phi @ u
    denom = 1.0 + float(u @ Phi_u)
    Phi = est.Phi - np.outer(Phi_u, Phi_u) / denom
    innovation = y - est.Hbar @ u
    Hbar = est.Hbar + np.outer(innovation, Phi_u) / denom
    return TfmEstimate(Hbar=Hbar, Phi=Phi, n_samples=est.n_samples + 1,
                       spectrum=est.spectrum, m_z=est.m_z)


def _vec(M: np.ndarray) -> np.ndarray:
    return np.ravel(M, order="F")


def _parametric_row_matrices(est: TfmEstimate, g_real, g_complex
                             ) -> list[np.ndarray]:
    """The m_xi row factors M_i with psi_ik = vec(M_i P_k)."""
    rows = []
    for i in range(est.spectrum.m_r):
        Hr = est.block_real(i)
        rows.append(g_real[i].yv + Hr @ g_real[i].zv)
    for i in range(est.spectrum.m_c):
        Hre, Him = est.block_complex(i)
        gyv, gzv = g_complex[i].yv, g_complex[i].zv
        rows.append(gyv.real + Hre @ gzv.real - Him @ gzv.imag)
        rows.append(gyv.imag + Hre @ gzv.imag + Him @ gzv.real)
    return rows


def build_parametric(plant: LftPlant, spec: Spectrum, est: TfmEstimate,
                     theta_ref=None,
                     tols: Tolerances = DEFAULT_TOLS) -> ParametricSystem:
    """Assemble Psi theta = hbar from the nonparametric estimate.

    When theta_ref is given, the diagnostic factor Psi_g(theta_ref) is
    built as well (identifiability checks use rank of Psi_g Psi_p)."""
    g_real, g_complex = _g_at_eigenvalues(plant, spec, tols)
    rows = _parametric_row_matrices(est, g_real, g_complex)
    blocks = [np.column_stack([_vec(M @ Pk) for Pk in plant.basis])
              for M in rows]
    Psi = np.vstack(blocks)

    hparts = [_vec(est.block_real(i)) for i in range(spec.m_r)]
    for i in range(spec.m_c):
        Hre, Him = est.block_complex(i)
        hparts.append(_vec(Hre))
        hparts.append(_vec(Him))
    hbar = np.concatenate(hparts)

    Psi_p = np.column_stack([_vec(Pk) for Pk in plant.basis])
    Psi_g = None
    if theta_ref is not None:
        Psi_g = psi_g_matrix(plant, spec, theta_ref, tols)
    return ParametricSystem(Psi=Psi, hbar=hbar, Psi_p=Psi_p, Psi_g=Psi_g)


def psi_g_matrix(plant: LftPlant, spec: Spectrum, theta,
                 tols: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    """Stacked blocks I_{m_z} (x) G_yv(lam)[I - P(theta) G_zv(lam)]^-1
    (real and imaginary parts on complex pairs)."""
    P = model_mod.p_of_theta(plant, theta)
    g_real, g_complex = _g_at_eigenvalues(plant, spec, tols)
    eye_z = np.eye(plant.m_z)
    blocks = []
    for g in g_real:
        M = g.yv @ np.linalg.inv(np.eye(plant.m_v) - P @ g.zv)
        blocks.append(np.kron(eye_z, M))
    for g in g_complex:
        M = g.yv @ np.linalg.inv(np.eye(plant.m_v).astype(complex)
                                 - P @ g.zv)
        blocks.append(np.kron(eye_z, M.real))
        blocks.append(np.kron(eye_z, M.imag))
    return np.vstack(blocks)


def estimate_theta(ps: ParametricSystem,
                   tols: Tolerances = DEFAULT_TOLS) -> ThetaEstimate:
    """Least-squares theta from Psi theta ~ hbar via orthogonal
    factorization (never the normal equations)."""
    sv = np.linalg.svd(ps.Psi, compute_uv=False)
    cut = rank_cutoff(sv, ps.Psi.shape, tols.rank_rtol)
    smin = float(sv[-1]) if sv.size else 0.0
    if ps.Psi.shape[0] < ps.Psi.shape[1] or smin <= cut:
        raise NotIdentifiableFromData(
            f"parametric regressor is column-rank deficient "
            f"(sigma_min = {smin:.3e})", smin)
    theta, _, _, _ = scipy.linalg.lstsq(ps.Psi, ps.hbar,
                                        lapack_driver="gelsd")
    resid = float(np.linalg.norm(ps.Psi @ theta - ps.hbar))
    return ThetaEstimate(theta=theta, residual=resid, sigma_min=smin)


def gzu_block_matrix(plant: LftPlant, spec: Spectrum,
                     tols: Tolerances = DEFAULT_TOLS) -> np.ndarray:
    """Block-diagonal G_zu over the generator spectrum:

    diag{ Gzu(lam_r,i) ;  [[Re Gzu, -Im Gzu], [-Im Gzu, -Re Gzu]] }

    It relates the regressor stacks by Ubar = D2 Gzu_block Utilde with
    D2 = diag(I on real blocks, 2I on complex blocks); the factor 2 is
    the bookkeeping constant carried by Ubar's complex blocks.
    """
    g_real, g_complex = _g_at_eigenvalues(plant, spec, tols)
    blocks = [g.zu for g in g_real]
    for g in g_complex:
        gr, gi = g.zu.real, g.zu.imag
        blocks.append(np.block([[gr, -gi], [-gi, -gr]]))
    return scipy.linalg.block_diag(*blocks) if blocks else np.empty((0, 0))


def complex_block_scaling(spec: Spectrum, m_z: int) -> np.ndarray:
    """diag(1 on real rows, 2 on complex rows) matching Ubar's stacking."""
    d = np.ones((spec.m_r + 2 * spec.m_c) * m_z)
    d[spec.m_r * m_z:] = 2.0
    return np.diag(d)


def check_excitation(plant: LftPlant, spec: Spectrum,
                     reg: Regression | None = None,
                     ps: ParametricSystem | None = None,
                     tols: Tolerances = DEFAULT_TOLS) -> ExcitationReport:
    """Rank diagnostics: FRR of the block G_zu matrix, FRR of Ubar, the
    combined [Utilde  Gzu_perp] condition, the empirical excitation level
    f_s(N) = lambda_min(Utilde Utilde^T), and (when a parametric system
    is supplied) FCR of Psi and identifiability via rank of Psi_g Psi_p."""
    gzu = gzu_block_matrix(plant, spec, tols)

    def frr(mat):
        if mat.size == 0 or mat.shape[0] > mat.shape[1]:
            sv = np.linalg.svd(mat, compute_uv=False) if mat.size else \
                np.empty(0)
            return False, float(sv[-1]) if sv.size else 0.0
        sv = np.linalg.svd(mat, compute_uv=False)
        cut = rank_cutoff(sv, mat.shape, tols.rank_rtol)
        return bool(sv[-1] > cut), float(sv[-1])

    gzu_frr, gzu_smin = frr(gzu)
    notes = []
    if reg is not None:
        ubar_frr, ubar_smin = frr(reg.Ubar)
        null_basis = right_null_basis(gzu, tols.rank_rtol)
        augmented_mat = np.hstack([reg.Utilde, null_basis])
        aug_frr, aug_smin = frr(augmented_mat)
        svu = np.linalg.svd(reg.Utilde, compute_uv=False)
        rows = reg.Utilde.shape[0]
        fsN = float(svu[-1] ** 2) if (svu.size and reg.Utilde.shape[1]
                                      >= rows) else 0.0
    else:
        ubar_frr, ubar_smin = False, 0.0
        aug_frr, aug_smin = False, 0.0
        fsN = 0.0
        notes.append("no regression supplied; data-dependent checks "
                     "skipped")
    report = ExcitationReport(
        gzu_block=gzu, gzu_frr=gzu_frr, gzu_sigma_min=gzu_smin,
        ubar_frr=ubar_frr, ubar_sigma_min=ubar_smin,
        augmented_utilde_frr=aug_frr, augmented_utilde_sigma_min=aug_smin,
        fsN=fsN, notes=notes)
    if ps is not None:
        sv = np.linalg.svd(ps.Psi, compute_uv=False)
        cut = rank_cutoff(sv, ps.Psi.shape, tols.rank_rtol)
        report.psi_fcr = bool(ps.Psi.shape[0] >= ps.Psi.shape[1]
                              and sv[-1] > cut)
        report.psi_sigma_min = float(sv[-1])
        if ps.Psi_g is not None:
            gp = ps.Psi_g @ ps.Psi_p
            sv = np.linalg.svd(gp, compute_uv=False)
            cut = rank_cutoff(sv, gp.shape, tols.rank_rtol)
            report.identifiable_at_theta = bool(
                gp.shape[0] >= gp.shape[1] and sv[-1] > cut)
            report.psi_g_psi_p_sigma_min = float(sv[-1])
    return report


@dataclass(frozen=True)
class IdentifyResult:
    theta: np.ndarray
    theta_residual: float
    tfm: TfmEstimate
    parametric: ParametricSystem
    excitation: ExcitationReport


def identify(plant: LftPlant, gen: InputGenerator, samples: SampleSet,
             theta_ref=None,
             tols: Tolerances = DEFAULT_TOLS) -> IdentifyResult:
    """Full two-step pipeline: nonparametric transfer-value estimate
    followed by the parametric least squares, with diagnostics."""
    reg = build_regression(plant, gen, samples, tols)
    est = estimate_tfm(reg, tols)
    ps = build_parametric(plant, reg.spectrum, est, theta_ref=theta_ref,
                          tols=tols)
    theta_est = estimate_theta(ps, tols)
    if ps.Psi_g is None and theta_ref is None:
        ps = build_parametric(plant, reg.spectrum, est,
                              theta_ref=theta_est.theta, tols=tols)
    report = check_excitation(plant, reg.spectrum, reg, ps, tols)
    return IdentifyResult(theta=theta_est.theta,
                          theta_residual=theta_est.residual,
                          tfm=est, parametric=ps, excitation=report)
