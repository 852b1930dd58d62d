"""Shared numerical tolerances and rank decisions.

Every rank/singularity decision in the library goes through
:func:`rank_cutoff` so there is a single overridable knob.  The default
rule declares a matrix numerically singular when

    sigma_min <= max(rows, cols) * machine_eps * sigma_max
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_EPS = float(np.finfo(float).eps)


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerance configuration.

    rank_rtol        relative rank cutoff; None means the default
                     max(m, n) * eps rule
    eig_distinct     relative distinctness threshold between generator
                     eigenvalues
    shared_eig       relative guard distance between generator eigenvalues
                     and plant (finite generalized) eigenvalues
    component_imag   relative bound on the imaginary residue of nominally
                     real spectral components
    infinite_eig     relative |beta| threshold below which a generalized
                     eigenvalue counts as infinite
    """

    rank_rtol: float | None = None
    eig_distinct: float = 1e-8
    shared_eig: float = 1e-6
    component_imag: float = 1e-8
    infinite_eig: float = 1e-10


DEFAULT_TOLS = Tolerances()


def rank_cutoff(singular_values: np.ndarray, shape: tuple[int, int],
                rtol: float | None = None) -> float:
    """Absolute cutoff below which singular values count as zero."""
    smax = float(singular_values[0]) if singular_values.size else 0.0
    if rtol is None:
        rtol = max(shape) * _EPS
    return rtol * smax


def is_numerically_singular(mat: np.ndarray,
                            rtol: float | None = None) -> tuple[bool, float]:
    """Return (singular?, sigma_min) for a (possibly complex) matrix."""
    sv = np.linalg.svd(mat, compute_uv=False)
    if sv.size == 0:
        return True, 0.0
    cut = rank_cutoff(sv, mat.shape, rtol)
    return bool(sv[-1] <= cut), float(sv[-1])


def right_null_basis(mat: np.ndarray, rtol: float | None = None) -> np.ndarray:
    """Orthonormal basis of the right null space, shape (cols, nullity)."""
    u, sv, vh = np.linalg.svd(mat)
    cut = rank_cutoff(sv, mat.shape, rtol)
    rank = int(np.sum(sv > cut))
    return vh[rank:].conj().T
