"""Truncated Fock-space linear algebra: ladder operators, states, expectations.

Operators and states are plain numpy arrays. Density matrices are complex
(dim, dim) arrays; pure states are complex (dim,) vectors. Validation is
explicit via the ``check_*`` helpers rather than wrapper classes, so arrays
compose freely with scipy.
"""

from __future__ import annotations

import numpy as np
from scipy.special import gammaln

from .errors import DimensionError, TruncationError

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-8
NORM_TOL = 1e-12


def _check_dim(dim: int) -> int:
    dim = int(dim)
    if dim < 2:
        raise DimensionError(f"Fock dimension must be >= 2, got {dim}")
    return dim


def annihilation(dim: int) -> np.ndarray:
    """Annihilation operator a on a Fock space truncated at dim levels."""
    dim = _check_dim(dim)
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def creation(dim: int) -> np.ndarray:
    return annihilation(dim).conj().T


def number_op(dim: int) -> np.ndarray:
    dim = _check_dim(dim)
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


def identity(dim: int) -> np.ndarray:
    return np.eye(_check_dim(dim), dtype=complex)


def quadrature(dim: int, theta: float) -> np.ndarray:
    """Quadrature operator a e^{-i theta} + a^dag e^{i theta} (Hermitian).

    theta=0 gives x = a + a^dag, theta=pi/2 gives p = i(a^dag - a).
    """
    a = annihilation(dim)
    q = a * np.exp(-1j * theta)
    return q + q.conj().T


def coherent_state(dim: int, alpha: complex) -> np.ndarray:
    """Coherent-state amplitude vector, renormalized after truncation.

    Requires |alpha|^2 <= dim/2 so the Poissonian photon distribution fits
    comfortably below the truncation.
    """
    dim = _check_dim(dim)
    nbar = abs(alpha) ** 2
    if nbar > 0.5 * dim:
        raise TruncationError(
            f"coherent state with |alpha|^2={nbar:.3f} needs dim >= {int(np.ceil(2 * nbar))}, got {dim}",
            required_dim=int(np.ceil(2 * nbar)),
        )
    n = np.arange(dim)
    if alpha == 0:
        amps = np.zeros(dim, dtype=complex)
        amps[0] = 1.0
        return amps
    # log-magnitude to dodge factorial overflow; phase applied separately
    logmag = -0.5 * nbar + n * np.log(abs(alpha)) - 0.5 * gammaln(n + 1.0)
    amps = np.exp(logmag) * np.exp(1j * n * np.angle(alpha))
    return amps / np.linalg.norm(amps)


def pure_to_density(psi: np.ndarray) -> np.ndarray:
    """|psi><psi| as a density matrix."""
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def expectation(op: np.ndarray, rho: np.ndarray) -> complex:
    """tr(op rho). Dimensions must match."""
    op = np.asarray(op)
    rho = np.asarray(rho)
    if op.shape != rho.shape:
        raise DimensionError(f"operator shape {op.shape} != state shape {rho.shape}")
    return complex(np.einsum("ij,ji->", op, rho))


def check_density_matrix(rho: np.ndarray,
                         herm_tol: float = HERMITICITY_TOL,
                         trace_tol: float = TRACE_TOL,
                         eig_tol: float = POSITIVITY_TOL) -> None:
    """Assert Hermiticity, unit trace and numerical positivity of rho."""
    rho = np.asarray(rho)
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > herm_tol:
        raise ValueError(f"density matrix not Hermitian: max|rho - rho^dag| = {herm:.3e}")
    tr = np.trace(rho)
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"density matrix trace {tr} deviates from 1 by {abs(tr - 1.0):.3e}")
    wmin = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min())
    if wmin < -eig_tol:
        raise ValueError(f"density matrix not positive: smallest eigenvalue {wmin:.3e}")


def check_pure_state(psi: np.ndarray, norm_tol: float = NORM_TOL) -> None:
    nrm = np.linalg.norm(psi)
    if abs(nrm - 1.0) > norm_tol:
        raise ValueError(f"state norm {nrm} deviates from 1 by {abs(nrm - 1.0):.3e}")


def truncation_dim(n0: float, floor: int = 20, cap: int = 400) -> int:
    """Default Fock dimension for a target occupation n0.

    Six Poissonian standard deviations above the occupation, plus margin;
    never below ``floor`` nor above ``cap``.
    """
    dim = int(np.ceil(6.0 * max(n0, 0.0) + 20.0))
    return int(min(cap, max(floor, dim)))


def tail_population(rho: np.ndarray, fraction: float = 0.1) -> float:
    """Summed population of the top ``fraction`` of Fock levels.

    Used as the post-hoc truncation adequacy check: adequate when < 1e-8.
    """
    dim = rho.shape[0]
    k = max(1, int(np.ceil(fraction * dim)))
    pops = np.real(np.diag(rho))
    return float(np.sum(pops[dim - k:]))
