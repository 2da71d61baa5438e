"""Vectorized superoperator algebra on the doubled Hilbert space.

Column-stacking convention throughout: vec(A X B) = (B^T kron A) vec(X),
so a density matrix rho maps to rho.reshape(-1, order="F") and the trace
becomes the inner product with the vectorized identity.

The central object is :class:`LiouvillianSolver`, which factorizes the
generator once (with one redundant row replaced by the trace constraint)
and reuses that factorization for both the steady state and applications
of the Drazin pseudoinverse. Replacing a row is algebraically equivalent
to the bordered system [[L, |rho>], [<1|, 0]]: because <1|L = 0 exactly,
the solution of the row-replaced system satisfies every row of L x = y~
as well as the trace constraint, and the bordering multiplier vanishes
for trace-projected right-hand sides.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import fock
from .errors import DegenerateSteadyStateError, DimensionError, SolverError

__all__ = [
    "vectorize",
    "devectorize",
    "trace_vector",
    "spre",
    "spost",
    "dissipator_matrix",
    "liouvillian",
    "trace_residual",
    "LiouvillianSolver",
    "steady_state",
    "drazin_apply",
    "resolvent_apply",
    "SpectralDecomposition",
    "spectral_decomposition",
]

STEADY_RESIDUAL_TOL = 1e-10
DRAZIN_TRACE_TOL = 1e-10
DRAZIN_RESIDUAL_TOL = 1e-8
RESOLVENT_RESIDUAL_TOL = 1e-7
DENSE_EIG_GUARD = 4096


def vectorize(rho: np.ndarray) -> np.ndarray:
    """Column-stack a matrix into a vector on the doubled space."""
    return np.asarray(rho, dtype=complex).reshape(-1, order="F")


def devectorize(v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`vectorize`; length must be a perfect square."""
    v = np.asarray(v)
    dim = int(round(np.sqrt(v.size)))
    if dim * dim != v.size:
        raise DimensionError(f"vector length {v.size} is not a perfect square")
    return v.reshape(dim, dim, order="F")


def trace_vector(dim: int) -> np.ndarray:
    """vec(identity): contracting with it implements the trace."""
    t = np.zeros(dim * dim)
    t[:: dim + 1] = 1.0
    return t


def spre(op) -> sp.csr_matrix:
    """Matrix of rho -> op rho."""
    op = sp.csr_matrix(op)
    return sp.kron(sp.identity(op.shape[0], format="csr"), op, format="csr")


def spost(op) -> sp.csr_matrix:
    """Matrix of rho -> rho op."""
    op = sp.csr_matrix(op)
    return sp.kron(op.T, sp.identity(op.shape[0], format="csr"), format="csr")


def dissipator_matrix(c) -> sp.csr_matrix:
    """Matrix of the Lindblad dissipator D[c] = c . c^dag - {c^dag c, .}/2."""
    c = sp.csr_matrix(c)
    cd_c = (c.conj().T @ c).tocsr()
    recycle = sp.kron(c.conj(), c, format="csr")
    return recycle - 0.5 * (spre(cd_c) + spost(cd_c))


def liouvillian(h: np.ndarray, jump_ops) -> sp.csr_matrix:
    """Assemble -i[h, .] + sum_k rate_k D[c_k] as a sparse matrix.

    ``jump_ops`` is an iterable of (operator, rate) pairs with rate >= 0.
    """
    h = np.asarray(h)
    hs = sp.csr_matrix(h)
    L = -1j * (spre(hs) - spost(hs))
    for c, rate in jump_ops:
        c = np.asarray(c)
        if c.shape != h.shape:
            raise DimensionError(f"jump operator shape {c.shape} != Hamiltonian shape {h.shape}")
        if rate < 0:
            raise ValueError(f"jump rate must be >= 0, got {rate}")
        L = L + rate * dissipator_matrix(c)
    return L.tocsr()


def trace_residual(L) -> float:
    """max |<1| L|: zero for a trace-preserving generator."""
    dim = int(round(np.sqrt(L.shape[0])))
    t = trace_vector(dim)
    return float(np.max(np.abs(t @ L)))


class LiouvillianSolver:
    """Shared sparse factorization for steady-state and Drazin solves.

    One row of L (a diagonal-element row, where the trace vector has a unit
    entry) is replaced by the weighted trace constraint; the resulting
    nonsingular matrix is LU-factorized once.
    """

    def __init__(self, L, residual_tol: float = STEADY_RESIDUAL_TOL):
        self.L = sp.csr_matrix(L)
        d2 = self.L.shape[0]
        self.dim = int(round(np.sqrt(d2)))
        if self.dim * self.dim != d2:
            raise DimensionError(f"generator size {d2} is not a perfect square")
        self.trace_vec = trace_vector(self.dim)
        self._weight = float(np.mean(np.abs(self.L.data))) if self.L.nnz else 1.0
        M = self.L.tolil(copy=True)
        M[0, :] = self.trace_vec * self._weight
        self._lu = spla.splu(M.tocsc())
        self._rho_vec = None
        self._rho = None
        self._residual = None
        self._residual_tol = residual_tol

    @property
    def rho(self) -> np.ndarray:
        if self._rho is None:
            self._solve_steady()
        return self._rho

    @property
    def rho_vec(self) -> np.ndarray:
        if self._rho_vec is None:
            self._solve_steady()
        return self._rho_vec

    @property
    def residual(self) -> float:
        """max |L rho_ss| after Hermitization and normalization."""
        if self._residual is None:
            self._solve_steady()
        return self._residual

    def _solve_steady(self):
        b = np.zeros(self.L.shape[0], dtype=complex)
        b[0] = self._weight
        x = self._lu.solve(b)
        if not np.all(np.isfinite(x)):
            raise DegenerateSteadyStateError(
                "singular steady-state solve; " + self._degeneracy_report())
        rho = devectorize(x)
        rho = 0.5 * (rho + rho.conj().T)
        tr = float(np.trace(rho).real)
        if abs(tr) < 1e-300:
            raise DegenerateSteadyStateError(
                "steady-state candidate has vanishing trace; " + self._degeneracy_report())
        rho /= tr
        vec = vectorize(rho)
        res = float(np.max(np.abs(self.L @ vec)))
        if res > self._residual_tol:
            raise DegenerateSteadyStateError(
                f"steady-state residual {res:.3e} exceeds {self._residual_tol:.1e}; "
                + self._degeneracy_report())
        self._rho, self._rho_vec, self._residual = rho, vec, res

    def _degeneracy_report(self) -> str:
        d2 = self.L.shape[0]
        if d2 <= 1600:
            s = sla.svdvals(self.L.toarray())
            return f"two smallest singular values of L: {s[-1]:.3e}, {s[-2]:.3e}"
        return "generator too large to report singular values"

    def drazin_apply(self, y: np.ndarray,
                     trace_tol: float = DRAZIN_TRACE_TOL,
                     residual_tol: float = DRAZIN_RESIDUAL_TOL) -> np.ndarray:
        """x = L^+ y: pseudoinverse on the complement of the kernel.

        The input is first projected, y~ = (I - |rho><1|) y; the solution
        satisfies L x = y~ and <1|x> = 0.
        """
        rho_vec = self.rho_vec
        y = np.asarray(y, dtype=complex)
        yt = y - rho_vec * (self.trace_vec @ y)
        b = yt.copy()
        b[0] = 0.0
        x = self._lu.solve(b)
        x = x - rho_vec * (self.trace_vec @ x)
        tr_err = abs(self.trace_vec @ x)
        if tr_err > trace_tol * max(1.0, float(np.max(np.abs(x)))):
            raise SolverError(f"Drazin solution trace component {tr_err:.3e} too large")
        res = float(np.max(np.abs(self.L @ x - yt)))
        scale = max(1.0, float(np.max(np.abs(x))))
        if res > residual_tol * scale:
            raise SolverError(
                f"Drazin residual {res:.3e} exceeds {residual_tol:.1e} x {scale:.3e}")
        return x

    def resolvent_apply(self, omega: float, y: np.ndarray,
                        residual_tol: float = RESOLVENT_RESIDUAL_TOL) -> np.ndarray:
        """x = [L / (L^2 + omega^2)] y for omega != 0.

        Computed as the average of two shifted solves, (L -/+ i omega)^{-1} y.
        At omega = 0 use :meth:`drazin_apply` instead.
        """
        if omega == 0.0:
            raise ValueError("omega must be nonzero; use drazin_apply for omega = 0")
        y = np.asarray(y, dtype=complex)
        d2 = self.L.shape[0]
        shift = 1j * omega * sp.identity(d2, format="csc")
        Lc = self.L.tocsc()
        x1 = spla.splu(Lc - shift).solve(y)
        x2 = spla.splu(Lc + shift).solve(y)
        x = 0.5 * (x1 + x2)
        res = float(np.linalg.norm(self.L @ (self.L @ x) + omega * omega * x - self.L @ y))
        ynorm = float(np.linalg.norm(y))
        if ynorm > 0 and res > residual_tol * max(ynorm, float(np.linalg.norm(x))):
            raise SolverError(f"resolvent residual {res:.3e} too large for omega={omega}")
        return x


def steady_state(L) -> np.ndarray:
    """Density matrix in the kernel of the generator (unique kernel assumed)."""
    rho = LiouvillianSolver(L).rho
    fock.check_density_matrix(rho)
    return rho


def drazin_apply(L, rho_ss: np.ndarray, y: np.ndarray) -> np.ndarray:
    """One-shot Drazin application; prefer LiouvillianSolver for repeated use."""
    solver = LiouvillianSolver(L)
    got = np.max(np.abs(solver.rho - np.asarray(rho_ss)))
    if got > 1e-8:
        warnings.warn(f"supplied steady state deviates from the solver's by {got:.2e}")
    return solver.drazin_apply(y)


def resolvent_apply(L, omega: float, y: np.ndarray) -> np.ndarray:
    return LiouvillianSolver(L).resolvent_apply(omega, y)


@dataclass
class SpectralDecomposition:
    """Full eigensystem of a (diagonalizable) generator, biorthonormalized.

    right_vectors[:, j] and left_vectors[j, :] form the pair of eigenvalue
    eigenvalues[j] with <y_j|x_k> = delta_jk. The zero mode's right vector
    is normalized to unit trace, so it is the vectorized steady state.
    """

    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    left_vectors: np.ndarray
    biorthogonality_residual: float

    @property
    def zero_index(self) -> int:
        return int(np.argmin(np.abs(self.eigenvalues)))


def spectral_decomposition(L, guard: int = DENSE_EIG_GUARD,
                           zero_tol: float = 1e-8) -> SpectralDecomposition:
    """Dense eigendecomposition with left vectors from the inverse.

    Guarded to small systems: the doubled-space size must not exceed
    ``guard``. Exactly one eigenvalue must sit within ``zero_tol`` of zero.
    """
    if sp.issparse(L):
        d2 = L.shape[0]
        if d2 > guard:
            raise DimensionError(
                f"dense eigendecomposition guarded to size {guard}, got {d2}; "
                "use the resolvent/Drazin paths instead")
        A = L.toarray()
    else:
        A = np.asarray(L, dtype=complex)
        if A.shape[0] > guard:
            raise DimensionError(
                f"dense eigendecomposition guarded to size {guard}, got {A.shape[0]}")
    w, vr = sla.eig(A)
    vl = np.linalg.inv(vr)  # rows biorthonormal to the columns of vr
    n_zero = int(np.sum(np.abs(w) < zero_tol))
    if n_zero != 1:
        raise DegenerateSteadyStateError(
            f"expected exactly one zero eigenvalue within {zero_tol:.1e}, found {n_zero}")
    dim = int(round(np.sqrt(A.shape[0])))
    tvec = trace_vector(dim)
    i0 = int(np.argmin(np.abs(w)))
    scale = tvec @ vr[:, i0]
    if abs(scale) < 1e-14:
        raise DegenerateSteadyStateError("zero mode is traceless; kernel is not a state")
    vr[:, i0] /= scale
    vl[i0, :] *= scale
    resid = float(np.max(np.abs(vl @ vr - np.eye(A.shape[0]))))
    return SpectralDecomposition(eigenvalues=w, right_vectors=vr,
                                 left_vectors=vl, biorthogonality_residual=resid)
