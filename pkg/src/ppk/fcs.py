"""Full counting statistics of the measurement currents.

For a given model configuration the unconditional generator L splits into
a part carrying the detector record and the rest. For click counting the
record superoperator is the recycling term kappa a . a^dag; for homodyne
detection of the quadrature q_theta it is sqrt(kappa)(a . e^{-i theta} +
. a^dag e^{+i theta}). Zero-frequency noise (the diffusion coefficient)
follows from one Drazin application; finite frequencies from two shifted
sparse solves per point.

:class:`CurrentStatistics` assembles everything once per parameter point
(Liouvillian, steady state, shared LU factorization) and exposes the mean
current, two-time correlation function, power spectrum and diffusion
coefficient for either detection scheme.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from . import fock, model, superop
from .errors import SolverError, TruncationError

__all__ = [
    "MeasurementScheme",
    "photodetection",
    "homodyne",
    "jump_superop",
    "homodyne_superop",
    "SpectrumResult",
    "CorrelationResult",
    "CurrentStatistics",
    "max_diffusion_over_delta",
    "locate_discontinuous_line",
]

TAIL_TOL = 1e-8
MAX_DIM_RETRIES = 2
DEFAULT_THETA = 0.5 * np.pi


@dataclass(frozen=True)
class MeasurementScheme:
    """Detection scheme: click counting or homodyne along one quadrature."""

    kind: str
    theta: float | None = None

    def __post_init__(self):
        if self.kind not in ("photodetection", "homodyne"):
            raise ValueError(f"unknown scheme kind {self.kind!r}")
        if self.kind == "homodyne" and self.theta is None:
            raise ValueError("homodyne scheme requires a quadrature angle theta")
        if self.kind == "photodetection" and self.theta is not None:
            raise ValueError("theta is only meaningful for homodyne detection")

    @property
    def short_name(self) -> str:
        return "pd" if self.kind == "photodetection" else "hom"


def photodetection() -> MeasurementScheme:
    return MeasurementScheme("photodetection")


def homodyne(theta: float = DEFAULT_THETA) -> MeasurementScheme:
    return MeasurementScheme("homodyne", float(theta))


def jump_superop(kappa: float, a: np.ndarray) -> sp.csr_matrix:
    """Record superoperator for click counting: rho -> kappa a rho a^dag."""
    a = sp.csr_matrix(a)
    return kappa * sp.kron(a.conj(), a, format="csr")


def homodyne_superop(kappa: float, a: np.ndarray, theta: float) -> sp.csr_matrix:
    """Record superoperator for homodyne detection of q_theta.

    rho -> sqrt(kappa) (a rho e^{-i theta} + rho a^dag e^{+i theta}), whose
    trace is sqrt(kappa) <q_theta>.
    """
    a = sp.csr_matrix(a)
    return np.sqrt(kappa) * (np.exp(-1j * theta) * superop.spre(a)
                             + np.exp(1j * theta) * superop.spost(a.conj().T))


@dataclass
class SpectrumResult:
    omegas: np.ndarray
    values: np.ndarray
    diffusion: float
    mean_current: float


@dataclass
class CorrelationResult:
    taus: np.ndarray
    values: np.ndarray
    singular_weight: float

    def diffusion_estimate(self) -> float:
        """2 * integral of the smooth part plus the delta weight (trapezoid)."""
        return 2.0 * float(np.trapezoid(self.values, self.taus)) + self.singular_weight


class CurrentStatistics:
    """Steady-state current statistics at one parameter point.

    The Fock dimension defaults to the semiclassical rule and is enlarged
    (doubled, at most twice) until the steady state's top-decile population
    drops below 1e-8.
    """

    def __init__(self, params: model.ModelParams, dim: int | None = None,
                 adaptive: bool = True, dim_cap: int = 400):
        self.params = params
        dim0 = model.default_dim(params, cap=dim_cap) if dim is None else int(dim)
        attempt = 0
        while True:
            self._build(dim0)
            tail = fock.tail_population(self.rho)
            if tail < TAIL_TOL or not adaptive:
                self.tail = tail
                break
            attempt += 1
            if attempt > MAX_DIM_RETRIES:
                raise TruncationError(
                    f"steady state keeps {tail:.2e} population in the top Fock decile "
                    f"at dim={dim0}; truncation rule exhausted", required_dim=2 * dim0)
            dim0 *= 2

    def _build(self, dim: int):
        p = self.params
        self.dim = dim
        self.a = fock.annihilation(dim)
        self.h = model.build_hamiltonian(p, dim)
        self.L = superop.liouvillian(self.h, [(self.a, p.kappa)])
        self.solver = superop.LiouvillianSolver(self.L)
        self.rho = self.solver.rho
        self.rho_vec = self.solver.rho_vec
        self._trace_vec = self.solver.trace_vec
        self._m_cache: dict = {}

    @property
    def residual(self) -> float:
        return self.solver.residual

    def measurement_superop(self, scheme: MeasurementScheme) -> sp.csr_matrix:
        key = (scheme.kind, scheme.theta)
        if key not in self._m_cache:
            if scheme.kind == "photodetection":
                m = jump_superop(self.params.kappa, self.a)
            else:
                m = homodyne_superop(self.params.kappa, self.a, scheme.theta)
            self._m_cache[key] = m
        return self._m_cache[key]

    def mean_current(self, scheme: MeasurementScheme) -> float:
        """J = tr{M rho_ss}: kappa <n> for clicks, sqrt(kappa) <q_theta> for homodyne."""
        m = self.measurement_superop(scheme)
        return float(np.real(self._trace_vec @ (m @ self.rho_vec)))

    def singular_weight(self, scheme: MeasurementScheme) -> float:
        """Coefficient of the delta(tau) term in the current autocorrelation."""
        if scheme.kind == "photodetection":
            return self.mean_current(scheme)
        return 1.0  # local-oscillator shot noise, independent of the signal

    def correlation(self, scheme: MeasurementScheme, taus) -> CorrelationResult:
        """Smooth part of F(tau) on an ascending grid of delays >= 0.

        F(tau) = tr{M e^{L tau}(M rho_ss)} - J^2; the delta-function weight
        is returned separately and never added to the samples.
        """
        taus = np.asarray(taus, dtype=float)
        if taus.ndim != 1 or taus.size == 0 or taus[0] < 0 or np.any(np.diff(taus) <= 0):
            raise ValueError("taus must be a nonempty ascending 1-d array of delays >= 0")
        m = self.measurement_superop(scheme)
        j = self.mean_current(scheme)
        v = m @ self.rho_vec
        Lc = self.L.tocsc()
        values = np.empty_like(taus)
        prev = 0.0
        for i, tau in enumerate(taus):
            dt = tau - prev
            if dt > 0:
                v = expm_multiply(Lc * dt, v)
            prev = tau
            values[i] = float(np.real(self._trace_vec @ (m @ v))) - j * j
        return CorrelationResult(taus=taus, values=values,
                                 singular_weight=self.singular_weight(scheme))

    def diffusion(self, scheme: MeasurementScheme) -> float:
        """Zero-frequency noise D = S(0) = -2 <1| M L^+ M |rho_ss> + weight."""
        m = self.measurement_superop(scheme)
        y = m @ self.rho_vec
        x = self.solver.drazin_apply(y)
        val = -2.0 * float(np.real(self._trace_vec @ (m @ x))) + self.singular_weight(scheme)
        if val < -1e-8:
            raise SolverError(
                f"diffusion coefficient {val:.3e} is negative beyond tolerance; the "
                "zero-frequency solve has lost precision (spectral gap near machine zero)")
        if val < 0.0:
            warnings.warn(f"diffusion coefficient {val:.3e} within tolerance below zero; "
                          "clamping to 0")
            val = 0.0
        return val

    def spectrum(self, scheme: MeasurementScheme, omegas) -> SpectrumResult:
        """Power spectrum S(omega) on a real frequency grid (0 allowed)."""
        omegas = np.asarray(omegas, dtype=float)
        m = self.measurement_superop(scheme)
        y = m @ self.rho_vec
        weight = self.singular_weight(scheme)
        values = np.empty_like(omegas)
        for i, om in enumerate(omegas):
            if om == 0.0:
                x = self.solver.drazin_apply(y)
            else:
                x = self.solver.resolvent_apply(om, y)
            val = -2.0 * complex(self._trace_vec @ (m @ x)) + weight
            if abs(val.imag) > 1e-8 * max(1.0, abs(val.real)):
                warnings.warn(f"spectrum at omega={om} has imaginary residual {val.imag:.2e}")
            values[i] = val.real
        return SpectrumResult(omegas=omegas, values=values,
                              diffusion=self.diffusion(scheme),
                              mean_current=self.mean_current(scheme))


def _golden_max(f, a: float, b: float, iterations: int = 12):
    """Golden-section maximization of a unimodal scalar function."""
    gr = 0.5 * (np.sqrt(5.0) - 1.0)
    c = b - gr * (b - a)
    d = a + gr * (b - a)
    fc, fd = f(c), f(d)
    best = max((fc, c), (fd, d))
    for _ in range(iterations):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - gr * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + gr * (b - a)
            fd = f(d)
        best = max(best, (fc, c), (fd, d))
    return best[1], best[0]


def max_diffusion_over_delta(g: float, u: float, kappa: float = 1.0,
                             scheme: MeasurementScheme | None = None,
                             delta_lo: float = 0.05, delta_hi: float = 3.0,
                             step: float = 0.1, refine_iters: int = 10,
                             dim_cap: int = 400):
    """Maximize D over a detuning grid, with golden-section refinement.

    Returns (delta_at_max, d_max). Warns when the coarse maximum sits on
    the grid boundary (flat or out-of-window landscape).
    """
    scheme = scheme or photodetection()

    def d_of(delta: float) -> float:
        stats = CurrentStatistics(model.ModelParams(delta=delta, g=g, u=u, kappa=kappa),
                                  dim_cap=dim_cap)
        return stats.diffusion(scheme)

    grid = np.arange(delta_lo, delta_hi + 1e-12, step)
    vals = np.array([d_of(d) for d in grid])
    i = int(np.argmax(vals))
    if i in (0, len(grid) - 1):
        warnings.warn(f"diffusion maximum at the grid boundary delta={grid[i]}; "
                      "enlarge the search window")
        return float(grid[i]), float(vals[i])
    x, v = _golden_max(d_of, float(grid[i - 1]), float(grid[i + 1]),
                       iterations=refine_iters)
    if vals[i] > v:
        x, v = float(grid[i]), float(vals[i])
    return float(x), float(v)


def locate_discontinuous_line(g_values, u: float, kappa: float = 1.0,
                              delta_lo: float = 0.05, delta_hi: float = 3.0,
                              step: float = 0.1):
    """Trace the abrupt-transition detuning for each pump strength.

    The line has no closed form; it is located numerically as the positive
    detuning maximizing the click-counting diffusion coefficient.
    """
    out = []
    for g in g_values:
        if g <= 0.5 * kappa:
            raise ValueError(f"pump g={g} is below threshold kappa/2; no transition")
        delta_d, _ = max_diffusion_over_delta(g, u, kappa,
                                              delta_lo=delta_lo, delta_hi=delta_hi,
                                              step=step)
        out.append((float(g), float(delta_d)))
    return out
