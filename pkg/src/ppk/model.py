"""Pumped Kerr resonator: Hamiltonian and semiclassical analysis.

The model is a lossy cavity with Kerr nonlinearity ``u``, two-photon pump
``g`` and detuning ``delta``, all in units of the loss rate ``kappa``:

    H = -delta a^dag a + (u/2) a^dag^2 a^2 + (g/2)(a^dag^2 + a^2)

Above threshold (g > kappa/2) the semiclassical flow has a pitchfork
bifurcation at delta_c = -sqrt(g^2 - kappa^2/4): a pair of stable fixed
points with occupation n0 appears alongside the unstable origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import fock
from .errors import DimensionError

__all__ = [
    "ModelParams",
    "SemiclassicalFixedPoints",
    "build_hamiltonian",
    "semiclassical_fixed_points",
    "tunnelling_scales",
    "default_dim",
    "detect_bifurcation",
]


@dataclass(frozen=True)
class ModelParams:
    """Physical rates of one model configuration, in units of kappa."""

    delta: float
    g: float
    u: float
    kappa: float = 1.0

    def __post_init__(self):
        if self.u <= 0:
            raise ValueError(f"Kerr strength u must be > 0, got {self.u}")
        if self.kappa <= 0:
            raise ValueError(f"loss rate kappa must be > 0, got {self.kappa}")
        if self.g < 0:
            raise ValueError(f"pump strength g must be >= 0, got {self.g}")


@dataclass(frozen=True)
class SemiclassicalFixedPoints:
    """Fixed-point data of the semiclassical flow.

    ``phi0`` is the conventional half-arcsine phase (in [-pi/4, 0] above
    threshold). The stable lobes themselves sit at phase ``lobe_phase`` =
    pi/2 - phi0: only that branch of the arcsine satisfies the stationarity
    conditions with n0 > 0, which is why the lobes separate along the p
    quadrature rather than x.
    """

    n0: float
    phi0: float
    delta_c: float
    bistable: bool

    @property
    def lobe_phase(self) -> float:
        return 0.5 * np.pi - self.phi0

    @property
    def alpha0(self) -> complex:
        """Stable fixed-point amplitude (the other lobe is -alpha0)."""
        return math.sqrt(max(self.n0, 0.0)) * np.exp(1j * self.lobe_phase)


def build_hamiltonian(params: ModelParams, dim: int) -> np.ndarray:
    """Dense Hamiltonian matrix on the truncated Fock space (Hermitian)."""
    if dim < 2:
        raise DimensionError(f"dim must be >= 2, got {dim}")
    n = np.arange(dim, dtype=float)
    h = np.diag(-params.delta * n + 0.5 * params.u * n * (n - 1.0)).astype(complex)
    # two-photon pump couples |n> and |n+2>
    c = 0.5 * params.g * np.sqrt((n[: dim - 2] + 1.0) * (n[: dim - 2] + 2.0))
    idx = np.arange(dim - 2)
    h[idx + 2, idx] += c
    h[idx, idx + 2] += c
    return h


def semiclassical_fixed_points(params: ModelParams) -> SemiclassicalFixedPoints:
    """Fixed points of the semiclassical equations of motion.

    Below threshold (g <= kappa/2) or below the critical detuning the only
    stable point is the origin and ``bistable`` is False with n0 = 0.
    """
    g, kappa = params.g, params.kappa
    disc = g * g - 0.25 * kappa * kappa
    if disc <= 0.0:
        return SemiclassicalFixedPoints(n0=0.0, phi0=float("nan"),
                                        delta_c=float("nan"), bistable=False)
    root = math.sqrt(disc)
    delta_c = -root
    phi0 = 0.5 * math.asin(-0.5 * kappa / g)
    n0 = (params.delta + root) / params.u
    if n0 <= 0.0:
        return SemiclassicalFixedPoints(n0=0.0, phi0=phi0, delta_c=delta_c, bistable=False)
    return SemiclassicalFixedPoints(n0=n0, phi0=phi0, delta_c=delta_c, bistable=True)


def tunnelling_scales(fp: SemiclassicalFixedPoints) -> tuple[float, float]:
    """Overlap scales governing metastable switching: (e^{-n0}, e^{-2 n0}).

    The first is the vacuum/lobe overlap (switching via the origin), the
    second the direct lobe/lobe overlap. Proportionality scales only.
    """
    if not fp.bistable:
        raise ValueError("tunnelling scales require a bistable fixed-point set")
    return math.exp(-fp.n0), math.exp(-2.0 * fp.n0)


def default_dim(params: ModelParams, floor: int = 20, cap: int = 400) -> int:
    """Truncation for this configuration, from the semiclassical occupation."""
    fp = semiclassical_fixed_points(params)
    return fock.truncation_dim(fp.n0, floor=floor, cap=cap)


def detect_bifurcation(deltas: np.ndarray, scaled_n: np.ndarray) -> float:
    """Locate the bifurcation detuning from a scaled-occupation sweep.

    ``scaled_n`` is <a^dag a> u / kappa sampled on the ascending grid
    ``deltas``. The onset is found from the steep-growth flank: anchor at
    the point where the slope increases fastest (largest curvature, with
    parabolic sub-grid refinement) and extrapolate the tangent there down
    to zero occupation. For a pitchfork this estimate converges to the
    critical detuning as the transition sharpens.
    """
    deltas = np.asarray(deltas, dtype=float)
    vals = np.asarray(scaled_n, dtype=float)
    if deltas.ndim != 1 or deltas.size < 5 or deltas.shape != vals.shape:
        raise ValueError("need matching 1-d arrays with at least 5 samples")
    if np.any(np.diff(deltas) <= 0):
        raise ValueError("deltas must be strictly ascending")
    dv = np.gradient(vals, deltas)
    d2v = np.gradient(dv, deltas)
    i = int(np.argmax(d2v))
    step = deltas[min(i + 1, len(deltas) - 1)] - deltas[max(i - 1, 0)]
    anchor = deltas[i]
    if 0 < i < len(deltas) - 1:
        y0, y1, y2 = d2v[i - 1], d2v[i], d2v[i + 1]
        den = y0 - 2.0 * y1 + y2
        if den != 0.0:
            anchor = deltas[i] + float(np.clip(0.5 * (y0 - y2) / den, -1.0, 1.0)) * 0.5 * step
    v_a = float(np.interp(anchor, deltas, vals))
    s_a = float(np.interp(anchor, deltas, dv))
    if s_a <= 0.0:
        raise ValueError("occupation curve is not growing at the detected anchor")
    return float(anchor - v_a / s_a)
