"""Steady-state Wigner function on a phase-space grid.

Scaling convention: the axes are the quadratures x = <a + a^dag> and
p = <i(a^dag - a)>, so a coherent state of amplitude alpha peaks at
(2 Re alpha, 2 Im alpha), the vacuum is (1/2 pi) exp(-(x^2+p^2)/2), and
the grid integrates to one: sum(values) dx dp = 1.

The Fock-basis kernel is an associated-Laguerre series per diagonal of
rho. The three-term recurrence is carried in log-magnitude/sign form so
dimensions of a few hundred and grid radii of tens stay finite where the
naive recursion overflows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import model
from .errors import GridError

__all__ = ["WignerGrid", "wigner", "default_grid", "count_local_maxima"]

EDGE_MASS_TOL = 1e-4
PEAK_REL_HEIGHT = 0.10


@dataclass
class WignerGrid:
    """W sampled on a rectangular grid; values[i, j] = W(x_values[i], p_values[j])."""

    x_values: np.ndarray
    p_values: np.ndarray
    values: np.ndarray

    @property
    def dx(self) -> float:
        return float(self.x_values[1] - self.x_values[0])

    @property
    def dp(self) -> float:
        return float(self.p_values[1] - self.p_values[0])

    def norm(self) -> float:
        return float(self.values.sum() * self.dx * self.dp)

    def marginal_x(self) -> np.ndarray:
        """Probability density of the x quadrature, integrated over p."""
        return self.values.sum(axis=1) * self.dp


def _signed_log_add(l1, s1, l2, s2):
    """(log|.|, sign) representation of s1 e^{l1} + s2 e^{l2}, elementwise."""
    hi = np.maximum(l1, l2)
    lo = np.minimum(l1, l2)
    diff = np.exp(lo - hi)
    same = s1 == s2
    with np.errstate(divide="ignore"):
        mag = np.where(same, hi + np.log1p(diff), hi + np.log1p(-np.minimum(diff, 1.0 - 1e-17)))
    sgn = np.where(l1 >= l2, s1, s2)
    return mag, sgn


def wigner(rho: np.ndarray, x_values, p_values) -> WignerGrid:
    """Evaluate W on the given axes; raises GridError if mass leaks off-grid."""
    rho = np.asarray(rho, dtype=complex)
    dim = rho.shape[0]
    xs = np.asarray(x_values, dtype=float)
    ps = np.asarray(p_values, dtype=float)
    X, P = np.meshgrid(xs, ps, indexing="ij")
    alpha = 0.5 * (X + 1j * P)
    y = 4.0 * np.abs(alpha) ** 2
    phi = np.angle(alpha)
    tiny = 1e-300
    with np.errstate(divide="ignore"):
        log2a = np.log(np.maximum(2.0 * np.abs(alpha), tiny))
    W = np.zeros_like(X)
    for k in range(dim):
        diag = np.diag(rho, k)
        if k > 0 and np.max(np.abs(diag)) < 1e-16:
            continue
        lpref = k * log2a - 0.5 * y
        phase = np.exp(1j * k * phi) if k else None
        # Laguerre L_n^{(k)}(y) in (log-magnitude, sign) form
        l_prev = np.zeros_like(y)
        s_prev = np.ones_like(y)
        arg1 = 1.0 + k - y
        with np.errstate(divide="ignore"):
            l_curr = np.log(np.maximum(np.abs(arg1), tiny))
        s_curr = np.where(arg1 >= 0, 1.0, -1.0)
        for n in range(dim - k):
            if n == 0:
                ln, sn = l_prev, s_prev
            elif n == 1:
                ln, sn = l_curr, s_curr
            else:
                an = 2.0 * n - 1.0 + k - y
                with np.errstate(divide="ignore"):
                    t1 = np.log(np.maximum(np.abs(an), tiny)) + l_curr
                t2 = np.log(n - 1.0 + k) + l_prev
                mag, sgn = _signed_log_add(t1, np.sign(an) * s_curr, t2, -s_prev)
                ln = mag - np.log(n)
                sn = sgn
                l_prev, s_prev, l_curr, s_curr = l_curr, s_curr, ln, sn
            scale = 0.5 * (gammaln(n + 1.0) - gammaln(n + k + 1.0))
            term = sn * np.exp(ln + lpref + scale)
            if n % 2:
                term = -term
            if k == 0:
                W += diag[n].real * term
            else:
                W += 2.0 * np.real(diag[n] * phase) * term
    W /= 2.0 * np.pi
    grid = WignerGrid(x_values=xs, p_values=ps, values=W)
    edge = (np.abs(W[0, :]).sum() + np.abs(W[-1, :]).sum()) * grid.dx * grid.dp \
        + (np.abs(W[:, 0]).sum() + np.abs(W[:, -1]).sum()) * grid.dx * grid.dp
    if edge > EDGE_MASS_TOL:
        raise GridError(f"probability mass {edge:.2e} at the grid edge; enlarge the grid")
    return grid


def default_grid(params: model.ModelParams, rho: np.ndarray,
                 max_step: float = 0.15):
    """Axes covering the semiclassical lobes and the state's own spread.

    Half-width is the larger of 2 sqrt(n0) + 4 and 4.5 quadrature standard
    deviations; spacing is at most ``max_step`` so narrow squeezed peaks
    are resolved, and zero is always a grid point.
    """
    fp = model.semiclassical_fixed_points(params)
    half = 2.0 * np.sqrt(max(fp.n0, 0.0)) + 4.0
    n = np.arange(rho.shape[0], dtype=float)
    pops = np.real(np.diag(rho))
    amean = complex(np.sum(np.sqrt(n[1:]) * np.diag(rho, -1)))
    a2 = complex(np.sum(np.sqrt(n[2:] * (n[2:] - 1.0)) * np.diag(rho, -2)))
    nbar = float(np.sum(n * pops))
    var_x = 1.0 + 2.0 * nbar + 2.0 * a2.real - (2.0 * amean.real) ** 2
    var_p = 1.0 + 2.0 * nbar - 2.0 * a2.real - (2.0 * amean.imag) ** 2
    spread = 4.5 * float(np.sqrt(max(var_x, var_p, 1.0)))
    half = max(half, spread, 4.0)
    n_half = int(np.ceil(half / max_step))
    axis = np.linspace(-half, half, 2 * n_half + 1)
    return axis, axis.copy()


def count_local_maxima(grid: WignerGrid, rel_height: float = PEAK_REL_HEIGHT):
    """Interior local maxima at least ``rel_height`` of the global peak.

    Adjacent qualifying cells (plateaus split by rounding) are merged.
    Returns a list of (x, p, value) sorted by descending value.
    """
    W = grid.values
    peak = W.max()
    hits = []
    for i in range(1, W.shape[0] - 1):
        for j in range(1, W.shape[1] - 1):
            v = W[i, j]
            if v < rel_height * peak:
                continue
            if v >= W[i - 1:i + 2, j - 1:j + 2].max():
                hits.append((i, j, v))
    merged: list[tuple[int, int, float]] = []
    for i, j, v in sorted(hits, key=lambda h: -h[2]):
        if all(abs(i - mi) > 1 or abs(j - mj) > 1 for mi, mj, _ in merged):
            merged.append((i, j, v))
    return [(float(grid.x_values[i]), float(grid.p_values[j]), float(v))
            for i, j, v in merged]
