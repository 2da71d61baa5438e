"""Stochastic conditional dynamics for click counting and homodyne records.

Both unravellings share the same backbone: the no-record part of one time
step is applied exactly through the precomputed dense propagator
M = exp(-i (H - i kappa/2 a^dag a) dt), conjugated onto the conditional
state and followed by trace renormalization. A bare first-order step of
the full drift is unconditionally unstable here - the Kerr term gives the
upper Fock levels frequencies of order u n^2 whose explicit-Euler
amplification outruns the kappa n damping - so the linear part must be
propagated exactly; only the measurement terms are treated to first order.

Click counting draws a Bernoulli jump per step with probability
kappa <n> dt (subdivided whenever that exceeds 0.05). Homodyne detection
records I = sqrt(kappa) <q_theta> + dW/dt and applies the first-order
update in Kraus form, rho -> M (1 + dy C) rho (1 + dy C)^dag M^dag with
C = sqrt(kappa) a e^{-i theta} and innovation dy = sqrt(kappa) <q> dt + dW.
Expanding in dt reproduces the Euler-Maruyama step of the diffusive
measurement equation, but the map is completely positive at every finite
step size, so conditional eigenvalues never dip below zero by more than
roundoff (a bare Euler-Maruyama step leaves O(dt) negative transients).

Every trajectory owns a counter-based random stream derived from
(seed, trajectory index), so ensembles reproduce bit-for-bit regardless
of scheduling.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from multiprocessing import Pool

import numpy as np
import scipy.linalg as sla

from . import fock, model
from .errors import FilterError, StepSizeError
from .fcs import MeasurementScheme

__all__ = [
    "TrajectoryConfig",
    "TrajectoryRecord",
    "DiffusionEstimate",
    "simulate",
    "simulate_photodetection",
    "simulate_homodyne",
    "run_ensemble",
    "ensemble_mean_state",
    "low_pass_filter",
    "estimate_diffusion",
    "plateau_thresholds",
    "classify_plateaus",
]

JUMP_PROB_CAP = 0.05
POSITIVITY_FLOOR = -1e-6


@dataclass(frozen=True)
class TrajectoryConfig:
    """One trajectory run: discretization, scheme, seed and initial state."""

    scheme: MeasurementScheme
    t_final: float
    dt: float = 1e-3
    seed: int = 0
    record_stride: int = 100
    initial_state: np.ndarray | None = None  # density matrix; None = vacuum
    dim: int | None = None                   # used only when initial_state is None

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_final <= self.dt:
            raise ValueError("t_final must exceed dt")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")


@dataclass
class TrajectoryRecord:
    """Binned measurement record plus conditional moments at bin ends.

    ``current`` holds counts-per-bin / bin width for click counting and the
    bin average of I(t) for homodyne, so cumulative charge is exact:
    Q(t_b) = sum(current[:b]) * bin_dt.
    """

    times: np.ndarray
    current: np.ndarray
    n_mean: np.ndarray
    x_mean: np.ndarray
    p_mean: np.ndarray
    n_var: np.ndarray
    jump_times: np.ndarray | None
    seed: int
    traj_index: int
    final_state: np.ndarray

    @property
    def bin_dt(self) -> float:
        return float(self.times[0]) if len(self.times) == 1 else float(self.times[1] - self.times[0])

    def charge(self) -> np.ndarray:
        """Integrated current at the bin ends."""
        return np.cumsum(self.current) * self.bin_dt


@dataclass
class DiffusionEstimate:
    d_hat: float
    std_error: float
    n_trajectories: int
    burn_in: float
    window: float
    r_squared: float


def _rng_for(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


class _StepContext:
    """Precomputed arrays for one (params, dim, dt) combination."""

    def __init__(self, params: model.ModelParams, dim: int, dt: float):
        self.params = params
        self.dim = dim
        self.dt = dt
        self.n = np.arange(dim, dtype=float)
        self.sq = np.sqrt(self.n)
        h = model.build_hamiltonian(params, dim)
        self.h_eff = h - 0.5j * params.kappa * np.diag(self.n)
        self._prop_cache: dict[int, np.ndarray] = {}
        self.jump_w = np.outer(self.sq[1:], self.sq[1:])

    def propagator(self, halvings: int = 0) -> np.ndarray:
        """exp(-i h_eff dt / 2^halvings), cached per subdivision level."""
        if halvings not in self._prop_cache:
            self._prop_cache[halvings] = sla.expm(-1j * self.h_eff * (self.dt / 2 ** halvings))
        return self._prop_cache[halvings]

    def a_mean(self, rho: np.ndarray) -> complex:
        return complex(np.sum(self.sq[1:] * np.diag(rho, -1)))

    def n_moments(self, rho: np.ndarray) -> tuple[float, float]:
        pops = np.real(np.diag(rho))
        m1 = float(np.sum(self.n * pops))
        m2 = float(np.sum(self.n * self.n * pops))
        return m1, m2 - m1 * m1


def _resolve_state(params: model.ModelParams, config: TrajectoryConfig):
    if config.initial_state is not None:
        rho0 = np.array(config.initial_state, dtype=complex)
        dim = rho0.shape[0]
    else:
        dim = config.dim or model.default_dim(params)
        rho0 = np.zeros((dim, dim), dtype=complex)
        rho0[0, 0] = 1.0
    fock.check_density_matrix(rho0)
    return rho0, dim


def _check_positivity(rho: np.ndarray, t: float):
    wmin = float(np.linalg.eigvalsh(rho).min())
    if wmin < POSITIVITY_FLOOR:
        raise StepSizeError(
            f"conditional state eigenvalue {wmin:.2e} below {POSITIVITY_FLOOR} at t={t:.3f}; "
            "reduce dt")


def simulate_photodetection(params: model.ModelParams, config: TrajectoryConfig,
                            traj_index: int = 0) -> TrajectoryRecord:
    """Single click-counting trajectory of the conditional density matrix."""
    rho, dim = _resolve_state(params, config)
    ctx = _StepContext(params, dim, config.dt)
    rng = _rng_for(config.seed, traj_index)
    nsteps = int(round(config.t_final / config.dt))
    stride = config.record_stride
    nbins = nsteps // stride
    times = np.arange(1, nbins + 1) * (stride * config.dt)
    current = np.zeros(nbins)
    n_mean = np.zeros(nbins)
    x_mean = np.zeros(nbins)
    p_mean = np.zeros(nbins)
    n_var = np.zeros(nbins)
    jump_times = []
    kappa, dt = params.kappa, config.dt
    bin_counts = 0
    for k in range(nsteps):
        nbar, _ = ctx.n_moments(rho)
        p_jump = kappa * nbar * dt
        halvings = 0
        while p_jump / 2 ** halvings > JUMP_PROB_CAP:
            halvings += 1
        for sub in range(2 ** halvings):
            if sub > 0:
                nbar, _ = ctx.n_moments(rho)
            p_sub = kappa * nbar * (dt / 2 ** halvings)
            if nbar > 0 and rng.random() < p_sub:
                out = np.zeros_like(rho)
                out[:-1, :-1] = rho[1:, 1:] * ctx.jump_w
                rho = out / nbar
                jump_times.append((k + (sub + 1) / 2 ** halvings) * dt)
                bin_counts += 1
            else:
                m = ctx.propagator(halvings)
                rho = m @ rho @ m.conj().T
            rho /= np.trace(rho).real
        if (k + 1) % stride == 0:
            b = (k + 1) // stride - 1
            current[b] = bin_counts / (stride * dt)
            bin_counts = 0
            am = ctx.a_mean(rho)
            n_mean[b], n_var[b] = ctx.n_moments(rho)
            x_mean[b] = 2.0 * am.real
            p_mean[b] = 2.0 * am.imag
            _check_positivity(rho, times[b])
    return TrajectoryRecord(times=times, current=current, n_mean=n_mean,
                            x_mean=x_mean, p_mean=p_mean, n_var=n_var,
                            jump_times=np.asarray(jump_times), seed=config.seed,
                            traj_index=traj_index, final_state=rho)


def simulate_homodyne(params: model.ModelParams, config: TrajectoryConfig,
                      traj_index: int = 0) -> TrajectoryRecord:
    """Single diffusive trajectory under homodyne detection of q_theta."""
    theta = config.scheme.theta if config.scheme.theta is not None else 0.5 * np.pi
    rho, dim = _resolve_state(params, config)
    ctx = _StepContext(params, dim, config.dt)
    rng = _rng_for(config.seed, traj_index)
    nsteps = int(round(config.t_final / config.dt))
    stride = config.record_stride
    nbins = nsteps // stride
    times = np.arange(1, nbins + 1) * (stride * config.dt)
    current = np.zeros(nbins)
    n_mean = np.zeros(nbins)
    x_mean = np.zeros(nbins)
    p_mean = np.zeros(nbins)
    n_var = np.zeros(nbins)
    kappa, dt = params.kappa, config.dt
    sqk = np.sqrt(kappa)
    cvec = sqk * np.exp(-1j * theta) * ctx.sq[1:]  # C = sqrt(kappa) a e^{-i theta}
    cw = np.outer(cvec, cvec.conj())
    m_prop = ctx.propagator()
    acc = 0.0
    chunk = 65536
    noise = rng.normal(0.0, np.sqrt(dt), size=min(chunk, nsteps))
    for k in range(nsteps):
        j = k % chunk
        if j == 0 and k > 0:
            noise = rng.normal(0.0, np.sqrt(dt), size=min(chunk, nsteps - k))
        dw = noise[j]
        # current sample from the pre-step state (Ito convention)
        c_rho = np.zeros_like(rho)
        c_rho[:-1, :] = cvec[:, None] * rho[1:, :]
        q_mean = 2.0 * np.trace(c_rho).real  # sqrt(kappa) <q_theta>
        dy = q_mean * dt + dw
        acc += q_mean + dw / dt
        # Kraus update (1 + dy C) rho (1 + dy C)^dag, then the exact
        # no-record propagator; completely positive at any dt
        quad = (dy * dy) * cw * rho[1:, 1:]
        rho = rho + dy * (c_rho + c_rho.conj().T)
        rho[:-1, :-1] += quad
        rho = m_prop @ rho @ m_prop.conj().T
        rho = 0.5 * (rho + rho.conj().T)
        rho /= np.trace(rho).real
        if (k + 1) % stride == 0:
            b = (k + 1) // stride - 1
            current[b] = acc / stride
            acc = 0.0
            am = ctx.a_mean(rho)
            n_mean[b], n_var[b] = ctx.n_moments(rho)
            x_mean[b] = 2.0 * am.real
            p_mean[b] = 2.0 * am.imag
            _check_positivity(rho, times[b])
    return TrajectoryRecord(times=times, current=current, n_mean=n_mean,
                            x_mean=x_mean, p_mean=p_mean, n_var=n_var,
                            jump_times=None, seed=config.seed,
                            traj_index=traj_index, final_state=rho)


def simulate(params: model.ModelParams, config: TrajectoryConfig,
             traj_index: int = 0) -> TrajectoryRecord:
    if config.scheme.kind == "photodetection":
        return simulate_photodetection(params, config, traj_index)
    return simulate_homodyne(params, config, traj_index)


def _simulate_star(args):
    return simulate(*args)


def run_ensemble(params: model.ModelParams, config: TrajectoryConfig,
                 n_traj: int, workers: int = 1) -> list[TrajectoryRecord]:
    """Independent trajectories indexed 0..n_traj-1, returned in index order."""
    jobs = [(params, config, i) for i in range(n_traj)]
    if workers <= 1:
        return [simulate(*job) for job in jobs]
    with Pool(processes=workers) as pool:
        return list(pool.map(_simulate_star, jobs))


def ensemble_mean_state(records) -> np.ndarray:
    """Deterministic index-ordered average of the final conditional states."""
    ordered = sorted(records, key=lambda r: r.traj_index)
    acc = np.zeros_like(ordered[0].final_state)
    for r in ordered:
        acc = acc + r.final_state
    return acc / len(ordered)


def low_pass_filter(record: TrajectoryRecord, tau_f: float) -> np.ndarray:
    """Single-pole filter of the binned current, DC gain one."""
    dt = record.bin_dt
    if tau_f <= dt:
        raise FilterError(f"filter time constant {tau_f} must exceed the sample spacing {dt}")
    out = np.empty_like(record.current)
    y = record.current[0]
    out[0] = y
    alpha = dt / tau_f
    for i in range(1, len(out)):
        y += alpha * (record.current[i] - y)
        out[i] = y
    return out


def estimate_diffusion(records, burn_in: float, window: float,
                       n_checkpoints: int = 40, n_bootstrap: int = 200,
                       min_records: int = 100, min_window: float = 50.0,
                       bootstrap_seed: int = 0) -> DiffusionEstimate:
    """Diffusion coefficient from the variance growth of integrated charge.

    Each record contributes Q_i(t) accumulated from ``burn_in``; the
    estimate is the least-squares slope of Var[Q(t)] over checkpoints in
    the window, with a bootstrap standard error over trajectories.
    """
    records = list(records)
    if len(records) < min_records:
        raise ValueError(f"need at least {min_records} records, got {len(records)}")
    if window < min_window:
        raise ValueError(f"window {window} too short; need >= {min_window} "
                         "(well beyond the correlation time)")
    r0 = records[0]
    dt = r0.bin_dt
    mask = (r0.times > burn_in) & (r0.times <= burn_in + window)
    idx = np.nonzero(mask)[0]
    if len(idx) < 2 * n_checkpoints:
        n_checkpoints = max(20, len(idx) // 2)
    if len(idx) < 20:
        raise ValueError("window contains fewer than 20 record bins")
    check = idx[np.linspace(0, len(idx) - 1, n_checkpoints).astype(int)]
    t_check = r0.times[check] - burn_in
    q = np.empty((len(records), len(check)))
    for i, r in enumerate(records):
        qfull = np.cumsum(r.current[idx]) * dt
        q[i] = qfull[np.searchsorted(idx, check)]
    def slope_r2(sample_idx):
        var = np.var(q[sample_idx], axis=0, ddof=1)
        A = np.vstack([t_check, np.ones_like(t_check)]).T
        coef, *_ = np.linalg.lstsq(A, var, rcond=None)
        pred = A @ coef
        ss_res = float(np.sum((var - pred) ** 2))
        ss_tot = float(np.sum((var - var.mean()) ** 2))
        r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
        return float(coef[0]), r2
    d_hat, r2 = slope_r2(np.arange(len(records)))
    if r2 < 0.9:
        warnings.warn(f"variance growth is not linear (R^2={r2:.3f}); "
                      "metastable switching may not be converged")
    rng = np.random.default_rng(bootstrap_seed)
    boots = np.empty(n_bootstrap)
    for b in range(n_bootstrap):
        sample = rng.integers(0, len(records), size=len(records))
        boots[b], _ = slope_r2(sample)
    return DiffusionEstimate(d_hat=d_hat, std_error=float(np.std(boots, ddof=1)),
                             n_trajectories=len(records), burn_in=burn_in,
                             window=window, r_squared=r2)


def plateau_thresholds(params: model.ModelParams) -> float:
    """Default classification threshold for the filtered homodyne current.

    Half the semiclassical lobe separation, sqrt(kappa) sqrt(n0)/2.
    """
    fp = model.semiclassical_fixed_points(params)
    if not fp.bistable:
        raise ValueError("plateau classification needs a bistable configuration")
    return 0.5 * np.sqrt(params.kappa) * np.sqrt(fp.n0)


def classify_plateaus(filtered_current: np.ndarray, threshold: float) -> np.ndarray:
    """Labels -1/0/+1 for (below -thr / between / above +thr)."""
    out = np.zeros(len(filtered_current), dtype=int)
    out[filtered_current > threshold] = 1
    out[filtered_current < -threshold] = -1
    return out
