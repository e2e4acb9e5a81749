"""Path generators: almost-exact and truncated-Euler schemes, both models.

The almost-exact scheme (AES) advances each CIR variance factor by sampling
its exact transition, a scaled noncentral chi-squared

    v_{i+1} = c_bar * chisq(dof, kappa_bar(v_i)),
    c_bar   = gamma^2 (1 - e^{-kappa dt}) / (4 kappa),
    kappa_bar = 4 kappa e^{-kappa dt} v_i / (gamma^2 (1 - e^{-kappa dt})),
    dof     = 4 kappa nu_bar / gamma^2,

and then updates the log-price with the variance increment substituted for
one of its stochastic integrals, leaving a single Euler-approximated normal
term per factor. Variance paths are exact and nonnegative by construction;
no truncation appears anywhere on the AES code path.

The truncated Euler baseline applies the positive part to the full variance
update and advances the log-price with Cholesky-correlated increments.

Draw order is a contract (streams are replayable): per step, variance draws
first (factor 1 then factor 2), then the log-price normals. Paths are
generated in fixed blocks of ``BLOCK_SIZE``; block ``b`` consumes the stream
keyed ``(seed, b)``, so results are bit-identical no matter how blocks are
scheduled across workers.
"""
from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .models import DoubleHestonParams, HestonParams, validate
from .sampling import NoncentralChiSqParams, RngStream, sample_noncentral_chisq, sample_standard_normal

BLOCK_SIZE = 65536


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid of ``steps`` intervals on [0, maturity]."""

    maturity: float
    steps: int

    def __post_init__(self):
        if not (np.isfinite(self.maturity) and self.maturity > 0.0):
            raise ValueError("maturity must be positive")
        if int(self.steps) < 1 or int(self.steps) != self.steps:
            raise ValueError("steps must be a positive integer")

    @property
    def dt(self) -> float:
        return self.maturity / self.steps

    def times(self) -> np.ndarray:
        return np.arange(self.steps + 1) * self.dt


@dataclass
class PathSet:
    """Simulated trajectories, one row per path, one column per grid time.

    Arrays are Fortran-ordered so per-date cross sections (columns) are
    contiguous for the backward induction sweep. ``variance_2`` is present
    only for the double Heston model.
    """

    grid: TimeGrid
    asset: np.ndarray
    variance_1: np.ndarray
    variance_2: np.ndarray | None = None

    @property
    def n_paths(self) -> int:
        return self.asset.shape[0]

    @property
    def n_fields(self) -> int:
        return 2 if self.variance_2 is None else 3

    @property
    def memory_bytes(self) -> int:
        # Allocation model: 8 bytes per float64, N*(M+1) per stored matrix.
        return 8 * self.n_paths * (self.grid.steps + 1) * self.n_fields

    def variances(self) -> tuple[np.ndarray, ...]:
        if self.variance_2 is None:
            return (self.variance_1,)
        return (self.variance_1, self.variance_2)


@dataclass(frozen=True)
class CirTransition:
    """Constants of the exact CIR transition over one step.

    ``kappa_bar`` is per-path (array) when built from a vector of current
    variances.
    """

    c_bar: float
    kappa_bar: float | np.ndarray
    dof: float


def cir_transition_params(kappa, gamma, nu_bar, dt, v_current) -> CirTransition:
    """Exact CIR transition constants for a step of length ``dt``."""
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    decay = math.exp(-kappa * dt)
    c_bar = gamma**2 / (4.0 * kappa) * (1.0 - decay)
    kappa_bar = 4.0 * kappa * decay * np.asarray(v_current, dtype=np.float64) / (gamma**2 * (1.0 - decay))
    dof = 4.0 * kappa * nu_bar / gamma**2
    if kappa_bar.ndim == 0:
        kappa_bar = kappa_bar.item()
    return CirTransition(c_bar=c_bar, kappa_bar=kappa_bar, dof=dof)


def cir_exact_step(stream: RngStream, transition: CirTransition):
    """One exact CIR step: scaled noncentral chi-squared draw(s), always >= 0."""
    draw = sample_noncentral_chisq(
        stream, NoncentralChiSqParams(transition.dof, transition.kappa_bar)
    )
    return transition.c_bar * draw


def heston_log_price_constants(params: HestonParams, dt: float):
    """AES log-price coefficients (c0, c1, c2, c3) for the Heston model."""
    rg = params.rho / params.gamma
    c0 = (params.r - rg * params.kappa * params.nu_bar) * dt
    c1 = (rg * params.kappa - 0.5) * dt - rg
    c2 = rg
    c3 = (1.0 - params.rho**2) * dt
    return c0, c1, c2, c3


def double_heston_log_price_constants(params: DoubleHestonParams, dt: float):
    """AES log-price coefficients (c0 .. c6) for the double Heston model."""
    rg1 = params.rho_13 / params.gamma_1
    rg2 = params.rho_24 / params.gamma_2
    c0 = (params.r - rg1 * params.kappa_1 * params.nu_bar_1 - rg2 * params.kappa_2 * params.nu_bar_2) * dt
    c1 = (rg1 * params.kappa_1 - 0.5) * dt - rg1
    c2 = (rg2 * params.kappa_2 - 0.5) * dt - rg2
    c3 = rg1
    c4 = rg2
    c5 = (1.0 - params.rho_13**2) * dt
    c6 = (1.0 - params.rho_24**2) * dt
    return c0, c1, c2, c3, c4, c5, c6


def truncated_euler_variance_step(v, kappa, nu_bar, gamma, dt, z):
    """Truncated Euler update: positive part of the full variance step."""
    return np.maximum(v + kappa * (nu_bar - v) * dt + gamma * np.sqrt(v * dt) * z, 0.0)


# ---------------------------------------------------------------------------
# Per-block kernels. Each fills (count, M+1) slabs from one keyed stream.
# ---------------------------------------------------------------------------

def _aes_heston_block(params, grid, seed, block_id, count):
    stream = RngStream(seed, block_id)
    dt = grid.dt
    c0, c1, c2, c3 = heston_log_price_constants(params, dt)
    asset = np.empty((count, grid.steps + 1), order="F")
    var = np.empty((count, grid.steps + 1), order="F")
    asset[:, 0] = params.s0
    var[:, 0] = params.v0
    x = np.full(count, math.log(params.s0))
    v = np.full(count, params.v0)
    for i in range(grid.steps):
        transition = cir_transition_params(params.kappa, params.gamma, params.nu_bar, dt, v)
        v_next = cir_exact_step(stream, transition)
        z = sample_standard_normal(stream, size=count)
        x = x + c0 + c1 * v + c2 * v_next + np.sqrt(c3 * v) * z
        v = v_next
        var[:, i + 1] = v_next
        asset[:, i + 1] = np.exp(x)
    return asset, var, None


def _euler_heston_block(params, grid, seed, block_id, count):
    stream = RngStream(seed, block_id)
    dt = grid.dt
    ortho = math.sqrt(1.0 - params.rho**2)
    asset = np.empty((count, grid.steps + 1), order="F")
    var = np.empty((count, grid.steps + 1), order="F")
    asset[:, 0] = params.s0
    var[:, 0] = params.v0
    x = np.full(count, math.log(params.s0))
    v = np.full(count, params.v0)
    for i in range(grid.steps):
        z_v = sample_standard_normal(stream, size=count)
        z_x = sample_standard_normal(stream, size=count)
        v_next = truncated_euler_variance_step(v, params.kappa, params.nu_bar, params.gamma, dt, z_v)
        x = x + (params.r - 0.5 * v) * dt + np.sqrt(v * dt) * (params.rho * z_v + ortho * z_x)
        v = v_next
        var[:, i + 1] = v_next
        asset[:, i + 1] = np.exp(x)
    return asset, var, None


def _aes_double_heston_block(params, grid, seed, block_id, count):
    stream = RngStream(seed, block_id)
    dt = grid.dt
    c0, c1, c2, c3, c4, c5, c6 = double_heston_log_price_constants(params, dt)
    f1, f2 = params.factors()
    asset = np.empty((count, grid.steps + 1), order="F")
    var1 = np.empty((count, grid.steps + 1), order="F")
    var2 = np.empty((count, grid.steps + 1), order="F")
    asset[:, 0] = params.s0
    var1[:, 0] = f1.v0
    var2[:, 0] = f2.v0
    x = np.full(count, math.log(params.s0))
    v1 = np.full(count, f1.v0)
    v2 = np.full(count, f2.v0)
    for i in range(grid.steps):
        t1 = cir_transition_params(f1.kappa, f1.gamma, f1.nu_bar, dt, v1)
        v1_next = cir_exact_step(stream, t1)
        t2 = cir_transition_params(f2.kappa, f2.gamma, f2.nu_bar, dt, v2)
        v2_next = cir_exact_step(stream, t2)
        z1 = sample_standard_normal(stream, size=count)
        z2 = sample_standard_normal(stream, size=count)
        x = (
            x + c0 + c1 * v1 + c2 * v2 + c3 * v1_next + c4 * v2_next
            + np.sqrt(c5 * v1) * z1 + np.sqrt(c6 * v2) * z2
        )
        v1, v2 = v1_next, v2_next
        var1[:, i + 1] = v1_next
        var2[:, i + 1] = v2_next
        asset[:, i + 1] = np.exp(x)
    return asset, var1, var2


def _euler_double_heston_block(params, grid, seed, block_id, count):
    stream = RngStream(seed, block_id)
    dt = grid.dt
    f1, f2 = params.factors()
    ortho1 = math.sqrt(1.0 - params.rho_13**2)
    ortho2 = math.sqrt(1.0 - params.rho_24**2)
    asset = np.empty((count, grid.steps + 1), order="F")
    var1 = np.empty((count, grid.steps + 1), order="F")
    var2 = np.empty((count, grid.steps + 1), order="F")
    asset[:, 0] = params.s0
    var1[:, 0] = f1.v0
    var2[:, 0] = f2.v0
    x = np.full(count, math.log(params.s0))
    v1 = np.full(count, f1.v0)
    v2 = np.full(count, f2.v0)
    for i in range(grid.steps):
        z_v1 = sample_standard_normal(stream, size=count)
        z_v2 = sample_standard_normal(stream, size=count)
        z_x1 = sample_standard_normal(stream, size=count)
        z_x2 = sample_standard_normal(stream, size=count)
        v1_next = truncated_euler_variance_step(v1, f1.kappa, f1.nu_bar, f1.gamma, dt, z_v1)
        v2_next = truncated_euler_variance_step(v2, f2.kappa, f2.nu_bar, f2.gamma, dt, z_v2)
        x = (
            x + (params.r - 0.5 * (v1 + v2)) * dt
            + np.sqrt(v1 * dt) * (params.rho_13 * z_v1 + ortho1 * z_x1)
            + np.sqrt(v2 * dt) * (params.rho_24 * z_v2 + ortho2 * z_x2)
        )
        v1, v2 = v1_next, v2_next
        var1[:, i + 1] = v1_next
        var2[:, i + 1] = v2_next
        asset[:, i + 1] = np.exp(x)
    return asset, var1, var2


_BLOCK_KERNELS = {
    ("aes", "heston"): _aes_heston_block,
    ("euler", "heston"): _euler_heston_block,
    ("aes", "double-heston"): _aes_double_heston_block,
    ("euler", "double-heston"): _euler_double_heston_block,
}


def _run_block(task):
    scheme, kind, params, grid, seed, block_id, count = task
    return block_id, _BLOCK_KERNELS[(scheme, kind)](params, grid, seed, block_id, count)


def resolve_workers(n_workers=None) -> int:
    """Worker count: explicit argument, else AESMC_WORKERS, else 1."""
    if n_workers is not None:
        return max(1, int(n_workers))
    env = os.environ.get("AESMC_WORKERS")
    if env:
        return max(1, int(env))
    return 1


def _simulate(scheme, kind, params, grid, n_paths, seed, n_workers):
    validate(params)
    if int(n_paths) < 1:
        raise ValueError("n_paths must be >= 1")
    n_paths = int(n_paths)
    workers = resolve_workers(n_workers)
    two_factor = kind == "double-heston"
    asset = np.empty((n_paths, grid.steps + 1), order="F")
    var1 = np.empty((n_paths, grid.steps + 1), order="F")
    var2 = np.empty((n_paths, grid.steps + 1), order="F") if two_factor else None
    tasks = []
    for block_id, start in enumerate(range(0, n_paths, BLOCK_SIZE)):
        count = min(BLOCK_SIZE, n_paths - start)
        tasks.append((scheme, kind, params, grid, seed, block_id, count))

    def _place(block_id, blocks):
        start = block_id * BLOCK_SIZE
        stop = start + blocks[0].shape[0]
        asset[start:stop] = blocks[0]
        var1[start:stop] = blocks[1]
        if two_factor:
            var2[start:stop] = blocks[2]

    if workers == 1 or len(tasks) == 1:
        for task in tasks:
            block_id, blocks = _run_block(task)
            _place(block_id, blocks)
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            for block_id, blocks in pool.map(_run_block, tasks):
                _place(block_id, blocks)
    return PathSet(grid=grid, asset=asset, variance_1=var1, variance_2=var2)


def simulate_aes_heston(params: HestonParams, grid: TimeGrid, n_paths: int, seed: int,
                        n_workers=None) -> PathSet:
    """Heston paths under the almost-exact scheme."""
    return _simulate("aes", "heston", params, grid, n_paths, seed, n_workers)


def simulate_euler_heston(params: HestonParams, grid: TimeGrid, n_paths: int, seed: int,
                          n_workers=None) -> PathSet:
    """Heston paths under the truncated Euler scheme (log-price Euler)."""
    return _simulate("euler", "heston", params, grid, n_paths, seed, n_workers)


def simulate_aes_double_heston(params: DoubleHestonParams, grid: TimeGrid, n_paths: int, seed: int,
                               n_workers=None) -> PathSet:
    """Double Heston paths under the almost-exact scheme."""
    return _simulate("aes", "double-heston", params, grid, n_paths, seed, n_workers)


def simulate_euler_double_heston(params: DoubleHestonParams, grid: TimeGrid, n_paths: int, seed: int,
                                 n_workers=None) -> PathSet:
    """Double Heston paths under the truncated Euler scheme."""
    return _simulate("euler", "double-heston", params, grid, n_paths, seed, n_workers)


def simulate(scheme: str, params, grid: TimeGrid, n_paths: int, seed: int, n_workers=None) -> PathSet:
    """Dispatch on scheme name and parameter type."""
    if scheme not in ("aes", "euler"):
        raise ValueError(f"unknown scheme {scheme!r}; expected 'aes' or 'euler'")
    kind = "double-heston" if isinstance(params, DoubleHestonParams) else "heston"
    return _simulate(scheme, kind, params, grid, n_paths, seed, n_workers)


def cir_conditional_moments(kappa, gamma, nu_bar, dt, v0):
    """Closed-form conditional mean and variance of a CIR factor after ``dt``."""
    decay = math.exp(-kappa * dt)
    mean = v0 * decay + nu_bar * (1.0 - decay)
    var = (
        v0 * gamma**2 / kappa * (decay - decay**2)
        + nu_bar * gamma**2 / (2.0 * kappa) * (1.0 - decay) ** 2
    )
    return mean, var


def dump_paths_csv(paths: PathSet, destination):
    """Write paths as CSV rows ``path,step,asset,var1[,var2]``."""
    two_factor = paths.variance_2 is not None
    header = ["path", "step", "asset", "var1"] + (["var2"] if two_factor else [])

    def _write(fh):
        writer = csv.writer(fh)
        writer.writerow(header)
        for p in range(paths.n_paths):
            for k in range(paths.grid.steps + 1):
                row = [p, k, repr(paths.asset[p, k]), repr(paths.variance_1[p, k])]
                if two_factor:
                    row.append(repr(paths.variance_2[p, k]))
                writer.writerow(row)

    if hasattr(destination, "write"):
        _write(destination)
    else:
        with open(destination, "w", newline="") as fh:
            _write(fh)
