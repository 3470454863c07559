"""Monte-Carlo samplers for the processes behind the closed-form solutions.

Randomness: every sampler splits its n paths into fixed chunks of
``CHUNK`` paths; chunk i draws from ``SeedSequence(seed, spawn_key=(stream_id, i))``.
Results therefore depend only on (seed, stream_id, n, parameters), never on
how many workers process the chunks.

Stable conventions (pinned here, used everywhere):

* positive (one-sided) stable of order a in (0, 1), scale s:
  E exp(-u S) = exp(-s u^a);
* symmetric stable of order a in (0, 2], time scale s:
  E exp(i beta X) = exp(-s |beta|^a)  (a = 2 gives variance 2 s).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from fractel.errors import NumericalError, ParameterError

__all__ = [
    "CHUNK",
    "EmpiricalCF",
    "GridExhaustionError",
    "RngSpec",
    "SampleBatch",
    "empirical_cf",
    "sample_skewed_stable",
    "sample_stable_symmetric",
    "sim_brownian_time_telegraph",
    "inverse_time_levels",
    "sim_inverse_time",
    "sim_space_hadamard",
    "sim_telegraph",
    "sim_telegraph_brownian_clock",
]

CHUNK = 1 << 16
_MASK64 = (1 << 64) - 1


class GridExhaustionError(NumericalError):
    """First crossing not found within the step budget."""


@dataclass(frozen=True)
class RngSpec:
    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if int(v) != v or not (0 <= v <= _MASK64):
                raise ParameterError(f"{name} must be an unsigned 64-bit integer, got {v}")

    def chunk_generator(self, chunk: int) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream_id), int(chunk)))
        return np.random.Generator(np.random.PCG64(ss))


@dataclass
class SampleBatch:
    values: np.ndarray
    t: float
    n: int
    counts: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.n,):
            raise ValueError(f"expected {self.n} values, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise NumericalError("non-finite sample values")


@dataclass(frozen=True)
class EmpiricalCF:
    betas: np.ndarray
    estimate: np.ndarray
    stderr: np.ndarray
    n: int


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("FRACTEL_THREADS", "1")))
    except ValueError:
        return 1


def _run_chunks(n: int, rng: RngSpec, fn, workers: int | None):
    """Evaluate fn(gen, size) per chunk and concatenate in chunk order."""
    if int(n) != n or n < 1:
        raise ParameterError(f"n must be a positive integer, got {n}")
    n = int(n)
    sizes = [min(CHUNK, n - i * CHUNK) for i in range((n + CHUNK - 1) // CHUNK)]

    def job(i):
        return fn(rng.chunk_generator(i), sizes[i])

    workers = workers or default_workers()
    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, range(len(sizes))))
    else:
        parts = [job(i) for i in range(len(sizes))]
    if isinstance(parts[0], tuple):
        return tuple(np.concatenate(p) for p in zip(*parts))
    return np.concatenate(parts)


def _positive(name, v):
    if not (math.isfinite(v) and v > 0):
        raise ParameterError(f"{name} must be > 0, got {v}")


# ---------------------------------------------------------------------------
# telegraph process


def _telegraph_paths(gen, lam, c, horizon):
    """Terminal positions and switch counts for per-path horizons."""
    size = horizon.shape[0]
    vel = np.where(gen.random(size) < 0.5, -c, c)
    pos = np.zeros(size)
    clock = np.zeros(size)
    counts = np.zeros(size, dtype=np.int64)
    idx = np.nonzero(horizon > 0)[0]
    while idx.size:
        hold = gen.exponential(1.0 / lam, idx.size)
        left = horizon[idx] - clock[idx]
        pos[idx] += vel[idx] * np.minimum(hold, left)
        clock[idx] += hold
        switched = hold < left
        idx = idx[switched]
        vel[idx] = -vel[idx]
        counts[idx] += 1
    # rounding in the running sum must not leave [-c h, c h]
    lim = c * horizon
    return np.clip(pos, -lim, lim), counts


def sim_telegraph(lam: float, c: float, t: float, n: int, rng: RngSpec, *, workers: int | None = None) -> SampleBatch:
    """Exact simulation of T(t) = V(0) int_0^t (-1)^N(s) ds.

    Holding times are exponential(lam), V(0) = +-c with probability 1/2.
    Paths with no switch end exactly at +-ct.  ``counts`` holds N(t).
    """
    _positive("lam", lam)
    _positive("c", c)
    _positive("t", t)

    def fn(gen, size):
        return _telegraph_paths(gen, lam, c, np.full(size, float(t)))

    values, counts = _run_chunks(n, rng, fn, workers)
    return SampleBatch(values, float(t), int(n), counts)


def sim_telegraph_brownian_clock(lam: float, c: float, s: float, n: int, rng: RngSpec, *, workers: int | None = None) -> SampleBatch:
    """T(|B(s)|) with B a Brownian motion of variance 2s, independent of T.

    The variance 2s matches the heat kernel exp(-w^2/4s)/sqrt(4 pi s) that
    appears in the subordination formulas.
    """
    _positive("lam", lam)
    _positive("c", c)
    if not (math.isfinite(s) and s >= 0):
        raise ParameterError(f"s must be >= 0, got {s}")

    def fn(gen, size):
        clock = np.abs(gen.standard_normal(size)) * math.sqrt(2.0 * s)
        pos, _ = _telegraph_paths(gen, lam, c, clock)
        return pos, clock

    values, clock = _run_chunks(n, rng, fn, workers)
    batch = SampleBatch(values, float(s), int(n))
    batch.clock = clock
    return batch


def sim_brownian_time_telegraph(lam: float, c: float, t0: float, t: float, n: int, rng: RngSpec, *, workers: int | None = None) -> SampleBatch:
    """W(t) = T(|B(ln(t/t0))|), the telegraph process on a Brownian clock run in log time."""
    _positive("t0", t0)
    if not (math.isfinite(t) and t >= t0):
        raise ParameterError(f"t must be >= t0 = {t0}, got {t}")
    batch = sim_telegraph_brownian_clock(lam, c, math.log(t / t0), n, rng, workers=workers)
    batch.t = float(t)
    return batch


# ---------------------------------------------------------------------------
# stable laws


def _open_uniform(gen, size):
    # (0, 1]: keeps sin(pi U) and friends away from an exact zero at U = 0
    return 1.0 - gen.random(size)


def _positive_stable(gen, a, size):
    """Kanter / Chambers-Mallows-Stuck: E exp(-u S) = exp(-u^a), 0 < a < 1."""
    u = math.pi * _open_uniform(gen, size)
    w = gen.standard_exponential(size)
    w = np.maximum(w, np.finfo(float).tiny)
    return (np.sin(a * u) / np.sin(u) ** (1.0 / a)) * (np.sin((1.0 - a) * u) / w) ** ((1.0 - a) / a)


def _symmetric_stable(gen, a, size):
    """Chambers-Mallows-Stuck: E exp(i beta X) = exp(-|beta|^a), 0 < a <= 2."""
    v = math.pi * (_open_uniform(gen, size) - 0.5)
    w = np.maximum(gen.standard_exponential(size), np.finfo(float).tiny)
    if a == 1.0:
        return np.tan(v)
    return np.sin(a * v) / np.cos(v) ** (1.0 / a) * (np.cos((1.0 - a) * v) / w) ** ((1.0 - a) / a)


def sample_skewed_stable(order: float, scale: float, n: int, rng: RngSpec, *, workers: int | None = None) -> SampleBatch:
    """Positive stable samples with E exp(-u S) = exp(-scale u^order), 0 < order < 1."""
    if not (0.0 < order < 1.0):
        raise ParameterError(f"order must lie in (0, 1), got {order}")
    _positive("scale", scale)
    k = scale ** (1.0 / order)
    values = _run_chunks(n, rng, lambda gen, size: k * _positive_stable(gen, order, size), workers)
    return SampleBatch(values, float(scale), int(n))


def sample_stable_symmetric(alpha: float, time_scale: float, n: int, rng: RngSpec, *, workers: int | None = None) -> SampleBatch:
    """Symmetric stable samples with characteristic function exp(-time_scale |beta|^alpha)."""
    if not (0.0 < alpha <= 2.0):
        raise ParameterError(f"alpha must lie in (0, 2], got {alpha}")
    if not (math.isfinite(time_scale) and time_scale >= 0):
        raise ParameterError(f"time_scale must be >= 0, got {time_scale}")
    k = time_scale ** (1.0 / alpha)
    values = _run_chunks(n, rng, lambda gen, size: k * _symmetric_stable(gen, alpha, size), workers)
    return SampleBatch(values, float(time_scale), int(n))


# ---------------------------------------------------------------------------
# inverse of H(s) = H1^{2 nu}(s) + (2 lam)^{1/nu} H2^{nu}(s)

_FIRST_BLOCK = 64
_MAX_STEPS = 1 << 22
_BLOCK_BUDGET = 1 << 22  # increments held in memory at once


def _inverse_time_paths(gen, nu, lam, levels, ds, size):
    """First-crossing times of the sorted ``levels`` by H on the grid s_k = k ds.

    Returns shape (size, len(levels)).  All levels are read off the same H
    path, so L is monotone in the level pathwise.  Only paths that have not
    crossed the top level draw further increments.  Between grid points the
    crossing time is interpolated linearly.
    """
    a1, a2 = 2.0 * nu, nu
    k1 = ds ** (1.0 / a1)
    k2 = (2.0 * lam) ** (1.0 / nu) * ds ** (1.0 / a2) if lam > 0 else 0.0
    nlev = levels.size
    out = np.full((size, nlev), np.nan)
    h = np.zeros(size)
    nxt = np.zeros(size, dtype=np.int64)  # index of the next level to cross
    idx = np.arange(size)
    steps = 0
    block = _FIRST_BLOCK
    while idx.size:
        if steps >= _MAX_STEPS:
            raise GridExhaustionError(f"no crossing after {steps} steps of size {ds}")
        block = max(1, min(block, _MAX_STEPS - steps, _BLOCK_BUDGET // idx.size))
        shape = (idx.size, block)
        if a1 == 1.0:
            inc = np.full(shape, ds)
        else:
            inc = k1 * _positive_stable(gen, a1, idx.size * block).reshape(shape)
        if k2:
            inc += k2 * _positive_stable(gen, a2, idx.size * block).reshape(shape)
        path = h[idx, None] + np.cumsum(inc, axis=1)
        for j in range(nlev):
            rows = np.nonzero((nxt[idx] == j) & (path[:, -1] >= levels[j]))[0]
            if not rows.size:
                continue
            k = np.argmax(path[rows] >= levels[j], axis=1)
            hi = path[rows, k]
            lo = np.where(k > 0, path[rows, np.maximum(k - 1, 0)], h[idx[rows]])
            gap = hi - lo
            frac = np.where(gap > 0, (levels[j] - lo) / np.where(gap > 0, gap, 1.0), 1.0)
            out[idx[rows], j] = (steps + k + frac) * ds
            nxt[idx[rows]] = j + 1
        h[idx] = path[:, -1]
        steps += block
        idx = idx[nxt[idx] < nlev]
        block *= 2
    return out


def _check_inverse_time(nu, lam, ds):
    if not (0.0 < nu <= 0.5):
        raise ParameterError(f"nu must lie in (0, 1/2], got {nu}")
    if not (math.isfinite(lam) and lam >= 0):
        raise ParameterError(f"lam must be >= 0, got {lam}")
    _positive("grid_step", ds)


def sim_inverse_time(
    nu: float,
    lam: float,
    t: float,
    n: int,
    rng: RngSpec,
    grid_step: float | None = None,
    *,
    workers: int | None = None,
) -> SampleBatch:
    """L(t) = inf{s >= 0 : H1^{2 nu}(s) + (2 lam)^{1/nu} H2^{nu}(s) >= t}.

    H1, H2 are independent positive stable subordinators (orders 2 nu and
    nu, E exp(-u H(s)) = exp(-s u^order)); at nu = 1/2, H1(s) = s.  The
    default grid step is t/1000; the crossing is located on the grid and
    interpolated linearly, so the bias is at most one step.
    """
    _positive("t", t)
    ds = float(grid_step) if grid_step is not None else t / 1000.0
    values = inverse_time_levels(nu, lam, [t], n, rng, ds, workers=workers)[:, 0]
    return SampleBatch(values, float(t), int(n))


def inverse_time_levels(nu, lam, levels, n, rng: RngSpec, grid_step: float, *, workers=None) -> np.ndarray:
    """L at several increasing levels from shared H paths, shape (n, len(levels))."""
    levels = np.asarray(levels, dtype=float)
    if levels.ndim != 1 or levels.size == 0 or np.any(levels <= 0) or np.any(np.diff(levels) < 0):
        raise ParameterError("levels must be a non-empty increasing sequence of positive numbers")
    _check_inverse_time(nu, lam, grid_step)
    if lam == 0 and nu == 0.5:
        return np.tile(levels, (int(n), 1))

    def fn(gen, size):
        return _inverse_time_paths(gen, nu, lam, levels, float(grid_step), size)

    return _run_chunks(n, rng, fn, workers)


def sim_space_hadamard(
    alpha: float,
    nu: float,
    lam: float,
    c: float,
    t0: float,
    t: float,
    n: int,
    rng: RngSpec,
    grid_step: float | None = None,
    *,
    workers: int | None = None,
) -> SampleBatch:
    """W(t) = S^alpha(c^2 L^nu(ln(t/t0))): symmetric stable run on the inverse clock.

    Given L, S^alpha(c^2 L) has the law of (c^2 L)^(1/alpha) X with X
    standard symmetric stable, which is how it is sampled.  The clock and
    the stable factor use separate substreams (stream_id and stream_id + 1
    modulo 2^64).
    """
    _positive("c", c)
    _positive("t0", t0)
    if not (math.isfinite(t) and t > t0):
        raise ParameterError(f"t must exceed t0 = {t0}, got {t}")
    clock = sim_inverse_time(nu, lam, math.log(t / t0), n, rng, grid_step, workers=workers)
    other = RngSpec(rng.seed, (rng.stream_id + 1) & _MASK64)
    x = sample_stable_symmetric(alpha, 1.0, n, other, workers=workers)
    values = (c * c * clock.values) ** (1.0 / alpha) * x.values
    return SampleBatch(values, float(t), int(n))


# ---------------------------------------------------------------------------
# empirical characteristic function

_CF_BLOCK = 1 << 15


def empirical_cf(batch: SampleBatch, betas) -> EmpiricalCF:
    """estimate(beta) = mean exp(i beta X_j) with its standard error.

    The summands have unit modulus, so their sample variance is
    n/(n-1) (1 - |estimate|^2); stderr = sqrt(that / n).
    """
    if batch.n < 2:
        raise ParameterError("empirical_cf needs n >= 2")
    betas = np.atleast_1d(np.asarray(betas, dtype=float))
    re = np.zeros(betas.shape)
    im = np.zeros(betas.shape)
    x = batch.values
    for i in range(0, x.size, _CF_BLOCK):
        ph = np.outer(betas, x[i : i + _CF_BLOCK])
        re += np.cos(ph).sum(axis=1)
        im += np.sin(ph).sum(axis=1)
    est = (re + 1j * im) / batch.n
    # rounding can push |estimate| past 1; numpy's array abs and hypot
    # disagree in the last ulp, so test both and pull back a few ulps
    cap = 1.0 - 4 * np.finfo(float).eps
    mod = np.maximum(np.abs(est), np.hypot(est.real, est.imag))
    est = np.where(mod > 1.0, est * (cap / np.where(mod > 1.0, mod, 1.0)), est)
    var = np.maximum(1.0 - np.abs(est) ** 2, 0.0) * batch.n / (batch.n - 1)
    return EmpiricalCF(betas=betas, estimate=est, stderr=np.sqrt(var / batch.n), n=batch.n)
