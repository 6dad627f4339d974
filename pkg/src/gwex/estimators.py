"""Speed estimators, regeneration blocks, martingale residuals and the stationarity test."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import DegenerateBins, TooFewBlocks, TooFewReplicas

ENDPOINT = "endpoint"
BATCH_MEANS = "batch-means"
REGENERATION = "regeneration"

DEFAULT_BATCHES = 20
DEFAULT_RESAMPLES = 2000
DEFAULT_LEVEL = 0.95
MIN_BLOCKS = 10


@dataclass(frozen=True)
class SpeedEstimate:
    point: float
    lower: float
    upper: float
    level: float
    method: str
    distance: str
    replicas: int
    horizon: float

    @property
    def half_width(self) -> float:
        return 0.5 * (self.upper - self.lower)

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    def overlaps(self, other: "SpeedEstimate") -> bool:
        return self.lower <= other.upper and other.lower <= self.upper

    def as_dict(self) -> dict:
        return {"method": self.method, "distance": self.distance, "point": self.point,
                "lower": self.lower, "upper": self.upper, "level": self.level,
                "replicas": self.replicas, "horizon": self.horizon}


def _series(traj, distance):
    if distance == "graph":
        return traj.graph_distance
    if distance == "horodistance":
        return traj.horodistance
    raise ValueError(f"unknown distance notion {distance!r}")


def _normal_ci(values, level):
    values = np.asarray(values, dtype=float)
    mean = float(values.mean())
    se = float(values.std(ddof=1) / np.sqrt(values.size))
    z = float(stats.norm.ppf(0.5 + level / 2))
    return mean, mean - z * se, mean + z * se


def _common_horizon(trajectories):
    hs = {float(t.horizon) for t in trajectories}
    if len(hs) != 1:
        raise ValueError("trajectories must share one horizon")
    return hs.pop()


def estimate_speed_endpoint(trajectories, distance: str = "graph",
                            level: float = DEFAULT_LEVEL) -> SpeedEstimate:
    """Mean of distance(T)/T with a normal interval across replicas."""
    trajectories = list(trajectories)
    if len(trajectories) < 2:
        raise TooFewReplicas("need at least two trajectories")
    T = _common_horizon(trajectories)
    v = [float(_series(t, distance)[-1]) / T for t in trajectories]
    mean, lo, hi = _normal_ci(v, level)
    return SpeedEstimate(mean, lo, hi, level, ENDPOINT, distance, len(trajectories), T)


def batch_rates(traj, distance: str = "graph", n_batches: int = DEFAULT_BATCHES) -> np.ndarray:
    """Distance gained per unit time over equal batches of [0, T]."""
    T = float(traj.horizon)
    edges = np.linspace(0.0, T, n_batches + 1)
    idx = np.searchsorted(traj.times, edges, side="right") - 1
    pos = _series(traj, distance)[idx].astype(float)
    return np.diff(pos) / (T / n_batches)


def estimate_speed_batch_means(trajectories, distance: str = "graph",
                               n_batches: int = DEFAULT_BATCHES,
                               level: float = DEFAULT_LEVEL) -> SpeedEstimate:
    """Batch-means interval; batches from all replicas are pooled."""
    trajectories = list(trajectories)
    if not trajectories:
        raise TooFewReplicas("need at least one trajectory")
    T = _common_horizon(trajectories)
    rates = np.concatenate([batch_rates(t, distance, n_batches) for t in trajectories])
    if rates.size < 2:
        raise TooFewReplicas("need at least two batches")
    mean, lo, hi = _normal_ci(rates, level)
    return SpeedEstimate(mean, lo, hi, level, BATCH_MEANS, distance, len(trajectories), T)


@dataclass(frozen=True)
class RegenerationRecord:
    """Regeneration indices n (the step x_n -> x_{n+1}) and the complete blocks between them."""

    indices: np.ndarray
    block_times: np.ndarray
    block_gains: np.ndarray

    @property
    def n_blocks(self) -> int:
        return int(self.block_times.size)


def regeneration_indices(path, buffer: int) -> np.ndarray:
    """Indices n with x_{n+1} unseen before and x_n never seen again."""
    path = list(path)
    L = len(path)
    first, last = {}, {}
    for i, v in enumerate(path):
        first.setdefault(v, i)
        last[v] = i
    limit = L - 2 - buffer
    out = [n for n in range(0, max(limit + 1, 0))
           if first[path[n + 1]] == n + 1 and last[path[n]] == n]
    return np.array(out, dtype=np.int64)


def detect_regenerations(traj, buffer: int | None = None) -> RegenerationRecord:
    """Regenerations of the jump chain; default buffer is 10% of the jumps."""
    if buffer is None:
        buffer = int(np.ceil(0.1 * traj.n_jumps))
    if buffer < 0:
        raise ValueError("buffer must be non-negative")
    idx = regeneration_indices(traj.nodes, buffer)
    times = traj.times[idx + 1] if idx.size else np.zeros(0)
    horo = traj.horodistance[idx + 1] if idx.size else np.zeros(0, dtype=np.int64)
    return RegenerationRecord(idx, np.diff(times), np.diff(horo).astype(np.int64))


def estimate_speed_regen(traj, record=None, resamples: int = DEFAULT_RESAMPLES,
                         level: float = DEFAULT_LEVEL, seed: int = 0) -> SpeedEstimate:
    """Ratio of horodistance to time over complete regeneration blocks.

    ``traj`` may be a single trajectory or a list; blocks are pooled across
    replicas. The interval resamples whole blocks.
    """
    trajs = list(traj) if isinstance(traj, (list, tuple)) else [traj]
    if record is None:
        records = [detect_regenerations(t) for t in trajs]
    else:
        records = list(record) if isinstance(record, (list, tuple)) else [record]
    dt = np.concatenate([r.block_times for r in records]) if records else np.zeros(0)
    dh = np.concatenate([r.block_gains for r in records]).astype(float) if records else np.zeros(0)
    if dt.size < MIN_BLOCKS:
        raise TooFewBlocks(f"{dt.size} complete blocks, need {MIN_BLOCKS}")
    point = float(dh.sum() / dt.sum())
    rng = np.random.default_rng(seed)
    pick = rng.integers(0, dt.size, size=(resamples, dt.size))
    boot = dh[pick].sum(axis=1) / dt[pick].sum(axis=1)
    a = (1 - level) / 2
    lo, hi = np.quantile(boot, [a, 1 - a])
    lo, hi = min(float(lo), point), max(float(hi), point)
    T = _common_horizon(trajs)
    return SpeedEstimate(point, lo, hi, level, REGENERATION, "horodistance", len(trajs), T)


def martingale_residual(traj, env):
    """M_t = horodistance(t) - integral of the drift, at each jump time and at T.

    Returns (times, values).
    """
    times = np.append(traj.times, traj.horizon)
    horo = np.append(traj.horodistance, traj.horodistance[-1]).astype(float)
    integral = np.array([env.drift_integral(t) for t in times])
    return times, horo - integral


def stationarity_test(codes_t0, codes_t, min_bin: int = 5) -> float:
    """Chi-square homogeneity p-value between two samples of ball codes."""
    a, b = Counter(codes_t0), Counter(codes_t)
    na, nb = sum(a.values()), sum(b.values())
    if na == 0 or nb == 0:
        raise DegenerateBins("empty sample")
    keys = sorted(set(a) | set(b))
    table = np.array([[a[k] for k in keys], [b[k] for k in keys]], dtype=float)
    expected = table.sum(axis=0) * min(na, nb) / (na + nb)
    small = expected < min_bin
    if small.any():
        pooled = table[:, small].sum(axis=1, keepdims=True)
        table = np.hstack([table[:, ~small], pooled])
        if table.shape[1] > 1 and table[:, -1].sum() * min(na, nb) / (na + nb) < min_bin:
            table = np.hstack([table[:, :-2], table[:, -2:].sum(axis=1, keepdims=True)])
    if table.shape[1] < 2:
        return 1.0
    stat, p, _, _ = stats.chi2_contingency(table, correction=False)
    return float(p)
