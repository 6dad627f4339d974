"""Tagged-particle exclusion dynamics on lazy trees.

Clocks live on undirected edges and are generated per (edge, slab) from
keyed hashes, so a trajectory is a pure function of the sample seeds and the
dynamics seed. Each edge carries a symmetric exchange stream at rate
min(p(x,y), p(y,x)) and, when the two directed rates differ, a one-way
stream at rate |p(x,y) - p(y,x)| from the faster side. This has the same
generator as two independent directed clocks and lets most occupancy
queries be answered by following a single backward path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernel as K
from .errors import BudgetExceeded, UnoccupiedSite
from .measures import BERNOULLI, DEGREE, Configuration, RootedSample
from .offspring import OffspringDistribution
from .tree import AGW, LazyTree, canonical_ball_code

VARIABLE = "variable"
CONSTANT = "constant"
MODELS = (VARIABLE, CONSTANT)

MAX_HORIZON = 1e6
DEFAULT_MAX_NODES = 2_000_000
DEFAULT_MAX_STEPS = 200_000_000
FROZEN_TAU = 1.0 / 6.0


def _model_code(model: str) -> int:
    if model == VARIABLE:
        return K.VARIABLE
    if model == CONSTANT:
        return K.CONSTANT
    raise ValueError(f"unknown model {model!r}")


@dataclass(frozen=True)
class SlabPlan:
    tau: float
    horizon: float
    n_slabs: int

    @property
    def ring_probability(self) -> float:
        """Bound on the chance that a given edge rings within one slab."""
        return 1.0 - math.exp(-2.0 * self.tau)


def slab_plan(d: OffspringDistribution, T: float) -> SlabPlan:
    if not T > 0:
        raise ValueError("horizon must be positive")
    tau = 1.0 / (3.0 * d.mean)
    n = math.ceil(T / tau - 1e-9)
    return SlabPlan(tau=tau, horizon=float(T), n_slabs=max(n, 1))


def _tau_for(tree: LazyTree) -> float:
    if tree.offspring is None:
        return FROZEN_TAU
    return 1.0 / (3.0 * tree.offspring.mean)


@dataclass(frozen=True)
class ClockStream:
    """Events of one edge within one slab.

    The edge is named by its child endpoint. ``events()`` yields
    ``(time, kind, source, target)`` with kind ``"swap"`` for the symmetric
    stream (source is the parent) or ``"directed"`` for the one-way stream.
    """

    tree: LazyTree
    child: int
    slab: int
    model: str
    dynamics_seed: int
    tau: float

    def rates(self):
        p = self.tree.parent(self.child)
        if p is None:
            raise ValueError("the root has no parent edge")
        dp = self.tree.degree(p)
        dc = self.tree.degree(self.child)
        return K.edge_rates(_model_code(self.model), dp, dc)

    def events(self) -> list:
        p = self.tree.parent(self.child)
        rs, rr, dr = self.rates()
        bt = np.empty(2 * K.MAX_PER_STREAM, dtype=np.float64)
        bk = np.empty(2 * K.MAX_PER_STREAM, dtype=np.int64)
        n = K.edge_slab(np.uint64(self.dynamics_seed), np.uint64(self.tree.node_key(self.child)),
                        self.slab, self.tau, rs, rr, dr, bt, bk, 0)
        out = []
        for i in range(n):
            if bk[i] == K.SWAP:
                out.append((float(bt[i]), "swap", p, self.child))
            elif bk[i] == K.P2C:
                out.append((float(bt[i]), "directed", p, self.child))
            else:
                out.append((float(bt[i]), "directed", self.child, p))
        return out


class _Engine:
    """Owns the scratch state of one trajectory and grows it on demand."""

    def __init__(self, sample: RootedSample, model: str, T: float, dynamics_seed: int,
                 radius: int = -1, tau: float | None = None,
                 max_nodes: int = DEFAULT_MAX_NODES, max_steps: int = DEFAULT_MAX_STEPS):
        config = sample.config
        expected = BERNOULLI if model == VARIABLE else DEGREE
        if config.law != expected:
            raise ValueError(f"{model} model needs a {expected} configuration, got {config.law}")
        if not 0 < T <= MAX_HORIZON:
            raise ValueError(f"horizon must lie in (0, {MAX_HORIZON:g}]")
        if not config.palm:
            raise ValueError("the tagged particle needs a Palm configuration")
        self.sample = sample
        self.tree = sample.tree
        self.model = model
        self.T = float(T)
        self.dynamics_seed = int(dynamics_seed) & 0xFFFFFFFFFFFFFFFF
        self.radius = radius
        self.tau = _tau_for(self.tree) if tau is None else float(tau)
        self.max_nodes = max_nodes
        self.memo = K.new_memo()
        self.ipar = np.zeros(8, dtype=np.int64)
        self.ipar[K.I_MODEL] = _model_code(model)
        self.ipar[K.I_LAW] = config.law_code
        self.ipar[K.I_PALM] = 1
        self.ipar[K.I_EMPTY] = 1 if config.is_empty else 0
        self.ipar[K.I_MAXSTEPS] = max_steps
        self.ipar[K.I_TRACKLEN] = 1
        self.fpar = np.array([self.T, self.tau, config.param, float(radius)], dtype=np.float64)
        self.seeds = np.array([config.config_seed, self.dynamics_seed], dtype=np.uint64)
        self.track_t = np.zeros(max(64, int(4 * T) + 16), dtype=np.float64)
        self.track_n = np.zeros_like(self.track_t, dtype=np.int64)
        self.stk = np.zeros((64, 5), dtype=np.int64)
        self.stkt = np.zeros((64, 2), dtype=np.float64)
        self.kstack = np.zeros(1024, dtype=np.int64)
        self.bt = np.zeros(1024, dtype=np.float64)
        self.bk = np.zeros(1024, dtype=np.int64)
        self.bo = np.zeros(1024, dtype=np.int64)
        self.bs = np.zeros(1024, dtype=np.int64)

    def work(self):
        return K.Work(self.track_t, self.track_n, self.stk, self.stkt, self.kstack,
                      self.bt, self.bk, self.bo, self.bs, self.ipar, self.fpar, self.seeds)

    def _grow(self, status: int):
        if status == K.NEED_NODES:
            cap = self.tree.capacity
            if cap >= self.max_nodes:
                raise BudgetExceeded(f"node budget of {self.max_nodes} revealed nodes exhausted")
            self.tree.grow(min(2 * cap, self.max_nodes))
        elif status == K.NEED_TRACK:
            L = self.track_t.shape[0]
            self.track_t = np.resize(self.track_t, 2 * L)
            self.track_n = np.resize(self.track_n, 2 * L)
        elif status == K.NEED_STACK:
            self.stk = np.zeros((2 * self.stk.shape[0], 5), dtype=np.int64)
            self.stkt = np.zeros((2 * self.stkt.shape[0], 2), dtype=np.float64)
            self.kstack = np.zeros(2 * self.kstack.shape[0], dtype=np.int64)
        elif status == K.NEED_BUF:
            n = 2 * self.bt.shape[0]
            self.bt = np.zeros(n, dtype=np.float64)
            self.bk = np.zeros(n, dtype=np.int64)
            self.bo = np.zeros(n, dtype=np.int64)
            self.bs = np.zeros(n, dtype=np.int64)
        elif status == K.STEPS_EXCEEDED:
            raise BudgetExceeded(f"event budget of {self.ipar[K.I_MAXSTEPS]} resolution steps exhausted")
        else:
            raise RuntimeError(f"unexpected kernel status {status}")

    def run(self):
        while True:
            st = K.run_forward(self.tree.store, self.work(), self.memo)
            if st == K.OK:
                return
            self._grow(st)

    def occupancy(self, node: int, t: float) -> int:
        """Occupancy of node just before time t."""
        while True:
            v = K.query(self.tree.store, self.work(), self.memo, int(node), float(t))
            if v >= 0:
                return int(v)
            self._grow(-v)

    def drift_path(self):
        n = max(256, 8 * int(self.ipar[K.I_TRACKLEN]))
        while True:
            out_t = np.zeros(n, dtype=np.float64)
            out_v = np.zeros(n, dtype=np.float64)
            c = K.drift_path(self.tree.store, self.work(), self.memo, out_t, out_v)
            if c >= 0:
                return out_t[:c].copy(), out_v[:c].copy()
            if -c == K.NEED_OUT:
                n *= 2
            else:
                self._grow(-c)


@dataclass
class TaggedTrajectory:
    """Positions of the tagged particle; entry 0 is (0, root)."""

    times: np.ndarray
    nodes: np.ndarray
    graph_distance: np.ndarray
    horodistance: np.ndarray
    horizon: float
    model: str
    law: str
    seeds: dict
    engine: str = "exact"
    _engine: _Engine | None = field(default=None, repr=False, compare=False)

    @property
    def n_jumps(self) -> int:
        return len(self.times) - 1

    def index_at(self, t: float) -> int:
        """Index of the position held at time t (right-continuous)."""
        return int(np.searchsorted(self.times, t, side="right") - 1)

    def position_at(self, t: float) -> int:
        return int(self.nodes[self.index_at(t)])

    def distance_at(self, t: float, distance: str = "graph") -> int:
        arr = self.graph_distance if distance == "graph" else self.horodistance
        return int(arr[self.index_at(t)])

    def final(self, distance: str = "graph") -> int:
        arr = self.graph_distance if distance == "graph" else self.horodistance
        return int(arr[-1])

    def occupancy_at(self, node: int, t: float) -> int:
        """Occupancy of node at time t, after every event at times <= t."""
        if self._engine is None:
            raise ValueError("trajectory carries no engine state")
        return self._engine.occupancy(node, np.nextafter(float(t), np.inf))

    def occupancy_before(self, node: int, t: float) -> int:
        if self._engine is None:
            raise ValueError("trajectory carries no engine state")
        return self._engine.occupancy(node, float(t))

    def rows(self, replica: int):
        for t, v, g, h in zip(self.times, self.nodes, self.graph_distance, self.horodistance):
            yield (replica, float(t), int(g), int(g), int(h))


def _trajectory(engine: _Engine, name: str) -> TaggedTrajectory:
    L = int(engine.ipar[K.I_TRACKLEN])
    nodes = engine.track_n[:L].copy()
    table = engine.tree.nodes
    depth = table[nodes, K.DEPTH].copy()
    horo = depth - 2 * table[nodes, K.RAYDEPTH]
    s = engine.sample
    seeds = {"sample": s.seed, "tree": s.tree.tree_seed, "config": s.config.config_seed,
             "dynamics": engine.dynamics_seed}
    return TaggedTrajectory(times=engine.track_t[:L].copy(), nodes=nodes, graph_distance=depth,
                            horodistance=horo, horizon=engine.T, model=engine.model, law=s.law,
                            seeds=seeds, engine=name, _engine=engine)


def simulate_exact(sample: RootedSample, model: str, T: float, dynamics_seed: int, *,
                   tau: float | None = None, max_nodes: int = DEFAULT_MAX_NODES,
                   max_steps: int = DEFAULT_MAX_STEPS) -> TaggedTrajectory:
    """Exact tagged-particle path on [0, T].

    Raises BudgetExceeded when the dependency cone outgrows the node or step
    budget.
    """
    eng = _Engine(sample, model, T, dynamics_seed, -1, tau, max_nodes, max_steps)
    eng.run()
    return _trajectory(eng, "exact")


def simulate_windowed(sample: RootedSample, model: str, T: float, R: int, dynamics_seed: int, *,
                      tau: float | None = None, max_nodes: int = DEFAULT_MAX_NODES,
                      max_steps: int = DEFAULT_MAX_STEPS) -> TaggedTrajectory:
    """Dynamics restricted to the radius-R ball around the tagged particle.

    An event is applied only if both endpoints lie within distance R of the
    tagged particle at that moment; sites outside keep their last value.
    Uses the same clocks as :func:`simulate_exact`.
    """
    if int(R) != R or R < 2:
        raise ValueError("window radius must be an integer >= 2")
    eng = _Engine(sample, model, T, dynamics_seed, int(R), tau, max_nodes, max_steps)
    eng.run()
    return _trajectory(eng, f"windowed:{int(R)}")


def _occupancy_fn(config):
    if isinstance(config, Configuration) or hasattr(config, "occupancy"):
        return config.occupancy
    if callable(config):
        return config
    return config.__getitem__


def local_drift(tree: LazyTree, config, x: int, model: str) -> float:
    """Expected instantaneous horodistance change of a particle at x."""
    occ = _occupancy_fn(config)
    if occ(x) != 1:
        raise UnoccupiedSite(x)
    toward = tree.ray_next(x)
    nbrs = tree.neighbors(x)
    s = sum((1 - occ(z)) * (-1 if z == toward else 1) for z in nbrs)
    if model == CONSTANT:
        return s / len(nbrs)
    _model_code(model)
    return float(s)


@dataclass
class EnvironmentView:
    """The environment seen from the tagged particle, one record per position.

    ``psi_times``/``psi_values`` give the full piecewise-constant drift path.
    """

    times: np.ndarray
    root_degree: np.ndarray
    psi: np.ndarray
    codes: list
    psi_times: np.ndarray
    psi_values: np.ndarray
    radius: int

    def psi_at(self, t: float) -> float:
        i = int(np.searchsorted(self.psi_times, t, side="right") - 1)
        return float(self.psi_values[i])

    def drift_integral(self, t: float) -> float:
        """Integral of the drift over [0, t]."""
        pt, pv = self.psi_times, self.psi_values
        i = int(np.searchsorted(pt, t, side="right"))
        if i == 0:
            return 0.0
        edges = np.append(pt[:i], t)
        return float(np.dot(pv[:i], np.diff(edges)))


def environment_view(traj: TaggedTrajectory, sample: RootedSample, r: int = 1) -> EnvironmentView:
    eng = traj._engine
    if eng is None or eng.sample is not sample:
        raise ValueError("trajectory was not produced from this sample")
    psi_t, psi_v = eng.drift_path()
    tree = sample.tree
    times = traj.times
    deg = np.array([tree.degree(int(v)) for v in traj.nodes], dtype=np.int64)
    idx = np.searchsorted(psi_t, times, side="right") - 1
    psi = psi_v[idx]
    codes = []
    for t, v in zip(times, traj.nodes):
        tp = np.nextafter(float(t), np.inf)
        codes.append(canonical_ball_code(tree, lambda u, tp=tp: eng.occupancy(u, tp), int(v), r))
    return EnvironmentView(times=times.copy(), root_degree=deg, psi=psi, codes=codes,
                           psi_times=psi_t, psi_values=psi_v, radius=r)


# ------------------------------------------------------------- replicas

def replica_seeds(master_seed: int, i: int):
    """(sample seed, dynamics seed) of replica i."""
    rs = K.replica_seed(np.uint64(int(master_seed) & 0xFFFFFFFFFFFFFFFF), i)
    return int(rs), int(K.dynamics_seed_of(np.uint64(rs)))


def _scratch(T: float, model: str, law_code: int, param: float, radius: int, tau: float,
             empty: bool, max_steps: int):
    ipar = np.zeros(8, dtype=np.int64)
    ipar[K.I_MODEL] = _model_code(model)
    ipar[K.I_LAW] = law_code
    ipar[K.I_PALM] = 1
    ipar[K.I_EMPTY] = 1 if empty else 0
    ipar[K.I_MAXSTEPS] = max_steps
    ipar[K.I_TRACKLEN] = 1
    fpar = np.array([T, tau, param, float(radius)], dtype=np.float64)
    seeds = np.zeros(2, dtype=np.uint64)
    n = max(64, int(8 * T) + 64)
    return K.Work(np.zeros(n), np.zeros(n, dtype=np.int64), np.zeros((256, 5), dtype=np.int64),
                  np.zeros((256, 2)), np.zeros(4096, dtype=np.int64), np.zeros(4096),
                  np.zeros(4096, dtype=np.int64), np.zeros(4096, dtype=np.int64),
                  np.zeros(4096, dtype=np.int64), ipar, fpar, seeds)


def _grow_work(w, status):
    if status == K.NEED_TRACK:
        n = 2 * w.track_t.shape[0]
        return w._replace(track_t=np.zeros(n), track_n=np.zeros(n, dtype=np.int64))
    if status == K.NEED_STACK:
        return w._replace(stk=np.zeros((2 * w.stk.shape[0], 5), dtype=np.int64),
                          stkt=np.zeros((2 * w.stkt.shape[0], 2)),
                          kstack=np.zeros(2 * w.kstack.shape[0], dtype=np.int64))
    if status == K.NEED_BUF:
        n = 2 * w.bt.shape[0]
        return w._replace(bt=np.zeros(n), bk=np.zeros(n, dtype=np.int64),
                          bo=np.zeros(n, dtype=np.int64), bs=np.zeros(n, dtype=np.int64))
    raise BudgetExceeded(f"kernel status {status}")


def neighbourhood_batch(d: OffspringDistribution, model: str, law: str, param: float, T: float,
                        master_seed: int, n: int, *, max_nodes: int = DEFAULT_MAX_NODES,
                        max_steps: int = DEFAULT_MAX_STEPS) -> np.ndarray:
    """Radius-one neighbourhood statistics for replicas 0..n-1, exact engine.

    Row i holds (root degree at 0, occupied neighbours at 0, degree at T,
    occupied neighbours at T, jump count). Replica i uses the same seeds as
    ``sample(..., replica_seeds(master_seed, i)[0])`` with the matching
    dynamics seed.
    """
    law_code = K.BERNOULLI if model == VARIABLE else K.DEGREE
    tree = LazyTree(d, AGW, 0, capacity=4096)
    w = _scratch(T, model, law_code, param, -1, 1.0 / (3.0 * d.mean), param == 0.0, max_steps)
    memo = K.new_memo()
    out = np.zeros((n, 5), dtype=np.int64)
    i = 0
    master = np.uint64(int(master_seed) & 0xFFFFFFFFFFFFFFFF)
    while i < n:
        i, st = K.batch_environment(tree.store, w, memo, master, i, n, law == "Q", out)
        if st == K.OK:
            break
        if st == K.NEED_NODES:
            if tree.capacity >= max_nodes:
                raise BudgetExceeded("node budget exhausted")
            tree.grow(min(2 * tree.capacity, max_nodes))
        else:
            w = _grow_work(w, st)
    return out


def finite_batch(tree: LazyTree, model: str, param: float, T: float, master_seed: int, n: int,
                 bit_of=None, *, max_steps: int = DEFAULT_MAX_STEPS):
    """Histograms of the full configuration and the tagged position at T.

    ``tree`` must be frozen; state bit ``bit_of[v]`` encodes node v (default:
    the node's original label). Replica i uses config seed derived from
    ``replica_seeds(master_seed, i)[0]`` as in :func:`sample`.
    """
    if tree.labels is None:
        raise ValueError("finite_batch needs a frozen tree")
    size = tree.size
    if bit_of is None:
        bit_of = np.array(tree.labels, dtype=np.int64)
    bit_of = np.asarray(bit_of, dtype=np.int64)
    law_code = K.BERNOULLI if model == VARIABLE else K.DEGREE
    w = _scratch(T, model, law_code, param, -1, FROZEN_TAU, param == 0.0, max_steps)
    memo = K.new_memo()
    hc = np.zeros(1 << size, dtype=np.int64)
    hp = np.zeros(size, dtype=np.int64)
    i = 0
    master = np.uint64(int(master_seed) & 0xFFFFFFFFFFFFFFFF)
    while i < n:
        i, st = K.batch_finite(tree.store, w, memo, master, i, n, bit_of, hc, hp)
        if st == K.OK:
            break
        w = _grow_work(w, st)
    return hc, hp
