"""Compiled kernels shared by the tree, measure and dynamics layers.

Everything random is a pure function of 64-bit keys: node keys are derived
from the parent key and child index, occupancies from (config seed, node key),
and clock events from (dynamics seed, edge key, slab index). Exploration order
therefore never changes a result.

The dynamics kernels answer "is site n occupied just before time t" by walking
backward through the clock events incident to n. Symmetric (stirring) events
transport the answer along the edge; the directed residual events of the
constant-speed model on non-regular trees combine two answers with AND/OR.
Results are memoized per (node, event).
"""

from collections import namedtuple

import numpy as np
from numba import njit, types
from numba.typed import Dict

U64 = np.uint64

_GOLDEN = U64(0x9E3779B97F4A7C15)
_M1 = U64(0xBF58476D1CE4E5B9)
_M2 = U64(0x94D049BB133111EB)
_S30 = U64(30)
_S27 = U64(27)
_S31 = U64(31)
_S11 = U64(11)
_S1 = U64(1)
_INV53 = 1.0 / 9007199254740992.0

TAG_ROOT = U64(0x524F4F5400000001)
TAG_OFFSPRING = U64(0x4F46465300000002)
TAG_TREE = U64(0x5452454500000003)
TAG_CONFIG = U64(0x434F4E4600000004)
TAG_ATTEMPT = U64(0x4154544D00000000)
TAG_ACCEPT = U64(0x4143435000000005)
TAG_REPLICA = U64(0x5245504C00000006)
TAG_DYN = U64(0x44594E4100000007)
TAG_STREAM_SYM = U64(1)
TAG_STREAM_RES = U64(2)

# node table columns
PARENT, FIRST, NCHILD, DEPTH, RAYDEPTH, CINDEX = 0, 1, 2, 3, 4, 5
NFIELDS = 6
# meta slots
COUNT, AGW = 0, 1

VARIABLE, CONSTANT = 0, 1
BERNOULLI, DEGREE = 0, 1

# edge-level event kinds, then node-relative kinds
SWAP, P2C, C2P = 0, 1, 2
OUT, IN = 1, 2

AND, OR = 0, 1

# integer parameter slots
I_MODEL, I_LAW, I_PALM, I_EMPTY, I_MAXSTEPS, I_STEPS, I_TRACKLEN = 0, 1, 2, 3, 4, 5, 6
# float parameter slots
F_T, F_TAU, F_PARAM, F_R = 0, 1, 2, 3
# seed slots
S_CONF, S_DYN = 0, 1

OK, NEED_NODES, NEED_TRACK, NEED_STACK, NEED_BUF, STEPS_EXCEEDED, NEED_OUT = 0, 1, 2, 3, 4, 5, 6

MAX_PER_STREAM = 24
SLOT_STRIDE = 64

Store = namedtuple("Store", "nodes keys meta ks cdf")
Work = namedtuple("Work", "track_t track_n stk stkt kstack bt bk bo bs ipar fpar seeds")

MEMO_KEY = types.int64
MEMO_VAL = types.int8


def new_memo():
    return Dict.empty(key_type=MEMO_KEY, value_type=MEMO_VAL)


# ---------------------------------------------------------------- hashing

@njit(cache=True)
def mix64(z):
    z = z + _GOLDEN
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True)
def hash2(a, b):
    return mix64(mix64(a) ^ b)


@njit(cache=True)
def unit(h):
    return np.float64(h >> _S11) * _INV53


@njit(cache=True)
def replica_seed(master, i):
    return hash2(hash2(master, TAG_REPLICA), U64(i))


@njit(cache=True)
def dynamics_seed_of(seed):
    return hash2(seed, TAG_DYN)


# ------------------------------------------------------------ tree store

@njit(cache=True)
def offspring_draw(key, ks, cdf):
    u = unit(hash2(key, TAG_OFFSPRING))
    i = 0
    while i < cdf.shape[0] - 1 and u >= cdf[i]:
        i += 1
    return ks[i]


@njit(cache=True)
def root_key(tree_seed):
    return hash2(tree_seed, TAG_ROOT)


@njit(cache=True)
def reset_store(nodes, keys, meta, tree_seed):
    for c in range(NFIELDS):
        nodes[0, c] = 0
    nodes[0, PARENT] = -1
    nodes[0, FIRST] = -1
    keys[0] = root_key(tree_seed)
    meta[COUNT] = 1


@njit(cache=True)
def materialize(nodes, keys, meta, ks, cdf, v):
    """Reveal the children of v. False when the table is full."""
    if nodes[v, FIRST] >= 0:
        return True
    z = offspring_draw(keys[v], ks, cdf)
    if v == 0 and meta[AGW] == 1:
        z += 1
    cnt = meta[COUNT]
    if cnt + z > nodes.shape[0]:
        return False
    on_ray = nodes[v, RAYDEPTH] == nodes[v, DEPTH]
    for i in range(z):
        c = cnt + i
        nodes[c, PARENT] = v
        nodes[c, FIRST] = -1
        nodes[c, NCHILD] = 0
        nodes[c, DEPTH] = nodes[v, DEPTH] + 1
        if on_ray and i == 0:
            nodes[c, RAYDEPTH] = nodes[v, RAYDEPTH] + 1
        else:
            nodes[c, RAYDEPTH] = nodes[v, RAYDEPTH]
        nodes[c, CINDEX] = i
        keys[c] = hash2(keys[v], U64(i + 1))
    nodes[v, FIRST] = cnt
    nodes[v, NCHILD] = z
    meta[COUNT] = cnt + z
    return True


@njit(cache=True)
def degree(nodes, v):
    d = nodes[v, NCHILD]
    if nodes[v, PARENT] >= 0:
        d += 1
    return d


@njit(cache=True)
def within(nodes, a, b, R):
    """True when the graph distance between a and b is at most R."""
    da = nodes[a, DEPTH]
    db = nodes[b, DEPTH]
    steps = 0
    while da > db:
        a = nodes[a, PARENT]
        da -= 1
        steps += 1
        if steps > R:
            return False
    while db > da:
        b = nodes[b, PARENT]
        db -= 1
        steps += 1
        if steps > R:
            return False
    while a != b:
        a = nodes[a, PARENT]
        b = nodes[b, PARENT]
        steps += 2
        if steps > R:
            return False
    return True


# ------------------------------------------------------------ occupancy

@njit(cache=True)
def occupancy_probability(law, param, deg):
    if law == BERNOULLI:
        return param
    x = param * deg
    return x / (1.0 + x)


@njit(cache=True)
def initial_occupancy(nodes, keys, meta, ks, cdf, v, law, param, palm, config_seed):
    """Time-zero occupancy of v, or -NEED_NODES."""
    if v == 0 and palm == 1:
        return 1
    deg = 0
    if law == DEGREE:
        if not materialize(nodes, keys, meta, ks, cdf, v):
            return -NEED_NODES
        deg = degree(nodes, v)
    q = occupancy_probability(law, param, deg)
    if unit(hash2(config_seed, keys[v])) < q:
        return 1
    return 0


# ----------------------------------------------------------------- clocks

@njit(cache=True)
def poisson_count(u, lam):
    if lam <= 0.0:
        return 0
    p = np.exp(-lam)
    c = p
    k = 0
    while u >= c and k < MAX_PER_STREAM:
        k += 1
        p *= lam / k
        c += p
    return k


@njit(cache=True)
def edge_rates(model, deg_parent, deg_child):
    """Split the two directed rates into a symmetric part and a residual."""
    if model == VARIABLE:
        return 1.0, 0.0, SWAP
    a = 1.0 / deg_parent
    b = 1.0 / deg_child
    if a == b:
        return a, 0.0, SWAP
    if a > b:
        return b, a - b, P2C
    return a, b - a, C2P


@njit(cache=True)
def edge_slab(dyn, ekey, k, tau, r_sym, r_res, dir_res, bt, bk, off):
    """Append the sorted events of one edge in slab k; -1 if buffers are full."""
    base = hash2(hash2(dyn, ekey), U64(k))
    n1 = poisson_count(unit(hash2(base, TAG_STREAM_SYM)), r_sym * tau)
    n2 = poisson_count(unit(hash2(base, TAG_STREAM_RES)), r_res * tau)
    n = n1 + n2
    if off + n > bt.shape[0]:
        return -1
    t0 = k * tau
    for i in range(n1):
        bt[off + i] = t0 + tau * unit(hash2(base, U64(16 + i)))
        bk[off + i] = SWAP
    for i in range(n2):
        bt[off + n1 + i] = t0 + tau * unit(hash2(base, U64(1024 + i)))
        bk[off + n1 + i] = dir_res
    for i in range(off + 1, off + n):
        tv = bt[i]
        kv = bk[i]
        j = i - 1
        while j >= off and bt[j] > tv:
            bt[j + 1] = bt[j]
            bk[j + 1] = bk[j]
            j -= 1
        bt[j + 1] = tv
        bk[j + 1] = kv
    return off + n


@njit(cache=True)
def node_slab_events(nodes, keys, meta, ks, cdf, n, k, model, dyn, tau, bt, bk, bo, bs):
    """Events of slab k on every edge at n (n must be materialized).

    Kinds are rewritten relative to n (SWAP, OUT, IN); bo holds the other
    endpoint and bs a slot id unique among n's events in this slab.
    Returns the count, or a negated status.
    """
    cnt = 0
    dn = 0
    if model == CONSTANT:
        dn = degree(nodes, n)
    p = nodes[n, PARENT]
    if p >= 0:
        rs, rr, dr = edge_rates(model, degree(nodes, p), dn)
        start = cnt
        cnt = edge_slab(dyn, keys[n], k, tau, rs, rr, dr, bt, bk, cnt)
        if cnt < 0:
            return -NEED_BUF
        for i in range(start, cnt):
            bo[i] = p
            bs[i] = i - start
            if bk[i] == P2C:
                bk[i] = IN
            elif bk[i] == C2P:
                bk[i] = OUT
    first = nodes[n, FIRST]
    for j in range(nodes[n, NCHILD]):
        c = first + j
        dc = 0
        if model == CONSTANT:
            if not materialize(nodes, keys, meta, ks, cdf, c):
                return -NEED_NODES
            dc = degree(nodes, c)
        rs, rr, dr = edge_rates(model, dn, dc)
        start = cnt
        cnt = edge_slab(dyn, keys[c], k, tau, rs, rr, dr, bt, bk, cnt)
        if cnt < 0:
            return -NEED_BUF
        for i in range(start, cnt):
            bo[i] = c
            bs[i] = (j + 1) * SLOT_STRIDE + (i - start)
            if bk[i] == P2C:
                bk[i] = OUT
            elif bk[i] == C2P:
                bk[i] = IN
    return cnt


# ------------------------------------------------------- tagged track

@njit(cache=True)
def pos_at(work, t):
    """Tagged position just before time t."""
    L = work.ipar[I_TRACKLEN]
    j = np.searchsorted(work.track_t[1:L], t)
    return work.track_n[j]


@njit(cache=True)
def memo_key(n, k, slot):
    h = hash2(hash2(U64(n), U64(k)), U64(slot))
    return np.int64(h >> _S1)


@njit(cache=True)
def edge_active(store, work, s, a, b):
    R = work.fpar[F_R]
    if R < 0:
        return True
    x = pos_at(work, s)
    r = np.int64(R)
    return within(store.nodes, x, a, r) and within(store.nodes, x, b, r)


@njit(cache=True)
def latest_before(store, work, n, t):
    """Latest active event at n strictly before t.

    Returns (status, time, other, kind, memo key); time is -1 if none.
    """
    tau = work.fpar[F_TAU]
    model = work.ipar[I_MODEL]
    dyn = work.seeds[S_DYN]
    bt, bk, bo, bs = work.bt, work.bk, work.bo, work.bs
    k = np.int64(t / tau)
    while k >= 0:
        cnt = node_slab_events(store.nodes, store.keys, store.meta, store.ks, store.cdf,
                               n, k, model, dyn, tau, bt, bk, bo, bs)
        if cnt < 0:
            return -cnt, -1.0, -1, -1, np.int64(0)
        upper = t
        while True:
            best = -1
            for i in range(cnt):
                if bt[i] < upper and (best < 0 or bt[i] > bt[best]):
                    best = i
            if best < 0:
                break
            if edge_active(store, work, bt[best], n, bo[best]):
                return OK, bt[best], bo[best], bk[best], memo_key(n, k, bs[best])
            upper = bt[best]
        k -= 1
    return OK, -1.0, -1, -1, np.int64(0)


@njit(cache=True)
def next_after(store, work, n, t):
    """Earliest event at n strictly after t and no later than the horizon."""
    tau = work.fpar[F_TAU]
    T = work.fpar[F_T]
    model = work.ipar[I_MODEL]
    dyn = work.seeds[S_DYN]
    bt, bk, bo, bs = work.bt, work.bk, work.bo, work.bs
    k = np.int64(t / tau)
    while k * tau <= T:
        cnt = node_slab_events(store.nodes, store.keys, store.meta, store.ks, store.cdf,
                               n, k, model, dyn, tau, bt, bk, bo, bs)
        if cnt < 0:
            return -cnt, -1.0, -1, -1
        best = -1
        for i in range(cnt):
            if bt[i] > t and (best < 0 or bt[i] < bt[best]):
                best = i
        if best >= 0:
            if bt[best] > T:
                return OK, -1.0, -1, -1
            if edge_active(store, work, bt[best], n, bo[best]):
                return OK, bt[best], bo[best], bk[best]
            t = bt[best]
            continue
        k += 1
    return OK, -1.0, -1, -1


# ----------------------------------------------------------- resolver

@njit(cache=True)
def state(store, work, memo, n0, t0):
    """Occupancy of n0 just before t0 (0/1), or a negated status."""
    ipar = work.ipar
    if ipar[I_EMPTY] == 1:
        return 1 if pos_at(work, t0) == n0 else 0
    nodes, keys, meta, ks, cdf = store.nodes, store.keys, store.meta, store.ks, store.cdf
    stk, stkt, kst = work.stk, work.stkt, work.kstack
    S = stk.shape[0]
    K = kst.shape[0]
    law = ipar[I_LAW]
    palm = ipar[I_PALM]
    param = work.fpar[F_PARAM]
    cseed = work.seeds[S_CONF]

    stk[0, 0] = n0
    stkt[0, 0] = t0
    stk[0, 1] = 0
    stk[0, 3] = 0
    sp = 1
    kp = 0
    while True:
        # resolve the top frame's target, following swap chains
        f = sp - 1
        n = stk[f, 0]
        t = stkt[f, 0]
        val = -1
        while True:
            ipar[I_STEPS] += 1
            if ipar[I_STEPS] > ipar[I_MAXSTEPS]:
                return -STEPS_EXCEEDED
            if pos_at(work, t) == n:
                val = 1
                break
            if not materialize(nodes, keys, meta, ks, cdf, n):
                return -NEED_NODES
            st, s, other, kind, key = latest_before(store, work, n, t)
            if st != OK:
                return -st
            if s < 0.0:
                val = initial_occupancy(nodes, keys, meta, ks, cdf, n, law, param, palm, cseed)
                if val < 0:
                    return val
                break
            if key in memo:
                val = np.int64(memo[key])
                break
            if kp >= K:
                return -NEED_STACK
            kst[kp] = key
            kp += 1
            if kind == SWAP:
                n = other
                t = s
                continue
            if sp >= S:
                return -NEED_STACK
            stk[f, 2] = AND if kind == OUT else OR
            stk[f, 3] = 0
            stk[f, 4] = other
            stkt[f, 1] = s
            stk[sp, 0] = n
            stkt[sp, 0] = s
            stk[sp, 1] = kp
            stk[sp, 3] = 0
            sp += 1
            break
        if val < 0:
            continue
        # propagate the value down the stack
        while True:
            base = stk[f, 1]
            for i in range(base, kp):
                memo[kst[i]] = np.int8(val)
            kp = base
            sp -= 1
            if sp == 0:
                return val
            g = sp - 1
            if stk[g, 3] == 0:
                op = stk[g, 2]
                if (op == AND and val == 0) or (op == OR and val == 1):
                    f = g
                    continue
                stk[g, 3] = 1
                stk[sp, 0] = stk[g, 4]
                stkt[sp, 0] = stkt[g, 1]
                stk[sp, 1] = kp
                stk[sp, 3] = 0
                sp += 1
                break
            f = g


@njit(cache=True)
def run_forward(store, work, memo):
    """Tagged-particle trajectory on [0, T]; returns a status code."""
    ipar = work.ipar
    T = work.fpar[F_T]
    work.track_t[0] = 0.0
    work.track_n[0] = 0
    ipar[I_TRACKLEN] = 1
    ipar[I_STEPS] = 0
    cap = work.track_t.shape[0]
    x = 0
    t = 0.0
    while True:
        ipar[I_STEPS] += 1
        if ipar[I_STEPS] > ipar[I_MAXSTEPS]:
            return STEPS_EXCEEDED
        if not materialize(store.nodes, store.keys, store.meta, store.ks, store.cdf, x):
            return NEED_NODES
        st, s, other, kind = next_after(store, work, x, t)
        if st != OK:
            return st
        if s < 0.0:
            return OK
        if kind != IN:
            v = state(store, work, memo, other, s)
            if v < 0:
                return -v
            if v == 0:
                L = ipar[I_TRACKLEN]
                if L >= cap:
                    return NEED_TRACK
                work.track_t[L] = s
                work.track_n[L] = other
                ipar[I_TRACKLEN] = L + 1
                x = other
        t = s


@njit(cache=True)
def query(store, work, memo, n, t):
    """state() with the step counter reset, for calls from Python."""
    work.ipar[I_STEPS] = 0
    return state(store, work, memo, n, t)


@njit(cache=True)
def drift_path(store, work, memo, out_t, out_v):
    """Change points of the root drift along the stored trajectory.

    Returns the number of records, or a negated status.
    """
    nodes, keys, meta, ks, cdf = store.nodes, store.keys, store.meta, store.ks, store.cdf
    ipar = work.ipar
    ipar[I_STEPS] = 0
    L = ipar[I_TRACKLEN]
    T = work.fpar[F_T]
    tau = work.fpar[F_TAU]
    model = ipar[I_MODEL]
    dyn = work.seeds[S_DYN]
    cap = out_t.shape[0]
    nb = np.empty(256, np.int64)
    occ = np.empty(256, np.int64)
    sign = np.empty(256, np.int64)
    tb = np.empty(4096, np.float64)
    kb = np.empty(4096, np.int64)
    ob = np.empty(4096, np.int64)
    sb = np.empty(4096, np.int64)
    lt = np.empty(16384, np.float64)
    lj = np.empty(16384, np.int64)
    cnt = 0
    for i in range(L):
        x = work.track_n[i]
        a = work.track_t[i]
        b = work.track_t[i + 1] if i + 1 < L else T
        if not materialize(nodes, keys, meta, ks, cdf, x):
            return -NEED_NODES
        m = 0
        if nodes[x, RAYDEPTH] == nodes[x, DEPTH]:
            toward = nodes[x, FIRST]
        else:
            toward = nodes[x, PARENT]
        if nodes[x, PARENT] >= 0:
            nb[m] = nodes[x, PARENT]
            m += 1
        for j in range(nodes[x, NCHILD]):
            nb[m] = nodes[x, FIRST] + j
            m += 1
        a_plus = np.nextafter(a, np.inf)
        psi_num = 0
        for j in range(m):
            sign[j] = -1 if nb[j] == toward else 1
            v = state(store, work, memo, nb[j], a_plus)
            if v < 0:
                return v
            occ[j] = v
            psi_num += (1 - v) * sign[j]
        if cnt >= cap:
            return -NEED_OUT
        out_t[cnt] = a
        out_v[cnt] = psi_num / m if model == CONSTANT else psi_num
        cnt += 1
        k0 = np.int64(a / tau)
        k1 = np.int64(b / tau)
        for k in range(k0, k1 + 1):
            ne = 0
            for j in range(m):
                w = nb[j]
                if not materialize(nodes, keys, meta, ks, cdf, w):
                    return -NEED_NODES
                c = node_slab_events(nodes, keys, meta, ks, cdf, w, k, model, dyn, tau,
                                     tb, kb, ob, sb)
                if c < 0:
                    return c
                for e in range(c):
                    if ob[e] != x and tb[e] > a and tb[e] < b:
                        if ne >= lt.shape[0]:
                            return -NEED_BUF
                        lt[ne] = tb[e]
                        lj[ne] = j
                        ne += 1
            if ne == 0:
                continue
            order = np.argsort(lt[:ne])
            for e in order:
                j = lj[e]
                v = state(store, work, memo, nb[j], np.nextafter(lt[e], np.inf))
                if v < 0:
                    return v
                if v != occ[j]:
                    psi_num += (v - occ[j]) * (-sign[j])
                    occ[j] = v
                    if cnt >= cap:
                        return -NEED_OUT
                    out_t[cnt] = lt[e]
                    out_v[cnt] = psi_num / m if model == CONSTANT else psi_num
                    cnt += 1
    return cnt


# ---------------------------------------------------------- sampling

@njit(cache=True)
def sample_seeds(seed, tilted, model, param, ks, cdf):
    """(tree seed, config seed, attempts) for one rooted sample.

    Tilted laws use rejection on the augmented tree's root degree.
    """
    cseed = hash2(seed, TAG_CONFIG)
    if not tilted:
        return hash2(seed, TAG_TREE), cseed, 1
    a = 0
    while True:
        sa = hash2(seed, TAG_ATTEMPT + U64(a))
        ts = hash2(sa, TAG_TREE)
        deg = offspring_draw(root_key(ts), ks, cdf) + 1
        if model == VARIABLE:
            acc = 2.0 / deg
        else:
            acc = (2.0 * param + 1.0) / (param * deg + 1.0)
        if unit(hash2(sa, TAG_ACCEPT)) < acc:
            return ts, cseed, a + 1
        a += 1


@njit(cache=True)
def batch_environment(store, work, memo, master, i0, i1, tilted, out):
    """Radius-one colored neighbourhood at time 0 and at the horizon.

    For replica i, out[i] = (deg at 0, occupied neighbours at 0,
    deg at T, occupied neighbours at T, jumps). Returns (next index, status).
    """
    nodes, keys, meta, ks, cdf = store.nodes, store.keys, store.meta, store.ks, store.cdf
    ipar = work.ipar
    model = ipar[I_MODEL]
    law = ipar[I_LAW]
    param = work.fpar[F_PARAM]
    T = work.fpar[F_T]
    for i in range(i0, i1):
        rs = replica_seed(master, i)
        ts, cs, _ = sample_seeds(rs, tilted, model, param, ks, cdf)
        reset_store(nodes, keys, meta, ts)
        work.seeds[S_CONF] = cs
        work.seeds[S_DYN] = dynamics_seed_of(rs)
        memo.clear()
        if not materialize(nodes, keys, meta, ks, cdf, 0):
            return i, NEED_NODES
        occ0 = 0
        first = nodes[0, FIRST]
        for j in range(nodes[0, NCHILD]):
            v = initial_occupancy(nodes, keys, meta, ks, cdf, first + j, law, param, 1, cs)
            if v < 0:
                return i, -v
            occ0 += v
        st = run_forward(store, work, memo)
        if st != OK:
            return i, st
        x = work.track_n[ipar[I_TRACKLEN] - 1]
        if not materialize(nodes, keys, meta, ks, cdf, x):
            return i, NEED_NODES
        occ1 = 0
        if nodes[x, PARENT] >= 0:
            v = state(store, work, memo, nodes[x, PARENT], T)
            if v < 0:
                return i, -v
            occ1 += v
        for j in range(nodes[x, NCHILD]):
            v = state(store, work, memo, nodes[x, FIRST] + j, T)
            if v < 0:
                return i, -v
            occ1 += v
        out[i, 0] = degree(nodes, 0)
        out[i, 1] = occ0
        out[i, 2] = degree(nodes, x)
        out[i, 3] = occ1
        out[i, 4] = ipar[I_TRACKLEN] - 1
    return i1, OK


@njit(cache=True)
def batch_finite(store, work, memo, master, i0, i1, bit_of, hist_conf, hist_pos):
    """Full configuration and tagged position at the horizon on a frozen tree."""
    n = store.meta[COUNT]
    T = work.fpar[F_T]
    for i in range(i0, i1):
        rs = replica_seed(master, i)
        work.seeds[S_CONF] = hash2(rs, TAG_CONFIG)
        work.seeds[S_DYN] = dynamics_seed_of(rs)
        memo.clear()
        st = run_forward(store, work, memo)
        if st != OK:
            return i, st
        idx = 0
        for v in range(n):
            s = state(store, work, memo, v, T)
            if s < 0:
                return i, -s
            idx |= s << bit_of[v]
        hist_conf[idx] += 1
        hist_pos[bit_of[work.track_n[work.ipar[I_TRACKLEN] - 1]]] += 1
    return i1, OK
