"""Discrete max-flow/min-cut, the packing-graph discretization of a
geometry, and the convergence experiment against continuum cut values.

The flow solver is the shortest-augmenting-path method (breadth-first
residual search), which terminates in polynomial time for arbitrary real
capacities and keeps conservation exact for integer or rational input.
"""

import csv
import math
import os
from collections import deque

import numpy as np


class FlowError(ValueError):
    pass


class FlowNetwork:
    """Directed capacitated graph with distinguished source and sink.

    Vertices are hashables; parallel edges merge by adding capacities.
    A directed path from source to sink must exist.
    """

    def __init__(self, edges, source, sink, positions=None):
        if source == sink:
            raise FlowError("source and sink must differ")
        self.capacity = {}
        self.adjacency = {}
        vertices = {source, sink}
        for u, v, c in edges:
            if c < 0:
                raise FlowError(f"negative capacity on ({u}, {v})")
            if u == v:
                continue
            vertices.add(u)
            vertices.add(v)
            self.capacity[(u, v)] = self.capacity.get((u, v), 0) + c
            self.adjacency.setdefault(u, set()).add(v)
            self.adjacency.setdefault(v, set()).add(u)
        self.vertices = vertices
        self.source = source
        self.sink = sink
        self.positions = positions or {}
        if not self._has_path():
            raise FlowError("no directed path from source to sink")

    def _has_path(self):
        seen = {self.source}
        queue = deque([self.source])
        while queue:
            u = queue.popleft()
            if u == self.sink:
                return True
            for v in self.adjacency.get(u, ()):
                if v not in seen and self.capacity.get((u, v), 0) > 0:
                    seen.add(v)
                    queue.append(v)
        return False

    @property
    def n_vertices(self):
        return len(self.vertices)

    def edge_list(self):
        return [(u, v, c) for (u, v), c in sorted(self.capacity.items(),
                                                  key=lambda kv: str(kv[0]))]


class Flow:
    """Edge flow values; conservation holds at every non-terminal vertex."""

    def __init__(self, network, values):
        self.network = network
        self.values = values  # (u, v) -> flow along the directed edge

    def value(self):
        out = sum(self.values.get((self.network.source, v), 0)
                  for v in self.network.adjacency.get(self.network.source, ()))
        back = sum(self.values.get((v, self.network.source), 0)
                   for v in self.network.adjacency.get(self.network.source, ()))
        return out - back

    def conservation_residual(self):
        res = {}
        for v in self.network.vertices:
            if v in (self.network.source, self.network.sink):
                continue
            net = 0
            for w in self.network.adjacency.get(v, ()):
                net += self.values.get((w, v), 0) - self.values.get((v, w), 0)
            res[v] = net
        return res

    def capacity_violation(self):
        worst = 0
        for e, f in self.values.items():
            c = self.network.capacity.get(e, 0)
            worst = max(worst, f - c, -f)
        return worst


class Cut:
    """Vertex partition with the induced source-to-sink edge set."""

    def __init__(self, network, source_side):
        self.network = network
        self.source_side = set(source_side)
        if network.source not in self.source_side or network.sink in self.source_side:
            raise FlowError("cut must separate source from sink")
        self.edges = [
            (u, v) for (u, v) in network.capacity
            if u in self.source_side and v not in self.source_side
        ]
        self.value = sum(network.capacity[e] for e in self.edges)

    def disconnects(self):
        removed = set(self.edges)
        seen = {self.network.source}
        queue = deque([self.network.source])
        while queue:
            u = queue.popleft()
            for v in self.network.adjacency.get(u, ()):
                if (u, v) in removed or (u, v) not in self.network.capacity:
                    continue
                if self.network.capacity[(u, v)] > 0 and v not in seen:
                    seen.add(v)
                    queue.append(v)
        return self.network.sink not in seen


def max_flow(network):
    """Shortest-augmenting-path maximal flow: returns (value, Flow).

    Works for int, Fraction and float capacities alike; conservation is
    exact whenever the capacities support exact arithmetic.
    """
    residual = {}
    for (u, v), c in network.capacity.items():
        residual[(u, v)] = residual.get((u, v), 0) + c
        residual.setdefault((v, u), 0)
    while True:
        parent = {network.source: None}
        queue = deque([network.source])
        found = False
        while queue and not found:
            u = queue.popleft()
            for v in network.adjacency.get(u, ()):
                if v not in parent and residual.get((u, v), 0) > 0:
                    parent[v] = u
                    if v == network.sink:
                        found = True
                        break
                    queue.append(v)
        if not found:
            break
        bottleneck = None
        v = network.sink
        while parent[v] is not None:
            u = parent[v]
            r = residual[(u, v)]
            bottleneck = r if bottleneck is None else min(bottleneck, r)
            v = u
        v = network.sink
        while parent[v] is not None:
            u = parent[v]
            residual[(u, v)] -= bottleneck
            residual[(v, u)] += bottleneck
            v = u
    values = {}
    for (u, v), c in network.capacity.items():
        sent = c - residual[(u, v)]
        if sent > 0:
            values[(u, v)] = sent
    flow = Flow(network, values)
    return flow.value(), flow


def min_cut(network):
    """Residual-reachability cut of a maximal flow: returns (value, Cut)."""
    value, flow = max_flow(network)
    residual = {}
    for (u, v), c in network.capacity.items():
        residual[(u, v)] = c - flow.values.get((u, v), 0) \
            + flow.values.get((v, u), 0)
    seen = {network.source}
    queue = deque([network.source])
    while queue:
        u = queue.popleft()
        for v in network.adjacency.get(u, ()):
            if v not in seen and residual.get((u, v), 0) > 0:
                seen.add(v)
                queue.append(v)
    cut = Cut(network, seen)
    return value, cut


def brute_force_min_cut(network, max_vertices=20):
    """Exact minimum over all source/sink partitions; guards at 20 vertices."""
    n = network.n_vertices
    if n > max_vertices:
        raise FlowError(f"brute force guard: {n} vertices > {max_vertices}")
    others = sorted(network.vertices - {network.source, network.sink}, key=str)
    best = None
    for mask in range(1 << len(others)):
        side = {network.source}
        for i, v in enumerate(others):
            if mask >> i & 1:
                side.add(v)
        total = sum(c for (u, v), c in network.capacity.items()
                    if u in side and v not in side)
        if best is None or total < best:
            best = total
    return best


# ---------------------------------------------------------------------------
# file format


def save_network(network, path):
    with open(path, "w") as fh:
        fh.write(f"source={network.source} sink={network.sink}\n")
        for u, v, c in network.edge_list():
            fh.write(f"{u} {v} {c!r}\n")


def load_network(path):
    """Edge-list text: header ``source=A sink=B`` then ``u v capacity``."""
    source = sink = None
    edges = []
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#")[0].strip()
            if not line:
                continue
            if line.startswith("source="):
                head = dict(tok.split("=") for tok in line.split())
                source, sink = head["source"], head["sink"]
                continue
            u, v, c = line.split()
            edges.append((u, v, float(c)))
    if source is None:
        raise FlowError("missing 'source=... sink=...' header")
    return FlowNetwork(edges, source, sink)


# ---------------------------------------------------------------------------
# packing graphs


def packing_points(sampler, eps1, rng, reject_streak=2000, polish=100000):
    """Greedy maximal packing: centers pairwise >= 2*eps1 apart.

    Random insertion runs until `reject_streak` consecutive rejections;
    jittered grid sweeps at decreasing spacing fill the remaining holes
    (descending while a level still inserts points), and a long randomized
    polish pass certifies maximality empirically (the probe invariant in
    the test suite re-checks it independently).
    """
    buf = np.empty((256, 2))
    count = 0

    def insertable(cand):
        if count == 0:
            return True
        return bool(sampler.distance_to_set(cand, buf[:count]).min()
                    >= 2 * eps1)

    def insert(cand):
        nonlocal buf, count
        if count == len(buf):
            buf = np.vstack([buf, np.empty_like(buf)])
        buf[count] = cand
        count += 1

    streak = 0
    while streak < reject_streak:
        cand = sampler.sample(rng, 1)[0]
        if insertable(cand):
            insert(cand)
            streak = 0
        else:
            streak += 1
    for h in (eps1, 0.5 * eps1, 0.25 * eps1, 0.125 * eps1):
        offset = rng.random(2)
        for cand in sampler.grid_points(h, offset):
            if insertable(cand):
                insert(cand)
    for cand in sampler.sample(rng, polish):
        if insertable(cand):
            insert(cand)
    return buf[:count].copy()


def packing_graph(sampler, eps0, eps1, theta=0.25, seed=0,
                  terminals=None):
    """Freedman-Headrick style discretization of a geometry.

    Vertices are the centers of a greedy maximal packing at scale eps1;
    an undirected unit-capacity edge joins centers whose distance lies in
    the annulus | |x-y| - eps0 | <= theta * eps0.  With ``terminals``
    naming two boundary components, all packing vertices within 2*eps1 of
    each component merge into a super-terminal : the resulting directed
    network is returned; otherwise the bare graph (points, edges).
    """
    if not (0 < eps1 < eps0):
        raise FlowError("need 0 < eps1 < eps0")
    if not (0 < theta < 1):
        raise FlowError("theta must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    pts = packing_points(sampler, eps1, rng)
    if len(pts) == 0:
        raise FlowError("empty packing")
    dist = sampler.pairwise(pts)
    lo, hi = eps0 * (1 - theta), eps0 * (1 + theta)
    pairs = [(i, j) for i in range(len(pts)) for j in range(i + 1, len(pts))
             if lo <= dist[i, j] <= hi]
    if terminals is None:
        return pts, pairs
    name0, name1 = terminals
    label = {}
    for i, p in enumerate(pts):
        bd = sampler.boundary_distances(p)
        if bd[name0] <= 2 * eps1:
            label[i] = "s0"
        elif bd[name1] <= 2 * eps1:
            label[i] = "s1"
        else:
            label[i] = i
    edges = []
    for i, j in pairs:
        a, b = label[i], label[j]
        if a == b:
            continue
        edges.append((a, b, 1))
        edges.append((b, a, 1))
    positions = {label[i]: pts[i] for i in range(len(pts))
                 if label[i] not in ("s0", "s1")}
    net = FlowNetwork(edges, "s0", "s1", positions=positions)
    return net, pts, pairs


def calibrate_kappa(eps0, eps1, theta=0.25, seed=0, height=1.0, n_seeds=1):
    """Per-scale normalization from a reference flat cylinder.

    The reference has unit circumference, so the raw min cut equals kappa
    itself; curved runs at the same scales divide by this constant.
    Averaging over seeds tames the min-cut sampling noise.
    """
    from .geometries import FlatCylinderSampler
    sampler = FlatCylinderSampler(height=height, circumference=1.0)
    vals = []
    for k in range(n_seeds):
        net, _, _ = packing_graph(sampler, eps0, eps1, theta,
                                  seed=seed + 7919 * k,
                                  terminals=("x_min", "x_max"))
        value, _ = max_flow(net)
        vals.append(float(value))
    return float(np.mean(vals))


def convergence_experiment(sampler, continuum_value, schedule, theta=0.25,
                           seed=0, terminals=("x_min", "x_max"),
                           kappa_height=1.0, workers=None,
                           n_ref=1, n_exp=1):
    """Normalized packing-graph cut/flow values along an (eps0, eps1) schedule.

    Each row builds the packing network, solves max flow = min cut, and
    normalizes by the reference-cylinder constant at the same scales;
    ``n_ref`` and ``n_exp`` average the reference and experiment sides over
    independent packings.  Returns a list of row dicts (CSV-ready).
    """
    if not schedule:
        raise FlowError("schedule is empty")
    if workers is None:
        workers = int(os.environ.get("HOMOCUT_THREADS", "1"))

    def run_row(args):
        idx, (eps0, eps1) = args
        kappa = calibrate_kappa(eps0, eps1, theta, seed=seed + 1000 + idx,
                                height=kappa_height, n_seeds=n_ref)
        cuts, flows, n_pts = [], [], 0
        for k in range(n_exp):
            net, pts, _ = packing_graph(sampler, eps0, eps1, theta,
                                        seed=seed + idx + 104729 * k,
                                        terminals=terminals)
            cut_value, _ = min_cut(net)
            flow_value, _ = max_flow(net)
            cuts.append(float(cut_value))
            flows.append(float(flow_value))
            n_pts = len(pts)
        cut_value = float(np.mean(cuts))
        flow_value = float(np.mean(flows))
        norm_cut = cut_value / kappa if kappa > 0 else float("nan")
        norm_flow = flow_value / kappa if kappa > 0 else float("nan")
        return {
            "eps0": eps0, "eps1": eps1,
            "cut": cut_value, "flow": flow_value,
            "normalized_cut": float(norm_cut),
            "normalized_flow": float(norm_flow),
            "kappa": float(kappa), "vertices": n_pts,
            "error": abs(norm_cut - continuum_value) / continuum_value
            if continuum_value else float("nan"),
        }

    tasks = list(enumerate(schedule))
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_row, tasks))
    else:
        rows = [run_row(t) for t in tasks]
    return rows


def write_experiment_csv(rows, path):
    fields = ["eps0", "eps1", "cut", "flow", "normalized_cut",
              "normalized_flow"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(fields)
        for row in rows:
            writer.writerow([repr(float(row[f])) for f in fields])


def random_unit_network(n_vertices, rng, edge_prob=0.4):
    """Seeded random unit-capacity network with a guaranteed s-t path."""
    assert n_vertices >= 2
    names = list(range(n_vertices))
    s, t = 0, n_vertices - 1
    edges = []
    for u in names:
        for v in names:
            if u != v and rng.random() < edge_prob:
                edges.append((u, v, 1))
    # guarantee a path along a random permutation
    mid = [v for v in names if v not in (s, t)]
    rng.shuffle(mid)
    chain = [s] + mid[:max(1, len(mid) // 2)] + [t]
    for a, b in zip(chain, chain[1:]):
        edges.append((a, b, 1))
    return FlowNetwork(edges, s, t)
