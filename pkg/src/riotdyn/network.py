"""Coupled dynamics on a node network.

Activity diffuses along a geographic adjacency V through a normalized graph
Laplacian, while tension receives a normalized averaging inflow along a
social adjacency C (not a Laplacian: the inflow is not balanced by an
outflow term).  Per node s:

    d(lam_s)/dt   = (eta/d_V(s)) sum_j v_sj (lam_j - lam_s)
                    - omega (lam_s - lambda_b) + r(alpha_s) G(lam_s)
    d(alpha_s)/dt = (eta_a/d_C(s)) sum_j c_sj alpha_j
                    - h(lam_s) alpha_s + theta alpha_b

with eta_a = params.eta_alpha or eta.  An optional multiplicative Brownian
noise sigma lam dX enters the activity equation only, stepped with
Euler-Maruyama.  Shocks are per-node tension jumps applied at exact times.

Spread analyses: per-node activation times, the contained/local/nonlocal
classification, the amplitude scan bracketing the two spreading thresholds,
and the two-center delayed-reignition experiment.
"""
from __future__ import annotations

import math
import warnings
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import BlowUpError
from .model import (ModelParams, peak_activity, self_reinforcement_arr,
                    tension_decay_rate, tension_decay_rate_arr,
                    transition_rate_arr)
from .shocks import ExplicitSchedule, Shock, ShockSchedule, realize

__all__ = [
    "Graph",
    "NetworkState",
    "NetworkTrajectory",
    "SpreadReport",
    "ThresholdScan",
    "DelayReport",
    "grid_graph",
    "graph_from_edge_lists",
    "network_rhs",
    "integrate_network",
    "activation_times",
    "classify_spread",
    "double_threshold_scan",
    "delay_experiment",
    "save_network_trajectory",
]

NEGATIVITY_CLAMP = 1e-12
ACTIVATION_FRACTION = 0.2   # default threshold_fraction for activation


@dataclass(frozen=True)
class Graph:
    """Node set with geographic adjacency V and social adjacency C.

    V must be symmetric 0/1 with zero diagonal; C is 0/1 with zero diagonal
    and need not be symmetric (c_sj = 1 means node s listens to node j).
    """

    n: int
    V: np.ndarray
    C: np.ndarray
    positions: np.ndarray | None = None

    def __post_init__(self) -> None:
        for name, m in (("V", self.V), ("C", self.C)):
            if m.shape != (self.n, self.n):
                raise ValueError(f"{name} must be ({self.n}, {self.n})")
            if not np.isin(m, (0, 1)).all():
                raise ValueError(f"{name} entries must be 0 or 1")
            if np.diagonal(m).any():
                raise ValueError(f"{name} must have a zero diagonal")
        if (self.V != self.V.T).any():
            raise ValueError("V must be symmetric")

    @property
    def degrees_geo(self) -> np.ndarray:
        return self.V.sum(axis=1)

    @property
    def degrees_social(self) -> np.ndarray:
        return self.C.sum(axis=1)

    def distances_from(self, node: int) -> np.ndarray:
        """BFS hop distances over V; unreachable nodes get +inf."""
        dist = np.full(self.n, np.inf)
        dist[node] = 0
        queue = deque([node])
        while queue:
            s = queue.popleft()
            for j in np.nonzero(self.V[s])[0]:
                if not np.isfinite(dist[j]):
                    dist[j] = dist[s] + 1
                    queue.append(int(j))
        return dist


@dataclass(frozen=True)
class NetworkState:
    """Per-node activity and tension vectors."""

    lam: np.ndarray
    alpha: np.ndarray

    def __post_init__(self) -> None:
        if self.lam.shape != self.alpha.shape:
            raise ValueError("lam and alpha must have matching shapes")
        if not (np.isfinite(self.lam).all() and np.isfinite(self.alpha).all()):
            raise ValueError("state entries must be finite")
        if (self.lam < 0).any() or (self.alpha < 0).any():
            raise ValueError("state entries must be nonnegative")


def grid_graph(rows: int, cols: int, social="copy_of_V",
               positions: bool = True) -> Graph:
    """Square grid of rows x cols nodes with 4-neighbor geographic edges.

    ``social`` selects the social adjacency:
      - "copy_of_V": C = V
      - ("hub", i): every node listens to node i; the hub itself listens to
        every other node so that no node is socially isolated
      - ("two_hubs", i, j): every node listens to both hubs; each hub
        listens to the other
      - an explicit 0/1 matrix

    Node ids are row-major: node = r * cols + c.
    """
    n = rows * cols
    if n < 2:
        raise ValueError("grid needs at least 2 nodes")
    V = np.zeros((n, n), dtype=np.int8)
    for r in range(rows):
        for c in range(cols):
            s = r * cols + c
            if c + 1 < cols:
                V[s, s + 1] = V[s + 1, s] = 1
            if r + 1 < rows:
                V[s, s + cols] = V[s + cols, s] = 1

    if isinstance(social, np.ndarray):
        C = social.astype(np.int8)
    elif social == "copy_of_V":
        C = V.copy()
    elif isinstance(social, (tuple, list)) and social[0] == "hub":
        hub = int(social[1])
        if not 0 <= hub < n:
            raise IndexError(f"hub {hub} out of range for {n} nodes")
        C = np.zeros((n, n), dtype=np.int8)
        C[:, hub] = 1
        C[hub, :] = 1
        C[hub, hub] = 0
    elif isinstance(social, (tuple, list)) and social[0] == "two_hubs":
        h1, h2 = int(social[1]), int(social[2])
        for h in (h1, h2):
            if not 0 <= h < n:
                raise IndexError(f"hub {h} out of range for {n} nodes")
        if h1 == h2:
            raise ValueError("the two hubs must be distinct")
        C = np.zeros((n, n), dtype=np.int8)
        C[:, h1] = 1
        C[:, h2] = 1
        np.fill_diagonal(C, 0)
    else:
        raise ValueError(f"unknown social spec {social!r}")

    pos = None
    if positions:
        pos = np.array([(r, c) for r in range(rows) for c in range(cols)],
                       dtype=float)
    return Graph(n, V, C, pos)


def graph_from_edge_lists(n: int, geo_edges, social_edges=None) -> Graph:
    """Build a graph from "i j" edge pairs; geographic edges are symmetrized,
    social edges are directed (s listens to j for a pair "s j")."""
    V = np.zeros((n, n), dtype=np.int8)
    for i, j in geo_edges:
        V[i, j] = V[j, i] = 1
    np.fill_diagonal(V, 0)
    if social_edges is None:
        C = V.copy()
    else:
        C = np.zeros((n, n), dtype=np.int8)
        for i, j in social_edges:
            C[i, j] = 1
        np.fill_diagonal(C, 0)
    return Graph(n, V, C)


def _read_edge_list(path) -> list[tuple[int, int]]:
    edges = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(
                    f"{path}:{lineno}: expected one 'i j' pair, got {line!r}")
            edges.append((int(parts[0]), int(parts[1])))
    return edges


def graph_from_edge_files(n: int, geo_path, social_path=None) -> Graph:
    """Load a graph from edge-list text files, one "i j" pair per line.

    Blank lines and '#' comments are ignored.  Without a social file the
    social adjacency copies the geographic one.
    """
    geo = _read_edge_list(geo_path)
    social = _read_edge_list(social_path) if social_path is not None else None
    return graph_from_edge_lists(n, geo, social)


def _validate_coupling(graph: Graph, params: ModelParams) -> None:
    # omega > eta guarantees eventual decay, but the bundled double-threshold
    # experiment runs exactly at omega == eta, so this is advisory here
    # (continuum runs still require kappa > 0 strictly).
    if params.eta > 0.0 and params.omega <= params.eta:
        warnings.warn(
            f"activity coupling eta={params.eta:.4g} is not dominated by the "
            f"decay omega={params.omega:.4g}; activity need not decay",
            stacklevel=3)
    if params.eta > 0.0 and (graph.degrees_geo < 1).any():
        bad = np.nonzero(graph.degrees_geo < 1)[0]
        raise ValueError(
            f"geographically isolated nodes {bad.tolist()} with activity "
            "coupling enabled")
    eta_a = params.eta if params.eta_alpha is None else params.eta_alpha
    if eta_a > 0.0 and (graph.degrees_social < 1).any():
        bad = np.nonzero(graph.degrees_social < 1)[0]
        raise ValueError(
            f"socially isolated nodes {bad.tolist()} with tension coupling "
            "enabled")


def network_rhs(state: NetworkState, graph: Graph,
                params: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """Per-node time derivatives of (activity, tension)."""
    lam, alpha = state.lam, state.alpha
    return _rhs_arrays(lam, alpha, graph, params)


def _rhs_arrays(lam, alpha, graph, params):
    dV = np.maximum(graph.degrees_geo, 1)
    dC = np.maximum(graph.degrees_social, 1)
    eta_a = params.eta if params.eta_alpha is None else params.eta_alpha
    lap = graph.V @ lam - graph.degrees_geo * lam
    dlam = ((params.eta / dV) * lap
            - params.omega * (lam - params.lambda_b)
            + transition_rate_arr(alpha, params)
            * self_reinforcement_arr(lam, params))
    dalpha = ((eta_a / dC) * (graph.C @ alpha)
              - tension_decay_rate_arr(lam, params) * alpha
              + params.theta * params.alpha_b)
    return dlam, dalpha


@dataclass(frozen=True)
class NetworkTrajectory:
    """Recorded (times, per-node activity, per-node tension) plus shock marks."""

    times: np.ndarray          # (T,)
    lam: np.ndarray            # (T, n)
    alpha: np.ndarray          # (T, n)
    shock_marks: np.ndarray
    params: ModelParams
    graph: Graph
    clamp_count: int = 0


def _grouped_node_events(schedule: ShockSchedule, horizon: float,
                         seed: int | None):
    """Realized events grouped by time: [(time, [(site, amplitude), ...])]."""
    grouped: list[tuple[float, list[tuple[int, float]]]] = []
    for s in realize(schedule, horizon, seed) if schedule is not None else []:
        if s.site is None:
            raise ValueError("network shocks need a node id site")
        if grouped and s.time == grouped[-1][0]:
            grouped[-1][1].append((int(s.site), s.amplitude))
        else:
            grouped.append((s.time, [(int(s.site), s.amplitude)]))
    return grouped


def integrate_network(graph: Graph,
                      params: ModelParams,
                      schedule: ShockSchedule = None,
                      initial: NetworkState | tuple[float, float] = (0.0, 0.0),
                      t_end: float = 50.0,
                      dt: float = 1e-3,
                      noise: str = "none",
                      noise_seed: int = 0,
                      seed: int | None = None,
                      record_stride: int = 1) -> NetworkTrajectory:
    """Integrate the network dynamics under a shock schedule.

    noise="none" steps the deterministic part with RK4; noise="brownian"
    uses Euler-Maruyama with the multiplicative increment
    sigma * lam * sqrt(dt) * xi, xi i.i.d. standard normal per node and
    step, drawn from a generator seeded with ``noise_seed`` (bitwise
    reproducible).  ``initial`` may be a NetworkState or a (lam0, alpha0)
    pair of scalars broadcast to all nodes.
    """
    if dt <= 0.0 or t_end <= 0.0:
        raise ValueError("dt and t_end must be > 0")
    if noise not in ("none", "brownian"):
        raise ValueError(f"noise must be none or brownian, got {noise!r}")
    _validate_coupling(graph, params)
    lam_star = peak_activity(params)
    eta_a = params.eta if params.eta_alpha is None else params.eta_alpha
    if (lam_star is not None and eta_a > 0.0
            and tension_decay_rate(lam_star, params) <= eta_a):
        warnings.warn(
            "tension decay at peak activity does not dominate the social "
            f"inflow (h(peak)={tension_decay_rate(lam_star, params):.4g} <= "
            f"eta_alpha={eta_a:.4g}); tension mass can grow on long runs",
            stacklevel=2)

    if isinstance(initial, NetworkState):
        lam = initial.lam.astype(float).copy()
        alpha = initial.alpha.astype(float).copy()
    else:
        lam0, alpha0 = initial
        lam = np.full(graph.n, float(lam0))
        alpha = np.full(graph.n, float(alpha0))

    rng = np.random.default_rng(noise_seed) if noise == "brownian" else None
    sigma = params.sigma

    def det_step_rk4(lam, alpha, h):
        d1l, d1a = _rhs_arrays(lam, alpha, graph, params)
        d2l, d2a = _rhs_arrays(lam + 0.5 * h * d1l, alpha + 0.5 * h * d1a,
                               graph, params)
        d3l, d3a = _rhs_arrays(lam + 0.5 * h * d2l, alpha + 0.5 * h * d2a,
                               graph, params)
        d4l, d4a = _rhs_arrays(lam + h * d3l, alpha + h * d3a, graph, params)
        return (lam + h * (d1l + 2 * d2l + 2 * d3l + d4l) / 6.0,
                alpha + h * (d1a + 2 * d2a + 2 * d3a + d4a) / 6.0)

    def em_step(lam, alpha, h):
        dl, da = _rhs_arrays(lam, alpha, graph, params)
        xi = rng.standard_normal(graph.n)
        return (lam + h * dl + sigma * lam * math.sqrt(h) * xi,
                alpha + h * da)

    step = em_step if noise == "brownian" else det_step_rk4

    grouped = _grouped_node_events(schedule, t_end, seed)
    times = [0.0]
    marks: list[int] = []
    gi = 0
    if grouped and grouped[0][0] <= 0.0:
        for site, amp in grouped[0][1]:
            alpha[site] += amp
        marks.append(0)
        gi = 1
    lams = [lam.copy()]
    alphas = [alpha.copy()]

    clamp_count = 0
    step_index = 0
    t_cur = 0.0
    boundaries = grouped[gi:] + [(t_end, None)]
    for t_b, jumps in boundaries:
        span = t_b - t_cur
        if span <= 0.0:
            if jumps:
                for site, amp in jumps:
                    alpha[site] += amp
                alphas[-1] = alpha.copy()
                marks.append(len(times) - 1)
            continue
        seg_start = t_cur
        n_steps = max(1, int(math.ceil(span / dt - 1e-9)))
        for k in range(1, n_steps + 1):
            t_next = t_b if k == n_steps else seg_start + k * dt
            lam, alpha = step(lam, alpha, t_next - t_cur)
            clamp_count += int((lam < -NEGATIVITY_CLAMP).sum()
                               + (alpha < -NEGATIVITY_CLAMP).sum())
            np.maximum(lam, 0.0, out=lam)
            np.maximum(alpha, 0.0, out=alpha)
            if not (np.isfinite(lam).all() and np.isfinite(alpha).all()):
                raise BlowUpError(t_next)
            t_cur = t_next
            step_index += 1
            if k == n_steps:
                if jumps:
                    for site, amp in jumps:
                        alpha[site] += amp
                times.append(t_cur)
                lams.append(lam.copy())
                alphas.append(alpha.copy())
                if jumps:
                    marks.append(len(times) - 1)
            elif step_index % record_stride == 0:
                times.append(t_cur)
                lams.append(lam.copy())
                alphas.append(alpha.copy())

    return NetworkTrajectory(np.asarray(times), np.asarray(lams),
                             np.asarray(alphas), np.asarray(marks, dtype=int),
                             params, graph, clamp_count)


def activation_times(traj: NetworkTrajectory,
                     threshold_fraction: float = ACTIVATION_FRACTION
                     ) -> np.ndarray:
    """First time each node's activity reaches threshold_fraction * peak;
    +inf for nodes that never do."""
    if not 0.0 < threshold_fraction < 1.0:
        raise ValueError("threshold_fraction must be in (0, 1)")
    lam_star = peak_activity(traj.params)
    if lam_star is None:
        raise ValueError("parameters admit no excited state")
    thr = threshold_fraction * lam_star
    hit = traj.lam >= thr
    out = np.full(traj.graph.n, np.inf)
    any_hit = hit.any(axis=0)
    out[any_hit] = traj.times[hit.argmax(axis=0)[any_hit]]
    return out


@dataclass(frozen=True)
class SpreadReport:
    """Classification of how activation spread from a seed node."""

    regime: str                      # "contained" | "local" | "nonlocal"
    activation: np.ndarray           # per-node first-passage times
    distances: np.ndarray            # V-graph hop distances from the seed
    n_activated: int
    jump_nodes: tuple[int, ...]      # activated without an earlier V-neighbor
    order_violations: int            # farther node active earlier than closer


def classify_spread(traj: NetworkTrajectory, graph: Graph, seed_node: int,
                    threshold_fraction: float = ACTIVATION_FRACTION,
                    tol: float | None = None) -> SpreadReport:
    """Classify a run as contained, locally spreading, or nonlocal.

    contained: only the seed's immediate geographic neighborhood (hop
    distance <= 1) ever activates, including the no-activation case.
    local: the activated set grows like contiguous geographic balls:
    activation time is nondecreasing in hop distance (up to ``tol``) and
    every activated node has a V-neighbor that activated no later than
    itself + tol.
    nonlocal: some node jumps (activates with no previously-activated
    V-neighbor) or activates ``tol`` or more before a strictly closer node.

    ``tol`` defaults to twice the recorded sample interval.
    """
    act = activation_times(traj, threshold_fraction)
    if tol is None:
        diffs = np.diff(traj.times)
        tol = 2.0 * float(np.median(diffs)) if diffs.size else 0.0
    dist = graph.distances_from(seed_node)
    activated = np.isfinite(act)
    n_act = int(activated.sum())

    if n_act == 0 or bool((dist[activated] <= 1).all()):
        return SpreadReport("contained", act, dist, n_act, (), 0)

    jump_nodes = []
    for s in np.nonzero(activated)[0]:
        if s == seed_node:
            continue
        nbrs = np.nonzero(graph.V[s])[0]
        if nbrs.size == 0 or act[nbrs].min() > act[s] + tol:
            jump_nodes.append(int(s))

    order_violations = 0
    finite_d = np.unique(dist[activated & np.isfinite(dist)]).astype(int)
    max_closer = -np.inf
    for d in sorted(finite_d):
        ring = activated & (dist == d)
        if d > 0 and np.isfinite(max_closer):
            order_violations += int((act[ring] <= max_closer - tol).sum())
        max_closer = max(max_closer, act[ring].max())

    if jump_nodes or order_violations:
        return SpreadReport("nonlocal", act, dist, n_act, tuple(jump_nodes),
                            order_violations)
    return SpreadReport("local", act, dist, n_act, (), 0)


_REGIME_ORDER = {"contained": 0, "local": 1, "nonlocal": 2}


@dataclass(frozen=True)
class ThresholdScan:
    """Brackets for the two spreading thresholds along an amplitude grid.

    ``spread_bracket`` bounds the contained-to-spreading amplitude,
    ``nonlocal_bracket`` the local-to-nonlocal one; either is None when the
    grid never crossed that boundary.  The thresholds are reported as
    brackets, never as sharp values.
    """

    amplitudes: tuple[float, ...]
    regimes: tuple[str, ...]
    spread_bracket: tuple[float, float] | None
    nonlocal_bracket: tuple[float, float] | None
    monotonic: bool
    flags: tuple[str, ...]


def double_threshold_scan(graph: Graph, params: ModelParams, A_grid,
                          seed_node: int,
                          initial=(0.01, 0.0),
                          t_end: float = 50.0,
                          dt: float = 1e-3,
                          threshold_fraction: float = ACTIVATION_FRACTION,
                          record_stride: int = 20,
                          refine_rounds: int = 3) -> ThresholdScan:
    """Classify the spread for each amplitude and bracket the two thresholds.

    Grid brackets are narrowed by ``refine_rounds`` rounds of bisection
    (each round one extra run).  Classification-order violations along the
    grid are reported, not asserted.
    """
    A_grid = [float(a) for a in A_grid]
    if any(b <= a for a, b in zip(A_grid, A_grid[1:])):
        raise ValueError("A_grid must be strictly increasing")

    def classify(amplitude: float) -> str:
        schedule = ExplicitSchedule([Shock(0.0, amplitude, seed_node)])
        traj = integrate_network(graph, params, schedule, initial, t_end,
                                 dt=dt, record_stride=record_stride)
        return classify_spread(traj, graph, seed_node,
                               threshold_fraction).regime

    regimes = [classify(a) for a in A_grid]
    levels = [_REGIME_ORDER[r] for r in regimes]
    monotonic = all(b >= a for a, b in zip(levels, levels[1:]))
    flags = []
    if not monotonic:
        flags.append("classification not monotone along the grid")

    def bracket(level: int) -> tuple[float, float] | None:
        below = [i for i, l in enumerate(levels) if l < level]
        at_or_above = [i for i, l in enumerate(levels) if l >= level]
        if not below or not at_or_above:
            return None
        lo_i = max(i for i in below if any(j > i for j in at_or_above))
        hi_i = min(j for j in at_or_above if j > lo_i)
        lo, hi = A_grid[lo_i], A_grid[hi_i]
        for _ in range(refine_rounds):
            mid = 0.5 * (lo + hi)
            if _REGIME_ORDER[classify(mid)] >= level:
                hi = mid
            else:
                lo = mid
        return lo, hi

    spread_bracket = bracket(1)
    nonlocal_bracket = bracket(2)
    if all(r == "contained" for r in regimes):
        flags.append("no spreading observed")
    elif spread_bracket is None or nonlocal_bracket is None:
        flags.append("fewer than three regimes observed; partial result")
    return ThresholdScan(tuple(A_grid), tuple(regimes), spread_bracket,
                         nonlocal_bracket, monotonic, tuple(flags))


@dataclass(frozen=True)
class DelayReport:
    """One-shock versus two-shock comparison on a two-hub network."""

    activated_single: int
    activated_double: int
    total_activity_single: float         # integral of sum-lambda, full run
    total_activity_double: float
    post_t2_activity_single: float       # same integral restricted to t > t2
    post_t2_activity_double: float
    dominates_after_t2: bool


def delay_experiment(graph: Graph, params: ModelParams,
                     a1: float, p_node: int,
                     a2: float, m_node: int, t2: float,
                     initial=(0.01, 0.0),
                     t_end: float = 60.0,
                     dt: float = 1e-3,
                     threshold_fraction: float = ACTIVATION_FRACTION,
                     record_stride: int = 20) -> DelayReport:
    """Compare a single event at node P with the same event plus a later,
    weaker event at node M.

    Reports activated-node counts and the time integral of total activity
    for both scenarios; with a2=0 the scenarios are identical by
    construction.
    """
    single = ExplicitSchedule([Shock(0.0, a1, p_node)])
    shocks = [Shock(0.0, a1, p_node)]
    if a2 > 0.0:
        shocks.append(Shock(t2, a2, m_node))
    double = ExplicitSchedule(shocks)

    def run(schedule):
        traj = integrate_network(graph, params, schedule, initial, t_end,
                                 dt=dt, record_stride=record_stride)
        act = activation_times(traj, threshold_fraction)
        total = traj.lam.sum(axis=1)
        full = float(np.trapezoid(total, traj.times))
        post_mask = traj.times >= t2
        post = float(np.trapezoid(total[post_mask], traj.times[post_mask]))
        return int(np.isfinite(act).sum()), full, post

    n1, full1, post1 = run(single)
    n2, full2, post2 = run(double)
    return DelayReport(n1, n2, full1, full2, post1, post2, post2 > post1)


NETWORK_COLUMNS = ("t", "node", "lambda", "alpha")


def save_network_trajectory(traj: NetworkTrajectory, path) -> None:
    """Write (t, node, lambda, alpha) rows, nodes fastest-varying."""
    with open(path, "w") as fh:
        fh.write(" ".join(NETWORK_COLUMNS) + "\n")
        for i, t in enumerate(traj.times):
            for s in range(traj.graph.n):
                fh.write(f"{t:.17g} {s:d} {traj.lam[i, s]:.17g} "
                         f"{traj.alpha[i, s]:.17g}\n")
