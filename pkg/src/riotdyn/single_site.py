"""Single-site dynamics under shocks, and the analyses built on them.

The integrator advances the coupled activity/tension reactions with a fixed
step (classical RK4 by default), stops exactly at every shock time, applies
the tension jump there, and resumes.  A shock at t=0 is applied after the
initial condition is set, so the recorded state at t=0 already includes it.
Recorded tension therefore jumps only at marked indices while activity stays
continuous across shocks.

Analyses: relaxation detection, longest near-peak activity window, the
sustained-vs-decaying classification under repeated forcing, and the
hysteresis sweep over the base tension.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import BlowUpError
from .model import (ModelParams, SiteState, activity_rate, fixed_points,
                    peak_activity, tension_nullcline, tension_rate,
                    transition_rate)
from .shocks import ShockSchedule, realize

__all__ = [
    "Trajectory",
    "ForcedRegimeResult",
    "HysteresisResult",
    "integrate_site",
    "check_relaxation",
    "max_activity_window",
    "classify_forced_regime",
    "hysteresis_sweep",
    "save_trajectory",
    "load_trajectory",
]

NEGATIVITY_CLAMP = 1e-12   # roundoff below this magnitude is clamped silently
CLAMP_WARN_COUNT = 1_000_000
# Sustained-regime floor and transient handling for forced runs.
SUSTAINED_FLOOR_BASE_FACTOR = 10.0
SUSTAINED_FLOOR_PEAK_FRACTION = 0.05
TRANSIENT_FRACTION = 0.5
MIN_FORCING_EVENTS = 50


@dataclass(frozen=True)
class Trajectory:
    """Time-stamped single-site states plus shock bookkeeping.

    ``shock_marks`` are indices into ``times`` at which a tension jump was
    applied (the stored state there is post-jump).
    """

    times: np.ndarray
    lam: np.ndarray
    alpha: np.ndarray
    shock_marks: np.ndarray
    params: ModelParams
    clamp_count: int = 0

    def state(self, i: int) -> SiteState:
        return SiteState(float(self.lam[i]), float(self.alpha[i]))


def _make_rhs(params: ModelParams):
    """Scalar RHS closure; constants hoisted for the default forms."""
    if params.g_fn is None and params.r_fn is None and params.h_fn is None:
        omega, z0, beta, a = params.omega, params.z0, params.beta, params.a
        theta, p, lam1 = params.theta, params.p, params.lambda1
        lam_b = params.lambda_b
        source = params.theta * params.alpha_b
        power = params.decay_form == "power"
        exp = math.exp

        def rhs(lam: float, alpha: float) -> tuple[float, float]:
            x = -beta * (alpha - a)
            if x > 700.0:
                r = 0.0
            elif x < -700.0:
                r = 1.0
            else:
                r = 1.0 / (1.0 + exp(x))
            if power:
                h = theta * (1.0 + lam / lam1) ** (-p)
            else:
                h = theta * exp(-p * lam)
            return (-omega * (lam - lam_b) + r * lam * (z0 - lam),
                    source - alpha * h)

        return rhs
    return lambda lam, alpha: (activity_rate(lam, alpha, params),
                               tension_rate(lam, alpha, params))


def _grouped_events(schedule: ShockSchedule, horizon: float,
                    seed: int | None) -> list[tuple[float, float]]:
    """Realized (time, total amplitude) pairs; simultaneous shocks add up."""
    grouped: list[tuple[float, float]] = []
    for s in realize(schedule, horizon, seed) if schedule is not None else []:
        if grouped and s.time == grouped[-1][0]:
            grouped[-1] = (s.time, grouped[-1][1] + s.amplitude)
        else:
            grouped.append((s.time, s.amplitude))
    return grouped


def integrate_site(params: ModelParams,
                   schedule: ShockSchedule = None,
                   initial: SiteState = SiteState(0.0, 0.0),
                   t_end: float = 50.0,
                   dt: float = 1e-3,
                   method: str = "rk4",
                   seed: int | None = None,
                   record_stride: int = 1,
                   min_activity: float | None = None) -> Trajectory:
    """Integrate one site from ``initial`` to ``t_end`` under a schedule.

    Fixed-step integration with exact stopping at every shock time (a
    partial final step per segment); the tension jump is applied there and
    the post-jump state recorded.  Negative roundoff is clamped to zero (and
    counted); a non-finite state aborts with :class:`BlowUpError`.

    ``min_activity``, when set, re-injects ``lam = max(lam, min_activity)``
    after every step: a stand-in for the arbitrarily small perturbation that
    kicks the system off the unstable rest state at high tension.

    Parameters
    ----------
    record_stride:
        Keep every n-th step in the trajectory (shock times and the final
        time are always kept).
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if t_end <= 0.0:
        raise ValueError(f"t_end must be > 0, got {t_end}")
    if method not in ("rk4", "euler"):
        raise ValueError(f"method must be rk4 or euler, got {method!r}")
    if record_stride < 1:
        raise ValueError("record_stride must be >= 1")

    rhs = _make_rhs(params)
    if method == "rk4":
        def step(lam, alpha, h):
            d1l, d1a = rhs(lam, alpha)
            d2l, d2a = rhs(lam + 0.5 * h * d1l, alpha + 0.5 * h * d1a)
            d3l, d3a = rhs(lam + 0.5 * h * d2l, alpha + 0.5 * h * d2a)
            d4l, d4a = rhs(lam + h * d3l, alpha + h * d3a)
            return (lam + h * (d1l + 2.0 * d2l + 2.0 * d3l + d4l) / 6.0,
                    alpha + h * (d1a + 2.0 * d2a + 2.0 * d3a + d4a) / 6.0)
    else:
        def step(lam, alpha, h):
            dl, da = rhs(lam, alpha)
            return lam + h * dl, alpha + h * da

    grouped = _grouped_events(schedule, t_end, seed)
    lam, alpha = float(initial.lam), float(initial.alpha)
    if min_activity is not None and lam < min_activity:
        lam = min_activity

    times = [0.0]
    lams = [lam]
    alphas = [alpha]
    marks: list[int] = []
    gi = 0
    if grouped and grouped[0][0] <= 0.0:
        alpha += grouped[0][1]
        alphas[0] = alpha
        marks.append(0)
        gi = 1

    clamp_count = 0
    step_index = 0
    t_cur = 0.0
    boundaries = grouped[gi:] + [(t_end, 0.0)]
    for seg_index, (t_b, amp) in enumerate(boundaries):
        is_shock = seg_index < len(boundaries) - 1
        seg_start = t_cur
        span = t_b - seg_start
        if span <= 0.0:
            # shock coincides with the previous boundary time
            if is_shock:
                alpha += amp
                alphas[-1] = alpha
                marks.append(len(times) - 1)
            continue
        n_steps = max(1, int(math.ceil(span / dt - 1e-9)))
        for k in range(1, n_steps + 1):
            t_next = t_b if k == n_steps else seg_start + k * dt
            try:
                lam, alpha = step(lam, alpha, t_next - t_cur)
            except (ValueError, OverflowError) as exc:
                raise BlowUpError(t_next, f"state left the finite domain at "
                                  f"t={t_next:.6g}: {exc}") from exc
            if lam < 0.0:
                if lam < -NEGATIVITY_CLAMP:
                    clamp_count += 1
                lam = 0.0
            if alpha < 0.0:
                if alpha < -NEGATIVITY_CLAMP:
                    clamp_count += 1
                alpha = 0.0
            if min_activity is not None and lam < min_activity:
                lam = min_activity
            if not (math.isfinite(lam) and math.isfinite(alpha)):
                raise BlowUpError(t_next)
            t_cur = t_next
            step_index += 1
            if k == n_steps:
                if is_shock:
                    alpha += amp
                times.append(t_cur)
                lams.append(lam)
                alphas.append(alpha)
                if is_shock:
                    marks.append(len(times) - 1)
            elif step_index % record_stride == 0:
                times.append(t_cur)
                lams.append(lam)
                alphas.append(alpha)

    if clamp_count > CLAMP_WARN_COUNT:
        warnings.warn(
            f"integration clamped {clamp_count} negative values; results may "
            "be dominated by roundoff", stacklevel=2)
    return Trajectory(np.asarray(times), np.asarray(lams), np.asarray(alphas),
                      np.asarray(marks, dtype=int), params, clamp_count)


def _relaxation_floors(params: ModelParams) -> tuple[float, float]:
    """The rest point the system should settle to: the lowest-activity
    stable fixed point, or the base levels when none is classified stable."""
    stable = [fp for fp in fixed_points(params) if fp.stability == "stable"]
    if stable:
        fp = min(stable, key=lambda f: f.state.lam)
        return fp.state.lam, fp.state.alpha
    lam_floor = params.lambda_b
    return lam_floor, tension_nullcline(lam_floor, params)


def check_relaxation(traj: Trajectory, eps: float) -> float | None:
    """Earliest time after the last shock from which the trajectory stays
    within ``eps`` of the rest state in both components.

    Returns that time, or ``None`` when the run never settles.
    """
    lam_floor, alpha_floor = _relaxation_floors(traj.params)
    ok = ((traj.lam <= lam_floor + eps)
          & (traj.alpha <= alpha_floor + eps))
    if traj.shock_marks.size:
        start = int(traj.shock_marks[-1])
    else:
        start = 0
    # suffix scan: last index where the condition fails
    bad = np.nonzero(~ok)[0]
    first_good = 0 if bad.size == 0 else int(bad[-1]) + 1
    if first_good >= traj.times.size:
        return None
    return float(traj.times[max(first_good, start)])


def max_activity_window(traj: Trajectory,
                        delta: float) -> tuple[float, float] | None:
    """Longest contiguous interval with activity >= peak - ``delta``.

    Returns (t0, t1), or ``None`` when the level is never reached.
    """
    lam_star = peak_activity(traj.params)
    if lam_star is None:
        raise ValueError("parameters admit no excited state")
    mask = traj.lam >= lam_star - delta
    if not mask.any():
        return None
    best = (0.0, None)
    run_start = None
    padded = np.concatenate([mask, [False]])
    for i, flag in enumerate(padded):
        if flag and run_start is None:
            run_start = i
        elif not flag and run_start is not None:
            t0, t1 = traj.times[run_start], traj.times[i - 1]
            if t1 - t0 >= best[0]:
                best = (t1 - t0, (float(t0), float(t1)))
            run_start = None
    return best[1]


@dataclass(frozen=True)
class ForcedRegimeResult:
    """Outcome of a long run under periodic or Poisson forcing.

    ``liminf_estimate``/``limsup_estimate`` are the min/max of activity over
    the post-transient half of the run; asymptotic statements about the true
    liminf/limsup are out of reach at finite horizon.
    """

    regime: str  # "sustained" | "decaying"
    liminf_estimate: float
    limsup_estimate: float
    floor: float
    near_peak: bool
    n_events: int


def classify_forced_regime(params: ModelParams,
                           schedule: ShockSchedule,
                           horizon: float,
                           delta: float,
                           initial: SiteState = SiteState(0.01, 0.0),
                           dt: float = 1e-3,
                           seed: int | None = None,
                           record_stride: int = 10) -> ForcedRegimeResult:
    """Classify repeated forcing as sustained or decaying.

    The first half of the run is discarded as transient.  The regime is
    sustained when the minimum activity over the second half stays above
    max(10 lambda_b, 0.05 peak); that minimum is reported as the liminf
    estimate.  ``near_peak`` additionally reports whether it stays within
    ``delta`` of the peak activity.
    """
    from .shocks import PeriodicSchedule, PoissonSchedule

    if not isinstance(schedule, (PeriodicSchedule, PoissonSchedule)):
        raise ValueError("forced-regime classification needs a periodic or "
                         "poisson schedule")
    n_events = len(realize(schedule, horizon, seed))
    if n_events < MIN_FORCING_EVENTS:
        raise ValueError(
            f"horizon {horizon} covers only {n_events} events; "
            f"need >= {MIN_FORCING_EVENTS}")
    lam_star = peak_activity(params)
    if lam_star is None:
        raise ValueError("parameters admit no excited state")
    traj = integrate_site(params, schedule, initial, horizon, dt=dt,
                          seed=seed, record_stride=record_stride)
    tail = traj.times >= horizon * TRANSIENT_FRACTION
    lam_tail = traj.lam[tail]
    floor = max(SUSTAINED_FLOOR_BASE_FACTOR * params.lambda_b,
                SUSTAINED_FLOOR_PEAK_FRACTION * lam_star)
    liminf = float(lam_tail.min())
    limsup = float(lam_tail.max())
    regime = "sustained" if liminf >= floor else "decaying"
    return ForcedRegimeResult(regime, liminf, limsup, floor,
                              liminf >= lam_star - delta, n_events)


@dataclass(frozen=True)
class HysteresisResult:
    """Fold structure of the fixed points along a base-tension sweep.

    ``alpha_b1`` is where the high-activity stable point appears,
    ``alpha_b2`` where the low-activity one disappears; ``None`` when the
    corresponding transition was not bracketed by the grid.
    """

    grid: tuple[float, ...]
    counts: tuple[int, ...]
    fold: bool
    alpha_b1: float | None
    alpha_b2: float | None
    message: str


def _n_points(params: ModelParams, alpha_b: float) -> int:
    return len(fixed_points(replace(params, alpha_b=alpha_b)))


def _refine_transition(params: ModelParams, lo: float, hi: float,
                       tol: float = 1e-6) -> float:
    """Bisect the boundary of the three-intersection region in alpha_b."""
    lo_multi = _n_points(params, lo) >= 3
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if (_n_points(params, mid) >= 3) == lo_multi:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def hysteresis_sweep(params: ModelParams,
                     alpha_b_grid) -> HysteresisResult:
    """Sweep the base tension and locate the bistable fold, if any.

    Runs the fixed-point solver per grid value; the two thresholds are
    bracketed at grid resolution and refined by bisection to 1e-6.
    """
    grid = [float(v) for v in alpha_b_grid]
    if len(grid) < 2:
        raise ValueError("alpha_b grid needs at least two points to bracket"
                         " a fold")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("alpha_b grid must be strictly increasing")
    counts = [_n_points(params, v) for v in grid]
    multi = [c >= 3 for c in counts]
    if not any(multi):
        return HysteresisResult(tuple(grid), tuple(counts), False, None,
                                None, "no fold")
    first = multi.index(True)
    last = len(multi) - 1 - multi[::-1].index(True)
    alpha_b1 = (_refine_transition(params, grid[first - 1], grid[first])
                if first > 0 else None)
    alpha_b2 = (_refine_transition(params, grid[last], grid[last + 1])
                if last + 1 < len(grid) else None)
    message = "fold"
    if alpha_b1 is None or alpha_b2 is None:
        message = "fold partially bracketed by grid"
    return HysteresisResult(tuple(grid), tuple(counts), True, alpha_b1,
                            alpha_b2, message)


TRAJECTORY_COLUMNS = ("t", "lambda", "alpha", "shock_flag")


def save_trajectory(traj: Trajectory, path) -> None:
    """Write columnar text: header row then (t, lambda, alpha, shock_flag)."""
    flags = np.zeros(traj.times.size, dtype=int)
    flags[traj.shock_marks] = 1
    with open(path, "w") as fh:
        fh.write(" ".join(TRAJECTORY_COLUMNS) + "\n")
        for t, lam, alpha, flag in zip(traj.times, traj.lam, traj.alpha, flags):
            fh.write(f"{t:.17g} {lam:.17g} {alpha:.17g} {flag:d}\n")


def load_trajectory(path, params: ModelParams) -> Trajectory:
    """Read a trajectory written by :func:`save_trajectory`."""
    data = np.loadtxt(path, skiprows=1, ndmin=2)
    marks = np.nonzero(data[:, 3] > 0.5)[0]
    return Trajectory(data[:, 0], data[:, 1], data[:, 2], marks, params)
