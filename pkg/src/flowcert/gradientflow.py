"""Finite-dimensional gradient flows with a power-type gradient inequality.

Each problem bundles a scalar field F on R^n, its analytic gradient, the
critical value F(0), and a decay exponent tau in (1/3, 1) such that

    |F(x) - F(0)|^(1+tau) <= |grad F(x)|^2

holds on a stated ball around the origin.  Flow lines of x' = -grad F(x) then
lose F-value at a controlled rate, and a segment whose endpoints are close to
the critical level has total length bounded by an explicit function of the
endpoint level gaps alone.  The three-way classification (F stays above the
critical value, stays below, or crosses it once) follows the structure of that
length bound.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from . import sequences
from .errors import (
    EnvelopeNotApplicableError,
    InvalidInputError,
    NumericError,
    ParameterError,
    PreconditionError,
    StiffnessError,
)

SMALL_BALL = 0.25  # endpoint ball for the effective length bound


@dataclass(frozen=True, eq=False)
class GradientProblem:
    """Scalar field with analytic gradient and a stated decay exponent.

    F and grad accept a point of shape (dim,) or a batch of shape (m, dim);
    batching follows from writing both with axis=-1 reductions.
    """

    name: str
    dim: int
    F: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    tau: float
    ball_radius: float

    def __post_init__(self):
        if not (1.0 / 3.0 < self.tau <= 1.0):
            raise ParameterError(f"need tau in (1/3, 1], got {self.tau}")
        if self.ball_radius <= 0:
            raise ParameterError("ball_radius must be positive")
        g0 = np.asarray(self.grad(np.zeros(self.dim)), dtype=float)
        if np.max(np.abs(g0)) > 1e-14:
            raise InvalidInputError(f"{self.name}: gradient at the origin is not zero")

    @property
    def F0(self) -> float:
        return float(self.F(np.zeros(self.dim)))

    def decay_inequality_spot_check(self, rng: np.random.Generator, n_samples: int = 10_000,
                                    slack: float = 1e-12) -> bool:
        """Sample the ball and test |F - F0|^(1+tau) <= |grad F|^2 pointwise."""
        pts = rng.uniform(-1.0, 1.0, size=(n_samples, self.dim))
        pts *= self.ball_radius * rng.random(n_samples)[:, None] / np.maximum(
            np.linalg.norm(pts, axis=1)[:, None], 1e-300)
        lhs = np.abs(np.asarray(self.F(pts), dtype=float) - self.F0) ** (1.0 + self.tau)
        rhs = np.sum(np.asarray(self.grad(pts), dtype=float) ** 2, axis=-1)
        return bool(np.all(lhs <= rhs + slack))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time-stamped polyline of a flow line with F-values and chordal increments.

    `dense` (when present) evaluates the underlying interpolant at arbitrary
    times; manually built trajectories fall back to linear interpolation.
    """

    times: np.ndarray
    points: np.ndarray  # shape (len(times), dim)
    F_values: np.ndarray
    step_lengths: np.ndarray
    problem: GradientProblem
    exited_ball: bool = False
    dense: Callable | None = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        p = np.atleast_2d(np.asarray(self.points, dtype=float))
        if p.shape[0] != t.size or np.asarray(self.F_values).size != t.size:
            raise InvalidInputError("times, points and F_values must align")
        if np.any(np.diff(t) <= 0) and t.size > 1:
            raise InvalidInputError("times must be strictly increasing")

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def length(self) -> float:
        return float(np.sum(self.step_lengths))

    def at(self, t) -> np.ndarray:
        """Point(s) on the trajectory at time(s) t, shape (dim,) or (m, dim)."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        if self.dense is not None:
            out = np.asarray(self.dense(t_arr), dtype=float).T
        else:
            out = np.column_stack([
                np.interp(t_arr, self.times, self.points[:, d])
                for d in range(self.points.shape[1])
            ])
        return out[0] if np.isscalar(t) or np.ndim(t) == 0 else out

    def F_at(self, t) -> np.ndarray:
        return np.asarray(self.problem.F(self.at(t)), dtype=float)


def integrate(problem: GradientProblem, x0, t_end: float, tol: float = 1e-9) -> Trajectory:
    """Integrate x' = -grad F(x) from x0 with adaptive error control.

    Local error per step is held at tol (relative) and the run stops early,
    with a flag, if the flow exits the problem's validity ball.  The recorded
    F-values are checked to be non-increasing up to 10*tol.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0.size != problem.dim:
        raise InvalidInputError(f"x0 has dimension {x0.size}, problem wants {problem.dim}")
    if np.linalg.norm(x0) > problem.ball_radius:
        raise PreconditionError("x0 lies outside the validity ball")
    if tol <= 0 or t_end <= 0:
        raise ParameterError("need t_end > 0 and tol > 0")

    def rhs(t, x):
        return -np.asarray(problem.grad(x), dtype=float)

    def exit_ball(t, x):
        return float(np.dot(x, x) - problem.ball_radius**2)

    exit_ball.terminal = True
    exit_ball.direction = 1.0

    sol = solve_ivp(rhs, (0.0, float(t_end)), x0, method="RK45", rtol=tol,
                    atol=tol * 1e-3, dense_output=True, events=exit_ball)
    if sol.status == -1:
        raise StiffnessError(f"integration stalled at t={sol.t[-1]}: {sol.message}",
                             last_state=(float(sol.t[-1]), sol.y[:, -1].copy()))
    pts = sol.y.T.copy()
    F_vals = np.asarray(problem.F(pts), dtype=float)
    if np.max(np.diff(F_vals), initial=-np.inf) > 10.0 * tol:
        raise NumericError("F increased beyond tolerance along the flow; tighten tol")
    steps = np.linalg.norm(np.diff(pts, axis=0), axis=1) if len(pts) > 1 else np.zeros(0)
    return Trajectory(
        times=sol.t.copy(),
        points=pts,
        F_values=F_vals,
        step_lengths=steps,
        problem=problem,
        exited_ball=sol.status == 1,
        dense=sol.sol,
    )


def sqrt_segment_sum(traj: Trajectory, check_tol: float = 1e-8, max_marks: int = 200_000) -> float:
    """Sum of sqrt(F-drop) over unit-time segments starting at the trajectory head.

    Also verifies the per-segment chord bound: the straight-line distance
    covered in one unit of time is at most sqrt of the F-drop over it (up to
    check_tol).  Trajectories shorter than one time unit yield 0 with a warning.
    The number of marks is capped at max_marks; the sum is then a partial one
    (every term is nonnegative, so it is still a lower bound and is
    non-decreasing in the number of marks).
    """
    span = traj.t_end - traj.t_start
    if span < 1.0:
        warnings.warn("trajectory spans less than one time unit; empty sum", stacklevel=2)
        return 0.0
    n_marks = min(int(math.floor(span)), max_marks - 1)
    marks = traj.t_start + np.arange(n_marks + 1, dtype=float)
    pts = traj.at(marks)
    F_vals = np.asarray(traj.problem.F(pts), dtype=float)
    drops = F_vals[:-1] - F_vals[1:]
    if np.min(drops, initial=0.0) < -10.0 * check_tol:
        raise NumericError("F increased across a unit mark; data is not a descent flow")
    drops = np.maximum(drops, 0.0)
    chords = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    slack = chords - np.sqrt(drops)
    if np.max(slack, initial=0.0) > check_tol:
        raise NumericError(
            f"unit-segment chord exceeds sqrt(F-drop) by {np.max(slack):.3e}; "
            "integration tolerance too loose for this check")
    return float(np.sum(np.sqrt(drops)))


def decay_envelope_check(traj: Trajectory, tau: float | None = None, tol: float = 1e-10) -> bool:
    """Check f(t) <= (f(t0)^(-tau) + tau (t - t0))^(-1/tau) + tol at every stored sample,
    where f = F - F0 must be strictly positive along the trajectory."""
    tau = traj.problem.tau if tau is None else tau
    if not 0.0 < tau <= 1.0:
        raise ParameterError(f"need tau in (0, 1], got {tau}")
    f = np.asarray(traj.F_values, dtype=float) - traj.problem.F0
    if np.any(f <= 0.0):
        raise EnvelopeNotApplicableError("F - F0 is not strictly positive along the trajectory")
    t_rel = traj.times - traj.t_start
    envelope = (f[0] ** (-tau) + tau * t_rel) ** (-1.0 / tau)
    return bool(np.all(f <= envelope + tol))


@dataclass(frozen=True)
class EffectiveBoundReport:
    """Outcome of the endpoint-controlled length bound along one flow segment."""

    case_tag: str  # above | below | crossing
    length: float
    sqrt_sum: float
    bound_value: float
    holds: bool
    c: float
    alpha: float
    delta_F1: float
    delta_F2: float
    crossing_time: float | None = None
    n_marks: int = 0
    marks_truncated: bool = False

    def to_json_dict(self) -> dict:
        return {
            "case_tag": self.case_tag,
            "length": float(self.length),
            "sqrt_sum": float(self.sqrt_sum),
            "bound_value": float(self.bound_value),
            "holds": bool(self.holds),
            "c": float(self.c),
            "alpha": float(self.alpha),
            "delta_F1": float(self.delta_F1),
            "delta_F2": float(self.delta_F2),
            "crossing_time": None if self.crossing_time is None else float(self.crossing_time),
            "n_marks": int(self.n_marks),
            "marks_truncated": bool(self.marks_truncated),
        }


def _bisect_crossing(traj: Trajectory, F0: float, t_lo: float, t_hi: float,
                     tol: float = 1e-12) -> float:
    """Locate the time where F along the trajectory crosses F0 (F is monotone).

    Converges to the absolute tolerance or, for long horizons, to the float
    spacing of the bracket, whichever is coarser.
    """
    g_lo = float(traj.F_at(t_lo)) - F0
    g_hi = float(traj.F_at(t_hi)) - F0
    if g_lo < 0 or g_hi > 0:
        raise NumericError("crossing bracket does not straddle the critical level")
    while t_hi - t_lo > tol:
        mid = 0.5 * (t_lo + t_hi)
        if mid <= t_lo or mid >= t_hi:  # bracket already at float resolution
            break
        if float(traj.F_at(mid)) - F0 > 0.0:
            t_lo = mid
        else:
            t_hi = mid
    return 0.5 * (t_lo + t_hi)


def _mark_values(traj: Trajectory, t_from: float, t_to: float, anchor: str,
                 max_marks: int) -> tuple[np.ndarray, bool]:
    """F-values at unit marks in [t_from, t_to], anchored at one end.

    anchor='start': marks t_from, t_from+1, ...; anchor='end': marks ...,
    t_to-1, t_to.  Returned in increasing time order.
    """
    span = t_to - t_from
    n = min(int(math.floor(span)), max_marks - 1)
    truncated = n < int(math.floor(span))
    if anchor == "start":
        marks = t_from + np.arange(n + 1, dtype=float)
    else:
        marks = t_to - np.arange(n, -1, -1, dtype=float)
    return np.asarray(traj.problem.F(traj.at(marks)), dtype=float), truncated


def _certify_part(values: np.ndarray, tau: float, zero_tol: float) -> tuple[float, bool]:
    """Check the unit-mark drop law on one signed part and return its sqrt-drop sum.

    `values` must be positive non-increasing after dropping entries at or below
    zero_tol.  Returns (sqrt_drop_sum, hypothesis_ok); an empty or singleton
    part certifies trivially.
    """
    vals = values[values > zero_tol]
    if vals.size < 2:
        return 0.0, True
    # minimum.accumulate only irons out sub-tolerance integrator noise; real
    # descent data is already non-increasing.
    seq = sequences.MonotoneSequence(np.minimum.accumulate(vals))
    report = sequences.check_hypothesis(seq, C=1.0, tau=tau)
    return report.sqrt_diff_sum, report.ok


def effective_bound(problem: GradientProblem, traj: Trajectory, epsilon: float,
                    max_marks: int = 20_000, zero_tol: float = 1e-300) -> EffectiveBoundReport:
    """Endpoint-controlled bound for the length of a flow segment.

    Both endpoints must lie in the ball of radius 1/4 with |F - F0| < epsilon.
    The segment is classified by where F sits relative to the critical value
    F0: `above` (never below at the far end), `below` (already at or below at
    the start), or `crossing` (splits at the bisected crossing time).  The
    unit-mark F-sequences of each piece feed the discrete summability
    certificate with C = 1 and the problem's tau, and the report states whether

        length <= c |F(t1) - F0|^alpha + c |F0 - F(t2)|^alpha

    and the same for the sqrt-drop sum, with (c, alpha) the certificate pair.
    """
    if not 0.0 < epsilon < 1.0:
        raise ParameterError(f"need epsilon in (0, 1), got {epsilon}")
    if not 1.0 / 3.0 < problem.tau < 1.0:
        raise ParameterError("certificate needs tau in (1/3, 1)")
    F0 = problem.F0
    p1, p2 = traj.points[0], traj.points[-1]
    if np.linalg.norm(p1) > SMALL_BALL or np.linalg.norm(p2) > SMALL_BALL:
        raise PreconditionError("segment endpoints must lie in the ball of radius 1/4")
    dF1 = float(traj.F_values[0]) - F0
    dF2 = float(traj.F_values[-1]) - F0
    if abs(dF1) >= epsilon or abs(dF2) >= epsilon:
        raise PreconditionError("endpoint |F - F0| must be below epsilon")

    consts = sequences.constructive_bound(1.0, problem.tau)
    bound_value = consts.cap(abs(dF1)) + consts.cap(abs(dF2))

    t1, t2 = traj.t_start, traj.t_end
    crossing_time = None
    truncated = False
    if dF2 >= 0.0:
        case_tag = "above"
        vals, truncated = _mark_values(traj, t1, t2, "start", max_marks)
        sum_pos, ok_pos = _certify_part(vals - F0, problem.tau, zero_tol)
        sum_neg, ok_neg = 0.0, True
        parts = [vals]
    elif dF1 <= 0.0:
        case_tag = "below"
        vals, truncated = _mark_values(traj, t1, t2, "end", max_marks)
        sum_neg, ok_neg = _certify_part((F0 - vals)[::-1], problem.tau, zero_tol)
        sum_pos, ok_pos = 0.0, True
        parts = [vals]
    else:
        case_tag = "crossing"
        crossing_time = _bisect_crossing(traj, F0, t1, t2)
        vals_pos, trunc1 = _mark_values(traj, t1, crossing_time, "start", max_marks)
        vals_neg, trunc2 = _mark_values(traj, crossing_time, t2, "end", max_marks)
        truncated = trunc1 or trunc2
        sum_pos, ok_pos = _certify_part(vals_pos - F0, problem.tau, zero_tol)
        sum_neg, ok_neg = _certify_part((F0 - vals_neg)[::-1], problem.tau, zero_tol)
        parts = [vals_pos, vals_neg]

    # Leftover sub-unit segments at interval ends still obey the per-segment
    # chord bound, so their sqrt-drops join the reported sum: the last mark to
    # t2 (above), t1 to the first mark (below), or the two pieces flanking the
    # crossing time, whose F-value is the critical level itself.
    if case_tag == "above":
        partial_sum = math.sqrt(max(float(vals[-1]) - float(traj.F_values[-1]), 0.0))
    elif case_tag == "below":
        partial_sum = math.sqrt(max(float(traj.F_values[0]) - float(vals[0]), 0.0))
    else:
        partial_sum = math.sqrt(max(float(vals_pos[-1]) - F0, 0.0))
        partial_sum += math.sqrt(max(F0 - float(vals_neg[0]), 0.0))

    sqrt_sum = sum_pos + sum_neg + partial_sum
    hypothesis_ok = ok_pos and ok_neg
    length = traj.length
    holds = hypothesis_ok and length <= bound_value + 1e-12 and sqrt_sum <= bound_value + 1e-12
    n_marks = sum(v.size for v in parts)
    return EffectiveBoundReport(
        case_tag=case_tag,
        length=length,
        sqrt_sum=sqrt_sum,
        bound_value=bound_value,
        holds=holds,
        c=consts.c,
        alpha=consts.alpha,
        delta_F1=dF1,
        delta_F2=dF2,
        crossing_time=crossing_time,
        n_marks=n_marks,
        marks_truncated=truncated,
    )


def _radial_power(name: str, dim: int, p: int, ball_radius: float = 2.0) -> GradientProblem:
    """|x|^(2p), written as (|x|^2)^p; tau = 1 - 1/p makes the decay inequality
    hold with constant 4 p^2 >= 1 on any ball."""

    def F(x):
        x = np.asarray(x, dtype=float)
        return np.sum(x * x, axis=-1) ** p

    def grad(x):
        x = np.asarray(x, dtype=float)
        s = np.sum(x * x, axis=-1)
        return 2.0 * p * s[..., None] ** (p - 1) * x

    return GradientProblem(name=name, dim=dim, F=F, grad=grad,
                           tau=1.0 - 1.0 / p, ball_radius=ball_radius)


def _quartic2d() -> GradientProblem:
    def F(x):
        x = np.asarray(x, dtype=float)
        return np.sum(x**4, axis=-1)

    def grad(x):
        return 4.0 * np.asarray(x, dtype=float) ** 3

    return GradientProblem(name="quartic2d", dim=2, F=F, grad=grad, tau=0.5, ball_radius=2.0)


def _aniso2d() -> GradientProblem:
    # x^4 + y^6: the sextic factor forces the weaker exponent tau = 2/3.
    def F(x):
        x = np.asarray(x, dtype=float)
        return x[..., 0] ** 4 + x[..., 1] ** 6

    def grad(x):
        x = np.asarray(x, dtype=float)
        return np.stack([4.0 * x[..., 0] ** 3, 6.0 * x[..., 1] ** 5], axis=-1)

    return GradientProblem(name="aniso2d", dim=2, F=F, grad=grad, tau=2.0 / 3.0, ball_radius=1.0)


def _saddle2d() -> GradientProblem:
    # x^4 - y^4 dips below the critical value along generic flow lines, which
    # exercises the below/crossing branches of the classifier.
    def F(x):
        x = np.asarray(x, dtype=float)
        return x[..., 0] ** 4 - x[..., 1] ** 4

    def grad(x):
        x = np.asarray(x, dtype=float)
        return np.stack([4.0 * x[..., 0] ** 3, -4.0 * x[..., 1] ** 3], axis=-1)

    return GradientProblem(name="saddle2d", dim=2, F=F, grad=grad, tau=0.5, ball_radius=1.0)


def builtin_problems() -> list[GradientProblem]:
    """The bundled test problems, each with a verified decay exponent."""
    return [
        _radial_power("quartic1d", dim=1, p=2),
        _radial_power("sextic1d", dim=1, p=3),
        _quartic2d(),
        _aniso2d(),
        _saddle2d(),
    ]


def problem_by_name(name: str) -> GradientProblem:
    for prob in builtin_problems():
        if prob.name == name:
            return prob
    known = ", ".join(p.name for p in builtin_problems())
    raise InvalidInputError(f"unknown problem '{name}' (known: {known})")
