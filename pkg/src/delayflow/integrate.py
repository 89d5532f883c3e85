"""Stiff integration of the singularly perturbed gradient flow.

The flow eps * du/dt = -grad F(t, u) collapses onto the trivial equilibrium
at rate lambda_1(t)/eps, so for small eps the trajectory norm passes far
below the smallest representable double (at eps = 1e-4 it dips under
1e-500).  Cartesian state is therefore hopeless for the decay phase; the
solver's native chart is log-polar,

    u = exp(l) * v,   |v| = 1,
    l' = -<v, G> / eps,
    v' = -(G - <v, G> v) / eps,   G(t, l, v) = exp(-l) * grad F(t, exp(l) v),

which turns exponential decay into drift of l that an implicit one-step
method tracks with large steps.  Once l is far below the round-off floor
of the nonlinearity the field is evaluated through the linearization
G = A(t) v, avoiding overflow of exp(-l).

The stepper is TR-BDF2: one trapezoidal substage and one BDF2 substage per
step, A- and L-stable, second order, with an embedded third-order error
estimate filtered through the stage matrix.  Both substages Newton-solve
with the analytic Hessian.  Dense output is cubic Hermite per step and
event times are located on it by bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import (BlowUpError, DomainError, EvaluationError, NotFoundError,
                     NumericalError, StiffFailureError)
from .models import EnergyModel
from .quadrature import adaptive_simpson, composite_simpson

# TR-BDF2 tableau, gamma = 2 - sqrt(2).  Stage weights give second order;
# the hatted weights satisfy the third-order conditions and only feed the
# error estimate.
_SQ2 = math.sqrt(2.0)
GAMMA = 2.0 - _SQ2
_D = 1.0 - _SQ2 / 2.0          # diagonal weight of both implicit stages
_C1 = (_SQ2 + 1.0) / 2.0       # z2 = C1*z1 - C2*y + D*h*f(z2)
_C2 = (_SQ2 - 1.0) / 2.0
_B = np.array([_SQ2 / 4.0, _SQ2 / 4.0, _D])
_BH2 = 1.0 / (6.0 * GAMMA * (1.0 - GAMMA))
_BH3 = 0.5 - GAMMA * _BH2
_BH = np.array([1.0 - _BH2 - _BH3, _BH2, _BH3])
_DHAT = _BH - _B

_DEEP_LOG = -350.0  # below this, evaluate the field through A(t) only


@dataclass(frozen=True)
class EventSpec:
    """Threshold crossing to detect along a trajectory.

    kind "norm" watches |u(t)|, kind "coord" watches a single component.
    direction +1 detects upward crossings, -1 downward, 0 both.  A terminal
    event truncates the run at the crossing; relax_after multiplies both
    tolerances by 100 once the event first fires (the post-hitting phase
    does not need decay-grade accuracy).
    """

    kind: str
    threshold: float
    index: int = 0
    direction: int = 1
    terminal: bool = False
    relax_after: bool = False
    name: str = ""

    def label(self) -> str:
        if self.name:
            return self.name
        tag = "norm" if self.kind == "norm" else f"u[{self.index}]"
        return f"{tag}@{self.threshold:g}"


@dataclass(frozen=True)
class EventRecord:
    name: str
    time: float
    state: np.ndarray
    log_radius: float


@dataclass(frozen=True)
class SolveOptions:
    rtol: float = 1e-8
    atol: float = 1e-10
    max_step: float | None = None       # default span / 20
    min_step: float | None = None       # default 1e-15 * span
    first_step: float | None = None
    fixed_step: float | None = None     # disables adaptivity (order tests)
    newton_tol: float = 0.03
    newton_maxiter: int = 12
    max_steps: int = 500_000
    dense: bool = True
    coordinates: str = "auto"           # auto | cartesian | log-polar
    events: tuple[EventSpec, ...] = ()


# ---------------------------------------------------------------------------
# Charts


class _CartesianChart:
    """y = u; the plain gradient flow."""

    names = ("cartesian",)

    def __init__(self, model: EnergyModel, eps: float,
                 t_frozen: float | None = None):
        self.model = model
        self.eps = eps
        self.t_frozen = t_frozen
        self.dim = model.n

    def _time(self, t: float) -> float:
        return self.t_frozen if self.t_frozen is not None else t

    def rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        return -self.model.gradient(self._time(t), y) / self.eps

    def jac(self, t: float, y: np.ndarray) -> np.ndarray:
        return -self.model.hessian(self._time(t), y) / self.eps

    def state(self, y: np.ndarray) -> np.ndarray:
        return y.copy()

    def log_radius(self, y: np.ndarray) -> float:
        r = float(np.linalg.norm(y))
        return math.log(r) if r > 0.0 else -math.inf

    def direction(self, y: np.ndarray) -> np.ndarray:
        r = float(np.linalg.norm(y))
        return y / r if r > 0.0 else np.zeros_like(y)

    def renormalize(self, y: np.ndarray) -> tuple[np.ndarray, bool]:
        return y, False

    def event_value(self, spec: EventSpec, y: np.ndarray) -> float:
        if spec.kind == "norm":
            return float(np.linalg.norm(y)) - spec.threshold
        return float(y[spec.index]) - spec.threshold

    def guard(self, t: float, y: np.ndarray) -> None:
        if float(np.linalg.norm(y)) > 1e8:
            raise BlowUpError(f"state norm exceeded 1e8 at t={t:g}",
                              escape_time=t)


class _LogPolarChart:
    """y = (l, v) with u = exp(l) v; |v| is renormalized every step."""

    names = ("log-polar",)

    def __init__(self, model: EnergyModel, eps: float,
                 t_frozen: float | None = None):
        self.model = model
        self.eps = eps
        self.t_frozen = t_frozen
        self.dim = model.n + 1

    def _time(self, t: float) -> float:
        return self.t_frozen if self.t_frozen is not None else t

    def _field(self, t: float, y: np.ndarray):
        """Scaled gradient G and Hessian H at exp(l) v; linearized when deep."""
        tm = self._time(t)
        l, v = y[0], y[1:]
        if l > 100.0:
            # a runaway Newton trial, not a physical state; fail the stage
            raise EvaluationError(f"log-radius {l:.3g} out of range", t=t)
        if l < _DEEP_LOG:
            h = self.model.stiffness(tm)
            return h @ v, h
        x = math.exp(l) * v
        g = math.exp(-l) * self.model.gradient(tm, x)
        h = self.model.hessian(tm, x)
        return g, h

    def rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        v = y[1:]
        g, _ = self._field(t, y)
        gv = float(v @ g)
        out = np.empty(self.dim)
        out[0] = -gv / self.eps
        out[1:] = -(g - gv * v) / self.eps
        return out

    def jac(self, t: float, y: np.ndarray) -> np.ndarray:
        v = y[1:]
        g, h = self._field(t, y)
        n = self.model.n
        hv = h @ v
        dg_dl = hv - g                     # dG/dl
        gv = float(v @ g)
        j = np.zeros((self.dim, self.dim))
        j[0, 0] = -float(v @ dg_dl) / self.eps
        j[0, 1:] = -(g + hv) / self.eps
        j[1:, 0] = -(dg_dl - float(v @ dg_dl) * v) / self.eps
        j[1:, 1:] = -(h - np.outer(v, g + hv) - gv * np.eye(n)) / self.eps
        return j

    def state(self, y: np.ndarray) -> np.ndarray:
        l, v = y[0], y[1:]
        nv = float(np.linalg.norm(v))
        if nv == 0.0:
            return np.zeros(self.model.n)
        r = math.exp(l + math.log(nv)) if l + math.log(nv) > -745.0 else 0.0
        return r * (v / nv)

    def log_radius(self, y: np.ndarray) -> float:
        nv = float(np.linalg.norm(y[1:]))
        return y[0] + (math.log(nv) if nv > 0.0 else -math.inf)

    def direction(self, y: np.ndarray) -> np.ndarray:
        v = y[1:]
        nv = float(np.linalg.norm(v))
        return v / nv if nv > 0.0 else v.copy()

    def renormalize(self, y: np.ndarray) -> tuple[np.ndarray, bool]:
        v = y[1:]
        nv = float(np.linalg.norm(v))
        if nv == 0.0 or not math.isfinite(nv):
            raise NumericalError("direction vector degenerated")
        out = y.copy()
        out[0] += math.log(nv)
        out[1:] = v / nv
        return out, True

    def event_value(self, spec: EventSpec, y: np.ndarray) -> float:
        if spec.kind == "norm":
            if spec.threshold <= 0.0:
                raise DomainError("norm events need a positive threshold")
            return self.log_radius(y) - math.log(spec.threshold)
        l, v = y[0], y[1:]
        comp = math.exp(l) * v[spec.index] if l > -745.0 else 0.0
        return comp - spec.threshold

    def guard(self, t: float, y: np.ndarray) -> None:
        if y[0] > 50.0:
            raise BlowUpError(f"log-radius exceeded 50 at t={t:g}",
                              escape_time=t)


# ---------------------------------------------------------------------------
# Trajectory container


def _hermite(t0: float, h: float, y0, y1, f0, f1, t: float) -> np.ndarray:
    s = (t - t0) / h
    s2, s3 = s * s, s * s * s
    return ((2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * f0
            + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * h * f1)


@dataclass
class Trajectory:
    """Accepted steps, dense segments, events and solver diagnostics."""

    model: EnergyModel
    eps: float
    chart: str
    t_frozen: float | None
    times: np.ndarray                    # (k,)
    states: np.ndarray                   # (k, n) reconstructed u
    log_radius: np.ndarray               # (k,) ln|u|
    directions: np.ndarray               # (k, n) u/|u|
    events: list[EventRecord]
    stats: dict
    step_sizes: np.ndarray
    error_estimates: np.ndarray
    newton_iterations: np.ndarray
    _segments: list | None = field(default=None, repr=False)
    _chart_obj: object | None = field(default=None, repr=False)

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1].copy()

    def _segment_at(self, t: float):
        if self._segments is None:
            raise NumericalError("trajectory was recorded without dense output")
        if not (self.t0 - 1e-12 <= t <= self.t_end + 1e-12):
            raise DomainError(f"time {t} outside [{self.t0}, {self.t_end}]")
        t = min(max(t, self.t0), self.t_end)
        starts = self._seg_starts
        j = int(np.searchsorted(starts, t, side="right")) - 1
        j = min(max(j, 0), len(self._segments) - 1)
        return self._segments[j]

    @property
    def _seg_starts(self) -> np.ndarray:
        return np.array([seg[0] for seg in self._segments])

    def _raw_at(self, t: float) -> np.ndarray:
        t0, h, y0, y1, f0, f1 = self._segment_at(t)
        if h == 0.0:
            return y0.copy()
        return _hermite(t0, h, y0, y1, f0, f1, t)

    def state_at(self, t: float) -> np.ndarray:
        return self._chart_obj.state(self._raw_at(t))

    def log_radius_at(self, t: float) -> float:
        return self._chart_obj.log_radius(self._raw_at(t))

    def direction_at(self, t: float) -> np.ndarray:
        return self._chart_obj.direction(self._raw_at(t))

    def sample(self, ts) -> np.ndarray:
        return np.array([self.state_at(t) for t in np.atleast_1d(ts)])

    def first_event(self, name: str) -> EventRecord | None:
        for ev in self.events:
            if ev.name == name:
                return ev
        return None


# ---------------------------------------------------------------------------
# The stepper


def _wrms(x: np.ndarray, w: np.ndarray) -> float:
    return float(np.sqrt(np.mean((x / w) ** 2)))


class _Stepper:
    def __init__(self, chart, t0: float, t1: float, y0: np.ndarray,
                 opts: SolveOptions):
        if t1 <= t0:
            raise DomainError(f"empty integration span [{t0}, {t1}]")
        self.chart = chart
        self.t0, self.t1 = float(t0), float(t1)
        self.span = self.t1 - self.t0
        self.opts = opts
        self.rtol = opts.rtol
        self.atol = opts.atol
        self.max_step = opts.max_step if opts.max_step is not None else self.span / 20.0
        self.min_step = opts.min_step if opts.min_step is not None else 1e-15 * self.span
        self.y = np.asarray(y0, dtype=float).copy()
        self.t = self.t0
        self.events = list(opts.events)
        self.relaxed = [False] * len(self.events)
        self.records: list[EventRecord] = []
        self.stats = {"accepted": 0, "rejected": 0, "newton_failures": 0,
                      "rhs_evals": 0, "jac_evals": 0}
        self.times = [self.t]
        self.ys = [self.y.copy()]
        self.segments: list = []
        self.h_hist: list[float] = []
        self.err_hist: list[float] = []
        self.newton_hist: list[int] = []
        self.f = self._rhs(self.t, self.y)

    def _rhs(self, t, y):
        self.stats["rhs_evals"] += 1
        return self.chart.rhs(t, y)

    def _jac(self, t, y):
        self.stats["jac_evals"] += 1
        return self.chart.jac(t, y)

    def _weights(self, *ys) -> np.ndarray:
        ref = np.max(np.abs(np.stack(ys)), axis=0)
        return self.atol + self.rtol * ref

    def _initial_step(self) -> float:
        if self.opts.first_step is not None:
            return min(self.opts.first_step, self.max_step)
        w = self._weights(self.y)
        scale = _wrms(self.f, w)
        h0 = 0.01 / scale if scale > 0.0 else self.max_step
        return float(min(max(h0, self.min_step), self.max_step))

    def _newton(self, t_stage: float, const: np.ndarray, z0: np.ndarray,
                dh: float, m_mat: np.ndarray, w: np.ndarray):
        """Solve z = const + dh*f(t_stage, z); returns (z, f(z), iters) or None."""
        z = z0.copy()
        prev = math.inf
        for it in range(1, self.opts.newton_maxiter + 1):
            try:
                fz = self._rhs(t_stage, z)
            except EvaluationError:
                return None
            r = z - dh * fz - const
            try:
                delta = np.linalg.solve(m_mat, -r)
            except np.linalg.LinAlgError:
                return None
            if not np.all(np.isfinite(delta)):
                return None
            z = z + delta
            nd = _wrms(delta, w)
            if nd <= self.opts.newton_tol:
                try:
                    return z, self._rhs(t_stage, z), it
                except EvaluationError:
                    return None
            if it >= 3 and nd > 2.0 * prev:
                return None
            prev = nd
        return None

    def _attempt(self, h: float):
        """One TR-BDF2 step of size h from (t, y); None on Newton failure."""
        t, y, f = self.t, self.y, self.f
        dh = _D * h
        try:
            j = self._jac(t, y)
        except EvaluationError:
            return None
        m_mat = np.eye(len(y)) - dh * j
        w = self._weights(y)

        t_gamma = t + GAMMA * h
        const1 = y + dh * f
        sol1 = self._newton(t_gamma, const1, y + GAMMA * h * f, dh, m_mat, w)
        if sol1 is None:
            return None
        z1, f1, it1 = sol1

        const2 = _C1 * z1 - _C2 * y
        sol2 = self._newton(t + h, const2, const2 + dh * f1, dh, m_mat, w)
        if sol2 is None:
            return None
        z2, f2, it2 = sol2

        est_raw = h * (_DHAT[0] * f + _DHAT[1] * f1 + _DHAT[2] * f2)
        try:
            est = np.linalg.solve(m_mat, est_raw)
        except np.linalg.LinAlgError:
            return None
        if not (np.all(np.isfinite(est)) and np.all(np.isfinite(z2))):
            return None
        err = _wrms(est, self._weights(y, z2))
        return z2, f2, err, it1 + it2

    def _locate_event(self, spec: EventSpec, seg, g0: float, g1: float) -> float:
        t0, h, y0, y1, f0, f1 = seg

        def g(t: float) -> float:
            return self.chart.event_value(spec, _hermite(t0, h, y0, y1, f0, f1, t))

        lo, hi, glo = t0, t0 + h, g0
        for _ in range(200):
            if hi - lo <= 1e-10 * self.span:
                break
            mid = 0.5 * (lo + hi)
            gm = g(mid)
            if gm == 0.0:
                return mid
            if (glo < 0.0) == (gm < 0.0):
                lo, glo = mid, gm
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def _handle_events(self, seg) -> tuple[float, np.ndarray] | None:
        """Record crossings on the accepted segment; return truncation point
        (time, raw state) if a terminal event fired."""
        t0, h, y0, y1, f0, f1 = seg
        hits: list[tuple[float, int]] = []
        for i, spec in enumerate(self.events):
            g0 = self.chart.event_value(spec, y0)
            g1 = self.chart.event_value(spec, y1)
            up = g0 < 0.0 <= g1
            down = g0 > 0.0 >= g1
            fired = (up and spec.direction >= 0) or (down and spec.direction <= 0)
            if spec.direction == 0:
                fired = up or down
            if fired:
                hits.append((self._locate_event(spec, seg, g0, g1), i))
        hits.sort()
        for t_e, i in hits:
            spec = self.events[i]
            y_e = _hermite(t0, h, y0, y1, f0, f1, t_e)
            self.records.append(EventRecord(
                name=spec.label(), time=t_e,
                state=self.chart.state(y_e),
                log_radius=self.chart.log_radius(y_e)))
            if spec.relax_after and not self.relaxed[i]:
                self.relaxed[i] = True
                self.rtol *= 100.0
                self.atol *= 100.0
            if spec.terminal:
                return t_e, y_e
        return None

    def run(self) -> tuple:
        h = self.opts.fixed_step or self._initial_step()
        fixed = self.opts.fixed_step is not None
        while self.t < self.t1 - 1e-14 * self.span:
            if self.stats["accepted"] + self.stats["rejected"] > self.opts.max_steps:
                raise NumericalError(
                    f"step budget {self.opts.max_steps} exhausted at t={self.t:g}")
            h = min(h, self.t1 - self.t)
            result = self._attempt(h)
            if result is None:
                self.stats["newton_failures"] += 1
                h *= 0.5
                if h < self.min_step:
                    raise StiffFailureError(
                        f"Newton failed at t={self.t:g} with step {h:.3e}",
                        t=self.t, last_state=self.chart.state(self.y))
                continue
            z2, f2, err, iters = result
            if not fixed and err > 1.0:
                self.stats["rejected"] += 1
                h *= max(0.2, min(1.0, 0.9 * err ** (-1.0 / 3.0)))
                if h < self.min_step:
                    raise StiffFailureError(
                        f"error control stalled at t={self.t:g}",
                        t=self.t, last_state=self.chart.state(self.y))
                continue

            seg = (self.t, h, self.y.copy(), z2.copy(), self.f.copy(), f2.copy())
            truncated = self._handle_events(seg) if self.events else None
            if truncated is not None:
                t_new, y_new = truncated
                seg = (self.t, t_new - self.t, self.y.copy(), y_new.copy(),
                       self.f.copy(), self._rhs(t_new, y_new))
            else:
                t_new, y_new = self.t + h, z2

            self.chart.guard(t_new, y_new)
            y_new, renorm = self.chart.renormalize(y_new)
            self.stats["accepted"] += 1
            self.segments.append(seg)
            self.times.append(t_new)
            self.ys.append(y_new.copy())
            self.h_hist.append(seg[1])
            self.err_hist.append(err)
            self.newton_hist.append(iters)
            self.t, self.y = t_new, y_new
            self.f = self._rhs(self.t, self.y) if (renorm or truncated) else f2
            if truncated is not None:
                break
            if not fixed:
                grow = 5.0 if err < 1e-12 else 0.9 * err ** (-1.0 / 3.0)
                h = min(self.max_step, h * max(0.2, min(5.0, grow)))
        return (np.array(self.times), np.array(self.ys), self.segments,
                self.records, self.stats,
                np.array(self.h_hist), np.array(self.err_hist),
                np.array(self.newton_hist, dtype=int))


def _make_trajectory(model: EnergyModel, chart, eps: float,
                     t_frozen: float | None, raw) -> Trajectory:
    times, ys, segments, records, stats, hs, errs, its = raw
    states = np.array([chart.state(y) for y in ys])
    logr = np.array([chart.log_radius(y) for y in ys])
    dirs = np.array([chart.direction(y) for y in ys])
    return Trajectory(model=model, eps=eps, chart=chart.names[0],
                      t_frozen=t_frozen, times=times, states=states,
                      log_radius=logr, directions=dirs, events=records,
                      stats=stats, step_sizes=hs, error_estimates=errs,
                      newton_iterations=its, _segments=segments,
                      _chart_obj=chart)


def _constant_trajectory(model: EnergyModel, eps: float,
                         t_frozen: float | None, span) -> Trajectory:
    t0, t1 = float(span[0]), float(span[1])
    chart = _CartesianChart(model, eps, t_frozen)
    zero = np.zeros(model.n)
    seg = (t0, t1 - t0, zero.copy(), zero.copy(), zero.copy(), zero.copy())
    raw = (np.array([t0, t1]), np.array([zero, zero]), [seg], [],
           {"accepted": 0, "rejected": 0, "newton_failures": 0,
            "rhs_evals": 0, "jac_evals": 0},
           np.array([t1 - t0]), np.array([0.0]), np.array([0], dtype=int))
    return _make_trajectory(model, chart, eps, t_frozen, raw)


def solve_singular(model: EnergyModel, eps: float, u0, span,
                   opts: SolveOptions | None = None) -> Trajectory:
    """Integrate eps u' = -grad F(t, u) over span = (t0, t1).

    Uses the log-polar chart unless overridden, so arbitrarily deep decay
    of |u| is tracked exactly in the log.  A zero initial state short
    circuits to the constant trivial solution.
    """
    if eps <= 0.0:
        raise DomainError(f"eps must be positive, got {eps}")
    opts = opts or SolveOptions()
    u0 = np.asarray(u0, dtype=float).reshape(model.n)
    t0, t1 = float(span[0]), float(span[1])
    r0 = float(np.linalg.norm(u0))
    if r0 == 0.0:
        return _constant_trajectory(model, eps, None, (t0, t1))
    mode = opts.coordinates
    if mode == "auto":
        mode = "log-polar"
    if mode == "log-polar":
        chart = _LogPolarChart(model, eps)
        y0 = np.concatenate([[math.log(r0)], u0 / r0])
    elif mode == "cartesian":
        chart = _CartesianChart(model, eps)
        y0 = u0
    else:
        raise DomainError(f"unknown coordinate chart '{opts.coordinates}'")
    raw = _Stepper(chart, t0, t1, y0, opts).run()
    return _make_trajectory(model, chart, eps, None, raw)


def solve_autonomous(model: EnergyModel, t_frozen: float, w0, span,
                     opts: SolveOptions | None = None) -> Trajectory:
    """Integrate the frozen-time descent w' = -grad F(t_frozen, w)."""
    opts = opts or SolveOptions()
    w0 = np.asarray(w0, dtype=float).reshape(model.n)
    t0, t1 = float(span[0]), float(span[1])
    if float(np.linalg.norm(w0)) == 0.0:
        return _constant_trajectory(model, 1.0, t_frozen, (t0, t1))
    mode = opts.coordinates
    if mode == "auto":
        mode = "cartesian"
    if mode == "cartesian":
        chart = _CartesianChart(model, 1.0, t_frozen)
        y0 = w0
    elif mode == "log-polar":
        chart = _LogPolarChart(model, 1.0, t_frozen)
        r0 = float(np.linalg.norm(w0))
        y0 = np.concatenate([[math.log(r0)], w0 / r0])
    else:
        raise DomainError(f"unknown coordinate chart '{opts.coordinates}'")
    raw = _Stepper(chart, t0, t1, y0, opts).run()
    return _make_trajectory(model, chart, 1.0, t_frozen, raw)


@dataclass(frozen=True)
class HittingResult:
    time: float
    state: np.ndarray
    trajectory: Trajectory


def first_hitting(model: EnergyModel, eps: float, u0, mu: float, span,
                  opts: SolveOptions | None = None) -> HittingResult:
    """First time |u(t)| reaches mu; raises NotFoundError if it never does."""
    if mu <= 0.0:
        raise DomainError(f"hitting radius must be positive, got {mu}")
    opts = opts or SolveOptions()
    ev = EventSpec(kind="norm", threshold=mu, direction=1, terminal=True,
                   name="hit")
    opts = replace(opts, events=tuple(opts.events) + (ev,))
    traj = solve_singular(model, eps, u0, span, opts)
    rec = traj.first_event("hit")
    if rec is None:
        raise NotFoundError(
            f"|u| never reached {mu:g} on [{span[0]:g}, {span[1]:g}] "
            f"(final log-radius {traj.log_radius[-1]:.3g})")
    return HittingResult(time=rec.time, state=rec.state, trajectory=traj)


# ---------------------------------------------------------------------------
# Energy bookkeeping along trajectories


@dataclass(frozen=True)
class EnergyBalanceReport:
    """Per-step defect of the exact energy identity along the trajectory.

    Along solutions, dF/dt = dF/dt|_explicit - |grad F|^2 / eps, so over
    each accepted step Delta F + dissipation - drive must vanish; the
    residual is the largest defect and scales with integrator accuracy.
    """

    max_residual: float
    f_scale: float
    per_step: np.ndarray

    @property
    def relative(self) -> float:
        return self.max_residual / self.f_scale


def _traj_energy(model: EnergyModel, traj: Trajectory, t: float) -> float:
    tm = traj.t_frozen if traj.t_frozen is not None else t
    return model.energy(tm, traj.state_at(t))


def energy_balance_residual(model: EnergyModel, traj: Trajectory,
                            eps: float) -> EnergyBalanceReport:
    times = traj.times
    residuals = np.zeros(len(times) - 1)
    f_scale = 1.0 + max(abs(_traj_energy(model, traj, t)) for t in times)

    def dissipation_density(t: float) -> float:
        tm = traj.t_frozen if traj.t_frozen is not None else t
        g = model.gradient(tm, traj.state_at(t))
        return float(g @ g) / eps

    def drive_density(t: float) -> float:
        if traj.t_frozen is not None:
            return 0.0
        return model.dt(t, traj.state_at(t))

    for k in range(len(times) - 1):
        a, b = times[k], times[k + 1]
        if b == a:
            continue
        df = _traj_energy(model, traj, b) - _traj_energy(model, traj, a)
        diss = composite_simpson(dissipation_density, a, b, segments=8)
        drive = composite_simpson(drive_density, a, b, segments=8)
        residuals[k] = abs(df + diss - drive)
    return EnergyBalanceReport(max_residual=float(np.max(residuals)) if len(residuals) else 0.0,
                               f_scale=f_scale, per_step=residuals)


def dissipation_integral(model: EnergyModel, traj: Trajectory, window,
                         eps: float | None = None,
                         tol: float = 1e-8) -> float:
    """Integral of |grad F(t, u(t))|^2 / eps over the window, on dense output."""
    a, b = float(window[0]), float(window[1])
    if not (traj.t0 - 1e-12 <= a <= b <= traj.t_end + 1e-12):
        raise DomainError(f"window [{a}, {b}] outside trajectory span "
                          f"[{traj.t0}, {traj.t_end}]")
    eps = traj.eps if eps is None else eps

    def density(t: float) -> float:
        tm = traj.t_frozen if traj.t_frozen is not None else t
        g = model.gradient(tm, traj.state_at(t))
        return float(g @ g) / eps

    value, _ = adaptive_simpson(density, a, b, tol=tol)
    return value
