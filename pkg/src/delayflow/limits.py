"""Delayed-jump analysis: sweeps in eps, limit curves, and jump targets.

For initial data of size eps^alpha along the stable leading eigenvector,
trajectories of eps u' = -grad F(t, u) cling to the trivial equilibrium far
past the critical time t_c and only reach macroscopic size mu at hitting
times t_eps that converge, like t* + O(eps log(1/eps)), to the delayed
time t*.  This module computes those hitting times, projects the smallest
eps run onto the frozen critical-point field to estimate the limit curve,
predicts the post-jump state from the frozen heteroclinic at t*, and
verifies the two-sided Gronwall envelope and the dissipation lower bound
that make the delay rigorous rather than an artifact of tolerances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .critical import CriticalPoint, find_critical_points, omega_limit
from .errors import (BlowUpError, BoundInapplicableError, DomainError,
                     HypothesisError, NotFoundError, NumericalError,
                     StiffFailureError, UnsupportedRegimeError)
from .integrate import (EventSpec, SolveOptions, Trajectory, solve_autonomous,
                        solve_singular, dissipation_integral)
from .models import EnergyModel
from .spectral import (SpectralProfile, StabilityTimes, blowup_time,
                       check_nondegeneracy, lambda1_primitive)


def _directions(n: int, extra: int = 16, rng_seed: int = 7) -> np.ndarray:
    """Deterministic unit directions: axes, sign corners, seeded random."""
    dirs = []
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        dirs += [e, -e]
    if n > 1:
        for bits in range(2 ** n):
            c = np.array([1.0 if (bits >> j) & 1 else -1.0 for j in range(n)])
            dirs.append(c / np.linalg.norm(c))
        rng = np.random.default_rng(rng_seed)
        raw = rng.normal(size=(extra, n))
        dirs += [r / np.linalg.norm(r) for r in raw]
    return np.array(dirs)


# ---------------------------------------------------------------------------
# Working radius


@dataclass(frozen=True)
class MuReport:
    """Auto-selected working radius and the two constraints behind it."""

    mu: float
    r_isolation: float | None   # half distance from 0 to the nearest other
    r_remainder: float          # largest radius with small relative remainder
    lambda1_abs: float
    t_star: float
    note: str = ""


def auto_mu(model: EnergyModel, profile: SpectralProfile,
            t_star: float | None = None, box=(-2.0, 2.0),
            remainder_fraction: float = 0.1) -> MuReport:
    """Working radius mu = min(r_iso / 2, remainder radius).

    r_iso is half the distance from the origin to the nearest other
    critical point of F(t*, .); the remainder radius is the largest r at
    which the nonlinear part of the gradient stays below
    remainder_fraction * |lambda_1(t*)| relative to |u|.
    """
    if t_star is None:
        times = blowup_time(profile)
        if times.t_star is None:
            raise HypothesisError(
                f"no delayed time on the horizon: {times.note}")
        t_star = times.t_star
    lam1 = abs(profile.lambda1_at(t_star))
    if lam1 < 1e-12:
        raise HypothesisError(
            "minimal eigenvalue vanishes at the delayed time; "
            "no working radius is defined")
    target = remainder_fraction * lam1
    dirs = _directions(model.n)

    def envelope(r: float) -> float:
        return max(float(np.linalg.norm(model.remainder(t_star, r * d))) / r
                   for d in dirs)

    hi = float(np.max(np.abs(box)))
    lo = 1e-8 * hi
    note = ""
    if envelope(hi) <= target:
        r_rem = hi
    elif envelope(lo) > target:
        r_rem = lo
        note = "remainder dominates even at tiny radius"
    else:
        a, b = lo, hi
        for _ in range(100):
            mid = 0.5 * (a + b)
            if envelope(mid) <= target:
                a = mid
            else:
                b = mid
        r_rem = a

    cps = find_critical_points(model, t_star, box)
    nonzero = cps.nonzero()
    if nonzero:
        r_iso = 0.5 * min(float(np.linalg.norm(p.location)) for p in nonzero)
        mu = min(0.5 * r_iso, r_rem)
    else:
        r_iso = None
        mu = r_rem
        note = (note + "; " if note else "") + \
            "no nonzero critical point in the search box"
    return MuReport(mu=mu, r_isolation=r_iso, r_remainder=r_rem,
                    lambda1_abs=lam1, t_star=t_star, note=note)


# ---------------------------------------------------------------------------
# Epsilon sweeps


@dataclass
class JumpEstimate:
    """Hitting data of one eps run (t_hit is None when mu is never reached)."""

    eps: float
    alpha: float
    sign: int
    mu: float
    t_hit: float | None
    t_half: float | None
    state_at_hit: np.ndarray | None
    trajectory: Trajectory | None
    note: str = ""


@dataclass
class SweepResult:
    model_name: str
    eps_list: tuple[float, ...]
    alpha: float
    sign: int
    mu: float
    mu_report: MuReport | None
    times: StabilityTimes
    estimates: list[JumpEstimate]
    span: tuple[float, float]

    def hit_times(self) -> list[tuple[float, float]]:
        return [(e.eps, e.t_hit) for e in self.estimates if e.t_hit is not None]


def run_epsilon_sweep(model: EnergyModel, profile: SpectralProfile, eps_list,
                      alpha: float = 1.0, sign: int = 1,
                      mu: float | None = None, mu_rule: str = "auto",
                      opts: SolveOptions | None = None) -> SweepResult:
    """Hitting times of |u| = mu for u(0) = sign * eps^alpha * e1.

    Each run integrates to t* + (T - t*)/2 recording the mu/2 and mu
    crossings; tolerances relax a hundredfold after the mu crossing, since
    only the jump location needs decay-grade accuracy.  Failures of single
    runs are captured in the estimate's note instead of aborting the sweep.
    """
    times = blowup_time(profile)
    if times.t_star is None:
        raise HypothesisError(f"sweep needs a delayed time: {times.note}")
    if sign not in (-1, 1):
        raise DomainError(f"sign must be +1 or -1, got {sign}")
    mu_report = None
    if mu is None:
        if mu_rule != "auto":
            raise DomainError(f"unknown mu rule '{mu_rule}' and no explicit mu")
        mu_report = auto_mu(model, profile, times.t_star)
        mu = mu_report.mu
    if mu <= 0.0:
        raise DomainError(f"working radius must be positive, got {mu}")
    base_opts = opts or SolveOptions()
    events = (EventSpec(kind="norm", threshold=0.5 * mu, direction=1,
                        name="half"),
              EventSpec(kind="norm", threshold=mu, direction=1,
                        relax_after=True, name="hit"))
    run_opts = replace(base_opts, events=tuple(base_opts.events) + events)
    e1 = profile.e1[0]
    span = (float(profile.grid[0]),
            times.t_star + 0.5 * (model.T - times.t_star))

    estimates: list[JumpEstimate] = []
    for eps in eps_list:
        eps = float(eps)
        u0 = sign * eps ** alpha * e1
        try:
            traj = solve_singular(model, eps, u0, span, run_opts)
        except (StiffFailureError, BlowUpError, NumericalError) as exc:
            estimates.append(JumpEstimate(
                eps=eps, alpha=alpha, sign=sign, mu=mu, t_hit=None,
                t_half=None, state_at_hit=None, trajectory=None,
                note=f"{type(exc).__name__}: {exc}"))
            continue
        hit = traj.first_event("hit")
        halves = [ev for ev in traj.events if ev.name == "half"
                  and (hit is None or ev.time <= hit.time)]
        estimates.append(JumpEstimate(
            eps=eps, alpha=alpha, sign=sign, mu=mu,
            t_hit=hit.time if hit else None,
            t_half=halves[-1].time if halves else None,
            state_at_hit=hit.state if hit else None,
            trajectory=traj,
            note="" if hit else "never reached the working radius"))
    return SweepResult(model_name=model.name, eps_list=tuple(float(e) for e in eps_list),
                       alpha=alpha, sign=sign, mu=float(mu),
                       mu_report=mu_report, times=times,
                       estimates=estimates, span=span)


# ---------------------------------------------------------------------------
# Limit curve


def _continue_branch(model: EnergyModel, x0: np.ndarray, t_from: float,
                     t_to: float, steps: int = 32) -> np.ndarray | None:
    """Follow a critical-point branch in time by predictor-free Newton."""
    from .critical import _polish

    x = x0.copy()
    escape = 4.0 * (float(np.linalg.norm(x0)) + 1.0)
    for t in np.linspace(t_from, t_to, steps + 1)[1:]:
        x = _polish(model, float(t), x, escape)
        if x is None:
            return None
    return x


@dataclass
class LimitCurve:
    """Nearest-critical-point projection of the deepest run, with the jump."""

    grid: np.ndarray
    states: np.ndarray
    jump_index: int | None          # last grid index before the jump
    jump_bracket: tuple[float, float] | None
    u_minus: np.ndarray | None      # pre-jump branch continued to t*
    u_plus: np.ndarray | None       # post-jump branch continued to t*
    note: str = ""


def estimate_limit_curve(model: EnergyModel, profile: SpectralProfile,
                         estimate: JumpEstimate, grid,
                         box=(-2.0, 2.0), seeds_per_dim: int = 7) -> LimitCurve:
    """Project one trajectory onto the frozen critical-point field.

    At each grid time the state is replaced by the nearest critical point
    of F(t, .).  A jump is declared at the first increment exceeding ten
    times the running continuity scale past the critical time; both
    adjacent branches are then Newton-continued back to t* to give the
    one-sided limits u_minus and u_plus.
    """
    if estimate.trajectory is None:
        raise DomainError("estimate carries no trajectory (run failed)")
    traj = estimate.trajectory
    grid = np.asarray(grid, dtype=float)
    if grid[0] < traj.t0 - 1e-9 or grid[-1] > traj.t_end + 1e-9:
        raise DomainError(
            f"grid [{grid[0]}, {grid[-1]}] is outside the trajectory span "
            f"[{traj.t0}, {traj.t_end}]")
    times = blowup_time(profile)
    t_c = times.t_c if times.t_c is not None else grid[0]

    states = np.zeros((len(grid), model.n))
    for k, t in enumerate(grid):
        cps = find_critical_points(model, float(t), box,
                                   seeds_per_dim=seeds_per_dim)
        states[k] = cps.nearest(traj.state_at(float(t))).location

    jump_index = None
    running = 0.0
    for k in range(len(grid) - 1):
        step = float(np.linalg.norm(states[k + 1] - states[k]))
        if grid[k] >= t_c and step > 10.0 * max(running, 1e-6):
            jump_index = k
            break
        running = max(running, step)

    if jump_index is None:
        return LimitCurve(grid=grid, states=states, jump_index=None,
                          jump_bracket=None, u_minus=None, u_plus=None,
                          note="no jump detected on the grid")
    if times.t_star is None:
        raise HypothesisError(
            "limit curve jumped but the profile defines no delayed time")
    u_minus = _continue_branch(model, states[jump_index],
                               float(grid[jump_index]), times.t_star)
    u_plus = _continue_branch(model, states[jump_index + 1],
                              float(grid[jump_index + 1]), times.t_star)
    note = ""
    if u_minus is None or u_plus is None:
        note = "branch continuation to t* lost a branch"
    return LimitCurve(grid=grid, states=states, jump_index=jump_index,
                      jump_bracket=(float(grid[jump_index]),
                                    float(grid[jump_index + 1])),
                      u_minus=u_minus, u_plus=u_plus, note=note)


# ---------------------------------------------------------------------------
# Inner-layer rescaling and the frozen heteroclinic


@dataclass(frozen=True)
class RescaledOrbit:
    """Trajectory in the stretched time s = (t - t_hit) / eps."""

    s: np.ndarray
    states: np.ndarray
    t_hit: float
    eps: float


def rescale_trajectory(traj: Trajectory, t_hit: float, eps: float,
                       s_window=(-5.0, 15.0), num: int = 401) -> RescaledOrbit:
    s = np.linspace(float(s_window[0]), float(s_window[1]), num)
    t_lo, t_hi = t_hit + eps * s[0], t_hit + eps * s[-1]
    if t_lo < traj.t0 - 1e-12 or t_hi > traj.t_end + 1e-12:
        raise DomainError(
            f"rescaled window [{t_lo:g}, {t_hi:g}] exceeds the trajectory "
            f"span [{traj.t0:g}, {traj.t_end:g}]")
    states = np.array([traj.state_at(t_hit + eps * float(si)) for si in s])
    return RescaledOrbit(s=s, states=states, t_hit=float(t_hit), eps=float(eps))


@dataclass
class Heteroclinic:
    """Frozen-time connection from the origin to its omega-limit at t*."""

    t_star: float
    sign: int
    delta0: float
    trajectory: Trajectory
    omega: np.ndarray
    omega_point: CriticalPoint
    unstable_direction: np.ndarray

    def state_at(self, s: float) -> np.ndarray:
        """Orbit state at s >= 0; past the settled end it returns omega."""
        if s < 0.0:
            raise DomainError(f"the computed orbit starts at s=0, got {s}")
        if s >= self.trajectory.t_end:
            return self.omega.copy()
        return self.trajectory.state_at(s)

    def first_radius_time(self, radius: float) -> float:
        """First s with |w(s)| = radius (bisection on dense output)."""
        logs = self.trajectory.log_radius
        target = math.log(radius)
        idx = np.where(logs >= target)[0]
        if len(idx) == 0 or idx[0] == 0:
            raise NotFoundError(
                f"orbit never reaches radius {radius:g} "
                f"(max |w| = {math.exp(float(np.max(logs))):.3g})")
        k = int(idx[0])
        lo, hi = self.trajectory.times[k - 1], self.trajectory.times[k]
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if hi - lo <= 1e-12 * max(1.0, self.trajectory.t_end):
                return mid
            if self.trajectory.log_radius_at(mid) < target:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)


def heteroclinic(model: EnergyModel, t_star: float, sign: int = 1,
                 delta0: float = 1e-6,
                 opts: SolveOptions | None = None) -> Heteroclinic:
    """Frozen descent leaving the origin along the unstable direction.

    Requires A(t*) to have exactly one negative eigenvalue; the orbit
    starts at sign * delta0 along its eigenvector and is integrated until
    the omega-limit settles.  The returned object exposes the whole orbit,
    so time shifts (the connection is only defined up to one) are applied
    by the caller.
    """
    if sign not in (-1, 1):
        raise DomainError(f"sign must be +1 or -1, got {sign}")
    if not 0.0 < delta0 < 1.0:
        raise DomainError(f"delta0 must be in (0, 1), got {delta0}")
    rep = check_nondegeneracy(model, t_star)
    if not rep.ok:
        raise UnsupportedRegimeError(
            f"A(t*) is numerically singular (sv_min = {rep.sv_min:.3e})")
    if rep.n_negative != 1:
        raise UnsupportedRegimeError(
            "jump analysis needs exactly one unstable direction at t*, "
            f"found {rep.n_negative}")
    vals, vecs = np.linalg.eigh(model.stiffness(t_star))
    e_unstable = vecs[:, 0]
    if e_unstable[int(np.argmax(np.abs(e_unstable)))] < 0.0:
        e_unstable = -e_unstable
    w0 = sign * delta0 * e_unstable
    om = omega_limit(model, t_star, w0, opts)
    traj = solve_autonomous(model, t_star, w0, (0.0, om.settle_time), opts)
    return Heteroclinic(t_star=float(t_star), sign=sign, delta0=float(delta0),
                        trajectory=traj, omega=om.point,
                        omega_point=om.critical_point,
                        unstable_direction=e_unstable)


@dataclass(frozen=True)
class JumpPrediction:
    """Predicted post-jump state u_plus(t*) and its provenance."""

    target: np.ndarray
    kind: str
    t_star: float
    sign: int
    heteroclinic: Heteroclinic


def predict_jump_target(model: EnergyModel, profile: SpectralProfile,
                        t_star: float | None = None,
                        sign: int = 1) -> JumpPrediction:
    """Post-jump state: the omega-limit of the frozen heteroclinic at t*."""
    if t_star is None:
        times = blowup_time(profile)
        if times.t_star is None:
            raise HypothesisError(
                f"no delayed time on the horizon: {times.note}")
        t_star = times.t_star
    het = heteroclinic(model, t_star, sign=sign)
    return JumpPrediction(target=het.omega, kind=het.omega_point.kind,
                          t_star=float(t_star), sign=sign, heteroclinic=het)


# ---------------------------------------------------------------------------
# Delay verification


@dataclass(frozen=True)
class DelayReport:
    """Linear fit of hitting times in eps*log(1/eps) and the delay verdict."""

    delayed: bool
    extrapolated_hit: float
    coefficient: float
    max_residual: float
    n_points: int
    t_c: float | None
    t_star: float | None
    confidence: str  # none | low | ok


def verify_delay(estimates, times: StabilityTimes) -> DelayReport:
    """Extrapolate hitting times to eps -> 0 and compare against t_c.

    The model is t_hit = a + c * eps * log(1/eps); the verdict 'delayed'
    requires the extrapolated hit to clear the critical time by at least
    five times the worst fit residual.  One usable point gives only a
    low-confidence verdict (no residual is available).
    """
    pts = [(e.eps, e.t_hit) for e in estimates if e.t_hit is not None]
    t_c = times.t_c
    if not pts or t_c is None:
        return DelayReport(delayed=False, extrapolated_hit=math.nan,
                           coefficient=math.nan, max_residual=math.inf,
                           n_points=len(pts), t_c=t_c, t_star=times.t_star,
                           confidence="none")
    x = np.array([e * math.log(1.0 / e) for e, _ in pts])
    y = np.array([t for _, t in pts])
    if len(pts) == 1:
        gap = float(y[0]) - float(t_c)
        span = (times.t_star - t_c) if times.t_star is not None else abs(t_c)
        return DelayReport(delayed=bool(gap > 0.5 * span),
                           extrapolated_hit=float(y[0]), coefficient=0.0,
                           max_residual=math.inf, n_points=1, t_c=t_c,
                           t_star=times.t_star, confidence="low")
    coef, intercept = np.polyfit(x, y, 1)
    resid = float(np.max(np.abs(intercept + coef * x - y)))
    delayed = (float(intercept) - t_c) > 5.0 * max(resid, 1e-12)
    return DelayReport(delayed=bool(delayed),
                       extrapolated_hit=float(intercept),
                       coefficient=float(coef), max_residual=resid,
                       n_points=len(pts), t_c=t_c, t_star=times.t_star,
                       confidence="ok" if len(pts) >= 3 else "low")


# ---------------------------------------------------------------------------
# Gronwall envelope and the dissipation bound


@dataclass(frozen=True)
class DiagnosticBounds:
    """Constants entering the two-sided envelope on the decay phase."""

    eta: float        # sup |remainder| / |u| over the mu-ball and window
    delta: float      # cone opening from the initial data
    mu: float
    gap_sup: float    # sup (lambda_n - lambda_1) over the window
    xi: float | None  # isolation radius at t*, when defined
    window_end: float


def diagnostic_bounds(model: EnergyModel, profile: SpectralProfile,
                      mu: float, u0,
                      window_end: float | None = None) -> DiagnosticBounds:
    """Measure (eta, delta, gap) for a run confined to the mu-ball."""
    u0 = np.asarray(u0, dtype=float).reshape(model.n)
    times = blowup_time(profile)
    if window_end is None:
        window_end = profile.grid[-1]
        if times.t_star is not None:
            window_end = min(window_end, times.t_star + profile.rho_window)
    e1 = profile.e1[0]
    proj = float(u0 @ e1)
    if proj == 0.0:
        raise BoundInapplicableError(
            "initial data is orthogonal to the leading eigenvector; "
            "the cone condition cannot hold")
    delta = max(float(u0 @ u0) / proj ** 2 - 1.0, 1e-6)

    dirs = _directions(model.n)
    radii = mu * np.geomspace(1e-3, 1.0, 12)
    t_samples = profile.grid[profile.grid <= window_end + 1e-12]
    t_samples = t_samples[:: max(1, len(t_samples) // 24)]
    eta = 0.0
    for t in t_samples:
        for r in radii:
            for d in dirs:
                eta = max(eta, float(np.linalg.norm(
                    model.remainder(float(t), r * d))) / r)

    mask = profile.grid <= window_end + 1e-12
    gap_sup = float(np.max(profile.lambdas[mask, -1] - profile.lambdas[mask, 0])) \
        if model.n > 1 else 0.0
    xi = None
    if times.t_star is not None:
        rep = auto_mu(model, profile, times.t_star)
        xi = rep.r_isolation
    return DiagnosticBounds(eta=eta, delta=delta, mu=float(mu),
                            gap_sup=gap_sup, xi=xi,
                            window_end=float(window_end))


@dataclass(frozen=True)
class GronwallReport:
    """Pointwise verdicts of the decay envelope along one trajectory."""

    upper_ok: bool
    lower_ok: bool
    cone_ok: bool
    min_upper_margin: float
    min_lower_margin: float
    min_cone_margin: float
    eta_trajectory: float
    gap_penalty: float
    gap_condition_ok: bool
    n_samples: int
    t_end: float


def check_gronwall_bounds(traj: Trajectory, profile: SpectralProfile,
                          bounds: DiagnosticBounds) -> GronwallReport:
    """Two-sided envelope and cone invariance up to the mu-crossing.

    In log coordinates, writing l = ln|u| and L(t) = int_0^t lambda_1:

        upper:  2(l(t) - l(0)) <= -(2/eps) (L(t) - eta t)
        lower:  2(l(t) - l(0)) >= -(2/eps) (L(t) + (pen + eta) t)
        cone:   <u/|u|, e1>^2 > 1 / (1 + delta)

    with pen = gap_sup * delta / (1 + delta).  Hard preconditions: the
    trajectory stays inside the mu-ball up to the end of the checked
    window, and the remainder measured along it never exceeds eta.  The
    gap smallness condition is reported, not enforced.
    """
    model = traj.model
    eps = traj.eps
    if traj.t_frozen is not None:
        raise DomainError("Gronwall checks apply to the nonautonomous flow")
    hit = traj.first_event("hit")
    t_end = hit.time if hit is not None else traj.t_end

    sel = traj.times <= t_end + 1e-12
    ts = traj.times[sel]
    ls = traj.log_radius[sel]
    vs = traj.directions[sel]
    if ts[-1] < t_end - 1e-12:
        ts = np.append(ts, t_end)
        ls = np.append(ls, traj.log_radius_at(t_end))
        vs = np.vstack([vs, traj.direction_at(t_end)])

    # the final sample is the located mu-crossing itself, known only to the
    # event bisection tolerance; allow that much slack in the log radius
    log_mu = math.log(bounds.mu)
    if float(np.max(ls)) > log_mu + 1e-6:
        raise BoundInapplicableError(
            "trajectory leaves the mu-ball inside the checked window "
            f"(max |u| = {math.exp(float(np.max(ls))):.3g} vs mu = {bounds.mu:g})")

    eta_traj = 0.0
    for t, l, v in zip(ts, ls, vs):
        if l < -150.0:
            continue  # relative remainder is O(|u|^2) here, far below eta
        r = math.exp(l)
        eta_traj = max(eta_traj, float(np.linalg.norm(
            model.remainder(float(t), r * v))) / r)
    # same slack story: the endpoint radius overshoots mu by the event
    # tolerance and the relative remainder grows like r^2
    if eta_traj > bounds.eta * (1.0 + 1e-5) + 1e-15:
        raise BoundInapplicableError(
            f"remainder along the trajectory ({eta_traj:.6g}) exceeds the "
            f"certified eta ({bounds.eta:.6g})")

    e1 = profile.e1[0]
    t0, l0 = float(ts[0]), float(ls[0])
    base_prim, base_err = lambda1_primitive(profile, t0)
    pen = bounds.gap_sup * bounds.delta / (1.0 + bounds.delta)
    cone_floor = 1.0 / (1.0 + bounds.delta)

    upper = np.zeros(len(ts))
    lower = np.zeros(len(ts))
    cone = np.zeros(len(ts))
    tol = np.zeros(len(ts))
    for k, (t, l, v) in enumerate(zip(ts, ls, vs)):
        prim, perr = lambda1_primitive(profile, float(t))
        big_l = prim - base_prim
        s = float(t) - t0
        dl2 = 2.0 * (float(l) - l0)
        upper[k] = -(2.0 / eps) * (big_l - bounds.eta * s) - dl2
        lower[k] = dl2 + (2.0 / eps) * (big_l + (pen + bounds.eta) * s)
        cone[k] = float(v @ e1) ** 2 - cone_floor
        tol[k] = 1e-12 * (1.0 + abs(dl2)) + (2.0 / eps) * (perr + base_err + 1e-14)

    lam_abs = np.abs([profile.lambda1_at(float(t)) for t in ts[:: max(1, len(ts) // 16)]])
    gap_condition_ok = pen <= 0.1 * float(np.max(lam_abs))
    return GronwallReport(
        upper_ok=bool(np.all(upper >= -tol)),
        lower_ok=bool(np.all(lower >= -tol)),
        cone_ok=bool(np.all(cone > 0.0)),
        min_upper_margin=float(np.min(upper)),
        min_lower_margin=float(np.min(lower)),
        min_cone_margin=float(np.min(cone)),
        eta_trajectory=eta_traj,
        gap_penalty=pen,
        gap_condition_ok=bool(gap_condition_ok),
        n_samples=len(ts),
        t_end=float(t_end),
    )


@dataclass(frozen=True)
class EnergyGapReport:
    """Dissipation across the half-to-full mu annulus vs its lower bound."""

    dissipation: float
    g_mu: float
    bound: float
    ok: bool
    window: tuple[float, float]


def check_energy_gap(model: EnergyModel, traj: Trajectory, mu: float,
                     window: tuple[float, float] | None = None) -> EnergyGapReport:
    """Check dissipation >= mu * G_mu / 2 across the crossing window.

    G_mu is the minimal gradient norm over the closed annulus
    mu/2 <= |u| <= mu and the time window; the dissipation integral is
    taken on dense output between the last mu/2 crossing and the mu
    crossing, where the path must traverse the annulus.
    """
    if window is None:
        hit = traj.first_event("hit")
        if hit is None:
            raise NotFoundError("trajectory has no mu crossing ('hit' event)")
        halves = [ev for ev in traj.events
                  if ev.name == "half" and ev.time <= hit.time]
        if not halves:
            raise NotFoundError("trajectory has no mu/2 crossing ('half' event)")
        window = (halves[-1].time, hit.time)
    diss = dissipation_integral(model, traj, window)
    dirs = _directions(model.n)
    g_mu = math.inf
    for t in np.linspace(window[0], window[1], 17):
        for r in np.linspace(0.5 * mu, mu, 9):
            for d in dirs:
                g_mu = min(g_mu, float(np.linalg.norm(
                    model.gradient(float(t), r * d))))
    bound = 0.5 * mu * g_mu
    return EnergyGapReport(dissipation=diss, g_mu=g_mu, bound=bound,
                           ok=diss >= bound, window=(float(window[0]),
                                                     float(window[1])))


# ---------------------------------------------------------------------------
# Curve alignment


def best_shift_sup_error(s, values, reference, bracket=None,
                         coarse: int = 241) -> tuple[float, float]:
    """Minimize sup_i |values_i - reference(s_i - shift)| over the shift.

    Coarse scan over the bracket followed by ternary refinement; the
    reference must accept scalar arguments on the shifted window.
    """
    s = np.asarray(s, dtype=float)
    values = np.asarray(values, dtype=float)
    if bracket is None:
        half = float(s[-1] - s[0])
        bracket = (-half, half)

    def sup_err(shift: float) -> float:
        return max(abs(float(values[i]) - float(reference(float(si) - shift)))
                   for i, si in enumerate(s))

    shifts = np.linspace(bracket[0], bracket[1], coarse)
    errs = [sup_err(float(sh)) for sh in shifts]
    k = int(np.argmin(errs))
    lo = shifts[max(0, k - 1)]
    hi = shifts[min(coarse - 1, k + 1)]
    for _ in range(80):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if sup_err(m1) <= sup_err(m2):
            hi = m2
        else:
            lo = m1
    best = 0.5 * (lo + hi)
    return best, sup_err(best)
