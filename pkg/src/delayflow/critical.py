"""Critical points of frozen-time energies and omega-limits of the descent.

The jump analysis needs the full critical set of x -> F(t, x) at fixed t:
the limit curve projects trajectories onto it, and the post-jump state is
the omega-limit of a frozen heteroclinic, which must land on one of these
points.  Dimensions are small (n <= 4), so a seeded Newton sweep over a
lattice of starting points is exhaustive in practice and fully
deterministic.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .errors import (DomainError, NonConvergenceError, NotFoundError,
                     NumericalError)
from .integrate import SolveOptions, Trajectory, solve_autonomous
from .models import EnergyModel, as_box

RESIDUAL_TOL = 1e-10   # |grad| at an accepted critical point
DEDUP_TOL = 1e-6
MATCH_TOL = 1e-6       # omega-limit to critical-point matching radius


def _polish(model: EnergyModel, t: float, x0: np.ndarray,
            escape_radius: float, maxiter: int = 80) -> np.ndarray | None:
    """Damped Newton on grad F(t, .) = 0; None if it escapes or stalls."""
    x = np.asarray(x0, dtype=float).copy()
    n = model.n
    for _ in range(maxiter):
        g = model.gradient(t, x)
        gn = float(np.linalg.norm(g))
        if gn <= 0.1 * RESIDUAL_TOL:
            return x
        h = model.hessian(t, x)
        step = None
        damp = 0.0
        scale = float(np.linalg.norm(h, 2)) + 1.0
        for _ in range(8):
            try:
                step = np.linalg.solve(h + damp * np.eye(n), -g)
            except np.linalg.LinAlgError:
                step = None
            if step is not None and np.all(np.isfinite(step)):
                break
            damp = max(2.0 * damp, 1e-8 * scale)
        if step is None:
            return None
        lam = 1.0
        while lam > 1e-8:
            trial = x + lam * step
            if float(np.linalg.norm(model.gradient(t, trial))) < gn:
                break
            lam *= 0.5
        x = x + lam * step
        if float(np.linalg.norm(x)) > escape_radius:
            return None
    g = model.gradient(t, x)
    return x if float(np.linalg.norm(g)) <= RESIDUAL_TOL else None


@dataclass(frozen=True)
class CriticalPoint:
    location: np.ndarray
    time: float
    energy: float
    grad_norm: float
    hess_eigs: np.ndarray
    kind: str  # strict-local-min | saddle | degenerate

    @property
    def is_origin(self) -> bool:
        return float(np.linalg.norm(self.location)) <= DEDUP_TOL


def _classify(eigs: np.ndarray, h_norm: float) -> str:
    tol = 1e-8 * (1.0 + h_norm)
    if np.any(np.abs(eigs) <= tol):
        return "degenerate"
    return "strict-local-min" if np.all(eigs > tol) else "saddle"


class CriticalPointSet(Sequence):
    """Deduplicated critical points, sorted lexicographically by location."""

    def __init__(self, points: list[CriticalPoint], time: float,
                 seed_count: int, converged_fraction: float):
        self.points = points
        self.time = time
        self.seed_count = seed_count
        self.converged_fraction = converged_fraction

    def __len__(self) -> int:
        return len(self.points)

    def __getitem__(self, i):
        return self.points[i]

    def origin(self) -> CriticalPoint | None:
        for p in self.points:
            if p.is_origin:
                return p
        return None

    def nonzero(self) -> list[CriticalPoint]:
        return [p for p in self.points if not p.is_origin]

    def nearest(self, x) -> CriticalPoint:
        x = np.asarray(x, dtype=float)
        return min(self.points, key=lambda p: float(np.linalg.norm(p.location - x)))


def find_critical_points(model: EnergyModel, t: float, box,
                         seeds_per_dim: int = 11,
                         rng_seed: int = 12345) -> CriticalPointSet:
    """All critical points of F(t, .) found from a jittered seed lattice.

    The lattice has seeds_per_dim points per axis (n <= 4 keeps this
    tractable); each seed is polished by damped Newton and results are
    deduplicated at 1e-6.  The trivial equilibrium is always included.
    The converged fraction is reported so a suspiciously rugged landscape
    is visible to the caller.
    """
    if model.n > 4:
        raise DomainError(
            f"seed lattice is exponential in dimension; n={model.n} > 4 "
            "needs a caller-supplied seed strategy")
    box = as_box(box, model.n)
    rng = np.random.default_rng(rng_seed)
    axes = [np.linspace(lo, hi, seeds_per_dim) for lo, hi in box]
    mesh = np.meshgrid(*axes, indexing="ij")
    seeds = np.stack([g.ravel() for g in mesh], axis=-1)
    spacing = float(np.min((box[:, 1] - box[:, 0]) / max(seeds_per_dim - 1, 1)))
    seeds = seeds + rng.uniform(-1e-3, 1e-3, size=seeds.shape) * spacing
    escape = 4.0 * float(np.max(np.abs(box))) + 1.0

    found: list[np.ndarray] = [np.zeros(model.n)]
    converged = 0
    for s in seeds:
        x = _polish(model, t, s, escape)
        if x is None:
            continue
        converged += 1
        if all(float(np.linalg.norm(x - y)) > DEDUP_TOL for y in found):
            found.append(x)

    points = []
    for x in found:
        g = model.gradient(t, x)
        h = model.hessian(t, x)
        eigs = np.linalg.eigvalsh(h)
        points.append(CriticalPoint(
            location=x, time=float(t), energy=model.energy(t, x),
            grad_norm=float(np.linalg.norm(g)), hess_eigs=eigs,
            kind=_classify(eigs, float(np.abs(eigs).max(initial=0.0)))))
    points.sort(key=lambda p: tuple(p.location))
    return CriticalPointSet(points, float(t), len(seeds),
                            converged / max(len(seeds), 1))


@dataclass(frozen=True)
class OmegaLimit:
    point: np.ndarray
    critical_point: CriticalPoint
    settle_time: float
    trajectory: Trajectory

    @property
    def kind(self) -> str:
        return self.critical_point.kind


def omega_limit(model: EnergyModel, t_frozen: float, w0,
                opts: SolveOptions | None = None,
                max_time: float = 4096.0) -> OmegaLimit:
    """Limit of the frozen descent w' = -grad F(t_frozen, w) from w0.

    Integrates in doubling windows until the gradient drops below 1e-10
    and the trailing half-window movement is below 1e-10, then polishes
    the endpoint by Newton; the orbit must land within 1e-6 of the
    polished critical point.
    """
    w = np.asarray(w0, dtype=float).reshape(model.n)
    s0 = 0.0
    span = 16.0
    traj = None
    while True:
        traj = solve_autonomous(model, t_frozen, w, (s0, s0 + span), opts)
        w = traj.final_state
        g = float(np.linalg.norm(model.gradient(t_frozen, w)))
        moved = float(np.linalg.norm(w - traj.state_at(s0 + 0.5 * span)))
        s0 += span
        if g <= 1e-10 and moved <= 1e-10:
            break
        span *= 2.0
        if s0 + span > 2.0 * max_time:
            raise NonConvergenceError(
                f"descent did not settle within s={s0:g} "
                f"(|grad| = {g:.3e}, movement = {moved:.3e})",
                final_state=w)
    escape = 4.0 * float(np.linalg.norm(w)) + 10.0
    x = _polish(model, t_frozen, w, escape)
    if x is None or float(np.linalg.norm(x - w)) > MATCH_TOL:
        raise NumericalError(
            "descent settled but does not match a polished critical point "
            f"within {MATCH_TOL:g} (endpoint {w}, polished {x})")
    h = model.hessian(t_frozen, x)
    eigs = np.linalg.eigvalsh(h)
    cp = CriticalPoint(location=x, time=float(t_frozen),
                       energy=model.energy(t_frozen, x),
                       grad_norm=float(np.linalg.norm(model.gradient(t_frozen, x))),
                       hess_eigs=eigs,
                       kind=_classify(eigs, float(np.abs(eigs).max(initial=0.0))))
    return OmegaLimit(point=x, critical_point=cp, settle_time=s0,
                      trajectory=traj)


@dataclass(frozen=True)
class OneDExtremes:
    u_minus: float
    u_plus: float


def one_d_extremes(model: EnergyModel, t: float,
                   search_radius: float = 10.0) -> OneDExtremes:
    """Nearest nonzero critical values around the origin on the line.

    u_plus is the smallest positive critical point of F(t, .), u_minus the
    largest negative one; only defined for scalar models.
    """
    if model.n != 1:
        raise DomainError(f"one_d_extremes needs n=1, got n={model.n}")
    cps = find_critical_points(model, t, (-search_radius, search_radius),
                               seeds_per_dim=41)
    pos = [float(p.location[0]) for p in cps if p.location[0] > DEDUP_TOL]
    neg = [float(p.location[0]) for p in cps if p.location[0] < -DEDUP_TOL]
    if not pos or not neg:
        raise NotFoundError(
            f"no critical points on both sides of 0 at t={t:g} within "
            f"radius {search_radius:g}")
    return OneDExtremes(u_minus=max(neg), u_plus=min(pos))
