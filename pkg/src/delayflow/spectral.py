"""Spectral analysis of the stiffness matrix A(t) = hess F(t, 0).

Everything downstream hangs off two scalars of the minimal-eigenvalue curve
lambda_1(t): the critical time t_c (first zero of lambda_1, loss of strict
stability) and the delayed time t* (first positive zero of the primitive
Lambda(t) = int_0^t lambda_1), which is where trajectories started near the
origin actually leave it.  Profiles are sampled on a grid for reporting and
bracketing; all roots are then polished by bisection on fresh eigenvalue
evaluations, never on interpolants.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import HypothesisError, SpectralError
from .models import EnergyModel
from .quadrature import adaptive_simpson

QUAD_TOL = 1e-8          # absolute tolerance for the eigenvalue primitive
ROOT_TOL_LAMBDA = 1e-10  # |lambda_1| at the reported critical time
ROOT_TOL_PRIMITIVE = 1e-8


def lambda1(model: EnergyModel, t: float) -> float:
    """Minimal eigenvalue of the stiffness matrix at time t (fresh solve)."""
    a = model.stiffness(t)
    try:
        return float(np.linalg.eigvalsh(a)[0])
    except np.linalg.LinAlgError as exc:
        raise SpectralError(f"eigenvalue solve failed: {exc}", t=t) from exc


@dataclass
class SpectralProfile:
    """Grid-sampled spectrum of A(t) with a continuity-matched leading vector.

    lambdas[k] holds the ascending eigenvalues at grid[k]; e1[k] is the
    eigenvector of the minimal eigenvalue, matched through near-degeneracies
    by maximal overlap with the previous grid point and sign-fixed so
    consecutive vectors have positive inner product.
    """

    model: EnergyModel
    grid: np.ndarray
    lambdas: np.ndarray
    e1: np.ndarray
    gap: np.ndarray
    drift: np.ndarray
    lambda_perp: np.ndarray
    rho_window: float
    _cum: np.ndarray | None = field(default=None, repr=False)
    _cum_err: np.ndarray | None = field(default=None, repr=False)

    @property
    def lambda1(self) -> np.ndarray:
        return self.lambdas[:, 0]

    def lambda1_at(self, t: float) -> float:
        return lambda1(self.model, t)

    def e1_at(self, t: float) -> np.ndarray:
        """Leading eigenvector at arbitrary t, aligned with the t=0 branch."""
        vals, vecs = np.linalg.eigh(self.model.stiffness(t))
        cols = np.where(vals <= vals[0] + 1e-9 * (1.0 + abs(vals[0])))[0]
        ref = self.e1[0]
        best = max(cols, key=lambda j: abs(float(vecs[:, j] @ ref)))
        v = vecs[:, best]
        return -v if float(v @ ref) < 0.0 else v

    def lambda_perp_at(self, t: float) -> float:
        """Minimal eigenvalue of A(t) restricted to the complement of e1(0)."""
        if self.model.n == 1:
            return np.inf
        q = _complement_basis(self.e1[0])
        a = self.model.stiffness(t)
        return float(np.linalg.eigvalsh(q.T @ a @ q)[0])

    def _cumulative(self) -> tuple[np.ndarray, np.ndarray]:
        if self._cum is None:
            vals = np.zeros(len(self.grid))
            errs = np.zeros(len(self.grid))
            for k in range(1, len(self.grid)):
                v, e = adaptive_simpson(self.lambda1_at, self.grid[k - 1],
                                        self.grid[k], tol=QUAD_TOL / len(self.grid))
                vals[k] = vals[k - 1] + v
                errs[k] = errs[k - 1] + e
            self._cum = vals
            self._cum_err = errs
        return self._cum, self._cum_err


def _complement_basis(v: np.ndarray) -> np.ndarray:
    n = len(v)
    q, _ = np.linalg.qr(np.column_stack([v, np.eye(n)]))
    return q[:, 1:n]


def spectral_profile(model: EnergyModel, grid,
                     rho_window: float | None = None) -> SpectralProfile:
    """Sample the spectrum of A(t) on a grid (an int means uniform on [0, T])."""
    if np.isscalar(grid):
        grid = np.linspace(0.0, model.T, int(grid))
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 3 or np.any(np.diff(grid) <= 0):
        raise SpectralError("grid must be strictly increasing with >= 3 points")
    n = model.n
    k = len(grid)
    lambdas = np.zeros((k, n))
    e1 = np.zeros((k, n))
    for i, t in enumerate(grid):
        vals, vecs = np.linalg.eigh(model.stiffness(t))
        lambdas[i] = vals
        near = np.where(vals <= vals[0] + 1e-9 * (1.0 + abs(vals[0])))[0]
        if i == 0:
            v = vecs[:, 0]
            # deterministic orientation: largest-magnitude component positive
            if v[int(np.argmax(np.abs(v)))] < 0.0:
                v = -v
        else:
            prev = e1[i - 1]
            best = max(near, key=lambda j: abs(float(vecs[:, j] @ prev)))
            v = vecs[:, best]
            if float(v @ prev) < 0.0:
                v = -v
        e1[i] = v
    gap = (lambdas[:, 1] - lambdas[:, 0]) if n > 1 else np.full(k, np.inf)
    drift = 1.0 - np.abs(e1 @ e1[0])
    if n > 1:
        q = _complement_basis(e1[0])
        lambda_perp = np.array([
            float(np.linalg.eigvalsh(q.T @ model.stiffness(t) @ q)[0])
            for t in grid])
    else:
        lambda_perp = np.full(k, np.inf)
    rho = 0.1 * model.T if rho_window is None else float(rho_window)
    return SpectralProfile(model=model, grid=grid, lambdas=lambdas, e1=e1,
                           gap=gap, drift=drift, lambda_perp=lambda_perp,
                           rho_window=rho)


def lambda1_primitive(profile: SpectralProfile, t: float) -> tuple[float, float]:
    """Lambda(t) = int_0^t lambda_1, with the quadrature error estimate."""
    grid = profile.grid
    if t < grid[0] - 1e-12:
        raise SpectralError(f"time {t} precedes the profile grid", t=t)
    cum, cum_err = profile._cumulative()
    j = int(np.searchsorted(grid, t, side="right")) - 1
    j = min(max(j, 0), len(grid) - 1)
    tail, tail_err = adaptive_simpson(profile.lambda1_at, grid[j], t, tol=QUAD_TOL)
    return cum[j] + tail, cum_err[j] + tail_err


def _bisect(fun, lo: float, hi: float, span: float) -> float:
    flo = fun(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= 1e-14 * span:
            return mid
        fm = fun(mid)
        if fm == 0.0:
            return mid
        if (flo > 0.0) == (fm > 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def critical_time(profile: SpectralProfile) -> float | None:
    """First zero of lambda_1 on the profile grid span, or None.

    Requires strict stability at the left end; the root is polished by
    bisection until |lambda_1| <= 1e-10.
    """
    lam = profile.lambda1
    grid = profile.grid
    if lam[0] <= 0.0:
        raise HypothesisError(
            f"trivial equilibrium is not strictly stable at t={grid[0]:g} "
            f"(lambda_1 = {lam[0]:.3e})")
    idx = np.where(lam <= 0.0)[0]
    if len(idx) == 0:
        return None
    k = int(idx[0])
    root = _bisect(profile.lambda1_at, grid[k - 1], grid[k], grid[-1] - grid[0])
    if abs(profile.lambda1_at(root)) > ROOT_TOL_LAMBDA:
        raise SpectralError(
            f"critical-time bisection stalled at t={root} with "
            f"lambda_1 = {profile.lambda1_at(root):.3e}", t=root)
    return root


@dataclass(frozen=True)
class StabilityTimes:
    """Critical and delayed times of a profile, with diagnostics."""

    t_c: float | None
    t_star: float | None
    lambda1_at_tstar: float | None
    primitive_error: float
    note: str = ""


def blowup_time(profile: SpectralProfile) -> StabilityTimes:
    """Locate t*: the first positive zero of Lambda(t) past the critical time.

    If Lambda only touches zero (a double root on the horizon), no jump time
    is defined: t_star is None and the note names the touch point.  The same
    holds when lambda_1 never vanishes or Lambda stays positive.
    """
    t_c = critical_time(profile)
    if t_c is None:
        return StabilityTimes(None, None, None, 0.0,
                              "lambda_1 never vanishes on the horizon")
    grid = profile.grid
    cum, cum_err = profile._cumulative()

    def primitive(t: float) -> float:
        return lambda1_primitive(profile, t)[0]

    beyond = np.where(grid > t_c)[0]
    for k in beyond:
        if cum[k] <= 0.0:
            root = _bisect(primitive, grid[k - 1], grid[k], grid[-1] - grid[0])
            val, err = lambda1_primitive(profile, root)
            if abs(val) > ROOT_TOL_PRIMITIVE:
                raise SpectralError(
                    f"delayed-time bisection stalled with Lambda = {val:.3e}",
                    t=root)
            return StabilityTimes(t_c, root, profile.lambda1_at(root), err)

    # No sign change: check for a tangency where lambda_1 returns through 0
    # while Lambda bottoms out at (numerically) zero.
    lam = profile.lambda1
    for k in beyond[1:]:
        if lam[k - 1] < 0.0 <= lam[k]:
            t_m = _bisect(profile.lambda1_at, grid[k - 1], grid[k],
                          grid[-1] - grid[0])
            val, err = lambda1_primitive(profile, t_m)
            if val <= ROOT_TOL_PRIMITIVE:
                return StabilityTimes(
                    t_c, None, None, err,
                    f"primitive touches zero at t={t_m:.6g} without crossing; "
                    "delayed time undefined (degenerate tangency)")
    return StabilityTimes(t_c, None, None, float(cum_err[-1]),
                          "primitive stays positive on the horizon")


@dataclass(frozen=True)
class EigenspaceReport:
    """Gap and drift of the leading eigenvector over the working window."""

    ok: bool
    gap_min: float
    drift_max: float
    window_end: float
    drift_tol: float


def check_fixed_eigenspace(profile: SpectralProfile,
                           drift_tol: float = 1e-8) -> EigenspaceReport:
    """Verify the leading eigenvector stays put on [0, min(T, t* + rho)].

    Fails when the spectral gap closes or when e1(t) rotates away from
    e1(0) by more than drift_tol (measured as 1 - |<e1(t), e1(0)>|).
    """
    times = blowup_time(profile)
    end = profile.grid[-1]
    if times.t_star is not None:
        end = min(end, times.t_star + profile.rho_window)
    mask = profile.grid <= end + 1e-12
    gap_min = float(np.min(profile.gap[mask]))
    drift_max = float(np.max(profile.drift[mask]))
    ok = gap_min > 0.0 and drift_max <= drift_tol
    return EigenspaceReport(ok=ok, gap_min=gap_min, drift_max=drift_max,
                            window_end=float(end), drift_tol=drift_tol)


@dataclass(frozen=True)
class NondegeneracyReport:
    """Invertibility of A(t*) plus the signature data the jump logic needs."""

    ok: bool
    det: float
    sv_min: float
    lambda1: float
    n_negative: int


def check_nondegeneracy(model: EnergyModel, t_star: float,
                        tol: float = 1e-10) -> NondegeneracyReport:
    a = model.stiffness(t_star)
    svals = np.linalg.svd(a, compute_uv=False)
    eigs = np.linalg.eigvalsh(a)
    scale = 1.0 + float(svals[0]) if len(svals) else 1.0
    sv_min = float(svals[-1])
    return NondegeneracyReport(
        ok=sv_min > tol * scale,
        det=float(np.linalg.det(a)),
        sv_min=sv_min,
        lambda1=float(eigs[0]),
        n_negative=int(np.sum(eigs < 0.0)),
    )
