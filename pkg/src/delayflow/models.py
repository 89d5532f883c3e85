"""Time-dependent energies F(t, x) and their standing-hypothesis validators.

An :class:`EnergyModel` bundles analytic evaluators for the scalar energy
F(t, x), its spatial gradient and Hessian, and the time derivative dF/dt.
The gradient flow studied everywhere else in this package is

    eps * du/dt = -grad_x F(t, u(t)),   t in [0, T],

whose trivial equilibrium u = 0 (grad_x F(t, 0) = 0 for all t) loses strict
local minimality at the critical time t_c but keeps attracting trajectories
until the delayed time t* where the running integral of the minimal Hessian
eigenvalue returns to zero.  Built-in benchmark families (quartic well,
commuting family, rotating negative control, user polynomial tables) are
constructed here with closed-form derivatives.

Analytic gradients and Hessians are required, not optional: the stiff
implicit integrator Newton-solves with the exact Hessian, and finite
differences are used only as a cross-check in the validators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConstructionError, EvaluationError

Array = np.ndarray


@dataclass(frozen=True)
class EnergyModel:
    """Evaluatable time-dependent energy with analytic derivatives.

    Fields f, grad_f, hess_f, dt_f are callables of (t, x) with x an
    n-vector; they must be pure and cheap enough to call inside Newton
    loops.  Instances are immutable and safe to share across workers.
    """

    n: int
    T: float
    f: Callable[[float, Array], float]
    grad_f: Callable[[float, Array], Array]
    hess_f: Callable[[float, Array], Array]
    dt_f: Callable[[float, Array], float]
    name: str = "energy"

    def _vec(self, x) -> Array:
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            x = x.reshape(1)
        if x.shape != (self.n,):
            raise EvaluationError(
                f"state has shape {x.shape}, expected ({self.n},)", x=x)
        return x

    def energy(self, t: float, x) -> float:
        x = self._vec(x)
        val = float(self.f(t, x))
        if not math.isfinite(val):
            raise EvaluationError(f"non-finite energy at t={t}", t=t, x=x)
        return val

    def gradient(self, t: float, x) -> Array:
        x = self._vec(x)
        g = np.asarray(self.grad_f(t, x), dtype=float).reshape(self.n)
        if not np.all(np.isfinite(g)):
            raise EvaluationError(f"non-finite gradient at t={t}", t=t, x=x)
        return g

    def hessian(self, t: float, x) -> Array:
        x = self._vec(x)
        h = np.asarray(self.hess_f(t, x), dtype=float).reshape(self.n, self.n)
        if not np.all(np.isfinite(h)):
            raise EvaluationError(f"non-finite Hessian at t={t}", t=t, x=x)
        return h

    def dt(self, t: float, x) -> float:
        x = self._vec(x)
        val = float(self.dt_f(t, x))
        if not math.isfinite(val):
            raise EvaluationError(f"non-finite dF/dt at t={t}", t=t, x=x)
        return val

    def stiffness(self, t: float) -> Array:
        """Hessian at the trivial equilibrium, A(t) = hess F(t, 0)."""
        return self.hessian(t, np.zeros(self.n))

    def remainder(self, t: float, x) -> Array:
        """Nonlinear part of the gradient: grad F(t,x) - A(t) x.

        Vanishes to first order at 0; its norm is o(|x|) for C^2 energies.
        """
        x = self._vec(x)
        return self.gradient(t, x) - self.stiffness(t) @ x


# Thin functional aliases for the evaluator contract.

def evaluate(model: EnergyModel, t: float, x) -> float:
    return model.energy(t, x)


def gradient(model: EnergyModel, t: float, x) -> Array:
    return model.gradient(t, x)


def remainder(model: EnergyModel, t: float, x) -> Array:
    return model.remainder(t, x)


# ---------------------------------------------------------------------------
# Built-in families


def make_quartic_family(n: int, t_c: float, T: float) -> EnergyModel:
    """Quartic well with one destabilizing direction.

    F(t, x) = (t_c - t) x_1^2 / 2 + sum_{i>=2} x_i^2 / 2 + |x|^4 / 4.

    The stiffness matrix is diag(t_c - t, 1, ..., 1), so the minimal
    eigenvalue is t_c - t with fixed eigenvector e_1, the critical time is
    t_c, and the running integral t_c*t - t^2/2 vanishes again at 2*t_c.
    """
    if n < 1 or T <= 0 or not (0 < t_c):
        raise ConstructionError(f"invalid quartic parameters n={n}, t_c={t_c}, T={T}")
    w0 = np.ones(n)

    def weights(t: float) -> Array:
        w = w0.copy()
        w[0] = t_c - t
        return w

    def f(t, x):
        return 0.5 * float(weights(t) @ (x * x)) + 0.25 * float(x @ x) ** 2

    def grad(t, x):
        return weights(t) * x + (x @ x) * x

    def hess(t, x):
        return np.diag(weights(t)) + (x @ x) * np.eye(n) + 2.0 * np.outer(x, x)

    def dt(t, x):
        return -0.5 * float(x[0]) ** 2

    return EnergyModel(n=n, T=float(T), f=f, grad_f=grad, hess_f=hess,
                       dt_f=dt, name=f"quartic-{n}d")


def _poly_and_derivative(coeffs: Sequence[float]):
    c = np.asarray(coeffs, dtype=float)
    dc = c[1:] * np.arange(1, len(c))

    def p(t: float) -> float:
        return float(np.polyval(c[::-1], t))

    def dp(t: float) -> float:
        return float(np.polyval(dc[::-1], t)) if len(dc) else 0.0

    return p, dp


def make_commuting_family(base, phi, T: float,
                          phi_prime: Callable[[float], float] | None = None,
                          name: str = "commuting") -> EnergyModel:
    """Perturbation-of-identity family with a fixed eigenbasis.

    F(t, x) = <(I - phi(t) base) x, x> / 2 + |x|^4 / 4, base symmetric.
    All stiffness matrices commute, so eigenvectors never rotate.  `phi`
    may be a sequence of polynomial coefficients (constant term first), in
    which case its derivative is formed exactly, or a callable paired with
    an explicit `phi_prime`.
    """
    base = np.asarray(base, dtype=float)
    if base.ndim != 2 or base.shape[0] != base.shape[1]:
        raise ConstructionError("base must be a square matrix")
    if not np.allclose(base, base.T, atol=1e-12):
        raise ConstructionError("base must be symmetric")
    n = base.shape[0]
    if callable(phi):
        if phi_prime is None:
            raise ConstructionError("callable phi requires an explicit phi_prime")
        p, dp = phi, phi_prime
    else:
        p, dp = _poly_and_derivative(phi)
    eye = np.eye(n)

    def stiff(t: float) -> Array:
        return eye - p(t) * base

    def f(t, x):
        return 0.5 * float(x @ (stiff(t) @ x)) + 0.25 * float(x @ x) ** 2

    def grad(t, x):
        return stiff(t) @ x + (x @ x) * x

    def hess(t, x):
        return stiff(t) + (x @ x) * eye + 2.0 * np.outer(x, x)

    def dt(t, x):
        return -0.5 * dp(t) * float(x @ (base @ x))

    return EnergyModel(n=n, T=float(T), f=f, grad_f=grad, hess_f=hess,
                       dt_f=dt, name=name)


def make_rotating_family(omega: float, T: float, t_c: float = 0.5) -> EnergyModel:
    """Negative control: the eigenframe rotates at rate omega.

    A(t) = R(omega t) diag(t_c - t, 1) R(omega t)^T keeps the spectrum of
    the quartic 2-d family but rotates e_1(t), so the fixed-eigenspace
    check must reject it (drift 1 - |cos(omega t)|).
    """
    if omega == 0:
        return make_quartic_family(2, t_c, T)
    eye = np.eye(2)
    d_prime = np.diag([-1.0, 0.0])

    def rot(t: float) -> Array:
        c, s = math.cos(omega * t), math.sin(omega * t)
        return np.array([[c, -s], [s, c]])

    def stiff(t: float) -> Array:
        r = rot(t)
        return r @ np.diag([t_c - t, 1.0]) @ r.T

    def stiff_dt(t: float) -> Array:
        r = rot(t)
        j = np.array([[0.0, -1.0], [1.0, 0.0]])
        a = stiff(t)
        return omega * (j @ a - a @ j) + r @ d_prime @ r.T

    def f(t, x):
        return 0.5 * float(x @ (stiff(t) @ x)) + 0.25 * float(x @ x) ** 2

    def grad(t, x):
        return stiff(t) @ x + (x @ x) * x

    def hess(t, x):
        return stiff(t) + (x @ x) * eye + 2.0 * np.outer(x, x)

    def dt(t, x):
        return 0.5 * float(x @ (stiff_dt(t) @ x))

    return EnergyModel(n=2, T=float(T), f=f, grad_f=grad, hess_f=hess,
                       dt_f=dt, name=f"rotating-w{omega:g}")


@dataclass(frozen=True)
class PolynomialTerm:
    """One monomial c * p(t) * prod_i x_i^m_i of a polynomial energy."""

    time_coeffs: tuple[float, ...]  # p(t), constant term first
    powers: tuple[int, ...]         # multi-index m
    coeff: float


def make_polynomial_model(n: int, T: float,
                          terms: Sequence[PolynomialTerm | tuple],
                          name: str = "polynomial") -> EnergyModel:
    """Energy from a coefficient table.

    Each entry contributes coeff * p(t) * prod x_i^m_i, with p given by its
    polynomial coefficients (constant first).  Derivatives are formed
    exactly, so the table is a full citizen of the stiff solver.
    """
    parsed: list[PolynomialTerm] = []
    for entry in terms:
        if not isinstance(entry, PolynomialTerm):
            tc, pw, c = entry
            entry = PolynomialTerm(tuple(float(v) for v in tc),
                                   tuple(int(v) for v in pw), float(c))
        if len(entry.powers) != n:
            raise ConstructionError(
                f"multi-index {entry.powers} does not match dimension {n}")
        if any(p < 0 for p in entry.powers):
            raise ConstructionError("negative exponents are not allowed")
        parsed.append(entry)
    if not parsed:
        raise ConstructionError("polynomial model needs at least one term")

    polys = [_poly_and_derivative(term.time_coeffs) for term in parsed]

    def f(t, x):
        total = 0.0
        for term, (p, _) in zip(parsed, polys):
            total += term.coeff * p(t) * float(np.prod(x ** np.array(term.powers)))
        return total

    def grad(t, x):
        g = np.zeros(n)
        for term, (p, _) in zip(parsed, polys):
            scale = term.coeff * p(t)
            for j, mj in enumerate(term.powers):
                if mj == 0:
                    continue
                m = np.array(term.powers)
                m[j] -= 1
                g[j] += scale * mj * float(np.prod(x ** m))
        return g

    def hess(t, x):
        h = np.zeros((n, n))
        for term, (p, _) in zip(parsed, polys):
            scale = term.coeff * p(t)
            for j, mj in enumerate(term.powers):
                if mj == 0:
                    continue
                for k, mk in enumerate(term.powers):
                    m = np.array(term.powers)
                    if j == k:
                        if mj < 2:
                            continue
                        m[j] -= 2
                        h[j, j] += scale * mj * (mj - 1) * float(np.prod(x ** m))
                    else:
                        if mk == 0:
                            continue
                        m[j] -= 1
                        m[k] -= 1
                        h[j, k] += scale * mj * mk * float(np.prod(x ** m))
        return h

    def dt(t, x):
        total = 0.0
        for term, (_, dp) in zip(parsed, polys):
            total += term.coeff * dp(t) * float(np.prod(x ** np.array(term.powers)))
        return total

    return EnergyModel(n=n, T=float(T), f=f, grad_f=grad, hess_f=hess,
                       dt_f=dt, name=name)


def model_from_spec(name: str, params: dict) -> EnergyModel:
    """Build a model from its config-file description (name + parameters)."""
    try:
        if name == "quartic":
            return make_quartic_family(int(params.get("n", 1)),
                                       float(params.get("t_c", 0.5)),
                                       float(params.get("T", 1.5)))
        if name == "commuting":
            return make_commuting_family(params["base"], params["phi_coeffs"],
                                         float(params.get("T", 2.0)))
        if name == "rotating":
            return make_rotating_family(float(params.get("omega", 1.0)),
                                        float(params.get("T", 1.5)),
                                        float(params.get("t_c", 0.5)))
        if name == "polynomial":
            terms = [(e["time_coeffs"], e["powers"], e["coeff"])
                     for e in params["terms"]]
            return make_polynomial_model(int(params["n"]), float(params["T"]),
                                         terms)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConstructionError(f"bad parameters for model '{name}': {exc}") from exc
    raise ConstructionError(f"unknown model name '{name}'")


# ---------------------------------------------------------------------------
# Assumption validation


def as_box(box, n: int) -> Array:
    """Normalize a box spec to an (n, 2) array of (lo, hi) pairs."""
    b = np.asarray(box, dtype=float)
    if b.ndim == 1 and b.shape == (2,):
        b = np.tile(b, (n, 1))
    if b.shape != (n, 2) or np.any(b[:, 0] >= b[:, 1]):
        raise ConstructionError(f"invalid box {box!r} for dimension {n}")
    return b


@dataclass(frozen=True)
class ValidationTolerances:
    equilibrium_tol: float = 1e-10
    drift_tol: float = 1e-8
    nondegeneracy_tol: float = 1e-10
    isolation_tol: float = 1e-3
    quad_tol: float = 1e-8


@dataclass
class AssumptionReport:
    """Sampled verdicts on the standing hypotheses of the theory.

    Coercivity and the time-derivative growth bound can only be checked on
    a finite box; they are best-effort early-failure detectors, not proofs.
    """

    equilibrium_ok: bool
    equilibrium_residual: float
    coercivity_ok: bool
    growth_constants: tuple[float, float]
    growth_slack: float
    isolation_ok: bool | None
    eigenspace_ok: bool
    eigen_gap_min: float
    eigen_drift_max: float
    nondegenerate_ok: bool | None
    det_at_tstar: float | None
    lambda1_at_tstar: float | None
    t_c: float | None
    t_star: float | None
    notes: str = ""

    @property
    def mandatory_ok(self) -> bool:
        verdicts = [self.equilibrium_ok, self.coercivity_ok, self.eigenspace_ok]
        for v in (self.isolation_ok, self.nondegenerate_ok):
            if v is not None:
                verdicts.append(v)
        return all(verdicts)


def _growth_fit(samples_f: Array, samples_d: Array):
    """Least-slack (c1, c2) with c1*F + c2 >= |dF/dt| on every sample."""
    from scipy.optimize import linprog

    scale = float(np.mean(np.maximum(samples_f, 0.0))) + 1.0
    res = linprog(c=[scale, 1.0],
                  A_ub=np.column_stack([-samples_f, -np.ones_like(samples_f)]),
                  b_ub=-samples_d,
                  bounds=[(0, None), (0, None)],
                  method="highs")
    if not res.success:
        c1, c2 = 0.0, float(np.max(samples_d))
    else:
        c1, c2 = float(res.x[0]) + 0.0, float(res.x[1]) + 0.0
    slack = float(np.min(c1 * samples_f + c2 - samples_d))
    if slack < 0.0:
        c2 -= slack  # lift the envelope so the fit is valid by construction
        slack = float(np.min(c1 * samples_f + c2 - samples_d))
    return (c1, c2), slack


def _sample_lattice(box: Array, per_dim: int, rng: np.random.Generator | None) -> Array:
    n = box.shape[0]
    if per_dim ** n <= 4096:
        axes = [np.linspace(lo, hi, per_dim) for lo, hi in box]
        grids = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)
    rng = rng or np.random.default_rng(0)
    return rng.uniform(box[:, 0], box[:, 1], size=(4096, n))


def validate_assumptions(model: EnergyModel, grid, sample_box,
                         tolerances: ValidationTolerances | None = None,
                         rng: np.random.Generator | None = None) -> AssumptionReport:
    """Check the standing hypotheses by sampling.

    Trivial equilibrium on the grid; coercivity along box boundary rays;
    the growth bound |dF/dt| <= c1*F + c2 by least-slack fit over a box
    lattice; isolation of critical points at the delayed time; fixed
    leading eigenspace; nondegeneracy of the stiffness matrix at t*.
    """
    from . import spectral
    from .critical import find_critical_points

    tol = tolerances or ValidationTolerances()
    grid = np.asarray(grid, dtype=float)
    box = as_box(sample_box, model.n)
    notes: list[str] = []
    zero = np.zeros(model.n)

    eq_res = max(float(np.linalg.norm(model.gradient(t, zero))) for t in grid)
    equilibrium_ok = eq_res <= tol.equilibrium_tol

    # Coercivity probe: sup_t F must grow along every boundary ray.
    dirs = []
    for j in range(model.n):
        e = np.zeros(model.n)
        e[j] = 1.0
        dirs += [e, -e]
    corners = _sample_lattice(np.tile([[-1.0, 1.0]], (model.n, 1)),
                              2, rng)  # the 2^n sign corners
    dirs += [c / np.linalg.norm(c) for c in corners]
    t_sub = grid[:: max(1, len(grid) // 16)]
    coercivity_ok = True
    for d in dirs:
        radius = float(np.min(np.where(d > 0, box[:, 1], np.where(d < 0, -box[:, 0], np.inf)) /
                              np.maximum(np.abs(d), 1e-300)))
        far = max(float(np.max([model.energy(t, radius * d) for t in t_sub])), -np.inf)
        near = max(float(np.max([model.energy(t, 0.5 * radius * d) for t in t_sub])), -np.inf)
        if not far > near:
            coercivity_ok = False
            notes.append(f"no growth along ray {np.round(d, 3)}")
            break

    pts = _sample_lattice(box, 5, rng)
    fs, ds = [], []
    for t in t_sub:
        for x in pts:
            fs.append(model.energy(t, x))
            ds.append(abs(model.dt(t, x)))
    growth_constants, growth_slack = _growth_fit(np.asarray(fs), np.asarray(ds))

    profile = spectral.spectral_profile(model, grid)
    times = spectral.blowup_time(profile)
    a1 = spectral.check_fixed_eigenspace(profile, drift_tol=tol.drift_tol)

    if times.t_star is None:
        notes.append("delayed time undefined on this horizon; "
                     "isolation and nondegeneracy checks skipped")
        isolation_ok = None
        nondegenerate_ok = None
        det_at_tstar = None
        lambda1_at_tstar = None
    else:
        a2 = spectral.check_nondegeneracy(model, times.t_star,
                                          tol=tol.nondegeneracy_tol)
        nondegenerate_ok = a2.ok
        det_at_tstar = a2.det
        lambda1_at_tstar = a2.lambda1
        cps = find_critical_points(model, times.t_star, box)
        dists = [float(np.linalg.norm(p.location - q.location))
                 for i, p in enumerate(cps) for q in cps[i + 1:]]
        isolation_ok = (len(cps) == 1) or (min(dists) >= tol.isolation_tol)

    return AssumptionReport(
        equilibrium_ok=equilibrium_ok,
        equilibrium_residual=eq_res,
        coercivity_ok=coercivity_ok,
        growth_constants=growth_constants,
        growth_slack=growth_slack,
        isolation_ok=isolation_ok,
        eigenspace_ok=a1.ok,
        eigen_gap_min=a1.gap_min,
        eigen_drift_max=a1.drift_max,
        nondegenerate_ok=nondegenerate_ok,
        det_at_tstar=det_at_tstar,
        lambda1_at_tstar=lambda1_at_tstar,
        t_c=times.t_c,
        t_star=times.t_star,
        notes="; ".join(notes),
    )
