"""Command-line driver: validate, analyze, critical, sweep, heteroclinic.

Configs are JSON or TOML files with a common schema (see `delayflow
defaults`); every summary artifact is deterministic byte-for-byte for a
fixed config: JSON with sorted keys, no timestamps, and the sha256 of the
effective config embedded so results can be traced to their inputs.
Floats in CSV output carry 17 significant digits, enough to round-trip.

Exit codes: 0 success, 2 configuration error, 3 failed hypothesis or
missing structure, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (AmbiguityError, ConfigError, DelayflowError, DomainError,
                     HypothesisError, NotFoundError)
from .integrate import SolveOptions
from .limits import (auto_mu, estimate_limit_curve, predict_jump_target,
                     run_epsilon_sweep, verify_delay)
from .models import model_from_spec, validate_assumptions
from .spectral import blowup_time, check_fixed_eigenspace, check_nondegeneracy, \
    spectral_profile

_DEFAULTS = {
    "model": {"name": "quartic", "n": 1, "t_c": 0.5, "T": 1.5},
    "grid_points": 301,
    "rho_window": None,
    "eps": [1e-2, 1e-3],
    "alpha": 1.0,
    "sign": 1,
    "mu": None,
    "mu_rule": "auto",
    "box": [-2.0, 2.0],
    "rtol": 1e-8,
    "atol": 1e-10,
    "time": None,
    "delta0": 1e-6,
    "out": None,
}


def default_config() -> dict:
    return json.loads(json.dumps(_DEFAULTS))


def load_config(path: str | None) -> dict:
    cfg = default_config()
    if path is None:
        return cfg
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    text = p.read_bytes()
    try:
        if p.suffix.lower() == ".toml":
            try:
                import tomllib
            except ImportError:  # Python 3.10
                import tomli as tomllib
            loaded = tomllib.loads(text.decode("utf-8"))
        else:
            loaded = json.loads(text.decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(loaded, dict):
        raise ConfigError(f"config root must be a table/object, got "
                          f"{type(loaded).__name__}")
    unknown = set(loaded) - set(cfg)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg.update(loaded)
    return cfg


def config_digest(cfg: dict) -> str:
    return hashlib.sha256(
        json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def build_model(cfg: dict):
    spec = dict(cfg["model"])
    if "name" not in spec:
        raise ConfigError("config model table needs a 'name'")
    name = spec.pop("name")
    return model_from_spec(name, spec)


def build_profile(model, cfg: dict):
    return spectral_profile(model, int(cfg["grid_points"]),
                            rho_window=cfg["rho_window"])


def solve_options(cfg: dict) -> SolveOptions:
    return SolveOptions(rtol=float(cfg["rtol"]), atol=float(cfg["atol"]))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, float) and (obj != obj):  # NaN has no JSON spelling
        return None
    return obj


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(payload), sort_keys=True, indent=2)
                    + "\n", encoding="utf-8")


def write_csv(path: Path, header: list[str], rows) -> None:
    import csv

    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_jsonl(path: Path, records) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(_jsonable(rec), sort_keys=True,
                                separators=(",", ":")) + "\n")


def _summary(cfg: dict, command: str, payload: dict) -> dict:
    return {"tool": "delayflow", "version": __version__, "command": command,
            "config_sha256": config_digest(cfg), **payload}


def _out_dir(cfg: dict, args) -> Path | None:
    out = getattr(args, "out", None) or cfg.get("out")
    return Path(out) if out else None


# ---------------------------------------------------------------------------
# Subcommands


def cmd_validate(cfg: dict, args) -> int:
    model = build_model(cfg)
    grid = np.linspace(0.0, model.T, int(cfg["grid_points"]))
    report = validate_assumptions(model, grid, cfg["box"])
    rows = [
        ("trivial equilibrium", report.equilibrium_ok,
         f"max |grad F(t,0)| = {report.equilibrium_residual:.3e}"),
        ("coercivity (sampled)", report.coercivity_ok, ""),
        ("growth bound fit", True,
         f"c1 = {report.growth_constants[0]:.6g}, "
         f"c2 = {report.growth_constants[1]:.6g}, "
         f"slack = {report.growth_slack:.3e}"),
        ("isolation at t*", report.isolation_ok,
         "" if report.isolation_ok is not None else "skipped"),
        ("fixed leading eigenspace", report.eigenspace_ok,
         f"gap_min = {report.eigen_gap_min:.6g}, "
         f"drift_max = {report.eigen_drift_max:.3e}"),
        ("nondegeneracy at t*", report.nondegenerate_ok,
         "" if report.nondegenerate_ok is not None else "skipped"),
    ]
    for name, ok, extra in rows:
        tag = "PASS" if ok else ("SKIP" if ok is None else "FAIL")
        print(f"{tag:<5} {name}" + (f"  ({extra})" if extra else ""))
    if report.notes:
        print(f"notes: {report.notes}")
    out = _out_dir(cfg, args)
    if out:
        write_json(out / "validate.json", _summary(cfg, "validate", {
            "model": model.name,
            "equilibrium_ok": report.equilibrium_ok,
            "equilibrium_residual": report.equilibrium_residual,
            "coercivity_ok": report.coercivity_ok,
            "growth_constants": list(report.growth_constants),
            "growth_slack": report.growth_slack,
            "isolation_ok": report.isolation_ok,
            "eigenspace_ok": report.eigenspace_ok,
            "eigen_gap_min": report.eigen_gap_min,
            "eigen_drift_max": report.eigen_drift_max,
            "nondegenerate_ok": report.nondegenerate_ok,
            "t_c": report.t_c,
            "t_star": report.t_star,
            "notes": report.notes,
        }))
    return 0 if report.mandatory_ok else 3


def cmd_analyze(cfg: dict, args) -> int:
    model = build_model(cfg)
    profile = build_profile(model, cfg)
    times = blowup_time(profile)
    eig = check_fixed_eigenspace(profile)
    print(f"model: {model.name} (n = {model.n}, horizon T = {model.T:g})")
    print(f"critical time t_c = "
          + (f"{times.t_c:.12g}" if times.t_c is not None else "undefined"))
    print(f"delayed time  t* = "
          + (f"{times.t_star:.12g}" if times.t_star is not None else "undefined"))
    if times.note:
        print(f"note: {times.note}")
    print(f"leading eigenspace: gap_min = {eig.gap_min:.6g}, "
          f"drift_max = {eig.drift_max:.3e} -> "
          + ("fixed" if eig.ok else "NOT fixed"))
    payload: dict = {
        "model": model.name, "n": model.n, "horizon": model.T,
        "t_c": times.t_c, "t_star": times.t_star,
        "lambda1_at_tstar": times.lambda1_at_tstar,
        "primitive_error": times.primitive_error,
        "note": times.note,
        "eigenspace_ok": eig.ok, "gap_min": eig.gap_min,
        "drift_max": eig.drift_max,
    }
    if times.t_star is not None:
        nondeg = check_nondegeneracy(model, times.t_star)
        mu_rep = auto_mu(model, profile, times.t_star, box=cfg["box"])
        print(f"A(t*): {nondeg.n_negative} negative direction(s), "
              f"sv_min = {nondeg.sv_min:.6g}")
        print(f"working radius mu = {mu_rep.mu:.12g}")
        payload.update({
            "nondegenerate_ok": nondeg.ok, "sv_min": nondeg.sv_min,
            "n_negative": nondeg.n_negative, "mu": mu_rep.mu,
            "r_isolation": mu_rep.r_isolation,
            "r_remainder": mu_rep.r_remainder,
        })
    out = _out_dir(cfg, args)
    if out:
        write_json(out / "analyze.json", _summary(cfg, "analyze", payload))
        header = (["t"] + [f"lambda_{i + 1}" for i in range(model.n)]
                  + ["gap", "drift", "lambda_perp"])
        rows = [[t, *profile.lambdas[k], profile.gap[k], profile.drift[k],
                 profile.lambda_perp[k]]
                for k, t in enumerate(profile.grid)]
        write_csv(out / "profile.csv", header, rows)
    return 0


def cmd_critical(cfg: dict, args) -> int:
    from .critical import find_critical_points

    model = build_model(cfg)
    t = args.time if args.time is not None else cfg["time"]
    if t is None:
        profile = build_profile(model, cfg)
        times = blowup_time(profile)
        if times.t_star is None:
            raise HypothesisError(
                "no --time given and the profile defines no delayed time")
        t = times.t_star
    t = float(t)
    cps = find_critical_points(model, t, cfg["box"])
    print(f"{len(cps)} critical point(s) of F({t:g}, .) "
          f"(converged seeds: {cps.converged_fraction:.0%})")
    for p in cps:
        loc = ", ".join(f"{v: .10g}" for v in p.location)
        print(f"  [{loc}]  {p.kind}  F = {p.energy:.10g}")
    out = _out_dir(cfg, args)
    if out:
        header = ([f"x{i + 1}" for i in range(model.n)]
                  + ["energy", "grad_norm"]
                  + [f"hess_eig{i + 1}" for i in range(model.n)] + ["kind"])
        rows = [[*p.location, p.energy, p.grad_norm, *p.hess_eigs, p.kind]
                for p in cps]
        write_csv(out / "critical.csv", header, rows)
        write_json(out / "critical.json", _summary(cfg, "critical", {
            "model": model.name, "time": t,
            "count": len(cps),
            "converged_fraction": cps.converged_fraction,
            "points": [{"location": p.location, "energy": p.energy,
                        "grad_norm": p.grad_norm, "hess_eigs": p.hess_eigs,
                        "kind": p.kind} for p in cps],
        }))
    return 0


def cmd_sweep(cfg: dict, args) -> int:
    model = build_model(cfg)
    profile = build_profile(model, cfg)
    eps_list = [float(e) for e in cfg["eps"]]
    result = run_epsilon_sweep(
        model, profile, eps_list, alpha=float(cfg["alpha"]),
        sign=int(cfg["sign"]), mu=cfg["mu"], mu_rule=cfg["mu_rule"],
        opts=solve_options(cfg))
    report = verify_delay(result.estimates, result.times)
    print(f"model: {model.name}, mu = {result.mu:.10g}, "
          f"t_c = {result.times.t_c:.10g}, t* = {result.times.t_star:.10g}")
    for e in result.estimates:
        if e.t_hit is not None:
            print(f"  eps = {e.eps:.3e}:  t_hit = {e.t_hit:.10g}  "
                  f"(t_hit - t_c = {e.t_hit - result.times.t_c:.6g})")
        else:
            print(f"  eps = {e.eps:.3e}:  no hit ({e.note})")
    if report.confidence == "none":
        raise HypothesisError("no run reached the working radius; "
                              "delay cannot be assessed")
    print(f"extrapolated hit = {report.extrapolated_hit:.10g} "
          f"(coefficient {report.coefficient:.6g}, "
          f"max residual {report.max_residual:.3e})")
    print("verdict: " + ("DELAYED past t_c" if report.delayed
                         else "no verified delay"))
    out = _out_dir(cfg, args)
    if out:
        header = (["eps", "t_half", "t_hit"]
                  + [f"u{i + 1}_at_hit" for i in range(model.n)] + ["note"])
        rows = []
        for e in result.estimates:
            state = list(e.state_at_hit) if e.state_at_hit is not None \
                else [None] * model.n
            rows.append([e.eps, e.t_half, e.t_hit, *state, e.note])
        write_csv(out / "sweep.csv", header, rows)
        events = []
        for e in result.estimates:
            if e.trajectory is None:
                continue
            for ev in e.trajectory.events:
                events.append({"eps": e.eps, "name": ev.name,
                               "time": ev.time, "state": ev.state,
                               "log_radius": ev.log_radius})
        write_jsonl(out / "events.jsonl", events)
        write_json(out / "sweep.json", _summary(cfg, "sweep", {
            "model": model.name,
            "eps": list(result.eps_list), "alpha": result.alpha,
            "sign": result.sign, "mu": result.mu,
            "t_c": result.times.t_c, "t_star": result.times.t_star,
            "span": list(result.span),
            "runs": [{"eps": e.eps, "t_half": e.t_half, "t_hit": e.t_hit,
                      "state_at_hit": e.state_at_hit, "note": e.note}
                     for e in result.estimates],
            "delay": {"delayed": report.delayed,
                      "extrapolated_hit": report.extrapolated_hit,
                      "coefficient": report.coefficient,
                      "max_residual": report.max_residual,
                      "n_points": report.n_points,
                      "confidence": report.confidence},
        }))
    return 0


def cmd_heteroclinic(cfg: dict, args) -> int:
    model = build_model(cfg)
    profile = build_profile(model, cfg)
    prediction = predict_jump_target(model, profile, sign=int(cfg["sign"]))
    het = prediction.heteroclinic
    target = ", ".join(f"{v:.10g}" for v in prediction.target)
    print(f"t* = {prediction.t_star:.10g}, sign = {prediction.sign:+d}")
    print(f"jump target u_plus(t*) = [{target}]  ({prediction.kind})")
    out = _out_dir(cfg, args)
    if out:
        header = ["s"] + [f"w{i + 1}" for i in range(model.n)]
        rows = [[t, *het.trajectory.states[k]]
                for k, t in enumerate(het.trajectory.times)]
        write_csv(out / "heteroclinic.csv", header, rows)
        write_json(out / "heteroclinic.json", _summary(cfg, "heteroclinic", {
            "model": model.name, "t_star": prediction.t_star,
            "sign": prediction.sign, "delta0": het.delta0,
            "target": prediction.target, "kind": prediction.kind,
            "settle_time": het.trajectory.t_end,
            "unstable_direction": het.unstable_direction,
        }))
    return 0


def cmd_defaults(cfg: dict, args) -> int:
    print(json.dumps(default_config(), sort_keys=True, indent=2))
    return 0


# ---------------------------------------------------------------------------


def _apply_overrides(cfg: dict, args) -> None:
    if getattr(args, "model", None):
        cfg["model"] = {"name": args.model,
                        **{k: v for k, v in cfg["model"].items() if k != "name"}}
    if getattr(args, "eps_list", None):
        try:
            cfg["eps"] = [float(v) for v in args.eps_list.split(",") if v]
        except ValueError as exc:
            raise ConfigError(f"bad --eps-list: {exc}") from exc
    for key in ("alpha", "sign", "mu", "mu_rule"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="delayflow",
        description="Delayed loss of stability in slowly forced gradient flows")
    parser.add_argument("--version", action="version",
                        version=f"delayflow {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("-c", "--config", help="JSON or TOML config file")
        p.add_argument("--out", help="directory for result artifacts")

    common(sub.add_parser("validate", help="check the standing hypotheses"))
    common(sub.add_parser("analyze", help="spectral profile, t_c and t*"))
    p_crit = sub.add_parser("critical", help="critical points at a fixed time")
    common(p_crit)
    p_crit.add_argument("--time", type=float, help="frozen time (default t*)")
    p_sweep = sub.add_parser("sweep", help="hitting times over a list of eps")
    common(p_sweep)
    p_sweep.add_argument("--model", help="override model name")
    p_sweep.add_argument("--eps-list", help="comma-separated eps values")
    p_sweep.add_argument("--alpha", type=float)
    p_sweep.add_argument("--sign", type=int, choices=(-1, 1))
    p_sweep.add_argument("--mu", type=float)
    p_sweep.add_argument("--mu-rule", choices=("auto",))
    common(sub.add_parser("heteroclinic",
                          help="frozen connection and jump target at t*"))
    sub.add_parser("defaults", help="print the default config")
    return parser


_COMMANDS = {
    "validate": cmd_validate,
    "analyze": cmd_analyze,
    "critical": cmd_critical,
    "sweep": cmd_sweep,
    "heteroclinic": cmd_heteroclinic,
    "defaults": cmd_defaults,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(getattr(args, "config", None))
        _apply_overrides(cfg, args)
        return _COMMANDS[args.command](cfg, args)
    except (ConfigError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (HypothesisError, NotFoundError, AmbiguityError) as exc:
        print(f"hypothesis failure: {exc}", file=sys.stderr)
        return 3
    except DelayflowError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
