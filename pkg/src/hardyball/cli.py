"""Command-line entry point: configuration ingestion, run orchestration,
deterministic persistence, and sweep parallelism.

Exit codes: 0 success, 1 configuration error, 2 inadmissible parameters,
3 solver failure."""

from __future__ import annotations

import argparse
import hashlib
import itertools
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone

import numpy as np

from . import blowup as blowup_mod
from . import verify as verify_mod
from .bridge import (EuclideanProblem, b_origin, b_weight, coercivity_lambda0,
                     euclidean_potential, h_conformal, CoercivityFailure)
from .constants import (AdmissibilityError, ProblemParams, admissibility,
                        best_constant_estimate, beta_pm, critical_exponent,
                        exponent_set)
from .grids import RadialFunction, RadialGrid
from .kernel import (green_density, green_G, hyperbolic_dirichlet_energy,
                     sphere_area, weight_V_p)
from .solver import (ContinuationSchedule, ProfileData, SolutionProfile,
                     SolverError, continuation_to_critical,
                     solve_dirichlet_shooting, solve_limit_equation,
                     solve_variational)
from .verify import asymptotic_exponent, hardy_check, pohozaev_residual

__version__ = "0.1.0"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INADMISSIBLE = 2
EXIT_SOLVER = 3


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# deterministic serialization

def format17(x: float) -> str:
    """Floating-point text with 17 significant digits (round-trip exact)."""
    return format(float(x), ".17g")


def dumps17(obj, indent: int = 0) -> str:
    """Canonical JSON: sorted keys, floats at 17 significant digits."""
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        rows = [f'{pad}  {json.dumps(str(k))}: {dumps17(obj[k], indent + 1)}'
                for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(rows) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        rows = [f"{pad}  {dumps17(v, indent + 1)}" for v in seq]
        return "[\n" + ",\n".join(rows) + f"\n{pad}]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x) or math.isinf(x):
            return "null"
        return format17(x)
    if obj is None:
        return "null"
    return json.dumps(str(obj))


def write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def write_profile_csv(path: str, data: ProfileData) -> None:
    lines = ["r,v,dv"]
    for r, v, dv in zip(data.r, data.v, data.dv):
        lines.append(f"{format17(r)},{format17(v)},{format17(dv)}")
    write_text(path, "\n".join(lines) + "\n")


def read_profile_csv(path: str) -> ProfileData:
    raw = np.loadtxt(path, delimiter=",", skiprows=1)
    return ProfileData(r=raw[:, 0], v=raw[:, 1], dv=raw[:, 2])


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def update_manifest(outdir: str, files: list, config_text: str,
                    seed: int) -> str:
    """Record every output file with its checksum; entries from earlier
    commands in the same directory are preserved."""
    path = os.path.join(outdir, "manifest.json")
    entries = {}
    if os.path.exists(path):
        try:
            entries = json.load(open(path)).get("files", {})
        except (json.JSONDecodeError, OSError):
            entries = {}
    for name in files:
        full = os.path.join(outdir, name)
        entries[name] = {"sha256": _sha256(full),
                         "bytes": os.path.getsize(full)}
    manifest = {
        "version": __version__,
        "config_sha256": hashlib.sha256(
            config_text.encode("utf-8")).hexdigest(),
        "seed": int(seed),
        "written_utc": datetime.now(timezone.utc).isoformat(),
        "files": entries,
    }
    write_text(path, dumps17(manifest) + "\n")
    return path


# ---------------------------------------------------------------------------
# configuration

_PARAM_KEYS = {"n", "s", "gamma", "lam", "theta", "c", "p_defect"}
_PARAM_REQUIRED = {"n", "s", "gamma"}
_SOLVER_DEFAULTS = {
    "domain_radius": 0.5,
    "method": "shooting",        # shooting | variational
    "grid_num": 1600,
    "r0": None,
    "node_target": 0,
    "K_range": [1e-4, 1e6],
    "boundary_tol": 1e-8,
    "rtol": 1e-11,
    "schedule": [0.4, 0.2, 0.1, 0.05, 0.025, 0.0125, 0.0],
    "annulus": None,             # pohozaev annulus for verify
    "fit_window": None,          # exponent-fit window for verify
    "bubble_decades": 8.0,
    "coercivity": False,
}
_OUTPUT_DEFAULTS = {"directory": "out", "formats": ["csv", "json"]}
_SWEEP_KEYS = {"gamma", "s", "lam", "p_defect", "node_target"}


def _check_keys(block: dict, allowed: set, name: str) -> None:
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {name}: "
                          + ", ".join(sorted(unknown)))


def load_config(path: str) -> dict:
    if path is None:
        raise ConfigError("--config is required for this command")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be an object")
    _check_keys(cfg, {"params", "solver", "output", "sweep"}, "config")
    params = cfg.get("params")
    if not isinstance(params, dict):
        raise ConfigError("missing required section: params")
    _check_keys(params, _PARAM_KEYS, "params")
    missing = _PARAM_REQUIRED - set(params)
    if missing:
        raise ConfigError("missing required params key(s): "
                          + ", ".join(sorted(missing)))
    solver = dict(_SOLVER_DEFAULTS)
    _check_keys(cfg.get("solver", {}), set(_SOLVER_DEFAULTS), "solver")
    solver.update(cfg.get("solver", {}))
    output = dict(_OUTPUT_DEFAULTS)
    _check_keys(cfg.get("output", {}), set(_OUTPUT_DEFAULTS), "output")
    output.update(cfg.get("output", {}))
    sweep = cfg.get("sweep")
    if sweep is not None:
        _check_keys(sweep, _SWEEP_KEYS, "sweep")
        for key, grid in sweep.items():
            if not isinstance(grid, list) or not grid:
                raise ConfigError(f"sweep.{key} must be a non-empty list")
    return {"params": params, "solver": solver, "output": output,
            "sweep": sweep}


def make_params(cfg: dict) -> ProblemParams:
    block = cfg["params"]
    try:
        return ProblemParams(
            n=int(block["n"]), s=float(block["s"]),
            gamma=float(block["gamma"]), lam=float(block.get("lam", 0.0)),
            theta=float(block.get("theta", 0.0)),
            c=float(block.get("c", 1.0)),
            p_defect=float(block.get("p_defect", 0.0)))
    except (TypeError, KeyError) as exc:
        raise ConfigError(f"bad params block: {exc}") from exc


def make_problem(cfg: dict, params: ProblemParams) -> EuclideanProblem:
    return EuclideanProblem(params,
                            domain_radius=float(
                                cfg["solver"]["domain_radius"]))


def _outdir(cfg: dict, args) -> str:
    out = args.out if args.out else cfg["output"]["directory"]
    os.makedirs(out, exist_ok=True)
    return out


def _config_text(cfg: dict, seed: int) -> str:
    return dumps17({"config": cfg, "seed": int(seed)})


def _sidecar(profile: SolutionProfile, extra: dict = None) -> dict:
    doc = {
        "params": profile.params.as_dict(),
        "p_defect": profile.p_defect,
        "K0": profile.K0,
        "node_count": profile.node_count,
        "energy": profile.energy,
        "residual_norm": profile.residual_norm,
        "boundary_value": profile.boundary_value,
        "diverged": profile.diverged,
        "meta": {k: v for k, v in profile.meta.items()
                 if isinstance(v, (int, float, str, bool))},
    }
    if extra:
        doc.update(extra)
    return doc


def read_profile(outdir: str, stem: str) -> tuple:
    """Rebuild (SolutionProfile, EuclideanProblem) from a CSV + sidecar
    written by an earlier command in the same directory."""
    csv_path = os.path.join(outdir, stem + ".csv")
    json_path = os.path.join(outdir, stem + ".json")
    if not (os.path.exists(csv_path) and os.path.exists(json_path)):
        raise ConfigError(f"no stored profile {stem!r} in {outdir}")
    data = read_profile_csv(csv_path)
    doc = json.load(open(json_path))
    pd = doc["params"]
    params = ProblemParams(n=int(pd["n"]), s=pd["s"], gamma=pd["gamma"],
                           lam=pd["lam"], theta=pd["theta"], c=pd["c"],
                           p_defect=doc["p_defect"])
    problem = EuclideanProblem(params,
                               domain_radius=doc.get("domain_radius",
                                                     float(data.r[-1])))
    prof = SolutionProfile(
        data=data, params=params, p_defect=doc["p_defect"], K0=doc["K0"],
        node_count=doc["node_count"], energy=doc["energy"],
        residual_norm=(doc["residual_norm"]
                       if doc["residual_norm"] is not None else math.nan),
        boundary_value=doc["boundary_value"], diverged=doc["diverged"],
        meta=dict(doc.get("meta", {})))
    return prof, problem


# ---------------------------------------------------------------------------
# subcommands

def cmd_constants(cfg: dict, args) -> int:
    params = make_params(cfg)
    exps = exponent_set(params.n, params.s, params.gamma)
    doc = {
        "params": params.as_dict(),
        "exponents": exps.as_dict(),
        "admissibility": admissibility(params),
        "best_constant": best_constant_estimate(params.n, params.s,
                                                params.gamma),
    }
    text = dumps17(doc)
    print(text)
    if args.out:
        out = _outdir(cfg, args)
        write_text(os.path.join(out, "constants.json"), text + "\n")
        update_manifest(out, ["constants.json"], _config_text(cfg, args.seed),
                        args.seed)
    return EXIT_OK


def cmd_weights(cfg: dict, args) -> int:
    params = make_params(cfg)
    n, s = params.n, params.s
    q = critical_exponent(n, s)
    out = _outdir(cfg, args)
    r = np.geomspace(1e-6, 1.0 - 1e-6, int(cfg["solver"]["grid_num"]))
    rows = ["r,f,G,V2,Vq"]
    G = green_G(r, n)
    f = green_density(r, n)
    V2 = weight_V_p(r, n, 2.0)
    Vq = weight_V_p(r, n, q)
    for vals in zip(r, f, G, V2, Vq):
        rows.append(",".join(format17(v) for v in vals))
    write_text(os.path.join(out, "weights.csv"), "\n".join(rows) + "\n")
    doc = {"n": n, "s": s, "critical_exponent": q,
           "origin_limit_4r2_V2": float(V2[0] * 4.0 * r[0] ** 2),
           "surface_constant": sphere_area(n)}
    write_text(os.path.join(out, "weights.json"), dumps17(doc) + "\n")
    update_manifest(out, ["weights.csv", "weights.json"],
                    _config_text(cfg, args.seed), args.seed)
    print(dumps17(doc))
    return EXIT_OK


def cmd_bridge(cfg: dict, args) -> int:
    params = make_params(cfg)
    beta_pm(params.n, params.gamma)     # raises above the threshold
    problem = make_problem(cfg, params)
    out = _outdir(cfg, args)
    R = problem.domain_radius
    r = np.geomspace(1e-6, R, int(cfg["solver"]["grid_num"]))
    rows = ["r,h,b,W"]
    for ri in r:
        rows.append(",".join(format17(v) for v in (
            ri, float(problem.h(ri)), float(problem.b(ri)),
            euclidean_potential(ri, params.n, params.gamma, params.lam))))
    write_text(os.path.join(out, "bridge.csv"), "\n".join(rows) + "\n")
    doc = {
        "b_origin": b_origin(params.n, params.s),
        "h_exact_at_R_half": h_conformal(R * 0.5, params.n, params.gamma,
                                         params.lam),
        "b_at_origin_weight": b_weight(1e-8, params.n, params.s),
        "domain_radius": R,
    }
    if cfg["solver"]["coercivity"]:
        try:
            doc["coercivity_lambda0"] = coercivity_lambda0(problem)
        except CoercivityFailure as exc:
            raise SolverError(str(exc)) from exc
    write_text(os.path.join(out, "bridge.json"), dumps17(doc) + "\n")
    update_manifest(out, ["bridge.csv", "bridge.json"],
                    _config_text(cfg, args.seed), args.seed)
    print(dumps17(doc))
    return EXIT_OK


def _solve_one(cfg: dict, params: ProblemParams,
               problem: EuclideanProblem) -> SolutionProfile:
    sol = cfg["solver"]
    if sol["method"] == "variational":
        return solve_variational(params, problem, params.p_defect,
                                 r0=sol["r0"], num=int(sol["grid_num"]))
    return solve_dirichlet_shooting(
        params, problem, params.p_defect,
        node_target=int(sol["node_target"]),
        K_range=tuple(sol["K_range"]), boundary_tol=sol["boundary_tol"],
        r0=sol["r0"], rtol=sol["rtol"])


def cmd_solve(cfg: dict, args) -> int:
    params = make_params(cfg)
    problem = make_problem(cfg, params)
    prof = _solve_one(cfg, params, problem)
    out = _outdir(cfg, args)
    write_profile_csv(os.path.join(out, "profile.csv"), prof.data)
    doc = _sidecar(prof, {"domain_radius": problem.domain_radius})
    write_text(os.path.join(out, "profile.json"), dumps17(doc) + "\n")
    update_manifest(out, ["profile.csv", "profile.json"],
                    _config_text(cfg, args.seed), args.seed)
    print(dumps17({"energy": prof.energy, "K0": prof.K0,
                   "node_count": prof.node_count,
                   "residual_norm": prof.residual_norm}))
    return EXIT_OK


def cmd_bubble(cfg: dict, args) -> int:
    params = make_params(cfg)
    beta_pm(params.n, params.gamma)
    out = _outdir(cfg, args)
    bub = solve_limit_equation(params.n, params.s, params.gamma,
                               b_origin(params.n, params.s),
                               decades=float(cfg["solver"]["bubble_decades"]))
    write_profile_csv(os.path.join(out, "bubble.csv"), bub.data)
    doc = {"n": bub.n, "s": bub.s, "gamma": bub.gamma, "b0": bub.b0,
           "K_minus": bub.K_minus, "K_plus": bub.K_plus,
           "psi_peak": bub.psi_peak}
    write_text(os.path.join(out, "bubble.json"), dumps17(doc) + "\n")
    update_manifest(out, ["bubble.csv", "bubble.json"],
                    _config_text(cfg, args.seed), args.seed)
    print(dumps17(doc))
    return EXIT_OK


def cmd_continue(cfg: dict, args) -> int:
    params = make_params(cfg)
    problem = make_problem(cfg, params)
    schedule = ContinuationSchedule(tuple(cfg["solver"]["schedule"]))
    profiles = continuation_to_critical(
        params, problem, schedule,
        node_target=int(cfg["solver"]["node_target"]),
        K_range=tuple(cfg["solver"]["K_range"]))
    if not profiles:
        raise SolverError("continuation produced no profiles")
    out = _outdir(cfg, args)
    files = []
    steps = []
    for idx, prof in enumerate(profiles):
        stem = f"continuation_{idx:02d}"
        write_profile_csv(os.path.join(out, stem + ".csv"), prof.data)
        doc = _sidecar(prof, {"domain_radius": problem.domain_radius})
        write_text(os.path.join(out, stem + ".json"), dumps17(doc) + "\n")
        files += [stem + ".csv", stem + ".json"]
        steps.append({"p_defect": prof.p_defect, "stem": stem,
                      "energy": prof.energy,
                      "weighted_sup": prof.meta.get("weighted_sup"),
                      "sup_increment": prof.meta.get("sup_increment"),
                      "h1_norm_sq": prof.meta.get("h1_norm_sq")})
    summary = {"params": params.as_dict(), "steps": steps,
               "domain_radius": problem.domain_radius,
               "completed": len(profiles) == len(schedule.p_values)}
    write_text(os.path.join(out, "continuation.json"),
               dumps17(summary) + "\n")
    files.append("continuation.json")
    update_manifest(out, files, _config_text(cfg, args.seed), args.seed)
    print(dumps17({"steps": len(steps), "completed": summary["completed"]}))
    return EXIT_OK


def cmd_blowup(cfg: dict, args) -> int:
    params = make_params(cfg)
    out = _outdir(cfg, args)
    summary_path = os.path.join(out, "continuation.json")
    if not os.path.exists(summary_path):
        raise ConfigError(f"no stored continuation in {out}")
    summary = json.load(open(summary_path))
    profiles = []
    for step in summary["steps"]:
        prof, _ = read_profile(out, step["stem"])
        profiles.append(prof)
    verdict = blowup_mod.compactness_verdict(profiles, params)
    last = profiles[-1]
    scales = blowup_mod.detect_scales(last, last.p_defect)
    verdict["detected_scales"] = [list(pair) for pair in scales]
    files = []
    if scales:
        fam = blowup_mod.BubbleFamily.from_scales(
            [mu for mu, _ in scales], last.p_defect, params)
        rep = blowup_mod.envelope_check(last, fam)
        verdict["envelope_constant"] = rep.constant
        rows = ["r_lo,r_hi,max_ratio"]
        for lo, hi, ratio in rep.annuli:
            rows.append(",".join(format17(v) for v in (lo, hi, ratio)))
        write_text(os.path.join(out, "envelope.csv"), "\n".join(rows) + "\n")
        files.append("envelope.csv")
    write_text(os.path.join(out, "blowup.json"), dumps17(verdict) + "\n")
    files.append("blowup.json")
    update_manifest(out, files, _config_text(cfg, args.seed), args.seed)
    print(dumps17({"verdict": verdict["verdict"],
                   "scales": len(scales)}))
    return EXIT_OK


def cmd_verify(cfg: dict, args) -> int:
    params = make_params(cfg)
    out = _outdir(cfg, args)
    prof, problem = read_profile(out, "profile")
    report = verify_mod.VerificationReport(
        provenance={"stem": "profile", "directory": out,
                    "seed": int(args.seed)})
    R = problem.domain_radius
    annulus = cfg["solver"]["annulus"] or [1e-3 * R, R]
    po = pohozaev_residual(prof, problem, tuple(annulus))
    report.add("pohozaev_relative_residual", po.relative, 1e-4)
    window = cfg["solver"]["fit_window"] or [prof.data.r[0] * 10.0,
                                             prof.data.r[0] * 100.0]
    bm, _ = beta_pm(params.n, params.gamma)
    slope, stderr = asymptotic_exponent(prof, tuple(window))
    report.add("asymptotic_slope_error", slope - (-bm),
               0.02 * abs(bm) + 2.0 * stderr)
    report.add("energy_positive", prof.energy, math.inf,
               passed=prof.energy > 0.0)
    # sampled hyperbolic Hardy margins
    rng = np.random.default_rng(int(args.seed))
    grid = RadialGrid.geometric(1e-6, 0.99, 600)
    worst_rel = math.inf
    # compactly supported samples: tails must clear the clipping level
    # inside the grid, otherwise the truncated singular mass is meaningless
    for _ in range(20):
        center = rng.uniform(math.log(1e-3), math.log(0.05))
        width = rng.uniform(0.2, 0.5)
        vals = np.exp(-((grid.log_nodes - center) / width) ** 2)
        vals[vals < 1e-14] = 0.0
        u = RadialFunction(grid, vals)
        margin = hardy_check(u, params.n)
        rhs = hyperbolic_dirichlet_energy(u, params.n)
        worst_rel = min(worst_rel, margin / rhs)
    report.add("hardy_margin_min_relative", worst_rel, math.inf,
               passed=worst_rel >= -1e-8)
    doc = report.as_dict()
    write_text(os.path.join(out, "verify.json"), dumps17(doc) + "\n")
    rows = ["name,value,tolerance,passed"]
    for check in doc["checks"]:
        rows.append(f'{check["name"]},{format17(check["value"])},'
                    f'{format17(check["tolerance"])},{int(check["passed"])}')
    write_text(os.path.join(out, "verify.csv"), "\n".join(rows) + "\n")
    update_manifest(out, ["verify.json", "verify.csv"],
                    _config_text(cfg, args.seed), args.seed)
    print(dumps17({"passed": doc["passed"],
                   "checks": len(doc["checks"])}))
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep

def _sweep_row(task: tuple) -> dict:
    index, base_cfg, overrides = task
    row = {"index": index}
    row.update(overrides)
    cfg = {"params": dict(base_cfg["params"]),
           "solver": dict(base_cfg["solver"]),
           "output": dict(base_cfg["output"]), "sweep": None}
    for key, val in overrides.items():
        if key == "node_target":
            cfg["solver"]["node_target"] = val
        else:
            cfg["params"][key] = val
    row.update({"gamma": cfg["params"]["gamma"], "s": cfg["params"]["s"],
                "lam": cfg["params"].get("lam", 0.0),
                "p_defect": cfg["params"].get("p_defect", 0.0),
                "node_target": cfg["solver"]["node_target"]})
    try:
        params = make_params(cfg)
        problem = make_problem(cfg, params)
        prof = _solve_one(cfg, params, problem)
        bm, _ = beta_pm(params.n, params.gamma)
        window = (prof.data.r[0] * 10.0, prof.data.r[0] * 100.0)
        try:
            slope, stderr = asymptotic_exponent(prof, window)
        except verify_mod.VerificationError:
            slope, stderr = math.nan, math.nan
        R = problem.domain_radius
        po = pohozaev_residual(prof, problem, (1e-3 * R, R))
        row.update({"status": "ok", "energy": prof.energy, "K0": prof.K0,
                    "node_count": prof.node_count, "slope": slope,
                    "slope_target": -bm, "slope_stderr": stderr,
                    "pohozaev_relative": po.relative, "message": ""})
    except AdmissibilityError as exc:
        row.update({"status": "inadmissible", "message": str(exc)})
    except (SolverError, verify_mod.VerificationError) as exc:
        row.update({"status": "failed", "message": str(exc)})
    return row


_SWEEP_COLUMNS = ["index", "gamma", "s", "lam", "p_defect", "node_target",
                  "status", "energy", "K0", "node_count", "slope",
                  "slope_target", "slope_stderr", "pohozaev_relative",
                  "message"]


def cmd_sweep(cfg: dict, args) -> int:
    if not cfg["sweep"]:
        raise ConfigError("missing required section: sweep")
    base_params = cfg["params"]
    axes = []
    for key in ["gamma", "s", "lam", "p_defect", "node_target"]:
        if key in cfg["sweep"]:
            axes.append((key, list(cfg["sweep"][key])))
    combos = list(itertools.product(*[vals for _, vals in axes]))
    tasks = []
    for index, combo in enumerate(combos):
        overrides = {key: val for (key, _), val in zip(axes, combo)}
        tasks.append((index, cfg, overrides))
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_sweep_row, tasks))
    else:
        rows = [_sweep_row(task) for task in tasks]
    rows.sort(key=lambda row: row["index"])

    out = _outdir(cfg, args)
    lines = [",".join(_SWEEP_COLUMNS)]
    for row in rows:
        cells = []
        for col in _SWEEP_COLUMNS:
            val = row.get(col, base_params.get(col, ""))
            if isinstance(val, bool):
                cells.append(str(int(val)))
            elif isinstance(val, (float, np.floating)):
                cells.append(format17(val))
            elif isinstance(val, (int, np.integer)):
                cells.append(str(int(val)))
            else:
                cells.append(json.dumps(str(val))
                             if "," in str(val) else str(val))
        lines.append(",".join(cells))
    write_text(os.path.join(out, "sweep.csv"), "\n".join(lines) + "\n")
    ok = sum(1 for row in rows if row["status"] == "ok")
    doc = {"rows": len(rows), "succeeded": ok,
           "failed": len(rows) - ok}
    write_text(os.path.join(out, "sweep.json"), dumps17(doc) + "\n")
    update_manifest(out, ["sweep.csv", "sweep.json"],
                    _config_text(cfg, args.seed), args.seed)
    print(dumps17(doc))
    return EXIT_OK if ok else EXIT_SOLVER


# ---------------------------------------------------------------------------

_COMMANDS = {
    "constants": cmd_constants,
    "weights": cmd_weights,
    "bridge": cmd_bridge,
    "solve": cmd_solve,
    "bubble": cmd_bubble,
    "continue": cmd_continue,
    "blowup": cmd_blowup,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hardyball",
        description="Radial laboratory for a singular Dirichlet problem "
                    "and its conformal reduction.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True,
                       help="path to the JSON run configuration")
        p.add_argument("--out", default=None,
                       help="output directory (overrides the config)")
        p.add_argument("--workers", type=int, default=1,
                       help="worker processes for sweeps")
        p.add_argument("--seed", type=int, default=0,
                       help="seed for randomized checks (u64)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if not (0 <= args.seed < 2 ** 64):
            raise ConfigError("--seed must fit in an unsigned 64-bit value")
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AdmissibilityError as exc:
        print(f"inadmissible parameters: {exc}", file=sys.stderr)
        return EXIT_INADMISSIBLE
    except (SolverError, CoercivityFailure) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
