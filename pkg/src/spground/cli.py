"""Batch front-end: config files in, reports and field dumps out.

A run is described by one JSON document: grid, problem (family, exponent,
potential), optional solver options, and the experiment to perform.  The
experiment writes a JSON report plus CSV dumps into the output directory
and the process exit code states the outcome:

    0  success (converged solve, Certified certificate, clean check)
    2  certificate came back Inconclusive
    3  the solver stagnated or missed its tolerances
    4  configuration or input validation failed

Reports are deterministic: identical config and seed give byte-identical
report.json.  Timestamps and library versions live in run_meta.json,
which is excluded from any such comparison.  Floats are serialized with
17 significant digits so every value round-trips bit-exactly.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import sys
import time
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .critical import (
    BubbleParams,
    bubble_scaling_table,
    critical_level_certificate,
    cutoff_bubble,
    estimate_S,
    gradient_excess_slope,
    nonexistence_certificate,
)
from .energies import (
    CriticalPerturbed,
    CriticalPure,
    Potential,
    Subcritical,
    eval_energy,
    fiber_coefficients,
    gradient,
    h1_inner,
    make_problem,
    manifold_residual,
)
from .errors import SpgroundError, StagnationError, ValidationError
from .manifolds import fiber_scalar
from .poisson import brute_force_coulomb, coulomb_energy, potential_dirichlet_energy
from .radial import (
    MIN_INTERVALS,
    RadialField,
    RadialGrid,
    dilate,
    make_grid,
    volume_weights,
    write_field_csv,
)
from .solver import SolveOptions, continuation_c_of_V, solve_ground_state

__all__ = ["RunConfig", "parse_config", "run", "main"]

EXIT_OK = 0
EXIT_INCONCLUSIVE = 2
EXIT_STAGNATION = 3
EXIT_INVALID = 4

_EXPERIMENTS = (
    "solve",
    "certify-critical",
    "nonexistence",
    "bubbles",
    "continuation",
    "check",
)
_FAMILIES = ("subcritical", "critical-perturbed", "critical-pure")

# Experiments that accept a same-named options object in the config.
_SECTIONED = ("certify-critical", "bubbles", "continuation")


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class RunConfig:
    """A fully validated run description.

    Holds both the constructed objects (grid, family, potential, solver
    options) and the raw document they came from; the raw document is
    what reports embed and what to_json re-emits.
    """

    experiment: str
    grid: RadialGrid
    family: object
    potential: Potential
    solve_options: SolveOptions
    extras: dict
    raw: dict = field(repr=False)

    def to_json(self) -> str:
        return json.dumps(self.raw, indent=2, sort_keys=True)


def _is_real(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _check_keys(obj: dict, allowed, where: str, problems: list) -> None:
    for key in obj:
        if key not in allowed:
            problems.append(f"{where}: unknown key '{key}'")


def _get_real(obj, key, where, problems, positive=True):
    if key not in obj:
        problems.append(f"{where}.{key}: required")
        return None
    v = obj[key]
    if not _is_real(v) or not np.isfinite(v):
        problems.append(f"{where}.{key}: must be a finite number, got {v!r}")
        return None
    v = float(v)
    if positive and v <= 0.0:
        problems.append(f"{where}.{key}: must be positive, got {v:g}")
        return None
    return v


def _parse_grid(doc, problems):
    obj = doc.get("grid")
    if not isinstance(obj, dict):
        problems.append("grid: required object with keys R and N")
        return None
    _check_keys(obj, ("R", "N"), "grid", problems)
    R = _get_real(obj, "R", "grid", problems)
    N = obj.get("N")
    if not isinstance(N, int) or isinstance(N, bool) or N < MIN_INTERVALS:
        # mirror make_grid's floor so N complaints survive a bad R
        problems.append(f"grid.N: must be an integer >= {MIN_INTERVALS}, got {N!r}")
        N = None
    if R is None or N is None:
        return None
    try:
        return make_grid(R, N)
    except SpgroundError as exc:
        problems.append(f"grid: {exc}")
        return None


def _parse_family(obj, problems):
    fam = obj.get("family")
    if fam not in _FAMILIES:
        problems.append(
            f"problem.family: must be one of {', '.join(_FAMILIES)}, got {fam!r}"
        )
        return None
    if fam == "subcritical":
        if "q" in obj:
            problems.append("problem.q: not allowed for the subcritical family (use p)")
        p = _get_real(obj, "p", "problem", problems)
        if p is None:
            return None
        try:
            return Subcritical(p)
        except SpgroundError as exc:
            problems.append(f"problem.p: {exc}")
            return None
    if fam == "critical-perturbed":
        if "p" in obj:
            problems.append(
                "problem.p: not allowed for the critical-perturbed family (use q)"
            )
        q = _get_real(obj, "q", "problem", problems)
        if q is None:
            return None
        try:
            return CriticalPerturbed(q)
        except SpgroundError as exc:
            problems.append(f"problem.q: {exc}")
            return None
    for key in ("p", "q"):
        if key in obj:
            problems.append(f"problem.{key}: not allowed for the critical-pure family")
    return CriticalPure()


def _parse_potential(obj, grid, problems):
    spec = obj.get("potential")
    if not isinstance(spec, dict):
        problems.append("problem.potential: required object with a 'type' key")
        return None
    kind = spec.get("type")
    where = "problem.potential"
    try:
        if kind == "constant":
            _check_keys(spec, ("type", "value"), where, problems)
            v = _get_real(spec, "value", where, problems, positive=False)
            if v is None:
                return None
            return Potential.constant(v)
        if kind == "gaussian-well":
            _check_keys(spec, ("type", "base", "depth", "width"), where, problems)
            base = _get_real(spec, "base", where, problems)
            depth = _get_real(spec, "depth", where, problems, positive=False)
            width = _get_real(spec, "width", where, problems)
            if None in (base, depth, width):
                return None
            if grid is None:
                return None
            vals = base - depth * np.exp(-((grid.nodes / width) ** 2))
            return Potential.table(RadialField(grid, vals), base)
        if kind == "table":
            _check_keys(spec, ("type", "values", "v_infinity"), where, problems)
            vals = spec.get("values")
            vinf = _get_real(spec, "v_infinity", where, problems, positive=False)
            if not isinstance(vals, list) or not all(_is_real(v) for v in vals):
                problems.append(f"{where}.values: must be a list of numbers")
                return None
            if grid is None:
                return None
            if len(vals) != grid.N + 1:
                problems.append(
                    f"{where}.values: expected N+1 = {grid.N + 1} entries, got {len(vals)}"
                )
                return None
            if vinf is None:
                return None
            return Potential.table(RadialField(grid, np.array(vals, dtype=float)), vinf)
        problems.append(
            f"{where}.type: must be constant, gaussian-well, or table, got {kind!r}"
        )
        return None
    except ValidationError as exc:
        problems.extend(f"{where}: {m}" for m in exc.messages)
        return None


def _parse_solver(doc, problems):
    obj = doc.get("solver", {})
    if not isinstance(obj, dict):
        problems.append("solver: must be an object")
        return SolveOptions()
    allowed = (
        "max_iterations",
        "tol_gradient",
        "tol_manifold",
        "initial_step",
        "backtrack_factor",
        "seed",
        "allow_critical_pure",
    )
    _check_keys(obj, allowed, "solver", problems)
    kwargs = {}
    if "max_iterations" in obj:
        v = obj["max_iterations"]
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            problems.append(f"solver.max_iterations: must be a positive integer, got {v!r}")
        else:
            kwargs["max_iterations"] = v
    for key in ("tol_gradient", "tol_manifold", "initial_step"):
        if key in obj:
            v = _get_real(obj, key, "solver", problems)
            if v is not None:
                kwargs[key] = v
    if "backtrack_factor" in obj:
        v = _get_real(obj, "backtrack_factor", "solver", problems)
        if v is not None:
            if not v < 1.0:
                problems.append(
                    f"solver.backtrack_factor: must lie in (0, 1), got {v:g}"
                )
            else:
                kwargs["backtrack_factor"] = v
    if "seed" in obj:
        v = obj["seed"]
        if not isinstance(v, int) or isinstance(v, bool) or v < 0:
            problems.append(f"solver.seed: must be a nonnegative integer, got {v!r}")
        else:
            kwargs["seed"] = v
    if "allow_critical_pure" in obj:
        v = obj["allow_critical_pure"]
        if not isinstance(v, bool):
            problems.append(f"solver.allow_critical_pure: must be a boolean, got {v!r}")
        else:
            kwargs["allow_critical_pure"] = v
    return SolveOptions(**kwargs)


def _parse_eps_list(obj, key, where, problems, default):
    if key not in obj:
        return list(default)
    v = obj[key]
    if (
        not isinstance(v, list)
        or not v
        or not all(_is_real(e) and np.isfinite(e) and e > 0 for e in v)
    ):
        problems.append(f"{where}.{key}: must be a nonempty list of positive numbers")
        return None
    return [float(e) for e in v]


def _parse_extras(doc, experiment, grid, problems):
    extras = {}
    obj = doc.get(experiment, {})
    if not isinstance(obj, dict):
        problems.append(f"{experiment}: must be an object")
        obj = {}
    where = experiment
    if experiment == "certify-critical":
        _check_keys(obj, ("eps_list", "r_cut", "safety_margin"), where, problems)
        extras["eps_list"] = _parse_eps_list(
            obj, "eps_list", where, problems, (1e-5, 3e-5, 1e-4, 3e-4, 1e-3)
        )
        extras["r_cut"] = None
        if "r_cut" in obj:
            extras["r_cut"] = _get_real(obj, "r_cut", where, problems)
        extras["safety_margin"] = 0.0
        if "safety_margin" in obj:
            v = _get_real(obj, "safety_margin", where, problems, positive=False)
            if v is not None and v < 0.0:
                problems.append(f"{where}.safety_margin: must be nonnegative, got {v:g}")
            elif v is not None:
                extras["safety_margin"] = v
    elif experiment == "bubbles":
        _check_keys(obj, ("eps_list", "s_list", "r_cut"), where, problems)
        extras["eps_list"] = _parse_eps_list(
            obj, "eps_list", where, problems, np.geomspace(1e-3, 1e-1, 9)
        )
        s_list = obj.get("s_list", [2.0, 3.0, 4.0])
        if not isinstance(s_list, list) or not all(
            _is_real(s) and 2.0 <= s < 6.0 for s in s_list
        ):
            problems.append(f"{where}.s_list: must be a list of numbers in [2, 6)")
            s_list = None
        extras["s_list"] = s_list
        extras["r_cut"] = 2.0
        if "r_cut" in obj:
            v = _get_real(obj, "r_cut", where, problems)
            if v is not None:
                extras["r_cut"] = v
        if grid is not None and extras["r_cut"] is not None:
            if 2.0 * extras["r_cut"] > grid.R * (1.0 + 1e-12):
                problems.append(
                    f"{where}.r_cut: cutoff support [0, {2 * extras['r_cut']:g}] "
                    f"exceeds the grid radius {grid.R:g}"
                )
    elif experiment == "continuation":
        _check_keys(obj, ("shifts",), where, problems)
        shifts = obj.get("shifts", [0.0, 0.01, 0.1])
        if not isinstance(shifts, list) or not all(
            _is_real(s) and np.isfinite(s) and s >= 0.0 for s in shifts
        ):
            problems.append(f"{where}.shifts: must be a list of nonnegative numbers")
            shifts = None
        else:
            shifts = sorted(float(s) for s in shifts)
            if 0.0 not in shifts:
                shifts = [0.0] + shifts
        extras["shifts"] = shifts
    return extras


def parse_config(text: str) -> RunConfig:
    """Validate a JSON run description; collect every violation.

    Raises ValidationError carrying the full list of problems (unknown
    keys, missing fields, hypothesis violations such as the potential
    positivity bound), or json.JSONDecodeError for malformed JSON.
    """
    doc = json.loads(text)
    problems: list = []
    if not isinstance(doc, dict):
        raise ValidationError(["config: top level must be a JSON object"])

    experiment = doc.get("experiment")
    if experiment not in _EXPERIMENTS:
        problems.append(
            f"experiment: must be one of {', '.join(_EXPERIMENTS)}, got {experiment!r}"
        )
        experiment = None

    allowed = {"experiment", "grid", "problem", "solver"}
    if experiment in _SECTIONED:
        allowed.add(experiment)
    _check_keys(doc, allowed, "config", problems)

    grid = _parse_grid(doc, problems)

    prob_obj = doc.get("problem")
    family = potential = None
    if not isinstance(prob_obj, dict):
        problems.append("problem: required object (family, exponent, potential)")
    else:
        _check_keys(prob_obj, ("family", "p", "q", "potential"), "problem", problems)
        family = _parse_family(prob_obj, problems)
        potential = _parse_potential(prob_obj, grid, problems)

    opts = _parse_solver(doc, problems)

    extras = {}
    if experiment is not None:
        extras = _parse_extras(doc, experiment, grid, problems)

    # Cross-field requirements tying the experiment to the family.
    if experiment == "certify-critical" and not isinstance(family, CriticalPerturbed):
        problems.append(
            "certify-critical: requires problem.family critical-perturbed (the level "
            "being certified is the perturbed-critical one)"
        )
    if experiment == "nonexistence" and not isinstance(family, CriticalPure):
        problems.append("nonexistence: requires problem.family critical-pure")
    if experiment == "continuation" and isinstance(family, CriticalPure):
        problems.append("continuation: critical-pure has no level to continue in V")
    if (
        experiment == "solve"
        and isinstance(family, CriticalPure)
        and not opts.allow_critical_pure
    ):
        problems.append(
            "solve: critical-pure is a diagnostic mode; set solver.allow_critical_pure"
        )

    if problems:
        raise ValidationError(problems)
    return RunConfig(
        experiment=experiment,
        grid=grid,
        family=family,
        potential=potential,
        solve_options=opts,
        extras=extras,
        raw=doc,
    )


# ---------------------------------------------------------------------------
# report serialization

# json.dumps would serialize floats via repr; the report contract wants a
# fixed 17-significant-digit form, so walk the structure by hand.


def _json_scalar(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not np.isfinite(x):
            return json.dumps(repr(x))
        return format(x, ".17g")
    if x is None:
        return "null"
    if isinstance(x, str):
        return json.dumps(x)
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _serialize(obj, indent: int = 0) -> str:
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        parts = [
            f"{inner}{json.dumps(str(k))}: {_serialize(v, indent + 1)}"
            for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(parts) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        items = list(obj)
        if not items:
            return "[]"
        parts = [f"{inner}{_serialize(v, indent + 1)}" for v in items]
        return "[\n" + ",\n".join(parts) + "\n" + pad + "]"
    return _json_scalar(obj)


def _write_report(out_dir: Path, config: RunConfig, experiment: str, results: dict) -> None:
    report = {"experiment": experiment, "config": config.raw, "results": results}
    (out_dir / "report.json").write_text(_serialize(report) + "\n")


def _write_meta(out_dir: Path, t0: float) -> None:
    meta = {
        "written_at": datetime.now(timezone.utc).isoformat(),
        "runtime_seconds": time.time() - t0,
        "package_version": __version__,
        "numpy_version": np.__version__,
    }
    (out_dir / "run_meta.json").write_text(_serialize(meta) + "\n")


def _csv_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_csv_cell(v) for v in row])


# ---------------------------------------------------------------------------
# experiments


def _run_solve(config: RunConfig, out_dir: Path) -> int:
    prob = make_problem(config.family, config.potential, config.grid)
    try:
        report = solve_ground_state(prob, config.solve_options)
    except StagnationError as exc:
        _write_report(
            out_dir,
            config,
            "solve",
            {"stagnated": True, "error": str(exc), "diagnostic": dict(exc.diagnostic)},
        )
        return EXIT_STAGNATION
    results = report.summary_dict()
    results["history_tail"] = {
        key: list(map(float, report.history[key][-5:])) for key in ("energy", "grad_norm", "manifold")
    }
    if report.certificate is not None:
        results["certificate"] = {
            "value": report.certificate.value,
            "lower_bound": report.certificate.lower_bound,
        }
    _write_report(out_dir, config, "solve", results)
    write_field_csv(out_dir / "u_star.csv", report.u_star)
    write_field_csv(out_dir / "phi_star.csv", report.phi_star)
    _write_csv(
        out_dir / "history.csv",
        ["iteration", "energy", "grad_norm", "manifold", "r90"],
        [
            (i, e, gn, m, r)
            for i, (e, gn, m, r) in enumerate(
                zip(
                    report.history["energy"],
                    report.history["grad_norm"],
                    report.history["manifold"],
                    report.history["r90"],
                )
            )
        ],
    )
    if isinstance(config.family, CriticalPure):
        return EXIT_OK
    return EXIT_OK if report.converged else EXIT_STAGNATION


def _run_certify(config: RunConfig, out_dir: Path) -> int:
    cert = critical_level_certificate(
        config.family.q,
        config.potential,
        config.extras["eps_list"],
        config.grid,
        r_cut=config.extras["r_cut"],
        safety_margin=config.extras["safety_margin"],
    )
    results = {
        "best_bound": cert.best_bound,
        "threshold": cert.threshold,
        "verdict": cert.verdict,
        "margin": cert.margin,
        "S_estimate": cert.s_estimate,
        "per_epsilon": [dict(row) for row in cert.per_epsilon],
    }
    _write_report(out_dir, config, "certify-critical", results)
    _write_csv(
        out_dir / "sweep.csv",
        ["epsilon", "bound", "scale"],
        [(r["epsilon"], r["bound"], r["scale"]) for r in cert.per_epsilon],
    )
    return EXIT_OK if cert.verdict == "Certified" else EXIT_INCONCLUSIVE


def _run_nonexistence(config: RunConfig, out_dir: Path) -> int:
    prob = make_problem(config.family, config.potential, config.grid)
    opts = replace(config.solve_options, allow_critical_pure=True)
    report = solve_ground_state(prob, opts)
    cert = report.certificate
    r90 = report.history["r90"]
    results = {
        "certificate": None
        if cert is None
        else {"value": cert.value, "lower_bound": cert.lower_bound},
        "iterations": report.iterations,
        "converged": report.converged,
        "cap_terminated": report.iterations >= opts.max_iterations,
        "r90_initial": r90[0] if r90 else None,
        "r90_final": r90[-1] if r90 else None,
    }
    _write_report(out_dir, config, "nonexistence", results)
    write_field_csv(out_dir / "u_final.csv", report.u_star)
    _write_csv(
        out_dir / "concentration.csv",
        ["iteration", "r90"],
        list(enumerate(r90)),
    )
    ok = cert is not None and cert.value >= cert.lower_bound > 0.0
    return EXIT_OK if ok else 1


def _run_bubbles(config: RunConfig, out_dir: Path) -> int:
    grid = config.grid
    eps_list = config.extras["eps_list"]
    s_list = config.extras["s_list"]
    r_cut = config.extras["r_cut"]
    params = BubbleParams(eps_list[0], r_cut)
    s_est = estimate_S(grid)
    threshold = s_est**1.5 / 3.0
    rows = bubble_scaling_table(eps_list, s_list, params, grid)
    slope = gradient_excess_slope(eps_list, params, grid)
    best_bound = verdict = None
    if isinstance(config.family, CriticalPerturbed):
        cert = critical_level_certificate(
            config.family.q, config.potential, eps_list, grid, r_cut=r_cut
        )
        best_bound, verdict = cert.best_bound, cert.verdict
    results = {
        "S_estimate": s_est,
        "threshold": threshold,
        "best_bound": best_bound,
        "verdict": verdict,
        "gradient_excess_slope": slope,
        "scaling_laws": [
            {k: row[k] for k in ("s", "slope", "expected", "residual")} for row in rows
        ],
    }
    _write_report(out_dir, config, "bubbles", results)
    csv_rows = []
    for row in rows:
        for eps, nrm in zip(eps_list, row["norms"]):
            csv_rows.append((eps, row["s"], nrm, row["slope"]))
    _write_csv(out_dir / "bubbles.csv", ["epsilon", "s", "norm", "fitted_slope"], csv_rows)
    if verdict == "Inconclusive":
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def _run_continuation(config: RunConfig, out_dir: Path) -> int:
    prob = make_problem(config.family, config.potential, config.grid)
    shifts = config.extras["shifts"]
    try:
        pairs = continuation_c_of_V(config.potential, shifts, prob, config.solve_options)
    except StagnationError as exc:
        _write_report(
            out_dir,
            config,
            "continuation",
            {"stagnated": True, "error": str(exc), "diagnostic": dict(exc.diagnostic)},
        )
        return EXIT_STAGNATION
    levels = [lvl for _, lvl in pairs]
    base = levels[0]
    modulus = 0.0
    for (d, lvl) in pairs[1:]:
        modulus = max(modulus, abs(lvl - base) / d)
    monotone = all(b >= a - 1e-8 for a, b in zip(levels, levels[1:]))
    results = {
        "levels": [{"shift": d, "level": lvl} for d, lvl in pairs],
        "monotone": monotone,
        "continuity_modulus": modulus,
    }
    _write_report(out_dir, config, "continuation", results)
    _write_csv(out_dir / "levels.csv", ["shift", "level"], pairs)
    return EXIT_OK


def _check_battery() -> list:
    """Small self-contained invariant suite; each entry one property."""
    checks = []

    def record(name, metric, tol):
        checks.append(
            {"name": name, "metric": float(metric), "tolerance": float(tol), "passed": bool(metric <= tol)}
        )

    rng = np.random.default_rng(7)
    g = make_grid(16.0, 512)
    u = RadialField(g, np.exp(-((g.nodes - 2.0) ** 2)))
    record(
        "poisson-oracle-agreement",
        abs(coulomb_energy(u) - brute_force_coulomb(u)) / brute_force_coulomb(u),
        1e-6,
    )
    record(
        "poisson-energy-identity",
        abs(potential_dirichlet_energy(u) - coulomb_energy(u)) / coulomb_energy(u),
        1e-6,
    )
    gauss = RadialField(g, np.exp(-0.5 * g.nodes**2))
    tau = 1.3
    record(
        "dilation-coulomb-law",
        abs(coulomb_energy(dilate(gauss, tau)) - tau**3 * coulomb_energy(gauss))
        / coulomb_energy(gauss),
        1e-3,
    )
    prob = make_problem(Subcritical(3.0), Potential.constant(1.0), g)
    bump = RadialField(g, (1.0 + 0.3 * rng.standard_normal()) * np.exp(-0.7 * g.nodes**2))
    grad = gradient(bump, prob, metric="h1")
    eps = 1e-6
    direction = RadialField(g, np.exp(-((g.nodes - 1.0) ** 2)))
    plus = RadialField(g, bump.values + eps * direction.values)
    minus = RadialField(g, bump.values - eps * direction.values)
    fd = (eval_energy(plus, prob) - eval_energy(minus, prob)) / (2 * eps)
    record(
        "gradient-pairing",
        abs(h1_inner(grad, direction) - fd) / max(abs(fd), 1e-12),
        1e-5,
    )
    v = cutoff_bubble(BubbleParams(0.05, 4.0), g)
    w = volume_weights(g)
    record("bubble-normalization", abs(np.sum(w * v.values**6) - 1.0), 1e-12)
    cert = nonexistence_certificate(gauss, Potential.constant(1.0))
    record(
        "certificate-positivity",
        0.0 if cert.value >= cert.lower_bound > 0.0 else 1.0,
        0.5,
    )
    crit = make_problem(CriticalPerturbed(4.0), Potential.constant(1.0), g)
    t = fiber_scalar(v, crit)
    landed = RadialField(g, t * v.values)
    record(
        "fiber-scalar-lands",
        abs(manifold_residual(landed, crit, "nehari")) / fiber_coefficients(landed, crit).a,
        1e-10,
    )
    return checks


def _run_check(config, out_dir: Path) -> int:
    checks = _check_battery()
    results = {"checks": checks, "all_passed": all(c["passed"] for c in checks)}
    if config is not None:
        _write_report(out_dir, config, "check", results)
    else:
        report = {"experiment": "check", "config": None, "results": results}
        (out_dir / "report.json").write_text(_serialize(report) + "\n")
    _write_csv(
        out_dir / "checks.csv",
        ["name", "metric", "tolerance", "passed"],
        [(c["name"], c["metric"], c["tolerance"], c["passed"]) for c in checks],
    )
    return EXIT_OK if results["all_passed"] else 1


def run(config: RunConfig, out_dir, threads: int = 1) -> int:
    """Dispatch the configured experiment; return the process exit code.

    Sub-runs are independent but report assembly is ordered, so the
    report bytes do not depend on the thread count.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.time()
    dispatch = {
        "solve": _run_solve,
        "certify-critical": _run_certify,
        "nonexistence": _run_nonexistence,
        "bubbles": _run_bubbles,
        "continuation": _run_continuation,
    }
    try:
        if config.experiment == "check":
            code = _run_check(config, out_dir)
        else:
            code = dispatch[config.experiment](config, out_dir)
    except ValidationError as exc:
        _write_report(
            out_dir, config, config.experiment, {"validation_errors": exc.messages}
        )
        for msg in exc.messages:
            print(f"error: {msg}", file=sys.stderr)
        code = EXIT_INVALID
    _write_meta(out_dir, t0)
    return code


# ---------------------------------------------------------------------------
# entry point


class _Parser(argparse.ArgumentParser):
    # Usage errors are input-validation failures; keep exit code 4 so 2
    # stays reserved for Inconclusive certificates.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INVALID)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spground", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument(
            "--config",
            required=(name != "check"),
            help="path to the JSON run description",
        )
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--seed", type=int, default=None, help="override solver.seed")
        p.add_argument(
            "--threads", type=int, default=1, help="worker threads for sub-runs"
        )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_INVALID

    if args.config is None:
        # bare `spground check`
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        t0 = time.time()
        code = _run_check(None, out_dir)
        _write_meta(out_dir, t0)
        return code

    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        print(
            f"error: config parse error: {exc.msg} at line {exc.lineno} column {exc.colno}",
            file=sys.stderr,
        )
        return EXIT_INVALID
    if isinstance(doc, dict) and args.seed is not None:
        doc = copy.deepcopy(doc)
        doc.setdefault("solver", {})
        if isinstance(doc["solver"], dict):
            doc["solver"]["seed"] = args.seed
        text = json.dumps(doc)
    try:
        config = parse_config(text)
    except ValidationError as exc:
        for msg in exc.messages:
            print(f"error: {msg}", file=sys.stderr)
        return EXIT_INVALID
    if config.experiment != args.command:
        print(
            f"error: config selects experiment '{config.experiment}' but the "
            f"'{args.command}' subcommand was invoked",
            file=sys.stderr,
        )
        return EXIT_INVALID
    return run(config, args.out, threads=args.threads)


if __name__ == "__main__":
    sys.exit(main())
