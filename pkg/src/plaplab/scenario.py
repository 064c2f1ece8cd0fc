"""Scenario-driven orchestration: parse a JSON scenario, run its task
list against the library modules, and emit deterministic CSV/JSON
artifacts plus a machine-readable report.

Artifacts are byte-stable for a fixed scenario and seed: all floats are
serialized with 17 significant digits and wall-clock timings go to a
separate ``timings.json`` sidecar that is excluded from the determinism
contract.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, hardy, radial_ode, wolff
from .core import CaseKind, ProblemParams, Zeta, classify_case, fundamental_solution
from .errors import (
    NotApplicableError,
    PlapLabError,
    ScenarioParseError,
    TaskError,
    WindowNotFoundError,
)
from .potentials import (
    Family,
    PotentialSpec,
    SignRule,
    check_dini_condition,
    check_fuchsian,
    check_kato_condition,
)

SCHEMA_VERSION = 1

KNOWN_TASKS = (
    "conditions", "wolff", "solve", "envelopes", "extremal",
    "three-spheres", "hardy", "classify", "minimal-growth", "sweep",
)

_DEFAULT_TOLERANCES = {
    "condition": 1e-8,
    "bvp": 1e-8,
    "residual": 1e-5,
    "limit": 1e-6,
    "slack": 1e-9,
}

SWEEP_PARAMETERS = ("p", "epsilon", "beta", "lam")


def format_float(x) -> str:
    return f"{float(x):.17g}"


def _canonical(obj):
    """JSON-serializable copy with floats rendered at 17 significant digits."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return _Raw(format_float(obj))
    if isinstance(obj, (np.floating,)):
        return _canonical(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): _canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_canonical(v) for v in obj]
    return str(obj)


class _Raw:
    def __init__(self, text):
        self.text = text


def dumps_canonical(obj) -> str:
    """Deterministic JSON with sorted keys and 17-digit floats."""

    def render(o, indent):
        pad = "  " * indent
        if isinstance(o, _Raw):
            return o.text
        if o is None:
            return "null"
        if o is True:
            return "true"
        if o is False:
            return "false"
        if isinstance(o, int):
            return str(o)
        if isinstance(o, str):
            return json.dumps(o)
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = sorted(o.items())
            inner = ",\n".join(
                f'{pad}  {json.dumps(str(k))}: {render(v, indent + 1)}' for k, v in items
            )
            return "{\n" + inner + "\n" + pad + "}"
        if isinstance(o, list):
            if not o:
                return "[]"
            inner = ",\n".join(f"{pad}  {render(v, indent + 1)}" for v in o)
            return "[\n" + inner + "\n" + pad + "]"
        raise TypeError(f"unserializable {type(o)!r}")

    return render(_canonical(obj), 0) + "\n"


@dataclass(frozen=True)
class Scenario:
    params: ProblemParams
    potential: PotentialSpec
    tasks: tuple[str, ...]
    tolerances: dict
    seed: int
    options: dict
    sweep: dict | None
    raw: dict

    def tol(self, name: str) -> float:
        return float(self.tolerances.get(name, _DEFAULT_TOLERANCES[name]))


@dataclass
class TaskResult:
    task: str
    verdict: str  # PASS | FAIL | NotApplicable
    data: dict
    artifacts: tuple[str, ...] = ()


@dataclass
class ScenarioReport:
    scenario: dict
    results: list[TaskResult]
    wall_times: dict

    @property
    def overall_pass(self) -> bool:
        return all(r.verdict in ("PASS", "NotApplicable") for r in self.results)

    def to_json_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "scenario": self.scenario,
            "results": [
                {"task": r.task, "verdict": r.verdict, "data": r.data,
                 "artifacts": list(r.artifacts)}
                for r in self.results
            ],
            "overall": "PASS" if self.overall_pass else "FAIL",
        }


def _parse_potential(node, zeta: Zeta, base_dir: Path) -> PotentialSpec:
    if not isinstance(node, dict):
        raise ScenarioParseError("'potential' must be an object")
    family = node.get("family")
    sign = SignRule(node.get("sign", "minus"))
    try:
        if family == "zero":
            return PotentialSpec.zero(zeta)
        if family == "power_law":
            return PotentialSpec.power_law(float(node["epsilon"]), zeta, sign)
        if family == "log_power":
            return PotentialSpec.log_power(float(node["beta"]), zeta, sign)
        if family == "hardy_constant":
            return PotentialSpec.hardy(float(node["lam"]), zeta, sign)
        if family == "tabulated":
            if "path" in node:
                return PotentialSpec.from_file(base_dir / node["path"], zeta, sign)
            return PotentialSpec.tabulated(node["radii"], node["values"], zeta, sign)
    except KeyError as missing:
        raise ScenarioParseError(f"potential family {family!r} missing field {missing}") from None
    except ValueError as bad:
        raise ScenarioParseError(f"invalid potential: {bad}") from None
    raise ScenarioParseError(f"unknown potential family {family!r}")


def parse_scenario(path) -> Scenario:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioParseError(f"cannot read scenario {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ScenarioParseError("scenario must be a JSON object")
    if raw.get("schema_version") != SCHEMA_VERSION:
        raise ScenarioParseError(
            f"unsupported schema_version {raw.get('schema_version')!r}; expected {SCHEMA_VERSION}"
        )
    pnode = raw.get("params")
    if not isinstance(pnode, dict):
        raise ScenarioParseError("'params' must be an object with p, d, zeta")
    try:
        params = ProblemParams(float(pnode["p"]), int(pnode["d"]),
                               Zeta(pnode.get("zeta", "origin")))
    except (KeyError, ValueError) as exc:
        raise ScenarioParseError(f"invalid params: {exc}") from None
    potential = _parse_potential(raw.get("potential", {"family": "zero"}),
                                 params.zeta, path.parent)
    tasks = raw.get("tasks")
    if not isinstance(tasks, list) or not tasks:
        raise ScenarioParseError("'tasks' must be a nonempty list")
    for t in tasks:
        if t not in KNOWN_TASKS:
            raise ScenarioParseError(f"unknown task {t!r}; known: {KNOWN_TASKS}")
    tolerances = raw.get("tolerances", {})
    if not isinstance(tolerances, dict):
        raise ScenarioParseError("'tolerances' must be an object")
    for key, value in tolerances.items():
        if key not in _DEFAULT_TOLERANCES:
            raise ScenarioParseError(f"unknown tolerance {key!r}")
        if not (isinstance(value, (int, float)) and value > 0):
            raise ScenarioParseError(f"tolerance {key!r} must be positive")
    seed = int(raw.get("seed", 0))
    options = raw.get("options", {})
    if not isinstance(options, dict):
        raise ScenarioParseError("'options' must be an object")
    sweep = raw.get("sweep")
    if sweep is not None:
        if not isinstance(sweep, dict):
            raise ScenarioParseError("'sweep' must be an object")
        parameter = sweep.get("parameter")
        if parameter not in SWEEP_PARAMETERS:
            raise ScenarioParseError(
                f"sweep parameter must be one of {SWEEP_PARAMETERS}"
            )
        values = sweep.get("values")
        if not isinstance(values, list) or not values:
            raise ScenarioParseError("sweep values must be a nonempty list")
    return Scenario(params=params, potential=potential, tasks=tuple(tasks),
                    tolerances=dict(tolerances), seed=seed, options=dict(options),
                    sweep=sweep, raw=raw)


def _default_domain(scn: Scenario):
    if "domain" in scn.options:
        lo, hi = scn.options["domain"]
        return float(lo), float(hi)
    if scn.params.zeta is Zeta.ORIGIN:
        return 1e-6, 0.5
    return 2.0, 1e6


def _grid(scn: Scenario, lo, hi):
    per_decade = int(scn.options.get("radii_per_decade", 8))
    n = max(2, int(math.ceil(per_decade * math.log10(hi / lo))) + 1)
    return np.geomspace(lo, hi, n)


# -- task implementations ----------------------------------------------------


def _task_conditions(scn: Scenario, out: Path) -> TaskResult:
    fuchs = check_fuchsian(scn.potential, scn.params)
    c1 = check_kato_condition(scn.potential, scn.params, tol=scn.tol("condition"))
    c2 = check_dini_condition(scn.potential, scn.params, tol=scn.tol("condition"))
    conclusive = (c1.status.value != "inconclusive" and c2.status.value != "inconclusive")
    data = {
        "fuchsian": fuchs,
        "kato": c1.summary(),
        "dini": c2.summary(),
    }
    return TaskResult("conditions", "PASS" if conclusive else "FAIL", data)


def _task_wolff(scn: Scenario, out: Path) -> TaskResult:
    lo, hi = _default_domain(scn)
    radii = _grid(scn, lo, hi)
    table = wolff.wolff_potential(scn.potential, scn.params, radii)
    artifacts = []
    wolff_csv = out / "wolff.csv"
    table.to_csv(wolff_csv)
    artifacts.append(wolff_csv.name)
    # the finite-difference floor degrades the operator below r ~ 1e-2, so
    # the residual check runs on the table nodes outside that region
    check_nodes = radii[radii >= 1e-2] if scn.params.zeta is Zeta.ORIGIN else radii
    if check_nodes.size < 5:
        check_nodes = radii
    check_table = wolff.wolff_potential(scn.potential, scn.params, check_nodes,
                                        _evaluator=table.evaluator)
    pde = wolff.verify_wolff_equation(check_table, scn.potential, scn.params)
    data = {
        "n_nodes": int(table.radii.size),
        "max_value": float(table.values.max()) if table.radii.size else 0.0,
        "pde_residual": pde,
        "case": table.case.kind.value,
    }
    ok = pde["max_rel_residual"] <= scn.tol("residual") and pde["sign_matches"]
    c2 = check_dini_condition(scn.potential, scn.params, tol=scn.tol("condition"))
    if c2.is_finite:
        utable = wolff.u_potential(scn.potential, scn.params, radii)
        u_csv = out / "u.csv"
        utable.to_csv(u_csv)
        artifacts.append(u_csv.name)
        ucheck = wolff.u_second_derivative_check(utable)
        data["u_second_derivative"] = ucheck
        data["u_branch"] = utable.branch_note
        ok = ok and ucheck["passes"]
    try:
        ratio = wolff.wolff_vs_fundamental(table, scn.params)
        data["fundamental_ratio"] = {"limit": ratio["limit"],
                                     "converged": ratio["converged"]}
    except NotApplicableError:
        data["fundamental_ratio"] = None
    return TaskResult("wolff", "PASS" if ok else "FAIL", data, tuple(artifacts))


def _solve_data(scn: Scenario):
    lo, hi = _default_domain(scn)
    if "boundary_values" in scn.options:
        v1, v2 = (float(x) for x in scn.options["boundary_values"])
    else:
        fund = fundamental_solution(scn.params)
        v1, v2 = fund(lo), fund(hi)
    return lo, hi, v1, v2


def _task_solve(scn: Scenario, out: Path) -> TaskResult:
    lo, hi, v1, v2 = _solve_data(scn)
    sol = radial_ode.solve_bvp(scn.potential, scn.params, lo, hi, v1, v2,
                               tol=scn.tol("bvp"))
    csv = out / "solution.csv"
    sol.to_csv(csv)
    meta = out / "solution_meta.json"
    meta.write_text(dumps_canonical(sol.metadata))
    mismatch = abs(sol.metadata["endpoint_mismatch"])
    ok = mismatch <= scn.tol("bvp") * max(abs(v2), 1e-300) * 1.01
    data = {
        "boundary": [lo, hi, v1, v2],
        "endpoint_mismatch": sol.metadata["endpoint_mismatch"],
        "steps": sol.metadata["steps"],
        "gradient_bound": sol.gradient_bound(),
        "monotone_in_flux": sol.metadata["mismatch_monotone_in_flux"],
    }
    return TaskResult("solve", "PASS" if ok else "FAIL", data, (csv.name, meta.name))


def _task_envelopes(scn: Scenario, out: Path) -> TaskResult:
    lo, hi = _default_domain(scn)
    kinds = scn.options.get("envelope_kinds", ["unit", "fundamental"])
    data = {}
    ok = True
    for kind in kinds:
        pair = radial_ode.build_envelopes(scn.potential, scn.params, kind, (lo, hi))
        data[kind] = {
            "C": pair.C,
            "domain": list(pair.domain),
            "certified": pair.certified,
            "roles_flipped": pair.roles_flipped,
            "sub_scale": pair.sub_scale,
            "notes": pair.notes,
        }
        ok = ok and pair.certified
    return TaskResult("envelopes", "PASS" if ok else "FAIL", data)


def _expected_rates(params: ProblemParams):
    """(small, large) tail behavior toward zeta: exponent or 'finite'."""
    a = params.alpha_star
    if params.zeta is Zeta.ORIGIN:
        small, large = max(0.0, a), min(0.0, a)
    else:
        small, large = min(0.0, a), max(0.0, a)
    return small, large


def _task_extremal(scn: Scenario, out: Path) -> TaskResult:
    lo, hi = _default_domain(scn)
    data = {}
    artifacts = []
    ok = True
    for which in ("small", "large"):
        sol, pair = radial_ode.construct_extremal(scn.potential, scn.params, which,
                                                  (lo, hi), tol=scn.tol("bvp"))
        csv = out / f"{which}.csv"
        sol.to_csv(csv)
        artifacts.append(csv.name)
        entry = {
            "envelope_kind": pair.kind,
            "envelope_C": pair.C,
            "domain": list(sol.domain),
            "bracketed": sol.metadata["envelope_bracketed"],
        }
        fit = analysis.fit_exponent(sol, scn.params)
        entry["rate"] = fit.rate
        entry["rate_mode"] = fit.mode
        entry["r_squared"] = fit.r_squared
        data[which] = entry
        ok = ok and sol.metadata["envelope_bracketed"]
    return TaskResult("extremal", "PASS" if ok else "FAIL", data, tuple(artifacts))


def _spheres_default_case(params: ProblemParams) -> str:
    classical = classify_case(params).kind is CaseKind.CLASSICAL
    at_origin = params.zeta is Zeta.ORIGIN
    if at_origin:
        return "2.2" if classical else "2.1"
    return "2.3" if classical else "2.4"


def _task_three_spheres(scn: Scenario, out: Path) -> TaskResult:
    case = scn.options.get("spheres_case", _spheres_default_case(scn.params))
    mode = "convex" if case.startswith("1") else "concave"
    n_triples = int(scn.options.get("n_triples", 200))
    min_valid = int(scn.options.get("min_valid_triples", 1))
    lo, hi = _default_domain(scn)
    toward_zero = scn.params.zeta is Zeta.ORIGIN

    # shrink the far edge until the Wolff potential is inside the window
    far = hi if toward_zero else lo
    probe = wolff.wolff_potential(scn.potential, scn.params,
                                  np.asarray([math.sqrt(lo * hi)]))
    for _ in range(60):
        if probe.evaluator.value(far) <= 0.45:
            break
        far = far * 0.5 if toward_zero else far * 2.0
    lo, hi = (lo, far) if toward_zero else (far, hi)
    if not lo < hi:
        raise WindowNotFoundError("no subdomain satisfies the smallness window")

    radii = _grid(scn, lo, hi)
    table = wolff.wolff_potential(scn.potential, scn.params, radii)
    limit_kind = analysis._CASE_TABLE[case][2]
    near, farv = (4.0, 1.0) if limit_kind == "infinity" else (1.0, 4.0)
    v1, v2 = (near, farv) if toward_zero else (farv, near)
    profile = radial_ode.solve_bvp(scn.potential, scn.params, lo, hi, v1, v2,
                                   tol=scn.tol("bvp"))
    report = analysis.check_three_spheres(profile, table, mode, case,
                                          n_triples=n_triples, seed=scn.seed,
                                          slack_tol=scn.tol("slack"))
    csv = out / "triples.csv"
    report.to_csv(csv)
    data = report.to_json_dict()
    data["profile_monotone_tail"] = analysis.monotone_tail(profile, scn.params)
    verdict = "PASS" if (report.status.value == "PASS"
                         and report.n_valid >= min_valid) else (
        "NotApplicable" if report.status.value == "NotApplicable" else "FAIL")
    return TaskResult("three-spheres", verdict, data, (csv.name,))


def _task_hardy(scn: Scenario, out: Path) -> TaskResult:
    if scn.potential.family is Family.HARDY_CONSTANT:
        lam = scn.potential.lam
        if scn.potential.sign is SignRule.MINUS:
            lam = float(lam)
        else:
            lam = -float(lam)
    else:
        lam = float(scn.options.get("lambda", 0.0))
    roots = hardy.hardy_exponents(scn.params, lam)
    data = {
        "lambda": lam,
        "critical_constant": roots.critical_constant,
        "gamma_star": roots.gamma_star,
        "gamma_minus": roots.gamma_minus,
        "gamma_plus": roots.gamma_plus,
        "double_root": roots.double_root,
        "near_critical": roots.near_critical,
    }
    ok = True
    if roots.has_roots:
        radii = np.geomspace(0.05, 20.0, 13)
        for label, gamma in (("minus", roots.gamma_minus), ("plus", roots.gamma_plus)):
            rep = hardy.verify_hardy_solution(scn.params, lam, gamma, radii)
            data[f"residual_{label}"] = rep["max_rel_residual"]
            ok = ok and rep["max_rel_residual"] <= 1e-8
    else:
        data["note"] = "coupling above the critical constant: no positive power solutions"
    return TaskResult("hardy", "PASS" if ok else "FAIL", data)


def _task_classify(scn: Scenario, out: Path) -> TaskResult:
    lo, hi = _default_domain(scn)
    # limits with slow correction ladders need a deep tail to settle; the
    # domain option keeps governing the far edge only
    depth = float(scn.options.get("classify_depth", 1e-12))
    if scn.params.zeta is Zeta.ORIGIN:
        lo = min(lo, depth)
    else:
        hi = max(hi, 1.0 / depth)
    data = {}
    ok = True
    for which in ("small", "large"):
        sol, _ = radial_ode.construct_extremal(scn.potential, scn.params, which,
                                               (lo, hi), tol=scn.tol("bvp"))
        cls = analysis.classify_singularity(sol, scn.potential, scn.params,
                                            rtol=scn.tol("limit"))
        data[which] = cls.to_json_dict()
        ok = ok and cls.conclusive
    return TaskResult("classify", "PASS" if ok else "FAIL", data)


def _task_minimal_growth(scn: Scenario, out: Path) -> TaskResult:
    params = scn.params
    if params.zeta is not Zeta.ORIGIN or params.p <= params.d:
        return TaskResult("minimal-growth", "NotApplicable",
                          {"note": "needs p > d with the singularity at the origin"})
    R = float(scn.options.get("ball_radius", 1.0))
    sol, lim = analysis.minimal_growth_profile(scn.potential, params, R)
    csv = out / "minimal_growth.csv"
    sol.to_csv(csv)
    data = {"ball_radius": R, "limit": lim.value, "status": lim.status.value}
    ok = lim.is_finite and lim.value > 0.0
    if scn.potential.family is Family.ZERO:
        a = params.alpha_star
        mask = sol.radii < 0.9 * R
        exact = R**a - sol.radii**a
        rel = np.max(np.abs(sol.v - exact)[mask] / exact[mask])
        data["closed_form_max_rel_err"] = float(rel)
        ok = ok and rel <= 1e-6
    return TaskResult("minimal-growth", "PASS" if ok else "FAIL", data, (csv.name,))


_TASK_TABLE = {
    "conditions": _task_conditions,
    "wolff": _task_wolff,
    "solve": _task_solve,
    "envelopes": _task_envelopes,
    "extremal": _task_extremal,
    "three-spheres": _task_three_spheres,
    "hardy": _task_hardy,
    "classify": _task_classify,
    "minimal-growth": _task_minimal_growth,
}


def run_scenario(scenario_path, out_dir, task_filter=None, seed=None,
                 tolerances=None) -> ScenarioReport:
    """Execute the scenario's tasks in order and write artifacts + report.

    ``task_filter`` restricts execution to the listed tasks (the CLI verbs
    use this); tolerances/seed override the scenario's values."""
    scn = parse_scenario(scenario_path)
    if seed is not None or tolerances:
        merged_tol = dict(scn.tolerances)
        merged_tol.update(tolerances or {})
        scn = Scenario(params=scn.params, potential=scn.potential, tasks=scn.tasks,
                       tolerances=merged_tol,
                       seed=scn.seed if seed is None else int(seed),
                       options=scn.options, sweep=scn.sweep, raw=scn.raw)
    # "sweep" is an orchestration pseudo-task handled by sweep()
    tasks = [t for t in scn.tasks
             if t != "sweep" and (task_filter is None or t in task_filter)]
    if not tasks:
        raise TaskError(
            f"no scenario task matches the requested set {sorted(task_filter or [])}"
        )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    results = []
    wall = {}
    for index, name in enumerate(tasks):
        started = time.perf_counter()
        try:
            result = _TASK_TABLE[name](scn, out)
        except NotApplicableError as exc:
            result = TaskResult(name, "NotApplicable", {"note": str(exc)})
        except PlapLabError as exc:
            raise TaskError(f"task {name!r} failed: {exc}", task_index=index) from exc
        wall[name] = time.perf_counter() - started
        results.append(result)

    echo = dict(scn.raw)
    report = ScenarioReport(scenario=echo, results=results, wall_times=wall)
    (out / "report.json").write_text(dumps_canonical(report.to_json_dict()))
    (out / "timings.json").write_text(
        json.dumps({k: round(v, 6) for k, v in wall.items()}, sort_keys=True, indent=2) + "\n"
    )
    return report


def _apply_sweep_value(scn_raw: dict, parameter: str, value):
    raw = json.loads(json.dumps(scn_raw))
    if parameter == "p":
        raw["params"]["p"] = value
    else:
        raw.setdefault("potential", {})[parameter] = value
    raw.pop("sweep", None)
    return raw


def _flatten(prefix, obj, row):
    if isinstance(obj, dict):
        for k in sorted(obj):
            _flatten(f"{prefix}.{k}" if prefix else str(k), obj[k], row)
    elif isinstance(obj, (list, tuple)):
        row[prefix] = ";".join(
            format_float(v) if isinstance(v, float) else str(v) for v in obj
        )
    elif isinstance(obj, float):
        row[prefix] = format_float(obj)
    elif obj is None:
        row[prefix] = ""
    else:
        row[prefix] = str(obj)


def sweep(scenario_path, out_dir) -> Path:
    """Run the scenario once per sweep grid point; one CSV row per point.

    Rows keep the grid order; artifacts of point k land in ``point_k/``."""
    scn = parse_scenario(scenario_path)
    if scn.sweep is None:
        raise ScenarioParseError("scenario declares no sweep axis")
    parameter = scn.sweep["parameter"]
    values = scn.sweep["values"]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    rows = []
    for k, value in enumerate(values):
        raw = _apply_sweep_value(scn.raw, parameter, value)
        point_dir = out / f"point_{k}"
        point_dir.mkdir(exist_ok=True)
        point_path = point_dir / "scenario.json"
        point_path.write_text(dumps_canonical(raw))
        report = run_scenario(point_path, point_dir)
        row = {"index": str(k), "parameter": parameter,
               "value": format_float(float(value))}
        for result in report.results:
            row[f"{result.task}.verdict"] = result.verdict
            _flatten(result.task, result.data, row)
        rows.append(row)

    columns = ["index", "parameter", "value"]
    extra = sorted({key for row in rows for key in row} - set(columns))
    columns += extra
    csv_path = out / "sweep.csv"
    with open(csv_path, "w") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_csv_cell(row.get(c, "")) for c in columns) + "\n")
    return csv_path


def _csv_cell(text: str) -> str:
    if any(ch in text for ch in ",\"\n"):
        return '"' + text.replace('"', '""') + '"'
    return text
