"""Job execution and deterministic report serialization.

Reports are canonical JSON: keys sorted, floats printed with 17 significant
digits, no whitespace variation, so a job with a fixed seed produces
byte-identical bytes on every run.  Wall-clock timings would break that
property and are therefore opt-in (``include_timings``).
"""

from __future__ import annotations

import json
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import Decomposition, lower_bound, reilly_bound, special_bound, upper_bound
from .errors import JobValidationError, NumericalError, ValidationError
from .expressions import parse
from .operators import curvature_quantities
from .quadrature import QuadratureSettings, build_quadrature, points_on_surface
from .spectral import estimate_lambda1

TASK_KINDS = (
    "invariants",
    "curvature",
    "bound_upper",
    "bound_reilly",
    "bound_special",
    "bound_lower",
    "spectrum",
    "invariance_check",
)

CSV_COLUMNS = ("r", "J", "detH", "R_theta", "D", "R_Theta")


# --- canonical serialization ------------------------------------------------


def _format_float(x: float) -> str:
    if x != x or x in (float("inf"), float("-inf")):
        raise ValueError(f"non-finite value {x!r} in report")
    if x == int(x) and abs(x) < 1e16:
        # stabilize integral floats ("1" rather than platform-tail "1.0000...")
        return format(x, ".1f")
    return format(x, ".17g")


def canonical_json(obj) -> str:
    out = []
    _serialize(obj, out)
    return "".join(out)


def _serialize(obj, out):
    if isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if i:
                out.append(",")
            out.append(json.dumps(str(key)))
            out.append(":")
            _serialize(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple)) or isinstance(obj, np.ndarray):
        values = obj.tolist() if isinstance(obj, np.ndarray) else obj
        out.append("[")
        for i, v in enumerate(values):
            if i:
                out.append(",")
            _serialize(v, out)
        out.append("]")
    elif isinstance(obj, bool) or isinstance(obj, np.bool_):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_format_float(float(obj)))
    elif isinstance(obj, complex) or isinstance(obj, np.complexfloating):
        _serialize({"re": float(obj.real), "im": float(obj.imag)}, out)
    elif obj is None:
        out.append("null")
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    else:
        raise TypeError(f"cannot serialize {type(obj)!r}")


def _points_to_pairs(points):
    return [
        [[float(z.real), float(z.imag)] for z in row] for row in np.atleast_2d(points)
    ]


def _pairs_to_points(pairs, m):
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3 or arr.shape[1] != m or arr.shape[2] != 2:
        raise JobValidationError(
            f"points must be arrays of {m} [re, im] pairs, got shape {arr.shape}"
        )
    return arr[..., 0] + 1j * arr[..., 1]


# --- job handling -------------------------------------------------------------


def normalize_job(job: dict) -> dict:
    if not isinstance(job, dict):
        raise JobValidationError("job file must contain a JSON object")
    known = {
        "dimension_n", "defining_function", "params", "quadrature", "tasks", "output",
    }
    extra = set(job) - known
    if extra:
        raise JobValidationError(f"unknown job keys {sorted(extra)}")
    n = job.get("dimension_n")
    if n not in (1, 2):
        raise JobValidationError("dimension_n must be 1 or 2")
    if not isinstance(job.get("defining_function"), str):
        raise JobValidationError("defining_function must be a string expression")
    params = job.get("params", {})
    if not isinstance(params, dict) or not all(
        isinstance(v, (int, float)) for v in params.values()
    ):
        raise JobValidationError("params must map names to real numbers")
    tasks = job.get("tasks")
    if not isinstance(tasks, list) or not tasks:
        raise JobValidationError("tasks must be a non-empty list")
    for i, task in enumerate(tasks):
        if not isinstance(task, dict) or task.get("kind") not in TASK_KINDS:
            raise JobValidationError(
                f"task {i}: kind must be one of {', '.join(TASK_KINDS)}"
            )
    quad = QuadratureSettings.from_dict(job.get("quadrature", {}))
    out = {
        "dimension_n": int(n),
        "defining_function": job["defining_function"],
        "params": {str(k): float(v) for k, v in params.items()},
        "quadrature": quad.to_dict(),
        "tasks": tasks,
    }
    if "output" in job:
        out["output"] = str(job["output"])
    return out


class _JobContext:
    def __init__(self, job):
        self.job = job
        self.n = job["dimension_n"]
        self.params = job["params"]
        self.rho = parse(job["defining_function"], self.n)
        self.settings = QuadratureSettings.from_dict(job["quadrature"])
        self._rule = None

    @property
    def rule(self):
        if self._rule is None:
            self._rule = build_quadrature(self.rho, self.settings, params=self.params)
        return self._rule

    def task_points(self, task, default_count):
        if "points" in task:
            return _pairs_to_points(task["points"], self.rho.m)
        count = int(task.get("num_points", default_count))
        seed = int(task.get("seed", self.settings.seed))
        return points_on_surface(self.rho, count, seed=seed, params=self.params)


def _point_table(ctx, task, with_frame_diag):
    points = ctx.task_points(task, 20)
    q = curvature_quantities(ctx.rho, points, params=ctx.params)
    result = {"points": _points_to_pairs(points)}
    for key in CSV_COLUMNS:
        result[key] = [float(x) for x in np.atleast_1d(q[key])]
    result["super_pseudoconvex"] = bool(np.min(q["D"]) > 0.0)
    if with_frame_diag:
        frame = q["frame"]
        transverse = np.abs(
            np.einsum("...j,...jk->...k", frame.xi, frame.hessian)
            - frame.r[..., None] * np.conj(frame.grad)
        )
        result["diagnostics"] = {
            "on_surface_max": float(np.max(np.abs(frame.rho))),
            "xi_pairing_max": float(
                np.max(np.abs(np.einsum("...k,...k->...", frame.grad, frame.xi) - 1.0))
            ),
            "transverse_identity_max": float(np.max(transverse)),
            "chart": [int(c) for c in np.atleast_1d(frame.chart)],
        }
    return result, points


def _write_csv(path, result):
    pts = result["points"]
    m = len(pts[0])
    header = []
    for j in range(m):
        header += [f"point_re_{j + 1}", f"point_im_{j + 1}"]
    header += list(CSV_COLUMNS)
    lines = [",".join(header)]
    for i in range(len(pts)):
        row = []
        for j in range(m):
            row += [_format_float(pts[i][j][0]), _format_float(pts[i][j][1])]
        row += [_format_float(result[c][i]) for c in CSV_COLUMNS]
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _run_task(ctx, task, base_dir):
    kind = task["kind"]
    if kind in ("invariants", "curvature"):
        result, _ = _point_table(ctx, task, with_frame_diag=(kind == "invariants"))
        if "csv" in task:
            _write_csv(Path(base_dir, task["csv"]), result)
            result["csv"] = task["csv"]
        return result
    if kind == "spectrum":
        degree = int(task.get("degree", 3))
        report = estimate_lambda1(
            ctx.rho, degree, ctx.rule, params=ctx.params,
            kernel_tol=float(task.get("kernel_tol", 1e-6)),
            check_monotonicity=bool(task.get("check_monotonicity", True)),
        )
        return report.to_dict()
    if kind == "bound_upper":
        if "decomposition" not in task:
            raise JobValidationError("bound_upper needs a decomposition block")
        dec = Decomposition.from_dict(
            task["decomposition"], ctx.n, lambda s, n: parse(s, n)
        )
        report = upper_bound(ctx.rho, dec, ctx.rule, params=ctx.params,
                             seed=ctx.settings.seed)
        return report.to_dict()
    if kind == "bound_reilly":
        if "F_maps" not in task:
            raise JobValidationError("bound_reilly needs F_maps")
        maps = [parse(s, ctx.n) for s in task["F_maps"]]
        report = reilly_bound(maps, ctx.rule, params=ctx.params,
                              seed=ctx.settings.seed)
        return report.to_dict()
    if kind == "bound_special":
        points = ctx.task_points(task, 50)
        report = special_bound(ctx.rho, int(task.get("j", 1)), points,
                               params=ctx.params)
        return report.to_dict()
    if kind == "bound_lower":
        points = ctx.task_points(task, 50)
        report = lower_bound(ctx.rho, points, params=ctx.params,
                             paneitz_positive=bool(task.get("paneitz_positive", False)))
        return report.to_dict()
    if kind == "invariance_check":
        texts = task.get("defining_functions")
        if not isinstance(texts, list) or len(texts) < 2:
            raise JobValidationError(
                "invariance_check needs at least two defining_functions"
            )
        exprs = [parse(s, ctx.n) for s in texts]
        points = ctx.task_points(task, 25)
        values = []
        for expr in exprs:
            res = np.abs(expr.value(ctx.params, points).real)
            if np.max(res) > 1e-8:
                raise JobValidationError(
                    f"{expr} does not vanish on the sampled surface "
                    f"(max |rho| = {np.max(res):.3e})"
                )
            values.append(curvature_quantities(expr, points, params=ctx.params)["R_Theta"])
        values = np.asarray(values)
        diffs = [
            float(np.max(np.abs(values[i] - values[j])))
            for i in range(len(exprs))
            for j in range(i + 1, len(exprs))
        ]
        return {
            "defining_functions": texts,
            "num_points": int(points.shape[0]),
            "max_pairwise_diff": max(diffs),
            "normalized_scalar_first": [float(x) for x in values[0]],
        }
    raise JobValidationError(f"unhandled task kind {kind!r}")


def run_job_data(job: dict, base_dir=".", include_timings=False):
    """Execute a job dict; returns (report dict, exit code).

    Task failures are recorded per task without aborting the remaining
    tasks.  Exit code: 0 all ok, 2 any validation error, 3 any numerical
    failure (validation wins when both occur).
    """
    job = normalize_job(job)
    ctx = _JobContext(job)
    results = []
    saw_validation = saw_numerical = False
    for i, task in enumerate(job["tasks"]):
        entry = {"task": task["kind"], "index": i}
        start = time.perf_counter()
        try:
            entry["status"] = "ok"
            entry["result"] = _run_task(ctx, task, base_dir)
        except ValidationError as exc:
            saw_validation = True
            entry["status"] = "error"
            entry["error"] = type(exc).__name__
            entry["message"] = str(exc)
        except NumericalError as exc:
            saw_numerical = True
            entry["status"] = "error"
            entry["error"] = type(exc).__name__
            entry["message"] = str(exc)
        if include_timings:
            entry["time_s"] = time.perf_counter() - start
        results.append(entry)
    report = {
        "tool": {"name": "crspectra", "version": __version__},
        "job": {k: v for k, v in job.items() if k != "output"},
        "results": results,
    }
    if "output" in job:
        path = Path(base_dir, job["output"])
        path.write_text(canonical_json(report) + "\n", encoding="utf-8")
    exit_code = 2 if saw_validation else (3 if saw_numerical else 0)
    return report, exit_code


def run_job(path, include_timings=False):
    """Load and execute a JSON job file; returns (report dict, exit code)."""
    path = Path(path)
    try:
        job = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise JobValidationError(f"job file {path} does not exist")
    except json.JSONDecodeError as exc:
        raise JobValidationError(f"job file {path} is not valid JSON: {exc}")
    return run_job_data(job, base_dir=path.parent, include_timings=include_timings)
