"""Model interchange: free-MPS export and the pluggable external solver.

The exported model is the full linearized formulation in solver units
(bandwidth rows in MHz, rate rows and the objective in Mbps) with binary
markers on every variable; any MPS-reading MILP solver can cross-check it.

An external solver is selected with the environment variable

    AURA5G_SOLVER=external:/path/to/tool

and is invoked as ``tool MODEL.mps RESULT.json [TIME_LIMIT_S]``.  It must
write a JSON document ``{"status": "optimal|infeasible|unbounded|time_limit",
"objective": <Mbps>, "values": {"x_0_1": 1, ...}}`` (zero variables may be
omitted).  Results are translated back into a SolveOutcome; the adapter is a
cross-validation path, not the default solver.
"""

from __future__ import annotations

import json
import os
import subprocess
import tempfile
import time
from pathlib import Path

import numpy as np

from .model import AssociationProblem, solution_from_assignment
from .solver import SolveOutcome, SolveStatus

ENV_VAR = "AURA5G_SOLVER"
MBPS = 1e6


class AdapterUnavailable(RuntimeError):
    """No external solver is configured or the configured one is missing."""


class ParseError(ValueError):
    """The external solver's result file could not be interpreted."""


def variable_names(problem: AssociationProblem) -> list[str]:
    """Stable variable names: x_i_j, g_i_j_k and G_i_j_k in column order."""
    names = [f"x_{i}_{j}"
             for i in range(problem.n_users) for j in range(problem.n_aps)]
    for prefix in ("g", "G"):
        for i in range(problem.n_users):
            for s in range(problem.slots_per_user):
                j = int(problem.slot_to_j[s])
                k = int(problem.slot_to_k[s])
                names.append(f"{prefix}_{i}_{j}_{k}")
    return names


def write_mps(problem: AssociationProblem, path) -> None:
    """Write the full model as free-format MPS (maximization objective)."""
    names = variable_names(problem)
    a = problem.a.tocsc()
    senses = problem.senses
    row_names = [f"R{r:07d}" for r in range(a.shape[0])]
    sense_char = {-1: "L", 0: "E", 1: "G"}
    lines = ["NAME AURA5G", "OBJSENSE", "    MAX", "ROWS", " N  OBJ"]
    for r, s in enumerate(senses):
        lines.append(f" {sense_char[int(s)]}  {row_names[r]}")
    lines.append("COLUMNS")
    lines.append("    MARKER                 'MARKER'                 'INTORG'")
    for j, name in enumerate(names):
        if problem.objective_mbps[j] != 0.0:
            lines.append(f"    {name}  OBJ  {problem.objective_mbps[j]:.12g}")
        start, end = a.indptr[j], a.indptr[j + 1]
        for idx in range(start, end):
            lines.append(f"    {name}  {row_names[a.indices[idx]]}  {a.data[idx]:.12g}")
    lines.append("    MARKER                 'MARKER'                 'INTEND'")
    lines.append("RHS")
    for r, b in enumerate(problem.rhs):
        if b != 0.0:
            lines.append(f"    RHS  {row_names[r]}  {b:.12g}")
    lines.append("BOUNDS")
    for j, name in enumerate(names):
        if problem.upper[j] <= 0.0:
            lines.append(f" FX BND  {name}  0")
        else:
            lines.append(f" BV BND  {name}")
    lines.append("ENDATA")
    Path(path).write_text("\n".join(lines) + "\n")


_STATUS_MAP = {
    "optimal": SolveStatus.OPTIMAL,
    "infeasible": SolveStatus.INFEASIBLE,
    "unbounded": SolveStatus.UNBOUNDED,
    "time_limit": SolveStatus.TIME_LIMIT,
}


def parse_result(problem: AssociationProblem, text: str,
                 wall_time_s: float) -> SolveOutcome:
    """Translate an external result document into a SolveOutcome."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"result is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "status" not in doc:
        raise ParseError("result must be an object with a 'status' field")
    status_txt = str(doc["status"]).lower()
    if status_txt not in _STATUS_MAP:
        raise ParseError(f"unknown status {doc['status']!r}")
    status = _STATUS_MAP[status_txt]
    if status is not SolveStatus.OPTIMAL and not doc.get("values"):
        return SolveOutcome(status=status, assignment=None, solution=None,
                            objective_bps=float("nan"), best_bound_bps=float("nan"),
                            gap=float("nan"), wall_time_s=wall_time_s, node_count=0)
    if "objective" not in doc or "values" not in doc:
        raise ParseError("optimal results need 'objective' and 'values'")
    index = {name: i for i, name in enumerate(variable_names(problem))}
    z = np.zeros(problem.n_cols)
    for name, val in doc["values"].items():
        if name not in index:
            raise ParseError(f"unknown variable {name!r} in result")
        z[index[name]] = float(val)
    objective_bps = float(doc["objective"]) * MBPS
    return SolveOutcome(
        status=status, assignment=z,
        solution=solution_from_assignment(problem, z),
        objective_bps=objective_bps,
        best_bound_bps=float(doc.get("bound", doc["objective"])) * MBPS,
        gap=float(doc.get("gap", 0.0)),
        wall_time_s=wall_time_s, node_count=int(doc.get("nodes", 0)))


def configured_command(env: str | None = None) -> str | None:
    value = os.environ.get(ENV_VAR) if env is None else env
    if not value:
        return None
    if not value.startswith("external:"):
        raise AdapterUnavailable(
            f"{ENV_VAR} must look like 'external:/path/to/solver', got {value!r}")
    return value[len("external:"):]


def external_adapter(problem: AssociationProblem, command: str | None = None,
                     *, time_limit_s: float | None = None) -> SolveOutcome:
    """Solve through the configured external tool; see the module docstring."""
    if command is None:
        command = configured_command()
    if not command:
        raise AdapterUnavailable(f"{ENV_VAR} is not set")
    if not Path(command).exists():
        raise AdapterUnavailable(f"external solver {command!r} does not exist")
    with tempfile.TemporaryDirectory(prefix="aura5g_") as tmp:
        model_path = Path(tmp) / "model.mps"
        result_path = Path(tmp) / "result.json"
        write_mps(problem, model_path)
        argv = [command, str(model_path), str(result_path)]
        if time_limit_s is not None:
            argv.append(str(time_limit_s))
        t0 = time.perf_counter()
        proc = subprocess.run(argv, capture_output=True, text=True)
        wall = time.perf_counter() - t0
        if proc.returncode != 0:
            raise ParseError(
                f"external solver exited with {proc.returncode}: {proc.stderr[-500:]}")
        if not result_path.exists():
            raise ParseError("external solver wrote no result file")
        return parse_result(problem, result_path.read_text(), wall)
