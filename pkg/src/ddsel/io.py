"""File formats: headerless CSV matrices and JSON result records.

Design and response files are plain comma-separated numbers with no
header row.  Floats are written with 17 significant digits, which makes
every save/load cycle bit-exact.  JSON records report coefficient
supports 1-based; everything in memory stays 0-based.  Non-finite
numbers are written as null.
"""

from __future__ import annotations

import json
import math
import os
from typing import Optional, Tuple

import numpy as np

from .bench import Example1Instance, Instance, PathResult
from .bounds import BoundSet
from .core import DesignMatrix, Solution
from .exceptions import DimensionMismatch, MalformedProblem
from .milo import MiloResult

FLOAT_FMT = "%.17g"


def save_design_csv(path, design) -> None:
    X = design.entries if isinstance(design, DesignMatrix) else np.asarray(design)
    np.savetxt(path, np.atleast_2d(X), fmt=FLOAT_FMT, delimiter=",")


def load_design_csv(path) -> DesignMatrix:
    X = np.loadtxt(path, delimiter=",", ndmin=2)
    return DesignMatrix(X)


def save_response_csv(path, y) -> None:
    v = np.asarray(y, dtype=float).reshape(-1)
    np.savetxt(path, v, fmt=FLOAT_FMT, delimiter=",")


def load_response_csv(path) -> np.ndarray:
    y = np.loadtxt(path, delimiter=",")
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.ndim != 1:
        raise DimensionMismatch(f"response file {path} is not a single column")
    return y


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def _count(x):
    # integral-valued bounds; infinities (no bound yet) become null
    v = _num(x)
    return None if v is None else int(round(v))


def solution_to_dict(sol: Solution) -> dict:
    return {
        "beta": [float(b) for b in sol.beta],
        "support": [j + 1 for j in sol.support],
        "objective": int(sol.objective),
        "residual_inf": _num(sol.residual_inf),
        "delta": _num(sol.delta),
    }


def solution_from_dict(d: dict) -> Solution:
    beta = np.asarray(d["beta"], dtype=float)
    support = tuple(int(j) - 1 for j in d["support"])
    return Solution(
        beta=beta,
        support=support,
        objective=int(d["objective"]),
        residual_inf=float(d["residual_inf"]),
        delta=float(d["delta"]),
    )


def boundset_to_dict(bounds: BoundSet) -> dict:
    return {
        "coef_upper": [float(v) for v in bounds.coef_upper],
        "l1_budget": _num(bounds.l1_budget),
        "pred_upper": (
            None
            if bounds.pred_upper is None
            else [float(v) for v in bounds.pred_upper]
        ),
        "pred_l1_budget": _num(bounds.pred_l1_budget),
        "provenance": bounds.provenance,
    }


def boundset_from_dict(d: dict) -> BoundSet:
    return BoundSet(
        coef_upper=np.asarray(d["coef_upper"], dtype=float),
        l1_budget=d.get("l1_budget"),
        pred_upper=(
            None
            if d.get("pred_upper") is None
            else np.asarray(d["pred_upper"], dtype=float)
        ),
        pred_l1_budget=d.get("pred_l1_budget"),
        provenance=d.get("provenance", "manual"),
    )


def milo_result_to_dict(res: MiloResult) -> dict:
    return {
        "status": res.status,
        "objective": None if res.incumbent is None else int(res.incumbent.objective),
        "incumbent": (
            None if res.incumbent is None else solution_to_dict(res.incumbent)
        ),
        "lower_bound": _count(res.lower_bound),
        "gap": _num(res.gap),
        "nodes_explored": int(res.nodes_explored),
        "wall_time": _num(res.wall_time),
        "root_relaxation": _num(res.root_relaxation),
        "events": list(res.events),
        "progress": [
            {
                "time": _num(e.time),
                "upper": _count(e.upper),
                "lower": _count(e.lower),
                "gap": _num(e.gap),
                "nodes": int(e.nodes),
            }
            for e in res.progress
        ],
    }


def path_result_to_dict(res: PathResult) -> dict:
    return {
        "method": res.method,
        "grid": [float(d) for d in res.grid],
        "solutions": [
            None if s is None else solution_to_dict(s) for s in res.solutions
        ],
        "statuses": list(res.statuses),
        "errors": list(res.errors),
        "representatives": {
            str(k): solution_to_dict(s) for k, s in res.representatives.items()
        },
    }


def save_json(path, record: dict) -> None:
    with open(path, "w") as fh:
        json.dump(record, fh, indent=2)
        fh.write("\n")


def load_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


# ----------------------------------------------------------------------
# generated-instance directories: x.csv / y.csv / truth.json

DESIGN_FILE = "x.csv"
RESPONSE_FILE = "y.csv"
TRUTH_FILE = "truth.json"


def instance_to_truth_dict(inst: Instance, generator: Optional[dict] = None) -> dict:
    d = {
        "beta_star": [float(b) for b in inst.beta_star],
        "sigma": _num(inst.sigma),
        "reference_delta": _num(inst.reference_delta),
        "generator": generator or {},
    }
    if isinstance(inst, Example1Instance):
        d["example1"] = {
            "tau": float(inst.tau),
            "l0_recovery_delta": float(inst.l0_recovery_delta),
            "dense_l1_cost": float(inst.dense_l1_cost),
        }
    return d


def save_instance(directory, inst: Instance, generator: Optional[dict] = None) -> None:
    os.makedirs(directory, exist_ok=True)
    save_design_csv(os.path.join(directory, DESIGN_FILE), inst.design)
    save_response_csv(os.path.join(directory, RESPONSE_FILE), inst.response)
    save_json(
        os.path.join(directory, TRUTH_FILE), instance_to_truth_dict(inst, generator)
    )


def load_instance(directory) -> Instance:
    design = load_design_csv(os.path.join(directory, DESIGN_FILE))
    response = load_response_csv(os.path.join(directory, RESPONSE_FILE))
    truth_path = os.path.join(directory, TRUTH_FILE)
    if not os.path.exists(truth_path):
        raise MalformedProblem(f"no {TRUTH_FILE} in {directory}")
    t = load_json(truth_path)
    beta_star = np.asarray(t["beta_star"], dtype=float)
    sigma = float(t["sigma"] if t["sigma"] is not None else 0.0)
    if "example1" in t:
        e = t["example1"]
        return Example1Instance(
            design=design,
            response=response,
            beta_star=beta_star,
            sigma=sigma,
            tau=float(e["tau"]),
            l0_recovery_delta=float(e["l0_recovery_delta"]),
            dense_l1_cost=float(e["dense_l1_cost"]),
        )
    return Instance(
        design=design, response=response, beta_star=beta_star, sigma=sigma
    )


def load_data(
    x_path, y_path
) -> Tuple[DesignMatrix, np.ndarray]:
    """Bare design/response pair for hand-supplied files."""
    design = load_design_csv(x_path)
    y = load_response_csv(y_path)
    if y.shape[0] != design.n:
        raise DimensionMismatch(
            f"design has {design.n} rows but response has {y.shape[0]}"
        )
    return design, y
