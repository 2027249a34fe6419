"""File formats: instance manifests and policy exports (JSON), results and
reports (CSV). Every file carries a format/version header."""

from __future__ import annotations

import csv
import io
import json
import os
from pathlib import Path

import numpy as np

from .core import GENERATOR_VERSION, CostParams, DemandSpec, Instance, RQPolicy, RSPolicy, SimReport, SsPolicy

MANIFEST_FORMAT = "stochlot-manifest/1"
POLICY_FORMAT = "stochlot-policies/1"
RESULTS_HEADER = "# stochlot-results/1"
REPORT_HEADER = "# stochlot-report/1"

RESULT_FIELDS = ["instance", "pattern", "cv", "K", "h", "b", "method", "deployment", "label",
                 "avg_cost", "ci_half_width", "gap_pct", "gap_ci_pct", "replications",
                 "precision_reached"]


def atomic_write(path: str | Path, text: str) -> None:
    path = Path(path)
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def instance_to_dict(inst: Instance) -> dict:
    return {"name": inst.name, "pattern": inst.pattern, "N": inst.N, "means": list(inst.demand.means),
            "cv": inst.demand.cv, "K": inst.costs.K, "h": inst.costs.h, "b": inst.costs.b,
            "x0": inst.initial_inventory}


def instance_from_dict(d: dict) -> Instance:
    if len(d["means"]) != d["N"]:
        raise ValueError(f"instance {d.get('name')}: N does not match the means vector")
    return Instance(DemandSpec(tuple(d["means"]), d["cv"]), CostParams(d["K"], d["h"], d["b"]),
                    d["x0"], d["pattern"], d["name"])


def dump_manifest(instances: list[Instance]) -> str:
    doc = {"format": MANIFEST_FORMAT, "generator": GENERATOR_VERSION,
           "instances": [instance_to_dict(i) for i in instances]}
    return json.dumps(doc, indent=1) + "\n"


def load_manifest(path: str | Path) -> list[Instance]:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != MANIFEST_FORMAT:
        raise ValueError(f"{path}: not a {MANIFEST_FORMAT} file")
    return [instance_from_dict(d) for d in doc["instances"]]


def policy_to_dict(pol) -> dict:
    if isinstance(pol, SsPolicy):
        return {"type": "sS", "s": pol.s.tolist(), "S": pol.S.tolist()}
    if isinstance(pol, RQPolicy):
        return {"type": "RQ", "N": pol.N, "schedule": list(pol.schedule),
                "quantities": list(pol.quantities), "expected_cost": pol.expected_cost}
    if isinstance(pol, RSPolicy):
        return {"type": "RS", "N": pol.N, "schedule": list(pol.schedule),
                "levels": list(pol.levels), "expected_cost": pol.expected_cost}
    raise TypeError(f"cannot export {type(pol).__name__}")


def policy_from_dict(d: dict):
    kind = d["type"]
    if kind == "sS":
        return SsPolicy(np.array(d["s"]), np.array(d["S"]))
    if kind == "RQ":
        return RQPolicy(tuple(d["schedule"]), tuple(d["quantities"]), d["N"], d["expected_cost"])
    if kind == "RS":
        return RSPolicy(tuple(d["schedule"]), tuple(d["levels"]), d["N"], d["expected_cost"])
    raise ValueError(f"unknown policy type {kind!r}")


def dump_policies(method: str, items: list[tuple[str, object]]) -> str:
    doc = {"format": POLICY_FORMAT, "method": method,
           "policies": [dict(instance=name, **policy_to_dict(p)) for name, p in items]}
    return json.dumps(doc, indent=1) + "\n"


def load_policies(path: str | Path) -> tuple[str, dict]:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != POLICY_FORMAT:
        raise ValueError(f"{path}: not a {POLICY_FORMAT} file")
    return doc["method"], {d["instance"]: policy_from_dict(d) for d in doc["policies"]}


def result_row(inst: Instance, rep: SimReport, label: str) -> dict:
    return {"instance": inst.name, "pattern": inst.pattern, "cv": float(inst.demand.cv),
            "K": float(inst.costs.K), "h": float(inst.costs.h), "b": float(inst.costs.b), "method": rep.method, "deployment": rep.deployment,
            "label": label, "avg_cost": repr(rep.avg_cost), "ci_half_width": repr(rep.ci_half_width),
            "gap_pct": repr(rep.gap_pct), "gap_ci_pct": repr(rep.gap_ci_pct),
            "replications": rep.replications, "precision_reached": int(rep.precision_reached)}


def format_rows(rows: list[dict], header: bool = True) -> str:
    buf = io.StringIO()
    if header:
        buf.write(RESULTS_HEADER + "\n")
    w = csv.DictWriter(buf, fieldnames=RESULT_FIELDS, lineterminator="\n")
    if header:
        w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def read_results(path: str | Path) -> list[dict]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != RESULTS_HEADER:
        raise ValueError(f"{path}: missing '{RESULTS_HEADER}' header line")
    rows = list(csv.DictReader(lines[1:]))
    for r in rows:
        for k in ("cv", "K", "h", "b", "avg_cost", "ci_half_width", "gap_pct", "gap_ci_pct"):
            r[k] = float(r[k])
        r["replications"] = int(r["replications"])
        r["precision_reached"] = bool(int(r["precision_reached"]))
    return rows


def result_row_from_read(row: dict) -> dict:
    """Inverse of ``read_results`` for one row, ready to be written again."""
    out = {k: row[k] for k in RESULT_FIELDS}
    out["precision_reached"] = int(row["precision_reached"])
    return out
