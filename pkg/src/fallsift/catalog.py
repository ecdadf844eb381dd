"""Dataset manifests, manifest auditing, the built-in RGB-D fall dataset
registry, and cleaning reports.

Manifest JSON (schema version 1)::

    {
      "schema_version": 1,
      "name": "act42-collapse",
      "calibration": {"scale": 0.005, "frame_rate": 30.0},     # optional
      "samples": [
        {"sample_id": "s000", "path": "trajectories/s000.csv",
         "action_label": "fall", "fall_type": "collapse",
         "subject_meta": {"age": 30, "height": 1.75, "weight": 70, "gender": "f"},
         "truth": "realistic"}                                   # optional
      ]
    }

Paths are relative to the directory holding the manifest.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from fallsift.errors import CalibrationError, DataError, ManifestError

SCHEMA_VERSION = 1
FALL_TYPES = ("rigid", "collapse", "trip", "none")
TRUTH_LABELS = ("realistic", "hesitated")
DEMOGRAPHIC_FIELDS = ("age", "height", "weight")
DATA_TYPES = ("R", "D", "S", "A", "IR")
IMBALANCE_RATIO = 0.1


@dataclass(frozen=True)
class SampleEntry:
    sample_id: str
    path: str
    action_label: str
    fall_type: str
    subject_meta: Optional[dict] = None
    truth: Optional[str] = None

    def to_dict(self):
        d = {
            "sample_id": self.sample_id,
            "path": self.path,
            "action_label": self.action_label,
            "fall_type": self.fall_type,
        }
        if self.subject_meta is not None:
            d["subject_meta"] = dict(self.subject_meta)
        if self.truth is not None:
            d["truth"] = self.truth
        return d

    @property
    def is_fall(self):
        return self.fall_type != "none"


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    samples: tuple
    calibration: Optional[object] = None  # CalibrationModel
    schema_version: int = SCHEMA_VERSION
    root: Optional[Path] = field(default=None, compare=False)

    def to_dict(self):
        d = {"schema_version": self.schema_version, "name": self.name}
        if self.calibration is not None:
            d["calibration"] = {"scale": self.calibration.scale,
                                "frame_rate": self.calibration.frame_rate}
        d["samples"] = [s.to_dict() for s in self.samples]
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def save(self, path):
        Path(path).write_text(self.to_json(), encoding="utf-8", newline="\n")

    def ids(self):
        return {s.sample_id for s in self.samples}


def _entry(raw, index):
    where = f"samples[{index}]"
    if not isinstance(raw, dict):
        raise ManifestError(f"{where}: expected an object")
    for key in ("sample_id", "path", "action_label", "fall_type"):
        if not isinstance(raw.get(key), str) or not raw[key]:
            raise ManifestError(f"{where}: missing or empty {key!r}")
    unknown = set(raw) - {"sample_id", "path", "action_label", "fall_type",
                          "subject_meta", "truth"}
    if unknown:
        raise ManifestError(f"{where}: unknown fields {sorted(unknown)}")
    if raw["fall_type"] not in FALL_TYPES:
        raise ManifestError(
            f"{where} ({raw['sample_id']}): unknown fall_type {raw['fall_type']!r}"
        )
    truth = raw.get("truth")
    if truth is not None and truth not in TRUTH_LABELS:
        raise ManifestError(f"{where} ({raw['sample_id']}): unknown truth {truth!r}")
    meta = raw.get("subject_meta")
    if meta is not None:
        if not isinstance(meta, dict):
            raise ManifestError(f"{where}: subject_meta must be an object")
        for key in DEMOGRAPHIC_FIELDS:
            if key in meta:
                v = meta[key]
                if isinstance(v, bool) or not isinstance(v, (int, float)) or not (
                    math.isfinite(v) and v > 0
                ):
                    raise ManifestError(f"{where}: subject_meta.{key} must be positive")
        if "gender" in meta and not isinstance(meta["gender"], str):
            raise ManifestError(f"{where}: subject_meta.gender must be a string")
    return SampleEntry(raw["sample_id"], raw["path"], raw["action_label"],
                       raw["fall_type"], meta, truth)


def parse_manifest(data, root=None) -> DatasetManifest:
    from fallsift.kinematics import CalibrationModel

    if not isinstance(data, dict):
        raise ManifestError("manifest must be a JSON object")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ManifestError(f"unsupported schema_version {version!r} (expected 1)")
    name = data.get("name")
    if not isinstance(name, str):
        raise ManifestError("manifest 'name' must be a string")
    calib = None
    raw_cal = data.get("calibration")
    if raw_cal is not None:
        try:
            calib = CalibrationModel(float(raw_cal["scale"]),
                                     None if raw_cal.get("frame_rate") is None
                                     else float(raw_cal["frame_rate"]))
        except (KeyError, TypeError, ValueError, CalibrationError) as exc:
            raise ManifestError(f"bad calibration block: {exc}") from None
    raw_samples = data.get("samples")
    if not isinstance(raw_samples, list):
        raise ManifestError("manifest 'samples' must be a list")
    samples = []
    seen = {}
    for i, raw in enumerate(raw_samples):
        entry = _entry(raw, i)
        if entry.sample_id in seen:
            raise ManifestError(
                f"samples[{i}]: duplicate sample_id {entry.sample_id!r} "
                f"(first at samples[{seen[entry.sample_id]}])"
            )
        seen[entry.sample_id] = i
        samples.append(entry)
    return DatasetManifest(name, tuple(samples), calib, version,
                           Path(root) if root is not None else None)


def load_manifest(path) -> DatasetManifest:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: invalid JSON: {exc}") from None
    return parse_manifest(data, root=path.parent)


# -- validation ---------------------------------------------------------------

@dataclass(frozen=True)
class Finding:
    severity: str  # "error" | "warning" | "info"
    code: str
    message: str
    sample_id: Optional[str] = None

    def to_dict(self):
        d = {"severity": self.severity, "code": self.code, "message": self.message}
        if self.sample_id is not None:
            d["sample_id"] = self.sample_id
        return d


@dataclass
class ValidationReport:
    findings: list
    coverage: dict
    falls: int
    adls: int

    @property
    def balance_ratio(self):
        return self.falls / self.adls if self.adls else None

    @property
    def ok(self):
        return not any(f.severity == "error" for f in self.findings)

    def to_dict(self):
        return {
            "ok": self.ok,
            "findings": [f.to_dict() for f in self.findings],
            "demographic_coverage": self.coverage,
            "class_balance": {"falls": self.falls, "adls": self.adls,
                              "ratio": self.balance_ratio},
        }


def validate_manifest(m: DatasetManifest, root=None) -> ValidationReport:
    """Audit files, demographic metadata coverage, and fall/ADL balance."""
    root = Path(root) if root is not None else (m.root or Path("."))
    findings = []
    for s in m.samples:
        if not (root / s.path).is_file():
            findings.append(Finding("error", "missing_file",
                                    f"file not found: {s.path}", s.sample_id))
    n = len(m.samples)
    coverage = {}
    for key in DEMOGRAPHIC_FIELDS:
        have = sum(1 for s in m.samples if s.subject_meta and key in s.subject_meta)
        coverage[key] = 100.0 * have / n if n else 0.0
    if n and all(v == 0.0 for v in coverage.values()):
        findings.append(Finding("warning", "no_demographics", "0% demographic coverage"))
    elif n:
        for key, pct in coverage.items():
            if pct < 100.0:
                findings.append(Finding("warning", "partial_demographics",
                                        f"{key}: {pct:.1f}% demographic coverage"))
    falls = sum(1 for s in m.samples if s.is_fall)
    adls = n - falls
    if falls and adls:
        ratio = falls / adls
        if ratio < IMBALANCE_RATIO or ratio > 1.0 / IMBALANCE_RATIO:
            findings.append(Finding(
                "warning", "class_imbalance",
                f"fall/ADL ratio {ratio:.4g} ({falls} falls, {adls} ADLs)"))
    return ValidationReport(findings, coverage, falls, adls)


# -- registry -----------------------------------------------------------------

@dataclass(frozen=True)
class RegistryEntry:
    dataset: str
    subjects: int
    actions: int
    fall_samples: Optional[int]
    adl_samples: Optional[int]
    data_types: frozenset
    notes: str = ""

    def to_dict(self):
        return {
            "dataset": self.dataset,
            "subjects": self.subjects,
            "actions": self.actions,
            "fall_samples": self.fall_samples,
            "adl_samples": self.adl_samples,
            "data_types": [t for t in DATA_TYPES if t in self.data_types],
            "notes": self.notes,
        }


def _reg(name, subjects, actions, falls, adls, types, notes=""):
    return RegistryEntry(name, subjects, actions, falls, adls, frozenset(types.split(",")), notes)


_REGISTRY = (
    _reg("Multiple cameras", 1, 9, 24, 99, "R"),
    _reg("LE2i", 9, 7, 143, 48, "R"),
    _reg("TST v2", 11, 5, None, None, "D,S,A",
         "fall and ADL sample counts are blank in the source table"),
    _reg("UR", 5, 6, 30, 40, "R,D,A",
         "30 falls in the table; the dataset description splits them into "
         "15 from standing and 15 from sitting"),
    _reg("SDUFall", 20, 6, 200, 1000, "R,D,S"),
    _reg("Fall Detection", 6, 8, 26, 61, "D"),
    _reg("EDF", 10, 6, 160, 50, "D"),
    _reg("OCCU", 5, 5, 30, 80, "D"),
    _reg("ACT42", 24, 14, 48, 672, "D,R"),
    _reg("Daily Living", 5, 5, 10, 40, "D,R,S"),
    _reg("NTU RGB+D", 40, 60, 80, 4720, "R,D,S,IR",
         "table lists 80 fall samples; the dataset description mentions 40 fall events"),
    _reg("UWA3D", 10, 30, 10, 290, "R,D"),
)


def builtin_registry() -> list:
    """The reviewed RGB-D fall datasets, one record per table row."""
    return list(_REGISTRY)


def registry_entry(name) -> RegistryEntry:
    for e in _REGISTRY:
        if e.dataset == name:
            return e
    raise KeyError(name)


# -- reports -------------------------------------------------------------------

def read_decisions(path) -> list:
    """Load decision records from JSON lines, dropping the trailing summary."""
    rows = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read decisions {path}: {exc}") from None
    for n, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}:{n}: invalid JSON: {exc}") from None
        if "summary" in obj and "sample_id" not in obj:
            continue
        rows.append(obj)
    return rows


def _as_record(d):
    return d if isinstance(d, dict) else d.to_dict()


def _ratio(num, den):
    return num / den if den else 0.0


def emit_report(decisions, manifest: DatasetManifest, bins: int = 20) -> dict:
    """Counts, kept fraction, per-fall-type breakdown, histogram and truth metrics.

    For the truth metrics the positive class is ``hesitated`` (what the
    cleaner is meant to catch).
    """
    records = [_as_record(d) for d in decisions]
    by_id = {s.sample_id: s for s in manifest.samples}
    for r in records:
        if r["sample_id"] not in by_id:
            raise DataError(f"decision references unknown sample_id {r['sample_id']!r}")
    labels = {"realistic": 0, "hesitated": 0, "skipped": 0}
    by_type = {}
    for r in records:
        labels[r["label"]] += 1
        ft = by_id[r["sample_id"]].fall_type
        by_type.setdefault(ft, {"realistic": 0, "hesitated": 0, "skipped": 0})[r["label"]] += 1
    total = len(records)

    dists = {lab: [float(r["distance"]) for r in records if r["label"] == lab]
             for lab in ("realistic", "hesitated")}
    everything = dists["realistic"] + dists["hesitated"]
    if everything:
        top = max(everything)
        edges = np.linspace(0.0, top if top > 0 else 1.0, bins + 1)
        hist = {lab: np.histogram(v, bins=edges)[0].tolist() for lab, v in dists.items()}
        edges = edges.tolist()
    else:
        edges, hist = [], {"realistic": [], "hesitated": []}

    truth = None
    judged = [r for r in records if r["label"] != "skipped"
              and by_id[r["sample_id"]].truth is not None]
    if judged:
        tp = sum(1 for r in judged if r["label"] == "hesitated"
                 and by_id[r["sample_id"]].truth == "hesitated")
        fp = sum(1 for r in judged if r["label"] == "hesitated"
                 and by_id[r["sample_id"]].truth == "realistic")
        fn = sum(1 for r in judged if r["label"] == "realistic"
                 and by_id[r["sample_id"]].truth == "hesitated")
        tn = len(judged) - tp - fp - fn
        truth = {
            "positive": "hesitated",
            "n": len(judged),
            "confusion": {"tp": tp, "fp": fp, "fn": fn, "tn": tn},
            "accuracy": _ratio(tp + tn, len(judged)),
            "precision": _ratio(tp, tp + fp),
            "recall": _ratio(tp, tp + fn),
        }

    return {
        "dataset": manifest.name,
        "total": total,
        "kept": labels["realistic"],
        "filtered": labels["hesitated"],
        "skipped": labels["skipped"],
        "kept_fraction": _ratio(labels["realistic"], total),
        "by_fall_type": dict(sorted(by_type.items())),
        "histogram": {"edges": edges, **hist},
        "truth": truth,
    }


def histogram_csv(report: dict) -> str:
    h = report["histogram"]
    lines = ["bin_left,bin_right,realistic,hesitated"]
    edges = h["edges"]
    for i in range(max(len(edges) - 1, 0)):
        lines.append(f"{edges[i]!r},{edges[i + 1]!r},{h['realistic'][i]},{h['hesitated'][i]}")
    return "\n".join(lines) + "\n"


def write_report(report: dict, out_dir) -> tuple:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rj = out_dir / "report.json"
    hc = out_dir / "histogram.csv"
    rj.write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8", newline="\n")
    hc.write_text(histogram_csv(report), encoding="utf-8", newline="\n")
    return rj, hc
