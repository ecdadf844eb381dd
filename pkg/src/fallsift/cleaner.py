"""Realistic-vs-hesitated classification by distance to real-fall references.

A candidate's score is its Hausdorff distance to the nearest reference
profile. Two Gaussians fitted to labelled scores give the decision threshold
at their density intersection; samples at or below it are kept.
"""
from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from fallsift.errors import DataError, DegenerateFitError, FallsiftError, NumericError
from fallsift.hausdorff import DEFAULT_MODE, HdMode, check_comparable, profile_distance
from fallsift.kinematics import (
    DEFAULT_GRID_STEP, DEFAULT_WINDOW, GRID_TOL, VelocityProfile, align_at_peak,
    extract_profile, read_profile_csv, read_trajectory_csv, resample_profile,
)

log = logging.getLogger(__name__)

REALISTIC = "realistic"
HESITATED = "hesitated"
SKIPPED = "skipped"


class OrderingError(NumericError):
    pass


@dataclass(frozen=True)
class ReferenceSet:
    profiles: tuple
    source_label: str = "real falls"

    def __post_init__(self):
        profiles = tuple(self.profiles)
        if not profiles:
            raise DataError("reference set is empty")
        first = profiles[0]
        for p in profiles:
            check_comparable(first, p)
        object.__setattr__(self, "profiles", profiles)

    @property
    def grid_step(self):
        return self.profiles[0].grid_step

    def __len__(self):
        return len(self.profiles)

    def scaled(self, c):
        return ReferenceSet(tuple(p.scaled(c) for p in self.profiles), self.source_label)


def load_references(directory, grid_step=DEFAULT_GRID_STEP, source_label=None) -> ReferenceSet:
    """Read every ``*.csv`` profile in ``directory``, resampled and peak-aligned."""
    directory = Path(directory)
    files = sorted(directory.glob("*.csv"))
    if not files:
        raise DataError(f"no reference profiles (*.csv) in {directory}")
    profiles = [align_at_peak(resample_profile(read_profile_csv(f), grid_step)) for f in files]
    return ReferenceSet(tuple(profiles), source_label or directory.name)


@dataclass(frozen=True)
class GaussianModel:
    mu: float
    sigma: float
    n: int

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise DegenerateFitError(f"sigma must be positive, got {self.sigma}")
        if self.n < 2:
            raise DegenerateFitError(f"need at least 2 samples, got {self.n}")

    def pdf(self, x):
        z = (np.asarray(x, dtype=float) - self.mu) / self.sigma
        return np.exp(-0.5 * z * z) / (self.sigma * math.sqrt(2.0 * math.pi))

    def to_dict(self):
        return {"mu": self.mu, "sigma": self.sigma, "n": self.n}

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["mu"]), float(d["sigma"]), int(d["n"]))


def fit_gaussian(distances: Sequence[float]) -> GaussianModel:
    """Maximum-likelihood normal fit (population standard deviation)."""
    x = np.asarray(distances, dtype=float)
    if x.size < 2:
        raise DegenerateFitError(f"need at least 2 distances, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise DataError("distances must be finite")
    mu = float(np.mean(x))
    sigma = float(np.sqrt(np.mean((x - mu) ** 2)))
    if sigma == 0.0:
        raise DegenerateFitError("all distances are equal; variance is zero")
    return GaussianModel(mu, sigma, int(x.size))


def gaussian_intersection(a: GaussianModel, b: GaussianModel) -> float:
    """Point between ``a.mu`` and ``b.mu`` where the two densities are equal.

    Equating log densities gives ``A x^2 + B x + C = 0``; this is linear
    when the sigmas match and the answer is the midpoint.
    """
    if not a.mu < b.mu:
        raise OrderingError(f"need a.mu < b.mu, got {a.mu} >= {b.mu}")
    if a.sigma == b.sigma:
        return 0.5 * (a.mu + b.mu)
    va, vb = a.sigma ** 2, b.sigma ** 2
    qa = 0.5 / vb - 0.5 / va
    qb = a.mu / va - b.mu / vb
    qc = 0.5 * b.mu ** 2 / vb - 0.5 * a.mu ** 2 / va + math.log(b.sigma / a.sigma)

    def f(x):
        return qa * x * x + qb * x + qc

    disc = qb * qb - 4.0 * qa * qc
    if disc < 0.0:
        raise NumericError("Gaussian densities never intersect")
    q = -0.5 * (qb + math.copysign(math.sqrt(disc), qb))
    roots = [r for r in (q / qa, qc / q if q != 0.0 else math.nan) if a.mu < r < b.mu]
    # keep the crossing where density a hands over to density b
    roots = [r for r in roots if 2.0 * qa * r + qb < 0.0]
    if len(roots) != 1:
        raise NumericError(
            f"no density crossing between the means {a.mu} and {b.mu}"
        )
    x = roots[0]
    for _ in range(3):
        slope = 2.0 * qa * x + qb
        step = f(x) / slope
        if not math.isfinite(step) or not a.mu < x - step < b.mu:
            break
        x -= step
    return x


FIXED = "fixed"
GAUSSIAN_INTERSECTION = "gaussian_intersection"


@dataclass(frozen=True)
class ThresholdModel:
    tau: float
    realistic_model: GaussianModel
    hesitated_model: GaussianModel
    method: str = GAUSSIAN_INTERSECTION

    def __post_init__(self):
        if self.method not in (GAUSSIAN_INTERSECTION, FIXED):
            raise DataError(f"unknown threshold method {self.method!r}")
        if not self.realistic_model.mu < self.hesitated_model.mu:
            raise OrderingError("realistic mean must be below hesitated mean")
        if self.method == GAUSSIAN_INTERSECTION and not (
            self.realistic_model.mu < self.tau < self.hesitated_model.mu
        ):
            raise NumericError("tau must lie strictly between the two means")

    def to_dict(self):
        return {
            "tau": self.tau,
            "method": self.method,
            "realistic": self.realistic_model.to_dict(),
            "hesitated": self.hesitated_model.to_dict(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            float(d["tau"]),
            GaussianModel.from_dict(d["realistic"]),
            GaussianModel.from_dict(d["hesitated"]),
            d.get("method", GAUSSIAN_INTERSECTION),
        )

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path):
        try:
            return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise DataError(f"cannot read threshold model {path}: {exc}") from None


def fit_threshold(realistic_d, hesitated_d) -> ThresholdModel:
    real = fit_gaussian(realistic_d)
    hes = fit_gaussian(hesitated_d)
    if not real.mu < hes.mu:
        raise OrderingError(
            "groups not separable in expected order: "
            f"realistic mean {real.mu:.4g} >= hesitated mean {hes.mu:.4g}"
        )
    return ThresholdModel(gaussian_intersection(real, hes), real, hes)


@dataclass(frozen=True)
class CleaningDecision:
    sample_id: str
    distance: float
    per_reference: tuple  # ((reference_id, distance), ...)
    label: str
    tau: float

    def to_dict(self):
        return {
            "sample_id": self.sample_id,
            "distance": self.distance,
            "per_reference": [
                {"reference_id": rid, "distance": d} for rid, d in self.per_reference
            ],
            "label": self.label,
            "tau": self.tau,
        }


def distance_to_references(candidate: VelocityProfile, refs: ReferenceSet,
                           mode: HdMode = DEFAULT_MODE, aggregate="min"):
    """Aggregate distance (nearest reference by default) plus the per-reference list."""
    if not isinstance(refs, ReferenceSet) or len(refs) == 0:
        raise DataError("reference set is empty")
    if abs(candidate.grid_step - refs.grid_step) > GRID_TOL:
        raise DataError(
            f"{candidate.sample_id}: grid_step {candidate.grid_step} does not match "
            f"references ({refs.grid_step})"
        )
    per = tuple((r.sample_id, profile_distance(candidate, r, mode).symmetric)
                for r in refs.profiles)
    values = [d for _, d in per]
    if aggregate == "min":
        agg = min(values)
    elif aggregate == "mean":
        agg = float(np.mean(values))
    else:
        raise DataError(f"unknown aggregate {aggregate!r}")
    return agg, per


def label_for(distance, tau):
    return REALISTIC if distance <= tau else HESITATED


def classify_sample(candidate: VelocityProfile, refs: ReferenceSet, tm: ThresholdModel,
                    mode: HdMode = DEFAULT_MODE, aggregate="min") -> CleaningDecision:
    dist, per = distance_to_references(candidate, refs, mode, aggregate)
    return CleaningDecision(candidate.sample_id, dist, per, label_for(dist, tm.tau), tm.tau)


@dataclass(frozen=True)
class SkippedSample:
    sample_id: str
    reason: str

    def to_dict(self):
        return {"sample_id": self.sample_id, "label": SKIPPED, "reason": self.reason}


def _stats(values):
    if not values:
        return {"n": 0}
    x = np.asarray(values, dtype=float)
    return {"n": int(x.size), "mean": float(x.mean()), "std": float(x.std()),
            "min": float(x.min()), "max": float(x.max())}


@dataclass
class CleaningResult:
    decisions: list
    skipped: list = field(default_factory=list)
    tau: Optional[float] = None

    @property
    def summary(self):
        kept = [d.distance for d in self.decisions if d.label == REALISTIC]
        filt = [d.distance for d in self.decisions if d.label == HESITATED]
        return {
            "total": len(self.decisions) + len(self.skipped),
            "kept": len(kept),
            "filtered": len(filt),
            "skipped": len(self.skipped),
            "tau": self.tau,
            "distance_stats": {REALISTIC: _stats(kept), HESITATED: _stats(filt)},
        }

    def records(self):
        rows = [d.to_dict() for d in self.decisions] + [s.to_dict() for s in self.skipped]
        return sorted(rows, key=lambda r: r["sample_id"])

    def to_jsonl(self):
        lines = [json.dumps(r, sort_keys=False) for r in self.records()]
        lines.append(json.dumps({"summary": self.summary}))
        return "\n".join(lines) + "\n"

    def write_jsonl(self, path):
        Path(path).write_text(self.to_jsonl(), encoding="utf-8", newline="\n")

    def write_csv(self, path):
        with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
            fh.write("sample_id,distance,label\n")
            for r in self.records():
                dist = "" if r["label"] == SKIPPED else repr(r["distance"])
                fh.write(f"{r['sample_id']},{dist},{r['label']}\n")


def clean_dataset(manifest, refs: ReferenceSet, tm: ThresholdModel,
                  mode: HdMode = DEFAULT_MODE, root=None, *, window=DEFAULT_WINDOW,
                  enter_frac=0.1, exit_frac=0.1, aggregate="min", jobs=1) -> CleaningResult:
    """Run the per-sample pipeline over a manifest; failures become skipped entries.

    ``root`` defaults to the manifest's own directory. Samples run on ``jobs``
    threads; output order is always by ``sample_id``.
    """
    root = Path(root) if root is not None else getattr(manifest, "root", None) or Path(".")
    calib = manifest.calibration
    grid = refs.grid_step

    def one(entry):
        try:
            traj = read_trajectory_csv(root / entry.path, sample_id=entry.sample_id)
            prof = extract_profile(traj, calib, window, grid, enter_frac, exit_frac)
            return classify_sample(prof, refs, tm, mode, aggregate)
        except (FallsiftError, OSError) as exc:
            log.warning("skipping %s: %s", entry.sample_id, exc)
            return SkippedSample(entry.sample_id, str(exc))

    entries = sorted(manifest.samples, key=lambda e: e.sample_id)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, entries))
    else:
        results = [one(e) for e in entries]
    decisions = [r for r in results if isinstance(r, CleaningDecision)]
    skipped = [r for r in results if isinstance(r, SkippedSample)]
    return CleaningResult(decisions, skipped, tm.tau)
