"""Physics-based synthetic falls: rigid (rod pivoting on the feet), collapsing
(constant effective acceleration), and hesitated (upward braking superposed on
either).

Generated trajectories carry their dynamics in ``Trajectory.origin`` so that
:func:`apply_hesitation` can re-simulate the same fall with braking.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from fallsift import _backend
from fallsift.errors import DataError, NumericError, ParameterError
from fallsift.kinematics import CalibrationModel, Trajectory, write_trajectory_csv

G = 9.81
HALF_PI = 0.5 * math.pi


def _positive(name, value):
    if not (math.isfinite(value) and value > 0):
        raise ParameterError(f"{name} must be finite and positive, got {value}")


@dataclass(frozen=True)
class RigidFallParams:
    length: float
    theta0: float = math.radians(1.0)
    g: float = G
    dt: float = 1e-3

    def __post_init__(self):
        for name in ("length", "g", "dt"):
            _positive(name, getattr(self, name))
        if not 0.0 < self.theta0 < HALF_PI:
            raise ParameterError(f"theta0 must lie in (0, pi/2), got {self.theta0}")

    @property
    def k(self):
        """Angular acceleration per unit sin(theta) of a uniform rod."""
        return 1.5 * self.g / self.length


@dataclass(frozen=True)
class CollapseFallParams:
    drop_height: float
    g_eff: float = G
    g: float = G
    dt: float = 1e-3

    def __post_init__(self):
        for name in ("drop_height", "g_eff", "g", "dt"):
            _positive(name, getattr(self, name))
        if self.g_eff > self.g:
            raise ParameterError(f"g_eff {self.g_eff} exceeds g {self.g}")


@dataclass(frozen=True)
class HesitationParams:
    brake_onset: float
    brake_decel: float

    def __post_init__(self):
        if not 0.0 < self.brake_onset < 1.0:
            raise ParameterError(f"brake_onset must lie in (0, 1), got {self.brake_onset}")
        _positive("brake_decel", self.brake_decel)


# -- descent paths -----------------------------------------------------------

class _CollapsePath:
    """Closed-form descent under piecewise-constant vertical acceleration."""

    def __init__(self, p: CollapseFallParams, brake: Optional[HesitationParams]):
        h, a = p.drop_height, p.g_eff
        t_free = math.sqrt(2.0 * h / a)
        self.free_peak = a * t_free
        self.height0 = h
        self.g_eff = a
        if brake is None:
            self.t_on = t_free
            self.v_on = self.free_peak
            self.t_contact = t_free
            self.decel = 0.0
        else:
            v_on = brake.brake_onset * self.free_peak
            t_on = v_on / a
            y_on = h - 0.5 * a * t_on * t_on
            net = brake.brake_decel - a  # upward net acceleration after onset
            disc = v_on * v_on - 2.0 * net * y_on
            if disc <= 0.0:
                raise ParameterError(
                    "hesitation halts fall: braking stops the descent "
                    f"{y_on - v_on * v_on / (2.0 * net):.3f} m above the floor"
                )
            self.t_on, self.v_on, self.decel = t_on, v_on, net
            self.y_on = y_on
            self.t_contact = t_on + 2.0 * y_on / (v_on + math.sqrt(disc))
        self.peak_speed = max(self.v_on, self.v_on - self.decel * (self.t_contact - self.t_on))

    def height(self, t):
        t = np.clip(np.asarray(t, dtype=float), 0.0, self.t_contact)
        y = self.height0 - 0.5 * self.g_eff * t * t
        late = t > self.t_on
        if np.any(late):
            s = t[late] - self.t_on
            y[late] = self.y_on - self.v_on * s + 0.5 * self.decel * s * s
        y[t >= self.t_contact] = 0.0
        return y

    def horizontal(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))

    def vertical_velocity(self, t):
        t = np.asarray(t, dtype=float)
        v = -self.g_eff * np.clip(t, 0.0, None)
        late = t > self.t_on
        v[late] = -self.v_on + self.decel * (t[late] - self.t_on)
        v[(t <= 0.0) | (t >= self.t_contact)] = 0.0
        return v


def _rk4_step(theta, omega, k, h):
    sin = math.sin
    t1, w1 = omega, k * sin(theta)
    t2, w2 = omega + 0.5 * h * w1, k * sin(theta + 0.5 * h * t1)
    t3, w3 = omega + 0.5 * h * w2, k * sin(theta + 0.5 * h * t2)
    t4, w4 = omega + h * w3, k * sin(theta + h * t3)
    return (theta + h / 6.0 * (t1 + 2.0 * t2 + 2.0 * t3 + t4),
            omega + h / 6.0 * (w1 + 2.0 * w2 + 2.0 * w3 + w4))


def _refine(theta, omega, k, dt, event):
    """Partial RK4 step at which ``event(theta, omega)`` first turns >= 0."""
    lo, hi = 0.0, dt
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if event(*_rk4_step(theta, omega, k, mid)) >= 0.0:
            hi = mid
        else:
            lo = mid
    return hi, _rk4_step(theta, omega, k, hi)


class _RigidPath:
    """RK4 integration of the rod, optionally switching to a braked rod at onset.

    For the rod, ``brake_decel`` is an upward force per unit body mass acting
    at the head; its torque reduces the angular gain from ``3g/2L`` to
    ``3(g/2 - b)/L``.
    """

    def __init__(self, p: RigidFallParams, brake: Optional[HesitationParams]):
        self.length = p.length
        self.theta0 = p.theta0
        self.k = p.k
        budget = int((math.log(16.0 / p.theta0) / math.sqrt(p.k) * 2.0 + 1.0) / p.dt) + 16
        self.free_peak = p.length * math.sqrt(2.0 * p.k * math.cos(p.theta0))
        segments = []
        if brake is None:
            t, th, om = self._run(p.theta0, 0.0, p.k, p.dt, math.inf, False, budget, 0.0)
            segments.append((t, th, om, p.k))
            self.t_on = None
        else:
            v_on = brake.brake_onset * self.free_peak
            t, th, om, hit = self._run(
                p.theta0, 0.0, p.k, p.dt, v_on, False, budget, 0.0, with_code=True)
            if hit != 1:
                raise NumericError("rod reached the floor before the braking onset")
            segments.append((t, th, om, p.k))
            self.t_on = float(t[-1])
            k2 = 3.0 * (0.5 * p.g - brake.brake_decel) / p.length
            t2, th2, om2, hit = self._run(
                float(th[-1]), float(om[-1]), k2, p.dt, math.inf, True, budget,
                self.t_on, with_code=True)
            if hit == 2:
                raise ParameterError(
                    "hesitation halts fall: braked rod stops at "
                    f"{math.degrees(th2[-1]):.1f} deg before reaching the floor"
                )
            segments.append((t2, th2, om2, k2))
        self.segments = segments
        self.t_contact = float(segments[-1][0][-1])
        self.nodes_t = np.concatenate([s[0] for s in segments])
        self.nodes_theta = np.concatenate([s[1] for s in segments])
        self.nodes_omega = np.concatenate([s[2] for s in segments])
        self.peak_speed = float(np.max(p.length * np.sin(self.nodes_theta) * self.nodes_omega))

    def _run(self, theta, omega, k, dt, speed_stop, stall, budget, t0, with_code=False):
        lever = self.length
        th, om, code = _backend.rod_rk4(
            theta, omega, k, dt, HALF_PI, lever, speed_stop, stall, budget)
        if code == 3:
            raise NumericError("rod integration exceeded its step budget")
        t = t0 + dt * np.arange(th.size, dtype=float)
        if code in (0, 1):
            if code == 0:
                def event(a, w):
                    return a - HALF_PI
            else:
                def event(a, w):
                    return lever * math.sin(a) * w - speed_stop
            h, (a, w) = _refine(float(th[-2]), float(om[-2]), k, dt, event)
            t[-1] = t[-2] + h
            th[-1], om[-1] = (min(a, HALF_PI) if code == 0 else a), w
            if h <= 1e-12 * dt:
                # crossing sat on the previous node; avoid a zero-length step
                t, th, om = t[:-1], th[:-1], om[:-1]
                if code == 0:
                    th[-1] = HALF_PI
        if with_code:
            return t, th, om, code
        return t, th, om

    def theta(self, t):
        """Cubic Hermite interpolation of the RK4 nodes, held at both ends."""
        t = np.clip(np.asarray(t, dtype=float), 0.0, self.t_contact)
        out = np.empty_like(t)
        for seg_t, seg_th, seg_om, k in self.segments:
            lo, hi = seg_t[0], seg_t[-1]
            mask = (t >= lo) & (t <= hi)
            if not np.any(mask):
                continue
            tt = t[mask]
            j = np.clip(np.searchsorted(seg_t, tt, side="right") - 1, 0, seg_t.size - 2)
            h = seg_t[j + 1] - seg_t[j]
            s = (tt - seg_t[j]) / h
            h00 = (1 + 2 * s) * (1 - s) ** 2
            h10 = s * (1 - s) ** 2
            h01 = s * s * (3 - 2 * s)
            h11 = s * s * (s - 1)
            out[mask] = (h00 * seg_th[j] + h10 * h * seg_om[j]
                         + h01 * seg_th[j + 1] + h11 * h * seg_om[j + 1])
        return np.minimum(out, HALF_PI)

    def height(self, t):
        return self.length * np.cos(self.theta(t))

    def horizontal(self, t):
        return self.length * np.sin(self.theta(t))

    def omega(self, t):
        return np.interp(t, self.nodes_t, self.nodes_omega)

    def vertical_velocity(self, t):
        t = np.asarray(t, dtype=float)
        v = -self.length * np.sin(self.theta(t)) * self.omega(t)
        v[(t <= 0.0) | (t >= self.t_contact)] = 0.0
        return v


@dataclass(frozen=True)
class FallOrigin:
    """Everything needed to regenerate a synthetic trajectory."""

    params: object
    sample_rate: float
    rest_before: float
    rest_after: float
    hesitation: Optional[HesitationParams] = None

    @property
    def model(self):
        return "rigid" if isinstance(self.params, RigidFallParams) else "collapse"

    def path(self):
        if isinstance(self.params, RigidFallParams):
            return _RigidPath(self.params, self.hesitation)
        return _CollapsePath(self.params, self.hesitation)


def _render(origin: FallOrigin, sample_id: str) -> Trajectory:
    path = origin.path()
    total = origin.rest_before + path.t_contact + origin.rest_after
    count = int(math.floor(total * origin.sample_rate)) + 1
    t = np.arange(count) / origin.sample_rate
    local = t - origin.rest_before
    return Trajectory(
        sample_id, t, path.horizontal(local), path.height(local),
        "meters", "up_positive", origin,
    )


def _check_rate(sample_rate, rest_before, rest_after):
    _positive("sample_rate", sample_rate)
    if rest_before < 0 or rest_after < 0:
        raise ParameterError("rest durations must be non-negative")


def gen_rigid_fall(p: RigidFallParams, sample_rate: float, sample_id="rigid",
                   rest_before=0.2, rest_after=0.3) -> Trajectory:
    """Head of a rigid body toppling from ``theta0`` until horizontal."""
    _check_rate(sample_rate, rest_before, rest_after)
    if p.dt >= 1.0 / sample_rate:
        raise ParameterError(
            f"integration step {p.dt} must be finer than the output period {1 / sample_rate}"
        )
    return _render(FallOrigin(p, sample_rate, rest_before, rest_after), sample_id)


def gen_collapse_fall(p: CollapseFallParams, sample_rate: float, sample_id="collapse",
                      rest_before=0.2, rest_after=0.3) -> Trajectory:
    """Head dropping from rest through ``drop_height`` at constant ``g_eff``."""
    _check_rate(sample_rate, rest_before, rest_after)
    return _render(FallOrigin(p, sample_rate, rest_before, rest_after), sample_id)


def integrate_rigid(p: RigidFallParams, hesitation: Optional[HesitationParams] = None):
    """RK4 node times, angles and angular velocities of a (braked) rod."""
    path = _RigidPath(p, hesitation)
    return path.nodes_t, path.nodes_theta, path.nodes_omega


def descent_path(traj: Trajectory):
    """The analytic descent behind a generated trajectory (for oracles)."""
    if not isinstance(traj.origin, FallOrigin):
        raise DataError(f"{traj.sample_id}: not a generated trajectory")
    return traj.origin.path()


def apply_hesitation(traj: Trajectory, h: HesitationParams) -> Trajectory:
    """Re-simulate a generated fall with upward braking from the onset speed on."""
    origin = traj.origin
    if not isinstance(origin, FallOrigin):
        raise DataError(f"{traj.sample_id}: hesitation needs a generator-produced trajectory")
    if origin.hesitation is not None:
        raise DataError(f"{traj.sample_id}: trajectory is already hesitated")
    if traj.unit != "meters":
        raise DataError(f"{traj.sample_id}: hesitation is applied before pixel conversion")
    return _render(replace(origin, hesitation=h), traj.sample_id)


def add_pixel_noise(traj: Trajectory, calib: CalibrationModel, sigma_px: float,
                    seed: int) -> Trajectory:
    """Project to down-positive pixels and add seeded Gaussian tracker jitter."""
    if traj.unit != "meters" or traj.y_axis != "up_positive":
        raise DataError(f"{traj.sample_id}: expected a metric up_positive trajectory")
    if not (math.isfinite(sigma_px) and sigma_px >= 0):
        raise ParameterError(f"sigma_px must be non-negative, got {sigma_px}")
    x = traj.x / calib.scale
    y = -traj.y / calib.scale
    if sigma_px > 0:
        rng = np.random.default_rng(seed)
        x = x + rng.normal(0.0, sigma_px, x.size)
        y = y + rng.normal(0.0, sigma_px, y.size)
    return Trajectory(traj.sample_id, traj.t, x, y, "pixels", "down_positive", traj.origin)


# -- cohorts and corpora -----------------------------------------------------

@dataclass(frozen=True)
class SyntheticSample:
    trajectory: Trajectory
    truth: str  # "realistic" | "hesitated"
    fall_type: str


def make_cohort(n_realistic, n_hesitated, seed, sample_rate=30.0, drop_height=(1.5, 1.7),
                g_eff_frac=(0.7, 1.0), onset=(0.4, 0.7), decel=(3.0, 8.0),
                prefix="s") -> list[SyntheticSample]:
    """Seeded collapse cohort: unbraked falls plus hesitated (braked) ones."""
    rng = np.random.default_rng(seed)
    out = []
    labels = ["realistic"] * n_realistic + ["hesitated"] * n_hesitated
    for i, truth in enumerate(labels):
        params = CollapseFallParams(
            drop_height=float(rng.uniform(*drop_height)),
            g_eff=float(rng.uniform(*g_eff_frac)) * G,
        )
        sid = f"{prefix}{i:03d}"
        traj = gen_collapse_fall(params, sample_rate, sample_id=sid)
        if truth == "hesitated":
            hes = HesitationParams(float(rng.uniform(*onset)), float(rng.uniform(*decel)))
            traj = apply_hesitation(traj, hes)
        out.append(SyntheticSample(traj, truth, "collapse"))
    return out


def origin_to_dict(origin: FallOrigin) -> dict:
    d = {"model": origin.model, "sample_rate": origin.sample_rate}
    p = origin.params
    if isinstance(p, RigidFallParams):
        d.update(length=p.length, theta0=p.theta0, g=p.g, dt=p.dt)
    else:
        d.update(drop_height=p.drop_height, g_eff=p.g_eff, g=p.g)
    if origin.hesitation is not None:
        d["hesitation"] = {"onset": origin.hesitation.brake_onset,
                           "decel": origin.hesitation.brake_decel}
    return d


def sample_entry(sample: SyntheticSample, path: str, subject_meta=None) -> dict:
    """Manifest entry (catalog schema v1) for a generated sample."""
    entry = {
        "sample_id": sample.trajectory.sample_id,
        "path": path,
        "action_label": "fall",
        "fall_type": sample.fall_type,
        "truth": sample.truth,
    }
    if subject_meta:
        entry["subject_meta"] = dict(subject_meta)
    return entry


SYNTHETIC_SUBJECT = {"age": 30.0, "height": 1.75, "weight": 70.0, "gender": "unspecified"}


def write_corpus(samples, out_dir, name="synthetic", calib: Optional[CalibrationModel] = None,
                 sigma_px=0.0, seed=0, subject_meta=SYNTHETIC_SUBJECT) -> Path:
    """Write trajectory CSVs plus ``manifest.json``; returns the manifest path.

    With ``calib`` the tracks are stored as (optionally noisy) pixel tracks,
    otherwise as metric up-positive tracks.
    """
    out_dir = Path(out_dir)
    (out_dir / "trajectories").mkdir(parents=True, exist_ok=True)
    entries = []
    for i, sample in enumerate(sorted(samples, key=lambda s: s.trajectory.sample_id)):
        traj = sample.trajectory
        if calib is not None:
            traj = add_pixel_noise(traj, calib, sigma_px, seed + i)
        rel = f"trajectories/{traj.sample_id}.csv"
        write_trajectory_csv(traj, out_dir / rel)
        entries.append(sample_entry(sample, rel, subject_meta))
    manifest = {
        "schema_version": 1,
        "name": name,
        "calibration": (
            {"scale": calib.scale, "frame_rate": calib.frame_rate} if calib else None
        ),
        "samples": entries,
    }
    path = out_dir / "manifest.json"
    if manifest["calibration"] is None:
        del manifest["calibration"]
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path


def reference_falls(n, sample_rate=30.0, drop_height=(1.5, 1.7), prefix="ref"):
    """Unbraked full-gravity collapses used as the real-fall stand-ins."""
    lo, hi = drop_height
    heights = [0.5 * (lo + hi)] if n == 1 else list(np.linspace(lo, hi, n))
    return [
        gen_collapse_fall(CollapseFallParams(float(h)), sample_rate, sample_id=f"{prefix}{i:02d}")
        for i, h in enumerate(heights)
    ]


def write_bundle(out_dir, n_realistic=20, n_hesitated=20, n_refs=1, seed=0, sample_rate=30.0,
                 calib: Optional[CalibrationModel] = None, sigma_px=0.0, grid_step=1.0 / 30.0,
                 window=5) -> dict:
    """Seeded end-to-end fixture: reference profiles, labelled training
    profiles, and a held-out test corpus with ground truth.

    Layout: ``refs/*.csv`` and ``train/{realistic,hesitated}/*.csv`` hold
    velocity profiles; ``manifest.json`` + ``trajectories/`` hold the test set.
    """
    from fallsift.kinematics import extract_profile, write_profile_csv

    out_dir = Path(out_dir)
    ref_dir = out_dir / "refs"
    ref_dir.mkdir(parents=True, exist_ok=True)
    for traj in reference_falls(n_refs, sample_rate):
        write_profile_csv(extract_profile(traj, window=window, grid_step=grid_step),
                          ref_dir / f"{traj.sample_id}.csv")
    for truth in ("realistic", "hesitated"):
        (out_dir / "train" / truth).mkdir(parents=True, exist_ok=True)
    for s in make_cohort(n_realistic, n_hesitated, seed, sample_rate, prefix="train"):
        prof = extract_profile(s.trajectory, window=window, grid_step=grid_step)
        write_profile_csv(prof, out_dir / "train" / s.truth / f"{prof.sample_id}.csv")
    test = make_cohort(n_realistic, n_hesitated, seed + 1, sample_rate, prefix="s")
    manifest = write_corpus(test, out_dir, name=f"synthetic-seed{seed}", calib=calib,
                            sigma_px=sigma_px, seed=seed)
    return {"manifest": manifest, "refs": ref_dir, "train": out_dir / "train"}
