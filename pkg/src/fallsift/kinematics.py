"""Head trajectories to calibrated, smoothed, aligned vertical-velocity profiles.

Internally every metric quantity is up-positive, so a fall has negative
``vy``. Pixel trajectories are usually down-positive (image rows) and get
flipped by :func:`calibrate_trajectory`.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Optional

import numpy as np

from fallsift.errors import CalibrationError, DataError, ParameterError

UNITS = ("pixels", "meters")
Y_AXES = ("down_positive", "up_positive")

MIN_FRAMES = 5
DEFAULT_WINDOW = 5
DEFAULT_GRID_STEP = 1.0 / 30.0
MAX_JITTER = 0.01
GRID_TOL = 1e-9


def _frozen(values, name):
    arr = np.array(values, dtype=float)
    if arr.ndim != 1:
        raise DataError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time-stamped 2D head positions.

    ``t`` may be ``None`` for raw pixel tracks whose clock is only a frame
    rate; :func:`calibrate_trajectory` synthesizes it.  ``origin`` holds the
    generator dynamics for synthetic tracks (see :mod:`fallsift.synth`).
    """

    sample_id: str
    t: Optional[np.ndarray]
    x: np.ndarray
    y: np.ndarray
    unit: str
    y_axis: str
    origin: Any = field(default=None, repr=False)

    def __post_init__(self):
        if self.unit not in UNITS:
            raise DataError(f"unit must be one of {UNITS}, got {self.unit!r}")
        if self.y_axis not in Y_AXES:
            raise DataError(f"y_axis must be one of {Y_AXES}, got {self.y_axis!r}")
        x = _frozen(self.x, "x")
        y = _frozen(self.y, "y")
        if x.shape != y.shape:
            raise DataError("x and y lengths differ")
        if x.size < MIN_FRAMES:
            raise DataError(
                f"{self.sample_id}: trajectory needs at least {MIN_FRAMES} frames, got {x.size}"
            )
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if self.t is not None:
            t = _frozen(self.t, "t")
            if t.shape != x.shape:
                raise DataError("t length differs from positions")
            if np.any(np.diff(t) <= 0):
                raise DataError(f"{self.sample_id}: timestamps must be strictly increasing")
            object.__setattr__(self, "t", t)

    def __len__(self):
        return self.x.size

    @property
    def frames(self):
        t = self.t if self.t is not None else [math.nan] * len(self)
        return list(zip(map(float, t), map(float, self.x), map(float, self.y)))

    @property
    def is_metric(self):
        return self.unit == "meters"

    def _require_metric_up(self, op):
        if self.unit != "meters" or self.y_axis != "up_positive":
            raise DataError(f"{op} needs a metric up_positive trajectory; calibrate first")
        if self.t is None:
            raise DataError(f"{op} needs timestamps")


@dataclass(frozen=True)
class CalibrationModel:
    """Pixel-to-metre scale plus the frame rate used when timestamps are absent."""

    scale: float
    frame_rate: Optional[float] = None

    def __post_init__(self):
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise CalibrationError(f"scale must be finite and positive, got {self.scale}")
        if self.frame_rate is not None and not (
            math.isfinite(self.frame_rate) and self.frame_rate > 0
        ):
            raise CalibrationError(
                f"frame_rate must be finite and positive, got {self.frame_rate}"
            )


@dataclass(frozen=True, eq=False)
class VelocityProfile:
    """Vertical head velocity series, up-positive, in m/s."""

    sample_id: str
    t: np.ndarray
    vy: np.ndarray
    grid_step: float

    def __post_init__(self):
        t = _frozen(self.t, "t")
        vy = _frozen(self.vy, "vy")
        if t.size == 0 or t.shape != vy.shape:
            raise DataError("profile needs matching, nonempty t and vy")
        if np.any(np.diff(t) <= 0):
            raise DataError(f"{self.sample_id}: profile times must be strictly increasing")
        if not (math.isfinite(self.grid_step) and self.grid_step > 0):
            raise DataError(f"grid_step must be positive, got {self.grid_step}")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "vy", vy)

    def __len__(self):
        return self.t.size

    @property
    def samples(self):
        return list(zip(map(float, self.t), map(float, self.vy)))

    def is_uniform(self, tol=GRID_TOL):
        if self.t.size < 2:
            return True
        return bool(np.all(np.abs(np.diff(self.t) - self.grid_step) <= tol))

    def peak_index(self):
        return int(np.argmin(self.vy))

    def scaled(self, c):
        """Copy with every velocity multiplied by ``c``."""
        return replace(self, vy=self.vy * c)


def calibrate_trajectory(traj: Trajectory, calib: CalibrationModel) -> Trajectory:
    """Map a pixel trajectory to metric, up-positive coordinates."""
    if traj.unit != "pixels":
        raise CalibrationError(f"{traj.sample_id}: trajectory is already metric")
    if traj.t is None:
        if calib.frame_rate is None:
            raise CalibrationError(f"{traj.sample_id}: no timestamps and no frame_rate")
        t = np.arange(len(traj)) / calib.frame_rate
    else:
        t = traj.t
    x = traj.x * calib.scale
    y = traj.y * calib.scale
    if traj.y_axis == "down_positive":
        y = -y
    return Trajectory(traj.sample_id, t, x, y, "meters", "up_positive", traj.origin)


def _check_window(window, n):
    if not isinstance(window, (int, np.integer)) or window < 3 or window % 2 == 0:
        raise ParameterError(f"window must be an odd integer >= 3, got {window!r}")
    if window > n:
        raise ParameterError(f"window {window} exceeds trajectory length {n}")


def smooth_positions(traj: Trajectory, window: int = DEFAULT_WINDOW) -> Trajectory:
    """Replace each ``y`` by a local quadratic least-squares fit.

    Interior frames use the centred window. Boundary frames evaluate the fit
    of the first/last full window, so quadratics are reproduced everywhere.
    """
    traj._require_metric_up("smooth_positions")
    n = len(traj)
    _check_window(window, n)
    half = window // 2
    idx = np.arange(n)
    start = np.clip(idx, half, n - 1 - half) - half
    rows = start[:, None] + np.arange(window)[None, :]
    t, y = traj.t, traj.y
    span = t[rows[:, -1]] - t[rows[:, 0]]
    tau = (t[rows] - t[idx][:, None]) / span[:, None]
    design = np.stack([np.ones_like(tau), tau, tau * tau], axis=-1)
    normal = np.einsum("nwi,nwj->nij", design, design)
    rhs = np.einsum("nwi,nw->ni", design, y[rows])
    coef = np.linalg.solve(normal, rhs[..., None])[..., 0]
    return replace(traj, y=coef[:, 0])


def differentiate(traj: Trajectory) -> VelocityProfile:
    """Vertical velocity by central differences (one-sided at the ends)."""
    traj._require_metric_up("differentiate")
    t = traj.t
    dt = np.diff(t)
    step = float(np.median(dt))
    jitter = float(np.max(np.abs(dt - step))) / step
    if jitter > MAX_JITTER:
        raise DataError(
            f"{traj.sample_id}: timestamp jitter {jitter:.2%} exceeds {MAX_JITTER:.0%}; "
            "resample the trajectory onto a uniform clock first"
        )
    y = traj.y
    vy = np.empty_like(y)
    vy[1:-1] = (y[2:] - y[:-2]) / (t[2:] - t[:-2])
    vy[0] = (y[1] - y[0]) / (t[1] - t[0])
    vy[-1] = (y[-1] - y[-2]) / (t[-1] - t[-2])
    return VelocityProfile(traj.sample_id, t, vy, step)


def resample_profile(p: VelocityProfile, grid_step: float = DEFAULT_GRID_STEP) -> VelocityProfile:
    """Linear interpolation onto a uniform grid starting at the first sample."""
    if not (math.isfinite(grid_step) and grid_step > 0):
        raise ParameterError(f"grid_step must be positive, got {grid_step}")
    t0, t1 = float(p.t[0]), float(p.t[-1])
    span = t1 - t0
    if grid_step > span:
        raise DataError(
            f"{p.sample_id}: grid_step {grid_step} exceeds profile span {span}"
        )
    if abs(p.grid_step - grid_step) <= GRID_TOL and p.is_uniform():
        return p
    count = int(math.floor(span / grid_step + 1e-9)) + 1
    nodes = t0 + np.arange(count) * grid_step
    if abs(nodes[-1] - t1) <= GRID_TOL:
        nodes[-1] = t1
    nodes = np.minimum(nodes, t1)
    return VelocityProfile(p.sample_id, nodes, np.interp(nodes, p.t, p.vy), grid_step)


def align_at_peak(p: VelocityProfile) -> VelocityProfile:
    """Shift time so the most negative ``vy`` (earliest on ties) is at t = 0."""
    i = p.peak_index()
    if p.vy[i] >= 0.0:
        raise DataError(f"{p.sample_id}: no fall peak (no downward velocity)")
    return replace(p, t=p.t - p.t[i])


def segment_fall_window(
    p: VelocityProfile, enter_frac: float = 0.1, exit_frac: float = 0.1
) -> VelocityProfile:
    """Cut the contiguous fall event around the velocity peak.

    The window opens at the last sample before the peak lying above
    ``-enter_frac * |vy_min|`` and closes at the first sample after the peak
    above ``-exit_frac * |vy_min|``; both boundary samples are kept.
    """
    if not (0.0 < exit_frac <= enter_frac < 1.0):
        raise ParameterError(
            f"need 0 < exit_frac <= enter_frac < 1, got {exit_frac}, {enter_frac}"
        )
    k = p.peak_index()
    vmin = float(p.vy[k])
    if vmin >= 0.0:
        raise DataError(f"{p.sample_id}: no fall peak (no downward velocity)")
    vy = p.vy
    above_enter = np.flatnonzero(vy[:k] > enter_frac * vmin)
    lo = int(above_enter[-1]) if above_enter.size else 0
    above_exit = np.flatnonzero(vy[k + 1:] > exit_frac * vmin)
    hi = k + 1 + int(above_exit[0]) if above_exit.size else len(p) - 1
    return replace(p, t=p.t[lo:hi + 1], vy=vy[lo:hi + 1])


def extract_profile(
    traj: Trajectory,
    calib: Optional[CalibrationModel] = None,
    window: int = DEFAULT_WINDOW,
    grid_step: float = DEFAULT_GRID_STEP,
    enter_frac: float = 0.1,
    exit_frac: float = 0.1,
) -> VelocityProfile:
    """Full chain: calibrate, smooth, differentiate, resample, align, segment."""
    if traj.unit == "pixels":
        if calib is None:
            raise CalibrationError(f"{traj.sample_id}: pixel trajectory needs a calibration")
        traj = calibrate_trajectory(traj, calib)
    elif traj.y_axis != "up_positive":
        traj = replace(traj, y=-traj.y, y_axis="up_positive")
    if traj.t is None:
        if calib is None or calib.frame_rate is None:
            raise CalibrationError(f"{traj.sample_id}: no timestamps and no frame_rate")
        traj = replace(traj, t=np.arange(len(traj)) / calib.frame_rate)
    prof = differentiate(smooth_positions(traj, window))
    prof = align_at_peak(resample_profile(prof, grid_step))
    return segment_fall_window(prof, enter_frac, exit_frac)


# -- CSV formats -------------------------------------------------------------

def _fmt(v):
    return repr(float(v))


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """Write ``frame,t,x,y`` with ``# key: value`` directives for unit and axis."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# sample_id: {traj.sample_id}\n")
        fh.write(f"# unit: {traj.unit}\n")
        fh.write(f"# y_axis: {traj.y_axis}\n")
        if traj.t is None:
            fh.write("frame,x,y\n")
            for i, (x, y) in enumerate(zip(traj.x, traj.y)):
                fh.write(f"{i},{_fmt(x)},{_fmt(y)}\n")
        else:
            fh.write("frame,t,x,y\n")
            for i, (t, x, y) in enumerate(zip(traj.t, traj.x, traj.y)):
                fh.write(f"{i},{_fmt(t)},{_fmt(x)},{_fmt(y)}\n")


def _read_rows(path):
    directives = {}
    lines = []
    with Path(path).open(encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, sep, value = line[1:].partition(":")
                if sep:
                    directives[key.strip()] = value.strip()
                continue
            lines.append(line)
    if not lines:
        raise DataError(f"{path}: no header row")
    reader = csv.reader(lines)
    header = [h.strip() for h in next(reader)]
    return directives, header, list(reader)


def _column(rows, header, name, path):
    j = header.index(name)
    try:
        return [float(r[j]) for r in rows]
    except (ValueError, IndexError) as exc:
        raise DataError(f"{path}: bad value in column {name!r}: {exc}") from None


def read_trajectory_csv(path, sample_id=None, unit=None, y_axis=None,
                        unit_default=None, y_axis_default=None) -> Trajectory:
    """Read a trajectory CSV; unit and axis come from directives or arguments.

    A directive and an explicit argument that disagree is an error. The
    ``*_default`` values apply only when the file is silent; with neither,
    reading fails since units are never guessed.
    """
    path = Path(path)
    try:
        directives, header, rows = _read_rows(path)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    for col in ("frame", "x", "y"):
        if col not in header:
            raise DataError(f"{path}: missing column {col!r} (expected frame,t,x,y)")

    def resolve(key, given, default):
        found = directives.get(key)
        if found is not None and given is not None and found != given:
            raise DataError(f"{path}: file declares {key}={found} but {given} was requested")
        value = found if found is not None else given
        if value is None:
            value = default
        if value is None:
            raise DataError(f"{path}: {key} not declared; pass it explicitly")
        return value

    t = _column(rows, header, "t", path) if "t" in header else None
    return Trajectory(
        sample_id or directives.get("sample_id") or path.stem,
        t,
        _column(rows, header, "x", path),
        _column(rows, header, "y", path),
        resolve("unit", unit, unit_default),
        resolve("y_axis", y_axis, y_axis_default),
    )


def write_profile_csv(p: VelocityProfile, path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,vy\n")
        for t, v in zip(p.t, p.vy):
            fh.write(f"{_fmt(t)},{_fmt(v)}\n")


def read_profile_csv(path, sample_id=None, grid_step=None) -> VelocityProfile:
    path = Path(path)
    try:
        _, header, rows = _read_rows(path)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    if header[:2] != ["t", "vy"]:
        raise DataError(f"{path}: expected header t,vy")
    t = np.array(_column(rows, header, "t", path))
    vy = _column(rows, header, "vy", path)
    if grid_step is None:
        grid_step = float(np.median(np.diff(t))) if t.size > 1 else DEFAULT_GRID_STEP
    return VelocityProfile(sample_id or path.stem, t, vy, grid_step)
