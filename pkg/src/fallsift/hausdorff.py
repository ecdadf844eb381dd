"""Hausdorff distance between point sets and between velocity profiles.

Two point-set views of a profile are supported: the bare velocity values
(``velocity_1d``, distances in m/s) and ``(lambda * t, vy)`` pairs under the
Euclidean norm (``time_velocity_2d``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from fallsift import _backend
from fallsift.errors import DataError, ParameterError
from fallsift.kinematics import GRID_TOL, VelocityProfile

VELOCITY_1D = "velocity_1d"
TIME_VELOCITY_2D = "time_velocity_2d"


@dataclass(frozen=True)
class HdMode:
    kind: str = VELOCITY_1D
    lam: float = 1.0  # (m/s) per second of time offset; 2d only

    def __post_init__(self):
        if self.kind not in (VELOCITY_1D, TIME_VELOCITY_2D):
            raise ParameterError(f"unknown Hausdorff mode {self.kind!r}")
        if self.kind == TIME_VELOCITY_2D and not (math.isfinite(self.lam) and self.lam > 0):
            raise ParameterError(f"lambda must be finite and positive, got {self.lam}")

    @classmethod
    def parse(cls, name, lam=1.0):
        """Accept the CLI spellings ``1d`` / ``2d`` as well as the full names."""
        kind = {"1d": VELOCITY_1D, "2d": TIME_VELOCITY_2D}.get(name, name)
        return cls(kind, lam)

    def to_dict(self):
        return {"kind": self.kind, "lambda": self.lam}


DEFAULT_MODE = HdMode()


@dataclass(frozen=True)
class HdResult:
    forward: float
    backward: float
    symmetric: float
    mode: HdMode

    def to_dict(self):
        return {
            "forward": self.forward,
            "backward": self.backward,
            "symmetric": self.symmetric,
            "mode": self.mode.to_dict(),
        }


def _points(a, mode):
    arr = np.asarray(a, dtype=float)
    if mode.kind == VELOCITY_1D:
        arr = arr.reshape(-1)
    else:
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise DataError("2d mode expects an (n, 2) array of (t, vy) pairs")
        arr = np.column_stack([mode.lam * arr[:, 0], arr[:, 1]])
    if arr.shape[0] == 0:
        raise DataError("Hausdorff distance of an empty point set")
    if not np.all(np.isfinite(arr)):
        raise DataError("point set contains non-finite values")
    return np.ascontiguousarray(arr)


def _directed(a, b, mode):
    if mode.kind == VELOCITY_1D:
        return float(_backend.directed_hd_1d(a, b))
    return float(_backend.directed_hd_2d(a, b))


def directed_hd(a, b, mode: HdMode = DEFAULT_MODE) -> float:
    """max over a in A of min over b in B of |a - b|."""
    return _directed(_points(a, mode), _points(b, mode), mode)


def symmetric_hd(a, b, mode: HdMode = DEFAULT_MODE) -> HdResult:
    pa, pb = _points(a, mode), _points(b, mode)
    fwd = _directed(pa, pb, mode)
    bwd = _directed(pb, pa, mode)
    return HdResult(fwd, bwd, max(fwd, bwd), mode)


def profile_points(p: VelocityProfile, mode: HdMode):
    if mode.kind == VELOCITY_1D:
        return p.vy
    return np.column_stack([p.t, p.vy])


def check_comparable(p: VelocityProfile, q: VelocityProfile) -> None:
    if abs(p.grid_step - q.grid_step) > GRID_TOL:
        raise DataError(
            f"grid_step mismatch: {p.sample_id}={p.grid_step} vs {q.sample_id}={q.grid_step}"
        )
    for prof in (p, q):
        peak_t = float(prof.t[prof.peak_index()])
        if abs(peak_t) > prof.grid_step + GRID_TOL:
            raise DataError(
                f"{prof.sample_id}: profile not aligned (peak at t={peak_t:.6g} s); "
                "run align_at_peak first"
            )


def profile_distance(
    p: VelocityProfile, q: VelocityProfile, mode: HdMode = DEFAULT_MODE
) -> HdResult:
    """Symmetric Hausdorff distance between two aligned, co-gridded profiles."""
    check_comparable(p, q)
    return symmetric_hd(profile_points(p, mode), profile_points(q, mode), mode)
