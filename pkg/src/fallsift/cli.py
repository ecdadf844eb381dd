"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric/degenerate
error. Machine-readable output goes to ``--out`` or stdout; logs go to
stderr, with verbosity from ``FALLSIFT_LOG`` (error|warn|info|debug).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from fallsift import catalog, cleaner, hausdorff, kinematics, synth
from fallsift.errors import DataError, FallsiftError, ParameterError

log = logging.getLogger("fallsift")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


def _setup_logging():
    level = {"error": logging.ERROR, "warn": logging.WARNING, "warning": logging.WARNING,
             "info": logging.INFO, "debug": logging.DEBUG}.get(
        os.environ.get("FALLSIFT_LOG", "warn").lower(), logging.WARNING)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger("fallsift")
    root.handlers[:] = [handler]
    root.setLevel(level)
    root.propagate = False


def _emit(text, out):
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def _mode(args):
    return hausdorff.HdMode.parse(args.mode, args.lam)


def _add_mode(p):
    p.add_argument("--mode", choices=["1d", "2d"], default="1d")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0,
                   help="time weight in (m/s)/s for --mode 2d")


def _add_pipeline(p):
    p.add_argument("--window", type=int, default=kinematics.DEFAULT_WINDOW)
    p.add_argument("--grid", type=float, default=kinematics.DEFAULT_GRID_STEP)
    p.add_argument("--enter-frac", type=float, default=0.1)
    p.add_argument("--exit-frac", type=float, default=0.1)


def cmd_velocity(args):
    traj = kinematics.read_trajectory_csv(
        args.trajectory, unit_default="pixels", y_axis_default=args.y_axis)
    calib = kinematics.CalibrationModel(args.scale, args.fps)
    prof = kinematics.extract_profile(traj, calib, args.window, args.grid,
                                      args.enter_frac, args.exit_frac)
    kinematics.write_profile_csv(prof, args.out)
    log.info("wrote %d samples to %s", len(prof), args.out)


def _load_profile(path, grid, align):
    p = kinematics.read_profile_csv(path)
    if grid is not None:
        p = kinematics.resample_profile(p, grid)
    if align:
        p = kinematics.align_at_peak(p)
    return p


def cmd_compare(args):
    a = _load_profile(args.a, args.grid, args.align)
    b = _load_profile(args.b, args.grid, args.align)
    res = hausdorff.profile_distance(a, b, _mode(args))
    _emit(json.dumps(res.to_dict()) + "\n", args.out)


def _read_distances(path):
    text = Path(path).read_text(encoding="utf-8").strip()
    if text.startswith("["):
        values = json.loads(text)
    else:
        values = [tok for line in text.splitlines() if not line.lstrip().startswith("#")
                  for tok in line.replace(",", " ").split()]
    try:
        return [float(v) for v in values]
    except (TypeError, ValueError) as exc:
        raise DataError(f"{path}: not a list of distances: {exc}") from None


def _group_distances(path, refs, mode, aggregate):
    path = Path(path)
    if path.is_dir():
        if refs is None:
            raise ParameterError(f"{path} is a directory of profiles; --refs is required")
        out = []
        for f in sorted(path.glob("*.csv")):
            prof = kinematics.align_at_peak(
                kinematics.resample_profile(kinematics.read_profile_csv(f), refs.grid_step))
            out.append(cleaner.distance_to_references(prof, refs, mode, aggregate)[0])
        return out
    if not path.is_file():
        raise DataError(f"{path}: no such file or directory")
    return _read_distances(path)


def cmd_fit_threshold(args):
    refs = cleaner.load_references(args.refs, args.grid) if args.refs else None
    mode = _mode(args)
    real = _group_distances(args.realistic, refs, mode, args.aggregate)
    hes = _group_distances(args.hesitated, refs, mode, args.aggregate)
    tm = cleaner.fit_threshold(real, hes)
    _emit(json.dumps(tm.to_dict(), indent=2) + "\n", args.out)
    log.info("tau = %.6g m/s", tm.tau)


def cmd_clean(args):
    manifest = catalog.load_manifest(args.manifest)
    refs = cleaner.load_references(args.refs, args.grid)
    tm = cleaner.ThresholdModel.load(args.model)
    result = cleaner.clean_dataset(
        manifest, refs, tm, _mode(args), window=args.window, enter_frac=args.enter_frac,
        exit_frac=args.exit_frac, aggregate=args.aggregate, jobs=args.jobs)
    _emit(result.to_jsonl(), args.out)
    if args.csv:
        result.write_csv(args.csv)
    s = result.summary
    log.info("kept %d, filtered %d, skipped %d", s["kept"], s["filtered"], s["skipped"])


def _parse_hesitation(text):
    try:
        onset, decel = (float(v) for v in text.split(","))
    except ValueError:
        raise ParameterError(f"--hesitate expects ONSET,DECEL, got {text!r}") from None
    return synth.HesitationParams(onset, decel)


def cmd_synth(args):
    if args.model == "rigid":
        params = synth.RigidFallParams(args.height, theta0=args.theta0, dt=args.dt)
        traj = synth.gen_rigid_fall(params, args.fps, sample_id="tmp")
    else:
        g_eff = args.g_eff if args.g_eff is not None else synth.G
        params = synth.CollapseFallParams(args.height, g_eff=g_eff)
        traj = synth.gen_collapse_fall(params, args.fps, sample_id="tmp")
    hes = _parse_hesitation(args.hesitate) if args.hesitate else None
    if hes is not None:
        traj = synth.apply_hesitation(traj, hes)
    sid = args.id or _synth_id(args, hes)
    traj = kinematics.Trajectory(sid, traj.t, traj.x, traj.y, traj.unit, traj.y_axis, traj.origin)
    calib = None
    if args.noise is not None or args.scale is not None:
        calib = kinematics.CalibrationModel(args.scale or 0.005, args.fps)
        traj = synth.add_pixel_noise(traj, calib, args.noise or 0.0, args.seed)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rel = f"{sid}.csv"
    kinematics.write_trajectory_csv(traj, out / rel)
    sample = synth.SyntheticSample(traj, "hesitated" if hes else "realistic", args.model)
    entry = synth.sample_entry(sample, rel, synth.SYNTHETIC_SUBJECT)
    mpath = out / "manifest.json"
    if mpath.exists():
        data = json.loads(mpath.read_text(encoding="utf-8"))
        old_cal = data.get("calibration")
        new_cal = {"scale": calib.scale, "frame_rate": calib.frame_rate} if calib else None
        if old_cal != new_cal and any(s["sample_id"] != sid for s in data["samples"]):
            raise DataError(f"{mpath}: calibration differs from this sample's")
        data["samples"] = [s for s in data["samples"] if s["sample_id"] != sid] + [entry]
        data["samples"].sort(key=lambda s: s["sample_id"])
    else:
        data = {"schema_version": 1, "name": out.name, "samples": [entry]}
        if calib:
            data["calibration"] = {"scale": calib.scale, "frame_rate": calib.frame_rate}
    manifest = catalog.parse_manifest(data)
    mpath.write_text(manifest.to_json(), encoding="utf-8", newline="\n")
    print(json.dumps(entry))


def _synth_id(args, hes):
    parts = [args.model, f"h{args.height:g}"]
    if args.g_eff is not None:
        parts.append(f"a{args.g_eff:g}")
    if hes is not None:
        parts.append(f"hes{hes.brake_onset:g}-{hes.brake_decel:g}")
    if args.noise:
        parts.append(f"n{args.noise:g}s{args.seed}")
    return "_".join(parts)


def cmd_corpus(args):
    calib = None
    if args.noise is not None or args.scale is not None:
        calib = kinematics.CalibrationModel(args.scale or 0.005, args.fps)
    paths = synth.write_bundle(
        args.out, args.n_realistic, args.n_hesitated, args.n_refs, args.seed, args.fps,
        calib, args.noise or 0.0, args.grid, args.window)
    print(json.dumps({k: str(v) for k, v in paths.items()}))


def cmd_report(args):
    manifest = catalog.load_manifest(args.manifest)
    decisions = catalog.read_decisions(args.decisions)
    report = catalog.emit_report(decisions, manifest, bins=args.bins)
    rj, hc = catalog.write_report(report, args.out)
    print(json.dumps({"report": str(rj), "histogram": str(hc),
                      "kept_fraction": report["kept_fraction"],
                      "accuracy": (report["truth"] or {}).get("accuracy")}))


def cmd_validate(args):
    manifest = catalog.load_manifest(args.manifest)
    report = catalog.validate_manifest(manifest, args.root)
    _emit(json.dumps(report.to_dict(), indent=2) + "\n", args.out)
    return EXIT_OK if report.ok else EXIT_DATA


def cmd_registry(args):
    rows = [e.to_dict() for e in catalog.builtin_registry()]
    _emit(json.dumps(rows, indent=2) + "\n", args.out)


def build_parser():
    p = _Parser(prog="fallsift", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("velocity", help="trajectory CSV -> aligned velocity profile CSV")
    s.add_argument("--trajectory", required=True)
    s.add_argument("--scale", type=float, required=True, help="metres per pixel")
    s.add_argument("--fps", type=float, required=True)
    s.add_argument("--y-axis", choices=kinematics.Y_AXES, default="down_positive",
                   help="pixel y direction when the file does not declare it")
    _add_pipeline(s)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_velocity)

    s = sub.add_parser("compare", help="Hausdorff distance between two profiles")
    s.add_argument("--a", required=True)
    s.add_argument("--b", required=True)
    _add_mode(s)
    s.add_argument("--grid", type=float, default=None, help="resample both first")
    s.add_argument("--align", action="store_true", help="peak-align both first")
    s.add_argument("--out")
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("fit-threshold", help="fit Gaussians and the decision threshold")
    s.add_argument("--realistic", required=True, help="profile directory or distance list")
    s.add_argument("--hesitated", required=True, help="profile directory or distance list")
    s.add_argument("--refs", help="reference profile directory (for profile inputs)")
    s.add_argument("--grid", type=float, default=kinematics.DEFAULT_GRID_STEP)
    s.add_argument("--aggregate", choices=["min", "mean"], default="min")
    _add_mode(s)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_fit_threshold)

    s = sub.add_parser("clean", help="classify every manifest sample")
    s.add_argument("--manifest", required=True)
    s.add_argument("--refs", required=True)
    s.add_argument("--model", required=True)
    s.add_argument("--aggregate", choices=["min", "mean"], default="min")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--csv", help="also write sample_id,distance,label CSV here")
    _add_mode(s)
    _add_pipeline(s)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_clean)

    s = sub.add_parser("synth", help="generate one synthetic fall")
    s.add_argument("--model", choices=["rigid", "collapse"], required=True)
    s.add_argument("--height", type=float, required=True,
                   help="rod length (rigid) or drop height (collapse), metres")
    s.add_argument("--g-eff", type=float)
    s.add_argument("--theta0", type=float, default=synth.RigidFallParams(1.0).theta0,
                   help="initial lean in radians (rigid)")
    s.add_argument("--dt", type=float, default=1e-3, help="RK4 step (rigid)")
    s.add_argument("--hesitate", metavar="ONSET,DECEL")
    s.add_argument("--fps", type=float, required=True)
    s.add_argument("--noise", type=float, help="pixel noise sigma; implies pixel output")
    s.add_argument("--scale", type=float, help="metres per pixel for pixel output")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--id")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("corpus", help="seeded refs + training profiles + test corpus")
    s.add_argument("--n-realistic", type=int, default=20)
    s.add_argument("--n-hesitated", type=int, default=20)
    s.add_argument("--n-refs", type=int, default=1)
    s.add_argument("--fps", type=float, default=30.0)
    s.add_argument("--noise", type=float)
    s.add_argument("--scale", type=float)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--grid", type=float, default=kinematics.DEFAULT_GRID_STEP)
    s.add_argument("--window", type=int, default=kinematics.DEFAULT_WINDOW)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_corpus)

    s = sub.add_parser("report", help="summarise decisions against a manifest")
    s.add_argument("--decisions", required=True)
    s.add_argument("--manifest", required=True)
    s.add_argument("--bins", type=int, default=20)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("validate", help="audit a manifest")
    s.add_argument("--manifest", required=True)
    s.add_argument("--root")
    s.add_argument("--out")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("registry", help="print the built-in dataset registry")
    s.add_argument("--out")
    s.set_defaults(func=cmd_registry)
    return p


def run(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    try:
        code = args.func(args)
    except FallsiftError as exc:
        log.error("%s", exc)
        return exc.exit_code
    except (OSError, json.JSONDecodeError) as exc:
        log.error("%s", exc)
        return EXIT_DATA
    return EXIT_OK if code is None else code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
