"""Command-line interface.

Subcommands: ``simulate`` renders a scene description to a transient dataset,
``reconstruct`` turns a dataset into a volume (optionally time-resolved),
``metrics`` compares two volumes, ``info`` summarizes a container file,
``sampling-report`` certifies detector downsampling, and ``frustum`` reports
swept-volume statistics of a depth-scaled grid.

Exit codes: 0 on success, 2 for invalid inputs or usage, 3 for I/O and file
format failures.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import metrics as metrics_mod
from . import phasor, sim
from .core import (
    ContainerFormatError,
    CuboidGrid,
    ExplicitVoxels,
    FrustumGrid,
    NonPlanarRelay,
    NonUniformPlanarRelay,
    PointList,
    UniformGrid2D,
    UniformGrid3D,
    UniformRelay,
    ValidationError,
    VoxelPlane,
    read_dataset,
    read_volume,
    write_dataset,
    write_pgm,
    write_volume,
)
from .reconstruct import ALGORITHM_NAMES, project_max_depth, reconstruct

__all__ = ["main", "entry", "build_parser"]


# ---------------------------------------------------------------------------
# Input parsing
# ---------------------------------------------------------------------------


def _parse_grid(spec: str):
    """Parse a voxel grid description.

    ``cuboid:nx,ny,nz,dx,dy,dz,x0,y0,z0`` — uniform cuboid;
    ``frustum:nx,ny,nz,dx,dy,dz,x0,y0,z0,alpha0[,beta0]`` — depth-scaled grid
    with planes at ``z0 + k*dz`` and the linear widening law anchored at
    ``z0``; ``@planes.json`` — explicit voxels from a JSON file with
    ``{"planes": [{"z": ..., "points": [[x, y], ...]}, ...]}``.
    """
    if spec.startswith("@"):
        with open(spec[1:], "r", encoding="utf-8") as f:
            doc = json.load(f)
        planes = [VoxelPlane(float(p["z"]), PointList(np.asarray(p["points"], dtype=float)))
                  for p in doc["planes"]]
        return ExplicitVoxels(tuple(planes))
    kind, _, rest = spec.partition(":")
    fields = [s for s in rest.split(",") if s != ""]
    if kind == "cuboid":
        if len(fields) != 9:
            raise ValidationError("cuboid grid needs nx,ny,nz,dx,dy,dz,x0,y0,z0")
        nx, ny, nz = (int(v) for v in fields[:3])
        dx, dy, dz, x0, y0, z0 = (float(v) for v in fields[3:])
        return CuboidGrid(UniformGrid3D(nx, ny, nz, dx, dy, dz, x0, y0, z0))
    if kind == "frustum":
        if len(fields) not in (10, 11):
            raise ValidationError(
                "frustum grid needs nx,ny,nz,dx,dy,dz,x0,y0,z0,alpha0[,beta0]")
        nx, ny, nz = (int(v) for v in fields[:3])
        dx, dy, dz, x0, y0, z0, alpha0 = (float(v) for v in fields[3:10])
        beta0 = float(fields[10]) if len(fields) == 11 else None
        base = UniformGrid2D(nx, ny, dx, dy, x0, y0, z=z0)
        zs = z0 + dz * np.arange(nz)
        return FrustumGrid.linear(base, zs, alpha0, beta0)
    raise ValidationError(f"unknown grid kind {kind!r}; use cuboid:, frustum:, or @file")


def _parse_relay(doc: dict):
    kind = doc.get("kind")
    if kind == "uniform":
        return UniformRelay(UniformGrid2D(
            int(doc["nx"]), int(doc["ny"]), float(doc["dx"]), float(doc["dy"]),
            float(doc["x0"]), float(doc["y0"]), float(doc.get("z", 0.0))))
    if kind == "points_planar":
        return NonUniformPlanarRelay(
            PointList(np.asarray(doc["points"], dtype=float)), float(doc["z"]))
    if kind == "points_3d":
        return NonPlanarRelay(PointList(np.asarray(doc["points"], dtype=float)))
    raise ValidationError(
        "relay kind must be 'uniform', 'points_planar', or 'points_3d'")


def _parse_scene(path: str):
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    delta_t = doc.get("delta_t", doc.get("Δt"))
    if delta_t is None:
        raise ValidationError("scene file must give the bin width 'delta_t'")
    n_bins = int(doc["n_bins"])
    relay = _parse_relay(doc["relay"])
    confocal = bool(doc.get("confocal", False))
    illuminations = None
    if not confocal:
        if "illuminations" not in doc:
            raise ValidationError("non-confocal scene needs 'illuminations'")
        illuminations = PointList(np.asarray(doc["illuminations"], dtype=float))
    scatterers = tuple(
        sim.Scatterer(tuple(float(v) for v in s.get("pos", s.get("position"))),
                      float(s.get("albedo", 1.0)))
        for s in doc["scatterers"])
    scene = sim.Scene(scatterers, ambient=float(doc.get("ambient", 0.0)))
    return dict(scene=scene, relay=relay, illuminations=illuminations,
                delta_t=float(delta_t), n_bins=n_bins, t0=float(doc.get("t0", 0.0)),
                confocal=confocal, falloff=bool(doc.get("falloff", True)))


def _parse_video(spec: str) -> np.ndarray:
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValidationError("video spec must be t_start:t_stop:steps")
    t0, t1 = float(parts[0]), float(parts[1])
    steps = int(parts[2])
    if steps < 1:
        raise ValidationError("video needs at least one frame")
    return np.linspace(t0, t1, steps)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_simulate(args) -> int:
    cfg = _parse_scene(args.scene)
    measurement = sim.simulate(**cfg)
    if args.poisson_scale is not None:
        measurement = sim.add_poisson_noise(measurement, args.poisson_scale, args.seed)
    write_dataset(measurement, args.output)
    print(f"wrote {args.output}: {measurement.n_illum} illumination(s) x "
          f"{measurement.n_detect} detector(s) x {measurement.n_bins} bins")
    return 0


def _cmd_reconstruct(args) -> int:
    measurement = read_dataset(args.dataset)
    kernel = phasor.build_kernel(args.lambda_c, measurement.n_bins,
                                 measurement.delta_t, args.threshold)
    slices = phasor.to_frequency(measurement, kernel)
    grid = _parse_grid(args.grid)
    times = _parse_video(args.video) if args.video else None
    started = time.perf_counter()
    volume = reconstruct(
        slices, grid, args.algo, eps=args.eps, padding=args.padding,
        alpha=args.alpha, beta=args.beta, lattice_pitch=args.lattice_pitch,
        z_pitch=args.z_pitch, scatter=args.scatter, times=times,
        threads=args.threads)
    elapsed = time.perf_counter() - started
    write_volume(volume, args.output)
    if args.pgm:
        write_pgm(project_max_depth(volume), args.pgm)
    n_ill = measurement.n_illum
    print(f"reconstructed {grid.count} voxels from {n_ill} illumination(s) "
          f"with {kernel.n_freq} frequencies in {elapsed:.3f} s "
          f"({elapsed / n_ill:.3f} s per illumination)")
    return 0


def _cmd_metrics(args) -> int:
    vol_a = read_volume(args.volume_a)
    vol_b = read_volume(args.volume_b)
    proj_a = project_max_depth(vol_a, args.frame)
    proj_b = project_max_depth(vol_b, args.frame)
    if args.align:
        dx, dy = metrics_mod.align_by_correlation(proj_a, proj_b)
        proj_a = metrics_mod.apply_shift(proj_a, dx, dy)
        print(f"shift dx={dx} dy={dy}")
    print(f"ssim {metrics_mod.ssim(proj_a, proj_b):.6f}")
    print(f"ncc {metrics_mod.ncc(vol_a.frame(args.frame), vol_b.frame(args.frame)):.6f}")
    return 0


def _cmd_info(args) -> int:
    try:
        m = read_dataset(args.path)
    except ContainerFormatError:
        v = read_volume(args.path)
        kind = v.grid.kind
        print(f"volume: {v.n_frames} frame(s) x {v.grid.count} voxels on a "
              f"{kind} grid")
        if v.times is not None:
            print(f"frame times: {v.times[0]:.6g} .. {v.times[-1]:.6g} s")
        return 0
    print(f"dataset: {m.n_illum} illumination(s) x {m.n_detect} detector(s) x "
          f"{m.n_bins} bins")
    print(f"bin width {m.delta_t:.6g} s, window start {m.t0:.6g} s, "
          f"relay kind {m.relay.kind}")
    return 0


def _cmd_sampling_report(args) -> int:
    rep = phasor.sampling_report(args.x_offset, args.z_offset, args.lambda_star,
                                 confocal=args.confocal)
    print(f"ratio {rep.ratio:.4g}")
    print(f"lambda_sz {rep.lambda_sz:.6g}")
    print(f"lambda_sx {rep.lambda_sx:.6g}")
    print(f"max_downsample {rep.max_downsample:.4g}")
    return 0


def _cmd_frustum(args) -> int:
    beta = args.beta if args.beta is not None else args.alpha
    v_f = phasor.frustum_volume(args.x_in, args.y_in, args.z_in, args.z_out,
                                args.alpha, beta)
    v_c = phasor.cuboid_volume(args.x_in, args.y_in, args.z_in, args.z_out)
    print(f"V_F {v_f:.2f}")
    print(f"V_C {v_c:.2f}")
    print(f"delta_V {v_f - v_c:.2f}")
    print(f"increase +{round((v_f - v_c) / v_c * 100)}%")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phasorfield",
        description="Phasor-field reconstruction of hidden scenes from "
                    "time-resolved relay-wall measurements.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="render a scene description to a dataset")
    p.add_argument("scene", help="scene description JSON file")
    p.add_argument("-o", "--output", required=True, help="output dataset path")
    p.add_argument("--poisson-scale", type=float, default=None,
                   help="apply Poisson photon noise at this mean scale")
    p.add_argument("--seed", type=int, default=0, help="noise seed")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("reconstruct", help="reconstruct a volume from a dataset")
    p.add_argument("dataset", help="input dataset path")
    p.add_argument("-o", "--output", required=True, help="output volume path")
    p.add_argument("--algo", required=True, choices=list(ALGORITHM_NAMES))
    p.add_argument("--lambda-c", type=float, required=True,
                   help="virtual wavelength in meters")
    p.add_argument("--threshold", type=float, default=0.01,
                   help="frequency retention threshold")
    p.add_argument("--grid", required=True,
                   help="cuboid:..., frustum:..., or @planes.json")
    p.add_argument("--eps", type=float, default=1e-6,
                   help="accuracy target of the non-uniform transforms")
    p.add_argument("--alpha", type=float, default=None,
                   help="scale factor (srsd-nursd2)")
    p.add_argument("--beta", type=float, default=None,
                   help="y scale factor (srsd-nursd2; defaults to alpha)")
    p.add_argument("--lattice-pitch", type=float, default=None,
                   help="virtual lattice pitch (nursd3)")
    p.add_argument("--z-pitch", type=float, default=None,
                   help="depth lattice pitch (rsd3d/nursd3d)")
    p.add_argument("--scatter", choices=["nearest", "trilinear"],
                   default="trilinear", help="gridding mode (rsd3d)")
    p.add_argument("--padding", choices=["exact", "none"], default="exact",
                   help="convolution padding (rsd)")
    p.add_argument("--video", default=None, metavar="T0:T1:STEPS",
                   help="render time-resolved frames at linspace(T0, T1, STEPS)")
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads over frequencies")
    p.add_argument("--pgm", default=None,
                   help="also write a max-depth projection image (binary PGM)")
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("metrics", help="compare two reconstruction volumes")
    p.add_argument("volume_a", help="volume under test")
    p.add_argument("volume_b", help="reference volume")
    p.add_argument("--align", action="store_true",
                   help="recover and apply an integer shift before ssim")
    p.add_argument("--frame", type=int, default=0, help="frame index")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("info", help="summarize a dataset or volume file")
    p.add_argument("path")
    p.set_defaults(func=_cmd_info)

    p = sub.add_parser("sampling-report",
                       help="certify detector downsampling for one scatterer")
    p.add_argument("--x-offset", type=float, required=True,
                   help="lateral offset scatterer -> relay point (m)")
    p.add_argument("--z-offset", type=float, required=True,
                   help="depth offset from the relay plane (m)")
    p.add_argument("--lambda-star", type=float, required=True,
                   help="shortest retained wavelength (m)")
    p.add_argument("--confocal", action="store_true")
    p.set_defaults(func=_cmd_sampling_report)

    p = sub.add_parser("frustum", help="swept-volume statistics of a scaled grid")
    p.add_argument("--x-in", type=float, required=True)
    p.add_argument("--y-in", type=float, required=True)
    p.add_argument("--z-in", type=float, required=True)
    p.add_argument("--z-out", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, default=None)
    p.set_defaults(func=_cmd_frustum)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ContainerFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    entry()
