"""Command line interface.

Subcommands cover the pipeline prefixes::

    band     build the computational band and write its cache file
    map      map the configured image onto the surface, export a point cloud
    filter   full pipeline: map, add noise, filter, export, report metrics
    metrics  PSNR between two exported point clouds

Exit codes: 0 success, 1 configuration problems, 2 numerical failures,
3 file I/O failures.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import imaging
from .band import dump_band
from .config import load_config
from .errors import ConfigError, NonFiniteState, SurfdiffError
from .export import export_point_cloud, export_recolored_mesh, read_point_cloud
from .filters import run_filter, write_diagnostics
from .workspace import Workspace

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="surfdiff",
        description="Anisotropic diffusion filtering of images on surfaces",
    )
    parser.add_argument("--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="run configuration file")
        p.add_argument("--threads", type=int, default=None,
                       help="best-effort cap on BLAS thread pools")

    p_band = sub.add_parser("band", help="build and cache the computational band")
    add_common(p_band)
    p_band.add_argument("--out", help="band cache path (default: output.band)")

    p_map = sub.add_parser("map", help="map the image onto the surface")
    add_common(p_map)
    p_map.add_argument("--out", help="point cloud path (default: output.ply)")

    p_filter = sub.add_parser("filter", help="run the configured filter")
    add_common(p_filter)
    p_filter.add_argument("--out", help="point cloud path (default: output.ply)")
    p_filter.add_argument("--steps", type=int, default=None,
                          help="override the iteration count (0: pass input through)")
    p_filter.add_argument("--seed", type=int, default=None,
                          help="override the noise seed")
    p_filter.add_argument("--diagnostics", help="write per-step CSV here")

    p_metrics = sub.add_parser("metrics", help="PSNR between two point clouds")
    p_metrics.add_argument("first")
    p_metrics.add_argument("second")
    return parser


def _apply_threads(n):
    if n is None or n <= 0:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(n)


def _make_image(cfg, ws):
    spec = cfg.image
    if spec.source == "mesh_colors":
        return imaging.mesh_colors_to_band(ws)
    if spec.source == "texture":
        tex = imaging.load_texture(spec.texture)
    elif spec.pattern == "stripes":
        tex = imaging.stripes(spec.size, count=int(spec.count), axis=spec.axis,
                              low=spec.low, high=spec.high)
    elif spec.pattern == "checkerboard":
        tex = imaging.checkerboard(spec.size, count=int(spec.count),
                                   low=spec.low, high=spec.high)
    elif spec.pattern == "wood":
        tex = imaging.wood_rings(spec.size, rings=spec.rings, warp=spec.warp,
                                 seed=spec.seed, low=spec.low, high=spec.high)
    else:
        tex = imaging.interrupted_stripes(spec.size, count=spec.count,
                                          gap_density=spec.gap_density,
                                          gap_cells=spec.gap_cells,
                                          waviness=spec.waviness,
                                          wave_cells=spec.wave_cells,
                                          hard=spec.profile == "ridge",
                                          cross=spec.cross,
                                          cross_count=spec.cross_count,
                                          seed=spec.seed, low=spec.low,
                                          high=spec.high)
    return imaging.map_texture(ws, tex)


def _make_workspace(cfg):
    return Workspace(cfg.surface, cfg.h, box=cfg.box,
                     tau_factor=cfg.filter.tau_factor if cfg.filter else 0.15,
                     tangent_basis=cfg.tangent_basis)


def _cmd_band(args, cfg):
    ws = _make_workspace(cfg)
    out = args.out or cfg.outputs.get("band")
    if not out:
        raise ConfigError("no band output path (give --out or output.band)")
    dump_band(ws.band, out)
    print(f"band: {ws.n_points} points, h={cfg.h:g}, written to {out}")
    return EXIT_OK


def _cmd_map(args, cfg):
    ws = _make_workspace(cfg)
    values = _make_image(cfg, ws)
    out = args.out or cfg.outputs.get("ply")
    if not out:
        raise ConfigError("no point cloud output path (give --out or output.ply)")
    n = export_point_cloud(out, ws, values)
    print(f"map: {n} surface points written to {out}")
    return EXIT_OK


def _cmd_filter(args, cfg):
    if cfg.filter is None:
        raise ConfigError("config has no [filter] section")
    ws = _make_workspace(cfg)
    clean = _make_image(cfg, ws)
    noise = cfg.noise
    seed = noise.seed if args.seed is None else args.seed
    noisy = imaging.apply_noise(clean, noise.model, seed,
                                fraction=noise.fraction, std=noise.std,
                                palette=noise.palette, low=noise.low,
                                high=noise.high)
    diag_path = args.diagnostics or cfg.outputs.get("diagnostics")
    result = run_filter(noisy, cfg.filter, ws, steps_override=args.steps,
                        collect_diagnostics=bool(diag_path))
    print(f"filter: kind={cfg.filter.kind} steps={result.steps} tau={result.tau:.6g}")
    if noise.model != "none":
        print(f"psnr_noisy_db={imaging.psnr(noisy, clean):.4f}")
    print(f"psnr_db={imaging.psnr(result.values, clean):.4f}")
    out = args.out or cfg.outputs.get("ply")
    if out:
        n = export_point_cloud(out, ws, result.values)
        print(f"output: {n} surface points written to {out}")
    if cfg.outputs.get("ply_input"):
        export_point_cloud(cfg.outputs["ply_input"], ws, noisy)
    if cfg.outputs.get("mesh_ply"):
        export_recolored_mesh(cfg.outputs["mesh_ply"], ws, result.values)
    if diag_path:
        write_diagnostics(diag_path, result.diagnostics)
    return EXIT_OK


def _cmd_metrics(args):
    _, col_a = read_point_cloud(args.first)
    _, col_b = read_point_cloud(args.second)
    if col_a.shape != col_b.shape:
        raise ConfigError(
            f"point clouds differ in size: {col_a.shape} vs {col_b.shape}"
        )
    value = imaging.psnr(col_a, col_b)
    print(f"psnr_db={value:.4f}" if np.isfinite(value) else "psnr_db=inf")
    return EXIT_OK


def main(argv=None):
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "metrics":
            return _cmd_metrics(args)
        _apply_threads(args.threads)
        cfg = load_config(args.config)
        if args.threads is None:
            _apply_threads(cfg.threads)
        if args.command == "band":
            return _cmd_band(args, cfg)
        if args.command == "map":
            return _cmd_map(args, cfg)
        return _cmd_filter(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonFiniteState as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except SurfdiffError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
