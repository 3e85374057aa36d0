"""Command-line entry point.

Subcommands: ``solve`` (one-to-all march), ``plan`` (goal-directed single
path), ``oracle`` (brute-force reference), ``bench`` (scaling or path-set
timing) and ``render`` (PPM images). Exit codes: 0 success, 1 usage or
contract error, 2 unreachable goal.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import struct
import sys
import time

import numpy as np

from .bench import run_pathset, run_scaling
from .errors import ContractViolation
from .grid import Cell, MapParseError, OccupancyGrid, load_grid
from .marching import MarchResult, march
from .metric import Metric
from .oracle import OracleRefused, oracle_one_to_all
from .render import RenderSpec, render
from .visibility import DEFAULT_TAU
from .vstar import vstar

log = logging.getLogger("vbm")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_UNREACHABLE = 2

RAW_MAGIC = b"VBMF"


class UsageError(Exception):
    pass


def parse_cell(text: str) -> Cell:
    try:
        x, y = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'x,y' with integers, got {text!r}") from None
    return Cell(x, y)


# --- output formats ---------------------------------------------------------------

def format_dist_csv(dist: np.ndarray) -> str:
    return "".join(",".join(repr(float(v)) for v in row) + "\n" for row in dist)


def format_parents_csv(parents: np.ndarray) -> str:
    return "".join(",".join(str(int(v)) for v in row) + "\n" for row in parents)


def encode_raw(dist: np.ndarray) -> bytes:
    """16-byte header (magic, width, height, pad) then little-endian float64 row-major."""
    h, w = dist.shape
    header = RAW_MAGIC + struct.pack("<II", w, h) + b"\0" * 4
    return header + np.ascontiguousarray(dist, dtype="<f8").tobytes()


def decode_raw(data: bytes) -> np.ndarray:
    if data[:4] != RAW_MAGIC:
        raise ValueError("not a VBMF distance file")
    w, h = struct.unpack("<II", data[4:12])
    return np.frombuffer(data[16:16 + 8 * w * h], dtype="<f8").reshape(h, w)


def format_path_csv(path) -> str:
    return "x,y\n" + "".join(f"{c.x},{c.y}\n" for c in path.waypoints)


def _is_raw(path: str) -> bool:
    return path.lower().endswith((".bin", ".raw", ".vbmf", ".f64"))


# --- config ---------------------------------------------------------------------

_LIST_KEYS = {"source", "goal", "out_dist"}


def _apply_config(args, parser: argparse.ArgumentParser):
    """Fill options from a JSON config; explicit command-line flags win."""
    if not getattr(args, "config", None):
        return args
    with open(args.config, encoding="utf-8") as f:
        cfg = json.load(f)
    defaults = vars(parser.parse_args([args.command]))
    for key, value in cfg.items():
        key = key.replace("-", "_")
        if key not in vars(args):
            raise UsageError(f"unknown config key {key!r}")
        if getattr(args, key) != defaults.get(key):
            continue
        if key in ("source", "goal"):
            single = isinstance(value, str) or (
                isinstance(value, list) and len(value) == 2 and all(isinstance(v, int) for v in value))
            items = [value] if single else value
            value = [parse_cell(v) if isinstance(v, str) else Cell(*v) for v in items]
        elif key in _LIST_KEYS and not isinstance(value, list):
            value = [value]
        setattr(args, key, value)
    return args


# --- commands --------------------------------------------------------------------

def _load(args) -> OccupancyGrid:
    if not args.map:
        raise UsageError("--map is required")
    return load_grid(args.map, args.format, args.threshold)


def _march(args, grid: OccupancyGrid) -> MarchResult:
    if not args.source:
        raise UsageError("at least one --source is required")
    return march(grid, args.source, Metric.parse(args.metric), args.visibility, args.tau,
                 no_corner_cut=not args.allow_corner_cut,
                 march_through_obstacles=args.march_through_obstacles)


def _write(path: str, data, binary: bool = False):
    if path == "-":
        if binary:
            sys.stdout.buffer.write(data)
        else:
            sys.stdout.write(data)
        return
    with open(path, "wb" if binary else "w", encoding=None if binary else "utf-8") as f:
        f.write(data)


def cmd_solve(args) -> int:
    grid = _load(args)
    t0 = time.perf_counter()
    result = _march(args, grid)
    elapsed = time.perf_counter() - t0
    outs = args.out_dist or (["-"] if not (args.out_parents or args.render) else [])
    for out in outs:
        if _is_raw(out):
            _write(out, encode_raw(result.dist), binary=True)
        else:
            _write(out, format_dist_csv(result.dist))
    if args.out_parents:
        _write(args.out_parents, format_parents_csv(result.parents))
    if args.render:
        spec = RenderSpec(mode=args.mode, contour_interval=args.contours, goals=tuple(args.goal or ()))
        _write(args.render, render(result, grid, spec), binary=True)
    log.info("marched %dx%d grid: %d pops, %d pivots, %.3f s",
             grid.width, grid.height, result.popped_count, len(result.pivots), elapsed)
    return EXIT_OK


def cmd_plan(args) -> int:
    grid = _load(args)
    if not args.source or len(args.source) != 1 or not args.goal or len(args.goal) != 1:
        raise UsageError("plan needs exactly one --source and one --goal")
    t0 = time.perf_counter()
    res = vstar(grid, args.source[0], args.goal[0], Metric.parse(args.metric), args.visibility,
                args.tau, no_corner_cut=not args.allow_corner_cut)
    elapsed = time.perf_counter() - t0
    summary = f"length={res.length:.9g} popped={res.popped_count} time_ms={elapsed * 1e3:.3f}"
    if not res.reachable:
        print(f"unreachable: {summary}", file=sys.stderr)
        return EXIT_UNREACHABLE
    _write(args.out_path or "-", format_path_csv(res.path))
    print(summary, file=sys.stderr if (args.out_path or "-") == "-" else sys.stdout)
    return EXIT_OK


def cmd_oracle(args) -> int:
    grid = _load(args)
    if not args.source or len(args.source) != 1:
        raise UsageError("oracle needs exactly one --source")
    dist = oracle_one_to_all(grid, args.source[0], Metric.parse(args.metric))
    if args.goal:
        for g in args.goal:
            print(f"{g.x},{g.y},{float(dist[g.y, g.x])!r}")
        return EXIT_OK if all(math.isfinite(dist[g.y, g.x]) for g in args.goal) else EXIT_UNREACHABLE
    for out in args.out_dist or ["-"]:
        _write(out, encode_raw(dist) if _is_raw(out) else format_dist_csv(dist), binary=_is_raw(out))
    return EXIT_OK


def cmd_bench(args) -> int:
    metric = Metric.parse(args.metric)
    if args.pathset:
        with open(args.pathset, encoding="utf-8") as f:
            cfg = json.load(f)
        if not args.map and "map" not in cfg:
            raise UsageError("path-set benchmark needs --map or a 'map' entry in the config")
        map_path = args.map or os.path.join(os.path.dirname(os.path.abspath(args.pathset)), cfg["map"])
        grid = load_grid(map_path, args.format, args.threshold)
        source = Cell(*cfg["source"]) if "source" in cfg else Cell(grid.width // 2, grid.height // 2)
        report = run_pathset(grid, source, [Cell(*g) for g in cfg["goals"]], metric, args.visibility)
        _write(args.out or "-", report.to_csv())
        return EXIT_OK
    sizes = [int(s) for s in args.sizes.split(",")]
    report = run_scaling(sizes, args.reps, metric, args.visibility, density=args.density)
    _write(args.out or "-", report.to_csv())
    return EXIT_OK


def cmd_render(args) -> int:
    if not args.out:
        raise UsageError("render needs --out")
    grid = _load(args)
    result = _march(args, grid)
    spec = RenderSpec(mode=args.mode, contour_interval=args.contours, goals=tuple(args.goal or ()))
    _write(args.out, render(result, grid, spec), binary=True)
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "plan": cmd_plan, "oracle": cmd_oracle,
            "bench": cmd_bench, "render": cmd_render}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with option values (flags override it)")
    common.add_argument("--map", help="map file (.map MovingAI or .pgm)")
    common.add_argument("--format", choices=["movingai", "pgm"], help="map format (default: by extension)")
    common.add_argument("--threshold", type=int, default=128, help="PGM gray level below which a cell is occupied")
    common.add_argument("--source", type=parse_cell, action="append", help="source cell x,y (repeatable)")
    common.add_argument("--goal", type=parse_cell, action="append", help="goal cell x,y")
    common.add_argument("--metric", default="euclidean",
                        help="euclidean|manhattan|cubic|chebyshev|quasi-euclidean|minkowski:<p>")
    common.add_argument("--visibility", choices=["exact", "dp"], default="dp")
    common.add_argument("--tau", type=float, default=DEFAULT_TAU, help="dp visibility threshold")
    common.add_argument("--no-corner-cut", action="store_true", default=True,
                        help="forbid diagonal moves between two obstacles (default)")
    common.add_argument("--allow-corner-cut", action="store_true",
                        help="permit diagonal moves between two obstacles")
    common.add_argument("--march-through-obstacles", action="store_true",
                        help="also assign distances to obstacle cells")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="vbm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common], help="one-to-all distance field and parent matrix")
    p.add_argument("--out-dist", action="append", help="distance output (.csv, or .bin raw); '-' = stdout")
    p.add_argument("--out-parents", help="parent matrix CSV of linear indices")
    p.add_argument("--render", help="also write a PPM image here")
    p.add_argument("--mode", choices=["distance", "parents", "path-overlay"], default="distance")
    p.add_argument("--contours", type=float, default=0.0, help="contour interval in pixels (0 = off)")

    p = sub.add_parser("plan", parents=[common], help="single shortest path (goal-directed)")
    p.add_argument("--out-path", help="path CSV (default stdout)")

    p = sub.add_parser("oracle", parents=[common], help="brute-force visibility-graph distances")
    p.add_argument("--out-dist", action="append")

    p = sub.add_parser("bench", parents=[common], help="runtime scaling or path-set benchmark")
    p.add_argument("--sizes", default="100,200,400,800,1200", help="comma-separated grid side lengths")
    p.add_argument("--full", action="store_true", help="scale up to 2000x2000")
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--density", type=float, default=0.0, help="random obstacle density")
    p.add_argument("--pathset", help="JSON with 'goals' (and optional 'source', 'map')")
    p.add_argument("--out", help="CSV report destination (default stdout)")

    p = sub.add_parser("render", parents=[common], help="march and write a PPM image")
    p.add_argument("--mode", choices=["distance", "parents", "path-overlay"], default="distance")
    p.add_argument("--contours", type=float, default=0.0)
    p.add_argument("--out", help="PPM file")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        args = _apply_config(args, parser)
        if args.command == "bench" and args.full and args.sizes == "100,200,400,800,1200":
            args.sizes = "100,200,400,800,1200,1600,2000"
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"vbm {args.command}: {e}", file=sys.stderr)
        return EXIT_ERROR
    except OracleRefused as e:
        print(f"vbm oracle: refused: {e}", file=sys.stderr)
        return EXIT_ERROR
    except (ContractViolation, MapParseError, OSError, ValueError) as e:
        print(f"vbm {args.command}: error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
