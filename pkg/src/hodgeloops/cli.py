"""Command-line pipeline: complex -> harmonic basis -> unmixing -> loops.

Exit codes: 0 success, 1 usage or I/O error, 2 numerical failure,
3 Betti number undecided.
"""

from __future__ import annotations

import argparse
import contextlib
import hashlib
import io
import json
import logging
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .boundary import boundary_maps, write_matrix_market
from .complexes import (DEFAULT_KNN, Complex2, cknn_graph, clique_complex, cubical_complex,
                        furthest_point_sample, read_pgm, read_point_cloud_csv, triangle_weights)
from .hodge import IsolatedCellError, hodge_from_complex
from .ica import ica_no_prewhite
from .loops import DegenerateColumnError, NoLoopError, shortest_homologous_loops, shortest_loops_maxedge
from .nullspace import GAP_FACTOR, ZERO_TOL, BettiAmbiguity, ConvergenceError, homology_basis

log = logging.getLogger("hodgeloops")

FORMAT_VERSION = 1

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_AMBIGUOUS = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_help(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# ---- atomic file output ----

@contextlib.contextmanager
def atomic_open(path, mode: str = "w"):
    """Write to a temporary sibling and rename into place only on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def write_csv(path, M) -> None:
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[:, None]
    buf = io.StringIO()
    if M.size:
        np.savetxt(buf, M, fmt="%.17g", delimiter=",")
    with atomic_open(path) as fh:
        fh.write(buf.getvalue())


def read_csv(path, n_rows: int | None = None) -> np.ndarray:
    path = Path(path)
    if path.stat().st_size == 0:
        return np.zeros((n_rows or 0, 0))
    return np.loadtxt(path, delimiter=",", ndmin=2)


def write_json(path, obj) -> None:
    text = json.dumps({"format_version": FORMAT_VERSION, **obj}, indent=1, sort_keys=True)
    with atomic_open(path) as fh:
        fh.write(text + "\n")


def read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    command: str
    flags: dict
    inputs: dict[str, str] = field(default_factory=dict)
    seeds: dict[str, int] = field(default_factory=dict)
    version: str = __version__
    wall_time: float = 0.0

    def write(self, out_dir) -> None:
        write_json(Path(out_dir) / "manifest.json", {
            "command": self.command, "flags": self.flags, "inputs": self.inputs,
            "seeds": self.seeds, "version": self.version, "wall_time": self.wall_time})


def _flags(args) -> dict:
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items())
            if k not in ("func",)}


def _need(path) -> Path:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"input file not found: {p}")
    return p


# ---- stages ----

def stage_build(args, out: Path) -> Complex2:
    src = _need(args.input)
    if src.suffix.lower() == ".pgm":
        if args.threshold is None:
            raise UsageError("--threshold is required for image input")
        cx = cubical_complex(read_pgm(src), args.threshold, args.closing_radius, args.invert)
        w2 = np.ones(cx.n2)
        dist = np.ones(cx.n1)
    else:
        if args.delta is None:
            raise UsageError("--delta is required for point-cloud input")
        X = read_point_cloud_csv(src, header=args.header)
        g = cknn_graph(X, k=args.knn, delta=args.delta)
        cx = clique_complex(g)
        w2 = triangle_weights(X, cx, k=args.knn, delta=args.delta, rho=g.rho_k)
        dist = g.edge_dist
    log.info("complex: %d vertices, %d edges, %d 2-cells", cx.n0, cx.n1, cx.n2)
    write_json(out / "complex.json", cx.to_json_dict())
    write_csv(out / "weights2.csv", w2)
    write_csv(out / "edge_dist.csv", dist)
    return cx


def load_complex(path) -> Complex2:
    d = read_json(_need(path))
    return Complex2.from_json_dict(d)


def stage_embed(cx: Complex2, w2, out: Path, args):
    sys_ = hodge_from_complex(cx, w2)
    hb = homology_basis(sys_.L, zero_tol=args.zero_tol, gap_factor=args.gap_factor, seed=args.seed)
    write_csv(out / "Y.csv", hb.matrix)
    write_json(out / "embed.json", {"beta": hb.beta, "eigenvalues": hb.spectrum.tolist(),
                                    "residuals": hb.residuals.tolist(), "gap_ratio": hb.gap_ratio})
    log.info("beta_1 = %d", hb.beta)
    return hb.matrix, sys_.L


def stage_ica(Y, out: Path, args, L=None) -> np.ndarray:
    """Unmix ``Y``; ``L`` adds per-column harmonic residuals to ica.json."""
    if Y.shape[1] == 0:
        write_csv(out / "Z.csv", Y)
        write_csv(out / "unmix.csv", np.zeros((0, 0)))
        write_json(out / "ica.json", {"beta": 0, "unmix": [], "iterations": 0, "converged": True,
                                      "reconstruction_residuals": []})
        return Y
    res = ica_no_prewhite(Y, seed=args.seed)
    write_csv(out / "Z.csv", res.Z)
    write_csv(out / "unmix.csv", res.unmix)
    info = {
        "beta": int(Y.shape[1]),
        "unmix": res.unmix.tolist(),
        "iterations": res.iterations,
        "converged": res.converged,
        "last_update": res.last_update,
        "condition": res.condition,
        "reconstruction_residuals": np.linalg.norm(res.Z - Y @ res.unmix, axis=0).tolist(),
    }
    if L is not None:
        info["harmonic_residuals"] = np.linalg.norm(L @ res.Z, axis=0).tolist()
    write_json(out / "ica.json", info)
    return res.Z


def stage_loops(Z, cx: Complex2, dist, out: Path, args) -> list:
    if Z.shape[1] == 0:
        loops = []
    elif args.variant == "maxedge":
        loops = shortest_loops_maxedge(Z, cx.n0, cx.edges, dist)
    else:
        loops = shortest_homologous_loops(Z, cx.n0, cx.edges, dist)
    write_json(out / "loops.json", {"variant": args.variant, "loops": [lp.to_json_dict() for lp in loops]})
    return loops


# ---- subcommands ----

def cmd_build_complex(args, m: RunManifest):
    m.inputs["input"] = sha256(_need(args.input))
    stage_build(args, args.out)


def _weights(args, cx):
    return None if args.weights is None else read_csv(_need(args.weights)).ravel()


def cmd_embed(args, m: RunManifest):
    m.inputs["complex"] = sha256(_need(args.complex))
    cx = load_complex(args.complex)
    if args.weights:
        m.inputs["weights"] = sha256(_need(args.weights))
    stage_embed(cx, _weights(args, cx), args.out, args)


def cmd_ica(args, m: RunManifest):
    m.inputs["Y"] = sha256(_need(args.Y))
    stage_ica(read_csv(args.Y), args.out, args)


def cmd_loops(args, m: RunManifest):
    for key in ("Z", "complex", "dist"):
        m.inputs[key] = sha256(_need(getattr(args, key)))
    cx = load_complex(args.complex)
    Z = read_csv(args.Z, cx.n1)
    dist = read_csv(args.dist).ravel()
    stage_loops(Z, cx, dist, args.out, args)


def cmd_run_all(args, m: RunManifest):
    m.inputs["input"] = sha256(_need(args.input))
    out = args.out
    cx = stage_build(args, out)
    w2 = read_csv(out / "weights2.csv").ravel()
    dist = read_csv(out / "edge_dist.csv").ravel()
    Y, L = stage_embed(cx, w2 if cx.n2 else None, out, args)
    Z = stage_ica(Y, out, args, L)
    stage_loops(Z, cx, dist, out, args)


def cmd_perturb_check(args, m: RunManifest):
    from .perturb import build_gluing, evaluate_gluing
    from .synth import synth_manifold

    sm = synth_manifold(args.manifold, n=args.n, noise=args.noise, seed=args.seed)
    if len(np.unique(sm.labels)) < 2:
        raise UsageError(f"{args.manifold} has a single prime part; nothing is glued")
    inst = build_gluing(sm.points, sm.labels, k=args.knn, delta=args.delta)
    rep = evaluate_gluing(inst, args.zero_tol, args.gap_factor, seed=args.seed)
    write_json(args.out / "perturb.json", {"manifold": args.manifold, "report": rep.to_json_dict()})
    cols = ["seed", "eps_k", "eps_km1", "epsp_k", "epsp_km1", "min_eigengap", "diff_down_norm",
            "diff_up_norm", "lhs", "rhs", "caps_met", "bound_holds"]
    row = [args.seed, rep.eps_k, rep.eps_km1, rep.epsp_k, rep.epsp_km1, min(rep.eigengaps),
           rep.diff_down_norm, rep.diff_up_norm, rep.lhs, rep.rhs, int(rep.caps_met), int(rep.bound_holds)]
    with atomic_open(args.out / "perturb.csv") as fh:
        fh.write(",".join(cols) + "\n")
        fh.write(",".join(format(v, ".17g") if isinstance(v, float) else str(v) for v in row) + "\n")
    print(json.dumps(rep.to_json_dict()))


def cmd_export_boundary(args, m: RunManifest):
    m.inputs["complex"] = sha256(_need(args.complex))
    cx = load_complex(args.complex)
    B1, B2 = boundary_maps(cx, 1)
    for name, B in (("B1.mtx", B1), ("B2.mtx", B2)):
        _mm_atomic(Path(args.out) / name, B, integer=True)


def _mm_atomic(path: Path, M, integer: bool):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    os.close(fd)
    try:
        write_matrix_market(tmp, M, integer=integer)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def cmd_export_laplacian(args, m: RunManifest):
    m.inputs["complex"] = sha256(_need(args.complex))
    cx = load_complex(args.complex)
    sys_ = hodge_from_complex(cx, _weights(args, cx))
    Path(args.out).mkdir(parents=True, exist_ok=True)
    _mm_atomic(Path(args.out) / "L1.mtx", sys_.L, integer=False)
    write_csv(Path(args.out) / "weights1.csv", sys_.w_k.values)


def cmd_fps(args, m: RunManifest):
    m.inputs["input"] = sha256(_need(args.input))
    X = read_point_cloud_csv(args.input, header=args.header)
    idx = furthest_point_sample(X, args.n, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with atomic_open(out / "fps_indices.csv") as fh:
        fh.write("\n".join(map(str, idx.tolist())) + "\n")
    write_csv(out / "fps_points.csv", X[idx])


# ---- argument parsing ----

def _common(p):
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--zero-tol", type=float, default=ZERO_TOL)
    p.add_argument("--gap-factor", type=float, default=GAP_FACTOR)
    p.add_argument("-v", "--verbose", action="store_true")


def _input_flags(p):
    p.add_argument("--input", required=True, help="point cloud CSV or PGM image")
    p.add_argument("--header", action="store_true", help="CSV has a header row")
    p.add_argument("--knn", type=int, default=DEFAULT_KNN)
    p.add_argument("--delta", type=float, default=None, help="CkNN scale (point clouds)")
    p.add_argument("--threshold", type=float, default=None, help="foreground threshold (images)")
    p.add_argument("--closing-radius", type=int, default=0)
    p.add_argument("--invert", action="store_true", help="foreground is intensity <= threshold")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hodgeloops", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("build-complex", help="point cloud or image -> 2-complex")
    _input_flags(p)
    _common(p)
    p.set_defaults(func=cmd_build_complex)

    p = sub.add_parser("embed", help="complex -> harmonic basis Y")
    p.add_argument("--complex", required=True)
    p.add_argument("--weights", default=None, help="2-cell weights CSV (default: all ones)")
    _common(p)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("ica", help="Y -> independent basis Z")
    p.add_argument("--Y", required=True)
    _common(p)
    p.set_defaults(func=cmd_ica)

    p = sub.add_parser("loops", help="Z + complex -> shortest homologous loops")
    p.add_argument("--Z", required=True)
    p.add_argument("--complex", required=True)
    p.add_argument("--dist", required=True, help="edge distances CSV")
    p.add_argument("--variant", choices=("exhaustive", "maxedge"), default="exhaustive")
    _common(p)
    p.set_defaults(func=cmd_loops)

    p = sub.add_parser("run-all", help="build-complex, embed, ica and loops in sequence")
    _input_flags(p)
    p.add_argument("--variant", choices=("exhaustive", "maxedge"), default="exhaustive")
    _common(p)
    p.set_defaults(func=cmd_run_all)

    p = sub.add_parser("perturb-check", help="gluing perturbation report on a synthetic manifold")
    p.add_argument("--manifold", default="punctplane",
                   choices=("torus", "three_torus", "genus2", "punctplane", "tori_concat"))
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--knn", type=int, default=DEFAULT_KNN)
    p.add_argument("--delta", type=float, default=1.0)
    _common(p)
    p.set_defaults(func=cmd_perturb_check)

    p = sub.add_parser("export-boundary", help="complex -> B1.mtx, B2.mtx")
    p.add_argument("--complex", required=True)
    _common(p)
    p.set_defaults(func=cmd_export_boundary)

    p = sub.add_parser("export-laplacian", help="complex -> L1.mtx")
    p.add_argument("--complex", required=True)
    p.add_argument("--weights", default=None)
    _common(p)
    p.set_defaults(func=cmd_export_laplacian)

    p = sub.add_parser("fps", help="furthest point subsample of a point cloud")
    p.add_argument("--input", required=True)
    p.add_argument("--header", action="store_true")
    p.add_argument("--n", type=int, required=True)
    _common(p)
    p.set_defaults(func=cmd_fps)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    manifest = RunManifest(args.command, _flags(args), seeds={"seed": args.seed})
    t0 = time.perf_counter()
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        args.func(args, manifest)
    except UsageError as exc:
        print(f"hodgeloops {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BettiAmbiguity as exc:
        print(f"hodgeloops {args.command}: Betti number undecided ({exc}); candidates {exc.candidates}",
              file=sys.stderr)
        return EXIT_AMBIGUOUS
    except (ConvergenceError, NoLoopError, IsolatedCellError, DegenerateColumnError,
            np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"hodgeloops {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"hodgeloops {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    manifest.wall_time = time.perf_counter() - t0
    manifest.write(args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
