"""Command line driver for quantification, certification, and oracle runs.

Subcommands:
  quantify   optimize a witness per grid point and report lower bounds
  verify     recompute the certificate of a stored witness against a state
  oracle     independent decomposition search for an upper bound
  sweep-k    escalate the coordinate box and tabulate the approach to the
             unbounded optimum
  plotdata   emit the benchmark surface and comparison curves as CSV

Configuration comes from an optional JSON file plus flags; flags win.
Sweeps write CSV with a fixed column order, single runs write JSON.
Complex matrices in state files are nested [re, im] pairs, row major.
Exit codes: 0 ok, 2 bad config or input, 3 numerical failure (partial
output is flushed), 4 state/symmetry mismatch.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from importlib import resources

import numpy as np

from .certify import certify, default_threshold, extract_decomposition
from .inner import InnerConfig
from .linalg import (
    DensityMatrix,
    DomainError,
    NumericalError,
    StructureError,
    SymmetryError,
    mat_of,
)
from .outer import (
    OuterConfig,
    SmoothingParams,
    evaluate_range_witness,
    evaluate_witness,
    exact_range_witness,
    maximize_witness,
)
from .roof import convex_roof_upper
from .states import family_state
from .symmetry import SymmetryGroup, basis_by_label, commutant_basis

SCHEMA_VERSION = 1
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_SYMMETRY = 4

QUANTIFY_COLUMNS = [
    "schema_version", "family", "p", "q", "basis", "method", "k_bound",
    "seed", "g_value", "mu_pi", "d_min", "verdict", "converged",
    "asymptotic", "iterations", "wall_time_s",
]
SWEEPK_COLUMNS = [
    "schema_version", "family", "p", "q", "basis", "method", "k_bound",
    "seed", "g_value", "gap_exact", "mu_pi", "d_min", "verdict",
    "converged", "asymptotic", "iterations", "wall_time_s",
]
SURFACE_COLUMNS = [
    "schema_version", "p", "q", "g_value", "d_min", "verdict", "method",
    "converged", "wall_time_s",
]
CURVES_COLUMNS = [
    "schema_version", "p", "q", "g_value", "d_min", "les_expectation",
    "les_d_min", "difference",
]


def _fail(msg: str, code: int) -> int:
    print("error: %s" % msg, file=sys.stderr)
    return code


def parse_grid(text: str) -> list[float]:
    """Parse "x", "a,b,c", or "start:stop:step" (stop inclusive)."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise DomainError("grid %r is not start:stop:step" % text)
        start, stop, step = (float(x) for x in parts)
        if step <= 0 or stop < start:
            raise DomainError("grid %r must increase" % text)
        n = int(round((stop - start) / step))
        vals = [start + i * step for i in range(n + 1)]
        if vals[-1] > stop + 1e-12:
            vals.pop()
        return [round(v, 12) for v in vals]
    if "," in text:
        return [float(x) for x in text.split(",") if x.strip()]
    return [float(text)]


def complex_matrix(rows) -> np.ndarray:
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise DomainError("matrix entries must be [re, im] pairs, row major")
    return arr[:, :, 0] + 1j * arr[:, :, 1]


def matrix_json(mat: np.ndarray) -> list:
    out = []
    for row in np.asarray(mat, dtype=complex):
        out.append([[float(z.real), float(z.imag)] for z in row])
    return out


def load_state_file(path: str) -> DensityMatrix:
    with open(path) as fh:
        data = json.load(fh)
    if "matrix" not in data:
        raise DomainError("state file needs a 'matrix' key")
    return DensityMatrix(complex_matrix(data["matrix"]))


def load_basis(spec: str):
    if spec in ("gi", "gw"):
        return basis_by_label(spec)
    with open(spec) as fh:
        data = json.load(fh)
    mats = tuple(complex_matrix(u) for u in data["unitaries"])
    group = SymmetryGroup(str(data.get("label", "custom")), mats)
    return commutant_basis(group)


def load_reference() -> dict:
    path = resources.files("threetangle").joinpath("_data/reference.json")
    with path.open() as fh:
        return json.load(fh)


def _merged_settings(args) -> dict:
    cfg = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise DomainError("config file must hold a JSON object")
        cfg.update(loaded)
    for key in ("k_bound", "seed", "max_cycles", "tol_gap", "threshold",
                "threads"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def outer_config(settings: dict, seed=None) -> OuterConfig:
    inner_kwargs = dict(settings.get("inner", {}))
    smooth_kwargs = dict(settings.get("smoothing", {}))
    kwargs = {}
    for key in ("k_bound", "max_cycles", "tol_gap", "certify_target"):
        if key in settings:
            kwargs[key] = settings[key]
    if seed is None:
        seed = settings.get("seed")
    if seed is not None:
        kwargs["seed"] = int(seed)
        inner_kwargs.setdefault("seed", int(seed))
    if inner_kwargs:
        kwargs["inner"] = InnerConfig(**inner_kwargs)
    if smooth_kwargs:
        kwargs["smoothing"] = SmoothingParams(**smooth_kwargs)
    return OuterConfig(**kwargs)


def _state_points(args) -> tuple[str, list[tuple]]:
    """Resolve the family/state selection into (family, [(p, q), ...])."""
    if getattr(args, "state", None):
        if getattr(args, "p", None) or getattr(args, "q", None):
            raise DomainError("--state excludes --p/--q")
        return "file", [(None, None)]
    family = (getattr(args, "family", None) or "").lower()
    if family not in ("gi", "gw", "gwi"):
        raise DomainError("choose --family gi|gw|gwi or --state FILE")
    ps = parse_grid(args.p) if getattr(args, "p", None) else [None]
    qs = parse_grid(args.q) if getattr(args, "q", None) else [None]
    if family == "gi":
        if ps != [None] or qs == [None]:
            raise DomainError("family gi takes --q only")
        return family, [(None, q) for q in qs]
    if family == "gw":
        if qs != [None] or ps == [None]:
            raise DomainError("family gw takes --p only")
        return family, [(p, None) for p in ps]
    if ps == [None] or qs == [None]:
        raise DomainError("family gwi takes both --p and --q")
    return family, [(p, q) for p in ps for q in qs]


def _resolve_state(args, family, p, q) -> DensityMatrix:
    if family == "file":
        return load_state_file(args.state)
    return family_state(family, p=p, q=q)


def _resolve_basis(args, family):
    spec = getattr(args, "basis", None)
    if spec:
        return load_basis(spec)
    if family == "gi":
        return basis_by_label("gi")
    if family in ("gw", "gwi"):
        return basis_by_label("gw")
    raise DomainError("--basis is required with --state")


def _point_seed(base, index: int):
    if base is None:
        return None
    return int(base) + 1009 * index


def witness_payload(result, seed) -> dict:
    rec = {
        "schema_version": SCHEMA_VERSION,
        "basis": result.basis.label,
        "v": [float(x) for x in result.v],
        "mu_pi": float(result.mu_pi),
        "seed": seed,
    }
    if hasattr(result, "k_bound"):
        rec["k_bound"] = float(result.k_bound)
        rec["asymptotic"] = bool(result.asymptotic)
    else:
        rec["k_bound"] = None
        rec["asymptotic"] = False
        rec["subspace_dim"] = int(result.subspace_dim)
    return rec


def _certificate_payload(cert) -> dict:
    return {
        "d_min": float(cert.d_min),
        "verdict": cert.verdict,
        "threshold": float(cert.threshold),
        "weights": [float(w) for w in cert.weights],
    }


def _quantify_point(args, settings, family, p, q, index) -> dict:
    seed = _point_seed(settings.get("seed"), index)
    cfg = outer_config(settings, seed=seed)
    rho = _resolve_state(args, family, p, q)
    basis = _resolve_basis(args, family)
    t0 = time.time()
    rng_seed = seed if seed is not None else 0
    rec = {
        "schema_version": SCHEMA_VERSION,
        "family": family, "p": p, "q": q, "basis": basis.label,
        "seed": seed,
    }
    range_result = None
    if not getattr(args, "box_only", False):
        range_result = exact_range_witness(rho, basis, seed=rng_seed)
    if range_result is not None:
        cert = certify(range_result, threshold=settings.get("threshold"))
        rec.update({
            "method": "range", "k_bound": None,
            "g_value": float(range_result.g_value),
            "mu_pi": float(range_result.mu_pi),
            "d_min": float(range_result.d_min),
            "verdict": cert.verdict,
            "converged": bool(range_result.converged),
            "asymptotic": False, "iterations": None,
            "subspace_dim": int(range_result.subspace_dim),
        })
        result = range_result
    else:
        result = maximize_witness(rho, basis, cfg=cfg)
        cert = certify(result, threshold=settings.get("threshold"))
        rec.update({
            "method": "box", "k_bound": float(cfg.k_bound),
            "g_value": float(result.g_value),
            "mu_pi": float(result.mu_pi),
            "d_min": float(result.d_min),
            "verdict": cert.verdict,
            "converged": bool(result.converged),
            "asymptotic": bool(result.asymptotic),
            "iterations": int(result.iterations),
            "model_gap": float(result.model_gap),
        })
    rec["wall_time_s"] = round(time.time() - t0, 3)
    rec["v"] = [float(x) for x in result.v]
    rec["x"] = [float(x) for x in result.x_coords()]
    rec["witness"] = witness_payload(result, seed)
    rec["certificate"] = _certificate_payload(cert)
    if getattr(args, "bounded", False) and range_result is not None:
        t1 = time.time()
        box = maximize_witness(rho, basis, cfg=cfg)
        rec["bounded"] = {
            "method": "box", "k_bound": float(cfg.k_bound),
            "g_value": float(box.g_value), "d_min": float(box.d_min),
            "converged": bool(box.converged),
            "asymptotic": bool(box.asymptotic),
            "model_gap": float(box.model_gap),
            "iterations": int(box.iterations),
            "x": [float(x) for x in box.x_coords()],
            "wall_time_s": round(time.time() - t1, 3),
        }
    if getattr(args, "decompose", False):
        if cert.verdict == "global":
            dec = extract_decomposition(cert, result.candidate_set, basis, rho)
            rec["decomposition"] = {
                "residual": float(dec.residual),
                "implied_value": float(dec.implied_value()),
                "terms": [
                    {"weight": float(t.weight), "class": t.cls,
                     "e_value": float(t.e_value)} for t in dec.terms],
            }
        else:
            rec["decomposition"] = None
    return rec


def _run_grid(points, worker, threads: int):
    """Run worker(index) for each point, preserving grid order."""
    if threads <= 1 or len(points) <= 1:
        return [worker(i) for i in range(len(points))]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(worker, i) for i in range(len(points))]
        return [f.result() for f in futures]


def _write_rows(path, columns, rows) -> None:
    def flatten(rec):
        flat = {}
        for key in columns:
            val = rec.get(key)
            flat[key] = "" if val is None else val
        for vec_key in ("v", "x"):
            if vec_key in rec and rec[vec_key] is not None:
                for i, x in enumerate(rec[vec_key]):
                    flat["%s%d" % (vec_key, i)] = x
        return flat

    flat_rows = [flatten(r) for r in rows]
    extra = sorted({k for fr in flat_rows for k in fr} - set(columns),
                   key=lambda s: (s[0], int(s[1:]) if s[1:].isdigit() else 0))
    names = columns + extra
    out = open(path, "w", newline="") if path else sys.stdout
    try:
        writer = csv.DictWriter(out, fieldnames=names, restval="")
        writer.writeheader()
        writer.writerows(flat_rows)
    finally:
        if path:
            out.close()


def _emit_json(path, payload) -> None:
    text = json.dumps(payload, indent=2)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_quantify(args) -> int:
    try:
        settings = _merged_settings(args)
        family, points = _state_points(args)
    except (DomainError, StructureError, OSError, json.JSONDecodeError) as exc:
        return _fail(str(exc), EXIT_CONFIG)
    threads = int(settings.get("threads", 1))
    rows = []
    fmt = args.format or ("csv" if len(points) > 1 else "json")
    try:
        def worker(i):
            p, q = points[i]
            return _quantify_point(args, settings, family, p, q, i)

        rows = _run_grid(points, worker, threads)
    except SymmetryError as exc:
        return _fail(str(exc), EXIT_SYMMETRY)
    except (DomainError, StructureError) as exc:
        return _fail(str(exc), EXIT_CONFIG)
    except NumericalError as exc:
        if rows and fmt == "csv":
            _write_rows(args.out, QUANTIFY_COLUMNS, rows)
        return _fail("numerical failure: %s" % exc, EXIT_NUMERICAL)
    if fmt == "csv":
        _write_rows(args.out, QUANTIFY_COLUMNS, rows)
    else:
        _emit_json(args.out, rows[0] if len(rows) == 1 else rows)
    if args.witness_out:
        if len(rows) != 1:
            return _fail("--witness-out needs a single grid point", EXIT_CONFIG)
        _emit_json(args.witness_out, rows[0]["witness"])
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        settings = _merged_settings(args)
        with open(args.witness) as fh:
            wdata = json.load(fh)
        if "witness" in wdata:
            wdata = wdata["witness"]
        for key in ("basis", "v", "mu_pi"):
            if key not in wdata:
                raise DomainError("witness file lacks %r" % key)
        family, points = _state_points(args)
        if len(points) != 1:
            raise DomainError("verify takes a single state point")
        p, q = points[0]
        rho = _resolve_state(args, family, p, q)
        basis = load_basis(args.basis) if args.basis else \
            basis_by_label(wdata["basis"])
        if basis.label != wdata["basis"]:
            raise SymmetryError(
                "witness basis %r does not match %r"
                % (wdata["basis"], basis.label))
        seed = settings.get("seed", wdata.get("seed"))
        cfg = outer_config(settings, seed=seed)
        v = np.asarray(wdata["v"], dtype=float)
    except SymmetryError as exc:
        return _fail(str(exc), EXIT_SYMMETRY)
    except (DomainError, StructureError, OSError, json.JSONDecodeError,
            ValueError) as exc:
        return _fail(str(exc), EXIT_CONFIG)
    t0 = time.time()
    is_range = wdata.get("k_bound") is None
    try:
        if is_range:
            result = evaluate_range_witness(rho, basis, v, seed=seed)
            if result is None:
                raise DomainError(
                    "witness file holds a range witness but the state has "
                    "full rank; range witnesses only apply on the range "
                    "they were solved on")
        else:
            result = evaluate_witness(rho, basis, v, cfg=cfg)
        cert = certify(result, threshold=settings.get("threshold"))
    except SymmetryError as exc:
        return _fail(str(exc), EXIT_SYMMETRY)
    except DomainError as exc:
        return _fail(str(exc), EXIT_CONFIG)
    except NumericalError as exc:
        return _fail("numerical failure: %s" % exc, EXIT_NUMERICAL)
    rec = {
        "schema_version": SCHEMA_VERSION,
        "family": family, "p": p, "q": q, "basis": basis.label,
        "method": "range" if is_range else "box",
        "g_value": float(result.g_value),
        "mu_pi": float(result.mu_pi),
        "seed": seed,
        "wall_time_s": round(time.time() - t0, 3),
        "certificate": _certificate_payload(cert),
        "members": [
            {"q": [float(x) for x in c.q], "e_value": float(c.e_value)}
            for c in result.candidate_set.members],
    }
    _emit_json(args.out, rec)
    return EXIT_OK


def cmd_oracle(args) -> int:
    try:
        settings = _merged_settings(args)
        family, points = _state_points(args)
        if len(points) != 1:
            raise DomainError("oracle takes a single state point")
        p, q = points[0]
        rho = _resolve_state(args, family, p, q)
    except (DomainError, StructureError, OSError, json.JSONDecodeError) as exc:
        return _fail(str(exc), EXIT_CONFIG)
    seed = settings.get("seed")
    t0 = time.time()
    try:
        value, weights, states, params = convex_roof_upper(
            rho, m=args.m, n_starts=args.starts,
            seed=seed if seed is not None else 0)
    except (DomainError, StructureError) as exc:
        return _fail(str(exc), EXIT_CONFIG)
    except NumericalError as exc:
        return _fail("numerical failure: %s" % exc, EXIT_NUMERICAL)
    rec = {
        "schema_version": SCHEMA_VERSION,
        "family": family, "p": p, "q": q,
        "upper_bound": float(value),
        "m": int(params.m),
        "n_terms": len(weights),
        "weights": [float(w) for w in weights],
        "seed": seed,
        "wall_time_s": round(time.time() - t0, 3),
    }
    _emit_json(args.out, rec)
    return EXIT_OK


def cmd_sweep_k(args) -> int:
    try:
        settings = _merged_settings(args)
        family, points = _state_points(args)
        if len(points) != 1:
            raise DomainError("sweep-k takes a single state point")
        p, q = points[0]
        rho = _resolve_state(args, family, p, q)
        basis = _resolve_basis(args, family)
        k_list = [float(k) for k in args.k_list.split(",") if k.strip()]
        if not k_list:
            raise DomainError("empty --k-list")
    except (DomainError, StructureError, OSError, json.JSONDecodeError) as exc:
        return _fail(str(exc), EXIT_CONFIG)
    seed = settings.get("seed")
    rows = []
    exact = None
    try:
        range_result = exact_range_witness(
            rho, basis, seed=seed if seed is not None else 0)
        if range_result is not None:
            exact = float(range_result.g_value)
        for i, k in enumerate(k_list):
            cfg = outer_config(settings, seed=_point_seed(seed, i))
            cfg = replace(cfg, k_bound=k)
            t0 = time.time()
            res = maximize_witness(rho, basis, cfg=cfg)
            cert = certify(res, threshold=settings.get("threshold"))
            rows.append({
                "schema_version": SCHEMA_VERSION,
                "family": family, "p": p, "q": q, "basis": basis.label,
                "method": "box", "k_bound": k,
                "seed": _point_seed(seed, i),
                "g_value": float(res.g_value),
                "gap_exact": (exact - float(res.g_value))
                if exact is not None else None,
                "mu_pi": float(res.mu_pi),
                "d_min": float(res.d_min),
                "verdict": cert.verdict,
                "converged": bool(res.converged),
                "asymptotic": bool(res.asymptotic),
                "iterations": int(res.iterations),
                "wall_time_s": round(time.time() - t0, 3),
                "x": [float(x) for x in res.x_coords()],
            })
        if range_result is not None:
            cert = certify(range_result, threshold=settings.get("threshold"))
            rows.append({
                "schema_version": SCHEMA_VERSION,
                "family": family, "p": p, "q": q, "basis": basis.label,
                "method": "range", "k_bound": None, "seed": seed,
                "g_value": exact, "gap_exact": 0.0,
                "mu_pi": float(range_result.mu_pi),
                "d_min": float(range_result.d_min),
                "verdict": cert.verdict,
                "converged": bool(range_result.converged),
                "asymptotic": False, "iterations": None,
                "wall_time_s": None,
                "x": [float(x) for x in range_result.x_coords()],
            })
    except SymmetryError as exc:
        return _fail(str(exc), EXIT_SYMMETRY)
    except NumericalError as exc:
        if rows:
            _write_rows(args.out, SWEEPK_COLUMNS, rows)
        return _fail("numerical failure: %s" % exc, EXIT_NUMERICAL)
    _write_rows(args.out, SWEEPK_COLUMNS, rows)
    return EXIT_OK


def cmd_plotdata(args) -> int:
    try:
        settings = _merged_settings(args)
    except (DomainError, OSError, json.JSONDecodeError) as exc:
        return _fail(str(exc), EXIT_CONFIG)
    threads = int(settings.get("threads", 1))
    seed = settings.get("seed")
    if args.figure == "surface":
        try:
            ps = parse_grid(args.p or "0:0.7:0.05")
            qs = parse_grid(args.q or "0:0.7:0.05")
        except DomainError as exc:
            return _fail(str(exc), EXIT_CONFIG)
        basis = basis_by_label("gw")
        grid = [(p, q) for p in ps for q in qs if p + q <= 1.0 + 1e-12]

        def worker(i):
            p, q = grid[i]
            rho = family_state("gwi", p=p, q=q)
            cfg = outer_config(settings, seed=_point_seed(seed, i))
            t0 = time.time()
            rng_seed = cfg.seed if cfg.seed is not None else 0
            rr = exact_range_witness(rho, basis, seed=rng_seed)
            if rr is not None:
                res, method = rr, "range"
            else:
                res, method = maximize_witness(rho, basis, cfg=cfg), "box"
            cert = certify(res, threshold=settings.get("threshold"))
            return {
                "schema_version": SCHEMA_VERSION, "p": p, "q": q,
                "g_value": float(res.g_value), "d_min": float(res.d_min),
                "verdict": cert.verdict, "method": method,
                "converged": bool(res.converged),
                "wall_time_s": round(time.time() - t0, 3),
            }

        try:
            rows = _run_grid(grid, worker, threads)
        except NumericalError as exc:
            return _fail("numerical failure: %s" % exc, EXIT_NUMERICAL)
        _write_rows(args.out, SURFACE_COLUMNS, rows)
        return EXIT_OK

    # curves: optimal value and the bundled reference witness side by side
    try:
        ref = load_reference()
        les_points = {round(float(pt["p"]), 6): pt
                      for pt in ref["restricted_witness"]["points"]}
        ps = parse_grid(args.p or "0.01:0.05:0.005")
        q_fix = float(ref["restricted_witness"]["q"])
    except (OSError, KeyError, json.JSONDecodeError, DomainError) as exc:
        return _fail("reference data unavailable: %s" % exc, EXIT_CONFIG)
    basis = basis_by_label("gw")

    def worker(i):
        p = ps[i]
        rho = family_state("gwi", p=p, q=q_fix)
        cfg = outer_config(settings, seed=_point_seed(seed, i))
        res = maximize_witness(rho, basis, cfg=cfg)
        rec = {
            "schema_version": SCHEMA_VERSION, "p": p, "q": q_fix,
            "g_value": float(res.g_value), "d_min": float(res.d_min),
        }
        pt = les_points.get(round(p, 6))
        if pt is not None:
            les = evaluate_witness(rho, basis, np.asarray(pt["v"]), cfg=cfg)
            rec["les_expectation"] = float(les.g_value)
            rec["les_d_min"] = float(les.d_min)
            rec["difference"] = float(res.g_value - les.g_value)
        return rec

    try:
        rows = _run_grid(ps, worker, threads)
    except NumericalError as exc:
        return _fail("numerical failure: %s" % exc, EXIT_NUMERICAL)
    _write_rows(args.out, CURVES_COLUMNS, rows)
    return EXIT_OK


def _add_state_flags(sub, grids=True) -> None:
    sub.add_argument("--family", help="gi, gw, or gwi")
    sub.add_argument("--state", help="density matrix JSON file")
    sub.add_argument("--basis", help="gi, gw, or a generators JSON file")
    hint = " (grid start:stop:step allowed)" if grids else ""
    sub.add_argument("--p", help="W-mixing parameter%s" % hint)
    sub.add_argument("--q", help="noise-mixing parameter%s" % hint)


def _add_common_flags(sub) -> None:
    sub.add_argument("--config", help="JSON config file; flags override it")
    sub.add_argument("--k-bound", dest="k_bound", type=float)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--max-cycles", dest="max_cycles", type=int)
    sub.add_argument("--tol-gap", dest="tol_gap", type=float)
    sub.add_argument("--threshold", type=float,
                     help="certificate threshold override")
    sub.add_argument("--threads", type=int)
    sub.add_argument("--out", help="output path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="threetangle",
        description="Mixed-state three-tangle witnesses and certificates")
    subs = parser.add_subparsers(dest="command", required=True)

    sq = subs.add_parser("quantify", help="optimize witnesses over a grid")
    _add_state_flags(sq)
    _add_common_flags(sq)
    sq.add_argument("--format", choices=("csv", "json"))
    sq.add_argument("--witness-out", dest="witness_out",
                    help="write the witness JSON of a single-point run")
    sq.add_argument("--decompose", action="store_true",
                    help="attach the optimal decomposition when global")
    sq.add_argument("--bounded", action="store_true",
                    help="add box-constrained diagnostics on range solves")
    sq.add_argument("--box-only", dest="box_only", action="store_true",
                    help="skip the exact range solve on rank-deficient states")
    sq.set_defaults(func=cmd_quantify)

    sv = subs.add_parser("verify", help="re-certify a stored witness")
    sv.add_argument("--witness", required=True, help="witness JSON file")
    _add_state_flags(sv, grids=False)
    _add_common_flags(sv)
    sv.set_defaults(func=cmd_verify)

    so = subs.add_parser("oracle", help="decomposition search upper bound")
    _add_state_flags(so, grids=False)
    _add_common_flags(so)
    so.add_argument("--m", type=int, help="ensemble size (default 2x rank)")
    so.add_argument("--starts", type=int, default=16)
    so.set_defaults(func=cmd_oracle)

    sk = subs.add_parser("sweep-k", help="escalate the coordinate box")
    _add_state_flags(sk, grids=False)
    _add_common_flags(sk)
    sk.add_argument("--k-list", dest="k_list", default="100,1000,10000")
    sk.set_defaults(func=cmd_sweep_k)

    sp = subs.add_parser("plotdata", help="emit figure data as CSV")
    sp.add_argument("--figure", choices=("surface", "curves"),
                    required=True)
    sp.add_argument("--p", help="grid override")
    sp.add_argument("--q", help="grid override")
    _add_common_flags(sp)
    sp.set_defaults(func=cmd_plotdata)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
