"""Bit-stable file formats: CSV matrices, per-node draw files, truth and
manifest JSON, and strict run-configuration parsing.

CSV floats are written with 17 significant digits so a read-back reproduces
the in-memory doubles exactly.  Draw files are one structured .npy per node
(byte-identical for identical draws) or flat CSV, flag-selected.
"""

from __future__ import annotations

import hashlib
import json
import re
from pathlib import Path

import numpy as np

from .gibbs import PosteriorDraws, SamplerOptions
from .model import ChainConfig, HyperParams, other_nodes

FLOAT_FMT = "%.17g"


class FileFormatError(ValueError):
    """Raised for malformed CSV or configuration files."""


# --------------------------------------------------------------- CSV matrices

def write_matrix_csv(path, arr, prefix):
    arr = np.asarray(arr, dtype=np.float64)
    header = ",".join(f"{prefix}{i + 1}" for i in range(arr.shape[1]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for row in arr:
            fh.write(",".join(FLOAT_FMT % v for v in row) + "\n")


def read_matrix_csv(path):
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines:
        raise FileFormatError(f"{path}: empty file")
    ncol = len(lines[0].split(","))
    rows = []
    for r, ln in enumerate(lines[1:], start=1):
        if not ln:
            continue
        parts = ln.split(",")
        if len(parts) != ncol:
            raise FileFormatError(
                f"{path}: row {r} has {len(parts)} columns, expected {ncol}")
        vals = []
        for c, tok in enumerate(parts):
            try:
                v = float(tok)
            except ValueError:
                raise FileFormatError(
                    f"{path}: row {r}, column {c + 1}: not a number: {tok!r}")
            if not np.isfinite(v):
                raise FileFormatError(
                    f"{path}: row {r}, column {c + 1}: non-finite value")
            vals.append(v)
        rows.append(vals)
    if not rows:
        raise FileFormatError(f"{path}: no data rows")
    return np.array(rows, dtype=np.float64)


def write_table_csv(path, header, rows):
    """Small result tables; floats full precision, ints as ints."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            out = []
            for v in row:
                if isinstance(v, (bool, np.bool_)):
                    out.append(str(int(v)))
                elif isinstance(v, (int, np.integer)):
                    out.append(str(int(v)))
                else:
                    out.append(FLOAT_FMT % v)
            fh.write(",".join(out) + "\n")


# ----------------------------------------------------------------- draw files

def _draw_dtype(p1, q):
    return np.dtype([
        ("iteration", "<i8"),
        ("t", "<f8"),
        ("sigma2", "<f8"),
        ("loglik", "<f8"),
        ("alpha", "<f8", (p1, q)),
        ("slab", "?", (p1, q)),
    ])


def node_filename(j, fmt):
    return f"node_{j:04d}.{'npy' if fmt == 'npy' else 'csv'}"


def save_draws(dirpath, draws: PosteriorDraws, fmt="npy"):
    dirpath = Path(dirpath)
    dirpath.mkdir(parents=True, exist_ok=True)
    R, p1, q = draws.alpha.shape
    path = dirpath / node_filename(draws.node, fmt)
    if fmt == "npy":
        rec = np.empty(R, dtype=_draw_dtype(p1, q))
        rec["iteration"] = draws.iterations
        rec["t"] = draws.t
        rec["sigma2"] = draws.sigma2
        rec["loglik"] = draws.loglik
        rec["alpha"] = draws.alpha
        rec["slab"] = draws.slab
        np.save(path, rec)
    elif fmt == "csv":
        p = p1 + 1
        others = other_nodes(p, draws.node)
        header = ["iteration", "t", "sigma2", "loglik"]
        header += [f"alpha_{k}_{h}" for k in others for h in range(q)]
        header += [f"slab_{k}_{h}" for k in others for h in range(q)]
        rows = []
        for r in range(R):
            row = [int(draws.iterations[r]), draws.t[r], draws.sigma2[r],
                   draws.loglik[r]]
            row += list(draws.alpha[r].ravel())
            row += [int(v) for v in draws.slab[r].ravel()]
            rows.append(row)
        write_table_csv(path, header, rows)
    else:
        raise ValueError(f"unknown draws format: {fmt}")
    return path


def load_draws_file(path) -> PosteriorDraws:
    path = Path(path)
    mt = re.fullmatch(r"node_(\d+)\.(npy|csv)", path.name)
    if not mt:
        raise FileFormatError(f"{path}: unrecognized draw file name")
    node = int(mt.group(1))
    if mt.group(2) == "npy":
        rec = np.load(path)
        return PosteriorDraws(
            node=node, alpha=np.array(rec["alpha"]),
            slab=np.array(rec["slab"]), t=np.array(rec["t"]),
            sigma2=np.array(rec["sigma2"]), loglik=np.array(rec["loglik"]),
            iterations=np.array(rec["iteration"]))
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
    data = read_matrix_csv(path)
    a_cols = [i for i, h in enumerate(header) if h.startswith("alpha_")]
    s_cols = [i for i, h in enumerate(header) if h.startswith("slab_")]
    q = 1 + max(int(header[i].rsplit("_", 1)[1]) for i in a_cols)
    p1 = len(a_cols) // q
    R = data.shape[0]
    return PosteriorDraws(
        node=node,
        alpha=data[:, a_cols].reshape(R, p1, q),
        slab=data[:, s_cols].reshape(R, p1, q) != 0,
        t=data[:, header.index("t")],
        sigma2=data[:, header.index("sigma2")],
        loglik=data[:, header.index("loglik")],
        iterations=data[:, header.index("iteration")].astype(np.int64))


def load_all_draws(dirpath):
    dirpath = Path(dirpath)
    files = sorted(dirpath.glob("node_*.npy")) + sorted(dirpath.glob("node_*.csv"))
    if not files:
        raise FileFormatError(f"no draw files found in {dirpath}")
    draws = [load_draws_file(f) for f in files]
    draws.sort(key=lambda d: d.node)
    return draws


# ------------------------------------------------------------------ JSON I/O

def write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


_HYPER_KEYS = {f.name for f in HyperParams.__dataclass_fields__.values()}
_CHAIN_KEYS = {"iters", "burnin", "thin", "seed"}
_OPTION_KEYS = {"update_scales", "response_jacobian", "gamma_printed_exponent"}


def parse_run_config(obj):
    """Strict configuration parsing: unknown keys anywhere are rejected.

    Returns (hyper_dict, chain_dict, options_dict) of the explicitly given
    values; callers merge with defaults and CLI overrides.
    """
    if not isinstance(obj, dict):
        raise FileFormatError("config root must be a JSON object")
    unknown = set(obj) - {"hyper", "chain", "options"}
    if unknown:
        raise FileFormatError(f"unknown config sections: {sorted(unknown)}")
    out = {}
    for section, allowed in (("hyper", _HYPER_KEYS), ("chain", _CHAIN_KEYS),
                             ("options", _OPTION_KEYS)):
        sec = obj.get(section, {})
        if not isinstance(sec, dict):
            raise FileFormatError(f"config section {section!r} must be an object")
        bad = set(sec) - allowed
        if bad:
            raise FileFormatError(
                f"unknown keys in config section {section!r}: {sorted(bad)}")
        out[section] = dict(sec)
    return out["hyper"], out["chain"], out["options"]


def build_run_config(config_path=None, hyper_over=None, chain_over=None,
                     options_over=None):
    """Merge defaults <- config file <- explicit overrides into typed objects."""
    hyper_d, chain_d, opt_d = {}, {}, {}
    if config_path is not None:
        with open(config_path, "r", encoding="utf-8") as fh:
            try:
                obj = json.load(fh)
            except json.JSONDecodeError as exc:
                raise FileFormatError(f"{config_path}: invalid JSON: {exc}")
        hyper_d, chain_d, opt_d = parse_run_config(obj)
    hyper_d.update({k: v for k, v in (hyper_over or {}).items() if v is not None})
    chain_d.update({k: v for k, v in (chain_over or {}).items() if v is not None})
    opt_d.update({k: v for k, v in (options_over or {}).items() if v is not None})
    chain_full = {"iters": 20000, "burnin": 19000, "thin": 1, "seed": 1}
    chain_full.update(chain_d)
    try:
        hyper = HyperParams(**hyper_d)
        chain = ChainConfig(**chain_full)
        options = SamplerOptions(**opt_d)
    except (TypeError, ValueError) as exc:
        raise FileFormatError(f"invalid configuration: {exc}")
    return hyper, chain, options


def config_echo(hyper, chain, options):
    return {
        "hyper": {k: getattr(hyper, k) for k in sorted(_HYPER_KEYS)},
        "chain": {k: getattr(chain, k) for k in sorted(_CHAIN_KEYS)},
        "options": {k: getattr(options, k) for k in sorted(_OPTION_KEYS)},
    }
