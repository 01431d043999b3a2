"""CSV / JSON artifact writers with provenance headers."""

from __future__ import annotations

import hashlib
import json
import platform
from pathlib import Path

import numpy as np


class ArtifactError(ValueError):
    pass


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": float(x.real), "im": float(x.imag)}
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if np.isfinite(x) else str(x)
    return x


def canonical_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, separators=(",", ":"))


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()[:16]


def split_complex(columns, data):
    """Expand complex columns into ``re_<name>``/``im_<name>`` pairs."""
    names, cols = [], []
    for name, col in zip(columns, data):
        col = np.asarray(col)
        if np.iscomplexobj(col):
            names += [f"re_{name}", f"im_{name}"]
            cols += [col.real, col.imag]
        else:
            names.append(name)
            cols.append(col.astype(float))
    return names, cols


def write_csv(path, columns, rows, chash: str, seed) -> Path:
    """Write a CSV whose first line is ``# config_hash=..., seed=...``.

    ``rows`` is a 2-D array (one column per name) or a list of 1-D columns.
    Floats use 17 significant digits so reruns are byte-identical.
    """
    if isinstance(rows, np.ndarray) and rows.ndim == 2:
        data = list(rows.T)
    else:
        data = [np.asarray(c) for c in rows]
    if len(data) != len(columns):
        raise ArtifactError(f"{len(columns)} column names for {len(data)} columns")
    names, cols = split_complex(columns, data)
    n = {c.size for c in cols}
    if len(n) != 1 or 0 in n:
        raise ArtifactError(f"refusing to write empty or ragged table to {path}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table = np.column_stack(cols)
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# config_hash={chash}, seed={seed}\n")
        fh.write(",".join(names) + "\n")
        for r in table:
            fh.write(",".join(f"{v:.17g}" for v in r) + "\n")
    return path


def read_csv(path):
    """Return (header comment, column names, float array)."""
    with open(path) as fh:
        head = fh.readline().strip()
        names = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=2, ndmin=2)
    return head, names, data


def versions() -> dict:
    import scipy

    from . import __version__
    return {"deformed_iid": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def write_summary(path, config: dict, rules: dict, wall_time: float, extra: dict | None = None) -> dict:
    summary = {
        "config": config,
        "config_hash": config_hash(config),
        "versions": versions(),
        "wall_time_s": wall_time,
        "rules": rules,
        "passed": all(r["pass"] for r in rules.values()),
    }
    if extra:
        summary["results"] = extra
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")
    return summary


def emit_plot_data(out_dir, chash: str, seed, scatter=None, contours=None, band=None) -> list[Path]:
    """Write plot layers: eigenvalue scatter, support contour polylines, Spec_eps band.

    ``band`` is a list of (polyline, radius) pairs.  Empty inputs are an error.
    """
    out_dir = Path(out_dir)
    written = []
    if scatter is not None:
        pts = np.asarray(scatter).ravel()
        if pts.size == 0:
            raise ArtifactError("no eigenvalue samples to emit")
        written.append(write_csv(out_dir / "scatter.csv", ["lambda"], [pts], chash, seed))
    if contours is not None:
        if not len(contours):
            raise ArtifactError("no contour to emit")
        idx = np.concatenate([np.full(c.size, k) for k, c in enumerate(contours)])
        written.append(write_csv(out_dir / "contour.csv", ["line", "z"], [idx, np.concatenate(contours)],
                                 chash, seed))
    if band is not None:
        if not len(band):
            raise ArtifactError("no Spec_eps band to emit")
        idx = np.concatenate([np.full(c.size, k) for k, (c, _) in enumerate(band)])
        z = np.concatenate([c for c, _ in band])
        r = np.concatenate([np.broadcast_to(r, c.shape) for c, r in band])
        written.append(write_csv(out_dir / "spec_eps_band.csv", ["line", "z", "radius"], [idx, z, r],
                                 chash, seed))
    return written
