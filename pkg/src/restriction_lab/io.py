"""Field and packet-list export."""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import numpy as np

from .extension import Field, SpacetimeGrid

__all__ = ["write_field", "read_field", "field_to_csv", "packets_to_csv"]

_MAGIC = "restriction-lab-field v1"


def write_field(path, field: Field) -> None:
    """Text header (dims, spacings, time nodes) followed by little-endian complex64 data."""
    g = field.grid
    header = [
        _MAGIC,
        f"d {g.d}",
        f"shape {' '.join(str(s) for s in field.samples.shape)}",
        f"dx {g.dx:.17g}",
        f"x0 {float(g.x_axis()[0]):.17g}",
        f"times {' '.join(f'{t:.17g}' for t in g.times)}",
        "end",
    ]
    data = np.ascontiguousarray(field.samples, dtype="<c8")
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        fh.write(data.tobytes())


def read_field(path) -> tuple[dict, np.ndarray]:
    """Inverse of :func:`write_field`: ``(header dict, complex64 array)``."""
    with open(path, "rb") as fh:
        meta = {}
        line = fh.readline().decode("ascii").strip()
        if line != _MAGIC:
            raise ValueError("not a field file")
        while True:
            line = fh.readline().decode("ascii").strip()
            if line == "end":
                break
            key, _, rest = line.partition(" ")
            meta[key] = rest
        raw = fh.read()
    shape = tuple(int(s) for s in meta["shape"].split())
    meta = {"d": int(meta["d"]), "shape": shape, "dx": float(meta["dx"]), "x0": float(meta["x0"]),
            "times": [float(t) for t in meta["times"].split()]}
    return meta, np.frombuffer(raw, dtype="<c8").reshape(shape)


def field_to_csv(path, field: Field) -> None:
    """``t, x, re, im`` rows for a 1+1-dimensional field."""
    g: SpacetimeGrid = field.grid
    if g.d != 1:
        raise ValueError("CSV export is for d = 1 fields")
    x = g.x_axis()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "re", "im"])
        for i, t in enumerate(g.times):
            for xv, val in zip(x, field.samples[i]):
                w.writerow([f"{t:.17g}", f"{xv:.17g}", f"{val.real:.17g}", f"{val.imag:.17g}"])


def packets_to_csv(path, packets: Sequence) -> None:
    """Columns ``j, x_T..., xi_T..., v_T..., re_c, im_c``."""
    d = len(packets[0].tube.x) if packets else 1
    cols = ["j"] + [f"x{i}" for i in range(d)] + [f"xi{i}" for i in range(d)] + \
        [f"v{i}" for i in range(d)] + ["re_c", "im_c"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for j, p in enumerate(packets):
            t = p.tube
            w.writerow([j, *(f"{a:.17g}" for a in t.x), *(f"{a:.17g}" for a in t.xi),
                        *(f"{a:.17g}" for a in t.v), f"{p.coefficient.real:.17g}", f"{p.coefficient.imag:.17g}"])


def ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p
