"""Discrete (quasi-)norms, norm-ratio functionals and dyadic decay fits."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .extension import Field, FrequencyGrid, SpacetimeGrid, iter_extend, weighted_density
from .hypersurface import RadialPhase

__all__ = [
    "NormReport",
    "lq_spacetime",
    "lq_streaming",
    "ratio_functional",
    "decay_fit",
    "DecayFit",
]


@dataclass(frozen=True)
class NormReport:
    """A Riemann-sum (quasi-)norm over a named region."""

    q: float
    region: str
    value: float
    nodes: int
    cellvol: float

    CSV_HEADER = "q,region,value,nodes,cellvol"

    def csv_row(self) -> str:
        return f"{self.q:.17g},{self.region},{self.value:.17g},{self.nodes},{self.cellvol:.17g}"


def _accumulate(values: np.ndarray, q: float, weight: float) -> float:
    a = np.abs(values)
    if math.isinf(q):
        return float(a.max(initial=0.0))
    return float(np.sum(a**q)) * weight


def lq_spacetime(field: Field, q: float, mask=None, region_id: str | None = None) -> NormReport:
    """``(sum |F|^q cellvol)^{1/q}`` over masked nodes (max for ``q = inf``).

    ``mask`` is a boolean array of the field's shape, ``"region"`` to use the
    grid's own region, or ``None`` for all nodes.  ``q < 1`` uses the same
    formula (a quasi-norm).
    """
    if not q > 0:
        raise ValueError("q must be positive")
    grid = field.grid
    w = grid.weights()
    dxd = grid.dx**grid.d
    if mask is None:
        masks = None
        rid = region_id or "full"
    elif isinstance(mask, str) and mask == "region":
        X = grid.x_nodes()
        masks = [grid.slice_mask(i, X) for i in range(len(grid.times))]
        rid = region_id or grid.region_id
    else:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != field.samples.shape:
            raise ValueError("mask shape mismatch")
        masks = list(mask)
        rid = region_id or "mask"
    total, nodes = 0.0, 0
    for i in range(len(grid.times)):
        sl = field.samples[i]
        if masks is not None:
            sl = sl[masks[i]]
        nodes += sl.size
        part = _accumulate(sl, q, w[i] * dxd)
        total = max(total, part) if math.isinf(q) else total + part
    if nodes == 0:
        raise ValueError("empty mask")
    value = total if math.isinf(q) else total ** (1.0 / q)
    cellvol = dxd * (float(w[0]) if np.allclose(w, w[0]) else float("nan"))
    return NormReport(float(q), rid, value, nodes, cellvol)


def lq_streaming(slices: Iterable[tuple[int, float, np.ndarray]], grid: SpacetimeGrid, q: float,
                 use_region: bool = True, region_id: str | None = None) -> NormReport:
    """Same as :func:`lq_spacetime` but consuming slices from :func:`iter_extend`.

    ``slices`` may also yield products of several extensions; only the
    arrays are used.
    """
    if not q > 0:
        raise ValueError("q must be positive")
    w = grid.weights()
    dxd = grid.dx**grid.d
    X = grid.x_nodes() if (use_region and grid.region is not None) else None
    total, nodes = 0.0, 0
    for i, _, sl in slices:
        if X is not None:
            sl = sl[grid.slice_mask(i, X)]
        nodes += sl.size
        part = _accumulate(sl, q, w[i] * dxd)
        total = max(total, part) if math.isinf(q) else total + part
    if nodes == 0:
        raise ValueError("empty mask")
    value = total if math.isinf(q) else total ** (1.0 / q)
    cellvol = dxd * (float(w[0]) if np.allclose(w, w[0]) else float("nan"))
    rid = region_id or (grid.region_id if X is not None else "full")
    return NormReport(float(q), rid, value, nodes, cellvol)


def ratio_functional(P: RadialPhase, f: FrequencyGrid, p: float, q: float, grid: SpacetimeGrid,
                     check: bool = True) -> float:
    """``||Lambda_P^{1/p'} E_P f||_{L^q(grid)} / ||f||_{L^p}``.

    The numerator is a truncated proxy of the global norm: it is taken over
    the grid's time nodes and region only (see ``grid.describe()``).
    """
    den = f.lp_norm(p)
    if not den > 0:
        raise ValueError("zero denominator: ||f||_p = 0")
    fw = weighted_density(P, f, p)
    num = lq_streaming(iter_extend(P, fw, grid, check=check), grid, q)
    return num.value / den


@dataclass(frozen=True)
class DecayFit:
    slope: float
    intercept: float
    residual: float

    def __iter__(self):
        return iter((self.slope, self.intercept, self.residual))


def decay_fit(xs: Sequence[float], ys: Sequence[float]) -> DecayFit:
    """Least squares ``log2 y = slope * x + intercept``.

    ``residual`` is the root-mean-square fit residual in log2 units.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.size < 3:
        raise ValueError("need at least 3 (x, y) pairs")
    if np.any(~(y > 0)):
        raise ValueError("ys must be positive")
    ly = np.log2(y)
    A = np.stack([x, np.ones_like(x)], axis=1)
    (slope, intercept), *_ = np.linalg.lstsq(A, ly, rcond=None)
    res = ly - (slope * x + intercept)
    return DecayFit(float(slope), float(intercept), float(np.sqrt(np.mean(res**2))))
