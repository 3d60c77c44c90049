"""Tube / cell / box incidence combinatorics.

Geometry
--------
* A tube on side ``j`` is ``{(t, x) : |x - x_T + t v_T| < s}`` with ``s = R^{1/2}``
  and ``v_T = grad h_j(xi_T)``; it is unbounded in time.
* Cells ``q`` are open balls of radius ``s`` in ``(t, x)`` space centred on the
  lattice ``s Z^{1+d}``; a cell is kept if it meets ``Q_R``.  ``R^eps q`` is the
  concentric ball of radius ``R^eps s``.  An open ball of radius ``s`` contains
  at most ``2^{d+1}`` points of ``s Z^{1+d}``, so every point lies in at most
  ``C_ov = 2^{d+1}`` cells, and the covering radius ``s sqrt(1+d)/2 < s`` makes the
  cells cover ``Q_R``.
* Boxes ``B`` are translates of ``R^{-eps} Q_R``: a time interval of half-length
  ``tau = (t1 - t0) R^{-eps} / 2`` times a spatial ball of radius ``rho = R^{1-eps}``.
  Time centres are spaced ``2 tau`` and spatial centres ``2 rho / sqrt(d)``
  per axis, which covers ``Q_R``.  ``lambda B`` scales both extents about the
  centre.  Boxes are stored in lexicographic order of their centres, so the
  first index attaining a maximum is the lexicographically smallest centre.

Intersection tests are closed form: for ``d = 1`` the tube is a strip and
``T cap ball(c, r) != {}`` iff ``|Delta| < s + r sqrt(1 + v^2)`` with
``Delta = x_c - x_T + t_c v``.  For ``d >= 2`` the squared distance from the
centre to the tube, ``min_tau tau^2 + (|Delta + tau v| - s)_+^2``, is a convex
function of ``tau`` and is minimised by bisection on its derivative to
machine precision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .extension import TwoScaleSetup
from .wavepacket import PacketRegion, Tube

__all__ = [
    "TubeFamily",
    "CellPartition",
    "IncidenceTable",
    "PiSurface",
    "CountStats",
    "build_partition",
    "tube_meets_balls",
    "classify",
    "sim_any",
    "pi_surface",
    "frequency_lattice",
    "lattice_ensemble",
    "nu_counts",
    "count_experiment",
    "growth_ratio",
]

SIM_CONSTANT = 8.0


# ---------------------------------------------------------------------------
# tube families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TubeFamily:
    """Arrays of tube data: positions ``x`` (n, d), frequencies ``xi`` and velocities ``v``."""

    x: np.ndarray
    xi: np.ndarray
    v: np.ndarray
    R: float
    side: int = 1

    def __post_init__(self):
        for name in ("x", "xi", "v"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.ndim == 1:
                arr = arr.reshape(0, 1) if arr.size == 0 else arr[:, None]
            object.__setattr__(self, name, arr)
        if not (self.x.shape == self.xi.shape == self.v.shape):
            raise ValueError("x, xi and v must have equal shapes")

    def __len__(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    @property
    def s(self) -> float:
        return math.sqrt(self.R)

    @classmethod
    def from_tubes(cls, tubes: Sequence[Tube], d: int | None = None) -> "TubeFamily":
        if not tubes:
            d = d or 1
            z = np.zeros((0, d))
            return cls(z, z, z, 1.0)
        R = tubes[0].R
        if any(t.R != R for t in tubes):
            raise ValueError("tubes of different scales")
        return cls(np.array([t.x for t in tubes]), np.array([t.xi for t in tubes]),
                   np.array([t.v for t in tubes]), R, tubes[0].side)

    @classmethod
    def empty(cls, R: float, d: int = 1, side: int = 1) -> "TubeFamily":
        z = np.zeros((0, d))
        return cls(z, z, z, R, side)

    def subset(self, idx) -> "TubeFamily":
        return TubeFamily(self.x[idx], self.xi[idx], self.v[idx], self.R, self.side)

    def concat(self, other: "TubeFamily") -> "TubeFamily":
        return TubeFamily(np.vstack([self.x, other.x]), np.vstack([self.xi, other.xi]),
                          np.vstack([self.v, other.v]), self.R, self.side)

    def tube(self, i: int) -> Tube:
        return Tube(tuple(self.x[i]), tuple(self.xi[i]), tuple(self.v[i]), self.R, self.side)


def _tube_ball_distance(x, v, centres, s):
    """Distance from ball centres (m, 1+d) to tubes (n): array (m, n)."""
    tc = centres[:, :1]                    # (m, 1)
    xc = centres[:, 1:]                    # (m, d)
    delta = xc[:, None, :] - x[None, :, :] + tc[:, :, None] * v[None, :, :]    # (m, n, d)
    d = x.shape[1]
    if d == 1:
        vv = v[None, :, 0] ** 2
        return np.maximum(0.0, np.abs(delta[..., 0]) - s) / np.sqrt(1.0 + vv)
    vv = np.broadcast_to(np.sum(v * v, axis=-1)[None, :], delta.shape[:2])
    dn = np.linalg.norm(delta, axis=-1)
    # the derivative of tau^2 + (|delta + tau v| - s)_+^2 is monotone in tau and
    # the minimiser satisfies |tau| <= |delta| (at tau = +-|delta| the value exceeds tau = 0's)
    lo = -dn - 1.0
    hi = dn + 1.0

    def deriv(tau):
        y = delta + tau[..., None] * v[None, :, :]
        ny = np.linalg.norm(y, axis=-1)
        ex = np.maximum(0.0, ny - s)
        dot = np.sum(y * v[None, :, :], axis=-1)
        return 2 * tau + 2 * ex * np.where(ny > 0, dot / np.where(ny > 0, ny, 1.0), 0.0)

    for _ in range(80):
        mid = 0.5 * (lo + hi)
        pos = deriv(mid) > 0
        hi = np.where(pos, mid, hi)
        lo = np.where(pos, lo, mid)
    tau = 0.5 * (lo + hi)
    y = delta + tau[..., None] * v[None, :, :]
    ex = np.maximum(0.0, np.linalg.norm(y, axis=-1) - s)
    out = np.sqrt(tau**2 + ex**2)
    return np.where(dn < s, 0.0, out) if vv.size else out


def tube_meets_balls(family: TubeFamily, centres, radius: float) -> np.ndarray:
    """Boolean (m, n): does tube ``n`` meet the open ball of ``radius`` around centre ``m``."""
    centres = np.atleast_2d(np.asarray(centres, dtype=float))
    if len(family) == 0 or centres.shape[0] == 0:
        return np.zeros((centres.shape[0], len(family)), dtype=bool)
    s = family.s
    if family.d == 1:
        delta = centres[:, 1:2] - family.x[None, :, 0] + centres[:, :1] * family.v[None, :, 0]
        return np.abs(delta) < s + radius * np.sqrt(1.0 + family.v[None, :, 0] ** 2)
    return _tube_ball_distance(family.x, family.v, centres, s) < radius


# ---------------------------------------------------------------------------
# partitions
# ---------------------------------------------------------------------------

def _box_distance(points, centre, tau, rho):
    """Euclidean distance from points (m, 1+d) to the cylinder ``|t - tc| <= tau, |x - xc| <= rho``."""
    dt = np.maximum(0.0, np.abs(points[:, 0] - centre[0]) - tau)
    dx = np.maximum(0.0, np.linalg.norm(points[:, 1:] - centre[1:], axis=-1) - rho)
    return np.hypot(dt, dx)


@dataclass(frozen=True)
class CellPartition:
    """Cells ``q`` (radius ``R^{1/2}`` balls) and boxes ``B`` (translates of ``R^{-eps} Q_R``)."""

    R: float
    eps: float
    d: int
    t0: float
    t1: float
    cells: np.ndarray          # (nq, 1+d) centres
    boxes: np.ndarray          # (nB, 1+d) centres, lexicographically sorted
    tau: float                 # box time half-extent
    rho: float                 # box spatial radius
    C_ov: int = field(default=0)

    @property
    def s(self) -> float:
        return math.sqrt(self.R)

    @property
    def n_cells(self) -> int:
        return self.cells.shape[0]

    @property
    def n_boxes(self) -> int:
        return self.boxes.shape[0]

    def cells_in_box_scaled(self, b: int, lam: float) -> np.ndarray:
        """Cells contained in ``lam * B_b``."""
        c = self.boxes[b]
        s = self.s
        dt = np.abs(self.cells[:, 0] - c[0]) + s
        dx = np.linalg.norm(self.cells[:, 1:] - c[1:], axis=-1) + s
        return (dt <= lam * self.tau) & (dx <= lam * self.rho)

    def cells_meeting_box(self, b: int, lam: float = 1.0) -> np.ndarray:
        """Cells ``q`` with ``q cap lam B_b != {}``."""
        return _box_distance(self.cells, self.boxes[b], lam * self.tau, lam * self.rho) < self.s

    def box_in_scaled(self, C: float) -> np.ndarray:
        """Boolean (nB, nB): entry ``[a, b]`` says ``B_a subset C * B_b``."""
        dt = np.abs(self.boxes[:, None, 0] - self.boxes[None, :, 0]) + self.tau
        dx = np.linalg.norm(self.boxes[:, None, 1:] - self.boxes[None, :, 1:], axis=-1) + self.rho
        return (dt <= C * self.tau * (1 + 1e-12)) & (dx <= C * self.rho * (1 + 1e-12))

    def in_q_r(self, pts) -> np.ndarray:
        pts = np.atleast_2d(pts)
        return (pts[:, 0] >= self.t0) & (pts[:, 0] <= self.t1) & \
            (np.linalg.norm(pts[:, 1:], axis=-1) <= self.R)

    def cell_multiplicity(self, pts) -> np.ndarray:
        """Number of cells containing each point."""
        pts = np.atleast_2d(pts)
        out = np.zeros(pts.shape[0], dtype=int)
        for start in range(0, pts.shape[0], 256):
            chunk = pts[start:start + 256]
            dist = np.linalg.norm(chunk[:, None, :] - self.cells[None, :, :], axis=-1)
            out[start:start + 256] = np.sum(dist < self.s, axis=1)
        return out

    def box_multiplicity(self, pts) -> np.ndarray:
        pts = np.atleast_2d(pts)
        return np.array([int(np.sum((np.abs(self.boxes[:, 0] - p[0]) <= self.tau) &
                                    (np.linalg.norm(self.boxes[:, 1:] - p[1:], axis=-1) <= self.rho)))
                         for p in pts])

    def sample_q_r(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Uniform random points of ``Q_R``."""
        t = rng.uniform(self.t0, self.t1, n)
        g = rng.normal(size=(n, self.d))
        g /= np.linalg.norm(g, axis=-1, keepdims=True)
        r = self.R * rng.uniform(0, 1, n) ** (1.0 / self.d)
        return np.column_stack([t, g * r[:, None]])


def build_partition(R: float, eps: float, setup: TwoScaleSetup, budget: int = 200_000) -> CellPartition:
    """Cells on the ``R^{1/2}`` lattice and boxes on the ``R^{1-eps}`` lattice covering ``Q_R``."""
    if R < 16:
        raise ValueError("R must be at least 16")
    if not 0 < eps <= 0.25:
        raise ValueError("eps must lie in (0, 1/4]")
    d = setup.d
    t0, t1 = setup.q_r_times(R)
    s = math.sqrt(R)
    it = np.arange(math.floor((t0 - s) / s), math.ceil((t1 + s) / s) + 1)
    ix = np.arange(-math.ceil((R + s) / s), math.ceil((R + s) / s) + 1)
    n_est = it.size * ix.size**d
    if n_est > 4 * budget:
        raise MemoryError(f"about {n_est} candidate cells exceed the budget {budget}")
    grids = np.meshgrid(it, *([ix] * d), indexing="ij")
    cand = np.stack([g.ravel() for g in grids], axis=-1) * s
    dt = np.maximum(0.0, np.maximum(t0 - cand[:, 0], cand[:, 0] - t1))
    dx = np.maximum(0.0, np.linalg.norm(cand[:, 1:], axis=-1) - R)
    cells = cand[np.hypot(dt, dx) < s]
    if cells.shape[0] > budget:
        raise MemoryError(f"{cells.shape[0]} cells exceed the budget {budget}")

    Reps = R**eps
    tau = 0.5 * (t1 - t0) / Reps
    rho = R / Reps
    m_t = max(1, math.ceil((t1 - t0) / (2 * tau) - 1e-9))
    tc = t0 + tau + 2 * tau * np.arange(m_t)
    tc[-1] = min(tc[-1], t1 - tau) if m_t > 1 else tc[-1]
    a = 2 * rho / math.sqrt(d)
    m_x = max(1, math.ceil(2 * R / a - 1e-9))
    xc = -R + a / 2 + a * np.arange(m_x)
    if m_x * a > 2 * R:
        xc = np.linspace(-R + a / 2, R - a / 2, m_x) if m_x > 1 else np.array([0.0])
    bg = np.meshgrid(tc, *([xc] * d), indexing="ij")
    boxes = np.stack([g.ravel() for g in bg], axis=-1)
    boxes = boxes[np.lexsort(boxes.T[::-1])]
    return CellPartition(float(R), float(eps), d, t0, t1, cells, boxes, tau, rho, 2 ** (d + 1))


# ---------------------------------------------------------------------------
# incidence classes
# ---------------------------------------------------------------------------

def _check_dyadic(name, val, upper):
    if not (val >= 1 and val <= upper):
        raise ValueError(f"{name}={val} outside [1, {upper:.3g}]")
    e = math.log2(val)
    if abs(e - round(e)) > 1e-12:
        raise ValueError(f"{name}={val} is not dyadic")


@dataclass
class IncidenceTable:
    """All class sets for fixed dyadic ``(mu1, mu2, lam1, lam2)``.

    ``inc[j]`` is the boolean (nq, nT_j) matrix of ``T in T_j(q)``; ``best_box[j]``
    holds ``B_j(T, lam_j, mu1, mu2)`` for tubes in ``T_j(lam_j, mu1, mu2)`` and -1
    otherwise; ``sim[j]`` is the (nT_j, nB) relation ``T ~ B`` at these parameters.
    """

    mu: tuple[int, int]
    lam: tuple[int, int]
    C: float
    inc: dict
    counts: dict
    q_class: np.ndarray
    lam_counts: dict
    t_class: dict
    best_box: dict
    box_counts: dict
    sim: dict

    def tubes_at(self, q: int, j: int) -> np.ndarray:
        return np.nonzero(self.inc[j][q])[0]

    def sim_tubes(self, b: int, j: int) -> np.ndarray:
        return np.nonzero(self.sim[j][:, b])[0]

    def not_sim_tubes(self, b: int, j: int) -> np.ndarray:
        return np.nonzero(~self.sim[j][:, b])[0]


def classify(tubes: tuple[TubeFamily, TubeFamily], partition: CellPartition, mu1: int, mu2: int,
             lam1: int, lam2: int, C: float = SIM_CONSTANT, H: float = 1.0) -> IncidenceTable:
    """Fill ``T_j(q)``, ``Q(mu1, mu2)``, ``T_j(lam_j, mu1, mu2)``, ``B_j`` and ``~``.

    ``H`` is the time elongation ``2^{k1 (J-2)}`` entering the allowed dyadic range.
    """
    upper = H * partition.R ** (2 * (1 + partition.d))
    for name, val in (("mu1", mu1), ("mu2", mu2), ("lambda1", lam1), ("lambda2", lam2)):
        _check_dyadic(name, val, upper)
    mu = (mu1, mu2)
    lam = {1: lam1, 2: lam2}
    r_eps = partition.R ** partition.eps * partition.s
    inc = {j: tube_meets_balls(tubes[j - 1], partition.cells, r_eps) for j in (1, 2)}
    counts = {j: inc[j].sum(axis=1) for j in (1, 2)}
    q_class = np.ones(partition.n_cells, dtype=bool)
    for j in (1, 2):
        q_class &= (counts[j] >= 0.5 * mu[j - 1]) & (counts[j] <= mu[j - 1])
    meets = np.stack([partition.cells_meeting_box(b) for b in range(partition.n_boxes)], axis=1)  # (nq, nB)
    contain = partition.box_in_scaled(C)
    lam_counts, t_class, best_box, box_counts, sim = {}, {}, {}, {}, {}
    for j in (1, 2):
        active = inc[j] & q_class[:, None]                       # (nq, nT)
        lc = active.sum(axis=0)
        lam_counts[j] = lc
        t_class[j] = (lc >= 0.5 * lam[j]) & (lc <= lam[j])
        bc = active.T.astype(np.int64) @ meets.astype(np.int64)  # (nT, nB)
        box_counts[j] = bc
        bb = np.where(t_class[j], np.argmax(bc, axis=1) if bc.shape[1] else -1, -1)
        best_box[j] = bb
        s_rel = np.zeros((len(tubes[j - 1]), partition.n_boxes), dtype=bool)
        sel = bb >= 0
        s_rel[sel] = contain[:, bb[sel]].T
        sim[j] = s_rel
    return IncidenceTable((mu1, mu2), (lam1, lam2), C, inc, counts, q_class, lam_counts, t_class,
                          best_box, box_counts, sim)


def sim_any(tubes: tuple[TubeFamily, TubeFamily], partition: CellPartition, C: float = SIM_CONSTANT,
            H: float = 1.0) -> dict:
    """``T ~ B`` for some dyadic parameters: union of ``sim`` over every relevant class."""
    base = classify(tubes, partition, 1, 1, 1, 1, C, H)
    top = {j: max(1, int(base.counts[j].max(initial=0))) for j in (1, 2)}
    out = {j: np.zeros_like(base.sim[j]) for j in (1, 2)}
    dyad = lambda n: [2**e for e in range(0, math.ceil(math.log2(n)) + 1)]
    for mu1 in dyad(top[1]):
        for mu2 in dyad(top[2]):
            for lam1 in dyad(max(1, partition.n_cells)):
                tab = classify(tubes, partition, mu1, mu2, lam1, 1, C, H)
                out[1] |= tab.sim[1]
            for lam2 in dyad(max(1, partition.n_cells)):
                tab = classify(tubes, partition, mu1, mu2, 1, lam2, C, H)
                out[2] |= tab.sim[2]
    return out


# ---------------------------------------------------------------------------
# pi surfaces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PiSurface:
    """Level set ``F = 0`` of the defining function through the anchors.

    ``side = 1``: anchors ``(xi_1, xi_2')`` and
    ``F(z) = (h_1(xi_1) - h_1(z)) + (h_2((z - xi_1) + xi_2') - h_2(xi_2'))``.
    ``side = 2``: anchors ``(xi_2, xi_1')`` and
    ``F(z) = (h_2(xi_2) - h_2(z)) + (h_1((z - xi_2) + xi_1') - h_1(xi_1'))``.
    Both vanish exactly at ``z`` equal to the first anchor.
    """

    anchors: tuple
    side: int
    setup: TwoScaleSetup = field(repr=False)
    thickness: float
    nodes: np.ndarray = field(repr=False)
    grad_min: float
    grad_floor: float

    @property
    def gradient_ok(self) -> bool:
        return self.grad_min >= self.grad_floor

    def _phases(self):
        own, other = (self.setup.h(1), self.setup.h(2)) if self.side == 1 else (self.setup.h(2), self.setup.h(1))
        return own, other

    def value(self, z) -> np.ndarray:
        own, other = self._phases()
        z = np.atleast_2d(np.asarray(z, dtype=float))
        a, b = (np.asarray(x, dtype=float)[None, :] for x in self.anchors)
        return (own.value(a) - own.value(z)) + (other.value((z - a) + b) - other.value(b))

    def gradient(self, z) -> np.ndarray:
        own, other = self._phases()
        z = np.atleast_2d(np.asarray(z, dtype=float))
        a, b = (np.asarray(x, dtype=float)[None, :] for x in self.anchors)
        return other.gradient((z - a) + b) - own.gradient(z)

    def distance(self, z) -> np.ndarray:
        """First-order distance proxy ``|F| / |grad F|`` (0 on exact zeros, inf if ``grad F = 0 != F``)."""
        F = np.abs(self.value(z))
        g = np.linalg.norm(self.gradient(z), axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(F == 0, 0.0, np.where(g > 0, F / np.where(g > 0, g, 1.0), np.inf))
        return out

    def contains(self, z) -> np.ndarray:
        """Membership predicate ``dist(z, pi) <= thickness`` (``thickness = 0``: exact zeros)."""
        return self.distance(z) <= self.thickness


def pi_surface(anchors, setup: TwoScaleSetup, grid, thickness: float, side: int = 1,
               grad_floor: float = 0.25, strict: bool = False) -> PiSurface:
    """Discretised ``pi_side`` through ``anchors`` on ``grid`` (FrequencyGrid or node array).

    The gradient norm is evaluated on the grid nodes inside ``B(0, 2 c0)``; its
    minimum is recorded and, with ``strict=True``, a value below ``grad_floor``
    raises ``ValueError``.
    """
    if side not in (1, 2):
        raise ValueError("side must be 1 or 2")
    if thickness < 0:
        raise ValueError("thickness must be non-negative")
    a, b = (np.atleast_1d(np.asarray(x, dtype=float)) for x in anchors)
    ra = 2 * setup.radius(side)
    rb = 2 * setup.c0
    if np.linalg.norm(a) >= ra or np.linalg.norm(b) >= rb:
        raise ValueError("anchors outside the admissible balls")
    pts = grid.nodes().reshape(-1, setup.d) if hasattr(grid, "nodes") else np.asarray(grid, float).reshape(-1, setup.d)
    pre = PiSurface((tuple(a), tuple(b)), side, setup, float(thickness), np.zeros((0, setup.d)), math.inf,
                    grad_floor)
    region = pts[np.linalg.norm(pts, axis=-1) < 2 * setup.c0]
    g = np.linalg.norm(pre.gradient(region), axis=-1) if len(region) else np.array([math.inf])
    gmin = float(g.min())
    if strict and gmin < grad_floor:
        raise ValueError(f"gradient lower bound violated: min |grad F| = {gmin:.3g} < {grad_floor}")
    nodes = pts[pre.contains(pts)] if len(pts) else pts
    return PiSurface(pre.anchors, side, setup, float(thickness), nodes, gmin, grad_floor)


# ---------------------------------------------------------------------------
# nu counts
# ---------------------------------------------------------------------------

def frequency_lattice(setup: TwoScaleSetup, side: int, R: float) -> np.ndarray:
    """Lattice frequencies ``R^{-1/2} Z^d`` inside ``B(0, c0 2^{-k_side})``."""
    s = math.sqrt(R)
    r = setup.radius(side)
    m = math.floor(r * s)
    ax = np.arange(-m, m + 1) / s
    pts = np.stack(np.meshgrid(*([ax] * setup.d), indexing="ij"), axis=-1).reshape(-1, setup.d)
    return pts[np.linalg.norm(pts, axis=-1) < r]


@dataclass(frozen=True)
class NuCounts:
    nu1: np.ndarray
    nu2: np.ndarray
    anchors_used: int
    subsampled: bool

    def __iter__(self):
        return iter((self.nu1, self.nu2))


def nu_counts(table: IncidenceTable, families: tuple[TubeFamily, TubeFamily], setup: TwoScaleSetup,
              anchors1=None, anchors2=None, thickness: float | None = None, restrict: str = "incidence",
              budget: int = 20_000, subsample: bool = False, seed: int = 0) -> NuCounts:
    """``nu_j(q) = max over anchor pairs of #{T in T_j'(q) : dist(xi(T), pi_j) <= thickness}``.

    ``restrict="incidence"`` takes ``T_j'(q) = T_j(q)`` (monotone under family
    inclusion); ``"class"`` intersects with ``T_j(lam_j, mu1, mu2)``.
    """
    R = families[0].R if len(families[0]) else families[1].R
    if anchors1 is None:
        anchors1 = frequency_lattice(setup, 1, R)
    if anchors2 is None:
        anchors2 = frequency_lattice(setup, 2, R)
    if thickness is None:
        thickness = R**-0.5
    A1 = np.atleast_2d(np.asarray(anchors1, dtype=float))
    A2 = np.atleast_2d(np.asarray(anchors2, dtype=float))
    nq = table.q_class.shape[0]
    pairs = [(i, k) for i in range(len(A1)) for k in range(len(A2))]
    subsampled = False
    if len(pairs) > budget:
        if not subsample:
            raise RuntimeError(f"{len(pairs)} anchor pairs exceed the budget {budget}")
        rng = np.random.default_rng(seed)
        pairs = [pairs[i] for i in sorted(rng.choice(len(pairs), budget, replace=False))]
        subsampled = True
    out = {}
    for j, (own, other) in ((1, (A1, A2)), (2, (A2, A1))):
        fam = families[j - 1]
        active = table.inc[j]
        if restrict == "class":
            active = active & table.t_class[j][None, :]
        if len(fam) == 0 or not pairs:
            out[j] = np.zeros(nq, dtype=int)
            continue
        member = np.zeros((len(pairs), len(fam)), dtype=bool)
        for r, (i, k) in enumerate(pairs):
            ia, ib = (i, k) if j == 1 else (k, i)
            surf = PiSurface((tuple(own[ia]), tuple(other[ib])), j, setup, thickness,
                             np.zeros((0, fam.d)), math.inf, 0.0)
            member[r] = surf.contains(fam.xi)
        out[j] = (active.astype(np.int64) @ member.T.astype(np.int64)).max(axis=1)
    return NuCounts(out[1], out[2], len(pairs), subsampled)


# ---------------------------------------------------------------------------
# random ensembles and counting experiments
# ---------------------------------------------------------------------------

def _positions_meeting(xi, v, centre, radius, s, d):
    """Lattice positions ``x_T in s Z^d`` whose tube meets ``ball(centre, radius)``."""
    xc = centre[1:] + centre[0] * v
    reach = s + radius * math.sqrt(1.0 + float(v @ v))
    lo = np.floor((xc - reach) / s).astype(int)
    hi = np.ceil((xc + reach) / s).astype(int)
    axes = [np.arange(lo[i], hi[i] + 1) * s for i in range(d)]
    X = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    fam = TubeFamily(X, np.broadcast_to(xi, X.shape).copy(), np.broadcast_to(v, X.shape).copy(), s * s)
    return X[tube_meets_balls(fam, centre[None, :], radius)[0]]


def lattice_ensemble(setup: TwoScaleSetup, side: int, R: float, rng: np.random.Generator,
                     n: int | None = None, reach: float | None = None) -> TubeFamily:
    """Lattice tubes of one side meeting ``Q_R`` enlarged by ``reach`` (default 0).

    ``n=None`` returns every such tube; otherwise ``n`` are drawn uniformly.
    """
    s = math.sqrt(R)
    d = setup.d
    freqs = frequency_lattice(setup, side, R)
    phase = setup.h(side)
    vel = np.asarray(phase.gradient(freqs), dtype=float).reshape(-1, d)
    region = PacketRegion.q_r(setup, R)
    reach = 0.0 if reach is None else reach
    xs, xis, vs = [], [], []
    for xi, v in zip(freqs, vel):
        t0, t1 = region.t0, region.t1
        span = R + reach + s + max(abs(t0), abs(t1)) * np.abs(v)
        axes = [np.arange(math.floor(-span[i] / s), math.ceil(span[i] / s) + 1) * s for i in range(d)]
        X = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
        dist = region.tube_distance(X, np.broadcast_to(v, X.shape))
        X = X[dist < s + reach]
        xs.append(X)
        xis.append(np.broadcast_to(xi, X.shape))
        vs.append(np.broadcast_to(v, X.shape))
    fam = TubeFamily(np.vstack(xs), np.vstack(xis), np.vstack(vs), float(R), side)
    if n is not None and n < len(fam):
        fam = fam.subset(np.sort(rng.choice(len(fam), n, replace=False)))
    return fam


@dataclass(frozen=True)
class CountStats:
    lemma: int
    R: float
    eps: float
    counts: np.ndarray
    seeds: tuple
    min_angle: float
    control: bool

    @property
    def max_count(self) -> int:
        return int(self.counts.max(initial=0))

    @property
    def mean_count(self) -> float:
        return float(self.counts.mean()) if self.counts.size else 0.0

    CSV_HEADER = "trial,R,eps,lemma,control,count,max_count,mean_count,seed"

    def csv_rows(self) -> list[str]:
        return [f"{i},{self.R:g},{self.eps:.17g},{self.lemma},{int(self.control)},{int(c)},"
                f"{self.max_count},{self.mean_count:.17g},{seed}"
                for i, (c, seed) in enumerate(zip(self.counts, self.seeds))]


def _direction_angle(v1, v2) -> float:
    a = np.concatenate([[1.0], -np.asarray(v1)])
    b = np.concatenate([[1.0], -np.asarray(v2)])
    c = abs(a @ b) / (np.linalg.norm(a) * np.linalg.norm(b))
    return math.acos(min(1.0, c))


def count_trial(lemma: int, setup: TwoScaleSetup, R: float, eps: float, rng: np.random.Generator,
                partition: CellPartition | None = None, C_sep: float = 2.0, thickness: float | None = None,
                control: bool = False) -> tuple[int, float]:
    """One trial of the counting experiment; returns ``(count, min generator angle)``.

    Lemma 1: a fixed tube ``T_b`` on side 2, a box ``B`` and a cell ``q0 subset 2B``,
    anchors ``(xi_1, xi_2')``; the constrained family is every side-1 lattice tube
    meeting ``R^eps q0`` whose frequency lies within ``thickness`` of ``pi_1``.
    The count is ``#{(q, T) : T cap R^eps q, T_b cap R^eps q != {}, q cap (C_sep/2) B = {}}``.
    Lemma 2 exchanges the sides.  With ``control=True`` the fixed tube is forced
    to pass through ``R^eps q0`` with the first anchor's frequency (parallel to the
    family when both sides share one phase).
    """
    if lemma not in (1, 2):
        raise ValueError("lemma must be 1 or 2")
    P = partition or build_partition(R, eps, setup)
    s = math.sqrt(R)
    d = setup.d
    a_side, b_side = (1, 2) if lemma == 1 else (2, 1)
    thickness = 0.5 / s if thickness is None else thickness
    r_eps = R**eps * s
    b = int(rng.integers(P.n_boxes))
    inside = np.nonzero(P.cells_in_box_scaled(b, 2.0))[0]
    if inside.size == 0:
        return 0, math.nan
    q0 = P.cells[int(rng.choice(inside))]
    Xa = frequency_lattice(setup, a_side, R)
    Xb = frequency_lattice(setup, b_side, R)
    anchor_a = Xa[int(rng.integers(len(Xa)))]
    anchor_b = Xb[int(rng.integers(len(Xb)))]
    surf = PiSurface((tuple(anchor_a), tuple(anchor_b)), a_side, setup, thickness, np.zeros((0, d)), math.inf, 0.0)
    ha, hb = setup.h(a_side), setup.h(b_side)
    xs, xis = [], []
    for xi in Xa[surf.contains(Xa)]:
        v = np.asarray(ha.gradient(xi[None, :]), dtype=float)[0]
        X = _positions_meeting(xi, v, q0, r_eps, s, d)
        xs.append(X)
        xis.append(np.broadcast_to(xi, X.shape))
    if not xs or sum(len(x) for x in xs) == 0:
        return 0, math.nan
    X = np.vstack(xs)
    XI = np.vstack(xis)
    V = np.asarray(ha.gradient(XI), dtype=float).reshape(-1, d)
    fam = TubeFamily(X, XI, V, R, a_side)
    if control:
        xi_b = anchor_a
        v_b = np.asarray(hb.gradient(xi_b[None, :]), dtype=float)[0]
        cand = _positions_meeting(xi_b, v_b, q0, r_eps, s, d)
        xb = cand[int(rng.integers(len(cand)))] if len(cand) else q0[1:] + q0[0] * v_b
    else:
        ens = lattice_ensemble(setup, b_side, R, rng)
        i = int(rng.integers(len(ens)))
        xi_b, xb = ens.xi[i], ens.x[i]
        v_b = ens.v[i]
    fixed = TubeFamily(xb[None, :], xi_b[None, :], v_b[None, :], R, b_side)
    far = _box_distance(P.cells, P.boxes[b], 0.5 * C_sep * P.tau, 0.5 * C_sep * P.rho) >= s
    cells = P.cells[far]
    hit_b = tube_meets_balls(fixed, cells, r_eps)[:, 0]
    if not hit_b.any():
        return 0, float(min(_direction_angle(v, v_b) for v in V))
    hit_a = tube_meets_balls(fam, cells[hit_b], r_eps)
    angle = float(min(_direction_angle(v, v_b) for v in np.unique(V, axis=0)))
    return int(hit_a.sum()), angle


def count_experiment(lemma: int, setup: TwoScaleSetup, R: float, eps: float = 0.09375, trials: int = 100,
                     seed: int = 0, C_sep: float = 2.0, thickness: float | None = None,
                     control: bool = False) -> CountStats:
    """Repeated :func:`count_trial` with per-trial seeds derived from ``seed``."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    P = build_partition(R, eps, setup)
    seeds = np.random.SeedSequence(seed).generate_state(trials, dtype=np.uint64)
    counts, angles = [], []
    for sd in seeds:
        c, ang = count_trial(lemma, setup, R, eps, np.random.default_rng(int(sd)), P, C_sep, thickness, control)
        counts.append(c)
        angles.append(ang)
    finite = [a for a in angles if not math.isnan(a)]
    return CountStats(lemma, float(R), float(eps), np.asarray(counts, dtype=int), tuple(int(s) for s in seeds),
                      min(finite) if finite else math.nan, control)


def growth_ratio(small: CountStats, large: CountStats) -> float:
    """Ratio of maximal counts between two scales (``inf`` if the smaller is zero)."""
    if small.max_count == 0:
        return math.inf if large.max_count else 1.0
    return large.max_count / small.max_count
