"""Extension operators on uniform grids.

Conventions
-----------
A density ``f`` is sampled on the frequency nodes ``xi_m = a + m h``
(``m = 0..n-1`` per axis, ``a`` the lower box corner).  The extension is the
Riemann sum

    E f(t, x) = h^d * sum_m exp(i (t phase(xi_m) + x . xi_m)) f(xi_m),

evaluated for every time node by one inverse FFT of length ``N = pad * n``
per axis.  The spatial nodes are ``x_l = (l - N/2) dx`` with
``dx = 2 pi / (N h)``; the field is periodic in ``x`` with period
``L = 2 pi / h``.  With this normalization the fixed-time Plancherel identity
reads

    ||E f(t, .)||_{L^2_x} = KAPPA_d * ||f||_{L^2_xi},   KAPPA_d = (2 pi)^{d/2},

exactly on the grid (Riemann sums on both sides).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Iterator, Optional

import numpy as np
import scipy.fft as sfft

from .hypersurface import EllipticPhase, RadialPhase, affine_density

__all__ = [
    "kappa",
    "AliasingError",
    "AliasingWarning",
    "SupportError",
    "FrequencyGrid",
    "SpacetimeGrid",
    "Field",
    "TwoScaleSetup",
    "extend",
    "iter_extend",
    "extend_direct",
    "weighted_extend",
    "two_scale_operators",
    "check_aliasing",
    "spatial_forward",
]


def kappa(d: int) -> float:
    """Fixed-time Plancherel constant ``(2 pi)^{d/2}`` of :func:`extend`."""
    return (2.0 * np.pi) ** (d / 2.0)


class AliasingError(ValueError):
    """The phase displaces mass by more than one spatial period."""


class AliasingWarning(UserWarning):
    """The phase displaces mass by more than half a spatial period."""


class SupportError(ValueError):
    """A density is nonzero outside the admissible region."""


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform complex samples of a density on a box in R^d (d in {1, 2}).

    ``lower`` is the box corner; the nodes are ``lower + m h`` for
    ``m = 0..n-1`` per axis, so the box half-width is ``n h / 2``.
    """

    d: int
    n: int
    h: float
    lower: tuple[float, ...]
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError("d must be 1 or 2")
        if not _is_pow2(self.n):
            raise ValueError("n must be a power of two")
        if not self.h > 0:
            raise ValueError("spacing must be positive")
        samples = np.asarray(self.samples, dtype=complex)
        if samples.shape != (self.n,) * self.d:
            raise ValueError(f"samples must have shape {(self.n,) * self.d}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "lower", tuple(float(v) for v in self.lower))

    # -- constructors -------------------------------------------------------
    @classmethod
    def box(cls, d: int, n: int, half_width: float, center=None, samples=None) -> "FrequencyGrid":
        c = np.zeros(d) if center is None else np.asarray(center, dtype=float)
        h = 2.0 * half_width / n
        s = np.zeros((n,) * d, dtype=complex) if samples is None else samples
        return cls(d, n, h, tuple(c - half_width), s)

    @classmethod
    def with_spacing(cls, d: int, n: int, h: float, center=None, samples=None) -> "FrequencyGrid":
        """Grid with spacing ``h`` whose node set contains ``center`` (default 0)."""
        c = np.zeros(d) if center is None else np.asarray(center, dtype=float)
        s = np.zeros((n,) * d, dtype=complex) if samples is None else samples
        return cls(d, n, h, tuple(c - (n // 2) * h), s)

    def like(self, samples) -> "FrequencyGrid":
        return replace(self, samples=np.asarray(samples, dtype=complex))

    def zeros(self) -> "FrequencyGrid":
        return self.like(np.zeros_like(self.samples))

    def sample(self, fn: Callable[[np.ndarray], np.ndarray]) -> "FrequencyGrid":
        """Grid with samples ``fn(nodes)`` (nodes of shape ``(..., d)``)."""
        return self.like(fn(self.nodes()))

    # -- geometry -------------------------------------------------------------
    def axis(self, i: int = 0) -> np.ndarray:
        return self.lower[i] + self.h * np.arange(self.n)

    def nodes(self) -> np.ndarray:
        axes = [self.axis(i) for i in range(self.d)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    @property
    def center(self) -> np.ndarray:
        return np.asarray(self.lower) + 0.5 * self.n * self.h

    @property
    def half_width(self) -> float:
        return 0.5 * self.n * self.h

    @property
    def cell(self) -> float:
        return self.h**self.d

    def support(self) -> np.ndarray:
        """Boolean mask of nodes where the density is nonzero."""
        return self.samples != 0

    def support_nodes(self) -> np.ndarray:
        return self.nodes()[self.support()]

    def lp_norm(self, p: float) -> float:
        a = np.abs(self.samples)
        if math.isinf(p):
            return float(a.max(initial=0.0))
        return float((np.sum(a**p) * self.cell) ** (1.0 / p))

    def l2_norm(self) -> float:
        return self.lp_norm(2.0)

    def same_geometry(self, other: "FrequencyGrid") -> bool:
        return (self.d, self.n, self.h, self.lower) == (other.d, other.n, other.h, other.lower)

    def __add__(self, other: "FrequencyGrid") -> "FrequencyGrid":
        if not self.same_geometry(other):
            raise ValueError("grids differ")
        return self.like(self.samples + other.samples)

    def __mul__(self, c) -> "FrequencyGrid":
        return self.like(self.samples * c)

    __rmul__ = __mul__


RegionFn = Callable[[float, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SpacetimeGrid:
    """Time nodes times the spatial grid conjugate to a frequency grid.

    ``region`` is an optional mask ``region(t, X) -> bool array`` evaluated on
    the spatial node array ``X`` (shape ``(N,)*d + (d,)``) of each slice;
    ``region_id`` names it in reports.  ``time_weights`` are quadrature
    weights per time node (default: uniform spacing, or 1 for a single node).
    """

    times: np.ndarray
    d: int
    n: int
    h: float
    lower: tuple[float, ...]
    pad: int = 1
    region: Optional[RegionFn] = field(default=None, repr=False, compare=False)
    region_id: str = "full"
    time_weights: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        t = np.atleast_1d(np.asarray(self.times, dtype=float))
        object.__setattr__(self, "times", t)
        if not _is_pow2(self.pad):
            raise ValueError("pad must be a power of two")
        if self.time_weights is not None:
            w = np.asarray(self.time_weights, dtype=float)
            if w.shape != t.shape:
                raise ValueError("time_weights must match times")
            object.__setattr__(self, "time_weights", w)

    @classmethod
    def conjugate(cls, fgrid: FrequencyGrid, times, pad: int = 1, region: RegionFn | None = None,
                  region_id: str = "full", time_weights=None) -> "SpacetimeGrid":
        return cls(np.asarray(times, dtype=float), fgrid.d, fgrid.n, fgrid.h, fgrid.lower, pad,
                   region, region_id, time_weights)

    @property
    def N(self) -> int:
        return self.n * self.pad

    @property
    def dx(self) -> float:
        return 2.0 * np.pi / (self.N * self.h)

    @property
    def period(self) -> float:
        return 2.0 * np.pi / self.h

    def x_axis(self) -> np.ndarray:
        return (np.arange(self.N) - self.N // 2) * self.dx

    def x_nodes(self) -> np.ndarray:
        ax = self.x_axis()
        return np.stack(np.meshgrid(*([ax] * self.d), indexing="ij"), axis=-1)

    @property
    def shape(self) -> tuple[int, ...]:
        return (len(self.times),) + (self.N,) * self.d

    def weights(self) -> np.ndarray:
        """Per-time quadrature weights."""
        if self.time_weights is not None:
            return self.time_weights
        if len(self.times) == 1:
            return np.ones(1)
        dt = np.diff(self.times)
        if not np.allclose(dt, dt[0], rtol=1e-9, atol=0):
            raise ValueError("nonuniform time nodes need explicit time_weights")
        return np.full(len(self.times), dt[0])

    def slice_mask(self, i: int, X: np.ndarray | None = None) -> np.ndarray:
        if self.region is None:
            return np.ones((self.N,) * self.d, dtype=bool)
        if X is None:
            X = self.x_nodes()
        return np.asarray(self.region(float(self.times[i]), X), dtype=bool)

    def with_region(self, region: RegionFn | None, region_id: str) -> "SpacetimeGrid":
        return replace(self, region=region, region_id=region_id)

    def with_times(self, times, time_weights=None) -> "SpacetimeGrid":
        return replace(self, times=np.asarray(times, dtype=float), time_weights=time_weights)

    def describe(self) -> str:
        t = self.times
        return (f"d={self.d} n={self.n} pad={self.pad} h={self.h:.6g} dx={self.dx:.6g} "
                f"period={self.period:.6g} t=[{t[0]:.6g},{t[-1]:.6g}]x{len(t)} region={self.region_id}")


@dataclass
class Field:
    """Complex samples of a spacetime function; ``samples.shape == grid.shape``."""

    grid: SpacetimeGrid
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.samples.shape != self.grid.shape:
            raise ValueError(f"field shape {self.samples.shape} != grid shape {self.grid.shape}")

    def __mul__(self, other: "Field") -> "Field":
        if isinstance(other, Field):
            return Field(self.grid, self.samples * other.samples)
        return Field(self.grid, self.samples * other)

    def __add__(self, other: "Field") -> "Field":
        return Field(self.grid, self.samples + other.samples)

    def __sub__(self, other: "Field") -> "Field":
        return Field(self.grid, self.samples - other.samples)


# ---------------------------------------------------------------------------
# the FFT core
# ---------------------------------------------------------------------------

def _phase_values(phase, fgrid: FrequencyGrid) -> np.ndarray:
    return np.asarray(phase.value(fgrid.nodes()), dtype=float)


def check_aliasing(phase, fgrid: FrequencyGrid, times, warn: bool = True) -> float:
    """Predicted displacement ``max|t| * max|grad phase|`` over the support.

    Raises :class:`AliasingError` when it exceeds the spatial period and warns
    (:class:`AliasingWarning`) when it exceeds half of it.  Returns the
    displacement divided by the period.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    pts = fgrid.support_nodes()
    if len(pts) == 0 or len(times) == 0:
        return 0.0
    g = np.asarray(phase.gradient(pts), dtype=float)
    disp = float(np.max(np.abs(times))) * float(np.max(np.linalg.norm(g, axis=-1)))
    period = 2.0 * np.pi / fgrid.h
    ratio = disp / period
    if ratio > 1.0:
        raise AliasingError(f"phase displacement {disp:.4g} exceeds spatial period {period:.4g}; "
                            "refine the frequency spacing or shorten the time range")
    if ratio > 0.5 and warn:
        warnings.warn(f"phase displacement {disp:.4g} exceeds half the spatial period {period:.4g}",
                      AliasingWarning, stacklevel=3)
    return ratio


def _check_support(phase, fgrid: FrequencyGrid):
    if isinstance(phase, EllipticPhase):
        pts = fgrid.support_nodes()
        if len(pts) and not np.all(phase.in_domain(pts, tol=1e-9)):
            raise SupportError(f"density is nonzero outside the domain of {phase.name}")


class _Kernel:
    """Per-slice evaluator shared by :func:`extend` and :func:`iter_extend`."""

    def __init__(self, phase, fgrid: FrequencyGrid, grid: SpacetimeGrid):
        if (fgrid.d, fgrid.n, fgrid.h, fgrid.lower) != (grid.d, grid.n, grid.h, grid.lower):
            raise ValueError("spacetime grid is not conjugate to the frequency grid")
        d, n, N = fgrid.d, fgrid.n, grid.N
        self.d, self.n, self.N = d, n, N
        idx = np.indices((n,) * d).sum(axis=0)
        sign = np.where(idx % 2 == 0, 1.0, -1.0)
        self.base = fgrid.samples * sign
        self.phi = _phase_values(phase, fgrid) if np.any(fgrid.samples) else np.zeros((n,) * d)
        ax = grid.x_axis()
        # e^{i x . a} factor, separable over axes
        mod = np.ones((N,) * d, dtype=complex)
        for i in range(d):
            shape = [1] * d
            shape[i] = N
            mod = mod * np.exp(1j * ax * fgrid.lower[i]).reshape(shape)
        self.mod = mod * (fgrid.h * N) ** d
        self.buf = np.zeros((N,) * d, dtype=complex)
        self.sl = tuple(slice(0, n) for _ in range(d))

    def __call__(self, t: float) -> np.ndarray:
        self.buf[self.sl] = self.base * np.exp(1j * t * self.phi) if t != 0 else self.base
        return sfft.ifftn(self.buf) * self.mod


def iter_extend(phase, f: FrequencyGrid, grid: SpacetimeGrid, check: bool = True) -> Iterator[tuple[int, float, np.ndarray]]:
    """Yield ``(i, t_i, E f(t_i, .))`` slice by slice (constant memory)."""
    if check:
        _check_support(phase, f)
        check_aliasing(phase, f, grid.times)
    ker = _Kernel(phase, f, grid)
    for i, t in enumerate(grid.times):
        yield i, float(t), ker(float(t))


def extend(phase, f: FrequencyGrid, grid: SpacetimeGrid, check: bool = True) -> Field:
    """``E f`` on ``grid`` (see module docstring for the normalization).

    ``phase`` is any object with ``value(xi)`` and ``gradient(xi)`` acting on
    point arrays of shape ``(..., d)`` (e.g. :class:`RadialPhase`,
    :class:`EllipticPhase`).
    """
    out = np.empty(grid.shape, dtype=complex)
    for i, _, sl in iter_extend(phase, f, grid, check=check):
        out[i] = sl
    return Field(grid, out)


def extend_direct(phase, f: FrequencyGrid, t, x) -> np.ndarray:
    """Direct O(n^d) Riemann sum of the extension at the points ``(t_k, x_k)``.

    ``t`` has shape ``(K,)`` and ``x`` shape ``(K, d)`` (or ``(K,)`` if d = 1).
    Independent of the FFT path; used as an oracle.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    x = np.asarray(x, dtype=float).reshape(len(t), f.d)
    nodes = f.nodes().reshape(-1, f.d)
    vals = f.samples.reshape(-1)
    keep = vals != 0
    nodes, vals = nodes[keep], vals[keep]
    phi = np.asarray(phase.value(nodes), dtype=float)
    out = np.empty(len(t), dtype=complex)
    for k in range(len(t)):
        arg = t[k] * phi + nodes @ x[k]
        out[k] = np.sum(np.exp(1j * arg) * vals) * f.cell
    return out


def spatial_forward(values: np.ndarray, fgrid: FrequencyGrid, grid: SpacetimeGrid) -> np.ndarray:
    """Inverse of ``extend`` at ``t = 0``: frequency samples of a spatial function.

    Returns the samples on the ``n^d`` frequency nodes of ``fgrid`` of the
    discrete transform ``F(xi_m) = (dx / 2pi)^d sum_l values_l e^{-i x_l xi_m}``;
    components at the padded (out-of-box) frequencies are discarded.
    """
    d, n, N = fgrid.d, fgrid.n, grid.N
    ax = grid.x_axis()
    demod = np.ones((N,) * d, dtype=complex)
    for i in range(d):
        shape = [1] * d
        shape[i] = N
        demod = demod * np.exp(-1j * ax * fgrid.lower[i]).reshape(shape)
    g = sfft.fftn(values * demod)[tuple(slice(0, n) for _ in range(d))]
    idx = np.indices((n,) * d).sum(axis=0)
    sign = np.where(idx % 2 == 0, 1.0, -1.0)
    return g * sign / (fgrid.h * N) ** d


def weighted_extend(P: RadialPhase, f: FrequencyGrid, p: float, grid: SpacetimeGrid, check: bool = True) -> Field:
    """``Lambda_P(grad)^{1/p'} E_P f``, i.e. the extension of ``Lambda_P^{1/p'} f``."""
    return extend(P, weighted_density(P, f, p), grid, check=check)


def weighted_density(P: RadialPhase, f: FrequencyGrid, p: float) -> FrequencyGrid:
    inv_pp = 1.0 if math.isinf(p) else 1.0 - 1.0 / p
    lam = affine_density(P, f.nodes())
    w = lam**inv_pp if inv_pp != 0 else np.ones_like(lam)
    return f.like(w * f.samples)


# ---------------------------------------------------------------------------
# two-scale setup
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TwoScaleSetup:
    """Two elliptic phases at scales ``2^{-k_1}`` and ``2^{-k_2}``.

    ``h_j(xi) = 2^{-J k_j} g_j(2^{k_j} xi)`` on ``B(0, c0 2^{-k_j})``.  The
    ``scaling="alternative"`` switch replaces ``h_1`` by
    ``2^{-(J-2) k_1} g_1`` (no bounds are claimed for it).
    """

    g1: EllipticPhase
    g2: EllipticPhase
    k1: int
    k2: int
    J: float
    c0: float = 0.125
    scaling: str = "standard"

    def __post_init__(self):
        if not self.J > 2:
            raise ValueError("J must exceed 2")
        if self.k1 < self.k2:
            raise ValueError("need k1 >= k2")
        if not 0 < self.c0 <= 0.25:
            raise ValueError("c0 must lie in (0, 1/4]")
        if self.scaling not in ("standard", "alternative"):
            raise ValueError("scaling must be 'standard' or 'alternative'")

    @classmethod
    def paraboloid_pair(cls, d: int = 1, k1: int = 0, k2: int = 0, J: float = 4, c0: float = 0.125,
                        transversal: bool = True) -> "TwoScaleSetup":
        """``g_1 = |xi|^2`` and ``g_2 = |xi - e_1|^2`` (or ``|xi|^2`` when not transversal)."""
        e1 = np.zeros(d)
        if transversal:
            e1[0] = 1.0
        g1 = EllipticPhase.quadratic(d, name="|xi|^2")
        g2 = EllipticPhase.quadratic(d, center=e1, name="|xi-e1|^2" if transversal else "|xi|^2")
        return cls(g1, g2, k1, k2, J, c0)

    def k(self, j: int) -> int:
        return self.k1 if j == 1 else self.k2

    def g(self, j: int) -> EllipticPhase:
        return self.g1 if j == 1 else self.g2

    def h(self, j: int) -> EllipticPhase:
        if j not in (1, 2):
            raise ValueError("j must be 1 or 2")
        if j == 1 and self.scaling == "alternative":
            return self.g1.scaled(2.0 ** (-(self.J - 2) * self.k1))
        return self.g(j).rescale(self.k(j), self.J)

    def radius(self, j: int) -> float:
        """Support radius ``c0 2^{-k_j}`` of the densities on side ``j``."""
        return self.c0 * 2.0 ** (-self.k(j))

    @property
    def d(self) -> int:
        return self.g1.dim

    @property
    def H(self) -> float:
        """Time elongation ``2^{k_1 (J-2)}`` of ``Q_R``."""
        return 2.0 ** (self.k1 * (self.J - 2))

    def q_r_times(self, R: float) -> tuple[float, float]:
        return 0.5 * self.H * R, self.H * R

    def q_r_region(self, R: float) -> RegionFn:
        t0, t1 = self.q_r_times(R)

        def region(t, X):
            inside_t = (t >= t0 - 1e-9 * t1) and (t <= t1 * (1 + 1e-12))
            return np.linalg.norm(X, axis=-1) <= R if inside_t else np.zeros(X.shape[:-1], dtype=bool)

        return region

    def swapped(self) -> "TwoScaleSetup":
        """Same data with the roles of the two sides exchanged (no ordering checks)."""
        obj = object.__new__(TwoScaleSetup)
        for name, val in (("g1", self.g2), ("g2", self.g1), ("k1", self.k2), ("k2", self.k1),
                          ("J", self.J), ("c0", self.c0), ("scaling", self.scaling)):
            object.__setattr__(obj, name, val)
        return obj


def _check_ball(f: FrequencyGrid, radius: float, label: str):
    pts = f.support_nodes()
    if len(pts) and np.max(np.linalg.norm(pts, axis=-1)) >= radius * (1 + 1e-12):
        raise SupportError(f"{label} is not supported in B(0, {radius:.6g})")


def two_scale_operators(setup: TwoScaleSetup, f1: FrequencyGrid, f2: FrequencyGrid,
                        grid: SpacetimeGrid, check: bool = True) -> tuple[Field, Field, Field]:
    """``(E_1 f_1, E_2 f_2, E_1 f_1 * E_2 f_2)`` on a common grid."""
    if not f1.same_geometry(f2):
        raise ValueError("f1 and f2 must share a frequency grid")
    _check_ball(f1, setup.radius(1), "f1")
    _check_ball(f2, setup.radius(2), "f2")
    E1 = extend(setup.h(1), f1, grid, check=check)
    E2 = extend(setup.h(2), f2, grid, check=check)
    return E1, E2, E1 * E2
