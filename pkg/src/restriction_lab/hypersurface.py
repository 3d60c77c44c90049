"""Radial and elliptic phase functions.

A :class:`RadialPhase` is a finite sum ``P(r) = sum_i a_i r**k_i`` with
nonnegative coefficients and exponents ``k_i >= 2``; the hypersurface is the
graph ``t = P(|xi|)``.  An :class:`EllipticPhase` is a general smooth phase on
a ball (or annulus) given by value/gradient/Hessian evaluators.

Point arrays always carry the spatial dimension on the last axis, i.e. a set
of frequencies in R^d has shape ``(..., d)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

__all__ = [
    "RadialPhase",
    "EllipticPhase",
    "EllipticityReport",
    "eval_radial",
    "affine_density",
    "ellipticity_diagnose",
    "rescale_annulus",
    "read_phase_file",
]


def _is_even_int(k: float) -> bool:
    return float(k).is_integer() and int(k) % 2 == 0


@dataclass(frozen=True)
class RadialPhase:
    """``P(r) = sum_i a_i r**k_i`` with ``a_i >= 0`` and ``2 <= k_1 < k_2 < ...``.

    In polynomial mode (every exponent an even integer) the term with exponent
    ``2i`` has *index* ``i``; otherwise indices are 1-based term positions.
    Zero coefficients are allowed (they keep indices aligned) as long as at
    least one coefficient is positive.
    """

    exponents: tuple[float, ...]
    coefficients: tuple[float, ...]

    def __post_init__(self):
        exps = tuple(float(k) for k in self.exponents)
        coefs = tuple(float(a) for a in self.coefficients)
        object.__setattr__(self, "exponents", exps)
        object.__setattr__(self, "coefficients", coefs)
        if len(exps) == 0 or len(exps) != len(coefs):
            raise ValueError("exponents and coefficients must be nonempty and of equal length")
        if any(not math.isfinite(k) or k < 2 for k in exps):
            raise ValueError("exponents must be finite and >= 2 (no constant or linear terms)")
        if any(b <= a for a, b in zip(exps, exps[1:])):
            raise ValueError("exponents must be strictly increasing")
        if any(not math.isfinite(a) or a < 0 for a in coefs):
            raise ValueError("coefficients must be finite and nonnegative")
        if not any(a > 0 for a in coefs):
            raise ValueError("at least one coefficient must be positive")

    # -- constructors -----------------------------------------------------
    @classmethod
    def polynomial(cls, coefficients: Sequence[float]) -> "RadialPhase":
        """``a_1 t^2 + a_2 t^4 + ... + a_N t^{2N}`` from ``(a_1, ..., a_N)``."""
        coefs = list(coefficients)
        return cls(tuple(2.0 * (i + 1) for i in range(len(coefs))), tuple(coefs))

    @classmethod
    def monomial(cls, exponent: float, coefficient: float = 1.0) -> "RadialPhase":
        if _is_even_int(exponent):
            n = int(exponent) // 2
            return cls.polynomial([0.0] * (n - 1) + [coefficient])
        return cls((exponent,), (coefficient,))

    # -- structure ----------------------------------------------------------
    @property
    def is_polynomial(self) -> bool:
        return all(_is_even_int(k) for k in self.exponents)

    @property
    def degree_bound(self) -> int:
        """N such that the top exponent is 2N (ceil for real powers)."""
        return int(math.ceil(self.exponents[-1] / 2))

    @property
    def indices(self) -> tuple[int, ...]:
        if self.is_polynomial:
            return tuple(int(k) // 2 for k in self.exponents)
        return tuple(range(1, len(self.exponents) + 1))

    @property
    def n_min(self) -> float:
        return min(k for k, a in zip(self.exponents, self.coefficients) if a > 0)

    @property
    def n_max(self) -> float:
        return max(k for k, a in zip(self.exponents, self.coefficients) if a > 0)

    @property
    def is_monomial(self) -> bool:
        return sum(a > 0 for a in self.coefficients) == 1

    def term(self, index: int) -> tuple[float, float]:
        """(exponent, coefficient) of the term with the given index."""
        try:
            pos = self.indices.index(index)
        except ValueError:
            if self.is_polynomial and index >= 1:
                return 2.0 * index, 0.0
            raise KeyError(f"no term with index {index}") from None
        return self.exponents[pos], self.coefficients[pos]

    # -- evaluation -----------------------------------------------------------
    def derivatives(self, r):
        """Return ``(P(r), P'(r), P''(r))`` evaluated term by term."""
        r = np.asarray(r, dtype=float)
        p0 = np.zeros_like(r)
        p1 = np.zeros_like(r)
        p2 = np.zeros_like(r)
        for k, a in zip(self.exponents, self.coefficients):
            if a == 0:
                continue
            p0 = p0 + a * r**k
            p1 = p1 + a * k * r ** (k - 1)
            if k == 2:
                p2 = p2 + 2.0 * a
            else:
                p2 = p2 + a * k * (k - 1) * r ** (k - 2)
        return p0, p1, p2

    def dP_over_r(self, r):
        """``P'(r)/r`` with the r -> 0 limit (equal to 2*a_1, the t^2 coefficient)."""
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for k, a in zip(self.exponents, self.coefficients):
            if a == 0:
                continue
            if k == 2:
                out = out + 2.0 * a
            else:
                out = out + a * k * r ** (k - 2)
        return out

    def __call__(self, r):
        return self.derivatives(r)[0]

    # phase protocol on points of R^d
    def value(self, xi):
        xi = np.asarray(xi, dtype=float)
        return self(np.linalg.norm(xi, axis=-1))

    def gradient(self, xi):
        xi = np.asarray(xi, dtype=float)
        r = np.linalg.norm(xi, axis=-1)
        return self.dP_over_r(r)[..., None] * xi

    def hessian(self, xi):
        xi = np.asarray(xi, dtype=float)
        d = xi.shape[-1]
        r = np.linalg.norm(xi, axis=-1)
        _, _, p2 = self.derivatives(r)
        q = self.dP_over_r(r)
        safe = np.where(r > 0, r, 1.0)
        u = xi / safe[..., None]
        uu = u[..., :, None] * u[..., None, :]
        eye = np.eye(d)
        hess = p2[..., None, None] * uu + q[..., None, None] * (eye - uu)
        # at the origin the Hessian is P''(0) * I (both limits coincide)
        return np.where((r > 0)[..., None, None], hess, p2[..., None, None] * eye)

    def scaled(self, factor: float) -> "RadialPhase":
        """The phase ``c * P``."""
        return RadialPhase(self.exponents, tuple(factor * a for a in self.coefficients))

    def describe(self) -> str:
        return " + ".join(f"{a:g}*t^{k:g}" for k, a in zip(self.exponents, self.coefficients) if a > 0)


def eval_radial(P: RadialPhase, r: float) -> tuple[float, float, float]:
    """Exact ``(P(r), P'(r), P''(r))`` for a scalar ``r >= 0``."""
    if not (math.isfinite(r) and r >= 0):
        raise ValueError("r must be finite and nonnegative")
    return tuple(float(v) for v in P.derivatives(r))  # type: ignore[return-value]


def affine_density(P: RadialPhase, xi, d: int | None = None):
    """Affine surface-measure density ``|det D^2 P(|xi|)|^{1/(d+2)}``.

    Uses ``det D^2 P(|xi|) = P''(r) (P'(r)/r)^{d-1}``.  ``xi`` has shape
    ``(..., d)``; for ``d == 1`` a plain scalar/array of abscissae is also
    accepted when ``d=1`` is passed explicitly.
    """
    xi = np.asarray(xi, dtype=float)
    if d is None:
        d = xi.shape[-1]
        r = np.linalg.norm(xi, axis=-1)
    elif d == 1 and (xi.ndim == 0 or xi.shape[-1] != 1):
        r = np.abs(xi)
    else:
        if xi.shape[-1] != d:
            raise ValueError("trailing axis of xi must equal d")
        r = np.linalg.norm(xi, axis=-1)
    if d not in (1, 2):
        raise ValueError("affine_density supports d in {1, 2}")
    _, _, p2 = P.derivatives(r)
    det = p2 * P.dP_over_r(r) ** (d - 1)
    return np.abs(det) ** (1.0 / (d + 2))


@dataclass(frozen=True)
class EllipticPhase:
    """A smooth phase on ``{inner_radius <= |xi - center| <= domain_radius}``.

    ``A`` and ``eps0`` are the nominal ellipticity parameters (derivative bound
    and Hessian eigenvalue band); :func:`ellipticity_diagnose` measures them.
    """

    dim: int
    domain_radius: float
    value_fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    gradient_fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    hessian_fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    inner_radius: float = 0.0
    center: tuple[float, ...] | None = None
    A: float | None = None
    eps0: float | None = None
    name: str = "phase"
    coefficients: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.domain_radius <= 0 or self.inner_radius < 0 or self.inner_radius >= self.domain_radius:
            raise ValueError("need 0 <= inner_radius < domain_radius")
        if self.center is None:
            object.__setattr__(self, "center", (0.0,) * self.dim)

    def value(self, xi):
        return self.value_fn(np.asarray(xi, dtype=float))

    def gradient(self, xi):
        return self.gradient_fn(np.asarray(xi, dtype=float))

    def hessian(self, xi):
        return self.hessian_fn(np.asarray(xi, dtype=float))

    def in_domain(self, xi, tol: float = 1e-12):
        r = np.linalg.norm(np.asarray(xi, dtype=float) - np.asarray(self.center), axis=-1)
        return (r <= self.domain_radius * (1 + tol)) & (r >= self.inner_radius * (1 - tol))

    # -- constructors -------------------------------------------------------
    @classmethod
    def from_radial(cls, P: RadialPhase, dim: int, domain_radius: float = 1.0,
                    inner_radius: float = 0.0, name: str | None = None) -> "EllipticPhase":
        return cls(dim, domain_radius, P.value, P.gradient, P.hessian,
                   inner_radius=inner_radius, name=name or P.describe(),
                   coefficients=P.coefficients)

    @classmethod
    def quadratic(cls, dim: int, center=None, domain_radius: float = 1.0,
                  name: str | None = None) -> "EllipticPhase":
        """``|xi - center|^2`` (default center 0)."""
        c = np.zeros(dim) if center is None else np.asarray(center, dtype=float)

        def value(xi):
            return np.sum((xi - c) ** 2, axis=-1)

        def gradient(xi):
            return 2.0 * (xi - c)

        def hessian(xi):
            return np.broadcast_to(2.0 * np.eye(dim), xi.shape[:-1] + (dim, dim)).copy()

        return cls(dim, domain_radius, value, gradient, hessian, A=2.0 * (domain_radius + np.linalg.norm(c)),
                   eps0=0.5, name=name or f"|xi-{c.tolist()}|^2")

    def rescale(self, k: float, J: float) -> "EllipticPhase":
        """``h(xi) = 2^{-J k} g(2^k xi)`` on the ball ``B(0, 2^{-k} R_g)``."""
        s = 2.0 ** k
        a = 2.0 ** (-J * k)
        g = self

        def value(xi):
            return a * g.value(s * xi)

        def gradient(xi):
            return a * s * g.gradient(s * xi)

        def hessian(xi):
            return a * s * s * g.hessian(s * xi)

        return EllipticPhase(self.dim, self.domain_radius / s, value, gradient, hessian,
                             inner_radius=self.inner_radius / s,
                             center=tuple(np.asarray(self.center) / s),
                             name=f"2^({-J * k:g}) {self.name}(2^{k:g} xi)")

    def scaled(self, factor: float) -> "EllipticPhase":
        """``factor * g`` on the same domain."""
        g = self
        return EllipticPhase(self.dim, self.domain_radius,
                             lambda xi: factor * g.value(xi),
                             lambda xi: factor * g.gradient(xi),
                             lambda xi: factor * g.hessian(xi),
                             inner_radius=self.inner_radius, center=self.center,
                             name=f"{factor:g}*{self.name}")


@dataclass(frozen=True)
class EllipticityReport:
    eps0_est: float
    A_est: float
    passed: bool
    sample_count: int
    reason: str = ""


def _domain_samples(g: EllipticPhase, sample_count: int) -> np.ndarray:
    """Deterministic low-discrepancy samples of the domain (ball or annulus)."""
    d = g.dim
    c = np.asarray(g.center, dtype=float)
    n_extra = 1 if g.inner_radius == 0 else 0
    m = max(sample_count - n_extra, 1)
    u = qmc.Halton(d=d, scramble=False).random(m + 1)[1:]
    r_in, r_out = g.inner_radius, g.domain_radius
    if d == 1:
        # signed radius uniform on [-r_out, -r_in] U [r_in, r_out]
        v = 2.0 * u[:, 0] - 1.0
        pts = (np.sign(v) * (r_in + np.abs(v) * (r_out - r_in)))[:, None]
    elif d == 2:
        rad = np.sqrt(r_in**2 + u[:, 0] * (r_out**2 - r_in**2))
        ang = 2.0 * np.pi * u[:, 1]
        pts = np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=-1)
    else:
        raise ValueError("ellipticity sampling supports d in {1, 2}")
    pts = pts + c
    if n_extra:
        pts = np.vstack([c[None, :], pts])
    return pts[:sample_count]


def ellipticity_diagnose(g: EllipticPhase, sample_count: int = 256) -> EllipticityReport:
    """Measure ``eps0`` and ``A`` on quasi-uniform domain samples.

    ``eps0_est = min_samples min(lambda_min, 1/lambda_max)``; the phase passes
    iff every sampled Hessian is positive definite (so ``eps0_est > 0``).  For
    balls the center is always one of the samples.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    pts = _domain_samples(g, sample_count)
    hess = g.hessian(pts)
    lam = np.linalg.eigvalsh(hess)
    lam_min = lam[:, 0]
    lam_max = lam[:, -1]
    A_est = float(np.max(np.linalg.norm(g.gradient(pts), axis=-1)))
    if np.any(lam_min <= 0):
        worst = pts[int(np.argmin(lam_min))]
        kind = "singular" if np.min(lam_min) == 0 else "indefinite"
        eps = float(max(0.0, np.min(np.minimum(lam_min, 1.0 / np.where(lam_max > 0, lam_max, np.inf)))))
        return EllipticityReport(eps, A_est, False, len(pts),
                                 f"{kind} Hessian at xi={worst.tolist()}")
    eps = float(np.min(np.minimum(lam_min, 1.0 / lam_max)))
    return EllipticityReport(eps, A_est, eps > 0, len(pts))


def rescale_annulus(P: RadialPhase, j: int, k: int, dim: int = 1) -> EllipticPhase:
    """Rescale the part of ``P`` living on ``|xi| ~ 2^{-k}`` inside ``J_j`` to unit scale.

    Returns ``g_k(xi) = 2^{k e_j} P(2^{-k}|xi|) / a_j`` on ``{1/2 <= |xi| <= 1}``
    where ``e_j`` is the exponent of term ``j``.  For polynomials this is
    ``|xi|^{2j} + sum_{i != j} (a_i/a_j) 2^{2(j-i)k} |xi|^{2i}``.  Requires
    ``2^{-k}`` in the monomial interval ``J_j``, which makes every rescaled
    coefficient at most 1.  The rescaled coefficients are exposed as
    ``.coefficients`` on the result.
    """
    from .decomposition import monomial_intervals  # local import: avoids a cycle

    intervals = {J.index: J for J in monomial_intervals(P)}
    if j not in intervals:
        raise ValueError(f"no monomial interval with index {j}")
    t = 2.0 ** (-k)
    if not intervals[j].contains(t):
        raise ValueError(f"2^-k = {t:g} is not in J_{j} = {intervals[j]}")
    e_j, a_j = P.term(j)
    new_coefs = []
    for e_i, a_i in zip(P.exponents, P.coefficients):
        if e_i == e_j:
            new_coefs.append(1.0)
        else:
            new_coefs.append(a_i / a_j * 2.0 ** ((e_j - e_i) * k))
    G = RadialPhase(P.exponents, tuple(new_coefs))
    return EllipticPhase.from_radial(G, dim, domain_radius=1.0, inner_radius=0.5,
                                     name=f"g_{k}[{G.describe()}]")


def read_phase_file(path: str | Path) -> RadialPhase:
    """Parse ``exponent coefficient`` lines (``#`` starts a comment)."""
    exps: list[float] = []
    coefs: list[float] = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'exponent coefficient'")
        exps.append(float(parts[0]))
        coefs.append(float(parts[1]))
    order = np.argsort(exps)
    return RadialPhase(tuple(exps[i] for i in order), tuple(coefs[i] for i in order))
