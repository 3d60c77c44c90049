"""Wave-packet decomposition and time-slab localization.

Packet construction
-------------------
Let ``s = R^{1/2}`` and ``m = 2 pi / (h s)`` (required to be an integer, so
the spatial lattice ``s Z^d`` tiles the grid period ``2 pi / h``).

1. A smooth partition of unity ``sum_T psi((xi - xi_T) s) = 1`` over the
   frequency lattice ``xi_T in s^{-1} Z^d`` splits ``f = sum_T F_T`` with
   ``supp F_T`` inside the cube ``|xi - xi_T|_inf < 1/s``.
2. Each piece is sampled in space: ``G_T(x) = sum_m h^d F_T(xi_m) e^{i x.(xi_m - xi_T)}``
   at the lattice points ``x_k = s k`` of one period.  With a window
   ``w_T(xi) = W((xi - xi_T) s)`` that equals 1 on the cube and vanishes for
   ``|u| >= kappa_s``, the sampling identity
   ``F_T(xi) = (s / 2 pi)^d sum_k G_T(x_k) w_T(xi) e^{-i x_k.(xi - xi_T)}``
   holds exactly on the grid (the aliases of the cube are ``2 pi / s`` away and
   ``kappa_s + sqrt(d) < 2 pi``).
3. ``c_T = (s / 2 pi)^d G_T(x_k) ||w_T||_2`` and the initial profile of the packet is
   ``w_T(xi) e^{-i x_k.(xi - xi_T)} / ||w_T||_2`` (unit L^2 norm).  The packet
   field is the extension of its profile, so summing packet fields is the
   extension of the summed profiles.

The window transition is C-infinity, so every packet decays faster than any
power ``(1 + |x - x_T + t v_T| / s)^{-M}`` away from its tube.  The decay order
``M`` sets the retention radius: packets whose tube stays farther than
``keep_radius * (M / 4) * R`` from the region are dropped (their contribution
to the region is a tail term), as are packets with ``|c_T| < prune * max |c_T|``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
import scipy.fft as sfft

from .extension import (Field, FrequencyGrid, SpacetimeGrid, TwoScaleSetup, extend, kappa,
                        spatial_forward, SupportError)

__all__ = [
    "smooth_step",
    "bump",
    "plateau_cutoff",
    "Tube",
    "PacketRegion",
    "PacketFamily",
    "WavePacket",
    "PacketReport",
    "TimeSlab",
    "decompose",
    "summed_profile",
    "reconstruct",
    "verify_packet_properties",
    "time_slab_pieces",
    "almost_orthogonality",
]


# ---------------------------------------------------------------------------
# smooth cutoffs
# ---------------------------------------------------------------------------

def smooth_step(v):
    """C-infinity step: 0 for v <= 0, 1 for v >= 1, ``sigma(v) + sigma(1-v) = 1``."""
    v = np.asarray(v, dtype=float)
    out = np.zeros_like(v)
    out[v >= 1] = 1.0
    mid = (v > 0) & (v < 1)
    a = np.exp(-1.0 / v[mid])
    b = np.exp(-1.0 / (1.0 - v[mid]))
    out[mid] = a / (a + b)
    return out


def _psi1(u):
    """Partition-of-unity profile on the line: ``sum_k psi1(u - k) = 1``, support |u| < 1."""
    return smooth_step(1.0 - np.abs(u))


def bump(u):
    """``exp(1 - 1/(1 - |u|^2))`` on ``|u| < 1``, zero elsewhere (peak value 1)."""
    u = np.asarray(u, dtype=float)
    r2 = np.sum(u * u, axis=-1) if u.ndim and u.shape[-1:] in ((1,), (2,)) else u * u
    out = np.zeros_like(r2)
    inside = r2 < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
    return out


def plateau_cutoff(u):
    """Smooth radial cutoff equal to 1 on ``|u| <= 2`` and 0 on ``|u| >= 3``."""
    return smooth_step(3.0 - np.abs(np.asarray(u, dtype=float)))


# ---------------------------------------------------------------------------
# tubes and packets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Tube:
    """``{(t, x) : |x - x_T + t v_T| < R^{1/2}}`` with ``v_T = grad h(xi_T)``."""

    x: tuple[float, ...]
    xi: tuple[float, ...]
    v: tuple[float, ...]
    R: float
    side: int = 1

    @property
    def radius(self) -> float:
        return math.sqrt(self.R)

    def axis(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.asarray(self.x) - t[..., None] * np.asarray(self.v)

    def offset(self, t, X) -> np.ndarray:
        """``x - x_T + t v_T`` for spatial nodes ``X`` (shape ``(..., d)``)."""
        return np.asarray(X) - np.asarray(self.x) + float(t) * np.asarray(self.v)


@dataclass(frozen=True)
class PacketRegion:
    """Spacetime region ``t0 <= t <= t1, |x| <= radius`` used for packet selection."""

    t0: float
    t1: float
    radius: float

    @classmethod
    def q_r(cls, setup: TwoScaleSetup, R: float) -> "PacketRegion":
        t0, t1 = setup.q_r_times(R)
        return cls(t0, t1, R)

    def tube_distance(self, x, v) -> np.ndarray:
        """Distance from tube axes ``x - t v`` (rows) to the region, over ``t in [t0, t1]``."""
        x = np.atleast_2d(x)
        v = np.atleast_2d(v)
        vv = np.sum(v * v, axis=-1)
        tstar = np.where(vv > 0, np.sum(x * v, axis=-1) / np.where(vv > 0, vv, 1.0), 0.0)
        tstar = np.clip(tstar, self.t0, self.t1)
        closest = np.linalg.norm(x - tstar[:, None] * v, axis=-1)
        return np.maximum(0.0, closest - self.radius)


_FAMILY_COUNTER = itertools.count(1)


@dataclass(frozen=True)
class PacketFamily:
    """Shared data of one :func:`decompose` call (packets keep a reference)."""

    uid: int
    phase: object = field(repr=False)
    fgrid: FrequencyGrid = field(repr=False)
    R: float
    m_lat: int
    kappa_s: float
    M: int
    f_norm: float
    side: int
    region: Optional[PacketRegion]

    @property
    def s(self) -> float:
        return math.sqrt(self.R)

    @property
    def d(self) -> int:
        return self.fgrid.d

    def window(self, xi_T, widen: float = 1.0) -> np.ndarray:
        u = (self.fgrid.nodes() - np.asarray(xi_T)) * self.s / widen
        r = np.linalg.norm(u, axis=-1)
        rd = math.sqrt(self.d)
        return smooth_step((self.kappa_s - r) / (self.kappa_s - rd))

    def window_norm(self, w: np.ndarray) -> float:
        return float(np.sqrt(np.sum(np.abs(w) ** 2) * self.fgrid.cell))


@dataclass(frozen=True)
class WavePacket:
    tube: Tube
    coefficient: complex
    family: PacketFamily = field(repr=False)
    k: tuple[int, ...] = ()
    widen: float = 1.0

    @property
    def source(self) -> int:
        return self.family.uid

    def profile(self) -> FrequencyGrid:
        """Unit-norm initial profile ``w_T e^{-i x_T.(xi - xi_T)} / ||w_T||``."""
        fam = self.family
        w = fam.window(self.tube.xi, self.widen)
        nodes = fam.fgrid.nodes()
        ph = np.exp(-1j * ((nodes - np.asarray(self.tube.xi)) @ np.asarray(self.tube.x)))
        return fam.fgrid.like(w * ph / fam.window_norm(w))

    def field(self, grid: SpacetimeGrid) -> Field:
        """The packet ``phi_T = E(profile)`` (without the coefficient)."""
        return extend(self.family.phase, self.profile(), grid, check=False)

    def widened(self, factor: float) -> "WavePacket":
        """A corrupted copy whose frequency window is ``factor`` times wider."""
        return replace(self, widen=self.widen * factor)

    def with_coefficient(self, c: complex) -> "WavePacket":
        return replace(self, coefficient=complex(c))


def _lattice_k(m_lat: int) -> np.ndarray:
    """Centered lattice indices ``-m/2 .. m/2 - 1`` (as used for ``x_k = s k``)."""
    return np.arange(m_lat) - m_lat // 2


def _fold(arr: np.ndarray, m: int) -> np.ndarray:
    """Sum ``arr`` over index residues mod ``m`` on every axis."""
    d = arr.ndim
    n = arr.shape[0]
    q = -(-n // m)
    padded = np.zeros((q * m,) * d, dtype=arr.dtype)
    padded[tuple(slice(0, n) for _ in range(d))] = arr
    shape = []
    for _ in range(d):
        shape += [q, m]
    return padded.reshape(shape).sum(axis=tuple(range(0, 2 * d, 2)))


def _unfold(arr: np.ndarray, n: int) -> np.ndarray:
    """Periodic extension of an ``m^d`` array to ``n^d`` nodes (index mod m)."""
    m = arr.shape[0]
    idx = np.arange(n) % m
    return arr[np.ix_(*([idx] * arr.ndim))]


def _shift_phase(family: PacketFamily, xi_T, ks: np.ndarray) -> np.ndarray:
    """``e^{i s k.(a - xi_T)}`` for lattice multi-indices ``ks`` (shape ``(..., d)``)."""
    a = np.asarray(family.fgrid.lower)
    return np.exp(1j * family.s * (ks @ (a - np.asarray(xi_T))))


def _all_k(m_lat: int, d: int) -> np.ndarray:
    k1 = _lattice_k(m_lat)
    return np.stack(np.meshgrid(*([k1] * d), indexing="ij"), axis=-1)


def _frequency_centres(f: FrequencyGrid, s: float) -> list[tuple[int, ...]]:
    pts = f.support_nodes() * s
    if len(pts) == 0:
        return []
    base = np.floor(pts).astype(np.int64)
    cands = set()
    for off in itertools.product((0, 1), repeat=f.d):
        for row in np.unique(base + np.asarray(off), axis=0):
            cands.add(tuple(int(v) for v in row))
    return sorted(cands)


def decompose(f: FrequencyGrid, phase, R: float, region: PacketRegion | None = None, side: int = 1,
              M: int = 4, kappa_s: float = 2.0, keep_radius: float = 1.0, prune: float = 1e-10,
              max_packets: int = 100_000) -> list[WavePacket]:
    """Wave-packet decomposition of ``f`` at scale ``R`` for the given phase.

    ``region`` restricts the output to tubes within ``(M/4) * keep_radius * R``
    of it (``None`` keeps every lattice point
    of the period).  See the module docstring for the construction.
    """
    if R < 4:
        raise ValueError("R must be at least 4")
    d = f.d
    s = math.sqrt(R)
    if not (kappa_s > math.sqrt(d) and kappa_s + math.sqrt(d) < 2 * math.pi):
        raise ValueError("kappa_s must satisfy sqrt(d) < kappa_s < 2 pi - sqrt(d)")
    m_real = 2 * math.pi / (f.h * s)
    m_lat = int(round(m_real))
    if abs(m_real - m_lat) > 1e-6 * m_real:
        raise ValueError(f"grid incompatible with R: 2 pi/(h R^(1/2)) = {m_real:.6g} must be an integer")
    if 1.0 / s < 2 * f.h:
        raise ValueError("R too large for the frequency spacing: cubes of side R^(-1/2) are unresolved")
    if kappa_s / s > f.half_width:
        raise ValueError("R too small: packet windows exceed the frequency box")
    f_norm = f.l2_norm()
    family = PacketFamily(next(_FAMILY_COUNTER), phase, f.zeros(), float(R), m_lat, float(kappa_s),
                          int(M), f_norm, side, region)
    if f_norm == 0:
        return []
    nodes = f.nodes()
    ks = _all_k(m_lat, d)
    xs = ks * s
    groups = []
    for lat in _frequency_centres(f, s):
        xi_T = np.asarray(lat, dtype=float) / s
        psi = np.ones(f.samples.shape)
        for i in range(d):
            psi = psi * _psi1((nodes[..., i] - xi_T[i]) * s)
        F_T = psi * f.samples
        if not np.any(F_T):
            continue
        G = sfft.ifftn(_fold(F_T, m_lat)) * (m_lat**d) * f.cell   # indices 0..m-1 <-> k mod m
        G = G[np.ix_(*([_lattice_k(m_lat) % m_lat] * d))]
        G = G * _shift_phase(family, xi_T, ks)
        w = family.window(xi_T)
        wn = family.window_norm(w)
        c = (s / (2 * math.pi)) ** d * G * wn
        v = np.asarray(phase.gradient(xi_T[None, :]), dtype=float)[0]
        groups.append((xi_T, v, c))
    if not groups:
        return []
    cmax = max(np.max(np.abs(c)) for _, _, c in groups)
    packets: list[WavePacket] = []
    for xi_T, v, c in groups:
        keep = np.abs(c) >= prune * cmax
        if region is not None:
            dist = region.tube_distance(xs.reshape(-1, d), np.broadcast_to(v, (xs.reshape(-1, d).shape[0], d)))
            keep &= (dist <= keep_radius * (M / 4.0) * R).reshape(keep.shape)
        for idx in zip(*np.nonzero(keep)):
            k = tuple(int(v_) for v_ in ks[idx])
            tube = Tube(tuple(float(x) for x in xs[idx]), tuple(float(a) for a in xi_T),
                        tuple(float(a) for a in v), float(R), side)
            packets.append(WavePacket(tube, complex(c[idx]), family, k))
            if len(packets) > max_packets:
                raise MemoryError(f"more than {max_packets} packets; raise max_packets or shrink the grid")
    return packets


def _single_family(packets: Sequence[WavePacket]) -> PacketFamily | None:
    fams = {p.family.uid for p in packets}
    if len(fams) > 1:
        raise ValueError("packets come from different decompose calls (mixed provenance)")
    return packets[0].family if packets else None


def summed_profile(packets: Sequence[WavePacket], coefficients=None, family: PacketFamily | None = None) -> FrequencyGrid:
    """``sum_T c_T profile_T`` computed group-wise by one FFT per frequency centre.

    ``coefficients`` overrides the packets' own coefficients (same order).
    Widened (corrupted) packets are summed explicitly.
    """
    fam = _single_family(packets) or family
    if fam is None:
        raise ValueError("empty packet list needs an explicit family")
    coefs = np.array([p.coefficient for p in packets], dtype=complex) if coefficients is None \
        else np.asarray(coefficients, dtype=complex)
    d, m = fam.d, fam.m_lat
    total = np.zeros(fam.fgrid.samples.shape, dtype=complex)
    groups: dict[tuple[float, ...], list[int]] = {}
    for i, p in enumerate(packets):
        if p.widen != 1.0:
            total += coefs[i] * p.profile().samples
            continue
        groups.setdefault(p.tube.xi, []).append(i)
    for xi_T, members in groups.items():
        lat = np.zeros((m,) * d, dtype=complex)
        kk = np.array([packets[i].k for i in members])
        ctil = coefs[members] * np.conj(_shift_phase(fam, xi_T, kk))
        np.add.at(lat, tuple((kk % m).T), ctil)
        S = _unfold(sfft.fftn(lat), fam.fgrid.n)
        w = fam.window(xi_T)
        total += w / fam.window_norm(w) * S
    return fam.fgrid.like(total)


def reconstruct(packets: Sequence[WavePacket], grid: SpacetimeGrid, region=None) -> Field:
    """``sum_T c_T phi_T`` on ``grid`` (region masking is left to the norms)."""
    if len(packets) == 0:
        return Field(grid, np.zeros(grid.shape, dtype=complex))
    fam = _single_family(packets)
    return extend(fam.phase, summed_profile(packets), grid, check=False)


# ---------------------------------------------------------------------------
# property checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PacketReport:
    n_packets: int
    ell2: float
    support_violation: float
    C_decay: float
    ortho_constant: float
    ortho_min: float

    CSV_HEADER = "n_packets,ell2,support_violation,C_decay,ortho_constant,ortho_min"

    def csv_row(self) -> str:
        return (f"{self.n_packets},{self.ell2:.17g},{self.support_violation:.17g},"
                f"{self.C_decay:.17g},{self.ortho_constant:.17g},{self.ortho_min:.17g}")


def support_violation(packet: WavePacket) -> float:
    """Max of ``|profile|`` outside ``{|xi - xi_T| <= kappa_s R^{-1/2}}`` (0 when exact)."""
    prof = packet.profile()
    r = np.linalg.norm(prof.nodes() - np.asarray(packet.tube.xi), axis=-1)
    outside = r > packet.family.kappa_s / packet.family.s * (1 + 1e-12)
    return float(np.max(np.abs(prof.samples[outside]), initial=0.0))


def verify_packet_properties(packets: Sequence[WavePacket], grid: SpacetimeGrid, M: int | None = None,
                             n_vectors: int = 100, n_times: int = 5, n_decay: int = 16,
                             seed: int = 0) -> PacketReport:
    """Measure the four packet properties on ``grid``.

    * ``ell2``: ``||(c_T)||_2 / ||f||_2``;
    * ``support_violation``: largest profile value outside its ball (one
      check per distinct frequency centre and widening);
    * ``C_decay``: smallest C with ``|phi_T| <= C R^{-d/4} (1 + |x - x_T + t v_T|/R^{1/2})^{-M}``
      on the grid (region nodes only when the grid has a region), over the
      ``n_decay`` largest packets; distances are periodic (minimum image);
    * ``ortho_constant``: max over ``n_vectors`` random complex vectors and
      ``n_times`` time nodes of ``||sum c'_T phi_T(t)||_{L^2_x} / (kappa ||c'||)``.
    """
    fam = _single_family(packets)
    if fam is None:
        return PacketReport(0, 0.0, 0.0, 0.0, 0.0, 0.0)
    M = fam.M if M is None else M
    d, s, R = fam.d, fam.s, fam.R
    coefs = np.array([p.coefficient for p in packets])
    ell2 = float(np.linalg.norm(coefs) / fam.f_norm) if fam.f_norm > 0 else 0.0

    seen = {}
    for p in packets:
        key = (p.tube.xi, p.widen)
        if key not in seen:
            seen[key] = support_violation(p)
    sv = max(seen.values())

    order = np.argsort(-np.abs(coefs))[:n_decay]
    X = grid.x_nodes()
    L = grid.period
    C_decay = 0.0
    for i in order:
        p = packets[int(i)]
        F = p.field(grid).samples
        for it, t in enumerate(grid.times):
            off = p.tube.offset(t, X)
            off = (off + L / 2) % L - L / 2
            env = R ** (-d / 4) * (1 + np.linalg.norm(off, axis=-1) / s) ** (-M)
            ratio = np.abs(F[it]) / env
            if grid.region is not None:
                ratio = ratio[grid.slice_mask(it, X)]
            C_decay = max(C_decay, float(np.max(ratio, initial=0.0)))

    rng = np.random.default_rng(seed)
    tsel = grid.times[np.unique(np.linspace(0, len(grid.times) - 1, n_times).round().astype(int))]
    sub = grid.with_times(tsel).with_region(None, "full")
    kap = kappa(d)
    ratios = []
    for _ in range(n_vectors):
        cp = rng.standard_normal(len(packets)) + 1j * rng.standard_normal(len(packets))
        prof = summed_profile(packets, cp)
        Fv = extend(fam.phase, prof, sub, check=False).samples
        l2 = np.sqrt(np.sum(np.abs(Fv) ** 2, axis=tuple(range(1, d + 1))) * sub.dx**d)
        ratios.extend(l2 / (kap * np.linalg.norm(cp)))
    return PacketReport(len(packets), ell2, sv, C_decay, float(max(ratios)), float(min(ratios)))


# ---------------------------------------------------------------------------
# time slabs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TimeSlab:
    """Slab ``Q_j' = {Rj <= t <= R(j+1)} cap Q_R`` and its localized piece ``f^{(j)}``."""

    j: int
    t_lo: float
    t_hi: float
    R: float
    piece: FrequencyGrid = field(repr=False)


def slab_indices(setup: TwoScaleSetup, R: float) -> list[tuple[int, float, float]]:
    """``(j, t_lo, t_hi)`` for every slab meeting ``Q_R`` in positive measure."""
    t0, t1 = setup.q_r_times(R)
    out = []
    for j in range(int(math.floor(t0 / R)), int(math.ceil(t1 / R))):
        lo, hi = max(R * j, t0), min(R * (j + 1), t1)
        if hi > lo:
            out.append((j, lo, hi))
    return out


def time_slab_pieces(f: FrequencyGrid, setup: TwoScaleSetup, R: float, C: float = 8.0, pad: int = 1,
                     budget: int = 4096) -> list[TimeSlab]:
    """Pieces ``f^{(j)} = e^{-iRj h_2} phi(xi/c0) [phi(x/(CR)) E_2 f(Rj, x)]^``.

    ``phi`` is :func:`plateau_cutoff` (1 on ``|u| <= 2``, 0 on ``|u| >= 3``);
    the transform ``^`` is the exact inverse of the extension at ``t = 0`` on the
    grid.  Requires the spatial period to exceed ``6 C R`` (so the spatial
    cutoff is resolved) and the frequency box to contain ``B(0, 3 c0)``.
    """
    if R < 4:
        raise ValueError("R must be at least 4")
    c0 = setup.c0
    pts = f.support_nodes()
    if len(pts) and np.max(np.linalg.norm(pts, axis=-1)) >= c0:
        raise SupportError("f must be supported in {|xi| < c0}")
    lo, hi = np.asarray(f.lower), np.asarray(f.lower) + (f.n - 1) * f.h
    if np.any(lo > -3 * c0) or np.any(hi < 3 * c0):
        raise ValueError("frequency box must contain B(0, 3 c0)")
    slabs = slab_indices(setup, R)
    if len(slabs) > budget:
        raise ValueError(f"{len(slabs)} slabs exceed the budget {budget}")
    grid0 = SpacetimeGrid.conjugate(f, [0.0], pad=pad)
    if grid0.period <= 6 * C * R:
        raise ValueError(f"spatial period {grid0.period:.4g} must exceed 6CR = {6 * C * R:.4g}")
    h2 = setup.h(2)
    X = grid0.x_nodes()
    xcut = plateau_cutoff(np.linalg.norm(X, axis=-1) / (C * R))
    nodes = f.nodes()
    fcut = plateau_cutoff(np.linalg.norm(nodes, axis=-1) / c0)
    phi_vals = np.asarray(h2.value(nodes), dtype=float)
    out = []
    for j, t_lo, t_hi in slabs:
        E = extend(h2, f, grid0.with_times([R * j])).samples[0]
        g = spatial_forward(xcut * E, f, grid0)
        piece = np.exp(-1j * R * j * phi_vals) * fcut * g
        out.append(TimeSlab(j, t_lo, t_hi, float(R), f.like(piece)))
    return out


def almost_orthogonality(slabs: Sequence[TimeSlab], f: FrequencyGrid) -> float:
    """``sum_j ||f^{(j)}||_2^2 / ||f||_2^2``."""
    nf = f.l2_norm()
    if nf == 0:
        raise ValueError("f = 0")
    return float(sum(sl.piece.l2_norm() ** 2 for sl in slabs) / nf**2)
