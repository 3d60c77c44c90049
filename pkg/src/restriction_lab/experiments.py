"""Headline experiments: each returns an :class:`ExperimentResult` (CSV rows + summary).

Every spacetime norm is a truncated proxy: its region is named in the CSV
(``region`` column or header).  Global inequalities (over all of ``R^{1+d}``)
are only approximated by the finite time windows listed in each docstring.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig
from .decomposition import (INF, admissible_pair, as_exact, conjugate, off_scaling_exponents,
                            unweighted_range)
from .extension import (FrequencyGrid, SpacetimeGrid, TwoScaleSetup, iter_extend, kappa,
                        two_scale_operators, extend)
from .hypersurface import RadialPhase, read_phase_file
from .norms import decay_fit, lq_spacetime, lq_streaming, ratio_functional
from .tubes import count_experiment, growth_ratio
from .wavepacket import (PacketRegion, bump, decompose, reconstruct, smooth_step,
                         verify_packet_properties)

__all__ = [
    "ExperimentResult",
    "tapered_gaussian",
    "bump_suite",
    "bilinear_ratio",
    "run_decay_sweep",
    "run_norm_ratio",
    "run_local_estimate",
    "run_slab_l2",
    "run_tube_count",
    "run_wavepacket_verify",
    "run_exponents",
    "EXPERIMENTS",
]


@dataclass
class ExperimentResult:
    name: str
    columns: list[str]
    rows: list[list]
    summary: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    plot: str | None = None

    def csv_text(self, cfg: ExperimentConfig | None = None) -> str:
        """CSV with a ``#`` header carrying the version, the full config and notes."""
        lines = [f"# restriction-lab {__version__} experiment={self.name}"]
        if cfg is not None:
            lines += [f"# {ln}" for ln in cfg.to_ini().splitlines()]
        lines += [f"# note: {n}" for n in self.notes]
        lines += [f"# summary: {k} = {_fmt(v)}" for k, v in self.summary.items()]
        lines.append(",".join(self.columns))
        lines += [",".join(_fmt(v) for v in row) for row in self.rows]
        return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    if isinstance(v, Fraction):
        return str(v)
    return str(v)


def _pick(cfg_value, default):
    return default if cfg_value is None else cfg_value


# ---------------------------------------------------------------------------
# data families
# ---------------------------------------------------------------------------

def tapered_gaussian(sigma: float, radius: float, center=0.0) -> Callable[[np.ndarray], np.ndarray]:
    """``exp(-|xi - c|^2 / (2 sigma^2))`` times a smooth cutoff vanishing for ``|xi - c| >= radius``."""

    def fn(xi):
        r = np.linalg.norm(np.asarray(xi) - center, axis=-1)
        return np.exp(-(r**2) / (2 * sigma**2)) * smooth_step((radius - r) / (radius / 4))

    return fn


def bump_suite(fg: FrequencyGrid, R: float,
               centres: Sequence[tuple[float, float, float]] = ((0.0, 0.0, 2.0), (1 / 16, 304.0, 2.0),
                                                               (-1 / 16, -416.0, 2.0))) -> FrequencyGrid:
    """Standard bump family: ``sum bump((xi - xi0) s / w) e^{-i (xi - xi0) . x0}`` (unit L^2 norm).

    Each entry is ``(xi0, x0, w)`` with ``xi0`` and ``x0`` placed on the first axis.
    """
    s = math.sqrt(R)
    nodes = fg.nodes()
    total = np.zeros(fg.samples.shape, dtype=complex)
    for xi0, x0, w in centres:
        c = np.zeros(fg.d)
        c[0] = xi0
        xv = np.zeros(fg.d)
        xv[0] = x0
        u = (nodes - c) * s / w
        total += bump(u) * np.exp(-1j * ((nodes - c) @ xv))
    f = fg.like(total)
    return f * (1.0 / f.l2_norm())


def _focused(fg: FrequencyGrid, fn, phase, tc: float) -> FrequencyGrid:
    """``fn(xi) e^{-i tc phase(xi)}``: its extension is ``E fn`` shifted to time ``tc``."""
    nodes = fg.nodes()
    return fg.like(fn(nodes) * np.exp(-1j * tc * np.asarray(phase.value(nodes), dtype=float)))


def _trapezoid(t: np.ndarray) -> np.ndarray:
    w = np.zeros_like(t)
    dt = np.diff(t)
    w[:-1] += dt / 2
    w[1:] += dt / 2
    return w


# ---------------------------------------------------------------------------
# bilinear decay sweep
# ---------------------------------------------------------------------------

def _bilinear_normalizer(setup: TwoScaleSetup, q: float) -> float:
    return 2.0 ** (-(setup.k1 + setup.k2) * (setup.J - 2) / q)


def bilinear_ratio(setup: TwoScaleSetup, f1: FrequencyGrid, f2: FrequencyGrid, p: float, q: float,
                   grid: SpacetimeGrid) -> float:
    """Full-field path: ``||(2^{-k1(J-2)/q} E1 f1)(2^{-k2(J-2)/q} E2 f2)||_{q/2} / (||f1||_p ||f2||_p)``."""
    _, _, prod = two_scale_operators(setup, f1, f2, grid)
    val = lq_spacetime(prod, q / 2).value
    return val * _bilinear_normalizer(setup, q) / (f1.lp_norm(p) * f2.lp_norm(p))


def _bilinear_streaming(setup: TwoScaleSetup, f1, f2, p: float, q: float, grid: SpacetimeGrid) -> float:
    """Slice-streaming path for the same quantity (constant memory)."""
    it1 = iter_extend(setup.h(1), f1, grid)
    it2 = iter_extend(setup.h(2), f2, grid)
    prods = ((i, t, a * b) for (i, t, a), (_, _, b) in zip(it1, it2))
    val = lq_streaming(prods, grid, q / 2, use_region=False).value
    return val * _bilinear_normalizer(setup, q) / (f1.lp_norm(p) * f2.lp_norm(p))


def decay_sweep_point(cfg: ExperimentConfig, k1: int):
    """Setup, data and grid of one sweep point (shared with the cross-check)."""
    d = cfg.dim
    n = _pick(cfg.n, 4096 if d == 1 else 256)
    hw = _pick(cfg.half_width, 1.12 * cfg.c0)
    sigma = cfg.c0 / 4
    fg = FrequencyGrid.box(d, n, hw)
    setup = TwoScaleSetup.paraboloid_pair(d, k1, cfg.k2, cfg.J, cfg.c0)
    F = tapered_gaussian(sigma, cfg.c0)
    f1 = fg.sample(lambda x: F(2.0**k1 * x))
    f2 = fg.sample(lambda x: F(2.0**cfg.k2 * x))
    T = _pick(cfg.t_max, 6.0) * 2.0**k1 / sigma
    dt = _pick(cfg.dt, 2.0)
    times = np.arange(-T, T + dt / 2, dt)
    grid = SpacetimeGrid.conjugate(fg, times, _pick(cfg.pad, 1), region_id=f"t in [-{T:g},{T:g}] x full period")
    return setup, f1, f2, grid


def run_decay_sweep(cfg: ExperimentConfig) -> ExperimentResult:
    """Normalized bilinear quantity for ``k1 = k1_min..k1_max`` and fitted decay ``delta``.

    Data ``f_j(xi) = F(2^{k_j} xi)`` with ``F`` a tapered Gaussian of width ``c0/4``;
    the ``L^{q/2}`` norm is taken over ``|t| <= t_max 2^{k1} / sigma`` (``t_max`` default 6)
    and the whole spatial period.
    """
    p, q = cfg.p_float, cfg.q_float
    rows, ks, vals = [], [], []
    for k1 in range(cfg.k1_min, cfg.k1_max + 1):
        if k1 < cfg.k2:
            continue
        setup, f1, f2, grid = decay_sweep_point(cfg, k1)
        v = _bilinear_streaming(setup, f1, f2, p, q, grid)
        ks.append(k1 - cfg.k2)
        vals.append(v)
        rows.append([k1, cfg.k2, k1 - cfg.k2, v, grid.region_id])
    res = ExperimentResult("decay-sweep", ["k1", "k2", "separation", "value", "region"], rows)
    res.summary["max_at_min_separation"] = bool(vals and int(np.argmax(vals)) == int(np.argmin(ks)))
    if len(vals) >= 3:
        fit = decay_fit(ks, vals)
        res.summary.update(delta_hat=-fit.slope, residual=fit.residual)
    else:
        res.notes.append("fewer than 3 sweep points: no fit")
    res.plot = _gnuplot("decay-sweep", "separation |k1-k2|", "value", 3, 4, logy=True)
    return res


# ---------------------------------------------------------------------------
# norm ratio
# ---------------------------------------------------------------------------

def _annulus_bump(k: int):
    lo, hi = 2.0 ** (-k - 1), 2.0**-k
    c, w = (lo + hi) / 2, (hi - lo) / 2
    return lambda x: bump(((np.linalg.norm(x, axis=-1) - c) / w)[..., None])


def norm_ratio_family(cfg: ExperimentConfig, fg: FrequencyGrid) -> list[tuple[str, FrequencyGrid]]:
    fam = []
    ann = []
    for k in range(cfg.k1_min, cfg.k1_max + 1):
        f = fg.sample(_annulus_bump(k))
        ann.append(f)
        fam.append((f"annulus_{k}", f))
    if len(ann) > 1:
        fam.append((f"union_{cfg.k1_min}_{cfg.k1_max}", fg.like(sum(f.samples for f in ann))))
    for m in range(0, 3):
        w = 0.25 * 2.0**-m
        fam.append((f"gaussian_{m}", fg.sample(tapered_gaussian(w, min(4 * w, fg.half_width * 0.9)))))
    # a single packet-like datum: narrow bump at |xi| ~ 1/2 translated in space
    c = np.zeros(fg.d)
    c[0] = 0.5
    fam.append(("packet", fg.sample(lambda x: bump((x - c) * 16.0) * np.exp(-1j * 64.0 * x[..., 0]))))
    return fam


def run_norm_ratio(cfg: ExperimentConfig) -> ExperimentResult:
    """``||Lambda^{1/p'} E_P f||_{L^q} / ||f||_p`` over annulus bumps, their union and Gaussians.

    The numerator is truncated to ``t in [0, t_max]`` (geometric time nodes with
    trapezoid weights) and the whole spatial period.
    """
    p, q = cfg.p_exact, cfg.q_exact
    rep = admissible_pair(p, q, cfg.dim, "extension")
    if not rep:
        raise ConfigError(f"(p, q) = ({p}, {q}) is not extension-admissible in d = {cfg.dim}: "
                          f"scaling line q = {rep.q_line} (residual {rep.residual}), "
                          f"threshold {rep.threshold} (margin {rep.margin})")
    P = read_phase_file(cfg.phase) if cfg.phase else RadialPhase.polynomial([1.0, 1.0])
    d = cfg.dim
    n = _pick(cfg.n, 32768 if d == 1 else 256)
    fg = FrequencyGrid.box(d, n, _pick(cfg.half_width, 1.0))
    t_max = _pick(cfg.t_max, 8192.0 if d == 1 else 64.0)
    nt = _pick(cfg.nt, 400 if d == 1 else 64)
    tt = np.concatenate([[0.0], np.geomspace(1.0, t_max, nt)])
    grid = SpacetimeGrid.conjugate(fg, tt, _pick(cfg.pad, 2), region_id=f"t in [0,{t_max:g}] x full period",
                                   time_weights=_trapezoid(tt))
    rows = []
    vals = {}
    for name, f in norm_ratio_family(cfg, fg):
        r = ratio_functional(P, f, float(p), float(q), grid)
        vals[name] = r
        rows.append([name, r, grid.region_id])
    res = ExperimentResult("norm-ratio", ["family", "ratio", "region"], rows)
    v = np.array(list(vals.values()))
    res.summary["max_over_min"] = float(v.max() / v.min())
    annular = [r for k, r in vals.items() if k.startswith(("annulus", "union"))]
    if annular:
        res.summary["annuli_max_over_min"] = float(max(annular) / min(annular))
    res.notes.append(f"phase {P.describe()}; (p,q)=({p},{q}) extension-admissible")
    return res


# ---------------------------------------------------------------------------
# localized estimates
# ---------------------------------------------------------------------------

def local_data(cfg: ExperimentConfig, setup: TwoScaleSetup, fg: FrequencyGrid, R: float):
    """Unit-norm tapered Gaussians focused at ``t = 3/4 H R``; width ``(c0/2)(16/R)^{1/2}``."""
    sigma = 0.5 * cfg.c0 * math.sqrt(16.0 / R)
    tc = 0.75 * setup.q_r_times(R)[1]
    out = []
    for j in (1, 2):
        F = tapered_gaussian(sigma * 2.0 ** -setup.k(j), setup.radius(j))
        f = _focused(fg, F, setup.h(j), tc)
        out.append(f * (1.0 / f.l2_norm()))
    return tuple(out)


def _q_r_grid(cfg, setup, fg, R, nt_default):
    t0, t1 = setup.q_r_times(R)
    nt = _pick(cfg.nt, nt_default)
    times = np.linspace(t0, t1, nt) if cfg.dt is None else np.arange(t0, t1 + cfg.dt / 2, cfg.dt)
    return SpacetimeGrid.conjugate(fg, times, _pick(cfg.pad, 1), region=setup.q_r_region(R), region_id="Q_R")


def run_local_estimate(cfg: ExperimentConfig, data=None) -> ExperimentResult:
    """``||E1 f1 E2 f2||_{L^{(d+3)/(d+1)}(Q_R)} / (2^{k1(J-2)(d-1)/(2(d+3))} ||f1|| ||f2||)`` vs ``R``.

    ``data(cfg, setup, fgrid, R) -> (f1, f2)`` overrides :func:`local_data`.
    """
    d = cfg.dim
    k1 = _pick(cfg.k1, 0)
    setup = TwoScaleSetup.paraboloid_pair(d, k1, cfg.k2, cfg.J, cfg.c0)
    Rs = _pick(cfg.R, (16.0, 32.0, 64.0))
    fg = FrequencyGrid.box(d, _pick(cfg.n, 4096 if d == 1 else 256), _pick(cfg.half_width, 1.12 * cfg.c0))
    qf = Fraction(d + 3, d + 1)
    norm = 2.0 ** (k1 * (cfg.J - 2) * (d - 1) / (2 * (d + 3)))
    rows, vals = [], []
    for R in Rs:
        f1, f2 = (data or local_data)(cfg, setup, fg, R)
        grid = _q_r_grid(cfg, setup, fg, R, 65)
        it = zip(iter_extend(setup.h(1), f1, grid), iter_extend(setup.h(2), f2, grid))
        rep = lq_streaming(((i, t, a * b) for (i, t, a), (_, _, b) in it), grid, float(qf))
        n1, n2 = f1.l2_norm(), f2.l2_norm()
        v = rep.value / (norm * n1 * n2) if n1 * n2 > 0 else 0.0
        vals.append(v)
        rows.append([R, v, rep.region])
    res = ExperimentResult("local-estimate", ["R", "value", "region"], rows)
    res.summary["q"] = qf
    res.summary["trivial_exponent"] = Fraction(d * d - 1, 2 * (d + 3)) + Fraction(1, 2)
    if len(vals) >= 3 and all(v > 0 for v in vals):
        fit = decay_fit(np.log2(Rs), vals)
        res.summary.update(alpha_hat=fit.slope, residual=fit.residual)
    else:
        res.notes.append("fit skipped (fewer than 3 points or zero values)")
    res.plot = _gnuplot("local-estimate", "R", "value", 1, 2, logy=True, logx=True)
    return res


def run_slab_l2(cfg: ExperimentConfig, data=None) -> ExperimentResult:
    """``||E2 f2||_{L^2(Q_R)} / R^{1/2}`` for unit ``f2`` focused in ``Q_R`` (default ``k1 = 2``)."""
    d = cfg.dim
    k1 = _pick(cfg.k1, 2)
    setup = TwoScaleSetup.paraboloid_pair(d, k1, cfg.k2, cfg.J, cfg.c0)
    Rs = _pick(cfg.R, (64.0, 128.0, 256.0))
    fg = FrequencyGrid.box(d, _pick(cfg.n, 4096 if d == 1 else 256), _pick(cfg.half_width, 1.12 * cfg.c0))
    rows, vals = [], []
    for R in Rs:
        if data is None:
            tc = 0.75 * setup.q_r_times(R)[1]
            f2 = _focused(fg, tapered_gaussian(cfg.c0 / 4 * 2.0**-cfg.k2, setup.radius(2)), setup.h(2), tc)
        else:
            f2 = data(cfg, setup, fg, R)
        f2 = f2 * (1.0 / f2.l2_norm())
        t0, t1 = setup.q_r_times(R)
        dt = _pick(cfg.dt, 1.0)
        times = np.linspace(t0, t1, int(round((t1 - t0) / dt)) + 1)
        grid = SpacetimeGrid.conjugate(fg, times, _pick(cfg.pad, 1), region=setup.q_r_region(R), region_id="Q_R")
        rep = lq_streaming(iter_extend(setup.h(2), f2, grid), grid, 2.0)
        v = rep.value / math.sqrt(R)
        vals.append(v)
        rows.append([R, rep.value, v, rep.region])
    res = ExperimentResult("slab-l2", ["R", "l2_norm", "ratio", "region"], rows)
    res.summary["band"] = float(max(vals) / min(vals))
    res.summary["kappa"] = kappa(d)
    res.plot = _gnuplot("slab-l2", "R", "ratio", 1, 3, logx=True)
    return res


# ---------------------------------------------------------------------------
# incidence counting
# ---------------------------------------------------------------------------

def run_tube_count(cfg: ExperimentConfig) -> ExperimentResult:
    """Counting experiments for both lemmas, transversal ensemble and parallel control."""
    Rs = _pick(cfg.R, (64.0, 256.0))
    k1 = _pick(cfg.k1, 0)
    rows = []
    res = ExperimentResult("tube-count", ["trial", "R", "eps", "lemma", "ensemble", "count", "max_count",
                                          "mean_count", "seed", "min_angle"], rows)
    for lemma in (1, 2):
        for ens in ("transversal", "parallel"):
            setup = TwoScaleSetup.paraboloid_pair(cfg.dim, k1, cfg.k2, cfg.J, cfg.c0,
                                                  transversal=(ens == "transversal"))
            stats = []
            for R in Rs:
                th = None if cfg.thickness is None else cfg.thickness * R**-0.5
                st = count_experiment(lemma, setup, R, cfg.eps, cfg.trials, cfg.seed, cfg.C_sep, th,
                                      control=(ens == "parallel"))
                stats.append(st)
                for i, (c, sd) in enumerate(zip(st.counts, st.seeds)):
                    rows.append([i, R, cfg.eps, lemma, ens, int(c), st.max_count, st.mean_count, sd,
                                 st.min_angle])
            for a, b in zip(stats, stats[1:]):
                res.summary[f"growth_lemma{lemma}_{ens}_R{a.R:g}_to_{b.R:g}"] = growth_ratio(a, b)
    res.notes.append("parallel ensemble: both sides share one phase and the fixed tube is forced "
                     "parallel to the family (out-of-hypothesis control)")
    return res


# ---------------------------------------------------------------------------
# wave packets
# ---------------------------------------------------------------------------

def wavepacket_setup(cfg: ExperimentConfig, R: float | None = None):
    """Frequency grid, phase, data, packet region and ``Q_R`` grid of the packet suite."""
    d = cfg.dim
    R = float(R if R is not None else _pick(cfg.R, (256.0,))[0])
    n = _pick(cfg.n, 4096 if d == 1 else 256)
    s = math.sqrt(R)
    m_lat = max(1, n // 16) if d == 1 else max(1, n // int(s))
    h = 2 * math.pi / (m_lat * s)
    fg = FrequencyGrid.with_spacing(d, n, h)
    setup = TwoScaleSetup.paraboloid_pair(d, 0, 0, cfg.J, cfg.c0)
    f = bump_suite(fg, R)
    region = PacketRegion.q_r(setup, R)
    t0, t1 = setup.q_r_times(R)
    grid = SpacetimeGrid.conjugate(fg, np.linspace(t0, t1, _pick(cfg.nt, 33)), 1,
                                   region=setup.q_r_region(R), region_id="Q_R")
    return setup.h(1), f, region, grid, R


def run_wavepacket_verify(cfg: ExperimentConfig, M_values=(2, 4, 6, 8)) -> ExperimentResult:
    """Reconstruction residual on ``Q_R`` and packet properties for the standard bump suite."""
    phase, f, region, grid, R = wavepacket_setup(cfg)
    ref = extend(phase, f, grid)
    den = lq_spacetime(ref, 2, "region").value
    rows = []
    res = ExperimentResult("wavepacket-verify", ["M", "n_packets", "residual"], rows)
    for M in M_values:
        packets = decompose(f, phase, R, region=region, M=M)
        rec = reconstruct(packets, grid)
        err = lq_spacetime(rec - ref, 2, "region").value / den
        rows.append([M, len(packets), err])
        if M == cfg.M:
            rep = verify_packet_properties(packets, grid, seed=cfg.seed)
            res.summary.update(reconstruction_error=err, n_packets=rep.n_packets, ell2=rep.ell2,
                               ortho_constant=rep.ortho_constant, ortho_min=rep.ortho_min,
                               support_violation=rep.support_violation, C_decay=rep.C_decay)
    res.summary["residual_monotone_in_M"] = bool(all(a[2] > b[2] for a, b in zip(rows, rows[1:])))
    res.plot = _gnuplot("wavepacket-verify", "M", "residual", 1, 3, logy=True)
    return res


# ---------------------------------------------------------------------------
# exponents
# ---------------------------------------------------------------------------

def _show(x) -> str:
    if x == INF:
        return "inf"
    return str(x)


def run_exponents(cfg: ExperimentConfig) -> ExperimentResult:
    """Exponent table for ``p`` (config) in dimension ``dim``: admissible ``q`` on both sides,
    duality cross-check, unweighted range for the phase, off-scaling data for ``q``."""
    d = cfg.dim
    p = cfg.p_exact
    pp = conjugate(p)
    P = read_phase_file(cfg.phase) if cfg.phase else RadialPhase.polynomial([1.0, 1.0])
    rows = []
    res = ExperimentResult("exponents", ["quantity", "value", "status"], rows)
    for side in ("restriction", "extension"):
        line = admissible_pair(p, 1, d, side).q_line
        rep = admissible_pair(p, line, d, side) if line != INF else admissible_pair(p, INF, d, side)
        other = "extension" if side == "restriction" else "restriction"
        if line >= 1:
            dual = admissible_pair(conjugate(line), pp, d, other)
            duality = "duality agrees" if bool(dual) == bool(rep) else "duality DISAGREES"
        else:
            duality = "no dual pair (q < 1)"
        rows.append([f"{side} q for p={_show(p)}", _show(line),
                     ("admissible" if rep else f"not admissible (margin {_show(rep.margin)})")
                     + f"; {duality}"])
    try:
        ur = unweighted_range(P, p, d)
        status = "collapsed (monomial)" if ur.collapsed else "interval"
        rows.append([f"unweighted r range for {P.describe()}", f"[{_show(ur.r_lo)}, {_show(ur.r_hi)}]",
                     f"{status}; lo {'included' if ur.lo_included else 'excluded'}, "
                     f"hi {'included' if ur.hi_included else 'excluded'}"])
    except ValueError as exc:
        rows.append([f"unweighted r range for {P.describe()}", "-", f"rejected: {exc}"])
    q = cfg.q_exact
    try:
        off = off_scaling_exponents(p, q, d)
        rows.append([f"off-scaling p~ for q={_show(q)}", _show(off.p_tilde),
                     f"p~'={_show(off.p_tilde_conj)}; alpha < {_show(off.alpha_sup)}"])
    except ValueError as exc:
        rows.append([f"off-scaling p~ for q={_show(q)}", "-", f"rejected: {exc}"])
    if cfg.p0 is not None:
        p0 = as_exact(cfg.p0)
        rows.append([f"p < p0 = {_show(p0)}", _show(p), "allowed" if p < p0 else "excluded (requires p < p0)"])
    return res


# ---------------------------------------------------------------------------
# plot scripts
# ---------------------------------------------------------------------------

def _gnuplot(name: str, xlabel: str, ylabel: str, xcol: int, ycol: int, logx: bool = False,
             logy: bool = False) -> str:
    lines = [
        f"# gnuplot script for {name}.csv (regenerate the figure from the CSV alone)",
        "set datafile separator ','",
        "set datafile commentschars '#'",
        "set key off",
        f"set xlabel '{xlabel}'",
        f"set ylabel '{ylabel}'",
    ]
    if logx:
        lines.append("set logscale x 2")
    if logy:
        lines.append("set logscale y 2")
    lines += [
        "set terminal pngcairo size 800,600",
        f"set output '{name}.png'",
        f"plot '{name}.csv' every ::1 using {xcol}:{ycol} with linespoints",
    ]
    return "\n".join(lines) + "\n"


EXPERIMENTS: dict[str, Callable[[ExperimentConfig], ExperimentResult]] = {
    "decay-sweep": run_decay_sweep,
    "norm-ratio": run_norm_ratio,
    "local-estimate": run_local_estimate,
    "slab-l2": run_slab_l2,
    "tube-count": run_tube_count,
    "wavepacket-verify": run_wavepacket_verify,
    "exponents": run_exponents,
}
