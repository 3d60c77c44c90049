import math
from fractions import Fraction

import numpy as np
import pytest

from restriction_lab import __version__
from restriction_lab.cli import main
from restriction_lab.config import ConfigError, ExperimentConfig, load_config
from restriction_lab.experiments import (_bilinear_streaming, bilinear_ratio, decay_sweep_point, local_data,
                                         run_decay_sweep, run_exponents, run_local_estimate, run_norm_ratio,
                                         run_slab_l2)
from restriction_lab.extension import Field, FrequencyGrid, SpacetimeGrid, extend
from restriction_lab.hypersurface import RadialPhase
from restriction_lab.io import field_to_csv, packets_to_csv, read_field, write_field

SMALL_NR = "[exponents]\np = 2\nq = 6\nk1_max = 1\n[grid]\nn = 4096\nt_max = 512\nnt = 60\n"


# -- config ---------------------------------------------------------------

def test_config_parsing(tmp_path):
    phase = tmp_path / "phase.txt"
    phase.write_text("2 1\n4 1\n")
    cfg_path = tmp_path / "run.ini"
    cfg_path.write_text("[experiment]\ndim = 2\nphase = phase.txt\n[exponents]\np = 4/3  # Stein-Tomas\n"
                        "q = inf\n[scales]\nR = 16, 32 64\n")
    cfg = load_config(cfg_path)
    assert cfg.dim == 2 and cfg.p_exact == Fraction(4, 3) and cfg.q_exact == math.inf
    assert cfg.R == (16.0, 32.0, 64.0) and cfg.phase == str(phase)
    assert load_config(text=cfg.to_ini()) == cfg


@pytest.mark.parametrize("text", ["[bogus]\nx = 1\n", "[grid]\nwidth = 3\n", "[grid]\nn = 1000\n",
                                  "[exponents]\np = 1/2\n", "[exponents]\nq = abc\n", "[experiment]\ndim = 3\n",
                                  "[experiment]\nphase = /nonexistent\n", "[scales]\neps = 0.5\n",
                                  "[exponents]\nk1 = 0\nk2 = 1\n", "not an ini"])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        load_config(text=text)


# -- CLI --------------------------------------------------------------------

def test_cli_exponents_and_exit_codes(tmp_path, capsys):
    cfg = tmp_path / "e.ini"
    cfg.write_text("[experiment]\ndim = 2\n[exponents]\np = 4/3\nq = 6\np0 = 4/3\n")
    assert main(["exponents", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    out = capsys.readouterr().out
    assert "restriction q for p=4/3" in out and "excluded" in out
    bad = tmp_path / "bad.ini"
    bad.write_text("[grid]\nn = 3\n")
    assert main(["exponents", "--config", str(bad)]) == 2
    alias = tmp_path / "alias.ini"
    alias.write_text("[exponents]\nk1_max = 0\n[grid]\nt_max = 5000\n")
    assert main(["decay-sweep", "--config", str(alias), "--out", str(tmp_path / "o")]) == 3
    nr = tmp_path / "nr.ini"
    nr.write_text("[exponents]\np = 4/3\nq = 6\n")
    assert main(["norm-ratio", "--config", str(nr), "--out", str(tmp_path / "o")]) == 2


def test_cli_deterministic_csv(tmp_path):
    cfg = tmp_path / "t.ini"
    cfg.write_text("[experiment]\ntrials = 5\n")
    outs = []
    for _ in range(2):
        assert main(["tube-count", "--config", str(cfg), "--out", str(tmp_path / "o"), "--seed", "3"]) == 0
        outs.append((tmp_path / "o" / "tube-count.csv").read_bytes())
    assert outs[0] == outs[1]
    text = outs[0].decode()
    assert text.startswith(f"# restriction-lab {__version__}") and "# seed = 3" in text and "# trials = 5" in text


def test_cli_writes_plot_script(tmp_path):
    cfg = tmp_path / "d.ini"
    cfg.write_text("[exponents]\nk1_max = 2\n")
    assert main(["decay-sweep", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    gp = (tmp_path / "decay-sweep.gp").read_text()
    assert "decay-sweep.csv" in gp and "using 3:4" in gp
    rows = [ln for ln in (tmp_path / "decay-sweep.csv").read_text().splitlines() if not ln.startswith("#")]
    assert rows[0].startswith("k1,") and len(rows) == 4


# -- experiments --------------------------------------------------------------

def test_decay_sweep_single_point():
    res = run_decay_sweep(ExperimentConfig(k1_max=0))
    assert len(res.rows) == 1 and "delta_hat" not in res.summary and res.rows[0][3] > 0


def test_decay_sweep_zero_separation_cross_check():
    cfg = ExperimentConfig(k1_max=0)
    setup, f1, f2, grid = decay_sweep_point(cfg, 0)
    a = bilinear_ratio(setup, f1, f2, 2.0, 2.0, grid)
    b = _bilinear_streaming(setup, f1, f2, 2.0, 2.0, grid)
    assert abs(a - b) <= 1e-10 * a
    assert run_decay_sweep(cfg).rows[0][3] == pytest.approx(a, rel=1e-10)


def test_norm_ratio_family_and_rejection():
    res = run_norm_ratio(load_config(text=SMALL_NR))
    names = [r[0] for r in res.rows]
    assert names[:3] == ["annulus_0", "annulus_1", "union_0_1"] and "packet" in names
    assert all(r[1] > 0 for r in res.rows) and res.summary["max_over_min"] >= 1
    with pytest.raises(ConfigError, match="scaling line"):
        run_norm_ratio(ExperimentConfig(p="4/3", q="6"))


def test_local_estimate_zero_data():
    def zero_second(cfg, setup, fg, R):
        f1, f2 = local_data(cfg, setup, fg, R)
        return f1, f2.zeros()

    res = run_local_estimate(ExperimentConfig(), data=zero_second)
    assert all(r[1] == 0 for r in res.rows) and "alpha_hat" not in res.summary


def test_local_estimate_d1_normalization_trivial():
    res = run_local_estimate(ExperimentConfig())
    assert res.summary["q"] == 2 and "alpha_hat" in res.summary


def test_slab_l2_cube_case():
    # k1 = 0: Q_R has time extent R/2, so each of the R/2 + 1 unit-spaced slices carries kappa^2 ||f||^2
    # when the data stays inside |x| <= R; the ratio is kappa sqrt((R/2 + 1) / R)
    res = run_slab_l2(ExperimentConfig(k1=0, R=(256.0, 512.0, 1024.0)))
    for R, _, ratio, region in res.rows:
        assert ratio == pytest.approx(math.sqrt(2 * math.pi * (R / 2 + 1) / R), rel=1e-6) and region == "Q_R"


def test_exponents_table():
    rows = run_exponents(ExperimentConfig(dim=2, p="4/3", q="6", p0="4/3")).rows
    assert rows[0][:2] == ["restriction q for p=4/3", "2"] and rows[0][2].startswith("admissible")
    assert "duality agrees" in rows[0][2]
    assert run_exponents(ExperimentConfig(dim=2, p="4/3")).rows[2][2].startswith("interval")


def test_exponents_monomial_collapse(tmp_path):
    ph = tmp_path / "p.txt"
    ph.write_text("2 1\n")
    rows = run_exponents(ExperimentConfig(dim=2, p="4/3", phase=str(ph))).rows
    assert rows[2][1] == "[2, 2]" and "collapsed" in rows[2][2]


# -- io ---------------------------------------------------------------------

def test_field_roundtrip_and_csv(tmp_path):
    fg = FrequencyGrid.box(1, 64, 1.0).sample(lambda x: np.exp(-x[..., 0] ** 2 / 0.1))
    g = SpacetimeGrid.conjugate(fg, [0.0, 0.5])
    F = extend(RadialPhase.monomial(2), fg, g)
    write_field(tmp_path / "f.bin", F)
    meta, arr = read_field(tmp_path / "f.bin")
    assert meta["shape"] == (2, 64) and meta["times"] == [0.0, 0.5]
    assert np.allclose(arr, F.samples, atol=1e-6)
    field_to_csv(tmp_path / "f.csv", F)
    assert (tmp_path / "f.csv").read_text().splitlines()[0] == "t,x,re,im"


def test_packets_csv(tmp_path):
    from restriction_lab.experiments import wavepacket_setup
    from restriction_lab.wavepacket import decompose

    phase, f, region, grid, R = wavepacket_setup(ExperimentConfig())
    P = decompose(f, phase, R, region=region)[:3]
    packets_to_csv(tmp_path / "p.csv", P)
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "j,x0,xi0,v0,re_c,im_c" and len(lines) == 4
