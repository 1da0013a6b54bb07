"""Configuration parsing, file formats and the command line."""

import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decompound.cli import run_cli
from decompound.config import ConfigError, Mode, parse_config, parse_config_text
from decompound.data import AuxiliaryState, ObservationSet
from decompound.io import (
    DataError,
    load_observations,
    read_acceptance_csv,
    read_aux_csv,
    read_trace_csv,
    write_acceptance_csv,
    write_aux_csv,
    write_increments_csv,
    write_path_csv,
    write_trace_csv,
)
from decompound.model import ModelParams
from decompound.sampler import Trace
from decompound.simulate import simulate_increments

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


# -- configuration -----------------------------------------------------------


def test_experiment_config():
    cfg = parse_config(CONFIGS / "experiment1.conf")
    assert cfg.mode is Mode.SIMULATE
    assert cfg.truth().psi.tolist() == [0.8, 0.2]
    assert cfg.n == 5000 and cfg.n_iter == 15000 and cfg.burn_in == 5000 and cfg.thin == 5
    assert cfg.data == CONFIGS / "increments.csv"


@pytest.mark.parametrize("name", ["experiment1", "experiment2", "four_component", "distance", "contract"])
def test_shipped_configs_parse(name):
    parse_config(CONFIGS / f"{name}.conf")


def test_minimal_defaults():
    cfg = parse_config_text("mode = fit\nseed = 3\nJ = 2\ndata = x.csv\n")
    assert cfg.alpha0 == cfg.beta0 == cfg.alpha1 == cfg.beta1 == cfg.kappa == 1.0
    assert cfg.hyperparameters().xi.tolist() == [0.0, 0.0]
    assert (cfg.n_iter, cfg.burn_in, cfg.thin) == (15000, 5000, 5)


def test_missing_seed():
    with pytest.raises(ConfigError, match="seed"):
        parse_config_text("mode = fit\nJ = 2\ndata = x.csv\n")


@pytest.mark.parametrize(
    "text,line,what",
    [
        ("mode = fit\nseed = 1\nbogus = 3\n", 3, "unknown key"),
        ("mode = fit\nseed = 1\nseed = 2\n", 3, "duplicate key"),
        ("mode = fit\n\n# comment\nthin = x\n", 4, "bad value"),
        ("mode = fit\nnonsense\n", 2, "expected"),
    ],
)
def test_config_errors_name_the_line(text, line, what):
    with pytest.raises(ConfigError, match=f"<config>:{line}: {what}"):
        parse_config_text(text)


def test_config_consistency_checks():
    with pytest.raises(ConfigError):
        parse_config_text("mode = simulate\nseed = 1\npsi = 1, 2\nmu = 0\ntau = 1\nn = 10\n")
    with pytest.raises(ConfigError):
        parse_config_text("mode = fit\nseed = 1\nJ = 1\ndata = x\nn_iter = 10\nburn_in = 10\n")


def test_override_wins():
    cfg = parse_config(CONFIGS / "experiment1.conf", {"mode": Mode.FIT, "seed": 7})
    assert cfg.mode is Mode.FIT and cfg.seed == 7


# -- observation files -------------------------------------------------------


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=30), st.floats(1e-3, 10))
def test_increment_round_trip(z, delta):
    import tempfile

    obs = ObservationSet(np.full(len(z), delta), np.array(z))
    with tempfile.TemporaryDirectory() as d:
        p = Path(d) / "inc.csv"
        write_increments_csv(obs, p)
        back = load_observations(p)
    np.testing.assert_array_equal(back.z, obs.z)
    np.testing.assert_array_equal(back.deltas, obs.deltas)


def test_path_round_trip(tmp_path):
    obs, _ = simulate_increments(ModelParams([1.0], [0.0], 1.0), np.full(50, 0.5), 4)
    write_path_csv(obs, tmp_path / "path.csv")
    back = load_observations(tmp_path / "path.csv", "path_csv")
    np.testing.assert_allclose(back.z, obs.z, atol=1e-12)
    assert back.n == obs.n


def test_path_three_points(tmp_path):
    p = tmp_path / "p.csv"
    p.write_text("t,x\n0,0\n1,0\n2.5,1.5\n")
    obs = load_observations(p, "path_csv")
    assert obs.n == 2
    np.testing.assert_array_equal(obs.deltas, [1.0, 1.5])
    np.testing.assert_array_equal(obs.z, [0.0, 1.5])
    np.testing.assert_array_equal(obs.active, [1])


@pytest.mark.parametrize(
    "body,fmt,match",
    [
        ("", "increment_csv", "empty"),
        ("delta,z\n", "increment_csv", "no data"),
        ("dt,z\n1,2\n", "increment_csv", "header"),
        ("delta,z\n1,2\n1\n", "increment_csv", ":3:"),
        ("delta,z\n1,abc\n", "increment_csv", "non-numeric"),
        ("delta,z\n0,1\n", "increment_csv", "positive"),
        ("delta,z\n1,inf\n", "increment_csv", "non-finite"),
        ("t,x\n0,0\n", "path_csv", "two"),
        ("t,x\n0,0\n1,1\n1,2\n", "path_csv", ":4:"),
    ],
)
def test_bad_observation_files(tmp_path, body, fmt, match):
    p = tmp_path / "bad.csv"
    p.write_text(body)
    with pytest.raises(DataError, match=match):
        load_observations(p, fmt)


def test_missing_file(tmp_path):
    with pytest.raises(DataError, match="cannot open"):
        load_observations(tmp_path / "nope.csv")


# -- sampler outputs ---------------------------------------------------------


def test_trace_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    tr = Trace(np.arange(5, 55, 5), rng.gamma(2, 1, (10, 3)), rng.normal(0, 1, (10, 3)), rng.gamma(2, 1, 10), thin=5)
    write_trace_csv(tr, tmp_path / "trace.csv")
    back = read_trace_csv(tmp_path / "trace.csv")
    np.testing.assert_array_equal(back.iterations, tr.iterations)
    np.testing.assert_array_equal(back.psi, tr.psi)
    np.testing.assert_array_equal(back.mu, tr.mu)
    np.testing.assert_array_equal(back.tau, tr.tau)
    assert back.thin == 5
    header = (tmp_path / "trace.csv").read_text().splitlines()[0]
    assert header == "iter,psi_1,psi_2,psi_3,mu_1,mu_2,mu_3,tau,lambda"
    table = np.loadtxt(tmp_path / "trace.csv", delimiter=",", skiprows=1)
    np.testing.assert_allclose(table[:, -1], table[:, 1:4].sum(axis=1), rtol=1e-15)


def test_aux_and_acceptance_round_trip(tmp_path):
    aux = AuxiliaryState(np.array([0, 3, 9]), np.array([[1, 0], [2, 1], [0, 4]]))
    write_aux_csv(aux, tmp_path / "aux.csv")
    back = read_aux_csv(tmp_path / "aux.csv", 2)
    np.testing.assert_array_equal(back.index, aux.index)
    np.testing.assert_array_equal(back.counts, aux.counts)

    write_aux_csv(AuxiliaryState.empty(2), tmp_path / "empty.csv")
    assert read_aux_csv(tmp_path / "empty.csv", 2).total == 0

    tr = Trace(np.arange(1, 4), np.ones((3, 1)), np.zeros((3, 1)), np.ones(3), accepted=[3, 1, 2], n_active=7)
    write_acceptance_csv(tr, tmp_path / "acc.csv")
    acc, n_active = read_acceptance_csv(tmp_path / "acc.csv")
    assert acc.tolist() == [3, 1, 2] and n_active == 7


# -- command line ------------------------------------------------------------


SMALL = """\
mode = simulate
seed = 11
psi = 0.8, 0.2
mu = 2, -1
tau = 1
n = 300
delta = 1
n_iter = 200
burn_in = 100
thin = 2
data = sim/increments.csv
trace = fit/trace.csv
grid_points = 21
max_lag = 5
"""


@pytest.fixture
def small_config(tmp_path):
    p = tmp_path / "small.conf"
    p.write_text(SMALL)
    return p


def test_pipeline(tmp_path, small_config, capsys):
    assert run_cli(["simulate", "--config", str(small_config), "--out", str(tmp_path / "sim")]) == 0
    for name in ("increments.csv", "path.csv", "aux.csv", "metadata.json"):
        assert (tmp_path / "sim" / name).exists()
    meta = json.loads((tmp_path / "sim" / "metadata.json").read_text())
    assert meta["seed"] == 11 and meta["n"] == 300

    assert run_cli(["fit", "--config", str(small_config), "--out", str(tmp_path / "fit")]) == 0
    tr = read_trace_csv(tmp_path / "fit" / "trace.csv")
    assert tr.iterations.tolist() == list(range(2, 201, 2))
    meta = json.loads((tmp_path / "fit" / "metadata.json").read_text())
    assert meta["data_sha256"] == json.loads((tmp_path / "sim" / "metadata.json").read_text())["data_sha256"]
    assert 0 < meta["acceptance_rate"] <= 1

    assert run_cli(["diagnose", "--config", str(small_config), "--out", str(tmp_path / "diag")]) == 0
    summary = (tmp_path / "diag" / "summary.txt").read_text()
    assert "n_retained = 50" in summary and "lambda.mean" in summary
    density = np.loadtxt(tmp_path / "diag" / "density.csv", delimiter=",", skiprows=1)
    assert density.shape == (21, 3) and np.all(density[:, 1] >= 0)
    acf = np.loadtxt(tmp_path / "diag" / "acf.csv", delimiter=",", skiprows=1)
    assert acf.shape[0] == 6 and np.all(acf[0, 1:] == 1.0)


def test_fit_is_byte_identical(tmp_path, small_config):
    run_cli(["simulate", "--config", str(small_config), "--out", str(tmp_path / "sim")])
    for d in ("a", "b"):
        assert run_cli(["fit", "--config", str(small_config), "--out", str(tmp_path / d)]) == 0
    assert (tmp_path / "a" / "trace.csv").read_bytes() == (tmp_path / "b" / "trace.csv").read_bytes()
    assert run_cli(["fit", "--config", str(small_config), "--seed", "12", "--out", str(tmp_path / "c")]) == 0
    assert (tmp_path / "a" / "trace.csv").read_bytes() != (tmp_path / "c" / "trace.csv").read_bytes()


def test_data_flag(tmp_path, small_config):
    run_cli(["simulate", "--config", str(small_config), "--out", str(tmp_path / "elsewhere")])
    args = ["fit", "--config", str(small_config), "--data", str(tmp_path / "elsewhere" / "increments.csv")]
    assert run_cli(args + ["--out", str(tmp_path / "fit")]) == 0


def test_refuses_non_empty_out(tmp_path, small_config, capsys):
    out = tmp_path / "sim"
    out.mkdir()
    (out / "keep.txt").write_text("x")
    assert run_cli(["simulate", "--config", str(small_config), "--out", str(out)]) == 6
    assert "refusing" in capsys.readouterr().err
    assert (out / "keep.txt").read_text() == "x"


def test_exit_codes(tmp_path, small_config, capsys):
    assert run_cli(["frobnicate"]) == 2
    assert run_cli([]) == 2
    assert run_cli(["simulate", "--config", str(small_config)]) == 2
    bad = tmp_path / "bad.conf"
    bad.write_text("mode = fit\nwhat = 1\n")
    assert run_cli(["fit", "--config", str(bad), "--out", str(tmp_path / "o")]) == 3
    assert "bad.conf:2" in capsys.readouterr().err
    # missing data file
    assert run_cli(["fit", "--config", str(small_config), "--out", str(tmp_path / "o2")]) == 4


def test_distance_command(tmp_path, capsys):
    assert run_cli(["distance", "--config", str(CONFIGS / "distance.conf"), "--out", str(tmp_path / "d")]) == 0
    out = capsys.readouterr().out
    values = dict(line.split(" = ") for line in out.splitlines())
    assert float(values["hellinger_sq.limit"]) == pytest.approx(0.0091098, abs=1e-7)
    assert abs(float(values["hellinger_sq.scaled"]) - float(values["hellinger_sq.limit"])) < 0.05 * float(values["hellinger_sq.limit"])
    assert (tmp_path / "d" / "distance.txt").read_text() == out


def test_contract_command(tmp_path):
    cfg = tmp_path / "c.conf"
    cfg.write_text(
        "mode = contract\nseed = 5\npsi = 0.8, 0.2\nmu = 2, -1\ntau = 1\n"
        "contract_n = 200, 800\nreplications = 2\ncontract_fitter = known_counts\n"
    )
    assert run_cli(["contract", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    table = np.loadtxt(tmp_path / "o" / "contraction.csv", delimiter=",", skiprows=1)
    assert table.shape == (4, 6)
    assert "slope_defined = true" in (tmp_path / "o" / "contraction_summary.txt").read_text()
