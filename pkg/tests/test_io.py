import json
import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rotsn.cli import parse_mass, run_command
from rotsn.field import ComplexField2D
from rotsn.grid import Grid2D
from rotsn.io import (
    BadMagicError,
    ConfigError,
    TruncatedPayloadError,
    VersionMismatchError,
    config_from_dict,
    dumps_json,
    load_config,
    load_field,
    read_csv,
    save_field,
    write_csv,
)


def _random_field(n, seed):
    g = Grid2D(n, 3.5)
    rng = np.random.default_rng(seed)
    return ComplexField2D(g, rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape))


@settings(max_examples=20, deadline=None)
@given(st.sampled_from([8, 16, 64]), st.integers(min_value=0, max_value=2**32 - 1))
def test_field_round_trip_is_bit_exact(tmp_path_factory, n, seed):
    path = tmp_path_factory.mktemp("psn") / "u.psn"
    u = _random_field(n, seed)
    save_field(path, u, {"a": 2.5, "omega": 1.0})
    v, meta = load_field(path)
    assert v.values.tobytes() == u.values.tobytes()
    assert meta == {"n": n, "L": 3.5, "a": 2.5, "omega": 1.0, "version": 1}
    assert len(path.read_bytes()) == 4 + 4 + 4 + 24 + 16 * n * n


def test_field_file_errors(tmp_path):
    path = tmp_path / "u.psn"
    save_field(path, _random_field(16, 0))
    raw = path.read_bytes()
    (tmp_path / "magic.psn").write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(BadMagicError, match="bad magic"):
        load_field(tmp_path / "magic.psn")
    (tmp_path / "ver.psn").write_bytes(raw[:4] + struct.pack("<I", 2) + raw[8:])
    with pytest.raises(VersionMismatchError):
        load_field(tmp_path / "ver.psn")
    big = struct.pack("<4sII3d", b"PSN1", 1, 256, 16.0, 1.0, 0.0)
    (tmp_path / "short.psn").write_bytes(big + b"\0" * (16 * 128 * 128))
    with pytest.raises(TruncatedPayloadError, match="truncated payload"):
        load_field(tmp_path / "short.psn")
    assert not issubclass(BadMagicError, TruncatedPayloadError)


def test_config_parsing(tmp_path):
    cfg = config_from_dict({
        "grid": {"n": 128, "L": 12.0},
        "potential": {"kind": "harmonic", "lambda": 2.0, "omega": 1.0},
        "solver": {"residual_tol": 1e-7, "couplings": {"log": 0.0, "quartic": 0.0}},
        "sweep": {"a_fractions": [0.5, 0.6]},
        "seed": 4,
    })
    assert cfg.n == 128 and cfg.half_width == 12.0
    assert cfg.potential_spec().lam == 2.0
    assert cfg.minimize_config().couplings.log == 0.0 and cfg.minimize_config().seed == 4
    assert cfg.masses(10.0) == [5.0, 6.0]
    for bad in ({"grid": {"n": 100}}, {"colour": 1}, {"solver": {"speed": 2}},
                {"potential": {"kind": "cubic"}}, {"sweep": {"a_fractions": [1.2]}}):
        with pytest.raises(ConfigError):
            c = config_from_dict(bad)
            c.masses(10.0)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "none.json")
    (tmp_path / "bad.json").write_text("{")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.json")


def test_json_and_csv_formatting(tmp_path):
    text = dumps_json({"b": 0.1, "a": [1, True, None, float("nan")]})
    assert '"b": 0.10000000000000001' in text and text.index('"a"') < text.index('"b"')
    assert json.loads(text)["b"] == 0.1
    write_csv(tmp_path / "t.csv", ["x", "ok"], [[1 / 3, True]])
    header, rows = read_csv(tmp_path / "t.csv")
    assert header == ["x", "ok"] and rows == [["0.33333333333333331", "true"]]


def test_parse_mass():
    assert parse_mass("0.5a*", 10.0) == 5.0 and parse_mass("3", 10.0) == 3.0
    with pytest.raises(Exception):
        parse_mass("half", 10.0)


# ---------------------------------------------------------------------------
# command line


def test_cli_ground_state(tmp_path, capsys):
    out = tmp_path / "q.csv"
    assert run_command(["ground-state", "--out", str(out), "--quiet"]) == 0
    summary = json.loads(out.with_suffix(".json").read_text())
    assert abs(summary["a_star"] - 11.7008965245612) < 1e-9
    header, rows = read_csv(out)
    assert header == ["r", "q", "dq"] and len(rows) > 1000


def test_cli_usage_errors(tmp_path):
    assert run_command(["minimize", "--config", str(tmp_path / "missing.json")]) == 2
    assert run_command(["teleport"]) == 2
    assert run_command(["trial"]) == 2
    assert run_command(["fit"]) == 2
    cfg = tmp_path / "fast.json"
    cfg.write_text(json.dumps({"potential": {"kind": "harmonic", "lambda": 2.0, "omega": 2.0}}))
    assert run_command(["minimize", "--config", str(cfg), "--a", "1.0"]) == 2


def test_cli_minimize_energy_trial(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"grid": {"n": 128, "L": 12.0}}))
    field = tmp_path / "u.psn"
    assert run_command(["minimize", "--config", str(cfg), "--a", "0.5a*", "--out", str(field), "--quiet"]) == 0
    report = json.loads(field.with_suffix(".json").read_text())
    assert report["converged"] and report["status"] == "converged"
    u, meta = load_field(field)
    assert meta["omega"] == 1.0
    capsys.readouterr()
    assert run_command(["energy", "--config", str(cfg), "--in", str(field), "--quiet"]) == 0
    ev = json.loads(capsys.readouterr().out)
    assert ev["energy"]["total"] == pytest.approx(report["e_a"], rel=1e-9)
    assert ev["el_residual"] < 1e-6
    assert run_command(["trial", "--config", str(cfg), "--a", "0.5a*", "--tau", "1.0", "--quiet"]) == 0
    tr = json.loads(capsys.readouterr().out)
    assert tr["closed_form"] >= report["e_a"]
    # an unconverged run is a numerical failure
    cfg2 = tmp_path / "short.json"
    cfg2.write_text(json.dumps({"grid": {"n": 128, "L": 12.0}, "solver": {"max_iters": 3}}))
    assert run_command(["minimize", "--config", str(cfg2), "--a", "0.5a*", "--quiet"]) == 1


def test_cli_fit_on_synthetic_table(tmp_path, capsys):
    import math

    A = 11.700896524561179
    const = -128.4733371569202
    rows = []
    for f in np.linspace(0.9, 0.99, 10):
        a = f * A
        eps = 2 / A * math.sqrt(1 - f)
        rows.append([a, a * a / 4 * math.log(4 * (A - a)) + const, eps, -1 / (A * eps**2), -1 / A,
                     0.0, 0.0, 0.0, 0.0, True])
    from rotsn.asymptotics import SWEEP_COLUMNS

    write_csv(tmp_path / "s.csv", SWEEP_COLUMNS, rows)
    assert run_command(["fit", "--in", str(tmp_path / "s.csv"), "--quiet"]) == 0
    verdicts = json.loads(capsys.readouterr().out)
    assert {v["law"] for v in verdicts} == {"epsilon_slope", "energy_constant", "energy_drift", "mu_eps2"}
    assert all(v["pass"] for v in verdicts)
    assert all(set(v) == {"law", "estimate", "target", "rel_err", "pass"} for v in verdicts)
