import json

import numpy as np
import pytest
import yaml
from click.testing import CliRunner

from capwaves import spectral_core as sc
from capwaves.cli_io import (
    INDEX_SCHEMA, emit_plotdata, load_config, main, read_snapshot, run_scenario, write_snapshot,
)
from capwaves.errors import ConfigurationError


def _write(tmp_path, name="cfg.yaml", **over):
    cfg = {
        "kind": "dn_validate",
        "lattice": {"L": float(2 * np.pi), "N": 256},
        "initial": {"k0": 1.0, "eps": 0.02},
        "integrator": {"dt": 0.05},
        "output": str(tmp_path / "run"),
    }
    cfg.update(over)
    p = tmp_path / name
    p.write_text(yaml.safe_dump(cfg))
    return p


def test_load_config_and_wrap_time(tmp_path):
    cfg = load_config(_write(tmp_path, initial={"k0": 1.0, "eps": 0.005, "width": 3.0},
                             lattice={"L": float(512 * np.pi), "N": 4096}))
    assert cfg.xi_max == pytest.approx(2.0)
    assert cfg.wrap_time == pytest.approx(512 * np.pi / (3 * np.sqrt(2.0)))


@pytest.mark.parametrize("over, field", [
    ({"lattice": {"L": 6.28, "N": -4}}, "lattice.N"),
    ({"lattice": {"L": 6.28, "N": 33}}, "lattice.N"),
    ({"initial": {"k0": 1.0, "eps": 0.01, "colour": "red"}}, "initial.colour"),
    ({"kind": "explode"}, "kind"),
    ({"snapshot_schedule": [1.0, 0.5]}, "snapshot_schedule"),
    ({"integrator": {"dt": -1.0}}, "integrator.dt"),
    ({"typo_key": 1}, "typo_key"),
])
def test_invalid_configs_name_the_field(tmp_path, over, field):
    with pytest.raises(ConfigurationError, match=field.replace(".", r"\.")):
        load_config(_write(tmp_path, **over))


def test_cli_exit_code_for_bad_config(tmp_path):
    p = _write(tmp_path, lattice={"L": 6.28, "N": -4})
    res = CliRunner().invoke(main, ["run", str(p)])
    assert res.exit_code == 2
    assert not (tmp_path / "run").exists()
    assert CliRunner().invoke(main, ["validate", str(p)]).exit_code == 2


def test_cli_validate_ok(tmp_path):
    res = CliRunner().invoke(main, ["validate", str(_write(tmp_path))])
    assert res.exit_code == 0 and "dn_validate" in res.output


def test_cli_exit_code_for_divergence(tmp_path):
    p = _write(tmp_path, kind="conserve", lattice={"L": float(2 * np.pi), "N": 64},
               initial={"k0": 12.0, "eps": 0.1}, t_end=1.0)
    res = CliRunner().invoke(main, ["run", str(p)])
    assert res.exit_code == 3
    assert "t=0" in res.output


def test_dn_validate_scenario(tmp_path):
    man = run_scenario(_write(tmp_path))
    checks = {c["name"]: c for c in man["checks"]}
    assert checks["dn_order"]["verdict"] == "PASS" and checks["dn_order"]["value"] >= 3.6
    assert (tmp_path / "run" / "tables" / "dn_validate.csv").exists()
    assert len(man["checks"]) == len(checks)


def test_conserve_scenario_and_plotdata(tmp_path):
    p = _write(tmp_path, kind="conserve", lattice={"L": float(2 * np.pi), "N": 64},
               initial={"k0": 1.0, "eps": 0.01}, t_end=20.0, snapshot_schedule=[5.0, 10.0])
    man = run_scenario(p)
    assert man["checks"][0]["name"] == "hamiltonian_drift" and man["checks"][0]["verdict"] == "PASS"
    plot = emit_plotdata(tmp_path / "run")
    index = json.loads((plot / "index.json").read_text())
    jsonschema = pytest.importorskip("jsonschema")
    jsonschema.validate(index, INDEX_SCHEMA)
    t = np.loadtxt(plot / "hamiltonian.csv", delimiter=",", skiprows=1)[:, 0]
    assert np.all(np.diff(t) > 0)
    assert any(f["path"].startswith("spectrum_") for f in index["files"])


def test_rerun_is_bit_exact(tmp_path):
    p = _write(tmp_path, kind="conserve", lattice={"L": float(2 * np.pi), "N": 32},
               initial={"k0": 1.0, "eps": 0.01}, t_end=2.0)
    run_scenario(p)
    a = (tmp_path / "run" / "tables" / "hamiltonian.csv").read_bytes()
    run_scenario(p)
    assert (tmp_path / "run" / "tables" / "hamiltonian.csv").read_bytes() == a


def test_plotdata_warns_on_missing_snapshots(tmp_path):
    p = _write(tmp_path, kind="conserve", lattice={"L": float(2 * np.pi), "N": 32},
               initial={"k0": 1.0, "eps": 0.01}, t_end=2.0, snapshot_schedule=[1.0])
    run_scenario(p)
    for f in (tmp_path / "run" / "snapshots").glob("*.bin"):
        f.unlink()
    with pytest.warns(RuntimeWarning, match="partial"):
        emit_plotdata(tmp_path / "run")


def test_snapshot_round_trip(tmp_path, rng):
    lat = sc.FrequencyLattice(3.0, 16)
    f = sc.SpectralField(lat, rng.normal(size=16) + 1j * rng.normal(size=16), real=False)
    path = write_snapshot(tmp_path, "f", f, 1.25)
    g, t = read_snapshot(path)
    assert t == 1.25 and g.lattice == lat and np.array_equal(g.coeffs, f.coeffs) and not g.real
    assert path.read_bytes() == f.coeffs.astype("<c16").tobytes()


def test_thread_count_env(tmp_path, monkeypatch):
    monkeypatch.setenv("CAPWAVES_THREADS", "2")
    assert run_scenario(_write(tmp_path))["threads"] == 2
    monkeypatch.setenv("CAPWAVES_THREADS", "zero")
    res = CliRunner().invoke(main, ["run", str(_write(tmp_path, output=str(tmp_path / "other")))])
    assert res.exit_code == 2 and "CAPWAVES_THREADS" in res.output
    assert not (tmp_path / "other").exists()
