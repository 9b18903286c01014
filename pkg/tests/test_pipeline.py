import json

import numpy as np
import pytest

from vfpfront.cli import main
from vfpfront.config import parse_config
from vfpfront.io import load_front, read_csv, sha256_file
from vfpfront.pipeline import run_pipeline

SMALL = {"nz": "257", "tmax": "0.5", "record_every": "50", "lgap_samples": "50", "aprime_samples": "5"}


def _run(tmp_path, name, experiment="pipeline", **extra):
    cfg = parse_config(overrides={**SMALL, "out": str(tmp_path / name), **extra}, experiment=experiment)
    return run_pipeline(cfg)


def test_default_pipeline_outputs(tmp_path):
    m = _run(tmp_path, "a")
    assert m.status == "ok" and m.failure is None
    names = {f["path"] for f in m.files}
    assert {"thermo.json", "front.json", "front_report.json", "spectrum.json", "kinetic.csv",
            "checkpoint.json", "kinetic_report.json"} <= names
    # manifest completeness: every listed file exists with the recorded hash
    for f in m.files:
        assert sha256_file(m.out_dir / f["path"]) == f["sha256"]
    doc = json.loads(m.path.read_text())
    assert doc["status"] == "ok" and doc["finished"] is not None
    assert [s["name"] for s in doc["stages"]] == ["thermo", "front", "spectrum", "evolve"]
    spectrum_doc = json.loads((m.out_dir / "spectrum.json").read_text())
    assert spectrum_doc["A_tilde"]["null_alignment"] > 0.999
    assert spectrum_doc["lgap_min_ratio"] > 0
    front = load_front(m.out_dir / "front.json")
    assert front.params.nz == 257


def test_subcritical_stops_after_thermo(tmp_path):
    m = _run(tmp_path, "sub", beta="0.8")
    assert m.status == "stopped"
    assert "no front" in m.notice
    assert [f["path"] for f in m.files] == ["thermo.json"]


def test_failure_recorded_with_stage(tmp_path):
    # a huge perturbation makes the entropy undefined in the evolve stage
    m = _run(tmp_path, "fail", amplitude="5")
    assert m.status == "failed"
    assert m.failure["stage"] == "evolve" and m.failure["kind"] == "numerical"
    assert json.loads(m.path.read_text())["failure"]["stage"] == "evolve"


def test_hydro_experiment(tmp_path):
    m = _run(tmp_path, "h", experiment="hydro", hydro_tmax="0.2", hydro_record_every="50")
    data = read_csv(m.out_dir / "hydro.csv")
    assert list(data) == ["t", "free_energy", "mass_1", "mass_2", "flux_sup_norm", "dist_to_front_sup"]
    assert np.all(np.diff(data["free_energy"]) <= 1e-10)


def test_deterministic_csv(tmp_path):
    a = _run(tmp_path, "d1", seed="3")
    b = _run(tmp_path, "d2", seed="3")
    for name in ("kinetic.csv", "spectrum.json", "front.json"):
        assert (a.out_dir / name).read_bytes() == (b.out_dir / name).read_bytes()


def _cli(tmp_path, command, *args):
    flat = []
    for k, v in SMALL.items():
        flat += ["--" + k.replace("_", "-"), v]
    # later flags win, so the per-test arguments go last
    return main([command, *flat, "--out", str(tmp_path), *args])


def test_cli_exit_codes(tmp_path, capsys):
    assert _cli(tmp_path / "ok", "thermo") == 0
    assert (tmp_path / "ok" / "thermo.json").exists()
    assert _cli(tmp_path / "bad", "front", "--nz", "1024") == 2
    assert "odd" in capsys.readouterr().err
    assert _cli(tmp_path / "num", "evolve", "--amplitude", "5") == 3
    assert "evolve" in capsys.readouterr().err
    assert main(["front", "--no-such-flag"]) == 2
    assert _cli(tmp_path / "sub", "pipeline", "--beta", "0.8") == 0
    assert "no front" in capsys.readouterr().err


def test_cli_config_file(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("beta = 1.4\nnz = 1025\n")
    assert _cli(tmp_path / "o", "thermo", "--config", str(cfg)) == 0
    doc = json.loads((tmp_path / "o" / "thermo.json").read_text())
    assert doc["beta"] == 1.4
    cfg.write_text("typo_key = 1\n")
    assert _cli(tmp_path / "o2", "thermo", "--config", str(cfg)) == 2
