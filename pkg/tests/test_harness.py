import json
from pathlib import Path

import numpy as np
import pytest

from semiclab.cli import main
from semiclab.config import load_config, parse_config
from semiclab.errors import ConfigError
from semiclab.harness import RUNNERS, run
from semiclab.io import csv_text, read_csv, write_csv

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _outputs(root, sub):
    return sorted((root / sub).iterdir())


def test_tf_cli(tmp_path):
    assert main(["tf", "--config", str(CONFIGS / "tf_harmonic.ini"), "--out", str(tmp_path)]) == 0
    summ = [p for p in _outputs(tmp_path, "tf") if p.name.endswith("summary.json")][0]
    data = json.loads(summ.read_text())
    assert data["summary"]["mu"] == pytest.approx(2.0, abs=1e-6)
    assert data["ok"] is True


def test_fock_verify_cli(tmp_path):
    cfg = CONFIGS / "default.ini"
    assert main(["fock-verify", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    cols, rows = read_csv(_outputs(tmp_path, "fock-verify")[0])
    assert cols == ["lemma", "instance_seed", "residual", "min_eigenvalue", "ok"]
    assert all(r["ok"] is True for r in rows)


def test_bad_exponent_names_field(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text((CONFIGS / "default.ini").read_text().replace("a = 0.5", "a = 1.5"))
    assert main(["tf", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert "pair.a" in capsys.readouterr().err
    with pytest.raises(ConfigError) as exc:
        load_config(bad)
    assert exc.value.field == "pair.a"


def test_unknown_key_rejected():
    with pytest.raises(ConfigError):
        parse_config("[model]\nN = 16\nbogus = 1\n")


def test_fraction_values():
    cfg = parse_config("[sweep]\nhbar_list = 1/8 1/16 1/32\n")
    assert cfg.hbar_list == pytest.approx((0.125, 0.0625, 0.03125))


def test_artifacts_deterministic(tmp_path):
    cfg = load_config(CONFIGS / "default.ini")
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("nbody", cfg, a) == 0
    assert run("nbody", cfg, b) == 0
    fa, fb = _outputs(a, "nbody"), _outputs(b, "nbody")
    assert [p.name for p in fa] == [p.name for p in fb]
    for x, y in zip(fa, fb):
        assert x.read_bytes() == y.read_bytes()
    digest = cfg.digest()
    assert all(digest in p.name for p in fa)
    assert b"\r\n" not in fa[0].read_bytes()


def test_digest_tracks_content():
    base = (CONFIGS / "default.ini").read_text()
    a = parse_config(base)
    b = parse_config(base.replace("lambda = 0.2", "lambda = 0.3"))
    assert a.digest() == parse_config(base).digest()
    assert a.digest() != b.digest()


def test_empty_table_is_header_only(tmp_path):
    assert csv_text(("hbar", "trace_dist"), []) == "hbar,trace_dist\n"
    p = write_csv(tmp_path / "e.csv", ("hbar", "trace_dist"), [])
    assert read_csv(p) == (["hbar", "trace_dist"], [])


def test_csv_round_trip(tmp_path, rng):
    rows = [{"a": float(v), "b": int(i), "c": bool(i % 2)} for i, v in enumerate(rng.normal(size=20))]
    rows.append({"a": float("nan"), "b": -1, "c": False})
    p = write_csv(tmp_path / "r.csv", ("a", "b", "c"), rows)
    cols, back = read_csv(p)
    assert cols == ["a", "b", "c"]
    for x, y in zip(rows[:-1], back):
        assert x == y
    assert np.isnan(back[-1]["a"])


def test_failure_writes_diagnostics(tmp_path):
    cfg = load_config(CONFIGS / "default.ini")
    # p = 2 is at or above d/a = 2 for a = 0.5: inadmissible tail
    assert run("cutoff", cfg, tmp_path) == 1
    diag = [p for p in _outputs(tmp_path, "cutoff") if p.name.endswith("diagnostics.json")]
    assert json.loads(diag[0].read_text())["error"] == "RangeError"


def test_every_subcommand_has_a_runner():
    from semiclab.config import SUBCOMMANDS
    assert set(SUBCOMMANDS) == set(RUNNERS)
