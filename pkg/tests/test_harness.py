import json
import math
from pathlib import Path

import pytest

from stokes_shrink.errors import CacheCorrupt, CommandUnknown, ConfigInvalid
from stokes_shrink.harness import cli
from stokes_shrink.harness.cache import cache_lookup, experiment_id
from stokes_shrink.harness.commands import csv_bytes, json_bytes
from stokes_shrink.harness.config import DEFAULT_CONFIG_PATH, load_config, parse_override

SMALL = ["--solver.N_r=16", "--solver.k_max=4", "--solver.n_max=3"]


def _write(tmp_path, text, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_defaults_match_shipped_file():
    a, b = load_config(), load_config(DEFAULT_CONFIG_PATH)
    assert a.canonical() == b.canonical()
    assert a.geometry.delta == pytest.approx(3.0)


def test_missing_eps_names_the_key(tmp_path):
    p = _write(tmp_path, "geometry:\n  R_e: 1.0\n  R_i: 0.5\n")
    with pytest.raises(ConfigInvalid) as exc:
        load_config(p)
    assert exc.value.path == "geometry.eps"


@pytest.mark.parametrize("text,path", [
    ("geometry: {R_e: 1.0, R_i: 0.5, eps: 1.0e-4}\nsolver: {bogus: 1}\n", "solver.bogus"),
    ("geometry: {R_e: 1.0, R_i: 0.5, eps: -1.0}\n", "geometry.eps"),
    ("geometry: {R_e: 1.0, R_i: 0.5, eps: 0.2}\n", "geometry"),
    ("geometry: {R_e: 1.0, R_i: 0.5, eps: 1.0e-4}\nsweep: {eps_list: [1.0e-3, 1.0e-2]}\n", "sweep.eps_list"),
    ("- 1\n- 2\n", "<root>"),
])
def test_invalid_files(tmp_path, text, path):
    with pytest.raises(ConfigInvalid) as exc:
        load_config(_write(tmp_path, text))
    assert exc.value.path == path


def test_json_config(tmp_path):
    p = _write(tmp_path, json.dumps({"geometry": {"R_e": 2, "R_i": 1, "eps": 2e-4}}), "cfg.json")
    ec = load_config(p)
    assert ec.block("geometry")["R_e"] == 2.0 and isinstance(ec.block("geometry")["R_e"], float)
    assert ec.geometry.length_scale == 2.0


def test_exponent_floats_without_dot(tmp_path):
    ec = load_config(_write(tmp_path, "geometry: {R_e: 1, R_i: 0.5, eps: 1e-4}\n"))
    assert ec.block("geometry")["eps"] == 1e-4
    assert load_config(None, ["--geometry.eps=1e-4"]).geometry.eps_hole == 1e-4


def test_overrides():
    ec = load_config(None, ["--ns.nu=0.1", "--sweep.eps_list=[1e-2, 1e-3]", "--seed=4"])
    assert ec.block("ns")["nu"] == 0.1 and ec.block("sweep")["eps_list"] == [1e-2, 1e-3]
    assert ec.data["seed"] == 4
    assert parse_override("--a.b=[1, 2]") == (("a", "b"), [1, 2])
    for bad in (["--ns.bogus=1"], ["--nope.x=1"], ["--ns.nu"], ["--ns.nu=-1"]):
        with pytest.raises(ConfigInvalid):
            load_config(None, bad)


def test_far_delta_check():
    with pytest.raises(ConfigInvalid) as exc:
        load_config(None, ["--harmonic.far_delta=10"])
    assert exc.value.path == "harmonic.far_delta"


def test_expand_aliases():
    ex = cli.expand_aliases
    assert ex("eigens", ["--eps=1e-3", "--kmax=6", "--solver.N_r=8"]) == [
        "--geometry.eps=1e-3", "--solver.k_max=6", "--solver.N_r=8"]
    assert ex("ns-run", ["--init=eig:2"]) == ["--ns.init=eig", "--ns.k=2"]
    assert ex("ns-sweep", ["--init=mix:5"]) == ["--ns.init=mix", "--ns.seed=5"]
    assert ex("semigroup-gap", ["--theta=eig:1,random:3"]) == [
        "--seed=3", "--semigroup.thetas=[eig1, random]"]
    assert ex("harmonic-audit", ["--eps=1e-3"]) == ["--eps=1e-3"]
    ec = load_config(None, ex("semigroup-gap", ["--theta=eig:1,random:3"]))
    assert ec.block("semigroup")["thetas"] == ["eig1", "random"] and ec.data["seed"] == 3


def test_experiment_id():
    a, b = load_config(), load_config(None, ["--ns.nu=0.1"])
    ida = experiment_id(a.canonical(), "eigens")
    assert ida == experiment_id(load_config().canonical(), "eigens")
    assert len({ida, experiment_id(b.canonical(), "eigens"), experiment_id(a.canonical(), "sweep")}) == 3


def test_output_encoding():
    assert csv_bytes(("x", "y"), [(0.1, True), (3, "s")]) == b"x,y\r\n0.10000000000000001,true\r\n3,s\r\n"
    assert json.loads(json_bytes({"b": math.inf, "a": [1.5]})) == {"a": [1.5], "b": "inf"}


def test_cache_round_trip_and_corruption(tmp_path):
    ec = load_config(None, SMALL)
    cache = tmp_path / "cache"
    first = cli.run(ec, "eigens", cache_root=cache, out_dir=tmp_path / "out")
    assert not first.cached and first.passed
    second = cli.run(ec, "eigens", cache_root=cache, out_dir=tmp_path / "out2")
    assert second.cached and second.id == first.id
    for name in first.payloads:
        assert Path(first.payloads[name]).read_bytes() == Path(second.payloads[name]).read_bytes()
    assert cache_lookup("0" * 64, cache) is None
    csv = cache / first.id / "eigens.csv"
    csv.write_bytes(csv.read_bytes() + b"tampered\r\n")
    with pytest.raises(CacheCorrupt):
        cache_lookup(first.id, cache)
    assert not (cache / first.id).exists()
    assert any((cache / "quarantine").iterdir())
    third = cli.run(ec, "eigens", cache_root=cache, out_dir=tmp_path / "out3")
    assert not third.cached


def test_unknown_command(tmp_path):
    with pytest.raises(CommandUnknown):
        cli.run(load_config(), "nope", cache_root=tmp_path)


def test_deterministic_recompute(tmp_path):
    ec = load_config(None, SMALL)
    a = cli.run(ec, "eigens", use_cache=False, cache_root=tmp_path / "c1", out_dir=tmp_path / "a")
    b = cli.run(ec, "eigens", use_cache=False, cache_root=tmp_path / "c2", out_dir=tmp_path / "b")
    for name in a.payloads:
        assert Path(a.payloads[name]).read_bytes() == Path(b.payloads[name]).read_bytes()
    summary = json.loads(Path(a.payloads["summary.json"]).read_bytes())
    assert summary["id"] == a.id and summary["pass"]


def test_csv_only_format(tmp_path):
    ec = load_config(None, SMALL + ["--output.formats=[csv]"])
    rec = cli.run(ec, "eigens", cache_root=tmp_path / "c", out_dir=tmp_path / "o")
    assert sorted(rec.payloads) == ["eigens.csv"]


def test_main_exit_codes(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("STOKES_SHRINK_CACHE", str(tmp_path / "cache"))
    out = str(tmp_path / "out")
    assert cli.main(["eigens", "--out", out, *SMALL]) == 0
    assert "PASS" in capsys.readouterr().out
    assert cli.main(["eigens", "--out", out, *SMALL]) == 0
    assert "(cached)" in capsys.readouterr().out
    assert cli.main(["nope", "--out", out]) == 2
    assert cli.main(["eigens", "--out", out, "--geometry.eps=0.3"]) == 2
    bad = _write(tmp_path, "geometry: {R_e: 1.0, R_i: 0.5}\n")
    assert cli.main(["eigens", "--config", str(bad)]) == 2
    assert "geometry.eps" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        cli.main(["eigens", "stray"])
    rid = experiment_id(load_config(None, SMALL).canonical(), "eigens")
    (tmp_path / "cache" / rid / "summary.json").write_text("{}")
    assert cli.main(["eigens", "--out", out, *SMALL]) == 3
