import json
import textwrap

import pytest

from hilbertlab.cli import THREADS_ENV, main, resolve_threads, run_config
from hilbertlab.config import load_config, parse_config
from hilbertlab.errors import ConfigError
from hilbertlab.presets import GROUP_PRESETS, list_presets

GOOD = textwrap.dedent("""\
    seed: 3
    group: {preset: schottky-2}
    experiments:
      - {name: orbit-ball, radius: 6}
      - {name: critical-exponent, radius: 9}
""")

CUSTOM = textwrap.dedent("""\
    domain: {preset: disk}
    group:
      free_group: true
      generators:
        - {dim: 3, data: [1, 0, 0, 0, 1, 0, 0, 0, 1]}
        - {dim: 3}
    experiments: [orbit-ball]
""")


def write(tmp_path, text, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


# -- config diagnostics -----------------------------------------------------------------


def test_good_config_parses():
    cfg = parse_config(GOOD)
    assert cfg.seed == 3
    assert [e["name"] for e in cfg.experiments()] == ["orbit-ball", "critical-exponent"]


def test_missing_generator_matrix_names_the_field():
    with pytest.raises(ConfigError) as e:
        parse_config(CUSTOM)
    assert e.value.field == "group.generators[1].data"
    assert e.value.line == 6
    assert "group.generators[1].data" in str(e.value)


def test_non_finite_numbers_are_rejected():
    with pytest.raises(ConfigError) as e:
        parse_config(GOOD.replace("radius: 6", "radius: .nan"))
    assert e.value.field == "experiments[0].radius" and e.value.line == 4
    with pytest.raises(ConfigError) as e:
        parse_config("domain: {kind: pball, p: .inf}\nexperiments: []\n")
    assert e.value.field == "domain.p"


@pytest.mark.parametrize("text, field", [
    ("group: {preset: nope}\n", "group.preset"),
    ("colour: red\n", "colour"),
    ("group: {preset: schottky-2}\nexperiments: [{name: dance}]\n", "experiments[0].name"),
    ("seed: 1.5\n", "seed"),
    ("domain: {kind: ellipsoid, center: [0, 0], shape: {dim: 2, data: [1, 0, 0, -1]}}\n", "domain"),
])
def test_diagnostics_name_fields(text, field):
    with pytest.raises(ConfigError) as e:
        parse_config(text)
    assert e.value.field == field


def test_invalid_yaml_reports_a_line():
    with pytest.raises(ConfigError) as e:
        parse_config("seed: 1\ngroup: {preset: [\n")
    assert e.value.line is not None


# -- running ----------------------------------------------------------------------------------


def test_run_writes_tables_and_summary(tmp_path, capsys):
    out = tmp_path / "out"
    status = main(["run", "--config", write(tmp_path, GOOD), "--out", str(out), "--threads", "1"])
    assert status == 0
    names = sorted(p.name for p in out.iterdir())
    assert "summary.json" in names
    assert "orbit-ball__orbit_ball.csv" in names
    summary = json.loads((out / "summary.json").read_text())
    assert summary["seed"] == 3
    assert [r["experiment"] for r in summary["experiments"]] == ["orbit-ball", "critical-exponent"]
    assert "orbit-ball: pass" in capsys.readouterr().out


def test_csv_bytes_do_not_depend_on_threads(tmp_path):
    cfg = load_config(write(tmp_path, GOOD))
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_config(cfg, a, threads=1) == 0
    assert run_config(cfg, b, threads=4) == 0
    csvs = sorted(p.name for p in a.glob("*.csv"))
    assert csvs
    for name in csvs:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_failing_verdict_gives_exit_status_one(tmp_path):
    text = GOOD.replace("{name: critical-exponent, radius: 9}",
                        "{name: critical-exponent, radius: 9, expect: 5.0, tolerance: 0.01}")
    assert main(["run", "--config", write(tmp_path, text), "--out", str(tmp_path / "o")]) == 1


def test_config_errors_give_exit_status_two(tmp_path, capsys):
    assert main(["run", "--config", write(tmp_path, CUSTOM), "--out", str(tmp_path / "o")]) == 2
    assert "group.generators[1].data" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "missing.yaml")]) == 2


def test_budget_exhaustion_is_reported(tmp_path, capsys):
    status = main(["orbit-ball", "--preset", "surface-genus-2", "--budget", "200", "--set", "radius=9",
                   "--out", str(tmp_path / "o")])
    assert status == 2
    assert "complete up to" in capsys.readouterr().err


def test_subcommand_with_overrides(tmp_path):
    out = tmp_path / "o"
    assert main(["orbit-ball", "--preset", "schottky-2", "--set", "radius=5", "--out", str(out)]) == 0
    rows = (out / "orbit-ball__orbit_ball.csv").read_text().splitlines()
    assert rows[0].startswith("index,word,distance")
    assert rows[1].startswith("0,,0")


def test_thread_sources_in_order(monkeypatch):
    cfg = parse_config("threads: 3\n")
    monkeypatch.delenv(THREADS_ENV, raising=False)
    assert resolve_threads(None) == 1
    assert resolve_threads(None, cfg) == 3
    monkeypatch.setenv(THREADS_ENV, "5")
    assert resolve_threads(None, cfg) == 5
    assert resolve_threads(2, cfg) == 2
    monkeypatch.setenv(THREADS_ENV, "many")
    with pytest.raises(ConfigError):
        resolve_threads(None, cfg)


# -- preset listing -------------------------------------------------------------------------------


def test_list_presets_mentions_every_preset():
    text = list_presets()
    for name in GROUP_PRESETS:
        assert name in text


def test_list_presets_self_test(capsys):
    assert main(["list-presets", "--self-test"]) == 0
    assert "[FAILED" not in capsys.readouterr().out


@pytest.mark.parametrize("name", ["schottky.yaml", "custom-generators.yaml"])
def test_shipped_configs_parse(name):
    from pathlib import Path

    cfg = load_config(str(Path(__file__).resolve().parents[1] / "configs" / name))
    assert cfg.experiments()
