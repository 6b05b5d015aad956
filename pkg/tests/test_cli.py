import os
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from quirk.cli import ConfigError, main, parse_config
from quirk.data import read_csv_rows


def cfg_file(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


# small enough to train in a second, big enough that pruning/interpret work
TINY = """
[dataset]
equation = x2-y2
n_samples = 300
seed = 0

[model]
hidden = 1
dr_layers = 2

[train]
learning_rate = 0.05
max_steps = 60
early_stop_patience = 60

[output]
dir = {out}
"""


def tiny(tmp_path, out="run1", **extra):
    text = TINY.format(out=tmp_path / out)
    for section, lines in extra.items():
        text += f"\n[{section}]\n" + "\n".join(lines) + "\n"
    return cfg_file(tmp_path, text, name=f"{out}.cfg")


class TestConfigParsing:
    def test_unknown_key_names_it(self, tmp_path):
        p = cfg_file(tmp_path, "[train]\nlerning_rate = 0.1\n")
        with pytest.raises(ConfigError, match="lerning_rate"):
            parse_config(p)

    def test_unknown_section_names_it(self, tmp_path):
        p = cfg_file(tmp_path, "[trian]\n")
        with pytest.raises(ConfigError, match=r"trian"):
            parse_config(p)

    def test_bad_value_reports_line(self, tmp_path):
        p = cfg_file(tmp_path, "[train]\nmax_steps = soon\n")
        with pytest.raises(ConfigError, match=r":2:"):
            parse_config(p)

    def test_key_outside_section(self, tmp_path):
        p = cfg_file(tmp_path, "max_steps = 5\n")
        with pytest.raises(ConfigError, match="section"):
            parse_config(p)

    def test_comments_and_types(self, tmp_path):
        p = cfg_file(tmp_path, """
# full-line comment
[model]
hidden = 2, 1   # trailing comment
dense_head = yes
[train]
batch_size = full
""")
        cfg = parse_config(p)
        assert cfg["model"]["hidden"] == [2, 1]
        assert cfg["model"]["dense_head"] is True
        assert cfg["train"]["batch_size"] is None

    def test_defaults_without_config(self, tmp_path):
        # every section has a complete default; only the equation is required
        assert main(["train", "--out", str(tmp_path / "o")]) == 2


class TestTrain:
    def test_writes_artifacts(self, tmp_path, capsys):
        rc = main(["train", "--config", tiny(tmp_path)])
        assert rc == 0
        out = tmp_path / "run1"
        for f in ("model.txt", "history.csv", "summary.txt"):
            assert (out / f).exists(), f
        line = (out / "summary.txt").read_text().strip()
        assert line.startswith("x2-y2 params=8 test_rmse=")
        assert line == capsys.readouterr().out.strip()

    def test_deterministic_rerun(self, tmp_path):
        main(["train", "--config", tiny(tmp_path)])
        first = (tmp_path / "run1" / "summary.txt").read_text()
        main(["train", "--config", tiny(tmp_path), "--out",
              str(tmp_path / "run2")])
        assert (tmp_path / "run2" / "summary.txt").read_text() == first

    def test_seed_flag_overrides_all(self, tmp_path):
        main(["train", "--config", tiny(tmp_path)])
        main(["train", "--config", tiny(tmp_path), "--seed", "5", "--out",
              str(tmp_path / "seeded")])
        assert ((tmp_path / "seeded" / "summary.txt").read_text()
                != (tmp_path / "run1" / "summary.txt").read_text())

    def test_missing_equation_key(self, tmp_path, capsys):
        p = cfg_file(tmp_path, "[train]\nmax_steps = 5\n")
        assert main(["train", "--config", p]) == 2
        assert "equation" in capsys.readouterr().err

    def test_unknown_equation(self, tmp_path, capsys):
        p = cfg_file(tmp_path, "[dataset]\nequation = nope\nn_samples = 50\n")
        assert main(["train", "--config", p]) == 2
        assert "nope" in capsys.readouterr().err

    def test_missing_config_file_is_io_error(self, tmp_path):
        assert main(["train", "--config", str(tmp_path / "absent.cfg")]) == 1

    def test_divergence_exits_3(self, tmp_path, capsys):
        cfg = cfg_file(tmp_path, TINY.format(out=tmp_path / "div") + """
[model]
dense_head = true
[train]
learning_rate = 1e160
""", name="div.cfg")
        with np.errstate(all="ignore"):
            import warnings
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                rc = main(["train", "--config", cfg])
        assert rc == 3
        assert "step" in capsys.readouterr().err


@pytest.fixture()
def trained(tmp_path):
    cfg = tiny(tmp_path)
    assert main(["train", "--config", cfg]) == 0
    return cfg, str(tmp_path / "run1" / "model.txt")


class TestEvalPruneInterpret:
    def test_eval_matches_training_summary(self, trained, tmp_path, capsys):
        cfg, model = trained
        capsys.readouterr()
        assert main(["eval", model, "--config", cfg]) == 0
        assert (capsys.readouterr().out.strip()
                == (tmp_path / "run1" / "summary.txt").read_text().strip())

    def test_eval_dimension_mismatch(self, trained, tmp_path, capsys):
        _, model = trained
        other = cfg_file(tmp_path, "[dataset]\nequation = I.15.3x\n"
                         "n_samples = 50\n", name="other.cfg")
        assert main(["eval", model, "--config", other]) == 2
        assert "feature" in capsys.readouterr().err

    def test_missing_model_file(self, trained, tmp_path):
        cfg, _ = trained
        assert main(["eval", str(tmp_path / "ghost.txt"), "--config", cfg]) == 1

    def test_corrupt_model_file(self, trained, tmp_path):
        cfg, _ = trained
        bad = tmp_path / "bad.txt"
        bad.write_text("not a model\n")
        assert main(["eval", str(bad), "--config", cfg]) == 1

    def test_prune_never_grows(self, trained, tmp_path, capsys):
        cfg, model = trained
        capsys.readouterr()
        assert main(["prune", model, "--config", cfg]) == 0
        outl = capsys.readouterr().out.strip().splitlines()[0]
        assert (tmp_path / "run1" / "model_pruned.txt").exists()
        before, after = outl.split("params=")[1].split()[0].split("->")
        assert int(after) <= int(before)

    def test_interpret_outputs(self, trained, tmp_path, capsys):
        cfg, model = trained
        assert main(["interpret", model, "--config", cfg]) == 0
        out = tmp_path / "run1"
        assert (out / "report.txt").exists()
        header, rows = read_csv_rows(out / "coefficients.csv")
        assert header[:4] == ["layer", "input", "unit", "active"]
        assert len(rows) == 2  # one per edge of the [2,1] model
        svgs = sorted(out.glob("edge_*.svg"))
        assert len(svgs) == 2
        for svg in svgs:
            root = ET.parse(svg).getroot()  # valid XML
            assert root.tag.endswith("svg")
        text = capsys.readouterr().out
        assert "surrogate_rmse=" in text and "model_rmse=" in text

    def test_interpret_svg_off(self, trained, tmp_path):
        cfg, model = trained
        off = tiny(tmp_path, out="nosvg", interpret=["svg = false"])
        assert main(["interpret", model, "--config", off]) == 0
        assert not list((tmp_path / "nosvg").glob("*.svg"))


class TestBenchmark:
    def test_unknown_ids_skipped_nonzero(self, tmp_path, capsys):
        cfg = tiny(tmp_path, out="bench")
        rc = main(["benchmark", "x2-y2", "bogus1", "bogus2", "--config", cfg])
        captured = capsys.readouterr()
        assert rc == 2
        assert "bogus1" in captured.err and "bogus2" in captured.err
        out = tmp_path / "bench"
        assert (out / "bench_x2-y2.csv").exists()
        header, rows = read_csv_rows(out / "benchmark.csv")
        assert header[:5] == ["equation", "rmse", "params", "pruned_rmse",
                              "pruned_params"]
        # published reference columns are merged; the demo id has no row there
        assert "published_quirk_loss" in header
        assert len(rows) == 1 and rows[0][0] == "x2-y2"

    def test_published_columns_filled_for_table_ids(self, tmp_path):
        cfg = tiny(tmp_path, out="bench2")
        cfg_text = open(cfg).read().replace("equation = x2-y2",
                                            "equation = I.6.2")
        cfg2 = cfg_file(tmp_path, cfg_text, name="b2.cfg")
        assert main(["benchmark", "I.6.2", "--config", cfg2]) == 0
        header, rows = read_csv_rows(tmp_path / "bench2" / "benchmark.csv")
        pub = dict(zip(header, rows[0]))
        assert float(pub["published_quirk_loss"]) == 1.40e-3
        assert int(pub["published_quirk_params"]) == 36
        assert float(pub["published_kan_loss"]) == 3.90e-1

    def test_empty_list_is_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["benchmark"])
        assert exc.value.code == 2

    def test_bad_threads_env(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("QUIRK_THREADS", "many")
        cfg = tiny(tmp_path, out="bt")
        assert main(["benchmark", "x2-y2", "--config", cfg]) == 2
        assert "QUIRK_THREADS" in capsys.readouterr().err


class TestCompareActivations:
    def test_sin_budget_16_reaches_1e2(self, tmp_path, capsys):
        # over [0, pi] the encode is the identity map, so sin(x) is one
        # rotation away and a 16-parameter circuit must nail it
        cfg = cfg_file(tmp_path, f"""
[dataset]
n_samples = 1000
seed = 11
split_seed = 11
range_lo = 0
range_hi = {np.pi!r}

[train]
learning_rate = 0.05
max_steps = 600
early_stop_patience = 600

[output]
dir = {tmp_path / "cmp"}
""")
        assert main(["compare-activations", "sin", "--budgets", "16",
                     "--config", cfg]) == 0
        header, rows = read_csv_rows(tmp_path / "cmp" / "compare_activations.csv")
        assert header == ["budget", "dr_rmse", "spline_s1_rmse",
                          "spline_s0.05_rmse"]
        assert len(rows) == 1
        assert float(rows[0][1]) < 1e-2
        svg = tmp_path / "cmp" / "compare_sin_16.svg"
        assert ET.parse(svg).getroot().tag.endswith("svg")

    def test_odd_budget_warns_and_rounds_down(self, tmp_path):
        cfg = cfg_file(tmp_path, f"""
[dataset]
n_samples = 200
[train]
max_steps = 20
early_stop_patience = 20
[output]
dir = {tmp_path / "odd"}
""")
        with pytest.warns(RuntimeWarning, match="odd DR budget 5"):
            assert main(["compare-activations", "fig4_fn", "--budgets", "5",
                         "--config", cfg]) == 0
        _, rows = read_csv_rows(tmp_path / "odd" / "compare_activations.csv")
        assert rows[0][0] == "5"

    def test_unknown_target(self, tmp_path, capsys):
        assert main(["compare-activations", "mystery",
                     "--out", str(tmp_path / "x")]) == 2
        assert "mystery" in capsys.readouterr().err


def test_list_equations(capsys):
    assert main(["list-equations"]) == 0
    text = capsys.readouterr().out
    for token in ("I.6.2", "I.15.3x", "x2-y2", "exp_sin_poly", "fig4_fn"):
        assert token in text
