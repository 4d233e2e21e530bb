import json

import numpy as np
import pytest

from trimlpf import (ConfigError, TrimConfig, load_case, load_config,
                     run_comparison)
from trimlpf.cli import main

from conftest import CASES_DIR

BASE_TOML = """\
case_path = "{case}"
m_train = 30
m_test = 10
seeds = [0, 1]
methods = ["ols", "huber"]
output_dir = "{out}"

[outlier]
ratio = 0.1

[trim]
p = 0.05
node_limit = 200
cstep_restarts = 5
"""


def write_config(tmp_path, text=None, name="exp.toml", **fmt):
    fmt.setdefault("case", CASES_DIR / "ieee9.net")
    fmt.setdefault("out", tmp_path / "out")
    path = tmp_path / name
    path.write_text((text or BASE_TOML).format(**fmt))
    return path


def strip_wall_column(csv_text):
    out = []
    for line in csv_text.strip().splitlines():
        cells = line.split(",")
        del cells[7]
        out.append(",".join(cells))
    return "\n".join(out)


class TestConfigLoading:
    def test_minimal_config_gets_defaults(self, tmp_path):
        path = write_config(tmp_path, 'case_path = "{case}"\n')
        cfg = load_config(path)
        assert cfg.m_train == 200 and cfg.m_test == 100
        assert cfg.seeds == [0]
        assert cfg.methods == ["ols"]
        assert cfg.trim.node_limit == 5000
        assert cfg.trim.cstep_restarts == 10
        assert cfg.output_dir == "out"

    def test_case_path_resolves_relative_to_config(self, tmp_path):
        (tmp_path / "local.net").write_text(
            (CASES_DIR / "toy3.net").read_text())
        path = write_config(tmp_path, 'case_path = "local.net"\n')
        cfg = load_config(path)
        assert load_case(cfg.case_path).n_buses == 3

    @pytest.mark.parametrize("snippet, field", [
        ('case_path = "{case}"\nm_train = 0\n', "m_train"),
        ('case_path = "{case}"\ndirection = "sideways"\n', "direction"),
        ('case_path = "{case}"\nseeds = []\n', "seeds"),
        ('case_path = "{case}"\nmethods = ["nope"]\n', "methods"),
        ('case_path = "{case}"\nload_scale_lo = 1.4\n', "load_scale_lo"),
        ('case_path = "{case}"\nbanana = 1\n', "banana"),
        ('case_path = "{case}"\n[outlier]\nratio = 0.7\n', "outlier"),
        ('case_path = "{case}"\n[trim]\np = 1.5\n', "trim"),
        ('case_path = "{case}"\n[trim]\nwobble = 1\n', "trim.wobble"),
        ('case_path = "{case}"\n[method_options.nope]\nx = 1\n',
         "method_options.nope"),
    ])
    def test_validation_messages_name_the_field(self, tmp_path, snippet,
                                                field):
        path = write_config(tmp_path, snippet)
        with pytest.raises(ConfigError) as err:
            load_config(path)
        assert field in str(err.value)

    def test_missing_required_key(self, tmp_path):
        path = write_config(tmp_path, 'm_train = 10\n')
        with pytest.raises(ConfigError) as err:
            load_config(path)
        assert "case_path" in str(err.value)

    def test_missing_case_file(self, tmp_path):
        path = write_config(tmp_path, 'case_path = "ghost.net"\n')
        with pytest.raises(ConfigError) as err:
            load_config(path)
        assert "ghost.net" in str(err.value)


class TestGenerate:
    def test_writes_all_artifacts(self, tmp_path, capsys):
        cfg_path = write_config(tmp_path)
        assert main(["generate", "--config", str(cfg_path)]) == 0
        out = capsys.readouterr().out
        for seed in (0, 1):
            d = tmp_path / "out" / f"seed_{seed}"
            for name in ("train.csv", "train.json", "test.csv", "test.json"):
                assert (d / name).exists()
        assert out.count("wrote") == 8

    def test_training_sets_carry_flags(self, tmp_path):
        cfg_path = write_config(tmp_path)
        main(["generate", "--config", str(cfg_path)])
        side = json.loads(
            (tmp_path / "out" / "seed_0" / "train.json").read_text())
        assert sum(side["outlier_mask"]) == 3  # floor(0.1 * 30)
        test_side = json.loads(
            (tmp_path / "out" / "seed_0" / "test.json").read_text())
        assert not any(test_side["outlier_mask"])

    def test_regeneration_is_byte_identical(self, tmp_path):
        cfg_path = write_config(tmp_path)
        main(["generate", "--config", str(cfg_path),
              "--out", str(tmp_path / "a")])
        main(["generate", "--config", str(cfg_path),
              "--out", str(tmp_path / "b")])
        for rel in ("seed_0/train.csv", "seed_0/train.json",
                    "seed_1/test.csv"):
            assert (tmp_path / "a" / rel).read_bytes() == \
                (tmp_path / "b" / rel).read_bytes()

    def test_seed_override(self, tmp_path):
        cfg_path = write_config(tmp_path)
        assert main(["generate", "--config", str(cfg_path),
                     "--seed-override", "7"]) == 0
        assert (tmp_path / "out" / "seed_7" / "train.csv").exists()
        assert not (tmp_path / "out" / "seed_0").exists()

    def test_bad_config_exits_one(self, tmp_path, capsys):
        cfg_path = write_config(tmp_path, 'case_path = "{case}"\nbogus = 1\n')
        assert main(["generate", "--config", str(cfg_path)]) == 1
        err = capsys.readouterr().err
        assert err.startswith("error:")
        assert "bogus" in err

    def test_bad_threads_exits_one(self, tmp_path, capsys):
        cfg_path = write_config(tmp_path)
        assert main(["generate", "--config", str(cfg_path),
                     "--threads", "0"]) == 1
        assert "--threads" in capsys.readouterr().err


class TestFit:
    def test_fit_without_datasets_lists_every_missing_file(self, tmp_path,
                                                           capsys):
        cfg_path = write_config(tmp_path)
        assert main(["fit", "--config", str(cfg_path)]) == 1
        err = capsys.readouterr().err
        assert err.count("missing file") == 4  # csv + json for two seeds
        assert "seed_0/train.csv" in err and "seed_1/train.json" in err

    def test_fit_writes_model_records(self, tmp_path):
        cfg_path = write_config(tmp_path)
        main(["generate", "--config", str(cfg_path)])
        assert main(["fit", "--config", str(cfg_path)]) == 0
        record = json.loads(
            (tmp_path / "out" / "seed_0" / "model_ols.json").read_text())
        assert record["method"] == "ols"
        assert record["status"] == "ok"
        assert len(record["z"]) == 30
        assert record["wall_time"] >= 0
        w = np.array(record["w"])
        assert w.shape == (16, len(record["x_columns"]))
        assert (tmp_path / "out" / "seed_1" / "model_huber.json").exists()

    def test_failed_method_yields_exit_two_but_other_models_land(
            self, tmp_path, capsys):
        text = BASE_TOML.replace('methods = ["ols", "huber"]',
                                 'methods = ["ols", "trim_exact"]')
        text = text.replace("m_train = 30", "m_train = 20")
        text = text.replace("p = 0.05", "p = 0.45")
        cfg_path = write_config(tmp_path, text)
        main(["generate", "--config", str(cfg_path)])
        assert main(["fit", "--config", str(cfg_path)]) == 2
        err = capsys.readouterr().err
        assert "fit trim_exact seed 0" in err
        ok = json.loads(
            (tmp_path / "out" / "seed_0" / "model_ols.json").read_text())
        assert ok["status"] == "ok"
        bad = json.loads(
            (tmp_path / "out" / "seed_0" /
             "model_trim_exact.json").read_text())
        assert bad["status"].startswith("error: ValueError")
        assert "w" not in bad


class TestReport:
    def run_pipeline(self, tmp_path):
        cfg_path = write_config(tmp_path)
        main(["generate", "--config", str(cfg_path)])
        main(["fit", "--config", str(cfg_path)])
        assert main(["report", "--config", str(cfg_path)]) == 0
        return cfg_path

    def test_report_files_exist(self, tmp_path):
        self.run_pipeline(tmp_path)
        csv_text = (tmp_path / "out" / "report.csv").read_text()
        md_text = (tmp_path / "out" / "report.md").read_text()
        lines = csv_text.strip().splitlines()
        # 2 methods x 2 seeds x 2 splits + 2 methods x 2 splits aggregated
        assert len(lines) == 1 + 8 + 4
        assert md_text.startswith("| method")

    def test_report_matches_direct_sweep(self, tmp_path):
        self.run_pipeline(tmp_path)
        csv_lines = (tmp_path / "out" / "report.csv").read_text()
        rows = {}
        for line in csv_lines.strip().splitlines()[1:]:
            c = line.split(",")
            if c[4] != "median":
                rows[(c[0], c[3], c[4])] = (float(c[5]), float(c[6]))

        rep = run_comparison(
            load_case(CASES_DIR / "ieee9.net"), ["ols", "huber"],
            p_values=[0.05], p0=0.1,
            sizes={"m_train": 30, "m_test": 10}, seeds=[0, 1],
            trim=TrimConfig(p=0.05, node_limit=200, cstep_restarts=5))
        for row in rep.rows:
            got = rows[(row.method, row.split, str(row.seed))]
            # CSV cells carry 10 significant digits
            assert abs(got[0] - row.max_rel_err) < 1e-9 * (1 + row.max_rel_err)
            assert abs(got[1] - row.avg_rel_err) < 1e-9 * (1 + row.avg_rel_err)

    def test_report_is_reproducible_modulo_walltime(self, tmp_path):
        cfg_path = self.run_pipeline(tmp_path)
        first = strip_wall_column(
            (tmp_path / "out" / "report.csv").read_text())
        assert main(["report", "--config", str(cfg_path)]) == 0
        second = strip_wall_column(
            (tmp_path / "out" / "report.csv").read_text())
        assert first == second

    def test_report_without_models_lists_missing(self, tmp_path, capsys):
        cfg_path = write_config(tmp_path)
        main(["generate", "--config", str(cfg_path)])
        capsys.readouterr()
        assert main(["report", "--config", str(cfg_path)]) == 1
        err = capsys.readouterr().err
        assert err.count("missing file") == 4  # two models x two seeds
        assert "model_ols.json" in err and "model_huber.json" in err


class TestExportMps:
    def test_default_dataset_and_which(self, tmp_path, capsys):
        cfg_path = write_config(tmp_path)
        main(["generate", "--config", str(cfg_path)])
        assert main(["export-mps", "--config", str(cfg_path)]) == 0
        assert (tmp_path / "out" / "model_miqp.mps").exists()
        assert (tmp_path / "out" / "model_miqp.json").exists()
        out = capsys.readouterr().out
        assert "columns" in out and "rows" in out

    def test_milp_flavour(self, tmp_path):
        cfg_path = write_config(tmp_path)
        main(["generate", "--config", str(cfg_path)])
        assert main(["export-mps", "--config", str(cfg_path),
                     "--which", "milp"]) == 0
        text = (tmp_path / "out" / "model_milp.mps").read_text()
        assert "QMATRIX" not in text
        sidecar = json.loads(
            (tmp_path / "out" / "model_milp.json").read_text())
        assert sidecar["which"] == "milp"

    def test_explicit_dataset_path(self, tmp_path):
        cfg_path = write_config(tmp_path)
        main(["generate", "--config", str(cfg_path)])
        ds = tmp_path / "out" / "seed_1" / "train.csv"
        assert main(["export-mps", "--config", str(cfg_path),
                     "--dataset", str(ds)]) == 0
        assert (tmp_path / "out" / "model_miqp.mps").exists()

    def test_missing_dataset_exits_one(self, tmp_path, capsys):
        cfg_path = write_config(tmp_path)
        assert main(["export-mps", "--config", str(cfg_path)]) == 1
        assert "missing file" in capsys.readouterr().err
