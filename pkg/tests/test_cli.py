"""CLI: dataset ingestion, output contracts, exit codes."""
import json
import os

import numpy as np
import pytest

from deepntk.cli import ConfigError, load_dataset, main, synthetic_sphere
from deepntk.errors import InvalidDatasetError


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestLoadDataset:
    def test_basic_csv_one_hot(self, tmp_path):
        path = write(tmp_path, "d.csv", "a,b,label\n1,0,0\n0,1,1\n0.5,-1,0\n")
        ds = load_dataset(path)
        assert ds.n == 3
        assert ds.out_dim == 2
        np.testing.assert_allclose(ds.Z[:, 1], [0, 1, 0])

    def test_zero_row_under_unit_sphere_named(self, tmp_path):
        path = write(tmp_path, "d.csv", "a,b,label\n0,0,0\n1,0,1\n")
        with pytest.raises(ConfigError, match="row 2"):
            load_dataset(path, "unit_sphere")

    def test_malformed_row_has_line_number(self, tmp_path):
        path = write(tmp_path, "d.csv", "a,b,label\n1,0,0\n1,oops,1\n")
        with pytest.raises(ConfigError, match=":3"):
            load_dataset(path)

    def test_colinear_pair_reported(self, tmp_path):
        path = write(tmp_path, "d.csv", "a,b,label\n1,0,0\n2,0,1\n0,1,0\n")
        with pytest.raises(InvalidDatasetError, match="rows 0 and 1"):
            load_dataset(path)

    def test_synthetic_sphere_unit_norm_deterministic(self):
        a = synthetic_sphere(3, 50, 7)
        b = synthetic_sphere(3, 50, 7)
        assert np.array_equal(a, b)
        np.testing.assert_allclose(np.linalg.norm(a, axis=1), 1.0, atol=1e-12)


class TestOutputs:
    def test_rates_smoke_and_fit_json(self, tmp_path):
        out = str(tmp_path / "rates.csv")
        rc = main(["rates", "--arch", "ffnn", "--activation", "relu",
                   "--phase", "eoc", "-o", out])
        assert rc == 0
        body = [ln for ln in open(out).read().splitlines()
                if not ln.startswith("#")]
        assert body[0] == "L,residual,theory_residual"
        assert len(body) == 1 + 9  # header + 9 depth rows
        fit = json.load(open(str(tmp_path / "rates.fit.json")))
        assert "exponent" in fit["fit"]
        assert os.path.exists(out + ".schema.json")

    def test_byte_identical_bodies(self, tmp_path):
        outs = []
        for name in ("a.csv", "b.csv"):
            out = str(tmp_path / name)
            rc = main(["kernel", "--arch", "ffnn", "--activation", "relu",
                       "--phase", "eoc", "--depth", "6", "--sphere-d", "8",
                       "--seed", "5", "-o", out])
            assert rc == 0
            lines = open(out).read().splitlines()
            outs.append([ln for ln in lines if not ln.startswith("# generated_at")
                         and not ln.startswith("# config")])
        assert outs[0] == outs[1]

    def test_schema_sidecar_columns_match(self, tmp_path):
        out = str(tmp_path / "phase.csv")
        rc = main(["phase", "--activation", "relu",
                   "--sigma-b-grid", "0,1", "--sigma-w-grid", "0.5,1.0",
                   "-o", out])
        assert rc == 0
        schema = json.load(open(out + ".schema.json"))
        body = [ln for ln in open(out).read().splitlines() if not ln.startswith("#")]
        assert [c["name"] for c in schema["columns"]] == body[0].split(",")

    def test_spectrum_depth_trend(self, tmp_path):
        out = str(tmp_path / "spec.csv")
        rc = main(["spectrum", "--arch", "ffnn", "--activation", "relu",
                   "--sigma-b", "0.3", "--sigma-w", "1.3416407864998738",
                   "--d", "3", "--depths", "3,300", "--kmax", "16", "-o", out])
        assert rc == 0
        rows = [ln.split(",") for ln in open(out).read().splitlines()
                if not ln.startswith("#")][1:]
        share = {(int(r[0]), int(r[1])): float(r[3]) for r in rows}
        assert share[(300, 0)] > share[(3, 0)]

    def test_train_json_payload(self, tmp_path):
        out = str(tmp_path / "train.json")
        rc = main(["train", "--activation", "relu", "--phase", "eoc",
                   "--depth", "3", "--sphere-n", "40", "--sphere-d", "8",
                   "--time", "infinity", "-o", out])
        assert rc == 0
        payload = json.load(open(out))
        assert payload["train_acc"] == 1.0
        assert payload["min_eig"] > 0

    def test_config_file_defaults_and_flag_override(self, tmp_path):
        cfg = write(tmp_path, "cfg.txt", "depth = 4\nsphere-d = 8\n")
        out = str(tmp_path / "k.csv")
        rc = main(["--config", cfg, "kernel", "--arch", "ffnn",
                   "--activation", "relu", "--phase", "eoc", "-o", out])
        assert rc == 0
        rows = [ln for ln in open(out).read().splitlines() if not ln.startswith("#")]
        assert len(rows) == 1 + 4  # config-file depth applied
        rc = main(["--config", cfg, "kernel", "--arch", "ffnn",
                   "--activation", "relu", "--phase", "eoc",
                   "--depth", "2", "-o", out])
        assert rc == 0
        rows = [ln for ln in open(out).read().splitlines() if not ln.startswith("#")]
        assert len(rows) == 1 + 2  # explicit flag wins


class TestExitCodes:
    def test_missing_sigma_is_config_error(self, tmp_path):
        rc = main(["train", "--activation", "relu", "--depth", "3",
                   "-o", str(tmp_path / "x.json")])
        assert rc == 2

    def test_numeric_error_exit_code(self, tmp_path):
        # chaotic ReLU has no limiting kernel: rates must exit 3
        rc = main(["rates", "--arch", "ffnn", "--activation", "relu",
                   "--sigma-b", "0.0", "--sigma-w", "1.9",
                   "-o", str(tmp_path / "r.csv")])
        assert rc == 3

    def test_io_error_exit_code(self, tmp_path):
        rc = main(["phase", "--activation", "relu", "--sigma-b-grid", "0,1",
                   "--sigma-w-grid", "0.5,1.0",
                   "-o", "/nonexistent-dir/deep/out.csv"])
        assert rc == 4
