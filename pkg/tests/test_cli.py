import csv
import json

import numpy as np
import pytest

from wmprop.cli import main
from wmprop.fileio import generate_key, load_key, read_streams, write_pivots
from wmprop.mle_bias import BinaryMixtureParams, run_mle_bias
from wmprop.rng import derive_key, make_rng
from wmprop.simulate import NtpSimConfig, simulate_watermarked_pivots
from wmprop.watermarks import Scheme

GUM = Scheme.gumbel_max()


@pytest.fixture()
def key_file(tmp_path):
    path = tmp_path / "key.txt"
    assert main(["keygen", "--seed", "82", "--out", str(path)]) == 0
    return path


class TestKeygen:
    def test_seeded_key_round_trips(self, tmp_path, capsys):
        path = tmp_path / "k.txt"
        assert main(["keygen", "--seed", "82", "--out", str(path)]) == 0
        assert "wrote key" in capsys.readouterr().err
        assert load_key(path) == generate_key(82)

    def test_entropy_flag_allows_unseeded(self, tmp_path, capsys):
        path = tmp_path / "k.txt"
        assert main(["keygen", "--entropy", "--out", str(path)]) == 0
        assert len(load_key(path)) == 32

    def test_unseeded_without_entropy_refuses(self, tmp_path, capsys):
        rc = main(["keygen", "--out", str(tmp_path / "k.txt")])
        assert rc == 2
        assert "error" in capsys.readouterr().err

    def test_unwritable_path(self, capsys, tmp_path):
        rc = main(["keygen", "--seed", "1",
                   "--out", str(tmp_path / "missing" / "k.txt")])
        assert rc == 4


class TestEstimate:
    def write_null_and_reference(self, tmp_path):
        data = tmp_path / "data.txt"
        ref = tmp_path / "ref.txt"
        write_pivots(data, make_rng(95).random(100_000))
        write_pivots(ref, simulate_watermarked_pivots(
            GUM, NtpSimConfig(1000, 0.1, derive_key(95, 1)), 100_000))
        return data, ref

    def test_null_data_report(self, tmp_path, capsys):
        data, ref = self.write_null_and_reference(tmp_path)
        assert main(["estimate", str(data), str(ref)]) == 0
        out = json.loads(capsys.readouterr().out)
        assert set(out) == {"eps_ini", "eps_rfn", "eps_opt", "sigma_star",
                            "tau_star", "tv", "residual", "delta_star"}
        assert out["eps_opt"] == pytest.approx(0.001, abs=1e-12)
        assert out["eps_opt"] <= 0.011
        assert set(out["eps_ini"]) == {"0.1", "0.01", "0.001"}

    def test_delta_flag_repeats(self, tmp_path, capsys):
        data, ref = self.write_null_and_reference(tmp_path)
        rc = main(["estimate", str(data), str(ref),
                   "--delta", "0.2", "--delta", "0.05"])
        assert rc == 0
        out = json.loads(capsys.readouterr().out)
        assert set(out["eps_ini"]) == {"0.2", "0.05"}
        assert set(out["eps_rfn"]) == {"0.2", "0.05"}

    def test_binary_reference_exits_3(self, tmp_path, capsys):
        data = tmp_path / "data.txt"
        ref = tmp_path / "ref.txt"
        write_pivots(data, make_rng(3).random(500))
        write_pivots(ref, (make_rng(4).random(500) < 0.8).astype(float))
        assert main(["estimate", str(data), str(ref)]) == 3
        assert "degenerate" in capsys.readouterr().err

    def test_malformed_file_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.txt"
        bad.write_text("y\n0.5\nnot-a-number\n")
        ref = tmp_path / "ref.txt"
        write_pivots(ref, make_rng(4).random(100))
        assert main(["estimate", str(bad), str(ref)]) == 2
        assert "line" in capsys.readouterr().err

    def test_missing_file_exits_4(self, tmp_path, capsys):
        ref = tmp_path / "ref.txt"
        write_pivots(ref, make_rng(4).random(100))
        assert main(["estimate", str(tmp_path / "nope.txt"), str(ref)]) == 4


class TestSweepCommand:
    def test_writes_detail_and_summary_rows(self, tmp_path, capsys):
        out = tmp_path / "sweep.csv"
        rc = main(["sweep", "--seed", "5", "--eps-grid", "2", "--n", "1000",
                   "--trials", "1", "--out", str(out)])
        assert rc == 0
        assert "wrote 18 rows and 9 summary rows" in capsys.readouterr().err
        with open(out, newline="") as fh:
            raw = list(csv.reader(fh))
        assert raw[0] == ["eps_true", "trial", "method", "delta", "estimate",
                          "abs_error"]
        assert len(raw) == 1 + 18 + 9
        assert sum(1 for r in raw[1:] if r[0] == "summary") == 9

    def test_unseeded_refuses(self, tmp_path, capsys):
        rc = main(["sweep", "--eps-grid", "2", "--n", "200",
                   "--out", str(tmp_path / "s.csv")])
        assert rc == 2
        assert "randomized" in capsys.readouterr().err

    def test_binary_scheme_exits_3(self, tmp_path, capsys):
        rc = main(["sweep", "--scheme", "greenred", "--seed", "3",
                   "--eps-grid", "2", "--n", "500",
                   "--out", str(tmp_path / "s.csv")])
        assert rc == 3

    def test_unwritable_out_exits_4(self, tmp_path, capsys):
        rc = main(["sweep", "--seed", "5", "--eps-grid", "2", "--n", "200",
                   "--out", str(tmp_path / "missing" / "s.csv")])
        assert rc == 4


class TestMleBiasCommand:
    def test_csv_matches_library_run(self, tmp_path, capsys):
        out = tmp_path / "bias.csv"
        rc = main(["mle-bias", "--seed", "51", "--eps-grid", "4",
                   "--n", "2000", "--out", str(out)])
        assert rc == 0
        rows = run_mle_bias(
            BinaryMixtureParams(gamma=0.3, mu=0.9, eps=0.0, n=2000, lam=1e-2),
            np.linspace(0.0, 1.0, 4), 51)
        with open(out, newline="") as fh:
            raw = list(csv.reader(fh))
        assert raw[0] == ["true_eps", "e_hat", "mle_eps", "mle_mu",
                          "limit_eps", "limit_mu"]
        assert len(raw) == 1 + 4
        for cells, r in zip(raw[1:], rows):
            assert float(cells[0]) == r.true_eps
            assert float(cells[1]) == r.e_hat
            assert float(cells[2]) == r.mle_eps
            assert float(cells[3]) == r.mle_mu
            assert float(cells[4]) == r.limit_eps
            assert float(cells[5]) == r.limit_mu

    def test_lambda_flag_sets_ridge(self, tmp_path, capsys):
        out = tmp_path / "bias.csv"
        rc = main(["mle-bias", "--seed", "51", "--eps-grid", "3",
                   "--n", "1000", "--lambda", "0.001", "--out", str(out)])
        assert rc == 0
        rows = run_mle_bias(
            BinaryMixtureParams(gamma=0.3, mu=0.9, eps=0.0, n=1000, lam=1e-3),
            np.linspace(0.0, 1.0, 3), 51)
        with open(out, newline="") as fh:
            raw = list(csv.reader(fh))
        assert float(raw[1][2]) == rows[0].mle_eps


class TestSimulateCommand:
    def test_null_stream(self, tmp_path, key_file, capsys):
        out = tmp_path / "s.jsonl"
        rc = main(["simulate", "--eps", "0.0", "--n", "50", "--vocab", "100",
                   "--seed", "7", "--key-file", str(key_file),
                   "--out", str(out)])
        assert rc == 0
        (rec,) = read_streams(out)
        assert rec.tokens.size == 50
        assert not rec.wm_flags.any()
        assert rec.true_eps == 0.0

    def test_saturated_stream(self, tmp_path, key_file, capsys):
        out = tmp_path / "s.jsonl"
        rc = main(["simulate", "--eps", "1.0", "--n", "60", "--vocab", "100",
                   "--seed", "7", "--key-file", str(key_file),
                   "--out", str(out)])
        assert rc == 0
        assert "true_eps 1.0000" in capsys.readouterr().err
        (rec,) = read_streams(out)
        assert rec.wm_flags[4:].all()
        assert rec.true_eps == 1.0

    def test_edits_dilute_true_eps(self, tmp_path, key_file, capsys):
        out = tmp_path / "s.jsonl"
        rc = main(["simulate", "--eps", "1.0", "--n", "60", "--vocab", "100",
                   "--seed", "7", "--key-file", str(key_file),
                   "--edit", "substitution", "--edit-rate", "0.2",
                   "--out", str(out)])
        assert rc == 0
        (rec,) = read_streams(out)
        assert rec.tokens.size == 60
        assert 0.0 <= rec.true_eps < 1.0

    def test_masking_flag_runs(self, tmp_path, key_file, capsys):
        rc = main(["simulate", "--eps", "1.0", "--n", "40", "--vocab", "100",
                   "--seed", "7", "--key-file", str(key_file), "--masking",
                   "--out", str(tmp_path / "s.jsonl")])
        assert rc == 0

    def test_bad_eps_exits_2(self, tmp_path, key_file, capsys):
        rc = main(["simulate", "--eps", "1.5", "--n", "50", "--vocab", "100",
                   "--seed", "7", "--key-file", str(key_file),
                   "--out", str(tmp_path / "s.jsonl")])
        assert rc == 2

    def test_missing_key_file_exits_4(self, tmp_path, capsys):
        rc = main(["simulate", "--eps", "0.5", "--n", "50", "--vocab", "100",
                   "--seed", "7", "--key-file", str(tmp_path / "nope"),
                   "--out", str(tmp_path / "s.jsonl")])
        assert rc == 4


class TestVerifyCommand:
    def test_simulate_verify_round_trip(self, tmp_path, capsys):
        key = tmp_path / "k.txt"
        streams = tmp_path / "s.jsonl"
        assert main(["keygen", "--seed", "82", "--out", str(key)]) == 0
        assert main(["simulate", "--eps", "1.0", "--n", "5000",
                     "--vocab", "100", "--seed", "820",
                     "--key-file", str(key), "--out", str(streams)]) == 0
        assert main(["verify", str(streams), "--vocab", "100",
                     "--key-file", str(key), "--seed", "821"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert len(out) == 1
        assert out[0]["stream_index"] == 0
        assert out[0]["n_pivots"] == 4996
        assert out[0]["true_eps"] == 1.0
        assert out[0]["estimate"]["eps_opt"] == pytest.approx(0.99709,
                                                              abs=5e-6)
        assert out[0]["estimate"]["eps_opt"] >= 0.97

    def test_greenred_stream_is_not_identifiable(self, tmp_path, key_file,
                                                 capsys):
        streams = tmp_path / "s.jsonl"
        assert main(["simulate", "--scheme", "greenred", "--eps", "1.0",
                     "--n", "200", "--vocab", "100", "--seed", "11",
                     "--key-file", str(key_file), "--out", str(streams)]) == 0
        rc = main(["verify", str(streams), "--scheme", "greenred",
                   "--vocab", "100", "--key-file", str(key_file),
                   "--seed", "12", "--ref-n", "2000"])
        assert rc == 3
        assert "degenerate" in capsys.readouterr().err

    def test_missing_streams_file_exits_4(self, tmp_path, key_file, capsys):
        rc = main(["verify", str(tmp_path / "nope.jsonl"), "--vocab", "100",
                   "--key-file", str(key_file), "--seed", "1",
                   "--ref-n", "1000"])
        assert rc == 4


class TestArgparseContract:
    def test_no_subcommand_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2

    def test_missing_required_flags_exit_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "--eps", "0.5"])
        assert exc.value.code == 2
