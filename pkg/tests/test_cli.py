"""Command-line contract: subcommands, exit codes, deterministic artifacts."""

import hashlib
import json
from pathlib import Path

import pytest

from ctxpred.cli import (
    EXIT_CONFIG,
    EXIT_COVERAGE,
    EXIT_NUMERIC,
    EXIT_OK,
    main,
    parse_config_file,
)
from ctxpred.errors import ConfigError

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
MIXTURE = str(FIXTURES / "mixture.tsv")
M0 = str(FIXTURES / "m0.tsv")
M1 = str(FIXTURES / "m1.tsv")


@pytest.fixture(scope="module")
def gen_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("gen")
    code = main([
        "gen", "--lm", MIXTURE, "--out", str(out), "--seed", "9",
        "--n-docs", "15", "--doc-len", "40", "--noise-sd", "9",
    ])
    assert code == EXIT_OK
    return out


@pytest.fixture(scope="module")
def analyze_dir(tmp_path_factory, gen_dir):
    out = tmp_path_factory.mktemp("analyze")
    code = main([
        "analyze", "--lm", MIXTURE, "--corpus", str(gen_dir / "corpus.tsv"),
        "--out", str(out), "--seed", "9", "--folds", "4",
    ])
    assert code == EXIT_OK
    return out


class TestGen:
    def test_artifacts_exist(self, gen_dir):
        for name in ("corpus.tsv", "sidecar.json", "manifest.json"):
            assert (gen_dir / name).exists(), name

    def test_sidecar_records_truth(self, gen_dir):
        sidecar = json.loads((gen_dir / "sidecar.json").read_text())
        assert sidecar["true_coeffs"]["intercept"] == 200.0
        assert sidecar["noise_sd"] == 9.0

    def test_manifest_digests_match_files(self, gen_dir):
        manifest = json.loads((gen_dir / "manifest.json").read_text())
        for name, digest in manifest["outputs"].items():
            actual = hashlib.sha256((gen_dir / name).read_bytes()).hexdigest()
            assert actual == digest, name

    def test_manifest_has_no_timestamps(self, gen_dir):
        manifest = json.loads((gen_dir / "manifest.json").read_text())
        assert set(manifest) == {
            "command", "config", "config_sha256", "seed", "inputs", "outputs",
        }

    def test_repeat_run_is_byte_identical(self, gen_dir, tmp_path):
        code = main([
            "gen", "--lm", MIXTURE, "--out", str(tmp_path), "--seed", "9",
            "--n-docs", "15", "--doc-len", "40", "--noise-sd", "9",
        ])
        assert code == EXIT_OK
        assert (tmp_path / "corpus.tsv").read_bytes() == (
            gen_dir / "corpus.tsv"
        ).read_bytes()

    def test_coef_flags_replace_defaults(self, tmp_path):
        code = main([
            "gen", "--lm", M1, "--out", str(tmp_path), "--seed", "1",
            "--n-docs", "3", "--doc-len", "10",
            "--coef", "intercept=120", "--coef", "surprisal=5",
        ])
        assert code == EXIT_OK
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["config"]["coeffs"] == {
            "intercept": 120.0, "surprisal": 5.0,
        }


class TestAnalyze:
    def test_artifacts_exist(self, analyze_dir):
        for name in ("report.json", "lmg.csv", "manifest.json"):
            assert (analyze_dir / name).exists(), name

    def test_report_shape(self, analyze_dir):
        report = json.loads((analyze_dir / "report.json").read_text())
        assert [m["model"] for m in report["models"]] == [
            "surprisal", "pmi", "ortho",
        ]
        assert report["folds"] == 4

    def test_lmg_csv_shape(self, analyze_dir):
        lines = (analyze_dir / "lmg.csv").read_text().splitlines()
        assert lines[0] == "model,group,fold,share,total_r2"
        # 3 models x 4 folds x 3 paired groups
        assert len(lines) == 1 + 36

    def test_repeat_run_is_byte_identical(self, analyze_dir, gen_dir, tmp_path):
        code = main([
            "analyze", "--lm", MIXTURE, "--corpus", str(gen_dir / "corpus.tsv"),
            "--out", str(tmp_path), "--seed", "9", "--folds", "4",
        ])
        assert code == EXIT_OK
        for name in ("report.json", "lmg.csv"):
            assert (tmp_path / name).read_bytes() == (
                analyze_dir / name
            ).read_bytes(), name

    def test_external_source(self, tmp_path, continuous_files):
        pred, corpus = continuous_files
        code = main([
            "analyze", "--external", str(pred), "--corpus", str(corpus),
            "--out", str(tmp_path), "--seed", "3", "--folds", "3",
        ])
        assert code == EXIT_OK
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert "external" in manifest["inputs"]


@pytest.fixture(scope="module")
def continuous_files(tmp_path_factory):
    import numpy as np

    from ctxpred.corpus import TokenObservation, write_corpus_tsv
    from ctxpred.predictors import PredictorRecord, write_external_tsv

    rng = np.random.default_rng(23)
    obs, recs = [], []
    for d in range(8):
        doc = f"doc{d}"
        for t in range(30):
            surp = float(rng.gamma(4.0, 0.8))
            freq = float(rng.gamma(5.0, 0.5))
            token = "w" * int(rng.integers(1, 5))
            rt = 150.0 + 12.0 * surp + 5.0 * freq + rng.normal(0.0, 6.0)
            obs.append(TokenObservation(
                participant="p0", doc_id=doc, sentence_id=0, token_idx=t,
                token=token, rt_ms=float(rt), skipped=False,
            ))
            recs.append(PredictorRecord(
                doc_id=doc, sentence_id=0, token_idx=t, token=token,
                surprisal=surp, frequency=freq, pmi=freq - surp,
                length=float(len(token)),
            ))
    root = tmp_path_factory.mktemp("continuous")
    write_external_tsv(recs, root / "pred.tsv")
    write_corpus_tsv(obs, root / "corpus.tsv")
    return root / "pred.tsv", root / "corpus.tsv"


class TestOracle:
    @pytest.mark.parametrize("lm_path", [M0, M1])
    def test_all_checks_pass(self, lm_path, capsys):
        code = main([
            "oracle", "--lm", lm_path, "--seed", "4", "--perturbations", "100",
        ])
        out = capsys.readouterr().out
        assert code == EXIT_OK
        passes = [l for l in out.splitlines() if l.startswith("PASS")]
        assert len(passes) == 4
        assert not any(l.startswith("FAIL") for l in out.splitlines())

    def test_writes_json_when_asked(self, tmp_path, capsys):
        code = main([
            "oracle", "--lm", M0, "--seed", "4", "--perturbations", "50",
            "--out", str(tmp_path),
        ])
        capsys.readouterr()
        assert code == EXIT_OK
        payload = json.loads((tmp_path / "oracle.json").read_text())
        assert payload["all_passed"] is True
        assert {c["name"] for c in payload["checks"]} == {
            "normalizer_identity", "context_mass",
            "minimizer_optimality", "projection_orthogonality",
        }

    def test_bad_predictor_set_in_flag_is_clean_config_error(
        self, capsys, gen_dir
    ):
        # the predictor-set parser runs inside argparse's type callback;
        # its ConfigError must still map to the config exit code
        code = main([
            "analyze", "--lm", MIXTURE, "--corpus", str(gen_dir / "corpus.tsv"),
            "--out", "unused", "--predictors", "surprisal,frequency",
        ])
        err = capsys.readouterr().err
        assert code == EXIT_CONFIG
        assert "unknown predictor set 'frequency'" in err
        assert "Traceback" not in err

    def test_enumeration_infeasible_model_degrades_per_check(
        self, tmp_path, capsys
    ):
        # low stopping mass makes context enumeration blow past the cap;
        # the exact (solve-based) checks must still run and the two
        # enumeration-dependent ones must fail with the error attached
        code = main([
            "oracle", "--lm", MIXTURE, "--seed", "4",
            "--perturbations", "20", "--out", str(tmp_path),
        ])
        out = capsys.readouterr().out
        assert code == EXIT_NUMERIC
        lines = out.splitlines()
        assert sum(l.startswith("PASS") for l in lines) == 2
        fails = [l for l in lines if l.startswith("FAIL")]
        assert len(fails) == 2
        assert all("error=" in l and "contexts" in l for l in fails)
        payload = json.loads((tmp_path / "oracle.json").read_text())
        assert payload["all_passed"] is False
        errored = {c["name"] for c in payload["checks"] if not c["passed"]}
        assert errored == {"context_mass", "projection_orthogonality"}
        assert all(
            c["residual"] is None
            for c in payload["checks"] if not c["passed"]
        )


class TestReport:
    def test_summarizes_and_writes_plot_csv(self, analyze_dir, capsys):
        code = main(["report", "--out", str(analyze_dir)])
        out = capsys.readouterr().out
        assert code == EXIT_OK
        assert "delta log-likelihood" in out
        lines = (analyze_dir / "plot_lmg.csv").read_text().splitlines()
        assert lines[0] == "model,group,mean_share,se_share"
        assert len(lines) == 1 + 9

    def test_missing_report_is_config_error(self, tmp_path, capsys):
        code = main(["report", "--out", str(tmp_path)])
        capsys.readouterr()
        assert code == EXIT_CONFIG


class TestExitCodes:
    def test_missing_input_file(self, tmp_path, capsys):
        code = main([
            "analyze", "--lm", "/does/not/exist.tsv",
            "--corpus", "also_missing.tsv", "--out", str(tmp_path),
        ])
        err = capsys.readouterr().err
        assert code == EXIT_CONFIG
        assert "missing.tsv" in err

    def test_coverage_failure(self, gen_dir, tmp_path, capsys):
        # m0's alphabet lacks the mixture model's multi-character units
        code = main([
            "analyze", "--lm", M0, "--corpus", str(gen_dir / "corpus.tsv"),
            "--out", str(tmp_path),
        ])
        err = capsys.readouterr().err
        assert code == EXIT_COVERAGE
        assert "alphabet" in err

    def test_numerical_failure_from_discrete_smooth(self, gen_dir, tmp_path, capsys):
        # 3 distinct frequency values cannot support 6 quantile knots
        code = main([
            "analyze", "--lm", MIXTURE, "--corpus", str(gen_dir / "corpus.tsv"),
            "--out", str(tmp_path), "--folds", "3", "--smooth",
        ])
        err = capsys.readouterr().err
        assert code == EXIT_NUMERIC
        assert "BasisError" in err and "term" in err

    def test_both_sources_rejected(self, gen_dir, tmp_path, capsys):
        code = main([
            "analyze", "--lm", MIXTURE, "--external", MIXTURE,
            "--corpus", str(gen_dir / "corpus.tsv"), "--out", str(tmp_path),
        ])
        capsys.readouterr()
        assert code == EXIT_CONFIG

    def test_bad_fold_count(self, gen_dir, tmp_path, capsys):
        code = main([
            "analyze", "--lm", MIXTURE, "--corpus", str(gen_dir / "corpus.tsv"),
            "--out", str(tmp_path), "--folds", "1",
        ])
        capsys.readouterr()
        assert code == EXIT_CONFIG


class TestConfigFile:
    def test_flags_beat_config(self, tmp_path, capsys):
        conf = tmp_path / "run.conf"
        conf.write_text("lm = %s\nseed = 42\nn_docs = 4\ndoc_len = 12\n" % M1)
        code = main([
            "gen", "--config", str(conf), "--out", str(tmp_path / "o"),
            "--seed", "7",
        ])
        capsys.readouterr()
        assert code == EXIT_OK
        manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
        assert manifest["seed"] == 7          # flag wins
        assert manifest["config"]["n_docs"] == 4  # config survives

    def test_unknown_key_rejected(self, tmp_path):
        conf = tmp_path / "bad.conf"
        conf.write_text("n_docs = 4\nspeed = 9\n")
        with pytest.raises(ConfigError, match="speed"):
            parse_config_file(str(conf))

    def test_comments_and_blanks_ignored(self, tmp_path):
        conf = tmp_path / "ok.conf"
        conf.write_text("# a comment\n\nseed = 3\n")
        assert parse_config_file(str(conf)) == {"seed": "3"}

    def test_duplicate_key_rejected(self, tmp_path):
        conf = tmp_path / "dup.conf"
        conf.write_text("seed = 3\nseed = 4\n")
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config_file(str(conf))

    def test_malformed_line_rejected(self, tmp_path, capsys):
        conf = tmp_path / "bad.conf"
        conf.write_text("seed: 3\n")
        code = main(["gen", "--config", str(conf), "--lm", M1, "--out", "x"])
        err = capsys.readouterr().err
        assert code == EXIT_CONFIG
        assert "key=value" in err


def test_console_entry_point_runs():
    import subprocess
    import sys

    proc = subprocess.run(
        [sys.executable, "-m", "ctxpred.cli", "oracle", "--lm", M1,
         "--perturbations", "20", "--seed", "0"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.count("PASS") == 4
