import json

import pytest

from codecalib.cli import main
from codecalib.confidence import ALL_MEASURES, ConfidenceScorer
from codecalib.correctness import label_records
from codecalib.metrics import auc_roc, bin_samples, brier, ece, report
from codecalib.pipeline import RunConfig, analyze
from codecalib.records import GenerationRecord, TestReport, load_records, save_records
from codecalib.rescale import cross_fold_rescale
from codecalib.synth import synth_corpus


@pytest.fixture(scope="module")
def corpus_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("corpus") / "synth.jsonl"
    assert main(["synth", "--n", "600", "--seed", "3", "--profile", "overconfident", "--out", str(path)]) == 0
    return path


class TestValidate:
    def test_clean(self, corpus_path, capsys):
        assert main(["validate", str(corpus_path)]) == 0
        assert "0 violation(s)" in capsys.readouterr().out

    def test_one_bad_record(self, tmp_path, capsys):
        p = tmp_path / "bad.jsonl"
        save_records(
            [
                GenerationRecord.build("ok", "line_completion", "x", token_logprobs=[-0.1]),
                GenerationRecord.build("bad", "line_completion", "x", token_logprobs=[0.3]),
            ],
            p,
        )
        assert main(["validate", str(p)]) == 1
        out = capsys.readouterr().out.splitlines()
        assert [line for line in out if ": bad: " in line] and out[-1] == "1 violation(s)"

    def test_missing_file(self, tmp_path):
        assert main(["validate", str(tmp_path / "nope.jsonl")]) == 2


class TestAnalyze:
    def test_all_measures(self, corpus_path, tmp_path):
        out = tmp_path / "out"
        assert main(["analyze", "--input", str(corpus_path), "--out", str(out)]) == 0
        assert len(list(out.glob("reliability_*.svg"))) == 12
        table = (out / "calibration_table.md").read_text().splitlines()
        rows = [r for r in table if r.startswith("| ") and "all_pass" in r]
        assert len(rows) == 12
        assert sum("| no " in r for r in rows) == 6 and sum("| yes " in r for r in rows) == 6
        assert (out / "correctness_crosstab.md").exists()

    def test_matches_direct_module_calls(self, corpus_path, tmp_path):
        records = load_records(corpus_path)
        result = analyze(records, RunConfig(out=str(tmp_path / "o"), seed=4), write=False)
        correct = label_records(records, "all_pass")
        for measure in ALL_MEASURES:
            conf = ConfidenceScorer(measure.value).fit(records).transform(records)
            raw = result.reports[(measure.value, "all_pass", "raw")]
            assert raw.brier == brier(conf, correct)
            assert raw.ece == ece(bin_samples(conf, correct))
            assert raw.auc == auc_roc(conf, correct)
            scaled_conf = cross_fold_rescale(conf, correct, k=5, seed=4)
            scaled = result.reports[(measure.value, "all_pass", "scaled")]
            assert scaled == report(scaled_conf, correct, rescaled=True)

    def test_json_report(self, corpus_path, tmp_path):
        out = tmp_path / "j"
        assert main(["analyze", "--input", str(corpus_path), "--out", str(out), "--measures", "avg_prob,ask_tf"]) == 0
        payload = json.loads((out / "calibration_report.json").read_text())
        assert sorted(payload["measures"]) == ["ask_tf", "avg_prob"]
        assert set(payload["measures"]["avg_prob"]) == {"raw", "scaled", "fallback_used"}

    def test_all_pass_without_reports(self, tmp_path):
        p = tmp_path / "c.jsonl"
        save_records(
            [GenerationRecord.build(f"r{i}", "line_completion", "x", token_logprobs=[-0.1 * i]) for i in range(20)], p
        )
        assert main(["analyze", "--input", str(p), "--notion", "all-pass", "--out", str(tmp_path / "o")]) == 1

    def test_skips_measures_with_missing_fields(self, tmp_path):
        recs = [
            GenerationRecord.build(
                f"r{i}",
                "line_completion",
                "x" * (1 + i % 7),
                token_logprobs=[-0.05 * (i % 10)],
                test_report=TestReport(1, i % 3, True),
            )
            for i in range(60)
        ]
        p = tmp_path / "c.jsonl"
        save_records(recs, p)
        out = tmp_path / "o"
        assert main(["analyze", "--input", str(p), "--out", str(out)]) == 0
        payload = json.loads((out / "calibration_report.json").read_text())
        assert set(payload["skipped"]) == {"verbalize", "ask_tf", "ask_tf_norm"}
        assert main(["analyze", "--input", str(p), "--out", str(out), "--measures", "verbalize"]) == 1

    def test_deterministic(self, corpus_path, tmp_path):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert main(["analyze", "--input", str(corpus_path), "--out", str(out), "--seed", "9"]) == 0
            outs.append({f.name: f.read_bytes() for f in sorted(out.iterdir())})
        assert outs[0] == outs[1]

    @pytest.mark.parametrize(
        "flags",
        [["--folds", "1"], ["--bins", "0"], ["--epsilon", "0.7"], ["--measures", "nonsense"], ["--scheme", "log"]],
    )
    def test_bad_config(self, corpus_path, tmp_path, flags):
        assert main(["analyze", "--input", str(corpus_path), "--out", str(tmp_path), *flags]) == 3

    def test_missing_input(self, tmp_path):
        assert main(["analyze", "--input", str(tmp_path / "none.jsonl"), "--out", str(tmp_path)]) == 2


def test_usage_errors_exit_3():
    assert main(["analyze"]) == 3
    assert main(["frobnicate"]) == 3


class TestSynth:
    def test_small_n_rejected(self, tmp_path):
        assert main(["synth", "--n", "50", "--out", str(tmp_path / "x.jsonl")]) == 3

    def test_deterministic_bytes(self, tmp_path):
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        main(["synth", "--n", "200", "--seed", "5", "--out", str(a)])
        main(["synth", "--n", "200", "--seed", "5", "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_calibrated_profile(self):
        recs = synth_corpus(10_000, seed=0, profile="calibrated")
        conf = ConfidenceScorer("avg_prob").fit(recs).transform(recs)
        assert ece(bin_samples(conf, label_records(recs, "all_pass"))) < 0.03

    def test_uninformative_profile(self):
        recs = synth_corpus(10_000, seed=0, profile="uninformative")
        conf = ConfidenceScorer("avg_prob").fit(recs).transform(recs)
        assert abs(auc_roc(conf, label_records(recs, "all_pass")) - 0.5) < 0.02

    def test_overconfident_profile(self):
        recs = synth_corpus(10_000, seed=0, profile="overconfident")
        conf = ConfidenceScorer("avg_prob").fit(recs).transform(recs)
        y = label_records(recs, "all_pass")
        raw = ece(bin_samples(conf, y))
        assert raw > 0.05
        assert ece(bin_samples(cross_fold_rescale(conf, y), y)) < raw

    def test_records_are_valid(self):
        from codecalib.records import validate_record

        assert all(validate_record(r) == [] for r in synth_corpus(300, seed=1, profile="calibrated"))
