"""Corpus handling, synthesis, and predictor table construction."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_m1
from ctxpred.corpus import (
    AggregatedToken,
    TokenObservation,
    aggregate_participants,
    generate_synthetic,
    kfold,
    parse_corpus,
    standardize,
    standardize_stats,
    write_corpus_tsv,
)
from ctxpred.errors import (
    ConfigError,
    CoverageError,
    DegenerateError,
    FormatError,
)
from ctxpred.hilbert import MeasureTable
from ctxpred.lm import EnumerationBudget, unigram_minimizer
from ctxpred.predictors import (
    ExternalPredictorFile,
    build_predictor_table,
    frequency,
    frequency_variable,
    parse_external_tsv,
    pmi,
    pmi_variable,
    surprisal,
    surprisal_variable,
    table_columns,
    write_external_tsv,
)


def obs(participant, doc, idx, token, rt, skipped=False, sent=0):
    return TokenObservation(
        participant=participant,
        doc_id=doc,
        sentence_id=sent,
        token_idx=idx,
        token=token,
        rt_ms=rt,
        skipped=skipped,
    )


class TestParsing:
    def test_roundtrip(self, tmp_path):
        rows = [obs("p0", "d0", 0, "a", 201.5), obs("p1", "d0", 0, "a", 188.0, True)]
        path = tmp_path / "c.tsv"
        write_corpus_tsv(rows, path)
        back, malformed = parse_corpus(path)
        assert malformed == []
        assert back == rows

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "c.tsv"
        path.write_text("a\tb\n1\t2\n")
        with pytest.raises(FormatError):
            parse_corpus(path)

    def test_few_malformed_rows_reported_not_fatal(self, tmp_path):
        path = tmp_path / "c.tsv"
        good = "p0\td0\t0\t{i}\ta\t200.0\t0"
        lines = [good.format(i=i) for i in range(40)]
        lines[7] = "p0\td0\t0\tseven\ta\t200.0\t0"
        path.write_text(
            "participant\tdoc_id\tsentence_id\ttoken_idx\ttoken\trt_ms\tskipped\n"
            + "\n".join(lines)
            + "\n"
        )
        rows, malformed = parse_corpus(path)
        assert len(rows) == 39
        assert len(malformed) == 1
        assert malformed[0][0] == 9  # 1-based line number, after the header

    def test_too_many_malformed_rows_fatal(self, tmp_path):
        path = tmp_path / "c.tsv"
        lines = ["p0\td0\t0\t0\ta\t200.0\t0", "junk", "more junk"]
        path.write_text(
            "participant\tdoc_id\tsentence_id\ttoken_idx\ttoken\trt_ms\tskipped\n"
            + "\n".join(lines)
            + "\n"
        )
        with pytest.raises(FormatError):
            parse_corpus(path)

    def test_negative_rt_is_malformed(self, tmp_path):
        path = tmp_path / "c.tsv"
        lines = ["p0\td0\t0\t%d\ta\t200.0\t0" % i for i in range(30)]
        lines.append("p0\td0\t0\t30\ta\t-5.0\t0")
        path.write_text(
            "participant\tdoc_id\tsentence_id\ttoken_idx\ttoken\trt_ms\tskipped\n"
            + "\n".join(lines)
            + "\n"
        )
        rows, malformed = parse_corpus(path)
        assert len(malformed) == 1


class TestAggregation:
    def test_mean_over_readers(self):
        rows = [
            obs("p0", "d0", 0, "a", 200.0),
            obs("p1", "d0", 0, "a", 300.0),
            obs("p2", "d0", 0, "a", 0.0, skipped=True),
        ]
        agg = aggregate_participants(rows)
        assert len(agg) == 1
        assert agg[0].rt_ms == pytest.approx(250.0)
        assert agg[0].n_readers == 2

    def test_all_skipped_dropped(self):
        rows = [
            obs("p0", "d0", 0, "a", 0.0, skipped=True),
            obs("p1", "d0", 0, "a", 0.0, skipped=True),
            obs("p0", "d0", 1, "b", 150.0),
        ]
        agg = aggregate_participants(rows)
        assert [t.token_idx for t in agg] == [1]

    def test_token_disagreement_rejected(self):
        rows = [obs("p0", "d0", 0, "a", 200.0), obs("p1", "d0", 0, "b", 300.0)]
        with pytest.raises(FormatError):
            aggregate_participants(rows)


class TestStandardize:
    def test_basic(self):
        v = np.array([1.0, 2.0, 3.0, 4.0])
        s = standardize(v)
        assert s.mean() == pytest.approx(0.0, abs=1e-12)
        assert np.std(s, ddof=1) == pytest.approx(1.0, rel=1e-12)

    def test_uses_sample_sd(self):
        v = np.array([0.0, 2.0])
        _, sd = standardize_stats(v)
        assert sd == pytest.approx(np.sqrt(2.0))

    def test_zero_variance_rejected(self):
        with pytest.raises(DegenerateError):
            standardize(np.array([3.0, 3.0, 3.0]), label="len")

    @given(seed=st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=25, deadline=None)
    def test_idempotent(self, seed):
        rng = np.random.default_rng(seed)
        v = rng.normal(size=20) * 7.0 + 3.0
        once = standardize(v)
        twice = standardize(once)
        assert np.allclose(once, twice, atol=1e-10)


class TestFolds:
    def test_partition_and_balance(self):
        fa = kfold(103, 10, seed=5)
        sizes = [fa.test_idx(f).size for f in range(10)]
        assert sum(sizes) == 103
        assert max(sizes) - min(sizes) <= 1
        all_idx = np.concatenate([fa.test_idx(f) for f in range(10)])
        assert sorted(all_idx.tolist()) == list(range(103))

    def test_train_test_disjoint(self):
        fa = kfold(50, 5, seed=1)
        for f in range(5):
            assert not set(fa.test_idx(f)) & set(fa.train_idx(f))

    def test_seed_determinism(self):
        a = kfold(64, 4, seed=9)
        b = kfold(64, 4, seed=9)
        c = kfold(64, 4, seed=10)
        assert np.array_equal(a.fold_of_row, b.fold_of_row)
        assert not np.array_equal(a.fold_of_row, c.fold_of_row)

    def test_document_mode_keeps_docs_whole(self):
        doc_ids = [f"d{i//7}" for i in range(70)]
        fa = kfold(70, 5, seed=3, doc_ids=doc_ids)
        assert fa.mode == "document"
        for d in set(doc_ids):
            rows = [i for i, x in enumerate(doc_ids) if x == d]
            assert len({int(fa.fold_of_row[i]) for i in rows}) == 1

    def test_config_errors(self):
        with pytest.raises(ConfigError):
            kfold(10, 1, seed=0)
        with pytest.raises(ConfigError):
            kfold(3, 5, seed=0)
        with pytest.raises(ConfigError):
            kfold(10, 5, seed=0, doc_ids=["d0"] * 10)


class TestScalarPredictors:
    def test_m1_frozen_values(self, m1):
        q = unigram_minimizer(m1)
        s = surprisal(m1, (), "a")
        f = frequency(q, "a")
        assert s == pytest.approx(0.2231435513, abs=1e-9)
        assert f == pytest.approx(math.log(31.0 / 16.0), abs=1e-12)
        assert f == pytest.approx(0.6613984822, abs=1e-9)
        assert pmi(m1, q, (), "a") == pytest.approx(f - s, abs=1e-12)
        assert pmi(m1, q, (), "a") == pytest.approx(0.4382549309, abs=1e-9)

    def test_pmi_is_exactly_the_difference(self, m0):
        q = unigram_minimizer(m0)
        for ctx in [(), ("a",), ("b", "a")]:
            for u in ("a", "b"):
                assert pmi(m0, q, ctx, u) == frequency(q, u) - surprisal(m0, ctx, u)

    def test_memoryless_pmi_is_zero(self, m0):
        q = unigram_minimizer(m0)
        assert pmi(m0, q, ("b", "b", "a"), "a") == pytest.approx(0.0, abs=1e-12)


class TestTableInternal:
    def agg(self, doc, idx, token, sent=0, rt=200.0):
        return AggregatedToken(
            doc_id=doc, sentence_id=sent, token_idx=idx, token=token, rt_ms=rt
        )

    def test_context_resets_per_sentence(self, m1):
        toks = [
            self.agg("d0", 0, "a", sent=0),
            self.agg("d0", 1, "a", sent=0),
            self.agg("d0", 2, "a", sent=1),
        ]
        recs = build_predictor_table(toks, m1)
        assert recs[0].surprisal == pytest.approx(-math.log(0.8))
        assert recs[1].surprisal == pytest.approx(-math.log(0.25))
        # new sentence, context starts over
        assert recs[2].surprisal == pytest.approx(-math.log(0.8))

    def test_spillover_crosses_sentences_within_doc(self, m1):
        toks = [
            self.agg("d0", 0, "a", sent=0),
            self.agg("d0", 1, "a", sent=1),
            self.agg("d1", 0, "a", sent=0),
        ]
        recs = build_predictor_table(toks, m1)
        assert recs[0].prev_surprisal is None
        assert recs[1].prev_surprisal == pytest.approx(recs[0].surprisal)
        assert recs[1].prev_length == 1.0
        # new document: spillover resets
        assert recs[2].prev_surprisal is None

    def test_unknown_token_coverage_error(self, m1):
        toks = [self.agg("d0", 0, "zzz")]
        with pytest.raises(CoverageError) as err:
            build_predictor_table(toks, m1)
        assert "zzz" in str(err.value)

    def test_reading_time_carried(self, m1):
        toks = [self.agg("d0", 0, "a", rt=123.0)]
        recs = build_predictor_table(toks, m1)
        assert recs[0].rt_ms == 123.0

    def test_columns_with_nan_spillover(self, m1):
        toks = [self.agg("d0", 0, "a"), self.agg("d0", 1, "a")]
        recs = build_predictor_table(toks, m1)
        cols = table_columns(recs, ["surprisal", "prev_surprisal"])
        assert math.isnan(cols["prev_surprisal"][0])
        assert cols["prev_surprisal"][1] == pytest.approx(recs[0].surprisal)


class TestTableExternal:
    def write(self, tmp_path, lines):
        path = tmp_path / "ext.tsv"
        path.write_text("doc_id\ttoken_idx\ttoken\tsurprisal\tfrequency\n" + lines)
        return path

    def test_join(self, tmp_path):
        path = self.write(tmp_path, "d0\t0\tcat\t2.5\t3.0\nd0\t1\tsat\t1.5\t2.0\n")
        ext = parse_external_tsv(path)
        toks = [
            AggregatedToken("d0", 0, 0, "cat", 180.0),
            AggregatedToken("d0", 0, 1, "sat", 190.0),
        ]
        recs = build_predictor_table(toks, ext)
        assert recs[0].surprisal == 2.5
        assert recs[0].pmi == pytest.approx(0.5)
        assert recs[0].length == 3.0
        assert recs[1].prev_frequency == pytest.approx(3.0)

    def test_missing_row_named(self, tmp_path):
        path = self.write(tmp_path, "d0\t0\tcat\t2.5\t3.0\n")
        ext = parse_external_tsv(path)
        toks = [
            AggregatedToken("d0", 0, 0, "cat", 180.0),
            AggregatedToken("d0", 0, 1, "sat", 190.0),
        ]
        with pytest.raises(CoverageError) as err:
            build_predictor_table(toks, ext)
        assert "sat" in str(err.value)
        assert err.value.missing == [("d0", 1, "sat")]

    def test_token_mismatch_is_missing(self, tmp_path):
        path = self.write(tmp_path, "d0\t0\tdog\t2.5\t3.0\n")
        ext = parse_external_tsv(path)
        toks = [AggregatedToken("d0", 0, 0, "cat", 180.0)]
        with pytest.raises(CoverageError):
            build_predictor_table(toks, ext)

    def test_schema_violations(self, tmp_path):
        with pytest.raises(FormatError):
            parse_external_tsv(self.write(tmp_path, "d0\t0\tcat\t2.5\n"))
        with pytest.raises(FormatError):
            parse_external_tsv(self.write(tmp_path, "d0\t0\tcat\t-1.0\t3.0\n"))
        with pytest.raises(FormatError):
            parse_external_tsv(
                self.write(tmp_path, "d0\t1\tcat\t1.0\t3.0\nd0\t0\tsat\t1.0\t2.0\n")
            )
        with pytest.raises(FormatError):
            parse_external_tsv(
                self.write(tmp_path, "d0\t0\tcat\t1.0\t3.0\nd0\t0\tcat\t1.0\t2.0\n")
            )

    def test_roundtrip(self, tmp_path, m1):
        toks = [AggregatedToken("d0", 0, i, "a", 100.0) for i in range(3)]
        recs = build_predictor_table(toks, m1)
        path = tmp_path / "ext.tsv"
        write_external_tsv(recs, path)
        back = parse_external_tsv(path)
        again = build_predictor_table(toks, back)
        for a, b in zip(recs, again):
            assert a.surprisal == b.surprisal
            assert a.frequency == b.frequency


class TestExactVariables:
    def test_memoryless_surprisal_equals_frequency(self, m0):
        t = MeasureTable.from_lm(m0, EnumerationBudget(max_len=64, tail_tol=1e-4))
        s = surprisal_variable(t)
        f = frequency_variable(t)
        assert np.allclose(s.values, f.values, atol=1e-12)
        assert np.allclose(pmi_variable(t).values, 0.0, atol=1e-12)

    def test_pmi_identity_on_context_model(self, m1):
        t = MeasureTable.from_lm(m1, EnumerationBudget(max_len=64, tail_tol=1e-6))
        p = pmi_variable(t)
        s = surprisal_variable(t)
        f = frequency_variable(t)
        assert np.allclose(p.values, f.values - s.values, atol=1e-15)


class TestSynthesis:
    def test_deterministic(self, m1):
        a = generate_synthetic(m1, {"intercept": 100.0}, 1.0, 5, 8, seed=11)
        b = generate_synthetic(m1, {"intercept": 100.0}, 1.0, 5, 8, seed=11)
        c = generate_synthetic(m1, {"intercept": 100.0}, 1.0, 5, 8, seed=12)
        assert a.observations == b.observations
        assert a.observations != c.observations

    def test_noiseless_times_are_exactly_affine(self):
        m1 = make_m1()
        coeffs = {"intercept": 120.0, "surprisal": 10.0, "frequency": -5.0}
        out = generate_synthetic(m1, coeffs, 0.0, 4, 6, seed=2)
        by_key = {(r.doc_id, r.token_idx): r for r in out.records}
        for o in out.observations:
            rec = by_key[(o.doc_id, o.token_idx)]
            want = 120.0 + 10.0 * rec.surprisal - 5.0 * rec.frequency
            assert o.rt_ms == pytest.approx(want, abs=1e-12)

    def test_doc_len_reached(self, m1):
        out = generate_synthetic(m1, {"intercept": 100.0}, 0.0, 3, 10, seed=4)
        per_doc = {}
        for r in out.records:
            per_doc[r.doc_id] = per_doc.get(r.doc_id, 0) + 1
        assert len(per_doc) == 3
        assert all(n >= 10 for n in per_doc.values())

    def test_sidecar_contents(self, m1):
        out = generate_synthetic(m1, {"intercept": 100.0}, 2.0, 2, 4, seed=7)
        assert out.sidecar == {
            "true_coeffs": {"intercept": 100.0},
            "noise_sd": 2.0,
            "seed": 7,
        }

    def test_negative_time_rejected(self, m1):
        with pytest.raises(ConfigError):
            generate_synthetic(m1, {"intercept": 0.5}, 10.0, 2, 4, seed=1)

    def test_unknown_coefficient_rejected(self, m1):
        with pytest.raises(ConfigError):
            generate_synthetic(m1, {"wibble": 1.0}, 1.0, 2, 4, seed=1)

    def test_participants_share_tokens(self, m1):
        out = generate_synthetic(
            m1, {"intercept": 100.0}, 1.0, 2, 5, seed=3, n_participants=3
        )
        participants = {o.participant for o in out.observations}
        assert len(participants) == 3
        agg = aggregate_participants(out.observations)
        assert len(agg) == len(out.records)
        assert all(t.n_readers == 3 for t in agg)
