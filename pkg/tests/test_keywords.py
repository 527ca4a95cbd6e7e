"""Lexicon, scanner, mention matrix, and facet aggregation tests."""

from datetime import date

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from filings_factor_miner import keywords as kw
from filings_factor_miner.corpus import load_local_corpus
from filings_factor_miner.errors import InputError
from filings_factor_miner.windows import DateRange

from conftest import make_record, write_corpus

LEX = kw.default_lexicon()
IN_SAMPLE = DateRange(date(2019, 1, 1), date(2021, 1, 1))


class TestLexicon:
    def test_default_has_21_unique_lowercase_phrases(self):
        assert len(LEX) == 21
        assert len(set(LEX.phrases)) == 21
        assert all(p == p.lower() and p for p in LEX.phrases)
        assert LEX.labels == LEX.phrases

    def test_order_is_fixed(self):
        assert LEX.phrases[0] == "greenhouse"
        assert LEX.phrases[2] == "ghg"
        assert LEX.phrases[-1] == "competitive behavior"

    def test_json_round_trip(self):
        again = kw.Lexicon.from_json(LEX.to_json())
        assert again == LEX

    def test_duplicate_label_rejected(self):
        with pytest.raises(InputError):
            kw.Lexicon((kw.LexiconEntry("a", "x"), kw.LexiconEntry("a", "y")))

    def test_uppercase_phrase_rejected(self):
        with pytest.raises(InputError):
            kw.Lexicon((kw.LexiconEntry("a", "GHG"),))

    def test_sasb_map_covers_all_default_phrases(self):
        categories = kw.sasb_category_map()
        assert len(categories) == 22
        mapped = [p for c in categories for p in c["phrases"]]
        assert sorted(mapped) == sorted(LEX.phrases)


class TestScanText:
    def test_empty_document_is_all_zeros(self):
        assert kw.scan_text("", LEX).sum() == 0

    def test_hand_counted_fixture_string(self):
        text = "Our GHG targets: ghg down. Greenhouse gas emissions and air  quality."
        counts = dict(zip(LEX.labels, kw.scan_text(text, LEX)))
        assert counts["ghg"] == 2
        assert counts["greenhouse"] == 1
        assert counts["emissions"] == 1
        assert counts["air quality"] == 1
        assert sum(counts.values()) == 5

    @pytest.mark.parametrize("k", [1, 2, 7, 40])
    @pytest.mark.parametrize("phrase", ["ghg", "air quality", "access and affordability"])
    def test_repeated_phrase_counts_k(self, phrase, k):
        doc = " ".join([phrase] * k)
        counts = dict(zip(LEX.labels, kw.scan_text(doc, LEX)))
        assert counts[phrase] == k

    def test_multiword_whitespace_runs_and_newlines(self):
        assert kw.scan_text("air \t\n  quality", LEX)[LEX.labels.index("air quality")] == 1

    def test_case_invariance(self):
        text = "Diversity and inclusion; GHG emissions rose. Data Security matters."
        assert (kw.scan_text(text, LEX) == kw.scan_text(text.upper(), LEX)).all()

    def test_substring_matching_by_default(self):
        # "ghg" inside an arbitrary token still matches unless word_boundary is set
        assert kw.scan_text("xxghgxx", LEX)[LEX.labels.index("ghg")] == 1
        assert kw.scan_text("xxghgxx", LEX, word_boundary=True)[LEX.labels.index("ghg")] == 0
        assert kw.scan_text("the ghg cap", LEX, word_boundary=True)[LEX.labels.index("ghg")] == 1

    def test_non_overlapping_left_to_right(self):
        lex = kw.Lexicon((kw.LexiconEntry("aa", "aa"),))
        assert kw.scan_text("aaa", lex)[0] == 1
        assert kw.scan_text("aaaa", lex)[0] == 2

    @settings(max_examples=60, deadline=None)
    @given(st.text(alphabet=st.characters(min_codepoint=32, max_codepoint=126), max_size=300))
    def test_case_invariance_property(self, text):
        assert (kw.scan_text(text, LEX) == kw.scan_text(text.upper(), LEX)).all()

    @settings(max_examples=60, deadline=None)
    @given(
        st.text(alphabet="ghair qualemison \n", max_size=120),
        st.text(alphabet="ghair qualemison \n", max_size=60),
    )
    def test_appending_text_never_decreases_counts(self, base, extra):
        assert (kw.scan_text(base + extra, LEX) >= kw.scan_text(base, LEX)).all()


def corpus_with(tmp_path, specs):
    """specs: list of (ticker, form, filed, body)."""
    records, texts = [], {}
    for i, (ticker, form, filed, body) in enumerate(specs, start=1):
        rel = f"texts/{ticker}_{i}.txt"
        cik = f"{hash(ticker) % 10**6:010d}"
        records.append(
            make_record(
                ticker=ticker,
                cik=cik,
                accession=f"{cik}-{filed[2:4]}-{i:06d}",
                form_type=form,
                filing_date=filed,
                text_path=rel,
            )
        )
        texts[rel] = body
    return load_local_corpus(write_corpus(tmp_path / "corpus", records, texts))


class TestBuildMatrix:
    def test_counts_add_across_filings_and_dummy_caps_at_one(self, tmp_path):
        corpus = corpus_with(
            tmp_path,
            [
                ("AAA", "10-K", "2019-05-01", "diversity first"),
                ("AAA", "8-K", "2020-05-01", "diversity again"),
            ],
        )
        matrix, excluded = kw.build_matrix(corpus, LEX, IN_SAMPLE)
        j = LEX.labels.index("diversity")
        assert matrix.counts[0, j] == 2
        assert matrix.dummy[0, j] == 1
        assert excluded == []

    def test_company_outside_period_excluded_and_reported(self, tmp_path):
        corpus = corpus_with(
            tmp_path,
            [
                ("AAA", "10-K", "2019-05-01", "diversity"),
                ("ZZZ", "10-K", "2021-05-01", "emissions"),
            ],
        )
        matrix, excluded = kw.build_matrix(corpus, LEX, IN_SAMPLE)
        assert matrix.companies == ("AAA",)
        assert excluded == ["ZZZ"]

    def test_empty_after_filter_is_an_error(self, tmp_path):
        corpus = corpus_with(tmp_path, [("AAA", "10-K", "2022-05-01", "diversity")])
        with pytest.raises(InputError):
            kw.build_matrix(corpus, LEX, IN_SAMPLE)

    def test_matrix_matches_per_filing_brute_force(self, tmp_path):
        rng = np.random.default_rng(7)
        tickers = ["AAA", "BBB", "CCC", "DDD"]
        phrases = ["diversity", "emissions", "ghg", "air quality"]
        specs = []
        expected = {t: np.zeros(len(LEX), dtype=int) for t in tickers}
        for t in tickers:
            for i in range(3):
                parts = []
                for p in phrases:
                    reps = int(rng.integers(0, 4))
                    parts.extend([p] * reps)
                    expected[t][LEX.labels.index(p)] += reps
                rng.shuffle(parts)
                specs.append((t, "10-K", f"2019-0{i + 1}-15", " xx ".join(parts)))
        corpus = corpus_with(tmp_path, specs)
        matrix, _ = kw.build_matrix(corpus, LEX, IN_SAMPLE)
        for i, t in enumerate(matrix.companies):
            assert (matrix.counts[i] == expected[t]).all()

    def test_row_order_is_sorted_tickers(self, tmp_path):
        corpus = corpus_with(
            tmp_path,
            [
                ("ZED", "10-K", "2019-05-01", "ghg"),
                ("ALF", "10-K", "2019-06-01", "ghg"),
            ],
        )
        matrix, _ = kw.build_matrix(corpus, LEX, IN_SAMPLE)
        assert matrix.companies == ("ALF", "ZED")


class TestFacets:
    def test_single_year_degenerate_facet_equals_column_sums(self, tmp_path):
        corpus = corpus_with(
            tmp_path,
            [
                ("AAA", "10-K", "2019-03-01", "diversity diversity"),
                ("BBB", "10-K", "2019-04-01", "emissions"),
            ],
        )
        table = kw.facet_breakdown(corpus, LEX, "year")
        matrix, _ = kw.build_matrix(corpus, LEX, IN_SAMPLE)
        totals = matrix.counts.sum(axis=0)
        for j, label in enumerate(LEX.labels):
            assert table.cells[("2019", label)].count == totals[j]

    def test_absent_keyword_is_zero_count_zero_share(self, tmp_path):
        corpus = corpus_with(tmp_path, [("AAA", "10-K", "2019-03-01", "nothing here")])
        table = kw.facet_breakdown(corpus, LEX, "form_type")
        cell = table.cells[("10-K", "wastewater")]
        assert cell.count == 0 and cell.share_pct == 0.0

    def test_two_form_types_hand_computed(self, tmp_path):
        corpus = corpus_with(
            tmp_path,
            [
                ("AAA", "10-K", "2019-03-01", "diversity diversity"),
                ("AAA", "8-K", "2019-04-01", "diversity"),
                ("BBB", "10-K", "2019-05-01", "no match"),
            ],
        )
        table = kw.facet_breakdown(corpus, LEX, "form_type")
        assert table.cells[("10-K", "diversity")].count == 2
        assert table.cells[("10-K", "diversity")].share_pct == pytest.approx(50.0)
        assert table.cells[("8-K", "diversity")].count == 1
        assert table.cells[("8-K", "diversity")].share_pct == pytest.approx(100.0)
        assert table.group_sizes == {"10-K": 2, "8-K": 1}

    def test_empty_state_grouped_as_unknown(self, tmp_path):
        records = [make_record(state_of_incorporation="", text_path="texts/a.txt")]
        corpus = load_local_corpus(write_corpus(tmp_path / "c", records, {"texts/a.txt": "ghg"}))
        table = kw.facet_breakdown(corpus, LEX, "state")
        assert table.cells[("unknown", "ghg")].count == 1

    def test_facet_partition_column_sums_match_matrix(self, tmp_path):
        corpus = corpus_with(
            tmp_path,
            [
                ("AAA", "10-K", "2019-03-01", "diversity emissions emissions"),
                ("BBB", "8-K", "2020-04-01", "ghg diversity"),
                ("CCC", "DEF 14A", "2020-06-01", "air quality"),
            ],
        )
        matrix, _ = kw.build_matrix(corpus, LEX, IN_SAMPLE)
        for facet in kw.FACETS:
            table = kw.facet_breakdown(corpus, LEX, facet)
            for j, label in enumerate(LEX.labels):
                total = sum(
                    cell.count for (value, lbl), cell in table.cells.items() if lbl == label
                )
                assert total == matrix.counts[:, j].sum(), (facet, label)

    def test_unknown_facet_rejected(self, tmp_path):
        corpus = corpus_with(tmp_path, [("AAA", "10-K", "2019-03-01", "x")])
        with pytest.raises(InputError):
            kw.facet_breakdown(corpus, LEX, "color")


class TestDummyLaw:
    @settings(max_examples=40, deadline=None)
    @given(
        st.lists(
            st.lists(st.integers(min_value=0, max_value=5), min_size=4, max_size=4),
            min_size=1,
            max_size=6,
        )
    )
    def test_dummy_equals_count_at_least_one(self, rows):
        lex = kw.Lexicon(tuple(kw.LexiconEntry(p, p) for p in ("aa", "bb", "cc", "dd")))
        companies = tuple(f"T{i:02d}" for i in range(len(rows)))
        matrix = kw.MentionMatrix(
            companies, lex, np.array(rows, dtype=np.int64), IN_SAMPLE
        )
        assert (matrix.dummy == (matrix.counts >= 1).astype(int)).all()
