"""Local corpus loading, cache behavior, rate limiting, and the EDGAR client."""

from datetime import date

import httpx
import pytest

from filings_factor_miner import corpus as cm
from filings_factor_miner.errors import InputError, NetworkError
from filings_factor_miner.windows import DateRange

from conftest import make_record, write_corpus

RANGE_2019_22 = DateRange(date(2019, 1, 1), date(2022, 1, 1))


class FakeClock:
    def __init__(self):
        self.now = 0.0

    def __call__(self) -> float:
        return self.now

    def sleep(self, dt: float) -> None:
        assert dt >= 0
        self.now += dt


class TestLocalCorpus:
    def test_empty_index_gives_empty_corpus(self, tmp_path):
        root = write_corpus(tmp_path / "c", [], {})
        index = cm.load_local_corpus(root)
        assert index.records == ()
        assert index.source == "local"

    def test_records_sorted_regardless_of_disk_order(self, tmp_path):
        records = [
            make_record(ticker="ZZZ", accession="acc-3", filing_date="2019-01-02", text_path="t/z.txt"),
            make_record(ticker="AAA", accession="acc-2", filing_date="2020-01-02", text_path="t/a2.txt"),
            make_record(ticker="AAA", accession="acc-1", filing_date="2019-01-02", text_path="t/a1.txt"),
        ]
        texts = {"t/z.txt": "z", "t/a1.txt": "a", "t/a2.txt": "a"}
        index = cm.load_local_corpus(write_corpus(tmp_path / "c", records, texts))
        assert [r.accession for r in index.records] == ["acc-1", "acc-2", "acc-3"]

    def test_missing_text_file_is_hard_error_naming_path(self, tmp_path):
        records = [make_record(text_path="t/gone.txt")]
        root = write_corpus(tmp_path / "c", records, {"t/gone.txt": "x"})
        (root / "t/gone.txt").unlink()
        with pytest.raises(InputError, match="gone.txt"):
            cm.load_local_corpus(root)

    def test_malformed_index_reports_line(self, tmp_path):
        root = tmp_path / "c"
        root.mkdir()
        (root / "index.json").write_text('{\n  "records": [,]\n}')
        with pytest.raises(InputError, match="line 2"):
            cm.load_local_corpus(root)

    def test_duplicate_accession_rejected(self, tmp_path):
        records = [
            make_record(accession="dup", text_path="t/a.txt"),
            make_record(ticker="BBB", accession="dup", text_path="t/b.txt"),
        ]
        texts = {"t/a.txt": "a", "t/b.txt": "b"}
        with pytest.raises(InputError, match="dup"):
            cm.load_local_corpus(write_corpus(tmp_path / "c", records, texts))

    def test_filing_year_must_match_date(self):
        with pytest.raises(InputError):
            cm.FilingRecord(
                ticker="AAA",
                cik="0000000001",
                accession="a",
                form_type="10-K",
                filing_date=date(2019, 5, 1),
                filing_year=2020,
                sic_industry="",
                state_of_incorporation="",
                text_path="x",
            )

    def test_load_is_deterministic(self, tmp_path):
        records = [make_record(text_path="t/a.txt")]
        root = write_corpus(tmp_path / "c", records, {"t/a.txt": "hello"})
        a = cm.load_local_corpus(root)
        b = cm.load_local_corpus(root)
        assert a == b


class TestImportLocalCorpus:
    def test_import_copies_into_cache_layout(self, tmp_path, golden_dir):
        cache = tmp_path / "cache"
        index, stats = cm.import_local_corpus(golden_dir / "corpus", cache)
        assert stats["records"] == 18
        assert stats["copied"] == 18 and stats["cache_hits"] == 0
        assert (cache / "index.json").is_file()
        first = index.records[0]
        assert first.text_path == cache / first.cik / f"{first.accession}.txt"

    def test_second_import_is_all_cache_hits_and_byte_identical(self, tmp_path, golden_dir):
        cache = tmp_path / "cache"
        cm.import_local_corpus(golden_dir / "corpus", cache, fetched_at="t0")
        snapshot = {p: p.read_bytes() for p in cache.rglob("*") if p.is_file()}
        _, stats = cm.import_local_corpus(golden_dir / "corpus", cache, fetched_at="t0")
        assert stats["cache_hits"] == 18 and stats["copied"] == 0
        assert snapshot == {p: p.read_bytes() for p in cache.rglob("*") if p.is_file()}

    def test_filters_apply(self, tmp_path, golden_dir):
        index, _ = cm.import_local_corpus(
            golden_dir / "corpus",
            tmp_path / "cache",
            tickers=["ALFA"],
            period=DateRange(date(2019, 1, 1), date(2020, 1, 1)),
        )
        assert [r.form_type for r in index.records] == ["10-K"]

    def test_three_file_mirror_yields_three_matching_records(self, tmp_path):
        records = [
            make_record(accession="m-1", filing_date="2019-02-01", text_path="t/1.txt"),
            make_record(accession="m-2", filing_date="2019-06-01", form_type="8-K", text_path="t/2.txt"),
            make_record(ticker="BBB", cik="0000000002", accession="m-3",
                        filing_date="2020-03-01", text_path="t/3.txt"),
        ]
        texts = {"t/1.txt": "one", "t/2.txt": "two", "t/3.txt": "three"}
        mirror = write_corpus(tmp_path / "mirror", records, texts)
        index, stats = cm.import_local_corpus(mirror, tmp_path / "cache")
        assert stats["records"] == 3
        assert [(r.ticker, r.accession, r.form_type) for r in index.records] == [
            ("ALFA", "m-1", "10-K"),
            ("ALFA", "m-2", "8-K"),
            ("BBB", "m-3", "10-K"),
        ]
        for r in index.records:
            assert r.text_path.is_file()


class TestStripMarkup:
    def test_tags_removed_entities_decoded(self):
        html_doc = "<html><body><p>GHG &amp; emissions</p><td>air</td><td>quality</td></body></html>"
        text = cm.strip_markup(html_doc)
        assert "GHG & emissions" in text
        assert "<" not in text
        # adjacent cells must not weld into one token
        assert "air quality" in text

    def test_script_and_style_dropped(self):
        doc = "<script>var diversity = 1;</script><style>.x{}</style><p>inclusion</p>"
        text = cm.strip_markup(doc)
        assert "diversity" not in text
        assert "inclusion" in text

    def test_plain_text_passes_through(self):
        assert cm.strip_markup("just text, no tags") == "just text, no tags"


class TestTokenBucket:
    def test_rate_ceiling_never_exceeded(self):
        clock = FakeClock()
        bucket = cm.TokenBucket(8.0, clock=clock, sleep=clock.sleep)
        stamps = []
        for _ in range(50):
            bucket.acquire()
            stamps.append(clock.now)
        for i in range(len(stamps)):
            in_window = [t for t in stamps if stamps[i] <= t < stamps[i] + 1.0]
            assert len(in_window) <= 8

    def test_odd_rates_stay_under_ceiling(self):
        clock = FakeClock()
        bucket = cm.TokenBucket(3.0, clock=clock, sleep=clock.sleep)
        stamps = []
        for _ in range(25):
            bucket.acquire()
            stamps.append(clock.now)
        for i in range(len(stamps)):
            assert len([t for t in stamps if stamps[i] <= t < stamps[i] + 1.0]) <= 3

    def test_rejects_non_positive_rate(self):
        with pytest.raises(InputError):
            cm.TokenBucket(0.0)


COMPANY_TICKERS = {
    "0": {"cik_str": 70858, "ticker": "BAC", "title": "BANK OF AMERICA CORP"},
    "1": {"cik_str": 1090872, "ticker": "A", "title": "AGILENT TECHNOLOGIES"},
}


def submissions_payload(cik="0000070858", ticker="BAC"):
    return {
        "cik": cik,
        "tickers": [ticker],
        "sicDescription": "National Commercial Banks",
        "stateOfIncorporation": "DE",
        "filings": {
            "recent": {
                "form": ["10-K", "8-K", "S-4"],
                "filingDate": ["2020-02-19", "2021-04-15", "not-a-date"],
                "accessionNumber": ["0000070858-20-000012", "0000070858-21-000033", "0000070858-22-bad"],
                "primaryDocument": ["bac-10k.htm", "bac-8k.htm", "bad.htm"],
            },
            "files": [],
        },
    }


def edgar_transport(log=None):
    def handler(request: httpx.Request) -> httpx.Response:
        if log is not None:
            log.append(str(request.url))
        url = str(request.url)
        if url == cm.COMPANY_TICKERS_URL:
            return httpx.Response(200, json=COMPANY_TICKERS)
        if url.endswith("CIK0000070858.json"):
            return httpx.Response(200, json=submissions_payload())
        if "Archives" in url:
            name = url.rsplit("/", 1)[-1]
            return httpx.Response(200, text=f"<html><body>ghg emissions in {name}</body></html>")
        return httpx.Response(404, text="not found")

    return httpx.MockTransport(handler)


def make_client(tmp_path, log=None, **kw):
    clock = FakeClock()
    kw.setdefault("user_agent", "test suite test@example.com")
    kw.setdefault("parallelism", 1)
    return cm.EdgarClient(
        tmp_path / "cache",
        transport=edgar_transport(log),
        clock=clock,
        sleep=clock.sleep,
        **kw,
    )


class TestEdgarClient:
    def test_user_agent_mandatory(self, tmp_path, monkeypatch):
        monkeypatch.delenv(cm.USER_AGENT_ENV, raising=False)
        with pytest.raises(InputError, match="User-Agent"):
            cm.EdgarClient(tmp_path / "cache", transport=edgar_transport())

    def test_resolve_ciks_pins_bac(self, tmp_path):
        with make_client(tmp_path) as client:
            out = client.resolve_ciks(["BAC"])
        assert out == {"BAC": "0000070858"}

    def test_resolve_reports_unresolved_not_dropped(self, tmp_path):
        with make_client(tmp_path) as client:
            out = client.resolve_ciks(["BAC", "ZZZZZZZZ"])
        assert out["ZZZZZZZZ"] is None
        assert out["BAC"] == "0000070858"

    def test_resolve_empty_is_precondition_error(self, tmp_path):
        with make_client(tmp_path) as client:
            with pytest.raises(InputError):
                client.resolve_ciks([])
            with pytest.raises(InputError):
                client.resolve_ciks(["  "])

    def test_fetch_writes_cache_and_skips_malformed(self, tmp_path):
        with make_client(tmp_path) as client:
            records = client.fetch_filings("0000070858", RANGE_2019_22, ticker="BAC")
        assert [r.form_type for r in records] == ["10-K", "8-K"]
        r = records[0]
        assert r.sic_industry == "National Commercial Banks"
        assert r.state_of_incorporation == "DE"
        assert r.text_path.is_file()
        assert "ghg emissions" in r.text_path.read_text()
        assert "<" not in r.text_path.read_text()

    def test_refetch_of_cached_accessions_uses_no_network(self, tmp_path):
        log: list[str] = []
        with make_client(tmp_path, log=log) as client:
            first = client.fetch_filings("0000070858", RANGE_2019_22, ticker="BAC")
            calls_after_first = len(log)
            cache_bytes = {p: p.read_bytes() for p in (tmp_path / "cache").rglob("*") if p.is_file()}
            second = client.fetch_filings("0000070858", RANGE_2019_22, ticker="BAC")
        assert len(log) == calls_after_first
        assert first == second
        assert cache_bytes == {
            p: p.read_bytes() for p in (tmp_path / "cache").rglob("*") if p.is_file()
        }

    def test_date_range_excluding_all_filings_is_empty(self, tmp_path):
        with make_client(tmp_path) as client:
            records = client.fetch_filings(
                "0000070858", DateRange(date(1990, 1, 1), date(1991, 1, 1)), ticker="BAC"
            )
        assert records == []

    def test_form_filter(self, tmp_path):
        with make_client(tmp_path) as client:
            records = client.fetch_filings("0000070858", RANGE_2019_22, {"8-K"}, ticker="BAC")
        assert [r.form_type for r in records] == ["8-K"]

    def test_bad_cik_rejected(self, tmp_path):
        with make_client(tmp_path) as client:
            with pytest.raises(InputError):
                client.fetch_filings("70858", RANGE_2019_22)

    def test_rate_limit_429_raises_network_error_with_retry_after(self, tmp_path):
        def handler(request):
            return httpx.Response(429, headers={"Retry-After": "7"})

        clock = FakeClock()
        client = cm.EdgarClient(
            tmp_path / "cache",
            user_agent="t t@example.com",
            transport=httpx.MockTransport(handler),
            clock=clock,
            sleep=clock.sleep,
            max_retries=1,
        )
        with pytest.raises(NetworkError) as excinfo:
            client.resolve_ciks(["BAC"])
        assert excinfo.value.retry_after == 7.0

    def test_transport_error_becomes_network_error(self, tmp_path):
        def handler(request):
            raise httpx.ConnectError("boom")

        clock = FakeClock()
        client = cm.EdgarClient(
            tmp_path / "cache",
            user_agent="t t@example.com",
            transport=httpx.MockTransport(handler),
            clock=clock,
            sleep=clock.sleep,
            max_retries=0,
        )
        with pytest.raises(NetworkError):
            client.resolve_ciks(["BAC"])

    def test_parallel_downloads_share_one_limiter(self, tmp_path):
        stamps = []
        clock = FakeClock()

        def handler(request):
            stamps.append(clock.now)
            url = str(request.url)
            if url.endswith("CIK0000070858.json"):
                return httpx.Response(200, json=submissions_payload())
            return httpx.Response(200, text="<p>doc body</p>")

        client = cm.EdgarClient(
            tmp_path / "cache",
            user_agent="t t@example.com",
            rate_limit=4.0,
            transport=httpx.MockTransport(handler),
            clock=clock,
            sleep=clock.sleep,
            parallelism=3,
        )
        records = client.fetch_filings("0000070858", RANGE_2019_22, ticker="BAC")
        assert [r.form_type for r in records] == ["10-K", "8-K"]
        for i in range(len(stamps)):
            assert len([t for t in stamps if stamps[i] <= t < stamps[i] + 1.0]) <= 4

    def test_requests_respect_rate_ceiling(self, tmp_path):
        stamps = []
        clock = FakeClock()

        def handler(request):
            stamps.append(clock.now)
            return httpx.Response(200, json=COMPANY_TICKERS)

        client = cm.EdgarClient(
            tmp_path / "cache",
            user_agent="t t@example.com",
            rate_limit=2.0,
            transport=httpx.MockTransport(handler),
            clock=clock,
            sleep=clock.sleep,
        )
        for _ in range(6):
            client.resolve_ciks(["BAC"])
            (tmp_path / "cache" / "company_tickers.json").unlink()
        for i in range(len(stamps)):
            assert len([t for t in stamps if stamps[i] <= t < stamps[i] + 1.0]) <= 2


class TestMergeIndex:
    def test_merge_keeps_existing_and_is_stable_when_nothing_new(self, tmp_path, golden_dir):
        cache = tmp_path / "cache"
        index, _ = cm.import_local_corpus(golden_dir / "corpus", cache, fetched_at="t0")
        before = (cache / "index.json").read_bytes()
        merged = cm.merge_into_index(cache, list(index.records), fetched_at="t1")
        assert (cache / "index.json").read_bytes() == before
        assert merged.fetched_at == "t0"
