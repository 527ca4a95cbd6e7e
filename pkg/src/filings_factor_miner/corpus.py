"""SEC EDGAR corpus acquisition and the on-disk filing cache.

Remote mode talks to EDGAR through a token-bucket rate limiter (default
8 req/s, below SEC's published 10 req/s guidance) and requires a declared
User-Agent contact string. Local-mirror mode loads a directory with the
same index.json layout and never touches the network, so the whole
pipeline can run offline.

Cache layout:
    <cache_root>/<cik>/<accession>.txt      stripped plain text, one per accession
    <cache_root>/index.json                 {"records": [...]}

The cache is append-only; every file write goes through a temp file and
an atomic rename. Re-fetching a cached accession performs no network
call (the per-company submissions index is cached as well).
"""

from __future__ import annotations

import html.parser
import json
import logging
import os
import tempfile
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from datetime import date
from pathlib import Path

import httpx

from .errors import InputError, NetworkError
from .windows import DateRange

logger = logging.getLogger(__name__)

COMPANY_TICKERS_URL = "https://www.sec.gov/files/company_tickers.json"
SUBMISSIONS_URL = "https://data.sec.gov/submissions/{filename}"
ARCHIVES_URL = "https://www.sec.gov/Archives/edgar/data/{cik_short}/{accession_nodash}/{doc}"

USER_AGENT_ENV = "EDGAR_USER_AGENT"
DEFAULT_RATE_LIMIT = 8.0


@dataclass(frozen=True)
class FilingRecord:
    """One cached filing plus the metadata used for facet breakdowns."""

    ticker: str
    cik: str
    accession: str
    form_type: str
    filing_date: date
    filing_year: int
    sic_industry: str
    state_of_incorporation: str
    text_path: Path

    def __post_init__(self):
        if self.filing_year != self.filing_date.year:
            raise InputError(
                f"filing_year {self.filing_year} disagrees with filing_date {self.filing_date}"
                f" for accession {self.accession}"
            )
        if not self.accession:
            raise InputError("filing record has an empty accession")


def _sort_key(r: FilingRecord):
    return (r.ticker, r.filing_date, r.accession)


@dataclass(frozen=True)
class CorpusIndex:
    """Immutable, deterministically sorted collection of filing records."""

    records: tuple[FilingRecord, ...]
    source: str
    fetched_at: str | None = None

    @classmethod
    def build(cls, records, source: str, fetched_at: str | None = None) -> "CorpusIndex":
        records = tuple(sorted(records, key=_sort_key))
        seen: set[str] = set()
        for r in records:
            if r.accession in seen:
                raise InputError(f"duplicate accession in corpus index: {r.accession}")
            seen.add(r.accession)
        return cls(records=records, source=source, fetched_at=fetched_at)

    def filter(
        self,
        tickers: list[str] | None = None,
        period: DateRange | None = None,
        forms: set[str] | None = None,
    ) -> "CorpusIndex":
        wanted = {t.upper() for t in tickers} if tickers else None
        kept = [
            r
            for r in self.records
            if (wanted is None or r.ticker in wanted)
            and (period is None or period.contains(r.filing_date))
            and (forms is None or r.form_type in forms)
        ]
        return CorpusIndex(records=tuple(kept), source=self.source, fetched_at=self.fetched_at)

    def tickers(self) -> list[str]:
        return sorted({r.ticker for r in self.records})


class TokenBucket:
    """Thread-safe request pacer: at most ``rate`` acquisitions per second.

    Single-token capacity: admissions are spaced one interval apart, so
    no burst can exceed the ceiling. The interval carries a one-part-in-
    1e9 margin so float rounding can never squeeze an extra request into
    a one-second window. Clock and sleep are injectable for tests.
    """

    def __init__(self, rate: float, clock=time.monotonic, sleep=time.sleep):
        if rate <= 0:
            raise InputError(f"rate limit must be positive, got {rate}")
        self.rate = float(rate)
        self._interval = (1.0 + 1e-9) / self.rate
        self._clock = clock
        self._sleep = sleep
        self._next_free = clock()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        with self._lock:
            now = self._clock()
            start = now if now >= self._next_free else self._next_free
            wait = start - now
            self._next_free = start + self._interval
        if wait > 0.0:
            self._sleep(wait)


class _TextExtractor(html.parser.HTMLParser):
    """Collects text content, skipping script/style; entities are decoded."""

    _SKIP = {"script", "style"}

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.chunks: list[str] = []
        self._skip_depth = 0

    def handle_starttag(self, tag, attrs):
        if tag in self._SKIP:
            self._skip_depth += 1

    def handle_endtag(self, tag):
        if tag in self._SKIP and self._skip_depth > 0:
            self._skip_depth -= 1

    def handle_data(self, data):
        if self._skip_depth == 0 and data:
            self.chunks.append(data)


def strip_markup(raw: str) -> str:
    """Reduce a filing document to plain text: tags removed, entities decoded."""
    extractor = _TextExtractor()
    extractor.feed(raw)
    extractor.close()
    return " ".join(extractor.chunks)


def atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _record_to_json(r: FilingRecord, base: Path) -> dict:
    text_path = Path(r.text_path)
    try:
        stored = text_path.relative_to(base).as_posix()
    except ValueError:
        stored = str(text_path)
    return {
        "ticker": r.ticker,
        "cik": r.cik,
        "accession": r.accession,
        "form_type": r.form_type,
        "filing_date": r.filing_date.isoformat(),
        "sic_industry": r.sic_industry,
        "state_of_incorporation": r.state_of_incorporation,
        "text_path": stored,
    }


def _record_from_json(obj: dict, base: Path, index_name: str) -> FilingRecord:
    try:
        filing_date = date.fromisoformat(str(obj["filing_date"]))
        text_path = Path(obj["text_path"])
        if not text_path.is_absolute():
            text_path = base / text_path
        return FilingRecord(
            ticker=str(obj["ticker"]).upper(),
            cik=str(obj["cik"]),
            accession=str(obj["accession"]),
            form_type=str(obj["form_type"]),
            filing_date=filing_date,
            filing_year=filing_date.year,
            sic_industry=str(obj.get("sic_industry", "")),
            state_of_incorporation=str(obj.get("state_of_incorporation", "")),
            text_path=text_path,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad record in {index_name}: {exc}: {obj!r}") from exc


def write_index(cache_dir: Path, index: CorpusIndex) -> Path:
    cache_dir = Path(cache_dir)
    payload: dict = {"records": [_record_to_json(r, cache_dir) for r in index.records]}
    if index.fetched_at is not None:
        payload["fetched_at"] = index.fetched_at
    path = cache_dir / "index.json"
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def load_local_corpus(root_dir: str | Path) -> CorpusIndex:
    """Load a corpus from a directory holding index.json plus text files.

    Every indexed text file must exist and be non-empty; a missing file is
    a hard error naming the path. Records come back sorted by
    (ticker, filing_date, accession) regardless of on-disk order.
    """
    root = Path(root_dir)
    index_path = root / "index.json"
    if not index_path.is_file():
        raise InputError(f"no index.json under {root}")
    try:
        payload = json.loads(index_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(
            f"malformed {index_path}: line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(payload, dict) or "records" not in payload:
        raise InputError(f"{index_path} must contain a top-level 'records' list")
    records = [_record_from_json(obj, root, str(index_path)) for obj in payload["records"]]
    for r in records:
        if not r.text_path.is_file() or r.text_path.stat().st_size == 0:
            raise InputError(f"indexed text file missing or empty: {r.text_path}")
    return CorpusIndex.build(records, source="local", fetched_at=payload.get("fetched_at"))


def import_local_corpus(
    mirror_root: str | Path,
    cache_dir: str | Path,
    tickers: list[str] | None = None,
    period: DateRange | None = None,
    forms: set[str] | None = None,
    fetched_at: str | None = None,
) -> tuple[CorpusIndex, dict]:
    """Copy a local mirror into the cache layout and write the cache index.

    Returns the cache-backed index plus counters; files already present in
    the cache are counted as hits and not rewritten.
    """
    mirror = load_local_corpus(mirror_root).filter(tickers=tickers, period=period, forms=forms)
    if tickers:
        found = {r.ticker for r in mirror.records}
        missing = sorted(set(t.upper() for t in tickers) - found)
        if missing:
            logger.warning("local corpus has no filings for: %s", ", ".join(missing))
    cache_dir = Path(cache_dir)
    stats = {"records": len(mirror.records), "cache_hits": 0, "copied": 0}
    cached_records = []
    for r in mirror.records:
        dest = cache_dir / r.cik / f"{r.accession}.txt"
        if dest.is_file():
            stats["cache_hits"] += 1
        else:
            atomic_write_text(dest, Path(r.text_path).read_text(encoding="utf-8"))
            stats["copied"] += 1
        cached_records.append(replace(r, text_path=dest))
    index = CorpusIndex.build(cached_records, source="local", fetched_at=fetched_at)
    write_index(cache_dir, index)
    return index, stats


class EdgarClient:
    """Rate-limited EDGAR fetcher writing into the filing cache.

    A declared User-Agent contact string is mandatory; EDGAR blacklists
    anonymous bulk downloaders. All HTTP goes through one shared token
    bucket, including when documents download concurrently.
    """

    def __init__(
        self,
        cache_dir: str | Path,
        user_agent: str | None = None,
        rate_limit: float = DEFAULT_RATE_LIMIT,
        transport: httpx.BaseTransport | None = None,
        clock=time.monotonic,
        sleep=time.sleep,
        max_retries: int = 3,
        parallelism: int = 4,
    ):
        user_agent = user_agent or os.environ.get(USER_AGENT_ENV, "")
        if not user_agent.strip():
            raise InputError(
                "EDGAR access requires a contact User-Agent string; "
                f"pass user_agent or set ${USER_AGENT_ENV}"
            )
        self.cache_dir = Path(cache_dir)
        self._bucket = TokenBucket(rate_limit, clock=clock, sleep=sleep)
        self._sleep = sleep
        self._max_retries = max_retries
        self._parallelism = max(1, int(parallelism))
        self._client = httpx.Client(
            headers={"User-Agent": user_agent, "Accept-Encoding": "gzip, deflate"},
            transport=transport,
            timeout=30.0,
        )
        self.network_calls = 0
        self.cache_hits = 0
        self._lock = threading.Lock()

    def close(self) -> None:
        self._client.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _get(self, url: str) -> httpx.Response:
        last_error: Exception | None = None
        for attempt in range(self._max_retries + 1):
            self._bucket.acquire()
            with self._lock:
                self.network_calls += 1
            try:
                resp = self._client.get(url)
            except httpx.TransportError as exc:
                last_error = exc
                if attempt < self._max_retries:
                    self._sleep(0.5 * 2**attempt)
                    continue
                raise NetworkError(f"network failure fetching {url}: {exc}") from exc
            if resp.status_code in (403, 429):
                retry_after = _parse_retry_after(resp)
                if attempt < self._max_retries:
                    self._sleep(retry_after)
                    continue
                raise NetworkError(
                    f"EDGAR rate limited request ({resp.status_code}) for {url}",
                    retry_after=retry_after,
                )
            if resp.status_code >= 500:
                last_error = NetworkError(f"HTTP {resp.status_code} for {url}")
                if attempt < self._max_retries:
                    self._sleep(0.5 * 2**attempt)
                    continue
                raise last_error
            if resp.status_code >= 400:
                raise NetworkError(f"HTTP {resp.status_code} for {url}", retryable=False)
            return resp
        raise NetworkError(f"failed to fetch {url}: {last_error}")

    def _get_json_cached(self, url: str, cache_path: Path) -> dict:
        if cache_path.is_file():
            with self._lock:
                self.cache_hits += 1
            return json.loads(cache_path.read_text(encoding="utf-8"))
        data = self._get(url).json()
        atomic_write_text(cache_path, json.dumps(data, sort_keys=True))
        return data

    def resolve_ciks(self, tickers: list[str]) -> dict[str, str | None]:
        """Map tickers to zero-padded 10-digit CIKs; unresolved map to None."""
        if not tickers:
            raise InputError("no tickers given")
        if any(not t or not t.strip() for t in tickers):
            raise InputError("blank ticker in request")
        table = self._get_json_cached(COMPANY_TICKERS_URL, self.cache_dir / "company_tickers.json")
        by_ticker = {str(v["ticker"]).upper(): str(v["cik_str"]).zfill(10) for v in table.values()}
        out: dict[str, str | None] = {}
        for t in tickers:
            cik = by_ticker.get(t.upper())
            if cik is None:
                logger.warning("ticker not in EDGAR company table: %s", t)
            out[t.upper()] = cik
        return out

    def _submission_rows(self, cik: str) -> tuple[dict, list[tuple[str, str, str, str]]]:
        main = self._get_json_cached(
            SUBMISSIONS_URL.format(filename=f"CIK{cik}.json"),
            self.cache_dir / cik / "submissions.json",
        )
        recent = main.get("filings", {}).get("recent", {})
        forms = list(recent.get("form", []))
        dates = list(recent.get("filingDate", []))
        accessions = list(recent.get("accessionNumber", []))
        docs = list(recent.get("primaryDocument", []))
        for extra in main.get("filings", {}).get("files", []):
            page = self._get_json_cached(
                SUBMISSIONS_URL.format(filename=extra["name"]),
                self.cache_dir / cik / str(extra["name"]),
            )
            older = page.get("filings", {}).get("recent", page)
            forms.extend(older.get("form", []))
            dates.extend(older.get("filingDate", []))
            accessions.extend(older.get("accessionNumber", []))
            docs.extend(older.get("primaryDocument", []))
        return main, list(zip(forms, dates, accessions, docs))

    def fetch_filings(
        self,
        cik: str,
        date_range: DateRange,
        form_filter: set[str] | None = None,
        ticker: str = "",
    ) -> list[FilingRecord]:
        """Download each filing's primary document into the cache as text.

        No form-type discrimination happens unless ``form_filter`` is
        given. Malformed index entries are skipped with a warning; cached
        accessions are not re-downloaded.
        """
        if not (cik.isdigit() and len(cik) == 10):
            raise InputError(f"CIK must be a zero-padded 10-digit string, got {cik!r}")
        main, rows = self._submission_rows(cik)
        ticker = ticker.upper() or str((main.get("tickers") or [""])[0]).upper()
        sic = str(main.get("sicDescription") or "")
        state = str(main.get("stateOfIncorporation") or "")

        tasks = []
        for form, filed, accession, doc in rows:
            try:
                filing_date = date.fromisoformat(filed)
            except (TypeError, ValueError):
                logger.warning("skipping malformed index entry for CIK %s: %r", cik, (form, filed, accession))
                continue
            if not accession:
                logger.warning("skipping index entry without accession for CIK %s", cik)
                continue
            if form_filter is not None and form not in form_filter:
                continue
            if not date_range.contains(filing_date):
                continue
            tasks.append((str(form), filing_date, str(accession), str(doc)))

        def fetch_one(task) -> FilingRecord:
            form, filing_date, accession, doc = task
            dest = self.cache_dir / cik / f"{accession}.txt"
            if dest.is_file():
                with self._lock:
                    self.cache_hits += 1
            else:
                url = ARCHIVES_URL.format(
                    cik_short=cik.lstrip("0") or "0",
                    accession_nodash=accession.replace("-", ""),
                    doc=doc,
                )
                raw = self._get(url).text
                atomic_write_text(dest, strip_markup(raw))
            return FilingRecord(
                ticker=ticker,
                cik=cik,
                accession=accession,
                form_type=form,
                filing_date=filing_date,
                filing_year=filing_date.year,
                sic_industry=sic,
                state_of_incorporation=state,
                text_path=dest,
            )

        if self._parallelism > 1 and len(tasks) > 1:
            with ThreadPoolExecutor(max_workers=self._parallelism) as pool:
                records = list(pool.map(fetch_one, tasks))
        else:
            records = [fetch_one(t) for t in tasks]
        return sorted(records, key=_sort_key)


def _parse_retry_after(resp: httpx.Response) -> float:
    try:
        return max(0.0, float(resp.headers.get("Retry-After", "1")))
    except ValueError:
        return 1.0


def merge_into_index(
    cache_dir: Path, new_records: list[FilingRecord], fetched_at: str | None
) -> CorpusIndex:
    """Merge freshly fetched records into the cache index on disk.

    The index is rewritten only when the record set actually changes, so
    an idempotent re-fetch leaves byte-identical cache contents.
    """
    cache_dir = Path(cache_dir)
    existing: list[FilingRecord] = []
    old_stamp = None
    if (cache_dir / "index.json").is_file():
        old = load_local_corpus(cache_dir)
        existing = list(old.records)
        old_stamp = old.fetched_at
    known = {r.accession for r in existing}
    added = []
    for r in new_records:
        if r.accession not in known:
            added.append(r)
            known.add(r.accession)
    if not added and existing:
        return CorpusIndex.build(existing, source="remote", fetched_at=old_stamp)
    index = CorpusIndex.build(existing + added, source="remote", fetched_at=fetched_at)
    write_index(cache_dir, index)
    return index
