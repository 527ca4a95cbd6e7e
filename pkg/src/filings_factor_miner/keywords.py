"""ESG keyword lexicon, document scanning, and mention aggregation.

The scanner counts non-overlapping, left-to-right occurrences of each
lowercase phrase in the lowercased document text. Multi-word phrases
tolerate any run of whitespace (including newlines) between words, since
text extraction from filings introduces arbitrary wrapping. Matching is
substring-based by default; pass ``word_boundary=True`` to require word
boundaries around each phrase.
"""

from __future__ import annotations

import functools
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .corpus import CorpusIndex, FilingRecord
from .errors import InputError
from .windows import DateRange

# Search phrases backing the 22 SASB categories; one column per phrase,
# in this fixed order. The category->phrase map ships in
# data/sasb_categories.json.
DEFAULT_PHRASES = (
    "greenhouse",
    "emissions",
    "ghg",
    "air quality",
    "wastewater",
    "hazardous materials",
    "human rights",
    "data security",
    "access and affordability",
    "product quality",
    "product safety",
    "selling practices",
    "product labeling",
    "labor practices",
    "employee health",
    "employee safety",
    "diversity",
    "inclusion",
    "employee engagement",
    "business ethics",
    "competitive behavior",
)

FACETS = ("year", "form_type", "industry", "state")


@dataclass(frozen=True)
class LexiconEntry:
    label: str
    phrase: str


@dataclass(frozen=True)
class Lexicon:
    """Ordered list of search phrases; the order defines matrix columns."""

    entries: tuple[LexiconEntry, ...]

    def __post_init__(self):
        if not self.entries:
            raise InputError("lexicon has no entries")
        labels = [e.label for e in self.entries]
        phrases = [e.phrase for e in self.entries]
        if len(set(labels)) != len(labels):
            raise InputError("lexicon labels are not unique")
        if len(set(phrases)) != len(phrases):
            raise InputError("lexicon phrases are not unique")
        for e in self.entries:
            if not e.phrase or e.phrase != e.phrase.lower():
                raise InputError(f"lexicon phrase must be non-empty lowercase: {e.phrase!r}")

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(e.label for e in self.entries)

    @property
    def phrases(self) -> tuple[str, ...]:
        return tuple(e.phrase for e in self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def to_json(self) -> str:
        payload = {"entries": [{"label": e.label, "phrase": e.phrase} for e in self.entries]}
        return json.dumps(payload, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Lexicon":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"malformed lexicon JSON: line {exc.lineno}: {exc.msg}") from exc
        try:
            entries = tuple(
                LexiconEntry(label=str(e["label"]), phrase=str(e["phrase"]))
                for e in payload["entries"]
            )
        except (KeyError, TypeError) as exc:
            raise InputError(f"lexicon JSON must be {{'entries': [{{'label','phrase'}}]}}: {exc}") from exc
        return cls(entries)


def default_lexicon() -> Lexicon:
    return Lexicon(tuple(LexiconEntry(label=p, phrase=p) for p in DEFAULT_PHRASES))


def load_lexicon(path: str | Path) -> Lexicon:
    """Load a lexicon from a JSON file, or the builtin one for "builtin"."""
    if str(path) == "builtin":
        return default_lexicon()
    p = Path(path)
    if not p.is_file():
        raise InputError(f"lexicon file not found: {p}")
    return Lexicon.from_json(p.read_text(encoding="utf-8"))


def sasb_category_map() -> list[dict]:
    """SASB category -> search-phrase mapping, shipped as package data."""
    text = resources.files("filings_factor_miner").joinpath("data/sasb_categories.json").read_text("utf-8")
    return json.loads(text)["categories"]


@functools.lru_cache(maxsize=64)
def _compiled(phrases: tuple[str, ...], word_boundary: bool) -> tuple[re.Pattern, ...]:
    out = []
    for phrase in phrases:
        pat = r"\s+".join(re.escape(tok) for tok in phrase.split())
        if word_boundary:
            pat = rf"\b{pat}\b"
        out.append(re.compile(pat))
    return tuple(out)


def scan_text(text: str, lexicon: Lexicon, word_boundary: bool = False) -> np.ndarray:
    """Count non-overlapping occurrences of each phrase in the lowercased text.

    Returns an int64 vector aligned with ``lexicon.entries``. The empty
    document is valid and yields all zeros.
    """
    lowered = text.lower()
    patterns = _compiled(lexicon.phrases, word_boundary)
    counts = np.zeros(len(lexicon), dtype=np.int64)
    for j, pattern in enumerate(patterns):
        counts[j] = sum(1 for _ in pattern.finditer(lowered))
    return counts


@dataclass(frozen=True)
class ScannedFiling:
    """One filing with its per-keyword count vector."""

    record: FilingRecord
    counts: np.ndarray


@dataclass(frozen=True)
class MentionMatrix:
    """Company x keyword count matrix over a filing-date window.

    Rows follow sorted ticker order; columns follow lexicon order. The
    dummy view is 1 exactly where the count is >= 1.
    """

    companies: tuple[str, ...]
    lexicon: Lexicon
    counts: np.ndarray
    period: DateRange

    def __post_init__(self):
        if self.counts.shape != (len(self.companies), len(self.lexicon)):
            raise InputError(
                f"matrix shape {self.counts.shape} does not match "
                f"{len(self.companies)} companies x {len(self.lexicon)} keywords"
            )
        if (self.counts < 0).any():
            raise InputError("mention counts must be non-negative")

    @property
    def dummy(self) -> np.ndarray:
        return (self.counts >= 1).astype(np.int64)

    def view(self, name: str) -> np.ndarray:
        if name == "count":
            return self.counts
        if name == "dummy":
            return self.dummy
        raise InputError(f"unknown matrix view {name!r} (expected 'dummy' or 'count')")


@dataclass(frozen=True)
class FacetCell:
    count: int
    share_pct: float


@dataclass(frozen=True)
class FacetTable:
    """Mention totals and filing-share percentages per facet value."""

    facet: str
    cells: dict[tuple[str, str], FacetCell] = field(default_factory=dict)
    group_sizes: dict[str, int] = field(default_factory=dict)


def scan_corpus(corpus: CorpusIndex, lexicon: Lexicon, word_boundary: bool = False) -> list[ScannedFiling]:
    """Scan every filing in the corpus once, in index order."""
    out = []
    for record in corpus.records:
        text = Path(record.text_path).read_text(encoding="utf-8", errors="replace")
        out.append(ScannedFiling(record, scan_text(text, lexicon, word_boundary)))
    return out


def aggregate_matrix(
    scanned: list[ScannedFiling], lexicon: Lexicon, period: DateRange
) -> tuple[MentionMatrix, list[str]]:
    """Sum per-filing counts by company over the window.

    Companies whose filings all fall outside the window are excluded from
    the matrix and returned as the second element.
    """
    all_tickers = sorted({s.record.ticker for s in scanned})
    in_period: dict[str, np.ndarray] = {}
    for s in scanned:
        if period.contains(s.record.filing_date):
            acc = in_period.setdefault(s.record.ticker, np.zeros(len(lexicon), dtype=np.int64))
            acc += s.counts
    if not in_period:
        raise InputError(
            f"no filings fall inside {period.start}..{period.end}; cannot build a mention matrix"
        )
    companies = tuple(sorted(in_period))
    excluded = [t for t in all_tickers if t not in in_period]
    counts = np.vstack([in_period[t] for t in companies])
    return MentionMatrix(companies, lexicon, counts, period), excluded


def build_matrix(
    corpus: CorpusIndex,
    lexicon: Lexicon,
    period: DateRange,
    word_boundary: bool = False,
) -> tuple[MentionMatrix, list[str]]:
    """Scan the corpus and aggregate counts per company over the window."""
    if not corpus.records:
        raise InputError("corpus is empty")
    return aggregate_matrix(scan_corpus(corpus, lexicon, word_boundary), lexicon, period)


def _facet_value(record: FilingRecord, facet: str) -> str:
    if facet == "year":
        return str(record.filing_year)
    if facet == "form_type":
        value = record.form_type
    elif facet == "industry":
        value = record.sic_industry
    elif facet == "state":
        value = record.state_of_incorporation
    else:
        raise InputError(f"unknown facet {facet!r} (expected one of {FACETS})")
    return value if value else "unknown"


def aggregate_facet(scanned: list[ScannedFiling], lexicon: Lexicon, facet: str) -> FacetTable:
    """Per (facet value, keyword): total mentions and % of filings mentioning it."""
    groups: dict[str, list[np.ndarray]] = {}
    for s in scanned:
        groups.setdefault(_facet_value(s.record, facet), []).append(s.counts)
    cells: dict[tuple[str, str], FacetCell] = {}
    sizes: dict[str, int] = {}
    for value, vectors in groups.items():
        stack = np.vstack(vectors)
        totals = stack.sum(axis=0)
        shares = 100.0 * (stack >= 1).sum(axis=0) / stack.shape[0]
        sizes[value] = stack.shape[0]
        for j, label in enumerate(lexicon.labels):
            cells[(value, label)] = FacetCell(int(totals[j]), float(shares[j]))
    return FacetTable(facet=facet, cells=cells, group_sizes=sizes)


def facet_breakdown(
    corpus: CorpusIndex, lexicon: Lexicon, facet: str, word_boundary: bool = False
) -> FacetTable:
    return aggregate_facet(scan_corpus(corpus, lexicon, word_boundary), lexicon, facet)
