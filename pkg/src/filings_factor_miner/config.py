"""Run configuration: the JSON config file schema and its validation.

Relative paths in a config file resolve against the file's directory, so
a config shipped next to its fixtures is portable. Input paths are
checked by the stage that consumes them, which lets a partially
populated workspace still run its early stages.
"""

from __future__ import annotations

import json
from datetime import date
from importlib import resources
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import InputError
from .windows import DateRange

STAGES = ("scan", "matrix", "moments", "svd", "factors", "regress", "report")
PATH_FIELDS = ("ticker_file", "local_corpus", "cache_dir", "prices_dir", "output_dir")


def load_example_tickers() -> list[str]:
    """The example ticker universe shipped as package data."""
    text = resources.files("filings_factor_miner").joinpath("data/example_tickers.txt").read_text("utf-8")
    return [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]


class Window(BaseModel):
    model_config = ConfigDict(extra="forbid")

    start: date
    end: date

    def to_range(self) -> DateRange:
        return DateRange(self.start, self.end)


class RankRuleConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["threshold", "fixed"] = "threshold"
    tau: float = 0.05
    k: int = 3


class RunConfig(BaseModel):
    """Everything a run needs; the emitted config.json snapshot round-trips."""

    model_config = ConfigDict(extra="forbid")

    tickers: list[str] | None = None
    ticker_file: Path | None = None
    corpus_mode: Literal["remote", "local"] = "local"
    local_corpus: Path | None = None
    cache_dir: Path | None = None
    prices_dir: Path | None = None
    lexicon: str = "builtin"
    in_sample: Window = Field(default_factory=lambda: Window(start=date(2019, 1, 1), end=date(2021, 1, 1)))
    forward: Window = Field(default_factory=lambda: Window(start=date(2021, 1, 1), end=date(2022, 1, 1)))
    views: list[Literal["dummy", "count"]] = Field(default_factory=lambda: ["dummy", "count"])
    regression_windows: list[Literal["contemporaneous", "forward"]] = Field(
        default_factory=lambda: ["contemporaneous", "forward"]
    )
    rank_rule: RankRuleConfig = Field(default_factory=RankRuleConfig)
    form_filter: list[str] | None = None
    word_boundary: bool = False
    center: bool = False
    output_dir: Path = Path("output")
    run_id: str = "run"
    rate_limit: float = 8.0
    parallelism: int = 4
    user_agent: str | None = None
    timestamp: str | None = None

    @field_validator("views", "regression_windows")
    @classmethod
    def _non_empty_unique(cls, v):
        if not v or len(set(v)) != len(v):
            raise ValueError("must be non-empty without duplicates")
        return v

    @field_validator("rate_limit")
    @classmethod
    def _positive_rate(cls, v):
        if v <= 0:
            raise ValueError("rate_limit must be positive")
        return v

    @model_validator(mode="after")
    def _windows_disjoint(self):
        a = self.in_sample.to_range()
        b = self.forward.to_range()
        if a.overlaps(b):
            raise ValueError("in_sample and forward windows must not overlap")
        return self

    # Derived paths -----------------------------------------------------
    @property
    def effective_cache_dir(self) -> Path:
        return self.cache_dir if self.cache_dir is not None else self.output_dir / "cache"

    @property
    def artifacts_dir(self) -> Path:
        return self.output_dir / "artifacts"

    @property
    def reports_dir(self) -> Path:
        return self.output_dir / "reports" / self.run_id

    def fetch_range(self) -> DateRange:
        return self.in_sample.to_range().union_span(self.forward.to_range())

    def ticker_list(self) -> list[str] | None:
        """Tickers from the inline list or the ticker file (one per line)."""
        if self.tickers:
            return [t.strip().upper() for t in self.tickers if t.strip()]
        if self.ticker_file is not None:
            if not self.ticker_file.is_file():
                raise InputError(f"ticker file not found: {self.ticker_file}")
            lines = self.ticker_file.read_text(encoding="utf-8").splitlines()
            out = [ln.strip().upper() for ln in lines if ln.strip() and not ln.startswith("#")]
            if not out:
                raise InputError(f"ticker file is empty: {self.ticker_file}")
            return out
        return None

    def snapshot(self) -> dict:
        """JSON-ready dict with all paths resolved absolute."""
        payload = json.loads(self.model_dump_json())
        for key in PATH_FIELDS:
            if payload.get(key) is not None:
                payload[key] = str(Path(payload[key]).resolve())
        return payload


def resolve_config_paths(raw: dict, base: Path) -> dict:
    """Resolve relative path fields in a raw config dict against ``base``."""
    out = dict(raw)
    for key in PATH_FIELDS:
        value = out.get(key)
        if value is not None and not Path(value).is_absolute():
            out[key] = str((base / value).resolve())
    lex = out.get("lexicon")
    if lex not in (None, "builtin") and not Path(lex).is_absolute():
        out["lexicon"] = str((base / lex).resolve())
    return out


def config_from_dict(raw: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise InputError(f"invalid config: {exc}") from exc


def load_config(path: str | Path) -> RunConfig:
    """Load a JSON config file, resolving relative paths against its directory."""
    p = Path(path)
    if not p.is_file():
        raise InputError(f"config file not found: {p}")
    try:
        raw = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed config {p}: line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise InputError(f"config {p} must be a JSON object")
    return config_from_dict(resolve_config_paths(raw, p.parent.resolve()))
