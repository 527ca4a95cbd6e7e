import json
import shutil
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def golden_dir() -> Path:
    return FIXTURES / "golden"


@pytest.fixture
def golden_workspace(tmp_path, golden_dir):
    """Copy of the golden fixture with its config retargeted into tmp."""
    work = tmp_path / "golden"
    shutil.copytree(golden_dir, work)
    cfg = json.loads((work / "config.json").read_text())
    cfg["output_dir"] = str(work / "output")
    (work / "config.json").write_text(json.dumps(cfg, indent=2) + "\n")
    return work


def write_corpus(root: Path, records: list[dict], texts: dict[str, str]) -> Path:
    """Materialize an index.json + text files corpus under ``root``."""
    root.mkdir(parents=True, exist_ok=True)
    for rel, body in texts.items():
        path = root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(body, encoding="utf-8")
    (root / "index.json").write_text(
        json.dumps({"records": records}, indent=2) + "\n", encoding="utf-8"
    )
    return root


def make_record(
    ticker="ALFA",
    cik="0000000101",
    accession="0000000101-19-000001",
    form_type="10-K",
    filing_date="2019-03-15",
    sic_industry="Industrial Machinery",
    state_of_incorporation="DE",
    text_path="texts/a.txt",
) -> dict:
    return {
        "ticker": ticker,
        "cik": cik,
        "accession": accession,
        "form_type": form_type,
        "filing_date": filing_date,
        "sic_industry": sic_industry,
        "state_of_incorporation": state_of_incorporation,
        "text_path": text_path,
    }
