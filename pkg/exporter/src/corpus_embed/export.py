"""Corpus loading and the export pipeline.

Output rows follow the downstream ingestion schema exactly:
``{"id": str, "label": int, "embedding": [float, ...]}``, one JSON
object per line, constant embedding length, UTF-8, LF line endings.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

from .encoders import get_encoder


class CorpusError(ValueError):
    """Corpus file violates the id/text/label schema."""


@dataclass
class CorpusRow:
    id: str
    text: str
    label: int


@dataclass
class ExportReport:
    rows_in: int
    rows_out: int
    skipped: int
    feature_dim: int
    out_path: str


def _corpus_err(path, line_no, msg) -> CorpusError:
    return CorpusError(f"{path}:{line_no}: {msg}")


def _validate_row(path, line_no, ex_id, text, label, seen) -> CorpusRow:
    if not isinstance(ex_id, str) or not ex_id:
        raise _corpus_err(path, line_no, f"id must be a nonempty string, got {ex_id!r}")
    if ex_id in seen:
        raise _corpus_err(path, line_no, f"duplicate id {ex_id!r}")
    if isinstance(label, bool) or not isinstance(label, int) or label < 0:
        raise _corpus_err(path, line_no, f"label must be a nonnegative integer, got {label!r}")
    if not isinstance(text, str):
        raise _corpus_err(path, line_no, f"text must be a string, got {type(text).__name__}")
    seen.add(ex_id)
    return CorpusRow(id=ex_id, text=text, label=label)


def load_corpus(path) -> list[CorpusRow]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"corpus file not found: {path}")
    rows: list[CorpusRow] = []
    seen: set[str] = set()
    if path.suffix.lower() == ".csv":
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            required = {"id", "text", "label"}
            if reader.fieldnames is None or not required.issubset(reader.fieldnames):
                raise _corpus_err(path, 1, "CSV header must include id,text,label")
            for line_no, record in enumerate(reader, start=2):
                try:
                    label = int(record["label"])
                except (TypeError, ValueError):
                    raise _corpus_err(
                        path, line_no, f"label must be an integer, got {record['label']!r}"
                    ) from None
                rows.append(
                    _validate_row(path, line_no, record["id"], record["text"] or "", label, seen)
                )
    else:
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise _corpus_err(path, line_no, f"invalid JSON: {exc}") from exc
                for key in ("id", "text", "label"):
                    if key not in record:
                        raise _corpus_err(path, line_no, f"missing key {key!r}")
                rows.append(
                    _validate_row(
                        path, line_no, record["id"], record["text"], record["label"], seen
                    )
                )
    if not rows:
        raise CorpusError(f"{path}: no corpus rows")
    return rows


def _atomic_write(path: Path, text: str):
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


def _encode_rows(rows, encoder, pooling):
    kept, skipped = [], 0
    for row in rows:
        if not row.text.strip():
            skipped += 1
            continue
        vec = encoder.encode(row.text, pooling)
        kept.append((row.id, row.label, [float(v) for v in vec]))
    return kept, skipped


def export(
    corpus_path,
    encoder_name: str,
    pooling: str,
    out_path,
    replacement_corpus_path=None,
    replacement_out_path=None,
) -> ExportReport:
    """Encode a corpus into the ingestion JSONL schema.

    Rows with empty text are skipped and counted. With a replacement
    corpus (same ids, rewritten text), a second file is emitted for the
    downstream rescore workflow; its ids must be a subset of the
    original's.
    """
    if pooling not in ("cls", "mean"):
        raise CorpusError(f"pooling must be 'cls' or 'mean', got {pooling!r}")
    encoder = get_encoder(encoder_name)
    rows = load_corpus(corpus_path)
    encoded, skipped = _encode_rows(rows, encoder, pooling)
    if not encoded:
        raise CorpusError(f"{corpus_path}: every row had empty text; nothing to export")
    dim = len(encoded[0][2])
    lines = [
        json.dumps({"id": ex_id, "label": label, "embedding": vec}, separators=(", ", ": "))
        for ex_id, label, vec in encoded
    ]
    _atomic_write(Path(out_path), "\n".join(lines) + "\n")
    report = ExportReport(
        rows_in=len(rows),
        rows_out=len(encoded),
        skipped=skipped,
        feature_dim=dim,
        out_path=str(out_path),
    )

    if replacement_corpus_path is not None:
        if replacement_out_path is None:
            raise CorpusError("replacement corpus given without a replacement output path")
        repl_rows = load_corpus(replacement_corpus_path)
        known = {r.id for r in rows}
        unknown = [r.id for r in repl_rows if r.id not in known]
        if unknown:
            raise CorpusError(
                f"replacement ids not present in the original corpus: "
                f"{', '.join(sorted(unknown)[:5])}"
            )
        repl_encoded, _ = _encode_rows(repl_rows, encoder, pooling)
        lines = [
            json.dumps({"id": ex_id, "label": label, "embedding": vec}, separators=(", ", ": "))
            for ex_id, label, vec in repl_encoded
        ]
        _atomic_write(Path(replacement_out_path), "\n".join(lines) + "\n")
    return report
