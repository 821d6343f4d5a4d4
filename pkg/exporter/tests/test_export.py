"""Exporter tests, including the round trip through the downstream validator."""

import csv
import json

import numpy as np
import pytest

from corpus_embed import EncoderUnavailable, export, get_encoder, load_corpus
from corpus_embed.export import CorpusError
from corpus_embed.cli import main as cli_main


def write_corpus(path, rows):
    path.write_text(
        "\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8"
    )


CORPUS = [
    {"id": "a", "text": "the battery drains within a couple of hours", "label": 1},
    {"id": "b", "text": "setup was quick and the manual is clear", "label": 0},
    {"id": "c", "text": "works exactly as described, no complaints", "label": 0},
]


class TestLoadCorpus:
    def test_jsonl(self, tmp_path):
        p = tmp_path / "c.jsonl"
        write_corpus(p, CORPUS)
        rows = load_corpus(p)
        assert [r.id for r in rows] == ["a", "b", "c"]

    def test_csv(self, tmp_path):
        p = tmp_path / "c.csv"
        with open(p, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=["id", "text", "label"])
            writer.writeheader()
            writer.writerows(CORPUS)
        rows = load_corpus(p)
        assert [r.label for r in rows] == [1, 0, 0]

    def test_duplicate_id_cites_line(self, tmp_path):
        p = tmp_path / "c.jsonl"
        write_corpus(p, CORPUS + [dict(CORPUS[0])])
        with pytest.raises(CorpusError, match=":4:"):
            load_corpus(p)

    def test_missing_key_cites_line(self, tmp_path):
        p = tmp_path / "c.jsonl"
        p.write_text('{"id": "a", "label": 0}\n')
        with pytest.raises(CorpusError, match="text"):
            load_corpus(p)


class TestExport:
    def test_three_rows_constant_dim(self, tmp_path):
        corpus = tmp_path / "c.jsonl"
        write_corpus(corpus, CORPUS)
        out = tmp_path / "emb.jsonl"
        report = export(corpus, "hashing:64", "mean", out)
        assert report.rows_in == 3
        assert report.rows_out == 3
        assert report.skipped == 0
        rows = [json.loads(line) for line in out.read_text().splitlines()]
        assert len(rows) == 3
        assert {len(r["embedding"]) for r in rows} == {64}

    def test_roundtrip_through_downstream_validator(self, tmp_path):
        betadrop = pytest.importorskip("betadrop")
        corpus = tmp_path / "c.jsonl"
        write_corpus(corpus, CORPUS)
        out = tmp_path / "emb.jsonl"
        export(corpus, "hashing", "mean", out)
        ds = betadrop.load_dataset(out)
        assert len(ds) == 3
        assert ds.ids == ["a", "b", "c"]
        assert ds.feature_dim == 256
        assert ds.labels.tolist() == [1, 0, 0]

    def test_repeated_export_agrees(self, tmp_path):
        corpus = tmp_path / "c.jsonl"
        write_corpus(corpus, CORPUS)
        out1, out2 = tmp_path / "e1.jsonl", tmp_path / "e2.jsonl"
        export(corpus, "hashing", "mean", out1)
        export(corpus, "hashing", "mean", out2)
        rows1 = [json.loads(line) for line in out1.read_text().splitlines()]
        rows2 = [json.loads(line) for line in out2.read_text().splitlines()]
        assert [r["id"] for r in rows1] == [r["id"] for r in rows2]
        assert [r["label"] for r in rows1] == [r["label"] for r in rows2]
        for r1, r2 in zip(rows1, rows2):
            gap = np.max(np.abs(np.array(r1["embedding"]) - np.array(r2["embedding"])))
            assert gap <= 1e-5

    def test_empty_text_skipped_and_counted(self, tmp_path):
        corpus = tmp_path / "c.jsonl"
        write_corpus(corpus, CORPUS + [{"id": "d", "text": "   ", "label": 1}])
        out = tmp_path / "emb.jsonl"
        report = export(corpus, "hashing", "mean", out)
        assert report.rows_in == 4
        assert report.rows_out == 3
        assert report.skipped == 1
        assert report.rows_out == report.rows_in - report.skipped

    def test_pooling_modes_differ(self, tmp_path):
        enc = get_encoder("hashing:64")
        mean_vec = enc.encode("alpha beta gamma", "mean")
        cls_vec = enc.encode("alpha beta gamma", "cls")
        assert not np.allclose(mean_vec, cls_vec)
        only = enc.encode("alpha", "mean")
        assert np.allclose(only, enc.encode("alpha", "cls"))

    def test_replacement_pairing(self, tmp_path):
        betadrop = pytest.importorskip("betadrop")
        corpus = tmp_path / "c.jsonl"
        write_corpus(corpus, CORPUS)
        repl = tmp_path / "r.jsonl"
        write_corpus(
            repl,
            [
                {"id": "a", "text": "the charge barely lasts two hours of use", "label": 1},
                {"id": "b", "text": "installation took minutes thanks to the guide", "label": 0},
            ],
        )
        out, rout = tmp_path / "emb.jsonl", tmp_path / "emb_repl.jsonl"
        export(corpus, "hashing", "mean", out, repl, rout)
        paired = betadrop.load_paired(out, rout)
        assert paired.ids == ["a", "b"]
        assert paired.missing_count == 1

    def test_replacement_with_unknown_id_rejected(self, tmp_path):
        corpus = tmp_path / "c.jsonl"
        write_corpus(corpus, CORPUS)
        repl = tmp_path / "r.jsonl"
        write_corpus(repl, [{"id": "ghost", "text": "whatever", "label": 0}])
        with pytest.raises(CorpusError, match="ghost"):
            export(corpus, "hashing", "mean", corpus.with_name("o.jsonl"), repl,
                   corpus.with_name("ro.jsonl"))

    def test_unknown_encoder_has_hint(self):
        with pytest.raises(EncoderUnavailable, match="hashing"):
            get_encoder("word2vec")

    def test_unavailable_transformer_model_errors(self, tmp_path, monkeypatch):
        monkeypatch.setenv("HF_HUB_OFFLINE", "1")
        monkeypatch.setenv("TRANSFORMERS_OFFLINE", "1")
        pytest.importorskip("transformers")
        with pytest.raises(EncoderUnavailable, match="not available locally"):
            get_encoder("hf:this-model/does-not-exist-anywhere")


class TestCli:
    def test_export_command(self, tmp_path, capsys):
        corpus = tmp_path / "c.jsonl"
        write_corpus(corpus, CORPUS)
        out = tmp_path / "emb.jsonl"
        assert cli_main([
            "export", "--corpus", str(corpus), "--out", str(out),
            "--encoder", "hashing:32",
        ]) == 0
        assert "3 rows" in capsys.readouterr().out
        assert out.exists()

    def test_validation_error_exit_code(self, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"id": "a"}\n')
        assert cli_main([
            "export", "--corpus", str(bad), "--out", str(tmp_path / "o.jsonl"),
        ]) == 2

    def test_missing_corpus_exit_code(self, tmp_path):
        assert cli_main([
            "export", "--corpus", str(tmp_path / "none.jsonl"),
            "--out", str(tmp_path / "o.jsonl"),
        ]) == 3
