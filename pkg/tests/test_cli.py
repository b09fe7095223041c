import io
import json
import os
from pathlib import Path

import pytest

from framekit.cli import EX_DATAERR, EX_OK, EX_USAGE, main
from framekit.datamodel import load, validate_document

DATA = Path(__file__).parent / "data"


def run_extract(tmp_path, *extra):
    out_dir = tmp_path / "out"
    argv = [
        "extract",
        "--engine", "scripted",
        "--rules", str(DATA / "scripted_rules.json"),
        "--template", str(DATA / "frame_template.pt.txt"),
        "--extractor", "basic",
        "--input", str(DATA / "ade_note.txt"),
        "--output", str(out_dir),
        *extra,
    ]
    return main(argv), out_dir


class TestExtract:
    def test_output_loads_and_validates(self, tmp_path, capsys):
        code, out_dir = run_extract(tmp_path)
        assert code == EX_OK
        doc = load(out_dir / "ade_note.llmie")
        assert [f.severity for f in validate_document(doc) if f.severity == "error"] == []
        assert len(doc.frames) == 3

    def test_manifest_written_with_counts_and_hash(self, tmp_path):
        import hashlib
        code, out_dir = run_extract(
            tmp_path,
            "--relations",
            "--relation-template", str(DATA / "relation_template.pt.txt"),
            "--relation-mode", "multiclass",
            "--filter", str(DATA / "relation_filter.json"),
        )
        assert code == EX_OK
        manifest = json.loads((out_dir / "manifest.json").read_text("utf-8"))
        doc = load(out_dir / "ade_note.llmie")
        assert manifest["counts"]["frames"] == len(doc.frames) == 3
        assert manifest["counts"]["relations"] == len(doc.relations) == 2
        # the filter admits exactly the Drug-Condition and Drug-ADE pairs
        assert manifest["counts"]["relation_tasks"] == 2
        # frame step (1 call) + one call per admitted pair
        assert manifest["counts"]["llm_calls"] == 3
        expected_hash = hashlib.sha256(
            (DATA / "frame_template.pt.txt").read_bytes()).hexdigest()
        assert manifest["template"]["sha256"] == expected_hash

    def test_missing_template_usage_error(self, tmp_path, capsys):
        code = main(["extract", "--engine", "scripted",
                     "--input", "x", "--output", str(tmp_path), "--extractor", "basic"])
        assert code == EX_USAGE

    def test_directory_input(self, tmp_path):
        notes = tmp_path / "notes"
        notes.mkdir()
        for i in range(2):
            (notes / f"n{i}.txt").write_text("No entities here.", encoding="utf-8")
        out_dir = tmp_path / "out"
        code = main([
            "extract", "--engine", "scripted",
            "--rules", str(DATA / "scripted_rules.json"),
            "--template", str(DATA / "frame_template.pt.txt"),
            "--extractor", "basic",
            "--input", str(notes), "--output", str(out_dir)])
        # the catch-all rule still answers with the canned records, which cannot
        # ground in this text, so documents are written with zero frames
        assert code == EX_OK
        assert sorted(p.name for p in out_dir.glob("*.llmie")) == ["n0.llmie", "n1.llmie"]

    def test_multiclass_without_filter_rejected(self, tmp_path):
        code, _ = run_extract(
            tmp_path,
            "--relations",
            "--relation-template", str(DATA / "relation_template.pt.txt"),
            "--relation-mode", "multiclass",
        )
        assert code == EX_USAGE


class TestEval:
    def test_identical_dirs_perfect_f1(self, tmp_path, capsys):
        _, out_dir = run_extract(tmp_path)
        capsys.readouterr()  # drop the extract chatter
        code = main(["eval", "--gold", str(out_dir), "--pred", str(out_dir),
                     "--mode", "strict", "--json"])
        assert code == EX_OK
        report = json.loads(capsys.readouterr().out)
        assert report["ner"]["f1"] == 1.0

    def test_disjoint_ids_exit_65(self, tmp_path, capsys):
        gold = tmp_path / "gold"
        pred = tmp_path / "pred"
        _, out_dir = run_extract(tmp_path)
        gold.mkdir()
        pred.mkdir()
        (gold / "a.llmie").write_text(
            (out_dir / "ade_note.llmie").read_text("utf-8").replace(
                '"ade_note"', '"gold-only"'), encoding="utf-8")
        (pred / "b.llmie").write_text(
            (out_dir / "ade_note.llmie").read_text("utf-8").replace(
                '"ade_note"', '"pred-only"'), encoding="utf-8")
        code = main(["eval", "--gold", str(gold), "--pred", str(pred)])
        assert code == EX_DATAERR

    def test_toy_metrics_printed_to_four_decimals(self, tmp_path, capsys):
        # pred has one extra frame: P=3/4, R=1, F1=6/7
        _, out_dir = run_extract(tmp_path)
        gold_dir = tmp_path / "gold"
        gold_dir.mkdir()
        (gold_dir / "ade_note.llmie").write_text(
            (out_dir / "ade_note.llmie").read_text("utf-8"), encoding="utf-8")
        doc = load(out_dir / "ade_note.llmie")
        from framekit.datamodel import Frame, save
        doc.add_frame(Frame("0099", "Patient", 0, 7, {"Type": "Drug"}))
        save(doc, out_dir / "ade_note.llmie")
        code = main(["eval", "--gold", str(gold_dir), "--pred", str(out_dir),
                     "--mode", "strict"])
        assert code == EX_OK
        out = capsys.readouterr().out
        assert "0.7500" in out   # precision 3/4
        assert "1.0000" in out   # recall
        assert f"{6/7:.4f}" in out


class TestChat:
    def run_chat(self, tmp_path, monkeypatch, capsys, stdin_text):
        monkeypatch.chdir(tmp_path)
        monkeypatch.setattr("sys.stdin", io.StringIO(stdin_text))
        code = main(["chat", "--engine", "scripted",
                     "--rules", str(DATA / "chat_rules.json"),
                     "--extractor", "basic"])
        return code, capsys.readouterr().out

    def test_transcript_matches_golden(self, tmp_path, monkeypatch, capsys):
        stdin_text = (DATA / "chat_stdin.txt").read_text("utf-8")
        code, out = self.run_chat(tmp_path, monkeypatch, capsys, stdin_text)
        assert code == EX_OK
        golden = (DATA / "golden" / "chat_transcript.txt").read_text("utf-8")
        assert out == golden

    def test_save_writes_parseable_template(self, tmp_path, monkeypatch, capsys):
        stdin_text = (DATA / "chat_stdin.txt").read_text("utf-8")
        code, _ = self.run_chat(tmp_path, monkeypatch, capsys, stdin_text)
        assert code == EX_OK
        from framekit.prompting import PromptTemplate
        template = PromptTemplate.from_file(tmp_path / "out.pt.txt")
        assert "input" in template.placeholders

    def test_save_before_any_reply_keeps_session_alive(self, tmp_path, monkeypatch,
                                                       capsys):
        code, out = self.run_chat(tmp_path, monkeypatch, capsys,
                                  "/save nope.pt.txt\n/quit\n")
        assert code == EX_OK
        assert "error: no assistant reply to save yet" in out
        assert not (tmp_path / "nope.pt.txt").exists()


class TestRender:
    def test_render_writes_html(self, tmp_path, capsys):
        _, out_dir = run_extract(tmp_path)
        html_path = tmp_path / "view.html"
        code = main(["render", "--input", str(out_dir / "ade_note.llmie"),
                     "--output", str(html_path)])
        assert code == EX_OK
        html_text = html_path.read_text("utf-8")
        assert "lisinopril" in html_text
        assert 'data-frames="0001"' in html_text

    def test_render_missing_input(self, tmp_path):
        code = main(["render", "--input", str(tmp_path / "nope.llmie"),
                     "--output", str(tmp_path / "x.html")])
        assert code == EX_USAGE


class TestEngineUnreachable:
    def test_unreachable_backend_exits_69(self, tmp_path):
        from framekit.cli import EX_UNAVAILABLE
        code = main(["extract", "--engine", "openai",
                     "--base-url", "http://127.0.0.1:9/v1", "--model", "m",
                     "--timeout", "0.2",
                     "--template", str(DATA / "frame_template.pt.txt"),
                     "--extractor", "basic",
                     "--input", str(DATA / "ade_note.txt"),
                     "--output", str(tmp_path / "out")])
        assert code == EX_UNAVAILABLE


class TestEvalWarnings:
    def test_unmatched_doc_ids_reported(self, tmp_path, capsys):
        _, out_dir = run_extract(tmp_path)
        gold = tmp_path / "gold"
        gold.mkdir()
        content = (out_dir / "ade_note.llmie").read_text("utf-8")
        (gold / "ade_note.llmie").write_text(content, encoding="utf-8")
        (gold / "extra.llmie").write_text(
            content.replace('"ade_note"', '"gold-extra"'), encoding="utf-8")
        code = main(["eval", "--gold", str(gold), "--pred", str(out_dir)])
        assert code == EX_OK
        err = capsys.readouterr().err
        assert "gold-extra" in err and "only present in gold" in err


class TestUsageErrors:
    def test_unknown_subcommand(self):
        assert main(["frobnicate"]) == EX_USAGE

    def test_scripted_engine_requires_rules(self, tmp_path):
        code = main(["extract", "--engine", "scripted",
                     "--template", str(DATA / "frame_template.pt.txt"),
                     "--extractor", "basic",
                     "--input", str(DATA / "ade_note.txt"),
                     "--output", str(tmp_path / "out")])
        assert code == EX_USAGE
