import json

import pytest
from click.testing import CliRunner

from mlm_adapter import (
    AdapterConfig,
    MaskedItem,
    StubScorer,
    read_masked_items,
    score_items,
    write_predictions,
)
from mlm_adapter.cli import main
from mlm_adapter.items import read_labels
from mlm_adapter.scoring import slot_distribution, split_label

PS_LABELS = ["un##able", "un##ness", "re##able", "re##ness", "non##able"]
P_LABELS = ["un", "re", "non", "anti"]
S_LABELS = ["able", "ness", "ity"]


def word_item(i, gold):
    tokens = ("the", "old", "coat", "is", "[MASK]", "now")
    return MaskedItem(f"w{i}", tokens, (4,), "wear", gold, "word")


def affix_item(i, gold):
    # prefix slot 4, base, suffix slot 6 — HYP-style affix masking
    tokens = ("the", "old", "coat", "is", "[MASK]", "wear", "[MASK]", "now")
    return MaskedItem(f"a{i}", tokens, (4, 6), "wear", gold, "affix")


class TestConfig:
    def test_defaults_valid(self):
        AdapterConfig()

    def test_bad_mode(self):
        with pytest.raises(ValueError, match="mode"):
            AdapterConfig(mode="zero-shot")

    def test_bad_method(self):
        with pytest.raises(ValueError, match="segmentation"):
            AdapterConfig(method="CHAR")

    def test_bad_batch_size(self):
        with pytest.raises(ValueError):
            AdapterConfig(batch_size=0)


class TestItemsIO:
    def test_roundtrip(self, tmp_path):
        path = tmp_path / "items.jsonl"
        item = word_item(0, "un")
        path.write_text(json.dumps({
            "id": item.item_id,
            "tokens": list(item.tokens),
            "mask_positions": list(item.mask_positions),
            "base": item.base,
            "gold": item.gold_label,
            "mode": item.mode,
        }) + "\n")
        assert read_masked_items(path) == [item]

    def test_malformed_line_reports_position(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "x"}\n')
        with pytest.raises(ValueError, match=":1:"):
            read_masked_items(path)

    def test_mask_position_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            MaskedItem("x", ("a", "b"), (5,), "a", "un", "word")

    def test_label_file(self, tmp_path):
        path = tmp_path / "labels.txt"
        path.write_text("# comment\nun\nre\n\n")
        assert read_labels(path) == ["un", "re"]
        path.write_text("un\nun\n")
        with pytest.raises(ValueError, match="duplicate"):
            read_labels(path)


class TestScoring:
    def test_ranking_covers_label_space_sorted(self):
        rows = score_items([word_item(0, "un")], P_LABELS, "P", StubScorer())
        (item_id, ranking), = rows
        assert item_id == "w0"
        assert sorted(l for l, _ in ranking) == sorted(P_LABELS)
        scores = [s for _, s in ranking]
        assert scores == sorted(scores, reverse=True)
        assert abs(sum(scores) - 1.0) < 1e-9

    def test_deterministic_per_seed(self):
        items = [word_item(i, "un") for i in range(5)]
        a = score_items(items, P_LABELS, "P", StubScorer(seed=1))
        b = score_items(items, P_LABELS, "P", StubScorer(seed=1))
        c = score_items(items, P_LABELS, "P", StubScorer(seed=2))
        assert a == b
        assert a != c

    def test_suffix_shape_uses_internal_tokens(self):
        vocab = {"##able", "##ness", "##ity"}
        rows = score_items([word_item(0, "able")], S_LABELS, "S", StubScorer(vocab))
        assert {l for l, _ in rows[0][1]} == set(S_LABELS)

    def test_ps_score_is_product_of_components(self):
        scorer = StubScorer(seed=3)
        item = affix_item(0, "un##able")
        rows = score_items([item], PS_LABELS, "PS", scorer)
        ranking = dict(rows[0][1])

        prefixes = sorted({split_label(l)[0] for l in PS_LABELS})
        suffixes = sorted({"##" + split_label(l)[1] for l in PS_LABELS})
        p_dist = slot_distribution(scorer, item.tokens, 4, prefixes)
        s_dist = slot_distribution(scorer, item.tokens, 6, suffixes)
        for label in PS_LABELS:
            p, s = split_label(label)
            assert ranking[label] == pytest.approx(
                p_dist[p] * s_dist["##" + s], abs=1e-6
            )

    def test_ps_requires_two_slots(self):
        with pytest.raises(ValueError, match="mask slots"):
            score_items([word_item(0, "un##able")], PS_LABELS, "PS", StubScorer())

    def test_ps_rejects_plain_labels(self):
        with pytest.raises(ValueError, match="bundle"):
            score_items([affix_item(0, "un##able")], ["un"], "PS", StubScorer())

    def test_missing_vocab_token_warns_and_drops(self):
        vocab = {"un", "re", "anti"}  # no "non"
        with pytest.warns(UserWarning, match="non"):
            rows = score_items([word_item(0, "un")], P_LABELS, "P", StubScorer(vocab))
        assert {l for l, _ in rows[0][1]} == {"un", "re", "anti"}

    def test_missing_suffix_drops_bundles(self):
        vocab = {"un", "re", "non", "##able"}  # no "##ness"
        with pytest.warns(UserWarning, match="ness"):
            rows = score_items([affix_item(0, "un##able")], PS_LABELS, "PS",
                               StubScorer(vocab))
        assert {l for l, _ in rows[0][1]} == {"un##able", "re##able", "non##able"}

    def test_all_candidates_missing_is_an_error(self):
        with pytest.warns(UserWarning), pytest.raises(ValueError, match="vocabulary"):
            score_items([word_item(0, "un")], P_LABELS, "P", StubScorer(set()))


class TestWireContract:
    def write_inputs(self, tmp_path, items, labels):
        items_path = tmp_path / "items.jsonl"
        with open(items_path, "w") as f:
            for item in items:
                f.write(json.dumps({
                    "id": item.item_id,
                    "tokens": list(item.tokens),
                    "mask_positions": list(item.mask_positions),
                    "base": item.base,
                    "gold": item.gold_label,
                    "mode": item.mode,
                }) + "\n")
        labels_path = tmp_path / "labels.txt"
        labels_path.write_text("\n".join(labels) + "\n")
        return items_path, labels_path

    def test_cli_score_stub(self, tmp_path):
        items_path, labels_path = self.write_inputs(
            tmp_path, [word_item(i, "un") for i in range(4)], P_LABELS)
        out = tmp_path / "preds.jsonl"
        result = CliRunner().invoke(main, [
            "score", "--items", str(items_path), "--labels", str(labels_path),
            "--shape", "P", "--out", str(out),
        ], catch_exceptions=False)
        assert result.exit_code == 0, result.output
        assert json.loads(result.output) == {"items": 4, "labels": 4}
        lines = [json.loads(l) for l in out.read_text().splitlines()]
        assert len(lines) == 4
        for obj in lines:
            assert set(obj) == {"id", "ranking"}
            assert all(len(pair) == 2 for pair in obj["ranking"])

    def test_cli_stub_refuses_training_modes(self, tmp_path):
        items_path, labels_path = self.write_inputs(
            tmp_path, [word_item(0, "un")], P_LABELS)
        result = CliRunner().invoke(main, [
            "score", "--items", str(items_path), "--labels", str(labels_path),
            "--shape", "P", "--out", str(tmp_path / "x.jsonl"),
            "--mode", "finetuned",
        ])
        assert result.exit_code == 1
        err = json.loads(result.stderr.strip().splitlines()[-1])
        assert err["type"] == "NotImplementedError"

    def test_output_readable_by_harness_evaluator(self, tmp_path):
        evaluation = pytest.importorskip(
            "derivkit.evaluation",
            reason="harness not installed; wire contract checked structurally elsewhere",
        )
        items = [word_item(i, P_LABELS[i % 4]) for i in range(8)]
        rows = score_items(items, P_LABELS, "P", StubScorer(seed=5))
        out = tmp_path / "preds.jsonl"
        write_predictions(rows, out)
        records = evaluation.read_predictions(out)
        report = evaluation.mrr(
            records, {i.item_id: i.gold_label for i in items})
        assert 0.0 <= report.macro <= 1.0
