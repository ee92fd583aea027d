"""Scoring of ranked affix predictions: per-affix and macro MRR, accuracy.

Reciprocal ranks are zeroed beyond rank 10.  The macro mean runs over the
affix labels attested in the gold data.  Ties at the gold label's score are
scored pessimistically: the gold takes the worst rank within its tie group.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

RANK_CUTOFF = 10


@dataclass(frozen=True)
class PredictionRecord:
    item_id: str
    ranking: tuple[tuple[str, float], ...]  # (label, score), scores non-increasing

    def __post_init__(self):
        labels = [l for l, _ in self.ranking]
        if len(labels) != len(set(labels)):
            raise ValueError(f"duplicate labels in ranking for item {self.item_id}")
        scores = [s for _, s in self.ranking]
        if any(a < b for a, b in zip(scores, scores[1:])):
            raise ValueError(f"scores must be non-increasing for item {self.item_id}")


@dataclass(frozen=True)
class MrrReport:
    per_affix: dict[str, float]  # label -> MRR_a
    support: dict[str, int]  # label -> |D_a|
    macro: float
    accuracy: float


def rank_of_gold(record: PredictionRecord, gold: str) -> float:
    """1-based rank of the gold label, inf if absent; worst rank among ties."""
    gold_score = None
    for label, score in record.ranking:
        if label == gold:
            gold_score = score
            break
    if gold_score is None:
        return math.inf
    return sum(1 for _, s in record.ranking if s >= gold_score)


def _reciprocal(rank: float) -> float:
    if rank is math.inf or rank > RANK_CUTOFF:
        return 0.0
    return 1.0 / rank


def mrr(records: Iterable[PredictionRecord], golds: Mapping[str, str]) -> MrrReport:
    """Per-affix mean reciprocal rank and its macro average.

    `golds` maps item id to the gold affix label; every gold item must have
    exactly one prediction record.
    """
    by_id = {}
    for r in records:
        if r.item_id in by_id:
            raise ValueError(f"duplicate prediction record for item {r.item_id}")
        by_id[r.item_id] = r
    missing = sorted(set(golds) - set(by_id))
    if missing:
        raise ValueError(f"missing prediction records for items: {missing[:10]}")

    sums: dict[str, float] = {}
    support: dict[str, int] = {}
    hits = 0
    for item_id, gold in golds.items():
        rank = rank_of_gold(by_id[item_id], gold)
        sums[gold] = sums.get(gold, 0.0) + _reciprocal(rank)
        support[gold] = support.get(gold, 0) + 1
        if rank == 1:
            hits += 1

    per_affix = {a: sums[a] / support[a] for a in sums}
    macro = sum(per_affix.values()) / len(per_affix) if per_affix else 0.0
    acc = hits / len(golds) if golds else 0.0
    return MrrReport(per_affix=per_affix, support=support, macro=macro, accuracy=acc)


def accuracy(records: Iterable[PredictionRecord], golds: Mapping[str, str]) -> float:
    """Fraction of items whose rank-1 prediction equals the gold label."""
    return mrr(records, golds).accuracy


def wellformedness_accuracy(
    predictions: Mapping[str, str],
    golds: Mapping[str, str],
) -> float:
    """Accuracy of binary well-formedness labels keyed by item id."""
    missing = sorted(set(golds) - set(predictions))
    if missing:
        raise ValueError(f"missing predictions for items: {missing[:10]}")
    if not golds:
        raise ValueError("empty gold set")
    return sum(predictions[i] == golds[i] for i in golds) / len(golds)


# --- Prediction file I/O ----------------------------------------------------


def write_predictions(records: Iterable[PredictionRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            f.write(json.dumps({"id": r.item_id, "ranking": [[l, s] for l, s in r.ranking]}) + "\n")


def read_predictions(path) -> list[PredictionRecord]:
    out = []
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                out.append(
                    PredictionRecord(
                        item_id=str(obj["id"]),
                        ranking=tuple((str(l), float(s)) for l, s in obj["ranking"]),
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{line_no}: invalid prediction record: {exc}") from exc
    return out


def report_tsv(report: MrrReport) -> str:
    """One row per affix plus a macro row."""
    lines = ["affix\tsupport\tmrr"]
    for affix in sorted(report.per_affix):
        lines.append(f"{affix}\t{report.support[affix]}\t{report.per_affix[affix]:.6f}")
    lines.append(f"__macro__\t{sum(report.support.values())}\t{report.macro:.6f}")
    return "\n".join(lines) + "\n"


def report_json(report: MrrReport) -> str:
    return json.dumps(
        {
            "per_affix": report.per_affix,
            "support": report.support,
            "macro": report.macro,
            "accuracy": report.accuracy,
        },
        sort_keys=True,
    )
