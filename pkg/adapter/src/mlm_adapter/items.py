"""Wire formats shared with the harness: masked items in, predictions out."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence


@dataclass(frozen=True)
class MaskedItem:
    item_id: str
    tokens: tuple[str, ...]
    mask_positions: tuple[int, ...]
    base: str
    gold_label: str
    mode: str

    def __post_init__(self):
        if not self.mask_positions:
            raise ValueError(f"item {self.item_id}: no mask positions")
        for p in self.mask_positions:
            if not 0 <= p < len(self.tokens):
                raise ValueError(f"item {self.item_id}: mask position {p} out of range")


def read_masked_items(path) -> list[MaskedItem]:
    items = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                items.append(MaskedItem(
                    item_id=obj["id"],
                    tokens=tuple(obj["tokens"]),
                    mask_positions=tuple(obj["mask_positions"]),
                    base=obj["base"],
                    gold_label=obj["gold"],
                    mode=obj["mode"],
                ))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad masked item: {exc}") from exc
    return items


def read_labels(path) -> list[str]:
    """Candidate label space, one label per line ('un', '##able' or 'un##able')."""
    labels = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line and not line.startswith("#"):
                labels.append(line)
    if not labels:
        raise ValueError(f"{path}: empty label space")
    if len(set(labels)) != len(labels):
        raise ValueError(f"{path}: duplicate labels")
    return labels


def write_predictions(rows: Iterable[tuple[str, Sequence[tuple[str, float]]]], path):
    """rows: (item_id, ranking) with ranking sorted by descending score."""
    with open(path, "w", encoding="utf-8") as f:
        for item_id, ranking in rows:
            f.write(json.dumps({
                "id": item_id,
                "ranking": [[label, score] for label, score in ranking],
            }) + "\n")
