"""Candidate scoring against a masked language model.

Prefix candidates are scored at the first mask slot, suffix candidates
(word-internal, '##'-marked tokens) at the last.  Bundle labels such as
"un##able" are ranked by the product of the independent prefix and suffix
probabilities; the model gives no way to capture the dependency between
the two slots, so the product is exact by construction.
"""

from __future__ import annotations

import hashlib
import math
import warnings
from typing import Protocol, Sequence

from .config import AdapterConfig
from .items import MaskedItem


class Scorer(Protocol):
    def has_token(self, token: str) -> bool: ...

    def token_logits(
        self, tokens: Sequence[str], position: int, candidates: Sequence[str]
    ) -> dict[str, float]:
        """Unnormalized log-scores for candidate tokens at a mask slot."""


class StubScorer:
    """Deterministic stand-in for a real model.

    Logits are hashes of (seed, candidate, slot, context), so scores are
    reproducible, context-sensitive, and free of any model download.  A
    vocabulary may be supplied to exercise the mismatch path.
    """

    def __init__(self, vocab: set[str] | None = None, seed: int = 0):
        self.vocab = vocab
        self.seed = seed

    def has_token(self, token: str) -> bool:
        return self.vocab is None or token in self.vocab

    def token_logits(self, tokens, position, candidates):
        out = {}
        context = " ".join(tokens)
        for cand in candidates:
            digest = hashlib.sha256(
                f"{self.seed}|{cand}|{position}|{context}".encode()
            ).hexdigest()
            out[cand] = int(digest[:12], 16) / 16 ** 12 * 8.0
        return out


def slot_distribution(
    scorer: Scorer,
    tokens: Sequence[str],
    position: int,
    candidates: Sequence[str],
) -> dict[str, float]:
    """Softmax over the candidate tokens only (affix-filtered head)."""
    logits = scorer.token_logits(tokens, position, candidates)
    peak = max(logits.values())
    exp = {c: math.exp(v - peak) for c, v in logits.items()}
    total = sum(exp.values())
    return {c: v / total for c, v in exp.items()}


def split_label(label: str) -> tuple[str | None, str | None]:
    """'un' -> (un, None); 'un##able' -> (un, able); a bare suffix form is
    only distinguishable by the caller's shape argument."""
    if "##" in label:
        prefix, _, suffix = label.partition("##")
        return (prefix or None, suffix or None)
    return (label, None)


def _available(scorer, forms_to_tokens: dict[str, str]) -> dict[str, str]:
    usable = {}
    for form, token in forms_to_tokens.items():
        if scorer.has_token(token):
            usable[form] = token
        else:
            warnings.warn(
                f"affix {form!r}: token {token!r} absent from model vocabulary; "
                "dropped from ranking",
                stacklevel=2,
            )
    if not usable:
        raise ValueError("no candidate affix is present in the model vocabulary")
    return usable


def score_items(
    items: Sequence[MaskedItem],
    labels: Sequence[str],
    shape: str,
    scorer: Scorer,
    config: AdapterConfig | None = None,
) -> list[tuple[str, list[tuple[str, float]]]]:
    """Rank the label space for every item; returns (item_id, ranking) rows."""
    config = config or AdapterConfig()
    if shape not in ("P", "S", "PS"):
        raise ValueError(f"unknown shape {shape!r}")

    if shape == "PS":
        bundles = {}
        for label in labels:
            prefix, suffix = split_label(label)
            if prefix is None or suffix is None:
                raise ValueError(f"label {label!r} is not a prefix##suffix bundle")
            bundles[label] = (prefix, suffix)
        prefix_tokens = _available(
            scorer, {p: p for p, _ in bundles.values()}
        )
        suffix_tokens = _available(
            scorer, {s: "##" + s for _, s in bundles.values()}
        )
        rows = []
        for item in items:
            if len(item.mask_positions) < 2:
                raise ValueError(
                    f"item {item.item_id}: PS scoring needs separate prefix and "
                    "suffix mask slots (affix masking mode)"
                )
            p_slot, s_slot = item.mask_positions[0], item.mask_positions[-1]
            p_dist = slot_distribution(
                scorer, item.tokens, p_slot, sorted(set(prefix_tokens.values()))
            )
            s_dist = slot_distribution(
                scorer, item.tokens, s_slot, sorted(set(suffix_tokens.values()))
            )
            scored = [
                (label, p_dist[prefix_tokens[p]] * s_dist[suffix_tokens[s]])
                for label, (p, s) in bundles.items()
                if p in prefix_tokens and s in suffix_tokens
            ]
            scored.sort(key=lambda pair: (-pair[1], pair[0]))
            rows.append((item.item_id, scored))
        return rows

    to_token = (lambda l: l) if shape == "P" else (lambda l: "##" + l)
    tokens_by_label = _available(scorer, {l: to_token(l) for l in labels})
    candidates = sorted(set(tokens_by_label.values()))
    rows = []
    for item in items:
        slot = item.mask_positions[0 if shape == "P" else -1]
        dist = slot_distribution(scorer, item.tokens, slot, candidates)
        scored = [(l, dist[t]) for l, t in tokens_by_label.items()]
        scored.sort(key=lambda pair: (-pair[1], pair[0]))
        rows.append((item.item_id, scored))
    return rows
