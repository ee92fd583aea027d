"""Built-in predictors: a seeded random ranking baseline and a linear
softmax classifier over hashed context and base-character features.

Both emit the same ranked-prediction records external models use, so the
evaluation harness treats them interchangeably.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import sparse

from .dataset import MaskedItem
from .evaluation import PredictionRecord
from .morpho import Lexicon, Shape

DEFAULT_BUCKETS = 2 ** 18


@dataclass(frozen=True)
class LabelSpace:
    shape: Shape
    labels: tuple[str, ...]

    def __post_init__(self):
        if not self.labels:
            raise ValueError("label space must be non-empty")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("duplicate labels")

    @classmethod
    def for_shape(
        cls,
        shape: Shape,
        lexicon: Lexicon,
        train_items: Iterable = (),
    ) -> "LabelSpace":
        """P and S use the lexicon's affix inventory; PS uses the bundle
        labels observed in training."""
        if shape is Shape.P:
            labels = sorted(lexicon.prefix_forms)
        elif shape is Shape.S:
            labels = sorted(lexicon.suffix_forms)
        else:
            labels = sorted(
                {
                    item.derivation.bundle.label
                    for item in train_items
                    if item.derivation.shape is Shape.PS
                }
            )
        return cls(shape=shape, labels=tuple(labels))


def random_baseline(
    item_ids: Sequence[str],
    labelspace: LabelSpace,
    seed: int,
) -> list[PredictionRecord]:
    """Independent uniform random permutation of the label space per item."""
    rng = np.random.default_rng(seed)
    labels = labelspace.labels
    k = len(labels)
    order = np.argsort(rng.random((len(item_ids), k)), axis=1)
    records = []
    for item_id, perm in zip(item_ids, order):
        ranking = tuple((labels[j], float(k - r) / k) for r, j in enumerate(perm))
        records.append(PredictionRecord(item_id=item_id, ranking=ranking))
    return records


# --- Softmax over hashed features ---------------------------------------------


@dataclass(frozen=True)
class FeatureSpec:
    window: int = 5
    ngram_min: int = 2
    ngram_max: int = 4
    n_buckets: int = DEFAULT_BUCKETS


@dataclass
class Hyper:
    window: int = 5
    lr: float = 0.5
    epochs: int = 10
    l2: float = 1e-4
    batch_size: int = 64
    n_buckets: int = DEFAULT_BUCKETS
    seed: int = 0


@dataclass
class SoftmaxModel:
    labels: tuple[str, ...]
    spec: FeatureSpec
    weights: np.ndarray  # n_buckets x n_labels
    final_train_loss: Optional[float] = None

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(
                {
                    "format": "derivkit-softmax-v1",
                    "labels": list(self.labels),
                    "spec": {
                        "window": self.spec.window,
                        "ngram_min": self.spec.ngram_min,
                        "ngram_max": self.spec.ngram_max,
                        "n_buckets": self.spec.n_buckets,
                    },
                    "weights": self.weights.tolist(),
                    "final_train_loss": self.final_train_loss,
                },
                f,
            )

    @classmethod
    def load(cls, path) -> "SoftmaxModel":
        with open(path, encoding="utf-8") as f:
            obj = json.load(f)
        if obj.get("format") != "derivkit-softmax-v1":
            raise ValueError(f"{path}: not a derivkit softmax model file")
        return cls(
            labels=tuple(obj["labels"]),
            spec=FeatureSpec(**obj["spec"]),
            weights=np.array(obj["weights"]),
            final_train_loss=obj.get("final_train_loss"),
        )


def _bucket(feature: str, n_buckets: int) -> int:
    return zlib.crc32(feature.encode("utf-8")) % n_buckets


def featurize(item: MaskedItem, spec: FeatureSpec) -> list[int]:
    """Hashed bag: context words within the window plus base char n-grams."""
    pos = item.mask_positions[0]
    lo = max(0, pos - spec.window)
    hi = min(len(item.tokens), pos + spec.window + 1)
    feats = []
    for i in range(lo, hi):
        if i == pos:
            continue
        feats.append("w=" + item.tokens[i].lower())
    padded = f"^{item.base}$"
    for n in range(spec.ngram_min, spec.ngram_max + 1):
        for i in range(len(padded) - n + 1):
            feats.append(f"g{n}=" + padded[i: i + n])
    return [_bucket(f, spec.n_buckets) for f in feats]


def _feature_matrix(items: Sequence[MaskedItem], spec: FeatureSpec) -> sparse.csr_matrix:
    rows, cols, vals = [], [], []
    for i, item in enumerate(items):
        for b in featurize(item, spec):
            rows.append(i)
            cols.append(b)
            vals.append(1.0)
    return sparse.csr_matrix(
        (vals, (rows, cols)), shape=(len(items), spec.n_buckets)
    )


def loss_and_grad(
    weights: np.ndarray,
    features: sparse.csr_matrix,
    label_idx: np.ndarray,
    l2: float,
) -> tuple[float, np.ndarray]:
    """Mean cross-entropy plus L2 penalty, with its analytic gradient."""
    n = features.shape[0]
    logits = features @ weights
    logits -= logits.max(axis=1, keepdims=True)
    exp = np.exp(logits)
    probs = exp / exp.sum(axis=1, keepdims=True)
    nll = -np.log(probs[np.arange(n), label_idx] + 1e-300).mean()
    loss = nll + 0.5 * l2 * float((weights ** 2).sum())
    delta = probs
    delta[np.arange(n), label_idx] -= 1.0
    grad = (features.T @ delta) / n + l2 * weights
    return float(loss), np.asarray(grad)


def train_softmax(
    items: Sequence[MaskedItem],
    labelspace: LabelSpace,
    hyper: Optional[Hyper] = None,
) -> SoftmaxModel:
    """Mini-batch gradient descent on cross-entropy with L2.

    Labels absent from training keep zero weights and stay rankable.
    """
    if not items:
        raise ValueError("empty training set")
    hyper = hyper or Hyper()
    spec = FeatureSpec(window=hyper.window, n_buckets=hyper.n_buckets)
    label_to_idx = {l: i for i, l in enumerate(labelspace.labels)}
    unknown = sorted({i.gold_label for i in items} - set(label_to_idx))
    if unknown:
        raise ValueError(f"training items carry labels outside the label space: {unknown[:5]}")

    features = _feature_matrix(items, spec)
    label_idx = np.array([label_to_idx[i.gold_label] for i in items])
    weights = np.zeros((spec.n_buckets, len(labelspace.labels)))

    rng = np.random.default_rng(hyper.seed)
    n = len(items)
    loss = None
    for _ in range(hyper.epochs):
        order = rng.permutation(n)
        for start in range(0, n, hyper.batch_size):
            batch = order[start: start + hyper.batch_size]
            _, grad = loss_and_grad(weights, features[batch], label_idx[batch], hyper.l2)
            weights -= hyper.lr * grad
    loss, _ = loss_and_grad(weights, features, label_idx, hyper.l2)
    return SoftmaxModel(
        labels=labelspace.labels,
        spec=spec,
        weights=weights,
        final_train_loss=loss,
    )


def predict_softmax(
    model: SoftmaxModel,
    items: Sequence[MaskedItem],
) -> list[PredictionRecord]:
    """Full label ranking per item by descending probability, ties broken
    lexicographically."""
    if not items:
        return []
    features = _feature_matrix(items, model.spec)
    logits = features @ model.weights
    logits = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(logits)
    probs = exp / exp.sum(axis=1, keepdims=True)
    records = []
    for item, p in zip(items, probs):
        order = sorted(range(len(model.labels)), key=lambda j: (-p[j], model.labels[j]))
        ranking = tuple((model.labels[j], float(p[j])) for j in order)
        records.append(PredictionRecord(item_id=item.item_id, ranking=ranking))
    return records
