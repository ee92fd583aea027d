"""WordPiece tokenization and derivative segmentation strategies.

Segmentation methods for presenting a masked derivative to a subword
model: HYP inserts a hyphen between prefix and word-initial base, INIT
keeps the word-initial base token, TOK forces the base into word-internal
pieces.  PROJ maps word-initial base embeddings into the word-internal
embedding space with a least-squares projection matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .morpho import Derivation

DEFAULT_UNK = "[UNK]"
DEFAULT_MAX_WORD_CHARS = 100


class SegMethod(Enum):
    HYP = "HYP"
    INIT = "INIT"
    TOK = "TOK"
    PROJ = "PROJ"


@dataclass(frozen=True)
class Vocab:
    id_by_token: dict[str, int]
    unk_token: str = DEFAULT_UNK

    def __post_init__(self):
        ids = sorted(self.id_by_token.values())
        if ids != list(range(len(ids))):
            raise ValueError("token ids must be unique and dense from 0")
        if self.unk_token not in self.id_by_token:
            raise ValueError(f"unk token {self.unk_token!r} missing from vocabulary")
        if not any(t.startswith("##") for t in self.id_by_token):
            raise ValueError("vocabulary has no word-internal ('##') tokens")

    def __contains__(self, token: str) -> bool:
        return token in self.id_by_token

    def __len__(self) -> int:
        return len(self.id_by_token)

    def id(self, token: str) -> int:
        return self.id_by_token[token]

    @classmethod
    def load(cls, path, unk_token: str = DEFAULT_UNK) -> "Vocab":
        """BERT vocab.txt convention: one token per line, line number = id."""
        id_by_token = {}
        with open(path, encoding="utf-8") as f:
            for i, line in enumerate(f):
                id_by_token[line.rstrip("\n")] = i
        return cls(id_by_token=id_by_token, unk_token=unk_token)


@dataclass(frozen=True)
class TokenSeq:
    tokens: tuple[str, ...]
    ids: tuple[int, ...]
    maskable: tuple[int, ...] = ()  # indices of affix tokens

    def __post_init__(self):
        if len(self.tokens) != len(self.ids):
            raise ValueError("tokens and ids must be parallel")
        if not self.tokens:
            raise ValueError("token sequence must be non-empty")

    def detokenize(self) -> str:
        return "".join(t[2:] if t.startswith("##") else t for t in self.tokens)


def _seq(tokens: Sequence[str], vocab: Vocab, maskable: Sequence[int] = ()) -> TokenSeq:
    return TokenSeq(
        tokens=tuple(tokens),
        ids=tuple(vocab.id(t) for t in tokens),
        maskable=tuple(maskable),
    )


def _greedy_pieces(word: str, vocab: Vocab, internal_from: int) -> Optional[list[str]]:
    """Greedy longest-match-first; positions >= internal_from need '##' forms.

    Returns None when some position has no match.
    """
    pieces = []
    start = 0
    while start < len(word):
        end = len(word)
        match = None
        while start < end:
            sub = word[start:end]
            if start >= internal_from:
                sub = "##" + sub
            if sub in vocab:
                match = sub
                break
            end -= 1
        if match is None:
            return None
        pieces.append(match)
        start = end
    return pieces


def wordpiece_tokenize(
    word: str,
    vocab: Vocab,
    max_word_chars: int = DEFAULT_MAX_WORD_CHARS,
) -> TokenSeq:
    """Greedy longest-match-first WordPiece; unmatched words map to unk."""
    if not word:
        raise ValueError("cannot tokenize an empty word")
    if len(word) > max_word_chars:
        return _seq([vocab.unk_token], vocab)
    pieces = _greedy_pieces(word, vocab, internal_from=1)
    if pieces is None:
        return _seq([vocab.unk_token], vocab)
    return _seq(pieces, vocab)


def _base_pieces(base: str, vocab: Vocab, internal: bool) -> list[str]:
    pieces = _greedy_pieces(base, vocab, internal_from=0 if internal else 1)
    return pieces if pieces is not None else [vocab.unk_token]


def segment(derivation: Derivation, method: SegMethod, vocab: Vocab) -> TokenSeq:
    """Render a derivative as tokens with affix positions flagged maskable.

    The suffix, when present, is always appended as its word-internal
    token; the method governs how a prefixed base is rendered.
    """
    if method is SegMethod.PROJ:
        raise ValueError("PROJ is an embedding strategy; segment with INIT and project embeddings")
    pfx = derivation.bundle.prefix
    sfx = derivation.bundle.suffix

    tokens: list[str] = []
    maskable: list[int] = []

    if pfx is not None:
        if pfx.form not in vocab:
            raise ValueError(f"prefix {pfx.form!r} missing from vocabulary")
        if method is SegMethod.HYP:
            if "-" not in vocab:
                raise ValueError("HYP requires a hyphen token in the vocabulary")
            bad = [t for t in vocab.id_by_token if len(t) > 1 and t.startswith("-")]
            if bad:
                raise ValueError(f"HYP unsafe: multi-char tokens start with '-': {bad[:3]}")
        maskable.append(len(tokens))
        tokens.append(pfx.form)
        if method is SegMethod.HYP:
            tokens.append("-")
        tokens.extend(_base_pieces(derivation.base, vocab, internal=method is SegMethod.TOK))
    else:
        tokens.extend(_base_pieces(derivation.base, vocab, internal=False))

    if sfx is not None:
        tok = "##" + sfx.form
        if tok not in vocab:
            raise ValueError(f"suffix {sfx.form!r} has no word-internal vocabulary token")
        maskable.append(len(tokens))
        tokens.append(tok)

    return _seq(tokens, vocab, maskable)


# --- Embeddings and least-squares projection -------------------------------


@dataclass(frozen=True)
class EmbeddingTable:
    dim: int
    vectors: dict[str, np.ndarray] = field(repr=False)

    def __post_init__(self):
        for tok, v in self.vectors.items():
            if v.shape != (self.dim,):
                raise ValueError(f"vector for {tok!r} has shape {v.shape}, expected ({self.dim},)")

    def __contains__(self, token: str) -> bool:
        return token in self.vectors

    def __getitem__(self, token: str) -> np.ndarray:
        return self.vectors[token]

    @classmethod
    def load(cls, path) -> "EmbeddingTable":
        """Text format: header 'n m', then 'token v1 ... vm' per line."""
        with open(path, encoding="utf-8") as f:
            header = f.readline().split()
            if len(header) != 2:
                raise ValueError("embedding file must start with an 'n m' header line")
            n, m = int(header[0]), int(header[1])
            vectors = {}
            for line in f:
                parts = line.rstrip("\n").split(" ")
                if len(parts) != m + 1:
                    raise ValueError(f"bad embedding line for token {parts[0]!r}")
                vectors[parts[0]] = np.array([float(x) for x in parts[1:]])
        if len(vectors) != n:
            raise ValueError(f"header declared {n} rows, file has {len(vectors)}")
        return cls(dim=m, vectors=vectors)


@dataclass(frozen=True)
class Projection:
    matrix: np.ndarray  # m x m
    residual: float
    solver: str  # "ols" or "ridge"

    def __post_init__(self):
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise ValueError("projection matrix must be square")


def fit_projection(
    pairs: Sequence[tuple[np.ndarray, np.ndarray]],
    ridge: Optional[float] = None,
) -> Projection:
    """Least-squares fit of a square matrix T with initial @ T ~= internal.

    Solves the normal equations; when the Gram matrix is singular, a ridge
    term is required (pass e.g. ridge=1e-6).
    """
    if len(pairs) < 1:
        raise ValueError("at least one embedding pair is required")
    E = np.vstack([p[0] for p in pairs]).astype(float)
    E_int = np.vstack([p[1] for p in pairs]).astype(float)
    if E.shape != E_int.shape or E.shape[1] != E_int.shape[1]:
        raise ValueError("all vectors must share one dimension")
    m = E.shape[1]
    gram = E.T @ E
    if ridge is None:
        if np.linalg.matrix_rank(gram) < m:
            raise ValueError("rank-deficient embedding matrix; refit with ridge=1e-6")
        matrix = np.linalg.solve(gram, E.T @ E_int)
        solver = "ols"
    else:
        matrix = np.linalg.solve(gram + ridge * np.eye(m), E.T @ E_int)
        solver = "ridge"
    residual = float(np.linalg.norm(E @ matrix - E_int) ** 2)
    return Projection(matrix=matrix, residual=residual, solver=solver)


def project(e: np.ndarray, proj: Projection) -> np.ndarray:
    """Map a word-initial embedding into the word-internal space."""
    if e.shape != (proj.matrix.shape[0],):
        raise ValueError(f"embedding dim {e.shape} does not match projection {proj.matrix.shape}")
    return e @ proj.matrix


def projection_pairs(
    bases: Sequence[str],
    embeddings: EmbeddingTable,
) -> list[tuple[str, np.ndarray, np.ndarray]]:
    """(base, initial vector, internal vector) for bases with both forms."""
    out = []
    for b in sorted(bases):
        if b in embeddings and "##" + b in embeddings:
            out.append((b, embeddings[b], embeddings["##" + b]))
    return out
