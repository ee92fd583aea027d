"""Optional transformers backend (install with the `hf` extra).

Only the pretrained-head-filtered mode is implemented: the model's
language-modeling head scores the candidate affix tokens at each mask
slot.  trained-dcl and finetuned need a training loop and GPU budget;
they fail fast here rather than pretending to run.
"""

from __future__ import annotations

from typing import Sequence

from .config import AdapterConfig


class TransformersScorer:
    def __init__(self, config: AdapterConfig):
        if config.mode != "pretrained-head-filtered":
            raise NotImplementedError(
                f"mode {config.mode!r} requires a training backend; "
                "only pretrained-head-filtered is bundled"
            )
        try:
            import torch
            from transformers import AutoModelForMaskedLM, AutoTokenizer
        except ImportError as exc:
            raise RuntimeError(
                "transformers backend not installed; pip install 'mlm-adapter[hf]'"
            ) from exc
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(config.model)
            self.model = AutoModelForMaskedLM.from_pretrained(config.model)
        except Exception as exc:
            raise RuntimeError(f"model load failure for {config.model!r}: {exc}") from exc
        self.torch = torch
        self.model.to(config.device)
        self.model.eval()
        self.device = config.device

    def has_token(self, token: str) -> bool:
        return token in self.tokenizer.get_vocab()

    def token_logits(
        self, tokens: Sequence[str], position: int, candidates: Sequence[str]
    ) -> dict[str, float]:
        pieces = list(tokens)
        pieces[position] = self.tokenizer.mask_token
        ids = self.tokenizer.convert_tokens_to_ids(
            [self.tokenizer.cls_token] + pieces + [self.tokenizer.sep_token]
        )
        batch = self.torch.tensor([ids], device=self.device)
        with self.torch.no_grad():
            logits = self.model(batch).logits[0, position + 1]
        vocab = self.tokenizer.get_vocab()
        return {c: float(logits[vocab[c]]) for c in candidates}
