"""Masked-LM adapter: scores affix candidates for masked dataset files.

The adapter reads the harness's masked-item JSONL, asks a masked language
model for a probability distribution over affix candidates at each mask
slot, and writes prediction JSONL that the harness's evaluator consumes
unmodified.  The file formats are the only coupling with the harness.
"""

from .config import AdapterConfig, MODES, SEGMENTATION_METHODS
from .items import MaskedItem, read_masked_items, write_predictions
from .scoring import StubScorer, score_items

__all__ = [
    "AdapterConfig",
    "MODES",
    "SEGMENTATION_METHODS",
    "MaskedItem",
    "StubScorer",
    "read_masked_items",
    "score_items",
    "write_predictions",
]
