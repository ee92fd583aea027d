from __future__ import annotations

from dataclasses import dataclass

MODES = ("pretrained-head-filtered", "trained-dcl", "finetuned")
SEGMENTATION_METHODS = ("HYP", "INIT", "TOK", "PROJ")


@dataclass(frozen=True)
class AdapterConfig:
    """How to run the model side of the bridge.

    `pretrained-head-filtered` uses the model's language-modeling head as-is,
    restricted to the affix candidates.  `trained-dcl` trains a classification
    layer on frozen model states and `finetuned` updates the whole model; both
    require a training backend and a GPU budget, so the bundled scorers only
    implement the pretrained mode (the others fail fast at load time).
    """

    model: str = "bert-base-uncased"
    mode: str = "pretrained-head-filtered"
    method: str = "INIT"
    batch_size: int = 32
    device: str = "cpu"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}, expected one of {MODES}")
        if self.method not in SEGMENTATION_METHODS:
            raise ValueError(
                f"unknown segmentation method {self.method!r}, "
                f"expected one of {SEGMENTATION_METHODS}"
            )
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
