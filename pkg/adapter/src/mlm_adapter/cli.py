import json
import sys

import click

from .config import MODES, SEGMENTATION_METHODS, AdapterConfig
from .items import read_labels, read_masked_items, write_predictions
from .scoring import StubScorer, score_items


@click.group()
def main():
    """Score masked affix-prediction items with a masked language model."""


@main.command("score")
@click.option("--items", "items_path", required=True, type=click.Path(exists=True))
@click.option("--labels", "labels_path", required=True, type=click.Path(exists=True),
              help="candidate label space, one label per line")
@click.option("--shape", type=click.Choice(["P", "S", "PS"]), required=True)
@click.option("--out", required=True, type=click.Path())
@click.option("--backend", type=click.Choice(["stub", "transformers"]), default="stub")
@click.option("--model", default="bert-base-uncased")
@click.option("--mode", type=click.Choice(MODES), default="pretrained-head-filtered")
@click.option("--method", type=click.Choice(SEGMENTATION_METHODS), default="INIT")
@click.option("--batch-size", type=int, default=32)
@click.option("--device", default="cpu")
@click.option("--seed", type=int, default=0, help="stub backend determinism")
def score(items_path, labels_path, shape, out, backend, model, mode, method,
          batch_size, device, seed):
    try:
        config = AdapterConfig(model=model, mode=mode, method=method,
                               batch_size=batch_size, device=device)
        if backend == "stub":
            if mode != "pretrained-head-filtered":
                raise NotImplementedError(
                    f"mode {mode!r} requires a training backend; the stub only "
                    "serves pretrained-head-filtered"
                )
            scorer = StubScorer(seed=seed)
        else:
            from .hf import TransformersScorer
            scorer = TransformersScorer(config)
        items = read_masked_items(items_path)
        labels = read_labels(labels_path)
        rows = score_items(items, labels, shape, scorer, config)
        write_predictions(rows, out)
        click.echo(json.dumps({"items": len(rows), "labels": len(labels)}))
    except Exception as exc:  # noqa: BLE001 - uniform machine-readable exit
        sys.stderr.write(json.dumps({"error": str(exc), "type": type(exc).__name__}) + "\n")
        sys.exit(1)


if __name__ == "__main__":
    main()
