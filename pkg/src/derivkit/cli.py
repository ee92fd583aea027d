"""Command-line entry point orchestrating the pipeline end to end.

File formats are the module interchange formats: lexicon text sections,
BERT-style vocab.txt, JSONL datasets and predictions, TSV reports.
Failures exit nonzero with a machine-readable JSON error on stderr.
"""

from __future__ import annotations

import functools
import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import baselines, confusion, dataset, evaluation, morpho, tokenizer


def _fail(exc: Exception) -> None:
    sys.stderr.write(json.dumps({"error": str(exc), "type": type(exc).__name__}) + "\n")
    sys.exit(1)


def guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except Exception as exc:  # noqa: BLE001 - uniform machine-readable exit
            _fail(exc)

    return wrapper


def _echo_seed(seed: int) -> None:
    sys.stderr.write(json.dumps({"seed": seed}) + "\n")


def _load_config(path: str) -> dict:
    """Flat key=value config; keys are option names, applied as defaults."""
    values = {}
    with open(path, encoding="utf-8") as f:
        for raw in f:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"config line is not key=value: {line!r}")
            key, _, value = line.partition("=")
            values[key.strip().replace("-", "_")] = value.strip()
    return values


@click.group()
@click.option("--config", type=click.Path(exists=True), default=None,
              help="key=value file supplying option defaults")
@click.option("--jobs", type=int, default=os.cpu_count(),
              help="parallelism degree (output is order-independent)")
@click.pass_context
def main(ctx, config, jobs):
    """Derivational morphology dataset, baseline, and analysis toolkit."""
    ctx.ensure_object(dict)
    ctx.obj["jobs"] = jobs
    if config:
        defaults = _load_config(config)
        # apply the flat defaults to every (sub)command
        def spread(group):
            out = dict(defaults)
            if hasattr(group, "commands"):
                for name, cmd in group.commands.items():
                    out[name] = spread(cmd)
            return out
        ctx.default_map = spread(main)


# --- lexicon ------------------------------------------------------------------


@main.group()
def lexicon():
    """Affix/base lexicon construction."""


@lexicon.command("build")
@click.option("--vocab", "vocab_path", required=True, type=click.Path(exists=True))
@click.option("--prefixes", "prefixes_path", required=True, type=click.Path(exists=True))
@click.option("--suffixes", "suffixes_path", required=True, type=click.Path(exists=True))
@click.option("--stopwords", "stopwords_path", type=click.Path(exists=True), default=None)
@click.option("--out", required=True, type=click.Path())
@guarded
def lexicon_build(vocab_path, prefixes_path, suffixes_path, stopwords_path, out):
    vocab = tokenizer.Vocab.load(vocab_path)
    stopwords = set(morpho.load_affix_list(stopwords_path)) if stopwords_path else set()
    lex = morpho.build_lexicon(
        vocab.id_by_token,
        morpho.load_affix_list(prefixes_path),
        morpho.load_affix_list(suffixes_path),
        stopwords,
    )
    morpho.save_lexicon(lex, out)
    click.echo(json.dumps({
        "prefixes": len(lex.prefixes),
        "suffixes": len(lex.suffixes),
        "bases": len(lex.bases),
    }))


# --- dataset ------------------------------------------------------------------


@main.group("dataset")
def dataset_group():
    """Corpus ingestion, extraction, binning, splitting, masking."""


@dataset_group.command("extract")
@click.option("--corpus", "corpus_paths", multiple=True, type=click.Path(exists=True))
@click.option("--corpus-dir", envvar="DERIVKIT_CORPUS_DIR", type=click.Path(), default=None,
              help="directory of corpus files (default from DERIVKIT_CORPUS_DIR)")
@click.option("--lexicon", "lexicon_path", required=True, type=click.Path(exists=True))
@click.option("--bots", "bots_path", type=click.Path(exists=True), default=None)
@click.option("--out", required=True, type=click.Path())
@guarded
def dataset_extract(corpus_paths, corpus_dir, lexicon_path, bots_path, out):
    """Extract derivative occurrences in context; writes OUT and OUT.meta.json."""
    paths = list(corpus_paths)
    if corpus_dir:
        paths += sorted(
            str(p) for p in Path(corpus_dir).iterdir()
            if p.suffix in (".txt", ".jsonl")
        )
    if not paths:
        raise ValueError("no corpus files given (use --corpus or --corpus-dir)")
    bots = frozenset(morpho.load_affix_list(bots_path)) if bots_path else frozenset()
    lex = morpho.load_lexicon(lexicon_path)
    ingested = dataset.ingest(paths, dataset.FilterConfig(bot_authors=bots))
    records = dataset.extract(ingested.sentences, lex)
    with open(out, "w", encoding="utf-8") as f:
        for r in records:
            b = r.derivation.bundle
            f.write(json.dumps({
                "tokens": list(r.sentence.tokens),
                "d": r.sentence.d,
                "base": r.derivation.base,
                "prefix": b.prefix.form if b.prefix else None,
                "suffix": b.suffix.form if b.suffix else None,
                "shape": r.derivation.shape.value,
            }) + "\n")
    meta = {
        "total_tokens": ingested.total_tokens,
        "drops": dict(ingested.drops),
        "file_errors": ingested.file_errors,
        "occurrences": len(records),
    }
    with open(out + ".meta.json", "w", encoding="utf-8") as f:
        json.dump(meta, f)
    click.echo(json.dumps(meta))


def _read_occurrences(path) -> list[dataset.OccurrenceRecord]:
    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            sentence = dataset.ContextSentence(tuple(obj["tokens"]), obj["d"])
            bundle = morpho.bundle(obj.get("prefix"), obj.get("suffix"))
            out.append(dataset.OccurrenceRecord(
                sentence=sentence,
                derivation=morpho.Derivation(
                    surface=sentence.tokens[sentence.d].lower(),
                    base=obj["base"],
                    bundle=bundle,
                ),
            ))
    return out


def _total_tokens(occurrences_path) -> int:
    meta_path = occurrences_path + ".meta.json"
    if os.path.exists(meta_path):
        with open(meta_path, encoding="utf-8") as f:
            return json.load(f)["total_tokens"]
    return 0


@dataset_group.command("bin")
@click.option("--occurrences", "occ_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@guarded
def dataset_bin(occ_path, out):
    records = _read_occurrences(occ_path)
    bins, _ = dataset.bin_records(records, _total_tokens(occ_path))
    with open(out, "w", encoding="utf-8") as f:
        json.dump(bins, f, sort_keys=True)
    click.echo(json.dumps({"binned_types": len(bins)}))


@dataset_group.command("stats")
@click.option("--occurrences", "occ_path", required=True, type=click.Path(exists=True))
@click.option("--out", type=click.Path(), default=None)
@guarded
def dataset_stats(occ_path, out):
    records = _read_occurrences(occ_path)
    _, stats = dataset.bin_records(records, _total_tokens(occ_path))
    text = stats.tsv()
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


@dataset_group.command("split")
@click.option("--occurrences", "occ_path", required=True, type=click.Path(exists=True))
@click.option("--bins", "bins_path", required=True, type=click.Path(exists=True))
@click.option("--setting", type=click.Choice(["SHARED", "SPLIT"]), required=True)
@click.option("--seed", type=int, required=True)
@click.option("--out", required=True, type=click.Path())
@guarded
def dataset_split(occ_path, bins_path, setting, seed, out):
    _echo_seed(seed)
    records = _read_occurrences(occ_path)
    with open(bins_path, encoding="utf-8") as f:
        bins = json.load(f)
    items = dataset.split_records(records, bins, setting, seed)
    dataset.write_items(items, out)
    click.echo(json.dumps({"items": len(items), "ratios": dataset.achieved_ratios(items)}))


@dataset_group.command("mask")
@click.option("--items", "items_path", required=True, type=click.Path(exists=True))
@click.option("--mode", type=click.Choice(["word", "affix"]), default="word")
@click.option("--method", type=click.Choice([m.value for m in tokenizer.SegMethod]),
              default="HYP", help="segmentation method for affix mode")
@click.option("--vocab", "vocab_path", type=click.Path(exists=True), default=None)
@click.option("--split", "split_filter", type=click.Choice(dataset.SPLIT_NAMES), default=None)
@click.option("--shape", "shape_filter", type=click.Choice(["P", "S", "PS"]), default=None)
@click.option("--out", required=True, type=click.Path())
@guarded
def dataset_mask(items_path, mode, method, vocab_path, split_filter, shape_filter, out):
    items = dataset.read_items(items_path)
    if split_filter:
        items = [i for i in items if i.split == split_filter]
    if shape_filter:
        items = [i for i in items if i.derivation.shape.value == shape_filter]
    segmenter = None
    if mode == "affix":
        if not vocab_path:
            raise ValueError("affix mode requires --vocab")
        vocab = tokenizer.Vocab.load(vocab_path)
        seg_method = tokenizer.SegMethod(method)
        segmenter = lambda d: tokenizer.segment(d, seg_method, vocab)
    with open(out, "w", encoding="utf-8") as f:
        for item in items:
            m = dataset.mask(item, mode, segmenter)
            f.write(json.dumps({
                "id": m.item_id,
                "tokens": list(m.tokens),
                "mask_positions": list(m.mask_positions),
                "base": m.base,
                "gold": m.gold_label,
                "mode": m.mode,
            }) + "\n")
    click.echo(json.dumps({"masked": len(items)}))


@dataset_group.command("wellformed")
@click.option("--items", "items_path", required=True, type=click.Path(exists=True))
@click.option("--lexicon", "lexicon_path", required=True, type=click.Path(exists=True))
@click.option("--seed", type=int, required=True)
@click.option("--out", required=True, type=click.Path())
@guarded
def dataset_wellformed(items_path, lexicon_path, seed, out):
    _echo_seed(seed)
    items = dataset.read_items(items_path)
    lex = morpho.load_lexicon(lexicon_path)
    wf = dataset.build_wellformedness(items, lex, seed)
    dataset.write_wellformedness(wf, out)
    click.echo(json.dumps({"items": len(wf)}))


# --- tokenize / projection ------------------------------------------------------


@main.command("tokenize")
@click.option("--vocab", "vocab_path", required=True, type=click.Path(exists=True))
@click.argument("words", nargs=-1, required=True)
@guarded
def tokenize_cmd(vocab_path, words):
    vocab = tokenizer.Vocab.load(vocab_path)
    for word in words:
        seq = tokenizer.wordpiece_tokenize(word.lower(), vocab)
        click.echo(json.dumps({"word": word, "tokens": list(seq.tokens)}))


@main.group()
def projection():
    """Word-initial to word-internal embedding projection."""


@projection.command("fit")
@click.option("--embeddings", "emb_path", required=True, type=click.Path(exists=True))
@click.option("--lexicon", "lexicon_path", required=True, type=click.Path(exists=True))
@click.option("--ridge", type=float, default=None)
@click.option("--out", required=True, type=click.Path())
@guarded
def projection_fit(emb_path, lexicon_path, ridge, out):
    table = tokenizer.EmbeddingTable.load(emb_path)
    lex = morpho.load_lexicon(lexicon_path)
    pairs = tokenizer.projection_pairs(sorted(lex.bases), table)
    proj = tokenizer.fit_projection([(e, e_int) for _, e, e_int in pairs], ridge=ridge)
    with open(out, "w", encoding="utf-8") as f:
        json.dump({
            "matrix": proj.matrix.tolist(),
            "residual": proj.residual,
            "solver": proj.solver,
            "pairs": len(pairs),
        }, f)
    click.echo(json.dumps({"pairs": len(pairs), "residual": proj.residual, "solver": proj.solver}))


# --- baselines ------------------------------------------------------------------


def _read_masked(path) -> list[dataset.MaskedItem]:
    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            out.append(dataset.MaskedItem(
                item_id=obj["id"],
                tokens=tuple(obj["tokens"]),
                mask_positions=tuple(obj["mask_positions"]),
                base=obj["base"],
                gold_label=obj["gold"],
                mode=obj["mode"],
            ))
    return out


def _labelspace(shape: str, lexicon_path, train_items_path=None) -> baselines.LabelSpace:
    lex = morpho.load_lexicon(lexicon_path)
    train_items = dataset.read_items(train_items_path) if train_items_path else ()
    return baselines.LabelSpace.for_shape(morpho.Shape(shape), lex, train_items)


@main.group()
def baseline():
    """Built-in predictors."""


@baseline.command("random")
@click.option("--masked", "masked_path", required=True, type=click.Path(exists=True))
@click.option("--lexicon", "lexicon_path", required=True, type=click.Path(exists=True))
@click.option("--shape", type=click.Choice(["P", "S", "PS"]), required=True)
@click.option("--train-items", "train_items_path", type=click.Path(exists=True), default=None,
              help="items file supplying PS bundle labels")
@click.option("--seed", type=int, required=True)
@click.option("--out", required=True, type=click.Path())
@guarded
def baseline_random(masked_path, lexicon_path, shape, train_items_path, seed, out):
    _echo_seed(seed)
    masked = _read_masked(masked_path)
    space = _labelspace(shape, lexicon_path, train_items_path)
    records = baselines.random_baseline([m.item_id for m in masked], space, seed)
    evaluation.write_predictions(records, out)
    click.echo(json.dumps({"records": len(records), "labels": len(space.labels)}))


@baseline.command("train")
@click.option("--masked", "masked_path", required=True, type=click.Path(exists=True))
@click.option("--lexicon", "lexicon_path", required=True, type=click.Path(exists=True))
@click.option("--shape", type=click.Choice(["P", "S", "PS"]), required=True)
@click.option("--train-items", "train_items_path", type=click.Path(exists=True), default=None)
@click.option("--window", type=int, default=5)
@click.option("--lr", type=float, default=0.5)
@click.option("--epochs", type=int, default=10)
@click.option("--l2", type=float, default=1e-4)
@click.option("--buckets", type=int, default=baselines.DEFAULT_BUCKETS)
@click.option("--seed", type=int, required=True)
@click.option("--out", required=True, type=click.Path())
@guarded
def baseline_train(masked_path, lexicon_path, shape, train_items_path,
                   window, lr, epochs, l2, buckets, seed, out):
    _echo_seed(seed)
    masked = _read_masked(masked_path)
    space = _labelspace(shape, lexicon_path, train_items_path)
    hyper = baselines.Hyper(window=window, lr=lr, epochs=epochs, l2=l2,
                            n_buckets=buckets, seed=seed)
    model = baselines.train_softmax(masked, space, hyper)
    model.save(out)
    click.echo(json.dumps({"final_train_loss": model.final_train_loss}))


@baseline.command("predict")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--masked", "masked_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@guarded
def baseline_predict(model_path, masked_path, out):
    model = baselines.SoftmaxModel.load(model_path)
    masked = _read_masked(masked_path)
    records = baselines.predict_softmax(model, masked)
    evaluation.write_predictions(records, out)
    click.echo(json.dumps({"records": len(records)}))


# --- evaluation -----------------------------------------------------------------


def _golds_from_items(path) -> dict[str, str]:
    return {i.item_id: i.derivation.bundle.label for i in dataset.read_items(path)}


@main.group("eval")
def eval_group():
    """Score prediction files against gold affixes."""


@eval_group.command("mrr")
@click.option("--predictions", "pred_path", required=True, type=click.Path(exists=True))
@click.option("--gold", "gold_path", required=True, type=click.Path(exists=True))
@click.option("--json", "as_json", is_flag=True, default=False)
@click.option("--out", type=click.Path(), default=None)
@guarded
def eval_mrr(pred_path, gold_path, as_json, out):
    records = evaluation.read_predictions(pred_path)
    golds = _golds_from_items(gold_path)
    report = evaluation.mrr(records, golds)
    text = evaluation.report_json(report) + "\n" if as_json else evaluation.report_tsv(report)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


@eval_group.command("accuracy")
@click.option("--predictions", "pred_path", required=True, type=click.Path(exists=True))
@click.option("--gold", "gold_path", required=True, type=click.Path(exists=True))
@guarded
def eval_accuracy(pred_path, gold_path):
    records = evaluation.read_predictions(pred_path)
    golds = _golds_from_items(gold_path)
    click.echo(json.dumps({"accuracy": evaluation.accuracy(records, golds)}))


# --- confusion analysis -----------------------------------------------------------


def _read_matrix(path) -> confusion.ConfusionMatrix:
    with open(path, encoding="utf-8") as f:
        header = f.readline().rstrip("\n").split("\t")
        labels = tuple(header[1:])
        rows = []
        for line in f:
            parts = line.rstrip("\n").split("\t")
            rows.append([float(x) for x in parts[1:]])
    return confusion.ConfusionMatrix(labels=labels, matrix=np.array(rows))


@main.group()
def confuse():
    """Confusion matrix, graph, clustering, heatmap export."""


@confuse.command("matrix")
@click.option("--predictions", "pred_path", required=True, type=click.Path(exists=True))
@click.option("--gold", "gold_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@guarded
def confuse_matrix(pred_path, gold_path, out):
    records = evaluation.read_predictions(pred_path)
    golds = _golds_from_items(gold_path)
    labels = sorted(set(golds.values()))
    cm = confusion.confusion_matrix(records, golds, labels)
    Path(out).write_text(confusion.heatmap_tsv(list(cm.labels), cm.matrix), encoding="utf-8")
    click.echo(json.dumps({"labels": len(labels)}))


@confuse.command("graph")
@click.option("--matrix", "matrix_path", required=True, type=click.Path(exists=True))
@click.option("--theta", type=float, default=confusion.DEFAULT_THETA)
@click.option("--out", required=True, type=click.Path())
@guarded
def confuse_graph(matrix_path, theta, out):
    cm = _read_matrix(matrix_path)
    graph = confusion.threshold_graph(cm, theta)
    Path(out).write_text(confusion.graph_tsv(graph), encoding="utf-8")
    click.echo(json.dumps({"nodes": len(graph.nodes), "edges": len(graph.edges)}))


@confuse.command("cluster")
@click.option("--matrix", "matrix_path", required=True, type=click.Path(exists=True))
@click.option("--theta", type=float, default=confusion.DEFAULT_THETA)
@click.option("--k", "k_splits", type=int, default=4)
@click.option("--out", required=True, type=click.Path())
@guarded
def confuse_cluster(matrix_path, theta, k_splits, out):
    cm = _read_matrix(matrix_path)
    graph = confusion.threshold_graph(cm, theta)
    clustering = confusion.girvan_newman(graph, k_splits)
    Path(out).write_text(confusion.clustering_json(clustering) + "\n", encoding="utf-8")
    click.echo(json.dumps({"splits": len(clustering.partitions)}))


@confuse.command("heatmap")
@click.option("--matrix", "matrix_path", required=True, type=click.Path(exists=True))
@click.option("--theta", type=float, default=confusion.DEFAULT_THETA)
@click.option("--k", "k_splits", type=int, default=4)
@click.option("--out", required=True, type=click.Path())
@guarded
def confuse_heatmap(matrix_path, theta, k_splits, out):
    cm = _read_matrix(matrix_path)
    graph = confusion.threshold_graph(cm, theta)
    clustering = confusion.girvan_newman(graph, k_splits)
    order, matrix = confusion.order_for_heatmap(clustering, cm)
    Path(out).write_text(confusion.heatmap_tsv(order, matrix), encoding="utf-8")
    click.echo(json.dumps({"order": order}))


# --- productivity regression --------------------------------------------------------


@main.group()
def productivity():
    """Hapax-count productivity analysis."""


@productivity.command("regress")
@click.option("--counts", "counts_path", required=True, type=click.Path(exists=True),
              help="JSON map affix -> hapax count")
@click.option("--mrr", "mrr_path", required=True, type=click.Path(exists=True),
              help="eval mrr --json report")
@click.option("--out", type=click.Path(), default=None)
@guarded
def productivity_regress(counts_path, mrr_path, out):
    with open(counts_path, encoding="utf-8") as f:
        counts = json.load(f)
    with open(mrr_path, encoding="utf-8") as f:
        per_affix = json.load(f)["per_affix"]
    affixes = sorted(set(counts) & set(per_affix))
    if len(affixes) < 3:
        raise ValueError("need at least 3 affixes present in both inputs")
    result = confusion.ols_regression(
        [counts[a] for a in affixes], [per_affix[a] for a in affixes]
    )
    text = result.to_json() + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    click.echo(text, nl=False)


# --- segmentation comparison -----------------------------------------------------


@main.command("segcompare")
@click.option("--predictions", "pred_specs", multiple=True, required=True,
              help="METHOD=path, one per segmentation method")
@click.option("--gold", "gold_path", required=True, type=click.Path(exists=True))
@guarded
def segcompare(pred_specs, gold_path):
    """Macro-MRR table across prediction files from different segmentations."""
    golds = _golds_from_items(gold_path)
    click.echo("method\tmacro_mrr\taccuracy")
    for spec in pred_specs:
        if "=" not in spec:
            raise ValueError(f"--predictions expects METHOD=path, got {spec!r}")
        method, _, path = spec.partition("=")
        report = evaluation.mrr(evaluation.read_predictions(path), golds)
        click.echo(f"{method}\t{report.macro:.4f}\t{report.accuracy:.4f}")


if __name__ == "__main__":
    main()
