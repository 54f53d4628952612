from __future__ import annotations
from typing import NoReturn, Optional
import json, os

import typer
from rich import print, box
from rich.console import Console
from rich.markup import escape
from rich.panel import Panel
from rich.table import Table
from dotenv import load_dotenv

# Load environment variables (MIMIC_AUDIT_SEED) from .env file
load_dotenv()

from .config import load_toolkit_config
from .dataset import build_manifest, manifest_arrays, read_feature_csv, render_feature_csv, split, write_feature_csv
from .errors import InsufficientDataError, MimicAuditError, PathAccessError
from .features import extract_batch, extract_features
from .audio_io import load_clip
from .io_utils import atomic_write_group, check_output_path
from .metrics import METRIC_LABELS, ConfusionMatrix, build_report, confusion, confusion_layout, misclassified, roc_curve
from .network import MlpModel, decide, faked_scores, predict, predict_proba, train as fit_model
from .schema import Label
from .store import load_model, render_history_csv, render_model, write_predictions_csv, write_report, write_roc_csv
from .synth import generate_corpus

app = typer.Typer(add_completion=False)
err_console = Console(stderr=True)


def _abort(e: MimicAuditError) -> NoReturn:
    err_console.print(f"[red]❌ Error:[/red] {escape(str(e))}")
    raise typer.Exit(code=e.exit_code)


def _require_dir(path: str) -> None:
    if not os.path.isdir(path):
        raise PathAccessError(f"input directory not found: {path}")


def _require_file(path: str, what: str) -> None:
    if not os.path.isfile(path):
        raise PathAccessError(f"{what} not found: {path}")


def _sibling(path: str, suffix: str) -> str:
    return os.path.splitext(path)[0] + suffix


@app.command()
def synth(output_dir: str = typer.Option(..., help="Folder to write the generated WAV corpus into"),
          count: int = typer.Option(200, help="Number of clips (half real, half faked)"),
          seed: int = typer.Option(0, help="Random seed for the generator"),
          duration: float = typer.Option(1.0, help="Clip length in seconds"),
          verbose: bool = typer.Option(False, "--verbose", "-v", help="Show every generated file")):
    """Generate a synthetic labelled corpus (harmonic tones vs. filtered noise bursts)"""
    try:
        print(f"[blue]🎛️  Generating {count} clips in:[/blue] {output_dir}")
        paths = generate_corpus(output_dir, count, seed=seed, duration=duration, verbose=verbose)
    except MimicAuditError as e:
        _abort(e)
    print(f"[green]✅ {len(paths)} clips written[/green]")


@app.command()
def extract(input_dir: str = typer.Option(..., help="Folder of convention-named WAV files (e.g. 0001f.wav)"),
            output: str = typer.Option(..., help="Feature CSV to write"),
            max_seconds: Optional[float] = typer.Option(None, help="Analyse at most this many seconds per clip [default: 20]"),
            workers: Optional[int] = typer.Option(None, help="Parallel extraction processes [default: 1]"),
            config: Optional[str] = typer.Option(None, help="JSON config file"),
            verbose: bool = typer.Option(False, "--verbose", "-v", help="Show detailed processing information")):
    """Extract the 26 acoustic features of every clip in a folder into a CSV"""
    try:
        cfg = load_toolkit_config(config, {"max_seconds": max_seconds, "workers": workers})
        _require_dir(input_dir)
        check_output_path(output)

        manifest = build_manifest(input_dir, verbose=verbose)
        if not len(manifest):
            raise InsufficientDataError(f"no .wav files found in {input_dir}")

        print(f"[blue]🔊 Extracting features from {len(manifest)} clips[/blue] "
              f"[dim]({cfg.sample_rate} Hz, ≤ {cfg.max_seconds:g} s, {cfg.workers} worker(s))[/dim]")
        results = extract_batch([s.path for s in manifest], workers=cfg.workers,
                                target_rate=cfg.sample_rate, max_seconds=cfg.max_seconds)

        kept, vectors, skipped = [], [], []
        for pos, (sample, (vector, error)) in enumerate(zip(manifest, results)):
            if error is not None:
                skipped.append(sample.filename)
                print(f"[yellow]⚠️  Skipping {sample.filename}:[/yellow] {escape(str(error))}")
                continue
            kept.append(pos)
            vectors.append(vector)
            if verbose:
                print(f"   [dim]✓ {sample.filename} ({sample.label.value})[/dim]")

        if not kept:
            raise InsufficientDataError("every clip failed to decode; nothing to write")
        extracted = manifest.subset(kept).with_features(vectors)
        write_feature_csv(extracted, output)
    except MimicAuditError as e:
        _abort(e)

    counts = extracted.counts
    summary = f"""[bold]📊 Extraction Summary:[/bold]

• [cyan]Clips Found:[/cyan] {len(manifest)}
• [cyan]Rows Written:[/cyan] {len(extracted)} ({counts[Label.REAL]} real, {counts[Label.FAKED]} faked)
• [cyan]Skipped:[/cyan] {len(skipped)}
• [cyan]Feature CSV:[/cyan] {output}"""
    print(Panel(summary, title="🎯 Features", border_style="green"))


def display_model(net: MlpModel) -> None:
    table = Table(title="🧠 Model Layers", box=box.ROUNDED)
    table.add_column("Layer", style="cyan")
    table.add_column("Output", justify="right")
    table.add_column("Params", justify="right", style="green")
    table.add_row("input", str(net.layer_dims[0]), "0")
    for name, width, n_params in net.layer_summary():
        table.add_row(name, str(width), f"{n_params:,}")
    table.add_row("[bold]total[/bold]", "", f"[bold]{net.n_params:,}[/bold]")
    print(table)


@app.command()
def train(features: str = typer.Option(..., help="Feature CSV produced by `extract`"),
          model: str = typer.Option(..., help="Where to save the trained model (JSON)"),
          epochs: Optional[int] = typer.Option(None, help="Training epochs [default: 140]"),
          batch_size: Optional[int] = typer.Option(None, help="Mini-batch size [default: 128]"),
          learning_rate: Optional[float] = typer.Option(None, help="Adam learning rate [default: 0.0003]"),
          val_split: Optional[float] = typer.Option(None, help="Validation fraction of the training part [default: 0.2]"),
          test_split: Optional[float] = typer.Option(None, help="Held-out test fraction [default: 0.2004]"),
          seed: Optional[int] = typer.Option(None, help="Seed for split, init, shuffling and dropout [env: MIMIC_AUDIT_SEED]"),
          history: Optional[str] = typer.Option(None, help="Per-epoch history CSV [default: <model>.history.csv]"),
          test_out: Optional[str] = typer.Option(None, help="Held-out test rows as feature CSV [default: <model>.test.csv]"),
          config: Optional[str] = typer.Option(None, help="JSON config file"),
          verbose: bool = typer.Option(False, "--verbose", "-v", help="Show per-epoch progress")):
    """Split the feature CSV, train the classifier and save model, history and test partition"""
    history_path = history or _sibling(model, ".history.csv")
    test_path = test_out or _sibling(model, ".test.csv")
    try:
        cfg = load_toolkit_config(config, {
            "epochs": epochs,
            "batch_size": batch_size,
            "learning_rate": learning_rate,
            "val_split": val_split,
            "test_split": test_split,
            "seed": seed,
        })
        _require_file(features, "feature CSV")
        for path in (model, history_path, test_path):
            check_output_path(path)

        manifest = read_feature_csv(features)
        train_part, test_part = split(manifest, cfg.split_config())
        print(f"[blue]🚀 Training on {len(train_part)} samples, holding out {len(test_part)} for testing[/blue] "
              f"[dim](seed {cfg.seed})[/dim]")
        x, y = manifest_arrays(train_part)
        net, hist = fit_model(x, y, cfg.train_config(), verbose=verbose)

        atomic_write_group({
            model: render_model(net),
            history_path: render_history_csv(hist),
            test_path: render_feature_csv(test_part),
        })
    except MimicAuditError as e:
        _abort(e)

    display_model(net)
    summary = f"""[bold]📊 Training Summary:[/bold]

• [cyan]Epochs:[/cyan] {len(hist)} (batch {cfg.batch_size}, lr {cfg.learning_rate:g})
• [cyan]Final Loss:[/cyan] train {hist.train_loss[-1]:.4f}, validation {hist.val_loss[-1]:.4f}
• [cyan]Final Accuracy:[/cyan] train {hist.train_acc[-1]:.3f}, validation {hist.val_acc[-1]:.3f}
• [cyan]Model:[/cyan] {model}
• [cyan]History:[/cyan] {history_path}
• [cyan]Test Partition:[/cyan] {test_path}"""
    print(Panel(summary, title="🎯 Training Results", border_style="green"))
    print(f"[blue]💡 Evaluate with:[/blue]")
    print(f"   [dim]python -m mimic_audit.cli evaluate --features {test_path} --model {model}[/dim]")


def display_evaluation(cm: ConfusionMatrix, report: dict, n_samples: int, report_path: str, roc_path: str) -> None:
    metrics = report["metrics"]

    table = Table(title=f"📋 Metrics ({n_samples} samples)", box=box.ROUNDED)
    table.add_column("Metric", style="cyan")
    table.add_column("Value", justify="right", style="green")
    for name, label in METRIC_LABELS.items():
        table.add_row(label, f"{metrics[name]:.3f}")
    table.add_row("ROC AUC", f"{report['auc']:.3f}")
    table.add_row("EER", f"{report['eer']:.3f}")
    print(table)

    grid = Table(title="🧮 Confusion Matrix", box=box.SIMPLE)
    grid.add_column("", style="magenta")
    grid.add_column("Actual faked", justify="center")
    grid.add_column("Actual real", justify="center")
    (tp, fp), (fn, tn) = confusion_layout(cm)
    grid.add_row("Predicted faked", str(tp), str(fp))
    grid.add_row("Predicted real", str(fn), str(tn))
    print(grid)

    print(f"[green]✅ Report saved to:[/green] [bold]{report_path}[/bold]")
    print(f"[green]✅ ROC curve saved to:[/green] [bold]{roc_path}[/bold]")


@app.command()
def evaluate(features: str = typer.Option(..., help="Feature CSV to score (e.g. the held-out test partition)"),
             model: str = typer.Option(..., help="Trained model file"),
             report: str = typer.Option("report.json", help="JSON report to write"),
             roc_out: Optional[str] = typer.Option(None, help="ROC CSV (threshold,fpr,tpr) [default: <report>.roc.csv]"),
             predictions_out: Optional[str] = typer.Option(None, help="Optional per-file predictions CSV"),
             verbose: bool = typer.Option(False, "--verbose", "-v", help="List misclassified files")):
    """Score a feature CSV with a trained model; write report and ROC curve"""
    roc_path = roc_out or _sibling(report, ".roc.csv")
    try:
        _require_file(model, "model file")
        _require_file(features, "feature CSV")
        for path in (report, roc_path, predictions_out):
            if path:
                check_output_path(path)

        net = load_model(model)
        manifest = read_feature_csv(features)
        x, y = manifest_arrays(manifest)
        if not y.size:
            raise InsufficientDataError(f"{features} has no data rows")

        probs = predict_proba(net, x)
        decisions = [decide(p) for p in probs]
        predicted = [label for label, _ in decisions]
        truth = [s.label for s in manifest]

        cm = confusion(truth, predicted)
        curve = roc_curve(faked_scores(probs), truth)
        doc = build_report(cm, curve)

        write_report(doc, report)
        write_roc_csv(curve.thresholds, curve.points, roc_path)
        if predictions_out:
            write_predictions_csv(
                [s.filename for s in manifest],
                [t.value for t in truth],
                [p.value for p in predicted],
                [c for _, c in decisions],
                faked_scores(probs),
                predictions_out,
            )
    except MimicAuditError as e:
        _abort(e)

    display_evaluation(cm, doc, len(manifest), report, roc_path)
    if verbose:
        wrong = misclassified([s.filename for s in manifest], truth, predicted)
        print(f"[yellow]🔎 {len(wrong)} misclassified:[/yellow] {', '.join(wrong) if wrong else 'none'}")


@app.command("predict")
def predict_cmd(model: str = typer.Option(..., help="Trained model file"),
                wav: str = typer.Option(..., help="WAV file to classify"),
                max_seconds: Optional[float] = typer.Option(None, help="Analyse at most this many seconds [default: 20]"),
                config: Optional[str] = typer.Option(None, help="JSON config file")):
    """Classify one WAV file; prints {"label": ..., "confidence": ...} as a single JSON line"""
    try:
        cfg = load_toolkit_config(config, {"max_seconds": max_seconds})
        _require_file(model, "model file")
        _require_file(wav, "WAV file")
        net = load_model(model)
        vector = extract_features(load_clip(wav, cfg.sample_rate, cfg.max_seconds))
        label, confidence = predict(net, vector)
    except MimicAuditError as e:
        _abort(e)
    typer.echo(json.dumps({"label": label.value, "confidence": confidence}))


if __name__ == "__main__":
    app()
