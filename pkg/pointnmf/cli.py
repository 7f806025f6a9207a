import logging
from functools import wraps
from pathlib import Path
from typing import List, Optional

import click
import typer
from box import Box
from loguru import logger
from rich.console import Console
from rich.logging import RichHandler
from rich.theme import Theme
from typer.core import TyperGroup

try:  # typer >= 0.26 vendors its own click
    from typer._click.exceptions import UsageError
except ImportError:
    from click import UsageError

from . import __product__, __version__
from .config import config
from .csvio import METRICS_HEADER, write_loss_curve, write_matrix, write_metrics, write_raster
from .errors import ExitCode, OperationError, ValidationError
from .experiments import EXPERIMENTS, ExperimentSettings, desk_train_config, run_experiments
from .factorize import TrainConfig, innmf_fit, nmf_multiplicative, refit_activations
from .points import load_points, save_points, to_matrix
from .render import bin_points, parse_grid_spec, raster_kl, render_model
from .separate import SeparationJob, bss_metrics, run_separation
from .serialize import load_model, save_model
from .transforms import apply_transform_spec, parse_transform_spec, read_wav, stft, write_wav
from .utils import format_float

SCHEME_STYLES = {
    "train": "dark_sea_green4",
    "refit": "steel_blue",
    "separate": "medium_purple4",
    "experiment": "dark_orange3",
}


def formatter(record):
    scheme = record["extra"].get("scheme", None)
    if scheme in SCHEME_STYLES:
        return f"[{SCHEME_STYLES[scheme]}]{scheme.capitalize()}[/] {{message}}"
    else:
        return "{message}"


def setup_logging(quiet: bool = False):
    logger.remove()
    logging.addLevelName(5, "TRACE")
    logger.add(
        RichHandler(
            console=Console(stderr=True, theme=Theme({"logging.level.trace": "gray50"})),
            markup=True,
            rich_tracebacks=True,
        ),
        format=formatter,
        level="WARNING" if quiet else "INFO",
    )


class PointnmfGroup(TyperGroup):
    """Report command-line usage errors with the validation exit code."""

    def make_context(self, *args, **kw):
        try:
            return super().make_context(*args, **kw)
        except UsageError as e:
            e.exit_code = int(ExitCode.VALIDATION)
            raise

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except UsageError as e:
            e.exit_code = int(ExitCode.VALIDATION)
            raise


app = typer.Typer(
    cls=PointnmfGroup,
    pretty_exceptions_show_locals=False,
    rich_markup_mode="rich",
    add_completion=False,
    context_settings={"help_option_names": ["-h", "--help"]},
)


def operation(func):
    """Run a command, turning domain errors into a logged message and their exit code."""

    @wraps(func)
    def wrapper(*args, **kw):
        try:
            return func(*args, **kw)
        except OperationError as e:
            logger.error(f"{type(e).__name__}: {e}")
            raise typer.Exit(int(e.exit_code))

    return wrapper


def require_file(path: Optional[Path], what: str) -> Path:
    if path is None or not Path(path).is_file():
        raise ValidationError(f'{what} "{path}" does not exist')
    return Path(path)


def out_path(ctx: typer.Context, name: str) -> Path:
    """Output location inside --out-dir, created on first use (after validation)."""
    out_dir: Path = ctx.obj.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir / name


def train_config(ctx: typer.Context, **overrides) -> TrainConfig:
    return TrainConfig.from_config(config, seed=ctx.obj.seed, **overrides)


def experiment_train_config(ctx: typer.Context, **overrides) -> TrainConfig:
    """Experiment training defaults, then the config file, then flags."""
    return TrainConfig.from_config(config.file_values(), base=desk_train_config(), seed=ctx.obj.seed, **overrides)


@app.callback(help=f"[orange3]{__product__}[/] {__version__}: NMF on irregular time-frequency point sets.")
def main(
    ctx: typer.Context,
    seed: int = typer.Option(0, "--seed", help="Seed for initialization and shuffling"),
    config_file: Optional[Path] = typer.Option(
        None, "--config", envvar=f"{__product__.upper()}_CONFIG", dir_okay=False, help="Config toml file"
    ),
    out_dir: Path = typer.Option(Path("."), "--out-dir", file_okay=False, help="Directory for output files"),
    quiet: bool = typer.Option(False, "--quiet", "-q", help="Only log warnings and errors"),
):
    setup_logging(quiet)
    try:
        config.reset()
        config.reload_conf(config_file)
    except OperationError as e:
        logger.error(f"{type(e).__name__}: {e}")
        raise typer.Exit(int(ExitCode.VALIDATION))
    ctx.obj = Box(seed=seed, out_dir=out_dir)


@app.command(help="Turn a WAV file into a point CSV.")
@operation
def transform(
    ctx: typer.Context,
    input: Path = typer.Argument(..., help="Input WAV file"),
    spec: str = typer.Argument(..., help="stft:N,hop | cqt:fmin,fmax,bpo[,q] | sin:N,hop,thresh_db, ';'-joined with @start-end"),
    output: str = typer.Option("points.csv", "--output", "-o", help="Output file name"),
):
    parse_transform_spec(spec)
    audio = read_wav(require_file(input, "audio file"))
    points = apply_transform_spec(audio, spec)
    path = out_path(ctx, output)
    save_points(points, path)
    logger.info(f'Wrote {len(points)} points to "{path}".')


@app.command(help="Learn K spectral and activation functions from a point CSV.")
@operation
def fit(
    ctx: typer.Context,
    points_file: Path = typer.Argument(..., help="Point CSV"),
    rank: Optional[int] = typer.Option(None, "--rank", "-k", help="Number of components K"),
    learning_rate: Optional[float] = typer.Option(None, "--learning-rate", "--lr"),
    epochs: Optional[int] = typer.Option(None, "--epochs"),
    batch_size: Optional[int] = typer.Option(None, "--batch-size"),
    optimizer: Optional[str] = typer.Option(None, "--optimizer", help="sgd | momentum | adam"),
    activation: Optional[str] = typer.Option(None, "--activation", help="functions | matrix"),
    nyquist: Optional[float] = typer.Option(None, "--nyquist", help="Frequency scale in Hz, default the largest f"),
):
    K = int(config.resolve("rank", rank))
    if K < 1:
        raise ValidationError(f"rank K must be >= 1, got {K}")
    conf = train_config(
        ctx,
        learning_rate=learning_rate,
        epochs=epochs,
        batch_size=batch_size,
        optimizer=optimizer,
        activation=activation,
    )
    points = load_points(require_file(points_file, "point file"))
    model = innmf_fit(points, K, conf, nyquist_hz=config.resolve("nyquist_hz", nyquist) or None)
    save_model(model, out_path(ctx, "model.json"))
    write_loss_curve(out_path(ctx, "loss_curve.csv"), model.loss_curve)
    logger.info(f"Final mean KL {model.loss_curve[-1]:.6g}.")


@app.command(help="Refit activations of a saved model on new points, keeping its spectral functions.")
@operation
def refit(
    ctx: typer.Context,
    points_file: Path = typer.Argument(..., help="Point CSV"),
    model_file: Path = typer.Argument(..., help="Model file from fit"),
    freeze_spectral: bool = typer.Option(False, "--freeze-spectral", help="Required, only activations are refit"),
    learning_rate: Optional[float] = typer.Option(None, "--learning-rate", "--lr"),
    epochs: Optional[int] = typer.Option(None, "--epochs"),
    optimizer: Optional[str] = typer.Option(None, "--optimizer", help="sgd | momentum | adam"),
    activation: Optional[str] = typer.Option(None, "--activation", help="functions | matrix"),
):
    if not freeze_spectral:
        raise ValidationError("only activation refits are supported, pass --freeze-spectral")
    conf = train_config(ctx, learning_rate=learning_rate, epochs=epochs, optimizer=optimizer, activation=activation)
    points = load_points(require_file(points_file, "point file"))
    model = load_model(require_file(model_file, "model file"))
    refit_model = refit_activations(points, model.spectral, model.K, conf, model.norm.f_scale)
    save_model(refit_model, out_path(ctx, "refit_model.json"))
    write_loss_curve(out_path(ctx, "refit_loss_curve.csv"), refit_model.loss_curve)
    logger.info(f"Final mean KL {refit_model.loss_curve[-1]:.6g}.")


@app.command(help="Matrix NMF with multiplicative updates on a WAV spectrogram or a regular-grid point CSV.")
@operation
def baseline(
    ctx: typer.Context,
    source: Path = typer.Argument(..., help="WAV file or regular-grid point CSV"),
    rank: Optional[int] = typer.Option(None, "--rank", "-k"),
    iterations: Optional[int] = typer.Option(None, "--iterations"),
    window_size: Optional[int] = typer.Option(None, "--window-size", "-n"),
    hop: Optional[int] = typer.Option(None, "--hop"),
):
    require_file(source, "input file")
    if source.suffix.lower() == ".wav":
        grid = stft(read_wav(source), int(config.resolve("window_size", window_size)), int(config.resolve("hop", hop)))
        V = grid.magnitude
    else:
        V, _, _ = to_matrix(load_points(source))
    model = nmf_multiplicative(
        V, int(config.resolve("rank", rank)), int(config.resolve("iterations", iterations)), ctx.obj.seed
    )
    write_matrix(out_path(ctx, "W.csv"), model.W)
    write_matrix(out_path(ctx, "H.csv"), model.H)
    write_loss_curve(out_path(ctx, "loss_curve.csv"), model.loss_curve)
    logger.info(f"Final mean KL {model.loss_curve[-1]:.6g}.")


@app.command(help="Separate a two-source mixture with two pre-trained dictionaries.")
@operation
def separate(
    ctx: typer.Context,
    mixture: Path = typer.Argument(..., help="Mixture WAV file"),
    dict1: Path = typer.Argument(..., help="Model file of source 1"),
    dict2: Path = typer.Argument(..., help="Model file of source 2"),
    window_size: Optional[int] = typer.Option(None, "--window-size", "-n"),
    hop: Optional[int] = typer.Option(None, "--hop"),
    reference1: Optional[Path] = typer.Option(None, "--reference1", help="Clean source 1, enables metrics"),
    reference2: Optional[Path] = typer.Option(None, "--reference2", help="Clean source 2, enables metrics"),
    learning_rate: Optional[float] = typer.Option(None, "--learning-rate", "--lr"),
    epochs: Optional[int] = typer.Option(None, "--epochs"),
    optimizer: Optional[str] = typer.Option(None, "--optimizer", help="sgd | momentum | adam"),
):
    if (reference1 is None) != (reference2 is None):
        raise ValidationError("pass both references or neither")
    audio = read_wav(require_file(mixture, "mixture file"))
    models = load_model(require_file(dict1, "dictionary")), load_model(require_file(dict2, "dictionary"))
    refs = None
    if reference1 is not None:
        refs = read_wav(require_file(reference1, "reference")), read_wav(require_file(reference2, "reference"))
    conf = train_config(ctx, learning_rate=learning_rate, epochs=epochs, optimizer=optimizer)
    n = int(config.resolve("window_size", window_size))
    job = SeparationJob(audio, *models, n, int(config.resolve("hop", hop)), conf, refs)
    result = run_separation(job)
    for i, estimate in enumerate(result.estimates, 1):
        write_wav(estimate, out_path(ctx, f"source{i}.wav"))
    if refs is not None:
        write_metrics(out_path(ctx, "metrics.csv"), result.metric_rows())
    else:
        logger.warning("No references given, metrics.csv was not written.")


@app.command(name="eval", help="Score an estimate against its reference and the interfering source.")
@operation
def evaluate(
    estimate: Path = typer.Argument(..., help="Estimated source WAV"),
    reference: Path = typer.Argument(..., help="Clean reference WAV"),
    interference: Path = typer.Argument(..., help="Interfering source WAV"),
):
    est, ref, other = (read_wav(require_file(p, "audio file")) for p in (estimate, reference, interference))
    scores = bss_metrics(est, ref, other)
    typer.echo(",".join(METRICS_HEADER[3:]))
    typer.echo(",".join(format_float(v) for v in (scores.sdr_db, scores.sir_db, scores.sar_db)))


@app.command(help="Sample a model and/or bin a point CSV onto a dense t,f raster.")
@operation
def render(
    ctx: typer.Context,
    grid: str = typer.Option(..., "--grid", help="t0:t1:nt,f0:f1:nf"),
    model_file: Optional[Path] = typer.Option(None, "--model", help="Model file"),
    points_file: Optional[Path] = typer.Option(None, "--points", help="Point CSV"),
):
    spec = parse_grid_spec(grid)
    if model_file is None and points_file is None:
        raise ValidationError("pass --model, --points or both")
    model = load_model(require_file(model_file, "model file")) if model_file is not None else None
    points = load_points(require_file(points_file, "point file")) if points_file is not None else None
    t, f = spec.mesh()
    rendered = render_model(model, spec) if model is not None else None
    binned = bin_points(points, spec) if points is not None else None
    if rendered is not None:
        write_raster(out_path(ctx, "render.csv"), t, f, rendered)
    if binned is not None:
        write_raster(out_path(ctx, "binned.csv" if rendered is not None else "render.csv"), t, f, binned)
    if rendered is not None and binned is not None:
        logger.info(f"Mean KL between model raster and binned points: {raster_kl(rendered, binned):.6g}.")


@app.command(help="Run desk-scale reproduction experiments and write their CSV tables.")
@operation
def experiment(
    ctx: typer.Context,
    names: Optional[List[str]] = typer.Argument(None, help="reconstruction | hybrid | cross | separation, default all"),
    rank: Optional[int] = typer.Option(None, "--rank", "-k"),
    mixtures: int = typer.Option(10, "--mixtures", help="Number of separation mixtures"),
    iterations: Optional[int] = typer.Option(None, "--iterations", help="Matrix NMF iterations"),
    learning_rate: Optional[float] = typer.Option(None, "--learning-rate", "--lr"),
    epochs: Optional[int] = typer.Option(None, "--epochs"),
    optimizer: Optional[str] = typer.Option(None, "--optimizer", help="sgd | momentum | adam"),
):
    names = list(names or EXPERIMENTS)
    unknown = [n for n in names if n not in EXPERIMENTS]
    if unknown:
        raise ValidationError(f'unknown experiment "{unknown[0]}", expected one of {", ".join(EXPERIMENTS)}')
    settings = ExperimentSettings(
        train=experiment_train_config(ctx, learning_rate=learning_rate, epochs=epochs, optimizer=optimizer),
        rank=int(config.resolve("rank", rank)),
        iterations=int(config.resolve("iterations", iterations)),
        seed=ctx.obj.seed,
        mixtures=mixtures,
    )
    for name, path in run_experiments(names, settings, ctx.obj.out_dir).items():
        logger.info(f'Experiment {name} written to "{path}".')
