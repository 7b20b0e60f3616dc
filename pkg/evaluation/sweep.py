"""
Barridos de hiperparámetros y tabla de ablaciones.

Los ejes omega y stride solo afectan a la inferencia y reutilizan un único modelo
entrenado; T reentrena desde la etapa 2; rho y sigma reentrenan todo y además
informan de las métricas del autoencoder solo.
"""

import copy
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from models import ModelFactory  # noqa: E402
from training.pipeline import PreparedData, continue_pipeline, train_pipeline  # noqa: E402
from utils.config import RecConfig  # noqa: E402
from utils.errors import ConfigurationError, UsageError  # noqa: E402

from .evaluator import EvalReport, evaluate  # noqa: E402

logger = logging.getLogger(__name__)

SWEEP_AXES = {
    "rho": "train.rho",
    "sigma": "train.sigma",
    "T": "diffusion.T",
    "stride": "diffusion.stride",
    "omega": "diffusion.omega",
}
DEFAULT_GRIDS = {
    "rho": [0.2, 0.4, 0.6, 0.8],
    "sigma": [0.1, 0.2, 0.4, 0.6, 0.8],
    "T": [50, 100, 200, 500, 1000],
    "stride": [10, 20, 50, 100],
    "omega": [0, 1, 2, 5],
}
INFERENCE_AXES = ("omega", "stride")
AUTOENCODER_AXES = ("rho", "sigma")
INTEGER_AXES = ("T", "stride")


@dataclass
class SweepRow:
    value: float
    report: EvalReport
    autoencoder_report: Optional[EvalReport] = None


@dataclass
class SweepTable:
    axis: str
    rows: list[SweepRow] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)

    def to_text(self, ks) -> str:
        columns = [f"{name}@{k}" for k in ks for name in ("recall", "ndcg")]
        with_autoencoder = any(row.autoencoder_report for row in self.rows)
        header = [self.axis] + columns + ([f"mbae_{column}" for column in columns] if with_autoencoder else [])
        lines = ["\t".join(header)]
        for row in self.rows:
            cells = [str(row.value)] + [f"{row.report.overall[column]:.6f}" for column in columns]
            if row.autoencoder_report:
                cells += [f"{row.autoencoder_report.overall[column]:.6f}" for column in columns]
            lines.append("\t".join(cells))
        return "\n".join(lines)


def parse_axis_values(axis: str, text: str) -> list:
    """
    Convierte "v1,v2,..." en valores numéricos del eje (enteros en T y stride).

    Raises:
        UsageError: Si el eje es desconocido o algún valor no es numérico
    """
    if axis not in SWEEP_AXES:
        raise UsageError(f"Eje desconocido '{axis}'; opciones: {sorted(SWEEP_AXES)}")
    cast = int if axis in INTEGER_AXES else float
    values = []
    for token in (part.strip() for part in text.split(",")):
        if not token:
            continue
        try:
            values.append(cast(token))
        except ValueError:
            raise UsageError(f"Valor no numérico '{token}' para el eje {axis}") from None
    return values


def config_for(base: RecConfig, axis: str, value) -> RecConfig:
    """
    Copia de la configuración con el eje fijado al valor.

    En el eje T, si el salto actual no divide a T se usa el mayor divisor de T que no lo supera.

    Raises:
        UsageError: Si el eje es desconocido
        ConfigurationError: Si el valor es inválido para el eje
    """
    if axis not in SWEEP_AXES:
        raise UsageError(f"Eje desconocido '{axis}'; opciones: {sorted(SWEEP_AXES)}")
    config = base.copy()
    config.apply({SWEEP_AXES[axis]: str(value)})
    if axis == "T" and config.diffusion.T >= 1 and config.diffusion.T % config.diffusion.stride:
        stride = min(config.diffusion.stride, config.diffusion.T)
        while config.diffusion.T % stride:
            stride -= 1
        logger.info("T=%d: salto ajustado de %d a %d", config.diffusion.T, config.diffusion.stride, stride)
        config.diffusion.stride = stride
    config.validate()
    return config


def sweep(axis: str, values: list, base: RecConfig, data: PreparedData,
          out_dir: Optional[Path] = None, progress: bool = False) -> SweepTable:
    """
    Entrena y evalúa por valor con semillas compartidas; los valores inválidos se omiten con un aviso.
    """
    table = SweepTable(axis)
    configs = []
    for value in values:
        try:
            configs.append((value, config_for(base, axis, value)))
        except ConfigurationError as exc:
            logger.warning("Valor %r omitido en el eje %s: %s", value, axis, exc)
            table.skipped.append(str(value))

    shared = None
    if axis in INFERENCE_AXES or axis == "T":
        shared = train_pipeline(data, base, progress=progress)

    for value, config in configs:
        guidance = ModelFactory.create_guidance(config)
        baseline = None
        if axis in INFERENCE_AXES:
            model = shared.model
        elif axis == "T":
            model = copy.deepcopy(shared.pretrained)
            model.denoiser = ModelFactory.create_denoiser(data.vocab.num_behaviors, config).to(
                device=model.device, dtype=model.dtype)
            model.schedule = ModelFactory.create_schedule(config)
            continue_pipeline(model, data, config, from_stage=2, guidance=guidance, progress=progress)
        else:
            result = train_pipeline(data, config, progress=progress)
            model = result.model
            baseline = evaluate(result.pretrained, data.test_examples, config.eval.ks, guidance,
                                config.train.seed, use_diffusion=False, batch_size=config.eval.batch_size)
        report = evaluate(model, data.test_examples, config.eval.ks, guidance, config.train.seed,
                          batch_size=config.eval.batch_size)
        table.rows.append(SweepRow(value, report, baseline))

    if out_dir:
        write_sweep(table, base.eval.ks, Path(out_dir))
    return table


def write_sweep(table: SweepTable, ks, out_dir: Path) -> tuple[Path, Path]:
    """Tabla de texto y gráfico de Recall/NDCG frente al valor del eje."""
    out_dir.mkdir(parents=True, exist_ok=True)
    text_path = out_dir / f"sweep_{table.axis}.txt"
    text_path.write_text(table.to_text(ks) + "\n", encoding="utf-8")

    plot_path = out_dir / f"sweep_{table.axis}.png"
    fig, ax = plt.subplots(figsize=(6, 4))
    positions = list(range(len(table.rows)))
    for k in ks:
        for name, marker in (("recall", "o"), ("ndcg", "s")):
            ax.plot(positions, [row.report.overall[f"{name}@{k}"] for row in table.rows],
                    marker=marker, label=f"{name}@{k}")
    ax.set_xticks(positions)
    ax.set_xticklabels([str(row.value) for row in table.rows])
    ax.set_xlabel(table.axis)
    ax.legend()
    fig.tight_layout()
    fig.savefig(plot_path)
    plt.close(fig)
    return text_path, plot_path


ABLATION_VARIANTS = [
    ("ape", {"model.position_mode": "ape"}),
    ("rope", {"model.position_mode": "rope"}),
    ("mlp", {"denoiser.kind": "mlp"}),
    ("adaln", {"denoiser.kind": "adaln"}),
    ("full", {"model.position_mode": "barope", "denoiser.kind": "mcgln"}),
]


def ablation(base: RecConfig, data: PreparedData, out_dir: Optional[Path] = None,
             progress: bool = False) -> list[tuple[str, EvalReport]]:
    """
    Variantes de codificación posicional y de denoiser con semillas compartidas,
    más la fila del autoencoder preentrenado sin difusión.
    """
    rows = []
    for name, overrides in ABLATION_VARIANTS:
        config = base.copy()
        config.apply(overrides)
        config.validate()
        guidance = ModelFactory.create_guidance(config)
        result = train_pipeline(data, config, progress=progress)
        if name == "full":
            rows.append(("mbae", evaluate(result.pretrained, data.test_examples, config.eval.ks, guidance,
                                          config.train.seed, use_diffusion=False,
                                          batch_size=config.eval.batch_size)))
        rows.append((name, evaluate(result.model, data.test_examples, config.eval.ks, guidance,
                                    config.train.seed, batch_size=config.eval.batch_size)))
    if out_dir:
        columns = [f"{metric}@{k}" for k in base.eval.ks for metric in ("recall", "ndcg")]
        lines = ["variant\t" + "\t".join(columns)]
        lines += [name + "\t" + "\t".join(f"{report.overall[column]:.6f}" for column in columns)
                  for name, report in rows]
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / "ablation.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return rows
