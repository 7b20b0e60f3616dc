"""
Script principal unificado para el recomendador multi-comportamiento.
Punto de entrada central: datos sintéticos, entrenamiento por etapas, inferencia y evaluación.
"""

import argparse
import sys
from pathlib import Path
from typing import Optional

from autoencoder import preference_similarity
from autoencoder.attention_io import (
    default_behavior_names,
    plot_attention_map,
    sequence_labels,
    write_attention_grid,
    write_attention_legend,
)
from evaluation import (
    DEFAULT_GRIDS,
    SELECTORS,
    SWEEP_AXES,
    ablation,
    evaluate,
    few_shot_curve,
    grad_check,
    parse_axis_values,
    sweep,
)
from info_stats import entropy_report, joint_counts
from models import ModelFactory
from sequences import (
    PlantedConfig,
    build_sequences,
    flatten,
    gen_synthetic,
    inference_prefix,
    load_interactions,
    planted_purity,
    read_header,
    read_manifest,
)
from training import (
    CheckpointManager,
    infer_next_item,
    load_dataset,
    prepare_data,
    stage1_pretrain,
    stage2_train_ldm,
    stage3_finetune,
    user_generator,
)
from utils import (
    ConfigurationError,
    RecConfig,
    RecError,
    UsageError,
    get_device,
    get_output_dir,
    parse_overrides,
    seed_everything,
)
from utils.logging_setup import configure_logging

# Claves que se pueden cambiar sobre un checkpoint ya entrenado
RUNTIME_PREFIXES = ("train.", "eval.", "diffusion.omega", "diffusion.null_prob", "diffusion.stride")


def print_help():
    """Imprime ayuda sobre los comandos disponibles."""
    print("""
🚀 Recomendador multi-comportamiento con difusión latente - Comandos disponibles:

DATOS:
  gen-data         - Genera un conjunto sintético con clústeres plantados
                     • archivo .tsv + .header + .manifest
  entropy          - Entropías e información mutua entre ítems y comportamientos

ENTRENAMIENTO:
  pretrain         - Etapa 1: autoencoder con la tarea Cloze
  train-diffusion  - Etapa 2: denoiser latente (autoencoder congelado)
  finetune         - Etapa 3: ajuste del decodificador con predicción del siguiente ítem

INFERENCIA Y EVALUACIÓN:
  infer            - Top-K para un usuario y un comportamiento objetivo
  evaluate         - Recall@K y NDCG@K global y por comportamiento
  few-shot         - Omisión de un comportamiento objetivo y reentrenamiento
  sweep            - Barrido de rho, sigma, T, stride u omega
  ablation         - Variantes APE/RoPE y MLP/AdaLN frente al modelo completo
  similarity       - Similitud coseno entre preferencias agnósticas y específicas
  attn-dump        - Mapa de atención promediado de un usuario
  grad-check       - Gradientes analíticos frente a diferencias finitas

OPCIONES COMUNES:
  --config RUTA     Archivo key=value (también MBREC_CONFIG en .env)
  --seed N          Semilla de toda la ejecución
  --out DIR         Directorio de salida (también MBREC_OUTPUT_DIR)
  --set CLAVE=VAL   Override de configuración, repetible (p. ej. --set model.d=32)

EJEMPLOS:
  uv run python run_pipeline.py gen-data --out outputs
  uv run python run_pipeline.py pretrain --data outputs/synthetic.tsv --config sample_files/default.cfg
  uv run python run_pipeline.py infer --data outputs/synthetic.tsv --user 42 --behavior 3 --k 10 --seed 1
  uv run python run_pipeline.py sweep --data outputs/synthetic.tsv --axis omega --values 0,1,2,5
    """)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Archivo de configuración key=value")
    common.add_argument("--seed", type=int, help="Semilla de la ejecución")
    common.add_argument("--out", help="Directorio de salida")
    common.add_argument("--set", action="append", default=[], metavar="CLAVE=VALOR",
                        help="Override de configuración (repetible)")
    common.add_argument("--log-level", default="INFO", help="Nivel de logging")
    common.add_argument("--quiet", action="store_true", help="Sin barras de progreso")

    parser = argparse.ArgumentParser(
        description="Recomendador multi-comportamiento - Pipeline Runner",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    subparsers = parser.add_subparsers(dest="command")
    subparsers.add_parser("help", help="Muestra la ayuda extendida")

    def add(name: str, help_text: str, data: bool = True, checkpoint: Optional[str] = None):
        sub = subparsers.add_parser(name, parents=[common], help=help_text)
        if data:
            sub.add_argument("--data", required=True, help="Archivo de interacciones (.tsv con .header)")
        if checkpoint:
            sub.add_argument("--checkpoint", help=f"Manifiesto del checkpoint (por defecto OUT/{checkpoint})")
        return sub

    gen = add("gen-data", "Genera datos sintéticos", data=False)
    gen.add_argument("--file", help="Ruta del .tsv (por defecto OUT/synthetic.tsv)")
    gen.add_argument("--users", type=int, default=500)
    gen.add_argument("--items", type=int, default=200)
    gen.add_argument("--behaviors", type=int, default=4)
    gen.add_argument("--archetypes", type=int, default=5)
    gen.add_argument("--cluster-size", type=int, default=10)
    gen.add_argument("--min-len", type=int, default=8)
    gen.add_argument("--max-len", type=int, default=30)

    add("entropy", "Diagnóstico de entropías")
    add("pretrain", "Etapa 1")
    add("train-diffusion", "Etapa 2", checkpoint="stage1.manifest")
    add("finetune", "Etapa 3", checkpoint="stage2.manifest")

    infer = add("infer", "Recomendación top-K", checkpoint="stage3.manifest")
    infer.add_argument("--user", type=int, required=True)
    infer.add_argument("--behavior", type=int, required=True)
    infer.add_argument("--k", type=int, default=10)

    evaluate_cmd = add("evaluate", "Evaluación leave-one-out", checkpoint="stage3.manifest")
    evaluate_cmd.add_argument("--no-diffusion", action="store_true",
                              help="Decodifica la preferencia agnóstica directamente")

    few_shot = add("few-shot", "Curva few-shot")
    few_shot.add_argument("--behavior", type=int, required=True)
    few_shot.add_argument("--ratios", default="0,0.2,0.5,1")

    sweep_cmd = add("sweep", "Barrido de hiperparámetros")
    sweep_cmd.add_argument("--axis", required=True, choices=sorted(SWEEP_AXES))
    sweep_cmd.add_argument("--values", help="Lista separada por comas (por defecto la rejilla estándar)")

    attn = add("attn-dump", "Mapa de atención", checkpoint="stage1.manifest")
    attn.add_argument("--user", type=int, required=True)

    grad = add("grad-check", "Comprobación de gradientes", data=False)
    grad.add_argument("--module", default="all", choices=sorted(SELECTORS) + ["all"])
    grad.add_argument("--tolerance", type=float, default=1e-4)

    add("ablation", "Tabla de ablaciones")
    add("similarity", "Similitud de preferencias", checkpoint="stage1.manifest")
    return parser


def _progress(args) -> bool:
    return not args.quiet and sys.stderr.isatty()


def _behavior_names(config: RecConfig, num_behaviors: int) -> list[str]:
    names = list(config.data.behavior_names)
    return names if len(names) == num_behaviors else default_behavior_names(num_behaviors)


def _checkpoint_path(args, out_dir: Path, default_name: str) -> Path:
    return Path(args.checkpoint) if args.checkpoint else out_dir / default_name


def _runtime_config(saved: RecConfig, requested: RecConfig, out_dir: Path) -> RecConfig:
    """Arquitectura del checkpoint + claves de ejecución pedidas; reescribe el eco resuelto."""
    merged = saved.copy()
    merged.apply({key: value for key, value in requested.to_key_values().items()
                  if key.startswith(RUNTIME_PREFIXES)})
    merged.validate()
    merged.write(out_dir / "resolved_config.cfg")
    return merged


def run_gen_data(args, config: RecConfig, out_dir: Path) -> int:
    params = PlantedConfig(num_users=args.users, num_items=args.items, num_behaviors=args.behaviors,
                         archetypes=args.archetypes, seq_len_range=(args.min_len, args.max_len),
                         cluster_size=args.cluster_size,
                         seed=args.seed if args.seed is not None else PlantedConfig().seed)
    params.validate()
    path = Path(args.file) if args.file else out_dir / "synthetic.tsv"
    print(f"🔧 Generando datos sintéticos en {path}...")
    data_path, manifest_path = gen_synthetic(params, path)
    grouped = load_interactions(data_path, read_header(data_path).vocab)
    purity = planted_purity(grouped, read_manifest(manifest_path))
    print(f"📋 {len(grouped)} usuarios, pureza plantada {purity:.3f}")
    return 0


def run_entropy(args, config: RecConfig, out_dir: Path) -> int:
    grouped, _ = load_dataset(Path(args.data), config)
    report = entropy_report(joint_counts(flatten(grouped)))
    lines = [f"{key}={value}" for key, value in report.to_key_values().items()]
    print("\n📊 Diagnóstico de entropía (bits):")
    print("\n".join(lines))
    (out_dir / "entropy.txt").write_text("\n".join(lines) + "\n" + report.to_record() + "\n", encoding="utf-8")
    return 0


def run_pretrain(args, config: RecConfig, out_dir: Path) -> int:
    grouped, vocab = load_dataset(Path(args.data), config)
    data = prepare_data(grouped, vocab, config)
    model = ModelFactory.create_recommender(vocab, config, device=get_device(config))
    print(f"🔨 Etapa 1 sobre {len(data.train_sequences)} secuencias...")
    with CheckpointManager.recording_stage(model, config, 1, out_dir) as paths:
        result = stage1_pretrain(model, data.train_sequences, config, out_dir / "train_stage1.log", _progress(args))
    print(f"📈 loss final {result.losses[-1]:.4f}, precisión enmascarada {result.metrics[-1]:.4f}")
    print(f"💾 Checkpoint: {paths.manifest}")
    return 0


def run_train_diffusion(args, config: RecConfig, out_dir: Path) -> int:
    model, saved, _ = CheckpointManager.load(_checkpoint_path(args, out_dir, "stage1.manifest"), 1, get_device(config))
    config = _runtime_config(saved, config, out_dir)
    grouped, vocab = load_dataset(Path(args.data), config)
    data = prepare_data(grouped, vocab, config)
    print(f"🔨 Etapa 2 (T={config.diffusion.T}, p_null={config.diffusion.null_prob})...")
    with CheckpointManager.recording_stage(model, config, 2, out_dir) as paths:
        result = stage2_train_ldm(model, data.train_sequences, config, out_dir / "train_stage2.log", _progress(args))
    print(f"📈 pérdida de ruido final {result.losses[-1]:.5f}")
    print(f"💾 Checkpoint: {paths.manifest}")
    return 0


def run_finetune(args, config: RecConfig, out_dir: Path) -> int:
    model, saved, _ = CheckpointManager.load(_checkpoint_path(args, out_dir, "stage2.manifest"), 2, get_device(config))
    config = _runtime_config(saved, config, out_dir)
    grouped, vocab = load_dataset(Path(args.data), config)
    data = prepare_data(grouped, vocab, config)
    print("🔨 Etapa 3 (solo decodificador)...")
    with CheckpointManager.recording_stage(model, config, 3, out_dir) as paths:
        result = stage3_finetune(model, data.train_sequences, config, ModelFactory.create_guidance(config),
                                 out_dir / "train_stage3.log", _progress(args))
    print(f"📈 loss final {result.losses[-1]:.4f}, precisión {result.metrics[-1]:.4f}")
    print(f"💾 Checkpoint: {paths.manifest}")
    return 0


def run_infer(args, config: RecConfig, out_dir: Path) -> int:
    with CheckpointManager.open_checkpoint(_checkpoint_path(args, out_dir, "stage3.manifest"), 3,
                                           get_device(config)) as (model, saved):
        config = _runtime_config(saved, config, out_dir)
        grouped, vocab = load_dataset(Path(args.data), config)
        if args.user not in grouped:
            raise UsageError(f"El usuario {args.user} no aparece en {args.data}")
        prefix = inference_prefix(args.user, grouped[args.user], config.data.seq_len, vocab)
        ranked = infer_next_item(prefix, args.behavior, model, ModelFactory.create_guidance(config), args.k,
                                 user_generator(config.train.seed, args.user))
    path = out_dir / f"infer_u{args.user}_b{args.behavior}.txt"
    path.write_text("\n".join(f"{rank}\t{item}" for rank, item in enumerate(ranked, start=1)) + "\n",
                    encoding="utf-8")
    print(f"\n🎯 Top-{len(ranked)} para el usuario {args.user} (comportamiento {args.behavior}):")
    print(" ".join(str(item) for item in ranked))
    return 0


def run_evaluate(args, config: RecConfig, out_dir: Path) -> int:
    min_stage = 1 if args.no_diffusion else 3
    default_name = "stage1.manifest" if args.no_diffusion else "stage3.manifest"
    with CheckpointManager.open_checkpoint(_checkpoint_path(args, out_dir, default_name), min_stage,
                                           get_device(config)) as (model, saved):
        config = _runtime_config(saved, config, out_dir)
        grouped, vocab = load_dataset(Path(args.data), config)
        data = prepare_data(grouped, vocab, config)
        report = evaluate(model, data.test_examples, config.eval.ks, ModelFactory.create_guidance(config),
                          config.train.seed, use_diffusion=not args.no_diffusion,
                          batch_size=config.eval.batch_size)
    report.config_echo = config.to_key_values()
    names = _behavior_names(config, vocab.num_behaviors)
    report.write(out_dir / "eval_report.txt", names)
    print("\n📊 Resultados:")
    print(report.to_text(names))
    return 0


def run_few_shot(args, config: RecConfig, out_dir: Path) -> int:
    grouped, vocab = load_dataset(Path(args.data), config)
    data = prepare_data(grouped, vocab, config)
    ratios = [float(value) for value in args.ratios.split(",") if value.strip()]
    print(f"🔧 Few-shot sobre el comportamiento {args.behavior}, ratios {ratios}...")
    rows = few_shot_curve(data, config, args.behavior, ratios, out_dir, _progress(args))
    for row in rows:
        recall = row.behavior_recall.get(f"recall@{config.eval.ks[0]}", 0.0)
        print(f"  ratio {row.ratio:.2f}: recall@{config.eval.ks[0]} del comportamiento = {recall:.4f}")
    return 0


def run_sweep(args, config: RecConfig, out_dir: Path) -> int:
    grouped, vocab = load_dataset(Path(args.data), config)
    data = prepare_data(grouped, vocab, config)
    values = parse_axis_values(args.axis, args.values) if args.values else DEFAULT_GRIDS[args.axis]
    print(f"🔧 Barrido de {args.axis}: {values}")
    table = sweep(args.axis, values, config, data, out_dir, _progress(args))
    print(table.to_text(config.eval.ks))
    if table.skipped:
        print(f"⚠️  Valores omitidos: {', '.join(table.skipped)}")
    return 0


def run_attn_dump(args, config: RecConfig, out_dir: Path) -> int:
    with CheckpointManager.open_checkpoint(_checkpoint_path(args, out_dir, "stage1.manifest"), 1,
                                           get_device(config)) as (model, saved):
        config = _runtime_config(saved, config, out_dir)
        grouped, vocab = load_dataset(Path(args.data), config)
        if args.user not in grouped:
            raise UsageError(f"El usuario {args.user} no aparece en {args.data}")
        sequence = build_sequences({args.user: grouped[args.user]}, config.data.seq_len, vocab)[0]
        matrix = model.autoencoder.attention_maps(sequence).cpu().numpy()
    labels = sequence_labels(sequence, vocab, _behavior_names(config, vocab.num_behaviors))
    stem = out_dir / f"attention_u{args.user}_{config.model.position_mode}"
    write_attention_grid(matrix, stem.with_suffix(".grid"))
    write_attention_legend(labels, stem.with_suffix(".labels"))
    plot_attention_map(matrix, labels, stem.with_suffix(".png"), title=config.model.position_mode)
    print(f"🖼️  Mapa de atención en {stem.with_suffix('.png')}")
    return 0


def run_grad_check(args, config: RecConfig, out_dir: Path) -> int:
    selectors = sorted(SELECTORS) if args.module == "all" else [args.module]
    seed = config.train.seed
    failed = []
    lines = []
    for selector in selectors:
        report = grad_check(selector, args.tolerance, seed=seed)
        lines.append(f"[{selector}]\n{report.to_text()}")
        print(f"{'✅' if report.passed else '❌'} {selector}: {report.max_error:.3e}")
        if not report.passed:
            failed.append(selector)
    (out_dir / "grad_check.txt").write_text("\n\n".join(lines) + "\n", encoding="utf-8")
    return 1 if failed else 0


def run_ablation(args, config: RecConfig, out_dir: Path) -> int:
    grouped, vocab = load_dataset(Path(args.data), config)
    data = prepare_data(grouped, vocab, config)
    print("🔧 Entrenando variantes de ablación...")
    rows = ablation(config, data, out_dir, _progress(args))
    k = config.eval.ks[0]
    for name, report in rows:
        print(f"  {name:<8} recall@{k}={report.overall[f'recall@{k}']:.4f} ndcg@{k}={report.overall[f'ndcg@{k}']:.4f}")
    return 0


def run_similarity(args, config: RecConfig, out_dir: Path) -> int:
    with CheckpointManager.open_checkpoint(_checkpoint_path(args, out_dir, "stage1.manifest"), 1,
                                           get_device(config)) as (model, saved):
        config = _runtime_config(saved, config, out_dir)
        grouped, vocab = load_dataset(Path(args.data), config)
        data = prepare_data(grouped, vocab, config)
        matrix, means = preference_similarity(model.autoencoder, data.test_examples, config.eval.batch_size)
    names = _behavior_names(config, vocab.num_behaviors)
    lines = [f"{name}={value!r}" for name, value in zip(names, means.tolist())]
    lines.append(f"users={matrix.shape[0]}")
    (out_dir / "similarity.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print("\n📊 Similitud coseno media (agnóstica vs específica):")
    print("\n".join(lines))
    return 0


HANDLERS = {
    "gen-data": run_gen_data,
    "entropy": run_entropy,
    "pretrain": run_pretrain,
    "train-diffusion": run_train_diffusion,
    "finetune": run_finetune,
    "infer": run_infer,
    "evaluate": run_evaluate,
    "few-shot": run_few_shot,
    "sweep": run_sweep,
    "attn-dump": run_attn_dump,
    "grad-check": run_grad_check,
    "ablation": run_ablation,
    "similarity": run_similarity,
}


def run(argv: Optional[list[str]] = None) -> int:
    """
    Ejecuta un subcomando.

    Returns:
        int: 0 si todo fue bien, 1 ante un error del pipeline, 2 ante un error de uso o de configuración
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    if args.command is None or args.command == "help":
        print_help()
        return 0

    configure_logging(args.log_level)
    try:
        overrides = parse_overrides(args.set)
        if args.seed is not None:
            overrides["train.seed"] = str(args.seed)
        config = RecConfig.from_sources(args.config, overrides)
        seed_everything(config.train.seed)
        out_dir = get_output_dir(args.out)
        config.write(out_dir / "resolved_config.cfg")

        print(f"🚀 {args.command}")
        print("=" * 50)
        status = HANDLERS[args.command](args, config, out_dir)
        if status == 0:
            print("\n✅ Comando completado exitosamente")
        return status

    except KeyboardInterrupt:
        print("\n⏹️  Ejecución interrumpida por el usuario")
        return 130
    except (UsageError, ConfigurationError) as e:
        print(f"\n❌ Error de uso: {e}")
        return 2
    except RecError as e:
        print(f"\n❌ Error durante la ejecución: {e}")
        print(f"Tipo de error: {type(e).__name__}")
        return 1
    except OSError as e:
        print(f"\n❌ Error de entrada/salida: {e}")
        print(f"Tipo de error: {type(e).__name__}")
        return 1


def main():
    """Función principal."""
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
