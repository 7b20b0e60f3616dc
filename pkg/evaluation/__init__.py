"""Métricas, evaluación, few-shot, barridos, ablaciones y comprobación de gradientes."""
from .evaluator import EvalReport, build_report, evaluate
from .few_shot import FewShotRow, few_shot_curve, few_shot_drop
from .grad_check import SELECTORS, GradCheckReport, grad_check
from .metrics import ndcg_at_k, recall_at_k, target_ranks
from .sweep import DEFAULT_GRIDS, SWEEP_AXES, SweepTable, ablation, config_for, parse_axis_values, sweep

__all__ = [
    "EvalReport",
    "build_report",
    "evaluate",
    "FewShotRow",
    "few_shot_curve",
    "few_shot_drop",
    "SELECTORS",
    "GradCheckReport",
    "grad_check",
    "ndcg_at_k",
    "recall_at_k",
    "target_ranks",
    "DEFAULT_GRIDS",
    "SWEEP_AXES",
    "SweepTable",
    "ablation",
    "config_for",
    "parse_axis_values",
    "sweep",
]
