"""Construcción del modelo completo."""
from .model_factory import ModelFactory
from .recommender import BehaviorTransferRecommender

__all__ = ["ModelFactory", "BehaviorTransferRecommender"]
