"""Autoencoder multi-comportamiento con atención posicional intercambiable."""
from .attention import MultiHeadSelfAttention
from .autoencoder import MultiBehaviorAutoEncoder, preference_similarity, with_slot_behavior
from .decoder import ItemDecoder, mbae_loss
from .embedding import BehaviorAwareEmbedding
from .encoder import LatentPreference, MultiBehaviorEncoder
from .rotary import BehaviorModulation, barope_transform, rope_transform, rotary_frequencies

__all__ = [
    "MultiHeadSelfAttention",
    "MultiBehaviorAutoEncoder",
    "preference_similarity",
    "with_slot_behavior",
    "ItemDecoder",
    "mbae_loss",
    "BehaviorAwareEmbedding",
    "LatentPreference",
    "MultiBehaviorEncoder",
    "BehaviorModulation",
    "barope_transform",
    "rope_transform",
    "rotary_frequencies",
]
