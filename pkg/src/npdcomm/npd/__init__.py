"""Neural polar decoder: embeddings, staged loss, training, design and decoding."""
from .decode import (Kernels, classical_kernels, neural_kernels, npd_ca_scl_decode, npd_decode_batched,
                     npd_sc_decode, sc_decode_embeddings, scl_decode_embeddings)
from .design import MiEstimate, design_code, design_from_mi, estimate_mi, mi_from_embeddings
from .loss import NscResult, nsc_loss, nsc_loss_tilde, staged_forward
from .model import (NpdParams, constant_embedding, constant_sequence, embed, embed_backward,
                    embed_channel_output, n0_feature, rate_recover)
from .train import TrainConfig, TrainResult, loss_and_grads, train

__all__ = [
    "Kernels", "classical_kernels", "neural_kernels", "npd_ca_scl_decode", "npd_decode_batched", "npd_sc_decode",
    "sc_decode_embeddings", "scl_decode_embeddings", "MiEstimate", "design_code", "design_from_mi",
    "estimate_mi", "mi_from_embeddings", "NscResult", "nsc_loss", "nsc_loss_tilde", "staged_forward",
    "NpdParams", "constant_embedding", "constant_sequence", "embed", "embed_backward", "embed_channel_output",
    "n0_feature", "rate_recover", "TrainConfig", "TrainResult", "loss_and_grads", "train",
]
