"""From-scratch neural translator: n-gram-injected encoder, LSTM
pointer-generator decoder, beam search, deterministic training."""

from .beam import BeamCandidate, beam_search
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .model import (
    InputVocab,
    LengthError,
    ModelConfig,
    Params,
    PointerSlot,
    SerializedInput,
    StepDistribution,
    decode_step,
    encode,
    init_decoder,
    init_params,
    serialize_input,
)
from .synth import generate_synthetic_corpus, gloss, toy_schemas
from .tensor import Tensor, concat, embedding
from .training import (
    OOVError,
    TrainResult,
    build_output_vocab,
    detached,
    detokenize,
    grad_check,
    prepare_config,
    sample_loss,
    tokenize_gold,
    train,
    training_accuracy,
)

__all__ = [
    "BeamCandidate", "beam_search", "CheckpointError", "load_checkpoint",
    "save_checkpoint", "InputVocab", "LengthError", "ModelConfig", "Params",
    "PointerSlot", "SerializedInput", "StepDistribution", "decode_step",
    "encode", "init_decoder", "init_params", "serialize_input",
    "generate_synthetic_corpus", "gloss", "toy_schemas", "Tensor", "concat",
    "embedding", "OOVError", "TrainResult", "build_output_vocab", "detached",
    "detokenize", "grad_check", "prepare_config", "sample_loss",
    "tokenize_gold", "train", "training_accuracy",
]
