from enum import Enum


class ActivationKind(str, Enum):
    RELU = "relu"
    HEAVISIDE = "heaviside"
    RELAXED = "relaxed"
    IDENTITY = "identity"


class PoolKind(str, Enum):
    MAX_POOL_2X2 = "maxpool2x2"
    GLOBAL_MAX = "global_max"
    GLOBAL_AVG = "global_avg"


class ModelVariant(str, Enum):
    BASELINE = "baseline"
    BAM = "bam"
    BAM_BINARY_WEIGHTS = "bam-binary-weights"


class WeightMode(str, Enum):
    FLOAT = "float"
    BINARY = "binary"


class ForwardMode(str, Enum):
    TRAIN = "train"
    EVAL = "eval"


class WeightPrecision(str, Enum):
    FP32 = "fp32"
    INT8 = "int8"


class ConvBackend(str, Enum):
    MASKED = "masked"
    BITPLANE = "bitplane"


class EngineKind(str, Enum):
    FP32_REFERENCE = "fp32-reference"
    INT8_DENSE = "int8-dense"
    BAM_FP32 = "bam-fp32"
    BAM_INT8 = "bam-int8"


class SnrDistribution(str, Enum):
    UNIFORM = "uniform"
    LOW_SKEWED = "low-skewed"


class LabelFunction(str, Enum):
    SNR_SIGMOID = "snr-sigmoid"


class LayerType(str, Enum):
    CONV = "conv"
    MAXPOOL = "maxpool"
    DROPOUT = "dropout"
    GLOBAL_POOL = "global_pool"
    DENSE = "dense"


class ComparisonArm(str, Enum):
    BASELINE = "baseline"
    PTQ_BINARIZED = "ptq-binarized"
    BAM_QAT = "bam-qat"
    BAM_QAT_INT8 = "bam-qat-int8"
    BAM_BINARY_WEIGHTS = "bam-binary-weights"
    FULL_INT8 = "full-int8"
