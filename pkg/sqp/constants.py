DATASET_MAGIC = b"SQPD"
WEIGHTS_MAGIC = b"SQPW"
QUANT_SECTION_TAG = b"QNT1"

ENV_SEED = "SQP_SEED"

# 9 s segments at 16 kHz with 40 ms windows and 20 ms hop
FULL_INPUT_SHAPE = (449, 120)
DESK_INPUT_SHAPE = (149, 120)

DROPOUT_RATE = 0.3
