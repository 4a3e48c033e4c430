INVALID_INPUT = "invalid_input"
FORMAT_ERROR = "format_error"
SHAPE_MISMATCH = "shape_mismatch"
EMPTY_INPUT = "empty_input"
NON_FINITE = "non_finite"
TRAINING_DIVERGED = "training_diverged"
MISSING_PARAMETERS = "missing_parameters"
CACHE_MISMATCH = "cache_mismatch"
CONFIGURATION_ERROR = "configuration_error"
