"""
This module defines constants used throughout the toolkit,
including file magics, numeric tolerances and default hyperparameters.
"""
from enum import Enum, IntEnum


class ExitCode(IntEnum):
    """Process exit statuses of the CLI."""
    SUCCESS = 0
    USAGE = 2
    VALIDATION = 3
    IO = 4
    NUMERICAL = 5


class FusionMode(str, Enum):
    """Fusion settings: with or without the target acoustic model term."""
    MULTILINGUAL = "multilingual"
    CROSS_LINGUAL = "cross-lingual"

    @classmethod
    def parse(cls, value: str) -> "FusionMode":
        aliases = {"multi": cls.MULTILINGUAL, "cross": cls.CROSS_LINGUAL}
        if value in aliases:
            return aliases[value]
        return cls(value)

    def __str__(self) -> str:
        return self.value


class StopReason(str, Enum):
    """Why a training run ended."""
    MAX_EPOCHS = "max_epochs"
    EARLY_STOPPING = "early_stopping"

    def __str__(self) -> str:
        return self.value


# File formats
PGM_MAGIC = b"PGM1"
MNW_MAGIC = b"MNW1"
PGM_SUFFIX = ".pgm"
LABEL_SUFFIX = ".lab"
NETWORK_SUFFIX = ".mnw"

# Numeric tolerances
ROW_SUM_TOLERANCE = 1e-5
WEIGHT_SUM_TOLERANCE = 1e-9
KL_EPSILON = 1e-10
ENTROPY_EPSILON = 1e-12

# Mapping network defaults
HIDDEN_LAYERS = 3
DEFAULT_HIDDEN_DIMS = (256, 256, 256)
DEFAULT_LEARNING_RATE = 1e-2
DEFAULT_MOMENTUM = 0.9
DEFAULT_BATCH_SIZE = 256
DEFAULT_MAX_EPOCHS = 50
DEFAULT_PATIENCE = 5
DEFAULT_DEV_FRACTION = 1.0 / 30.0

# Fusion defaults
DEFAULT_TEMPERATURE = 0.25
DEFAULT_TARGET_SHARE = 0.5

# Evaluation defaults
DEFAULT_TOPN = (1, 2, 5, 10)
SILENCE_PHONE = "sil"
UNUSED_PHONE = "unk"
