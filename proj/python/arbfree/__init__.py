"""Option premium surfaces fitted by networks with no-arbitrage derivative penalties."""

from ._core import *  # noqa: F401,F403
from ._core import (
    Activation,
    ArbfreeError,
    ConfigError,
    DomainError,
    GridSpec,
    InputError,
    Network,
    PenaltyConfig,
    QuoteGrid,
    SabrParams,
    TrainConfig,
    TrainingError,
)

__version__ = "0.1.0"
