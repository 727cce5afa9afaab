"""Privacy-preserving aggregate risk statistics over mutually distrusting
parties: masked sums, secret-shared inner products, and the financial
indexes built on them (aggregates, concentration, correlations)."""

__version__ = "0.1.0"

from .arith import FieldElem, ModReal, QuantParams, mod_real
from .protocols import ConfigError, ProtocolAbort, SessionConfig, SessionResult

__all__ = [
    "__version__",
    "FieldElem",
    "ModReal",
    "QuantParams",
    "mod_real",
    "ConfigError",
    "ProtocolAbort",
    "SessionConfig",
    "SessionResult",
]
