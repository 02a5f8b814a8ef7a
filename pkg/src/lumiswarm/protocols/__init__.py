"""Per-activation decision rules: pure functions Snapshot -> Action.

Every protocol and variant lives here.  Step functions are deterministic and
reentrant; the engine owns all mutation.  Protocols are looked up by name in
:data:`PROTOCOLS`.
"""

from .base import (
    Action,
    PreconditionNotMetError,
    Protocol,
    ProtocolError,
    ProtocolParams,
    MissingKnowledgeError,
)
from .shrink import (
    shrink_step,
    shrink_near_gathering,
    shrink_delta_known,
    shrink_n_known,
)
from .contain import (
    contain_step,
    contain_asynch_variant,
    contain_n_known,
)
from .circle import circle_formation_step, circle_contain_step, circle_contain_done_step
from .sequential import sequential_step
from .registry import PROTOCOLS, get_protocol

__all__ = [
    "Action",
    "PreconditionNotMetError",
    "Protocol",
    "ProtocolError",
    "ProtocolParams",
    "MissingKnowledgeError",
    "shrink_step",
    "shrink_near_gathering",
    "shrink_delta_known",
    "shrink_n_known",
    "contain_step",
    "contain_asynch_variant",
    "contain_n_known",
    "circle_formation_step",
    "circle_contain_step",
    "circle_contain_done_step",
    "sequential_step",
    "PROTOCOLS",
    "get_protocol",
]
