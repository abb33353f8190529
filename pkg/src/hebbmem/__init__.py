"""Associative long-term memory for conversational agents.

Dialogue turns live in a graph whose edges strengthen when turns are
retrieved together and decay otherwise.  Strongly connected hubs are
distilled into semantic records, and queries combine direct similarity with
one hop of spreading activation.
"""

from .config import LOCOMO, LONGMEMEVAL, ConfigError, EngineConfig, validate_config
from .engine import Answer, MemoryEngine, count_tokens
from .graph import EpisodicGraph
from .persistence import FORMAT_VERSION, EventLog, SnapshotError, load_snapshot, save_snapshot
from .types import (
    Category,
    ConsolidationEvent,
    ConversationTurn,
    HebbianEdge,
    MemoryNode,
    QACategory,
    QAItem,
    RankedNode,
    RetrievalResult,
    SemanticRecord,
)

__version__ = "0.1.0"

__all__ = [
    "Answer",
    "Category",
    "ConfigError",
    "ConsolidationEvent",
    "ConversationTurn",
    "EngineConfig",
    "EpisodicGraph",
    "EventLog",
    "FORMAT_VERSION",
    "HebbianEdge",
    "LOCOMO",
    "LONGMEMEVAL",
    "MemoryEngine",
    "MemoryNode",
    "QACategory",
    "QAItem",
    "RankedNode",
    "RetrievalResult",
    "SemanticRecord",
    "SnapshotError",
    "count_tokens",
    "load_snapshot",
    "save_snapshot",
    "validate_config",
]
