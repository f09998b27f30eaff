"""Agent-based futures market simulator.

Heterogeneous model-driven traders exchange a single futures contract on a
matching engine with per-frame margin settlement and forced liquidation; a
human operator can steer a live run by injecting news and submitting
orders through the service API.
"""

from . import policies  # noqa: F401  (registers the bundled scripted policies)
from .agents import AblationFlags, AgentProfile, NewsItem, RuntimeConfig, SimulationRunner
from .engine import Account, AssetSpec, Engine, EngineConfig, TradingRules
from .gateway import BackendSpec, Gateway, parse_structured
from .generator import GeneratorModel, PriceHistory, fit_generator, generate_orders
from .records import RecordSet, read_record_log
from .scenario import Scenario, load_scenario

__version__ = "0.1.0"

__all__ = [
    "AblationFlags", "Account", "AgentProfile", "AssetSpec", "BackendSpec",
    "Engine", "EngineConfig", "Gateway", "GeneratorModel", "NewsItem",
    "PriceHistory", "RecordSet", "RuntimeConfig", "Scenario", "SimulationRunner",
    "TradingRules", "fit_generator", "generate_orders", "load_scenario",
    "parse_structured", "read_record_log", "__version__",
]
