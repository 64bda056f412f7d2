"""
Inference package
"""

from .adapters import (
    SCRIPTED_AGENTS,
    AgentAdapter,
    AlwaysToggleAgent,
    HttpAgent,
    OptimalAgent,
    ScriptedAgent,
    SubprocessAgent,
    create_agent,
)

__all__ = [
    'SCRIPTED_AGENTS',
    'AgentAdapter',
    'AlwaysToggleAgent',
    'HttpAgent',
    'OptimalAgent',
    'ScriptedAgent',
    'SubprocessAgent',
    'create_agent',
]
