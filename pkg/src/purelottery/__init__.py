"""Bias-resistant leader election by single-elimination commit-reveal tournaments."""

from .bracket import Bracket, build, match_params, resign, signup
from .commitment import build_chain, commit, verify
from .engine import Election, EngineConfig, Phase, RevealMessage, resolve_match
from .harness import TrialConfig, play_election, run_trials

__all__ = [
    "Bracket", "build", "match_params", "resign", "signup",
    "build_chain", "commit", "verify",
    "Election", "EngineConfig", "Phase", "RevealMessage", "resolve_match",
    "TrialConfig", "play_election", "run_trials",
]
