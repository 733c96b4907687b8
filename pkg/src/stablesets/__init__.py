"""Multiplicatively stable sets and sign patterns built from n^{iT} phases.

Submodules: ``phase`` (high-precision phases), ``arith`` (primes, characters),
``search`` (frequency search), ``schedule`` (epoch/block construction),
``stable_set`` and ``signed`` (the two constructions), ``estimators``
(densities and reports) and ``cli``.
"""
from .arith import DirichletCharacter, character_mod_q, primes_up_to
from .phase import Arc, Phase, PrecisionContractError, phase, progression_turns
from .schedule import InfeasibleScheduleError, Schedule, build_schedule, locate, validate
from .search import SearchBudgetExhausted, TargetMode, TargetSpec, find_T
from .signed import SignedParams
from .stable_set import StableSetParams, contains

__version__ = "0.1.0"

__all__ = [
    "Arc", "DirichletCharacter", "InfeasibleScheduleError", "Phase",
    "PrecisionContractError", "Schedule", "SearchBudgetExhausted", "SignedParams",
    "StableSetParams", "TargetMode", "TargetSpec", "build_schedule",
    "character_mod_q", "contains", "find_T", "locate", "phase", "primes_up_to",
    "progression_turns", "validate",
]
