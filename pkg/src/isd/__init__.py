"""Iterative support detection for sparse and compressible signal recovery."""

__version__ = "0.1.0"

from .core import FirstJump, Geometric, IsdConfig, ReconReport, Toll, detect_support, isd_run
from .linop import (
    SensingOperator,
    SynthesisTransform,
    compose_synthesis,
    make_dense,
    make_gaussian,
    make_partial_dct,
)
from .reweighted import ReweightConfig, irl1_run, irls_run
from .signals import Signal, add_noise, gen_signal, shepp_logan
from .wl1 import SolverConfig, SolverState, solve_weighted_l1

__all__ = [
    "FirstJump",
    "Geometric",
    "IsdConfig",
    "ReconReport",
    "ReweightConfig",
    "SensingOperator",
    "Signal",
    "SolverConfig",
    "SolverState",
    "SynthesisTransform",
    "Toll",
    "add_noise",
    "compose_synthesis",
    "detect_support",
    "gen_signal",
    "irl1_run",
    "irls_run",
    "isd_run",
    "make_dense",
    "make_gaussian",
    "make_partial_dct",
    "shepp_logan",
    "solve_weighted_l1",
]
