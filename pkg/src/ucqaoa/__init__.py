"""Multilevel QAOA-refined solver for unit commitment QUBOs."""

from .classical import AnnealSchedule, SolveResult, brute_force, local_search, simulated_annealing
from .errors import CapacityError, CompileError, ConfigurationError, UcqaoaError, ValidationError
from .ising import (
    Assignment,
    IsingGraph,
    extract_subproblem,
    flip_delta,
    gains,
    ising_energy,
    qubo_to_ising,
)
from .model import (
    CostReport,
    DemandMode,
    MinDownMode,
    PenaltyFactors,
    Schedule,
    UcpInstance,
    UnitSpec,
    evaluate_schedule,
    generate_synthetic,
    parse_instance,
)
from .multilevel import Hierarchy, Matching, build_hierarchy, coarsen, embed, interpolate, match_nodes
from .pipeline import PipelineConfig, RunReport, refine_level, run_baselines, solve_pipeline
from .quantum import QaoaParams, QiroConfig, optimize_angles, qaoa_expectation, qaoa_state, qiro_solve, sample
from .qubo import QuboProblem, VariableMap, compile_qubo, decode, encode, evaluate_qubo, sparsity_report

__version__ = "0.1.0"
