"""Recovery guarantees and solvers for sparsely corrupted signals z = A x + B e."""

from .dictionary import (CoherenceProfile, ConvergenceError, Dictionary, coherence,
                         coherence_profile, mutual_coherence, parse_spec, spectral_norm,
                         two_onb_profile, unitary_pair_profile)
from .guarantees import (BetaFloorError, BetaRule, Binding, GuaranteeResult, Program, Scenario,
                         SparsityPoint, check_guarantee, closed_form_max_nx, max_recoverable_nx,
                         no_error_condition, scaling_condition)
from .montecarlo import SweepGrid, SweepResult, run_sweep, scaling_table, threshold_curve
from .signals import Instance, make_instance
from .solvers import (Mode, SolverReport, basis_pursuit, dual_certificate, recover_both_known,
                      solve_l0_exhaustive, solve_l1)

__version__ = "0.1.0"


__all__ = [
    "CoherenceProfile",
    "ConvergenceError",
    "Dictionary",
    "coherence",
    "coherence_profile",
    "mutual_coherence",
    "parse_spec",
    "spectral_norm",
    "two_onb_profile",
    "unitary_pair_profile",
    "BetaFloorError",
    "BetaRule",
    "Binding",
    "GuaranteeResult",
    "Program",
    "Scenario",
    "SparsityPoint",
    "check_guarantee",
    "closed_form_max_nx",
    "max_recoverable_nx",
    "no_error_condition",
    "scaling_condition",
    "SweepGrid",
    "SweepResult",
    "run_sweep",
    "scaling_table",
    "threshold_curve",
    "Instance",
    "make_instance",
    "Mode",
    "SolverReport",
    "basis_pursuit",
    "dual_certificate",
    "recover_both_known",
    "solve_l0_exhaustive",
    "solve_l1",
]
