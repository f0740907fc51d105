"""Decoupling-sequence construction: sign histories, moment constraints, solver and catalog."""

from .catalog import (CATALOG_NAMES, NOMINAL_ORDER, catalog_sequence, exact_sequence, free_sequence,
                      qdd_sequence, udd_sequence, udd_times)
from .moments import (ConstraintSystem, mixed_moment, moment, moment_report, numeric_mixed_moment,
                      numeric_moment, verify_order)
from .solver import (NonConvergenceError, SolverConfig, canonical_pattern, newton_polish, refine,
                     solution_census, solve_intervals)
from .textio import SequenceFormatError, dumps, loads, read_sequence, write_sequence
from .types import (CYCLIC_RELABEL, DDSequence, PulseAxis, SignHistory, normalized, parity_pulse,
                    parse_axes, sign_history)

__all__ = [name for name in dir() if not name.startswith("_")]
