"""Underlying game systems: describe, play, unroll and compare games."""
from .analysis import check_complete, check_overcomplete
from .corpus import corpus_text, load_corpus
from .equivalence import (Correspondence, EquivalenceVerdict, agency_equivalent,
                          count_structural_correspondences, equivalent_up_to_relabeling,
                          match_decision_matrices, matching_probabilities,
                          similarly_distinct_outcomes, structural_correspondences,
                          trees_matching_matrices, verify_witness)
from .errors import (DescriptionError, GameSystemError, IllegalDecisionError,
                     PreconditionError, ResourceLimitError, SearchCapExceeded)
from .ludemes import lookup, n_in_a_row, register_ludeme, rps_select, triple_sums_to_zero
from .model import (GameSystem, apply_action, eval_slice, is_terminal, legal_set,
                    resolve_consequence)
from .parser import parse_system, try_parse
from .play import Trajectory, play, random_playouts, validate_trajectory
from .reductions import (ReducedTree, reduce_bookkeeping, reduce_fixpoint, reduce_matrix,
                         reduce_single_player, reduce_symmetry)
from .serializer import format_system
from .trees import (DecisionMatrix, GameAutomaton, GameTree, build_automaton, build_tree,
                    decision_matrix, export_dot, export_json, strip)

serialize_system = format_system

__all__ = [name for name in dir() if not name.startswith("_")]
