"""Exact congruence quotients, central characters and finite-dimensional
separation experiments for amalgams and HNN extensions over central subgroups."""

from .amalgam import (Amalgam, AmalgamWord, Budget, HNNWord, SeparationReport, abels_experiment,
                      britton_reduce, embed_hnn_word, evaluate_amalgam, evaluate_hnn,
                      hnn_to_amalgam_transfer, reduce_amalgam, separate_amalgam, separate_hnn)
from .characters import (Character, QuotientCharacter, build_compatible_characters,
                         extend_by_zero, k0_for, nearest_root, psd_check)
from .exact import ExactMatrix, ModInt, PLocal, Ring, mat_inv, mat_mul, reduce_mod
from .groups import GroupSpec, GroupWord, abels, evaluate_word, heisenberg, load_group
from .quotients import (FiniteQuotient, central_image, enumerate_quotient, filtration_witness,
                        profinite_probe)
from .repkit import (FinDimRep, Monomial, StateVector, align_dims, character_approx_sequence,
                     gns_from_state, induce, kernel_consistency_check, normalized_trace)

__version__ = "0.1.0"
