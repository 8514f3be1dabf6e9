"""Characterizing sets of characters for subgroups of finite-dimensional tori."""

from .charset import CharSet, from_sequence
from .characterizer import (Budget, CertificateError, Characterization, CoveringCertificate,
                            CoveringFailure, Tower, build_tower, characterize, covering,
                            lift_charset, verify_certificate)
from .classic import (cf_profile, cyclic_cf_charset, factorial_charset, factorial_expand,
                      prufer_charset, witness_pair, witness_pairs)
from .fsigma import (ChainError, ChainSpec, check_condition_c, generator_chain, partition_B,
                     pattern_chain, refutation_witness, verify_refutation)
from .lattice import ClosedSubgroup, annihilator, closure, hnf_rows, snf, subgroup_from_perp
from .quasiconvex import char_window, quasi_hull
from .torus import (SUP, WEIGHTED, Interval, PrecisionExhausted, Quadratic, eval_char, metric_d,
                    norm, parse_circle, parse_point)
from .verifier import (chain_witness_sequence, measure_profile, monte_carlo_measure,
                       separation_witness, sublevel_measure, tail_profile)

__version__ = "0.1.0"
