"""Convergent tree expansion of the ground-state energy of a particle
coupled to a massless boson field, with rigorous truncation bounds and an
independent path-integral Monte Carlo cross-check."""

__version__ = "0.1.0"

from .bounds import (TailBound, gamma_tail_oscillator, gamma_tail_translation,
                     lambda0_ho, lambda0_translation,
                     lambda0_translation_theorem)
from .expansion import (CoefficientEstimate, McConfig, SeriesResult,
                        c2_closed_form, effective_mass, energy_coefficient,
                        first_order_closed_form, ground_state_energy,
                        linear_term_check, mass_coefficient,
                        sample_configuration, tree_coefficient_window,
                        zt_graph_coefficient)
from .kernel import (KernelKind, MomentumConfig, TimeConfig, a_matrix,
                     exponent, overlap_a, tree_integrand)
from .model import (CapitalLambda, ModelParams, RadialCutoff, capital_lambda,
                    moment, sphere_area)
from .pathmc import (PathConfig, PathEnsemble, energy_from_paths,
                     sample_paths, w_potential, z_estimate)
from .trees import (Forest, Tree, count_trees_with_degrees, degrees,
                    enumerate_forests, enumerate_trees, path_edges,
                    sample_tree_uniform)
from .bkar import (InterpolationWeights, bkar_check, interpolation_matrix,
                   partition_decomposition)

__all__ = [name for name in dir() if not name.startswith("_")]
