"""Multi-view CCA subspace identification toolkit."""

from .cca import (PairwiseCCA, PairwiseCCAResult, ViewDataset, empirical_moments,
                  empirical_normalized_crosscov, gcca_objective, pairwise_subspaces)
from .hermite import (dominance_check, leading_modes_are_linear, mehler_cross_moment,
                      mode_spectrum, orthonormality_check, psi)
from .intersection import (IntersectionFilter, averaged_projector, multiview_recover,
                           population_truth, select_rank, top_eigenspace)
from .linalg import (SubspaceBasis, principal_angles, projector, sin_theta_norm,
                     svd_ordered, sym_inv_sqrt)
from .nonlinear import (InvertibleMapSpec, OracleEncoder, apply_generator,
                        invariance_check, oracle_encode)
from .priors import PriorSpec, SeededStream, sample_sources, sample_standardized
from .spectra import (MixingEnsemble, TargetSpectra, build_mixing, ensemble_from_targets,
                      planted_overlap_ensemble, population_normalized_crosscov,
                      solve_per_view_gains)

__version__ = "0.1.0"
