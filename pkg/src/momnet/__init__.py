"""Method-of-moments learning of two-layer ReLU networks.

Given samples (x, y) with y = A sigma(W x) + xi and a sign-symmetric
input distribution, the library recovers (A, W) up to the inherent
permutation and scaling freedom through a spectral pipeline: a
pure-neuron detector linearized into a matrix T, the null space of T,
simultaneous diagonalization of random probes of that span, and k
closed-form single-layer recoveries.
"""

from .detector import (DetectorMatrix, build_T, build_T_polarized,
                       exact_T_gaussian, f_value, purity_residual_order2)
from .distmat import (DistinguishingMatrix, closed_form_M_gaussian,
                      closed_form_m, estimate_N, leave_one_out_distance,
                      pairwise_angles, sigma_min, smoothed_sigma_scan)
from .errors import (AmbiguousSignWarning, ComplexEigenpairs,
                     ConfigurationError, ConvergenceFailure, DataError,
                     DegenerateSpan, DivergenceError, NumericalError,
                     RankDeficiency, ShapeError, SingularCovariance)
from .evalharness import (ExperimentConfig, MetricsRow, align_and_score,
                          default_mixture, mse, run_experiment, run_trial,
                          summarize)
from .learner import (LearnOptions, RecoveryResult, learn_single_layer,
                      learn_two_layer, learn_two_layer_from_moments,
                      mse_loss_and_grad, predict, reduce_nonsquare,
                      refine_W_gd)
from .model import (DistributionSpec, NetworkParams, QLambdaMixture,
                    SampleSet, ShapedGaussian, StandardGaussian,
                    SymmetricMixture, SymmetrizedEmpirical,
                    condition_controlled_matrix, distribution_from_json,
                    forward, generate_samples, perturb_weights,
                    random_orthonormal, rng_from, sample_inputs,
                    symmetrize_dataset)
from .moments import MomentSet, analytic_gaussian_moments, estimate_moments
from .spectral import (SubspaceBasis, ZRecovery, fix_signs, nullspace_basis,
                       robust_recover_z, simultaneous_diagonalize)
from .symvec import SymVecConvention

__version__ = "0.1.0"
