"""fragtail: extinction-time tail asymptotics of self-similar fragmentation
cascades, with an exact Monte Carlo cross-check suite.

The package is organized around one pipeline:

measures    dislocation measures (atomic, binary-density, analytic-only)
laplace     the Laplace exponent phi of the tagged-fragment subordinator
inversion   psi, the inverse of x -> x/phi(x)
asymptotics tail formulas, the expansion engine, closed family shapes
simulate    event-exact cascade Monte Carlo with tagged lineages
stats       survival curves, shape fits, identity tests
acceptance  the end-to-end verification suite (also `fragtail verify`)
"""

from .errors import (ConfigError, DomainError, FragtailError,
                     InsufficientWindow, NumericalFailure, UncoveredRegion,
                     UnsupportedExpansion, UnsupportedSampling)
from .measures import (DislocationSpec, FragmentVector, from_config,
                       integrability_diagnostic, intrinsic_alpha,
                       load_measure, make_atomic, make_beta,
                       make_beta_splitting, make_ford, make_identical,
                       make_stable, make_uniform, sample_split, total_mass)
from .laplace import (BetaGapIntegral, GammaQuotient, PhiEvaluator,
                      beta_gap_integral, gamma_quotient, gammaln_diff)
from .inversion import PsiSolver
from .asymptotics import (AlphaIndex, ExpansionSpec, TailShape,
                          brownian_excursion_max_tail, decay_integral,
                          default_t0, expand_psi_over_x, extinction_log_tail,
                          family_tail_shape, log_tail_grid, phi_expansion,
                          tagged_log_tail, tail_ratio,
                          tail_shape_from_expansion)
from .simulate import (CascadeConfig, CascadeRun, EnsembleResult, TagRecord,
                       TwoTagRecord, mix_seed, reference_cascade,
                       run_cascade, run_ensemble, run_two_tags,
                       sample_zeta_tag, simulate_zeta_tag)
from .stats import (KSResult, MomentEstimate, ShapeFit, SurvivalCurve,
                    ks_two_sample, moment_estimate, paired_mean_diff,
                    shape_fit, survival_curve, synthetic_tail_samples)

__version__ = "0.1.0"
