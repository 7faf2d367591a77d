"""Gelfand-Shilov style observability toolkit.

Log-space weight sequences and quasi-analyticity diagnostics, Hermite
expansions and Bernstein checks, thick-set geometry with Lipschitz ball
covers, closed-form constant calculators, and empirical observability of
Hermite-truncated anharmonic semigroups.
"""
__version__ = "0.1.0"

from .errors import (DomainError, GSObsError, NotQuasiAnalyticError, OverlapViolation, PaddingError,
                     QuadratureError, SingularGramianError, TruncationUnreliableError)
from .sequences import (INFINITE, DoubleSequence, QAReport, SequenceModel, WeightModel, bang_degree,
                        check_hypotheses, denjoy_carleman_diagnostic, gamma_Gamma, is_log_convex)
from .hermite import (HermiteExpansion, bernstein_bound, bernstein_check, gauss_hermite_rule,
                      gs_pair_seminorm, hermite_functions, multi_indices)
from .geometry import (BallCover, DensityModel, RegionModel, ThicknessProbe, build_cover,
                       classify_balls, thickness_estimate, verify_overlap)
from .constants import (GSParams, general_up_constant, lebeau_robbiano_schedule, nsv_constants,
                        observability_cost_bound, shubin_indices, specific_up_constant)
from .observability import (build_galerkin, cost_vs_bound_sweep, dissipation_exponent_fit,
                            observability_constant_empirical, restriction_gramian,
                            spectral_constant_empirical)
