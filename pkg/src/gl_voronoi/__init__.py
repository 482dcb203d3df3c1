"""Numerical tools for GL(m) Voronoi summation and twisted coefficient sums."""
from .errors import (AccuracyError, CacheError, CapacityError, ConvergenceError, DivisibilityError,
                     DomainError, IllConditionedError, PoleError, PrePostError, RangeError,
                     TruncationError, VoronoiError)
from .special_functions import bessel_j, e_of, gamma, log_gamma
from .quadrature import (OscillatorySpec, QuadratureResult, integrate_oscillatory, integrate_smooth,
                         integrate_vertical_line, truncation_height)
from .weights import BumpFunction, mellin, mellin_decay_envelope, sharpened_bump, standard_bump
from .voronoi import (ExpansionCoefficients, LanglandsParams, PsiEvaluation, calibrate_ck, kernel_G,
                      psi_asymptotic, psi_contour, psi_contour_many, stirling_leading_G)
from .coefficients import (CoefficientTable, ConstantSource, SymPowerSource, SyntheticSource,
                           build_table, cached_table, hyper_kloosterman, kloosterman,
                           rankin_selberg_stat, sym_power_local, tau_table)
from .resonance import (DUAL_KERNEL_SIGN, ResonancePrediction, ScanResult, SumSpec, alpha_scan,
                        n_alpha, predict_corollary11, predict_theorem12, predict_theorem14,
                        predict_window_sum, regime, resonance_window, sharp_sum, smooth_sum,
                        stationary_integral_Ik)

__version__ = "0.1.0"
