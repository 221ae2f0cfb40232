"""Regularity diagnostics for sampled Navier-Stokes velocity/pressure fields.

Weak-Lorentz norms, Morrey-type suprema, the scale-invariant cylinder
quantities, local energy residuals, and the ε-regularity and
concentration-rate detectors built on them.
"""

from .detector import (DEFAULT_C_CAL, DEFAULT_DELTA, DEFAULT_DELTA_STAR, DEFAULT_EPS_STAR,
                       DetectionVerdict, IterationState, c_decay_rhs, calibrate_c_cal,
                       concentration_p3, concentration_rate, epsilon_regularity,
                       iterate_decay, mean_oscillation_pair, wolf_criterion)
from .energy import (TestFunction, caloric_defect_fd, energy_residual, energy_scale,
                     energy_terms, heat_test_function, pressure_decay_bound,
                     solve_pressure_periodic, with_spectral_pressure)
from .field import (BallSpec, CylinderSpec, DomainError, Grid, ParameterError, SampledField,
                    ball_values, gradient, integrate_ball, local_mean, velocity_gradient)
from .invariants import InvariantReport, invariants, rescale
from .lorentz import (DistributionCurve, TimeSeries, ball_distribution, distribution,
                      lorentz_rs_norm, tail_split_bound, weak_norm)
from .morrey import C_EMB, EmbeddingResult, MorreyProfile, embedding_check, morrey_sup
from .nssf import NSSFError
from .nssf import read as read_nssf
from .nssf import write as write_nssf
from .synth import GeneratorSpec, generate

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
