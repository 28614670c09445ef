"""Reflecting random walks in curvilinear wedges.

A simulation and numerical-verification laboratory: exact computation of the
critical curve exponent and passage-time tail exponent, Lyapunov drift
predictions with Monte Carlo verification, and deterministic parallel
ensembles reproducing the recurrence/transience phase diagram.
"""

from .geometry import Point, Region, Side, WedgeGeometry
from .spectral import (CovarianceSpec, DerivedAngles, Thresholds, bc_extrema,
                       beta_c, derived_angles, phi_stationary, s0,
                       transform_matrix)
from .lyapunov import (DriftPrediction, FunctionKind, LyapunovParams,
                       evaluate, evaluate_many, grad_h_w, h_w,
                       largest_admissible_w, make_params, predicted_drift,
                       probe_state, sign_table)
from .kernel import (IncrementModel, MomentAudit, RandomStream,
                     ReflectionSpec, continuous_model, lattice_model,
                     moment_audit)
from .simulate import (PassageRecord, SimConfig, empirical_drift,
                       records_from_csv, records_to_csv, run_ensemble,
                       run_one)
from .analysis import (SurvivalCurve, SweepRow, SweepSettings, TailEstimate,
                       Verdict, VerdictLabel, classify, drift_report,
                       phase_sweep, survival, tail_exponent)

__version__ = "0.1.0"
