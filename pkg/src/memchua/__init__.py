"""Design and simulation toolkit for a memristor-based Chua oscillator."""

from .analysis import (AnalysisConfig, Extremum, Label, LyapunovResult, Side,
                       SweepPoint, TrajectoryClass, classify, cluster_count,
                       largest_lyapunov, local_extrema, perturb, sweep,
                       write_bifurcation_csv)
from .circuit import (CircuitParams, EquilibriumPoint, StabilityVerdict,
                      StateVector, classify_stability, cubic_roots,
                      eigenvalues_at, existence_condition, find_equilibria,
                      jacobian, jacobian_trace, nonlinear_current,
                      nonlinear_slope, vector_field)
from .design import (DesignCheck, DesignReport, DesignSpec, design_circuit,
                     design_g, design_gn, design_reactive)
from .device import (REFERENCE_COEFFICIENTS, DevicePoly, DeviceState,
                     FitResult, IVSample, StateTable, eval_current,
                     eval_differential_conductance, fit_poly, load_iv_csv,
                     load_state_table, reference_state, reference_table,
                     resistance_at_low_bias, save_iv_csv, save_state_table,
                     small_signal_conductance, state_at)
from .errors import (DesignError, FitError, InputFormatError,
                     IntegrationError, LyapunovError, MemChuaError)
from .integrate import (Event, IntegrationConfig, Trajectory, integrate,
                        integrate_adaptive, step_rk4, write_events_csv,
                        write_trajectory_csv)
from .kernels import USE_NUMBA

__version__ = "0.1.0"
