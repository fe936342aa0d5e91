"""Reservoir pressure / seismicity-rate simulation and tracking control.

Subpackages by role:
  domain_mesh  grid, output regions, well indicator fields
  diffusion    implicit finite-volume pressure solver
  seismicity   pointwise logistic rate dynamics in log coordinates
  controller   super-twisting output tracking and demand allocation
  benchmark    low-dimensional closed-loop verification plant
  scenario     configuration loading and the closed-loop run
  analysis     property verification and CSV/JSON export
  fixtures     synthetic desk-scale configurations
"""

from .domain_mesh import (DomainGrid, Region, RegionSet, WellSet, build_grid,
                          check_assumption_a4, make_well_indicator)
from .diffusion import (DiffusionParams, DiffusionSolver, PressureState,
                        h0_norm, initial_pressure_state, mean_over,
                        step_diffusion)
from .seismicity import (SrParams, SrState, cumulative_events,
                         initial_sr_state, sr_field, step_sr)
from .controller import (ControllerState, GstaGains, OutputMap, allocate,
                         build_B0, compute_error, compute_outputs,
                         design_gains, gsta_step, make_controller_state,
                         phi1, phi2, select_nominals)
from .scenario import (ConfigError, ReferenceSpec, RunRecord, ScenarioConfig,
                       SimulationAbort, demand_at, load_scenario,
                       reference_at, run)
from .analysis import (BoundReport, detect_convergence, emit_csv,
                       error_norm_series, verify_eiss, verify_mass_balance,
                       write_report)

__version__ = "0.1.0"
