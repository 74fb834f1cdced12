"""Forward-link simulator for two coexisting multibeam satellites."""

__version__ = "0.1.0"

from .channel import (BeamGrid, BeamPattern, ChannelMatrix, LinkBudget,
                      UserTerminal, beam_gain, bessel_j, build_channel,
                      coverage_disc, drop_users, hex_beam_centers,
                      make_grids, off_axis_angle)
from .evaluation import (ScenarioResult, coordinated_sum_rate,
                         freq_split_sum_rate, full_coop_sum_rate,
                         independent_sum_rate)
from .montecarlo import (ExperimentConfig, ExperimentSummary, TrialResult,
                         mix64, run_experiment, run_trial, sweep_pool_size)
from .power_alloc import (PowerAllocation, SolverFailure, equal_power_alloc,
                          solve_pac)
from .precoding import (AntennaLoadMatrix, PrecodingMatrix,
                        SingularChannelError, antenna_load,
                        effective_channel_gains, zf_precoder)
from .scheduling import (AllocationState, SchedulingError,
                         SchedulingMetrics, induced_interference,
                         project_channel, random_alloc,
                         received_interference, run_siua, siua, sus)
