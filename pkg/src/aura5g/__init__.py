"""Desk-scale 5G HetNet simulator: joint user association and bandwidth
allocation as an exact MILP, with stochastic topologies, mmWave channel
modeling, a max-SNR baseline and a Monte Carlo analytics harness."""

from .scenario import (Constraint, DcMode, Deployment, Regime, ScenarioSpec,
                       Services, RedimensioningKnobs, UnknownCode, InvalidKnob,
                       all_scenario_codes, apply_redimensioning,
                       format_scenario_code, mix_seed, parse_scenario_code,
                       scenario_label, spec_from_config, spec_to_config)
from .topology import (AreaTooSmall, ResampleLimit, Topology, build_backhaul,
                       build_topology, generate_macro_grid, generate_small_cells,
                       generate_users)
from .radio import (ChannelParams, ChannelState, CellKind, DomainError,
                    RadioEnvironment, build_radio_environment,
                    compute_sinr_beam, compute_sinr_omni, draw_channel_state,
                    fspl_db, los_probability, pathloss_db, rate_table,
                    shannon_capacity_bps, wireless_backhaul_capacity)
from .model import (AssociationProblem, AssociationSolution, InconsistentInput,
                    baseline_association, build_milp, mmtc_backhaul_load,
                    resolve_capacities, solution_from_assignment)
from .lp import (Basis, LinearProgram, LpResult, LpStatus, NumericalFailure,
                 solve_lp)
from .solver import (AuditReport, SolveOutcome, SolveStatus, audit_solution,
                     branch_and_bound, solve_relaxation)
from .interchange import (AdapterUnavailable, ParseError, external_adapter,
                          parse_result, variable_names, write_mps)
from .metrics import (MetricsBundle, backhaul_utilization, campaign_aggregates,
                      compute_metrics, convergence_cdf, jain_index,
                      latency_compliance, throughput_matches_objective)
from .campaign import (CampaignReport, TrialRecord, build_trial_inputs,
                       measured_mean_sc_backhaul_bps, run_campaign, run_trial,
                       write_artifacts)

__version__ = "0.1.0"
