"""adversim: deterministic adversarial multi-vehicle scenario simulator.

Adversarial vehicles plan online, first trying to certify capture of the
subject within a short horizon (minimax over the linearized planning
model), otherwise tracking a forecast of the subject, and follow the plan
with a bicycle-model MPC. Subject policies range from IDM lane-changing
drivers to live human input over a websocket bridge.
"""

from .anchor import (AnchorControl, AnchorMpc, AnchorState, BicycleParams,
                     anchor_step, linearize_reference, mpc_track)
from .core import (Polytope, RunLog, Snapshot, TerminationKind,
                   TerminationReason, VehicleDims, VehicleState,
                   capture_check, min_pov_distance, rect_collision,
                   rect_min_distance, runlog_to_csv, runlog_to_jsonl)
from .engine import (ConfigError, EngineConfig, ModeRecord, PlanResult,
                     PovAssignment, ScenarioEngine, VehicleSpec,
                     assign_pov_constraints, run_scenario)
from .policies import (ExternalCommandPolicy, IdmLanePolicy, IdmParams,
                       LaneChangeParams, PolicyState, aggressive_idm,
                       idm_accel, lane_change_decision, lateral_pd)
from .predictive import SvPrediction, TrackingWeights, plan_tracking, predict_sv
from .qp import QpFailureError, QpProblem, QpSolution, QpStatus, kkt_residual, solve
from .template import (AdmissibleSpace, TemplateControl, TemplateMatrices,
                       build_matrices, default_action_polytope,
                       lane_state_polytope, rollout, step)
from .worstcase import (CaptureResult, MinimaxResult, best_response_minimax,
                        find_min_capture_time, plan_worst_case)

__version__ = "0.1.0"
