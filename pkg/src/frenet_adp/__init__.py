"""Online approximate-optimal path following for a kinematic unicycle.

A vehicle tracks a virtual target moving along an analytic path.  The
error dynamics in the target's Serret-Frenet frame are control affine and
autonomous thanks to a bounded reparametrization of the target's progress,
so an infinite-horizon quadratic cost is well defined and its value
function can be approximated online by an actor-critic pair with
concurrent-learning updates.  A trapezoidal direct-collocation solver
provides an offline oracle to judge the learned policy against.
"""

from .adp import (
    ActorWeights,
    CostSpec,
    CriticWeights,
    GridWorkspace,
    LearningGains,
    SampleGrid,
    actor_rate,
    basis,
    basis_jacobian,
    bellman_error,
    critic_rate,
    estimate_lf,
    gain_condition_check,
    hamiltonian_hat,
    local_cost,
    policy_hat,
    rank_check,
    value_hat,
)
from .baseline import CollocationProblem, CollocationResult, compare_trajectories, solve_collocation
from .config import RunConfig, dump_config, load_config
from .dynamics import (
    ControlInput,
    ErrorState,
    GainSet,
    drift_f,
    drift_jacobian,
    input_g,
    phi_rate,
    sp_from_phi,
    steady_state_control,
    total_control,
    virtual_target_rate,
    world_kinematics,
)
from .errors import (
    DegeneratePoint,
    InvalidValue,
    MismatchedScenario,
    NonFiniteRate,
    NotConverged,
    ParseError,
    PathFollowError,
    PhiOutOfRange,
)
from .geometry import (
    FrenetFrame,
    PathSpec,
    WorldPose,
    frenet_error,
    frenet_frame,
    path_curvature,
    path_point,
    path_tangent_angle,
    world_from_frenet,
    wrap_angle,
)
from .sim import (
    ActorCriticConfig,
    SimConfig,
    TrajectoryLog,
    accumulated_cost,
    frenet_world_consistency,
    rk4_step,
    run_simulation,
)

__version__ = "0.1.0"
