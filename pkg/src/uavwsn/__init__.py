"""Energy-minimizing UAV data-collection tours over clustered sensor networks.

The package splits into a closed-form energy model (energy), instance
generation and files (instances), optimal cluster-head selection for a fixed
visiting order plus exhaustive search (routing), a small autodiff engine
(autodiff) under a pointer-network policy and critic (network), training and
inference strategies (training), classical baselines (baselines), and a CLI
(cli).
"""

from .energy import (
    EnergyBreakdown,
    EnergyParams,
    average_path_loss_db,
    ch_rx_energy_j,
    ch_uplink_energy_j,
    cluster_ground_energy_j,
    crossover_distance_m,
    data_rate_bps,
    dbm_to_watts,
    evaluate_solution,
    flight_energy_j,
    hover_energy_j,
    hover_power_w,
    los_probability,
    member_tx_energy_j,
    move_power_w,
    tour_length_m,
)
from .instances import Instance, InstanceFormatError, Tour, generate, load, save
from .solution import Solution, solution_from_choice
from .routing import (
    LayeredGraph,
    SizeLimitError,
    TourCostModel,
    astar_select_chs,
    brute_force_solve,
    build_layered_graph,
    dp_select_chs,
    edge_cost,
    heuristic,
)
from .network import (
    MASK_SCORE,
    CheckpointFormatError,
    CriticParams,
    ParamTensors,
    PolicyParams,
    RolloutResult,
    attention_scores,
    critic_value,
    decode_rollout,
    embed_instance,
    encode,
    init_params,
    load_checkpoint,
    pointer_softmax,
    rollout,
    save_checkpoint,
)
from .training import (
    ActiveSearchConfig,
    TrainConfig,
    TrainResult,
    TrainingDivergedError,
    infer_active,
    infer_greedy,
    infer_sampling,
    train,
)
from .baselines import (
    GaConfig,
    solve_genetic,
    solve_nearest_neighbor,
    solve_random,
)

__version__ = "0.1.0"
