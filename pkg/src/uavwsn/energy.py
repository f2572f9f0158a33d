"""Closed-form energy model for a rotary-wing UAV collecting data from clustered sensors.

Two sides of the ledger:

* ground energy: cluster members radio their payload to a cluster head (CH)
  over a distance-dependent amplifier (free-space square law close in,
  multipath fourth power beyond the crossover), the CH pays reception per
  bit, then transmits everything up to the hovering UAV;
* UAV energy: hovering above each CH for the upload duration plus propulsion
  while flying the closed tour.

All public functions are pure.  SI units throughout (J, m, s, W, Hz, bits);
dB and dBm show up only inside the link-budget arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numpy as np

from .instances import Instance, Tour

_POSITIVE_FIELDS = (
    "bandwidth_hz", "carrier_hz", "altitude_m", "mu_los_db", "mu_nlos_db",
    "beta_env", "eta_env", "v_max_ms", "mass_kg", "rotor_radius_m",
    "n_rotors", "p_max_w", "p_com_w", "eps_fs", "eps_mp", "e_elec",
    "gravity_ms2", "air_density", "light_speed_ms",
)


@dataclass(frozen=True)
class EnergyParams:
    """Physical constants of the scenario.  Defaults model a 2 GHz link at 50 m
    altitude over a suburban field, a 0.5 kg quadrotor, and 4000-bit readings.
    """

    n_per_cluster: int = 20          # nodes per cluster assumed by the uplink budget
    msg_bits: float = 4000.0         # payload each member node reports, bits
    bandwidth_hz: float = 1e6
    noise_dbm_per_hz: float = -174.0
    carrier_hz: float = 2e9
    path_loss_exp: float = 3.0       # >= 2
    altitude_m: float = 50.0
    mu_los_db: float = 1.0           # excess loss when line-of-sight
    mu_nlos_db: float = 20.0         # excess loss when blocked
    beta_env: float = 0.03           # how fast LoS probability rises with elevation
    eta_env: float = 10.0            # environment constant of the LoS model
    v_uav_ms: float = 15.0           # cruise speed; 0 means the UAV never moves
    v_max_ms: float = 15.0
    mass_kg: float = 0.5
    rotor_radius_m: float = 0.2
    n_rotors: int = 4
    p_max_w: float = 5.0             # propulsion power at v_max
    p_idle_w: float = 0.0            # propulsion power at v = 0
    p_com_w: float = 0.0126          # radio power while hovering to receive
    p_ch_dbm: float = 21.0           # CH uplink transmit power
    eps_fs: float = 10e-12           # free-space amplifier, J/bit/m^2
    eps_mp: float = 0.0013e-12       # multipath amplifier, J/bit/m^4
    e_elec: float = 50e-9            # electronics cost, J/bit
    omega: float = 0.5               # weight on ground energy in the objective, 0..1
    gravity_ms2: float = 9.81
    air_density: float = 1.225       # kg/m^3
    light_speed_ms: float = 3e8

    def __post_init__(self):
        for name in _POSITIVE_FIELDS:
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite, got {value}")
        if self.n_per_cluster < 1:
            raise ValueError(f"n_per_cluster must be >= 1, got {self.n_per_cluster}")
        # zero is allowed for these two so degenerate what-if cases stay expressible
        if not (np.isfinite(self.msg_bits) and self.msg_bits >= 0):
            raise ValueError(f"msg_bits must be >= 0, got {self.msg_bits}")
        if not (np.isfinite(self.v_uav_ms) and self.v_uav_ms >= 0):
            raise ValueError(f"v_uav_ms must be >= 0, got {self.v_uav_ms}")
        if not (np.isfinite(self.p_idle_w) and self.p_idle_w >= 0):
            raise ValueError(f"p_idle_w must be >= 0, got {self.p_idle_w}")
        if self.v_uav_ms > self.v_max_ms:
            raise ValueError(
                f"v_uav_ms ({self.v_uav_ms}) must not exceed v_max_ms ({self.v_max_ms})")
        if self.path_loss_exp < 2:
            raise ValueError(f"path_loss_exp must be >= 2, got {self.path_loss_exp}")
        if not (0.0 <= self.omega <= 1.0):
            raise ValueError(f"omega must lie in [0, 1], got {self.omega}")
        if not np.isfinite(self.noise_dbm_per_hz):
            raise ValueError("noise_dbm_per_hz must be finite")
        if not np.isfinite(self.p_ch_dbm):
            raise ValueError("p_ch_dbm must be finite")

    def replace(self, **changes) -> "EnergyParams":
        """A copy with the given fields overridden (validation reruns)."""
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, doc: dict) -> "EnergyParams":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown energy parameter(s): {sorted(unknown)}")
        return cls(**doc)


@dataclass(frozen=True)
class EnergyBreakdown:
    """Per-component energy totals of one evaluated solution, in joules."""

    total_j: float               # omega-weighted objective value
    ground_j: float              # member tx + CH rx + CH uplink, all clusters
    uav_j: float                 # hover + flight
    hover_j: float
    flight_j: float
    tour_length_m: float


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1000.0


def los_probability(params: EnergyParams) -> float:
    """Chance the air-ground link is line-of-sight.

    The UAV hovers directly above the transmitting CH, so the elevation angle
    is 90 degrees and only the environment constants matter.
    """
    tau_deg = 90.0
    return 1.0 / (1.0 + params.eta_env
                  * math.exp(-params.beta_env * (tau_deg - params.eta_env)))


def average_path_loss_db(params: EnergyParams) -> float:
    """Expected air-ground path loss in dB at hover range (= altitude).

    Free-space-style reference loss grows with carrier frequency, altitude and
    the path-loss exponent; the LoS/NLoS excess losses are averaged with the
    LoS probability.
    """
    p_los = los_probability(params)
    k0 = 10.0 * params.path_loss_exp * math.log10(
        4.0 * math.pi * params.carrier_hz * params.altitude_m / params.light_speed_ms)
    return k0 + p_los * params.mu_los_db + (1.0 - p_los) * params.mu_nlos_db


def data_rate_bps(params: EnergyParams) -> float:
    """Achievable CH-to-UAV rate from the link budget (Shannon capacity)."""
    noise_dbm = params.noise_dbm_per_hz + 10.0 * math.log10(params.bandwidth_hz)
    snr_db = params.p_ch_dbm - average_path_loss_db(params) - noise_dbm
    snr = 10.0 ** (snr_db / 10.0)
    return params.bandwidth_hz * math.log2(1.0 + snr)


def hover_power_w(params: EnergyParams) -> float:
    """Propulsion power needed to hover, from actuator-disk theory."""
    thrust = params.mass_kg * params.gravity_ms2
    disk = 2.0 * math.pi * params.rotor_radius_m ** 2 * params.n_rotors * params.air_density
    return math.sqrt(thrust ** 3 / disk)


def hover_energy_j(params: EnergyParams, data_bits: float) -> float:
    """Energy to hover while receiving data_bits at the link rate.

    Covers propulsion plus the receive radio for the upload duration.
    """
    if data_bits < 0:
        raise ValueError(f"data_bits must be >= 0, got {data_bits}")
    t_hover = data_bits / data_rate_bps(params)
    return t_hover * (hover_power_w(params) + params.p_com_w)


def move_power_w(params: EnergyParams, v_ms: float | None = None) -> float:
    """Propulsion power at cruise speed v, linear between idle and max."""
    v = params.v_uav_ms if v_ms is None else v_ms
    if v < 0 or v > params.v_max_ms:
        raise ValueError(f"speed must lie in [0, {params.v_max_ms}], got {v}")
    return (params.p_max_w - params.p_idle_w) * v / params.v_max_ms + params.p_idle_w


def flight_energy_j(params: EnergyParams, distance_m: float) -> float:
    """Energy to fly distance_m at cruise speed.

    Charged at hover power plus cruise power for the whole flight time: the
    rotors keep carrying the airframe while it translates.
    """
    if distance_m < 0:
        raise ValueError(f"distance_m must be >= 0, got {distance_m}")
    if distance_m == 0:
        return 0.0
    if params.v_uav_ms <= 0:
        raise ValueError("v_uav_ms must be > 0 to cover a nonzero distance")
    t_flight = distance_m / params.v_uav_ms
    return t_flight * (hover_power_w(params) + move_power_w(params))


def crossover_distance_m(params: EnergyParams) -> float:
    """Distance where the member amplifier switches from square to fourth power."""
    return math.sqrt(params.eps_fs / params.eps_mp)


def member_tx_energy_j(params: EnergyParams, distance_m: float) -> float:
    """Energy one member spends sending its payload to a CH distance_m away."""
    if distance_m < 0:
        raise ValueError(f"distance_m must be >= 0, got {distance_m}")
    l = params.msg_bits
    if distance_m <= crossover_distance_m(params):
        return l * params.e_elec + l * (params.eps_fs * distance_m ** 2)
    return l * params.e_elec + l * (params.eps_mp * distance_m ** 4)


def ch_rx_energy_j(params: EnergyParams) -> float:
    """Electronics cost for a CH to receive one member payload."""
    return params.msg_bits * params.e_elec


def ch_uplink_energy_j(params: EnergyParams, n_nodes: int | None = None) -> float:
    """Energy the CH radio burns uploading the cluster's data to the UAV.

    The CH forwards (n_nodes - 1) member payloads; its own reading rides along
    without an extra charge here.  n_nodes defaults to params.n_per_cluster.
    """
    n = params.n_per_cluster if n_nodes is None else n_nodes
    if n < 1:
        raise ValueError(f"n_nodes must be >= 1, got {n}")
    p_ch_w = dbm_to_watts(params.p_ch_dbm)
    data_bits = (n - 1) * params.msg_bits
    return p_ch_w * data_bits / data_rate_bps(params)


def cluster_ground_energy_j(params: EnergyParams, cluster: np.ndarray,
                            ch_index: int) -> float:
    """Total ground-side energy of one cluster for a given CH choice.

    Sum of every member's transmit cost to the CH, the CH's receive cost per
    member, and the CH uplink for the cluster's full payload.
    """
    cluster = np.asarray(cluster, dtype=np.float64)
    n = cluster.shape[0]
    if not 0 <= ch_index < n:
        raise ValueError(f"ch_index {ch_index} out of range for cluster of {n}")
    total = 0.0
    ch = cluster[ch_index]
    for i in range(n):
        if i == ch_index:
            continue
        d = math.hypot(cluster[i, 0] - ch[0], cluster[i, 1] - ch[1])
        total += member_tx_energy_j(params, d) + ch_rx_energy_j(params)
    return total + ch_uplink_energy_j(params, n_nodes=n)


def tour_length_m(instance: Instance, tour: Tour, ch_choices) -> float:
    """Length of the closed path start -> chosen CHs in tour order -> start."""
    points = _tour_points(instance, tour, ch_choices)
    return float(np.sum(np.hypot(np.diff(points[:, 0]), np.diff(points[:, 1]))))


def _tour_points(instance: Instance, tour: Tour, ch_choices) -> np.ndarray:
    """(K+2, 2) waypoint array for the closed tour, validating CH choices."""
    ch_choices = tuple(int(c) for c in ch_choices)
    if len(ch_choices) != instance.k:
        raise ValueError(
            f"need one CH choice per cluster ({instance.k}), got {len(ch_choices)}")
    if tour.k != instance.k:
        raise ValueError(f"tour visits {tour.k} clusters, instance has {instance.k}")
    pts = [instance.start]
    for cluster_id in tour.visited_clusters():
        cluster = instance.clusters[cluster_id]
        ch = ch_choices[cluster_id]
        if not 0 <= ch < cluster.shape[0]:
            raise ValueError(
                f"CH index {ch} out of range for cluster {cluster_id} "
                f"of {cluster.shape[0]} nodes")
        pts.append(cluster[ch])
    pts.append(instance.start)
    return np.asarray(pts)


def evaluate_solution(params: EnergyParams, instance: Instance, tour,
                      ch_choices) -> EnergyBreakdown:
    """Score a complete solution: visiting order plus one CH per cluster.

    Ground energy is a per-cluster sum, so it does not depend on the visiting
    order; hover energy depends only on cluster sizes; flight energy is the
    closed tour length at cruise cost.  The reported total applies the omega
    weighting between the ground and UAV sides.
    """
    if not isinstance(tour, Tour):
        tour = Tour(tuple(tour))
    points = _tour_points(instance, tour, ch_choices)
    length = float(np.sum(np.hypot(np.diff(points[:, 0]), np.diff(points[:, 1]))))

    ground = 0.0
    hover = 0.0
    for cluster_id in range(instance.k):
        cluster = instance.clusters[cluster_id]
        ground += cluster_ground_energy_j(params, cluster, ch_choices[cluster_id])
        hover += hover_energy_j(params, (cluster.shape[0] - 1) * params.msg_bits)
    flight = flight_energy_j(params, length)
    uav = hover + flight
    total = params.omega * ground + (1.0 - params.omega) * uav
    return EnergyBreakdown(total_j=total, ground_j=ground, uav_j=uav,
                           hover_j=hover, flight_j=flight, tour_length_m=length)
