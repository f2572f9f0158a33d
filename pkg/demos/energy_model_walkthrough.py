"""Walk through the energy model piece by piece on the default parameters.

Prints every intermediate quantity: the air-ground link budget, the hover
and movement power of the collector, the radio energy of the ground nodes,
and finally a full weighted evaluation of one small scenario.
"""

import numpy as np

from uavwsn import (
    EnergyParams,
    Tour,
    average_path_loss_db,
    cluster_ground_energy_j,
    crossover_distance_m,
    data_rate_bps,
    dbm_to_watts,
    evaluate_solution,
    flight_energy_j,
    generate,
    hover_energy_j,
    hover_power_w,
    los_probability,
    member_tx_energy_j,
    move_power_w,
)


def main():
    params = EnergyParams()

    print("=== air-ground link (collector hovering above the CH) ===")
    print(f"LoS probability          {los_probability(params):.4f}")
    print(f"average path loss        {average_path_loss_db(params):.2f} dB")
    rate = data_rate_bps(params)
    print(f"uplink data rate         {rate / 1e6:.3f} Mbit/s")
    print(f"CH transmit power        {dbm_to_watts(params.p_ch_dbm) * 1e3:.1f} mW")

    print()
    print("=== collector propulsion ===")
    print(f"hover power              {hover_power_w(params):.3f} W")
    print(f"move power at cruise     {move_power_w(params):.3f} W")
    bits = 19 * params.msg_bits   # a 20-node cluster: 19 members report to the CH
    print(f"hover energy, 19 reports {hover_energy_j(params, bits):.4f} J")
    print(f"flight energy, 1 km      {flight_energy_j(params, 1000.0):.2f} J")

    print()
    print("=== ground radio ===")
    d0 = crossover_distance_m(params)
    print(f"amplifier crossover      {d0:.2f} m")
    for d in (50.0, d0, 150.0):
        regime = "free-space" if d <= d0 else "multipath"
        print(f"member tx over {d:7.2f} m {member_tx_energy_j(params, d) * 1e6:9.3f} uJ  ({regime})")

    print()
    print("=== one full scenario ===")
    inst = generate(k=3, n=5, seed=7)
    tour = Tour((0, 1, 2, 3))
    chs = tuple(int(np.argmin([cluster_ground_energy_j(params, c, j)
                               for j in range(c.shape[0])]))
                for c in inst.clusters)
    bd = evaluate_solution(params, inst, tour, chs)
    print(f"visiting order {tour.order}, cluster heads {chs}")
    print(f"tour length   {bd.tour_length_m:10.1f} m")
    print(f"ground energy {bd.ground_j:10.4f} J")
    print(f"hover energy  {bd.hover_j:10.4f} J")
    print(f"flight energy {bd.flight_j:10.2f} J")
    print(f"weighted total (omega={params.omega}) {bd.total_j:.2f} J")

    heavy_ground = evaluate_solution(params.replace(omega=1.0), inst, tour, chs)
    flight_only = evaluate_solution(params.replace(omega=0.0), inst, tour, chs)
    print(f"omega=1 (ground only)  {heavy_ground.total_j:.4f} J")
    print(f"omega=0 (collector)    {flight_only.total_j:.2f} J")


if __name__ == "__main__":
    main()
