"""Actor-critic training of the pointer policy, and the inference strategies.

Training follows the classic policy-gradient recipe: sample a visiting order
per instance, complete it to a full solution with the layered-graph search,
score it with the energy model, and push the log-probability against the
advantage over a learned value baseline.  Inference offers a single greedy
decode, best-of-m sampling, and active search (continue optimizing a private
copy of the weights on the one instance being solved).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor, backward
from .energy import EnergyParams
from .instances import Instance, generate
from .network import CriticParams, ParamTensors, PolicyParams, critic_value, rollout
from .routing import TourCostModel, astar_select_chs
from .solution import Solution, solution_from_choice

_SAMPLE_CHUNK = 512


class TrainingDivergedError(RuntimeError):
    """A loss or gradient went non-finite; message names the offender."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


@dataclass(frozen=True)
class TrainConfig:
    steps: int = 1000
    batch_size: int = 64
    lr_initial: float = 1e-4
    lr_decay_every: int = 5000
    lr_decay_factor: float = 0.96
    k_train: int = 8                # clusters per training instance
    n_train: int = 5                # nodes per cluster
    area_m: float = 2000.0
    std_m: float = 30.0
    energy_scale: float = 1000.0    # energies divided by this inside the loss
    seed: int = 0

    def __post_init__(self):
        if self.steps < 0:
            raise ValueError(f"steps must be >= 0, got {self.steps}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.lr_initial > 0:
            raise ValueError(f"lr_initial must be > 0, got {self.lr_initial}")
        if self.lr_decay_every < 1:
            raise ValueError(
                f"lr_decay_every must be >= 1, got {self.lr_decay_every}")
        if not 0 < self.lr_decay_factor <= 1:
            raise ValueError(
                f"lr_decay_factor must be in (0, 1], got {self.lr_decay_factor}")
        if self.k_train < 1 or self.n_train < 1:
            raise ValueError("k_train and n_train must be >= 1")
        if not self.energy_scale > 0:
            raise ValueError(f"energy_scale must be > 0, got {self.energy_scale}")


@dataclass(frozen=True)
class ActiveSearchConfig:
    q: int = 128                    # rollouts per refinement step
    steps: int = 10
    zeta: float = 0.9               # weight on the old baseline in the EMA
    baseline_mode: str = "critic"   # "critic" or "sample_mean"
    lr: float = 1e-4
    energy_scale: float = 1000.0

    def __post_init__(self):
        if self.q < 1:
            raise ValueError(f"q must be >= 1, got {self.q}")
        if self.steps < 0:
            raise ValueError(f"steps must be >= 0, got {self.steps}")
        if not 0.0 <= self.zeta <= 1.0:
            raise ValueError(f"zeta must lie in [0, 1], got {self.zeta}")
        if self.baseline_mode not in ("critic", "sample_mean"):
            raise ValueError(
                f"baseline_mode must be 'critic' or 'sample_mean', "
                f"got {self.baseline_mode!r}")
        if not self.lr > 0:
            raise ValueError(f"lr must be > 0, got {self.lr}")
        if not self.energy_scale > 0:
            raise ValueError(f"energy_scale must be > 0, got {self.energy_scale}")


@dataclass(frozen=True)
class TraceRow:
    step: int
    mean_energy_j: float
    critic_loss: float
    lr: float


@dataclass
class TrainResult:
    policy: PolicyParams
    critic: CriticParams
    trace: list[TraceRow]


class AdamState:
    """Adam moments for one named parameter set; updates apply in place."""

    def __init__(self, arrays: dict[str, np.ndarray],
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.m = {k: np.zeros_like(a) for k, a in arrays.items()}
        self.v = {k: np.zeros_like(a) for k, a in arrays.items()}
        self.t = 0
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps

    def apply(self, arrays: dict[str, np.ndarray],
              grads: dict[str, np.ndarray], lr: float) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1 ** self.t
        b2c = 1.0 - self.beta2 ** self.t
        for name, a in arrays.items():
            g = grads[name]
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            a -= lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)


def lr_at(config: TrainConfig, step: int) -> float:
    """Stepwise-exponential schedule: decay by the factor every decay_every steps."""
    return config.lr_initial * config.lr_decay_factor ** (step // config.lr_decay_every)


def _check_finite(grads: dict[str, np.ndarray], who: str, step: int) -> None:
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise TrainingDivergedError(
                f"non-finite gradient in {who} parameter '{name}' at step {step}",
                step=step)


def train(params: EnergyParams, config: TrainConfig, policy: PolicyParams,
          critic: CriticParams, instances: list[Instance] | None = None,
          start_step: int = 0, on_step=None) -> TrainResult:
    """Optimize policy and critic in place; returns them plus a per-step trace.

    Each step draws a batch of instances (fresh ones by default, or sampled
    from the given pool), samples one visiting order per instance, completes
    each to a full solution via the layered-graph search, and applies one
    Adam update to actor and critic.  Energies are divided by
    config.energy_scale inside the losses.  start_step offsets the global
    step counter so a resumed run continues the schedule and the trace where
    it left off.  on_step(step, policy, critic, trace_row) runs after every
    update.
    """
    rng = np.random.default_rng(config.seed)
    adam_actor = AdamState(policy.named_arrays())
    adam_critic = AdamState(critic.named_arrays())
    cost_models: dict[int, TourCostModel] = {}
    trace: list[TraceRow] = []
    for local in range(config.steps):
        step = start_step + local
        lr = lr_at(config, step)
        if instances is None:
            seeds = rng.integers(0, 2 ** 62, size=config.batch_size)
            batch = [generate(config.k_train, config.n_train, config.area_m,
                              config.std_m, seed=int(s)) for s in seeds]
        else:
            picks = rng.integers(0, len(instances), size=config.batch_size)
            batch = [instances[int(i)] for i in picks]
        items = np.stack([inst.normalized_items() for inst in batch])

        actor_t = ParamTensors(policy)
        critic_t = ParamTensors(critic)
        result = rollout(actor_t, items, mode="sample", rng=rng)
        energies = np.empty(config.batch_size)
        for i, inst in enumerate(batch):
            if instances is None:
                cm = TourCostModel(params, inst)
            else:
                cm = cost_models.get(id(inst))
                if cm is None:
                    cm = cost_models[id(inst)] = TourCostModel(params, inst)
            sol = astar_select_chs(params, inst, result.tour(i), cost_model=cm)
            energies[i] = sol.energy_j
        scaled = energies / config.energy_scale

        values = critic_value(critic_t, items)
        advantage = scaled - values.data
        actor_loss = (result.log_prob * Tensor(advantage)).mean()
        residual = values - Tensor(scaled)
        critic_loss = (residual * residual).mean()
        loss = actor_loss + critic_loss
        if not np.isfinite(loss.data):
            raise TrainingDivergedError(
                f"non-finite loss at step {step}", step=step)
        backward(loss)
        actor_grads = actor_t.grads()
        critic_grads = critic_t.grads()
        _check_finite(actor_grads, "actor", step)
        _check_finite(critic_grads, "critic", step)
        adam_actor.apply(policy.named_arrays(), actor_grads, lr)
        adam_critic.apply(critic.named_arrays(), critic_grads, lr)

        row = TraceRow(step=step, mean_energy_j=float(energies.mean()),
                       critic_loss=float(critic_loss.data), lr=lr)
        trace.append(row)
        if on_step is not None:
            on_step(step, policy, critic, row)
    return TrainResult(policy=policy, critic=critic, trace=trace)


def _relabel(sol: Solution, name: str) -> Solution:
    return dataclasses.replace(sol, solver=name)


def infer_greedy(policy: PolicyParams, params: EnergyParams,
                 instance: Instance) -> Solution:
    """One deterministic greedy decode, completed by the layered-graph search."""
    result = rollout(policy, instance.normalized_items(), mode="greedy")
    return _relabel(astar_select_chs(params, instance, result.tour(0)), "greedy")


def infer_sampling(policy: PolicyParams, params: EnergyParams,
                   instance: Instance, m: int, rng=None) -> Solution:
    """Best of m sampled visiting orders.

    Orders are drawn in chunks; repeated orders hit a completion cache, so
    only distinct orders pay for a search.  Ties keep the earliest sample.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if rng is None:
        rng = np.random.default_rng(0)
    cm = TourCostModel(params, instance)
    items = instance.normalized_items()
    cache: dict[tuple, tuple[float, tuple[int, ...]]] = {}
    best_energy = math.inf
    best: tuple | None = None
    done = 0
    while done < m:
        b = min(_SAMPLE_CHUNK, m - done)
        batch_items = np.broadcast_to(items, (b,) + items.shape)
        result = rollout(policy, batch_items, mode="sample", rng=rng)
        for row in range(b):
            key = tuple(int(x) for x in result.picks[row])
            hit = cache.get(key)
            if hit is None:
                sol = astar_select_chs(params, instance, result.tour(row),
                                       cost_model=cm)
                hit = cache[key] = (sol.energy_j, sol.ch_choices)
            if hit[0] < best_energy:
                best_energy = hit[0]
                best = (key, hit[1])
        done += b
    tour, chs = best
    return solution_from_choice(params, instance, tour, chs, solver="sampling")


def infer_active(policy: PolicyParams, params: EnergyParams, instance: Instance,
                 config: ActiveSearchConfig, critic: CriticParams | None = None,
                 rng=None, return_trace: bool = False):
    """Active search: keep optimizing a private copy of the weights on one instance.

    Starts from a single sampled rollout as the incumbent, then repeats:
    sample q orders, complete and score them, keep the best ever seen, and
    take one policy-gradient step against an exponential-moving-average
    baseline (critic prediction or the step's sample mean, per
    config.baseline_mode).  The incumbent never gets worse.  The caller's
    policy object is untouched.  A non-finite update aborts the refinement
    and returns the incumbent found so far.

    With return_trace=True also returns the incumbent energy after the
    initial rollout and after each step.
    """
    if config.baseline_mode == "critic" and critic is None:
        raise ValueError("baseline_mode 'critic' needs a critic")
    if rng is None:
        rng = np.random.default_rng(0)
    work = policy.copy()
    adam = AdamState(work.named_arrays())
    cm = TourCostModel(params, instance)
    items = instance.normalized_items()
    cache: dict[tuple, tuple[float, tuple[int, ...]]] = {}

    def complete(picks_row) -> tuple[float, tuple, tuple[int, ...]]:
        key = tuple(int(x) for x in picks_row)
        hit = cache.get(key)
        if hit is None:
            sol = astar_select_chs(params, instance, key, cost_model=cm)
            hit = cache[key] = (sol.energy_j, sol.ch_choices)
        return hit[0], key, hit[1]

    first = rollout(work, items, mode="sample", rng=rng)
    best_energy, best_tour, best_chs = complete(first.picks[0])
    trace = [best_energy]

    if config.baseline_mode == "critic":
        baseline = float(critic_value(critic, items).data)
    else:
        baseline = best_energy / config.energy_scale

    for step in range(config.steps):
        work_t = ParamTensors(work)
        batch_items = np.broadcast_to(items, (config.q,) + items.shape)
        result = rollout(work_t, batch_items, mode="sample", rng=rng)
        energies = np.empty(config.q)
        for row in range(config.q):
            e, key, chs = complete(result.picks[row])
            energies[row] = e
            if e < best_energy:
                best_energy, best_tour, best_chs = e, key, chs
        trace.append(best_energy)
        scaled = energies / config.energy_scale
        loss = (result.log_prob * Tensor(scaled - baseline)).mean()
        if not np.isfinite(loss.data):
            break
        backward(loss)
        grads = work_t.grads()
        if not all(np.all(np.isfinite(g)) for g in grads.values()):
            break
        adam.apply(work.named_arrays(), grads, config.lr)
        if config.baseline_mode == "critic":
            target = float(critic_value(critic, items).data)
        else:
            target = float(scaled.mean())
        baseline = config.zeta * baseline + (1.0 - config.zeta) * target

    solution = solution_from_choice(params, instance, best_tour, best_chs,
                                    solver="active")
    return (solution, trace) if return_trace else solution
