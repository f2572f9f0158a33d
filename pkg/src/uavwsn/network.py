"""Pointer network that proposes cluster visiting orders, plus a value critic.

The actor embeds the start point and the cluster centroids (normalized to the
unit square), encodes them with an LSTM, then decodes a visiting order one
pick at a time: at each step an attention head scores every item against the
decoder state, already-visited items are pushed to an effective floor, and
the next item comes from the masked softmax (argmax, sampling, or a forced
action for scoring).  Step 0 is always forced to item 0, the start.

The critic shares the architecture up to the encoder, mean-pools the encoder
states and regresses the expected tour energy through a small MLP.

Everything is plain float64 numpy via the local autodiff module, so gradients
are finite-difference checkable and checkpoints are exact JSON.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .instances import Tour

MASK_SCORE = -1e9
CHECKPOINT_VERSION = 1


class CheckpointFormatError(ValueError):
    """Raised when a checkpoint file is missing entries or malformed."""


def _as_param(name, arr, shape):
    arr = np.asarray(arr, dtype=np.float64)
    if arr.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def _policy_shapes(d: int) -> dict[str, tuple]:
    return {
        "embed_w": (2, d),
        "enc_wx": (d, 4 * d), "enc_wh": (d, 4 * d), "enc_b": (4 * d,),
        "dec_wx": (d, 4 * d), "dec_wh": (d, 4 * d), "dec_b": (4 * d,),
        "w1": (d, d), "w2": (d, d), "v_att": (d,), "v_go": (d,),
    }


def _critic_shapes(d: int) -> dict[str, tuple]:
    return {
        "embed_w": (2, d),
        "enc_wx": (d, 4 * d), "enc_wh": (d, 4 * d), "enc_b": (4 * d,),
        "fc1_w": (d, d), "fc1_b": (d,), "fc2_w": (d, 1), "fc2_b": (1,),
    }


@dataclass
class PolicyParams:
    """Actor weights.  Gate order in the fused LSTM blocks is (i, f, g, o)."""

    embed_w: np.ndarray
    enc_wx: np.ndarray
    enc_wh: np.ndarray
    enc_b: np.ndarray
    dec_wx: np.ndarray
    dec_wh: np.ndarray
    dec_b: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    v_att: np.ndarray
    v_go: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.embed_w).shape[1]
        for name, shape in _policy_shapes(d).items():
            setattr(self, name, _as_param(name, getattr(self, name), shape))

    @property
    def hidden_dim(self) -> int:
        return self.embed_w.shape[1]

    def named_arrays(self) -> dict[str, np.ndarray]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def copy(self) -> "PolicyParams":
        return PolicyParams(**{k: v.copy() for k, v in self.named_arrays().items()})


@dataclass
class CriticParams:
    """Value-head weights: shared-style encoder, mean pool, two dense layers."""

    embed_w: np.ndarray
    enc_wx: np.ndarray
    enc_wh: np.ndarray
    enc_b: np.ndarray
    fc1_w: np.ndarray
    fc1_b: np.ndarray
    fc2_w: np.ndarray
    fc2_b: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.embed_w).shape[1]
        for name, shape in _critic_shapes(d).items():
            setattr(self, name, _as_param(name, getattr(self, name), shape))

    @property
    def hidden_dim(self) -> int:
        return self.embed_w.shape[1]

    def named_arrays(self) -> dict[str, np.ndarray]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def copy(self) -> "CriticParams":
        return CriticParams(**{k: v.copy() for k, v in self.named_arrays().items()})


class ParamTensors:
    """Tensor view of a parameter set sharing one tape, so grads accumulate.

    Make one per forward/backward pass and read .grads() afterwards.
    """

    def __init__(self, params):
        self._names = list(params.named_arrays())
        for name, arr in params.named_arrays().items():
            setattr(self, name, Tensor(arr, requires_grad=True))

    def grads(self) -> dict[str, np.ndarray]:
        out = {}
        for name in self._names:
            t = getattr(self, name)
            out[name] = t.grad if t.grad is not None else np.zeros_like(t.data)
        return out


def _tensors(params) -> ParamTensors:
    return params if isinstance(params, ParamTensors) else ParamTensors(params)


def _xavier(rng, fan_in: int, fan_out: int, shape) -> np.ndarray:
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


def init_params(seed: int, hidden_dim: int) -> tuple[PolicyParams, CriticParams]:
    """Fresh actor and critic weights.

    Weight matrices are uniform Xavier (per gate block for the fused LSTM
    weights, which share one bound since every gate maps D to D); the two
    attention vectors are treated as (1, D) matrices; biases start at zero.
    """
    if hidden_dim < 1:
        raise ValueError(f"hidden_dim must be >= 1, got {hidden_dim}")
    d = hidden_dim
    rng = np.random.default_rng(seed)

    def lstm(r):
        return (_xavier(r, d, d, (d, 4 * d)), _xavier(r, d, d, (d, 4 * d)),
                np.zeros(4 * d))

    embed_w = _xavier(rng, 2, d, (2, d))
    enc_wx, enc_wh, enc_b = lstm(rng)
    dec_wx, dec_wh, dec_b = lstm(rng)
    policy = PolicyParams(
        embed_w=embed_w,
        enc_wx=enc_wx, enc_wh=enc_wh, enc_b=enc_b,
        dec_wx=dec_wx, dec_wh=dec_wh, dec_b=dec_b,
        w1=_xavier(rng, d, d, (d, d)),
        w2=_xavier(rng, d, d, (d, d)),
        v_att=_xavier(rng, d, 1, (d,)),
        v_go=_xavier(rng, d, 1, (d,)),
    )
    c_embed = _xavier(rng, 2, d, (2, d))
    c_wx, c_wh, c_b = lstm(rng)
    critic = CriticParams(
        embed_w=c_embed,
        enc_wx=c_wx, enc_wh=c_wh, enc_b=c_b,
        fc1_w=_xavier(rng, d, d, (d, d)),
        fc1_b=np.zeros(d),
        fc2_w=_xavier(rng, d, 1, (d, 1)),
        fc2_b=np.zeros(1),
    )
    return policy, critic


def _lstm_step(wx, wh, b, x, h, c, d: int):
    z = x @ wx + h @ wh + b
    i = ad.sigmoid(ad.slice_last(z, 0, d))
    f = ad.sigmoid(ad.slice_last(z, d, 2 * d))
    g = ad.tanh(ad.slice_last(z, 2 * d, 3 * d))
    o = ad.sigmoid(ad.slice_last(z, 3 * d, 4 * d))
    c2 = f * c + i * g
    h2 = o * ad.tanh(c2)
    return h2, c2


def _batched_items(items) -> tuple[np.ndarray, bool]:
    arr = np.asarray(items, dtype=np.float64)
    if arr.ndim == 2:
        return arr[None, :, :], True
    if arr.ndim == 3:
        return arr, False
    raise ValueError(f"items must be (T, 2) or (B, T, 2), got shape {arr.shape}")


def embed_instance(policy, items) -> Tensor:
    """Shared linear embedding of item coordinates: (..., T, 2) -> (..., T, D).

    Items are expected already normalized to the unit square.
    """
    tp = _tensors(policy)
    arr, squeeze = _batched_items(items)
    emb = Tensor(arr) @ tp.embed_w
    return emb.reshape(*emb.shape[1:]) if squeeze else emb


def encode(policy, embeddings) -> tuple[Tensor, tuple[Tensor, Tensor]]:
    """Run the encoder LSTM from an all-zero state over the item sequence.

    Returns per-item states (..., T, D) and the final (h, c) pair that seeds
    the decoder.
    """
    tp = _tensors(policy)
    emb = embeddings if isinstance(embeddings, Tensor) else Tensor(embeddings)
    squeeze = emb.ndim == 2
    if squeeze:
        emb = emb.reshape(1, *emb.shape)
    b, t_items, d = emb.shape
    h = Tensor(np.zeros((b, d)))
    c = Tensor(np.zeros((b, d)))
    steps = []
    for t in range(t_items):
        x = ad.take_step(emb, t)
        h, c = _lstm_step(tp.enc_wx, tp.enc_wh, tp.enc_b, x, h, c, d)
        steps.append(h)
    states = ad.stack_steps(steps)
    if squeeze:
        return states.reshape(t_items, d), (h.reshape(d), c.reshape(d))
    return states, (h, c)


def attention_scores(policy, states, h_t, visited_mask) -> Tensor:
    """Attention scores u_j = v . tanh(W1 e_j + W2 h_t), with visited masking.

    Visited items get MASK_SCORE added, an effective floor that zeroes their
    probability after the softmax.  Raises if every item is masked.
    """
    tp = _tensors(policy)
    states = states if isinstance(states, Tensor) else Tensor(states)
    h_t = h_t if isinstance(h_t, Tensor) else Tensor(h_t)
    squeeze = states.ndim == 2
    if squeeze:
        states = states.reshape(1, *states.shape)
        h_t = h_t.reshape(1, *h_t.shape)
    mask = np.atleast_2d(np.asarray(visited_mask, dtype=bool))
    if mask.shape != states.shape[:2]:
        raise ValueError(f"mask shape {mask.shape} does not match items "
                         f"{states.shape[:2]}")
    if np.any(mask.all(axis=1)):
        raise ValueError("every item is masked; nothing left to visit")
    b, t_items, d = states.shape
    u = ad.dot_last(ad.tanh(states @ tp.w1 + (h_t @ tp.w2).reshape(b, 1, d)),
                    tp.v_att)
    scores = u + Tensor(MASK_SCORE * mask)
    return scores.reshape(t_items) if squeeze else scores


def pointer_softmax(scores) -> np.ndarray:
    """Max-shifted softmax over the last axis of raw attention scores.

    Floor-masked entries come out exactly 0.  Raises if a row is entirely
    masked (or otherwise pushed below half the mask floor).
    """
    s = np.asarray(scores.data if isinstance(scores, Tensor) else scores,
                   dtype=np.float64)
    if not np.all(np.any(s > MASK_SCORE / 2, axis=-1)):
        raise ValueError("softmax over fully masked scores")
    z = s - s.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass
class RolloutResult:
    """Decoded visiting orders with their differentiable log-probabilities."""

    picks: np.ndarray                        # (B, T) item ids in pick order
    log_prob: Tensor                         # (B,)
    step_probs: list[np.ndarray] | None = None   # per step (B, T), if recorded

    @property
    def batch_size(self) -> int:
        return self.picks.shape[0]

    def tour(self, row: int = 0) -> Tour:
        return Tour(tuple(int(x) for x in self.picks[row]))

    def tours(self) -> list[Tour]:
        return [self.tour(i) for i in range(self.batch_size)]


def _sample_rows(probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF draw per row; zero-probability entries are never selected."""
    cdf = np.cumsum(probs, axis=1)
    cdf /= cdf[:, -1:]
    picks = (cdf <= u[:, None]).sum(axis=1)
    return np.minimum(picks, probs.shape[1] - 1)


def decode_rollout(policy, embeddings, states, final_state, mode: str = "sample",
                   rng=None, record_probs: bool = False,
                   actions: np.ndarray | None = None) -> RolloutResult:
    """Decode one visiting order per batch row.

    mode "greedy" takes the argmax at every step, "sample" draws from the
    masked softmax, "forced" scores the given actions (teacher forcing).
    Step 0 is always forced to item 0.  The decoder starts from the final
    encoder state with a learned go-symbol as first input, and feeds the
    embedding of each picked item into the next step.
    """
    tp = _tensors(policy)
    emb = embeddings if isinstance(embeddings, Tensor) else Tensor(embeddings)
    states_t = states if isinstance(states, Tensor) else Tensor(states)
    h, c = final_state
    h = h if isinstance(h, Tensor) else Tensor(h)
    c = c if isinstance(c, Tensor) else Tensor(c)
    if states_t.ndim == 2:
        states_t = states_t.reshape(1, *states_t.shape)
        emb = emb.reshape(1, *emb.shape)
        h = h.reshape(1, *h.shape)
        c = c.reshape(1, *c.shape)
    b, t_items, d = states_t.shape
    if mode == "forced":
        if actions is None:
            raise ValueError("mode 'forced' needs an actions array")
        actions = np.asarray(actions, dtype=np.int64)
        actions = actions[None, :] if actions.ndim == 1 else actions
        if actions.shape != (b, t_items):
            raise ValueError(f"actions must have shape {(b, t_items)}, "
                             f"got {actions.shape}")
    elif mode == "sample":
        if rng is None:
            raise ValueError("mode 'sample' needs an rng")
        uniforms = rng.random((b, t_items))
    elif mode != "greedy":
        raise ValueError(f"unknown decode mode {mode!r}")

    w1e = states_t @ tp.w1
    x = tp.v_go + Tensor(np.zeros((b, d)))
    visited = np.zeros((b, t_items), dtype=bool)
    picks = np.empty((b, t_items), dtype=np.int64)
    rows = np.arange(b)
    step_probs = [] if record_probs else None
    log_prob = None
    start_only = np.full(t_items, MASK_SCORE)
    start_only[0] = 0.0
    for t in range(t_items):
        h, c = _lstm_step(tp.dec_wx, tp.dec_wh, tp.dec_b, x, h, c, d)
        u = ad.dot_last(ad.tanh(w1e + (h @ tp.w2).reshape(b, 1, d)), tp.v_att)
        if t == 0:
            mask_add = np.broadcast_to(start_only, (b, t_items))
        else:
            mask_add = MASK_SCORE * visited
        log_p = ad.log_softmax(u + Tensor(mask_add))
        probs = np.exp(log_p.data)
        if record_probs:
            step_probs.append(probs)
        if mode == "forced":
            a = actions[:, t]
        elif mode == "greedy":
            a = probs.argmax(axis=1)
        else:
            a = _sample_rows(probs, uniforms[:, t])
        picks[:, t] = a
        chosen = ad.take_per_row(log_p, a)
        log_prob = chosen if log_prob is None else log_prob + chosen
        visited[rows, a] = True
        x = ad.take_per_row(emb, a)
    return RolloutResult(picks=picks, log_prob=log_prob, step_probs=step_probs)


def rollout(policy, items, mode: str = "sample", rng=None,
            record_probs: bool = False,
            actions: np.ndarray | None = None) -> RolloutResult:
    """Embed, encode and decode in one call.  items is (T, 2) or (B, T, 2)."""
    tp = _tensors(policy)
    arr, _ = _batched_items(items)
    emb = embed_instance(tp, arr)
    states, final_state = encode(tp, emb)
    return decode_rollout(tp, emb, states, final_state, mode=mode, rng=rng,
                          record_probs=record_probs, actions=actions)


def critic_value(critic, items) -> Tensor:
    """Predicted (scaled) tour energy per batch row."""
    tc = _tensors(critic)
    arr, squeeze = _batched_items(items)
    b, t_items, _ = arr.shape
    d = tc.embed_w.data.shape[1]
    emb = Tensor(arr) @ tc.embed_w
    h = Tensor(np.zeros((b, d)))
    c = Tensor(np.zeros((b, d)))
    steps = []
    for t in range(t_items):
        x = ad.take_step(emb, t)
        h, c = _lstm_step(tc.enc_wx, tc.enc_wh, tc.enc_b, x, h, c, d)
        steps.append(h)
    pooled = ad.stack_steps(steps).mean(axis=1)
    hidden = ad.relu(pooled @ tc.fc1_w + tc.fc1_b)
    value = (hidden @ tc.fc2_w + tc.fc2_b).reshape(b)
    return value.reshape(()) if squeeze and b == 1 else value


def save_checkpoint(path, policy: PolicyParams, critic: CriticParams,
                    seed: int | None = None, step: int = 0) -> None:
    """Write both parameter sets to JSON; float64 values round-trip exactly."""
    doc: dict = {"version": CHECKPOINT_VERSION, "hidden_dim": policy.hidden_dim,
                 "seed": seed, "step": int(step)}
    if critic.hidden_dim != policy.hidden_dim:
        raise ValueError("actor and critic hidden sizes differ")
    for name, arr in policy.named_arrays().items():
        doc[f"actor_{name}"] = arr.tolist()
    for name, arr in critic.named_arrays().items():
        doc[f"critic_{name}"] = arr.tolist()
    Path(path).write_text(json.dumps(doc) + "\n")


def load_checkpoint(path) -> tuple[PolicyParams, CriticParams, dict]:
    """Read a checkpoint, validating version, presence and shapes.

    Returns (policy, critic, meta) where meta carries seed, step, hidden_dim.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CheckpointFormatError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise CheckpointFormatError(f"{path}: top level must be an object")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise CheckpointFormatError(
            f"{path}: unsupported version {doc.get('version')!r}")
    if not isinstance(doc.get("hidden_dim"), int) or doc["hidden_dim"] < 1:
        raise CheckpointFormatError(f"{path}: missing or bad field 'hidden_dim'")
    d = doc["hidden_dim"]

    def pull(prefix, shapes):
        out = {}
        for name, shape in shapes.items():
            key = f"{prefix}{name}"
            if key not in doc:
                raise CheckpointFormatError(f"{path}: missing entry '{key}'")
            arr = np.asarray(doc[key], dtype=np.float64)
            if arr.shape != shape:
                raise CheckpointFormatError(
                    f"{path}: entry '{key}' must have shape {shape}, "
                    f"got {arr.shape}")
            out[name] = arr
        return out

    try:
        policy = PolicyParams(**pull("actor_", _policy_shapes(d)))
        critic = CriticParams(**pull("critic_", _critic_shapes(d)))
    except ValueError as exc:
        raise CheckpointFormatError(f"{path}: {exc}") from exc
    step = doc.get("step", 0)
    if not isinstance(step, int) or step < 0:
        raise CheckpointFormatError(f"{path}: field 'step' must be a non-negative int")
    meta = {"seed": doc.get("seed"), "step": step, "hidden_dim": d}
    return policy, critic, meta
