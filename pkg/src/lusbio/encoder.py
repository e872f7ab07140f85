"""Toy temporal-shift video network with hand-derived backpropagation.

The trunk is deliberately small: per-frame linear patch embedding, a stack
of residual blocks whose input is temporally shifted before a per-timestep
affine + ReLU, then temporal mean pooling. A linear head maps the pooled
trunk feature to task logits. Everything is float64 numpy so gradients can
be checked against finite differences.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace

import numpy as np

from .dataio import VideoRecord, augment, rng_for, sample_clip
from .schema import InvalidInputError, TrainConfig

CHECKPOINT_MAGIC = b"LUSE"
CHECKPOINT_VERSION = 1


# ---------------------------------------------------------------------------
# Parameters
# ---------------------------------------------------------------------------

@dataclass
class EncoderParams:
    patch_w: np.ndarray   # P x C
    patch_b: np.ndarray   # C
    block_w: list         # each C x C
    block_b: list         # each C
    head_w: np.ndarray    # C x K
    head_b: np.ndarray    # K

    @property
    def channels(self) -> int:
        return self.patch_w.shape[1]

    @property
    def out_dim(self) -> int:
        return self.head_w.shape[1]

    def tensors(self):
        yield self.patch_w
        yield self.patch_b
        for w, b in zip(self.block_w, self.block_b):
            yield w
            yield b
        yield self.head_w
        yield self.head_b

    def copy(self) -> "EncoderParams":
        return EncoderParams(
            patch_w=self.patch_w.copy(), patch_b=self.patch_b.copy(),
            block_w=[w.copy() for w in self.block_w],
            block_b=[b.copy() for b in self.block_b],
            head_w=self.head_w.copy(), head_b=self.head_b.copy(),
        )

    def to_vector(self) -> np.ndarray:
        return np.concatenate([t.ravel() for t in self.tensors()])

    def from_vector(self, vec: np.ndarray) -> "EncoderParams":
        out = self.copy()
        i = 0
        for t in out.tensors():
            t[...] = vec[i:i + t.size].reshape(t.shape)
            i += t.size
        return out


def init_params(config: TrainConfig, out_dim: int, seed_tag=()) -> EncoderParams:
    p = config.frame_side ** 2
    c = config.channels
    rng = rng_for(config.rng_seed, "init", out_dim, *seed_tag)
    return EncoderParams(
        patch_w=rng.normal(0, np.sqrt(2.0 / p), (p, c)),
        patch_b=np.zeros(c),
        block_w=[rng.normal(0, np.sqrt(1.0 / c), (c, c)) for _ in range(config.blocks)],
        block_b=[np.zeros(c) for _ in range(config.blocks)],
        head_w=rng.normal(0, np.sqrt(1.0 / c), (c, out_dim)),
        head_b=np.zeros(out_dim),
    )


# ---------------------------------------------------------------------------
# Temporal shift
# ---------------------------------------------------------------------------

def temporal_shift(features: np.ndarray, shift_fraction: float) -> np.ndarray:
    """Bidirectional shift: the first k channels take their value from t-1,
    the next k from t+1, the rest pass through; vacated slots are zero.

    Works on T x C or batched B x T x C arrays (shift along the T axis).
    """
    c = features.shape[-1]
    k_exact = shift_fraction * c
    k = round(k_exact)
    if abs(k_exact - k) > 1e-9 or k < 1:
        raise InvalidInputError(f"shift_fraction*C = {k_exact} is not a positive integer")
    out = np.zeros_like(features)
    out[..., 1:, :k] = features[..., :-1, :k]
    out[..., :-1, k:2 * k] = features[..., 1:, k:2 * k]
    out[..., 2 * k:] = features[..., 2 * k:]
    return out


def _shift_adjoint(grad: np.ndarray, shift_fraction: float) -> np.ndarray:
    c = grad.shape[-1]
    k = round(shift_fraction * c)
    out = np.zeros_like(grad)
    out[..., :-1, :k] = grad[..., 1:, :k]
    out[..., 1:, k:2 * k] = grad[..., :-1, k:2 * k]
    out[..., 2 * k:] = grad[..., 2 * k:]
    return out


# ---------------------------------------------------------------------------
# Forward / backward
# ---------------------------------------------------------------------------

def _forward_batch(params: EncoderParams, clips: np.ndarray, shift_fraction: float,
                   cache: dict | None = None):
    """clips: B x T x H x W -> (logits B x K, trunk features B x C)."""
    b, t = clips.shape[:2]
    x = clips.reshape(b, t, -1)
    if x.shape[2] != params.patch_w.shape[0]:
        raise InvalidInputError(
            f"frame size {x.shape[2]} != patch embedding input {params.patch_w.shape[0]}")
    a0 = x @ params.patch_w + params.patch_b
    h = np.maximum(a0, 0.0)
    if cache is not None:
        cache["x"], cache["a0"] = x, a0
        cache["blocks"] = []
    for w, bias in zip(params.block_w, params.block_b):
        s = temporal_shift(h, shift_fraction)
        z_pre = s @ w + bias
        z = np.maximum(z_pre, 0.0)
        if cache is not None:
            cache["blocks"].append((s, z_pre))
        h = h + z
    feat = h.mean(axis=1)
    logits = feat @ params.head_w + params.head_b
    if cache is not None:
        cache["feat"] = feat
    return logits, feat


def forward(params: EncoderParams, clip: np.ndarray, shift_fraction: float = 1 / 8):
    """Single-clip forward pass: (logits, trunk_feature)."""
    logits, feat = _forward_batch(params, clip[None], shift_fraction)
    return logits[0], feat[0]


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def softmax(x, axis=-1):
    z = x - x.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def bce_loss_and_dlogits(logits: np.ndarray, targets: np.ndarray):
    """Mean sigmoid binary cross-entropy over all outputs; stable form."""
    loss = np.mean(np.maximum(logits, 0) - logits * targets + np.log1p(np.exp(-np.abs(logits))))
    dlogits = (sigmoid(logits) - targets) / logits.size
    return loss, dlogits

def ce_loss_and_dlogits(logits: np.ndarray, labels: np.ndarray):
    """Mean softmax cross-entropy; labels are integer class ids (B,)."""
    b = logits.shape[0]
    z = logits - logits.max(axis=1, keepdims=True)
    log_probs = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    loss = -log_probs[np.arange(b), labels].mean()
    dlogits = softmax(logits, axis=1)
    dlogits[np.arange(b), labels] -= 1.0
    return loss, dlogits / b


def loss_and_grad(params: EncoderParams, clips: np.ndarray, targets: np.ndarray,
                  loss_kind: str, shift_fraction: float):
    """Loss plus analytic gradients for a batch of clips.

    loss_kind "bce": targets B x K in {0,1}; "ce": targets B integer labels.
    """
    cache: dict = {}
    logits, _ = _forward_batch(params, clips, shift_fraction, cache)
    if loss_kind == "bce":
        loss, dlogits = bce_loss_and_dlogits(logits, targets)
    elif loss_kind == "ce":
        loss, dlogits = ce_loss_and_dlogits(logits, np.asarray(targets, dtype=int))
    else:
        raise InvalidInputError(f"unknown loss kind {loss_kind!r}")

    feat = cache["feat"]
    grads = EncoderParams(
        patch_w=np.zeros_like(params.patch_w), patch_b=np.zeros_like(params.patch_b),
        block_w=[np.zeros_like(w) for w in params.block_w],
        block_b=[np.zeros_like(b) for b in params.block_b],
        head_w=feat.T @ dlogits, head_b=dlogits.sum(axis=0),
    )
    t = clips.shape[1]
    dh = np.repeat((dlogits @ params.head_w.T)[:, None, :] / t, t, axis=1)
    for i in reversed(range(len(params.block_w))):
        s, z_pre = cache["blocks"][i]
        dz_pre = dh * (z_pre > 0)
        grads.block_w[i] = np.einsum("btc,btd->cd", s, dz_pre)
        grads.block_b[i] = dz_pre.sum(axis=(0, 1))
        dh = dh + _shift_adjoint(dz_pre @ params.block_w[i].T, shift_fraction)
    da0 = dh * (cache["a0"] > 0)
    grads.patch_w = np.einsum("btp,btc->pc", cache["x"], da0)
    grads.patch_b = da0.sum(axis=(0, 1))
    return loss, grads


# ---------------------------------------------------------------------------
# Optimizer
# ---------------------------------------------------------------------------

class Adam:
    """Standard Adam (beta1=0.9, beta2=0.999, eps=1e-8) over EncoderParams."""

    def __init__(self, params: EncoderParams, lr: float,
                 beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = [np.zeros_like(t) for t in params.tensors()]
        self.v = [np.zeros_like(t) for t in params.tensors()]

    def step(self, params: EncoderParams, grads: EncoderParams):
        self.t += 1
        b1t = 1 - self.beta1 ** self.t
        b2t = 1 - self.beta2 ** self.t
        for i, (p, g) in enumerate(zip(params.tensors(), grads.tensors())):
            self.m[i] = self.beta1 * self.m[i] + (1 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1 - self.beta2) * g * g
            p -= self.lr * (self.m[i] / b1t) / (np.sqrt(self.v[i] / b2t) + self.eps)


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

@dataclass
class TrainHistory:
    train_loss: list = field(default_factory=list)
    val_acc: list = field(default_factory=list)
    lr: list = field(default_factory=list)
    best_epoch: int = 0

    def to_csv(self) -> str:
        lines = ["epoch,train_loss,val_acc,lr"]
        for e, (tl, va, lr) in enumerate(zip(self.train_loss, self.val_acc, self.lr)):
            lines.append(f"{e},{tl!r},{va!r},{lr!r}")
        return "\n".join(lines) + "\n"


def predict_video(params: EncoderParams, video, config: TrainConfig,
                  rng: np.random.Generator, mode: str, forward_fn=None):
    """Mean (or max, per config.clip_agg) prediction over sampled clips.

    mode "biomarker" applies a sigmoid per output; mode "task" a softmax.
    `video` may be a VideoRecord or a raw T x H x W frame array.
    """
    frames = video.frames if isinstance(video, VideoRecord) else video
    forward_fn = forward_fn or (lambda clip: forward(params, clip, config.shift_fraction)[0])
    probs = []
    for _ in range(config.clip_count_eval):
        clip = sample_clip(frames, config.frames_per_clip, rng)
        logits = forward_fn(clip)
        probs.append(sigmoid(logits) if mode == "biomarker" else softmax(logits))
    probs = np.stack(probs)
    if config.clip_agg == "max":
        agg = probs.max(axis=0)
        return agg / agg.sum() if mode == "task" else agg
    return probs.mean(axis=0)


def video_trunk_feature(params: EncoderParams, video, config: TrainConfig,
                        rng: np.random.Generator) -> np.ndarray:
    """Mean trunk feature over clip_count_eval sampled clips."""
    frames = video.frames if isinstance(video, VideoRecord) else video
    feats = []
    for _ in range(config.clip_count_eval):
        clip = sample_clip(frames, config.frames_per_clip, rng)
        feats.append(forward(params, clip, config.shift_fraction)[1])
    return np.stack(feats).mean(axis=0)


def _validation_accuracy(params, val_records, config, epoch, mode, targets):
    correct, total = 0.0, 0
    for rec, y in zip(val_records, targets):
        rng = rng_for(config.rng_seed, "val", epoch, rec.video_id)
        p = predict_video(params, rec, config, rng, mode)
        if mode == "biomarker":
            correct += np.sum((p > 0.5) == (y > 0.5))
            total += y.size
        else:
            correct += float(np.argmax(p) == y)
            total += 1
    return correct / total


def _train(train_records, val_records, config: TrainConfig, out_dim: int,
           targets_fn, loss_kind: str, mode: str,
           init: EncoderParams | None = None, seed_tag=()):
    if not val_records:
        raise InvalidInputError("empty validation set")
    train_targets = [targets_fn(r) for r in train_records]
    val_targets = [targets_fn(r) for r in val_records]
    if any(t is None for t in train_targets + val_targets):
        raise InvalidInputError("a supplied record is missing the training label")

    params = init.copy() if init is not None else init_params(config, out_dim, seed_tag)
    opt = Adam(params, config.learning_rate)
    history = TrainHistory()
    best_acc, best_params, since_improve = -np.inf, params.copy(), 0
    lr = config.learning_rate

    n = len(train_records)
    for epoch in range(config.epochs):
        erng = rng_for(config.rng_seed, "epoch", epoch, *seed_tag)
        order = erng.permutation(n)
        losses = []
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            clips, ys = [], []
            for i in idx:
                rec = train_records[i]
                crng = rng_for(config.rng_seed, "clip", epoch, int(i), *seed_tag)
                clip = sample_clip(rec.frames, config.frames_per_clip, crng)
                clips.append(augment(clip, crng))
                ys.append(train_targets[i])
            clips = np.stack(clips)
            ys = np.stack(ys) if loss_kind == "bce" else np.asarray(ys)
            loss, grads = loss_and_grad(params, clips, ys, loss_kind, config.shift_fraction)
            opt.lr = lr
            opt.step(params, grads)
            losses.append(loss)
        val_acc = _validation_accuracy(params, val_records, config, epoch, mode, val_targets)
        history.train_loss.append(float(np.mean(losses)))
        history.val_acc.append(float(val_acc))
        history.lr.append(lr)
        if val_acc > best_acc:
            best_acc, best_params, since_improve = val_acc, params.copy(), 0
            history.best_epoch = epoch
        else:
            since_improve += 1
            if since_improve >= config.plateau_patience:
                lr *= config.plateau_factor
                since_improve = 0
    return best_params, history


def train_biomarker(train_records, val_records, config: TrainConfig, seed_tag=()):
    """Weakly supervised 38-way biomarker training with sigmoid BCE."""
    return _train(train_records, val_records, config, 38,
                  lambda r: r.biomarkers, "bce", "biomarker", seed_tag=seed_tag)


def train_e2e(train_records, val_records, task: str, config: TrainConfig,
              init: EncoderParams | None = None, seed_tag=()):
    """End-to-end task training with softmax cross-entropy.

    With `init`, the trunk warm-starts from the given parameters and the
    head is freshly initialized.
    """
    from .schema import TASK_CLASS_COUNTS
    out_dim = TASK_CLASS_COUNTS[task]
    warm = None
    if init is not None:
        fresh = init_params(config, out_dim, seed_tag)
        warm = EncoderParams(
            patch_w=init.patch_w.copy(), patch_b=init.patch_b.copy(),
            block_w=[w.copy() for w in init.block_w],
            block_b=[b.copy() for b in init.block_b],
            head_w=fresh.head_w, head_b=fresh.head_b,
        )
    return _train(train_records, val_records, config, out_dim,
                  lambda r: r.label(task), "ce", "task", init=warm, seed_tag=seed_tag)


# ---------------------------------------------------------------------------
# Gradient check
# ---------------------------------------------------------------------------

def grad_check(params: EncoderParams, clips: np.ndarray, targets, loss_kind: str,
               shift_fraction: float = 1 / 8, n_coords: int = 200,
               step: float = 1e-5, seed: int = 0) -> float:
    """Max relative error of analytic vs central-finite-difference gradients
    over randomly selected parameter coordinates."""
    _, grads = loss_and_grad(params, clips, targets, loss_kind, shift_fraction)
    analytic = grads.to_vector()
    vec = params.to_vector()
    rng = rng_for(seed, "grad_check")
    coords = rng.choice(vec.size, size=min(n_coords, vec.size), replace=False)
    worst = 0.0
    for c in coords:
        v_hi, v_lo = vec.copy(), vec.copy()
        v_hi[c] += step
        v_lo[c] -= step
        l_hi, _ = _forward_loss(params.from_vector(v_hi), clips, targets, loss_kind, shift_fraction)
        l_lo, _ = _forward_loss(params.from_vector(v_lo), clips, targets, loss_kind, shift_fraction)
        numeric = (l_hi - l_lo) / (2 * step)
        err = abs(analytic[c] - numeric) / max(1e-8, abs(analytic[c]) + abs(numeric))
        worst = max(worst, err)
    return worst


def _forward_loss(params, clips, targets, loss_kind, shift_fraction):
    logits, _ = _forward_batch(params, clips, shift_fraction)
    if loss_kind == "bce":
        return bce_loss_and_dlogits(logits, targets)
    return ce_loss_and_dlogits(logits, np.asarray(targets, dtype=int))


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

def save_params(path, params: EncoderParams, config: TrainConfig):
    """LUSE checkpoint: header (magic, version, side, channels, blocks,
    out_dim) then row-major float64 little-endian tensors in order."""
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<IIIII", CHECKPOINT_VERSION, config.frame_side,
                            params.channels, len(params.block_w), params.out_dim))
        for t in params.tensors():
            f.write(np.ascontiguousarray(t, dtype="<f8").tobytes())


def load_params(path) -> tuple[EncoderParams, dict]:
    with open(path, "rb") as f:
        if f.read(4) != CHECKPOINT_MAGIC:
            raise InvalidInputError(f"{path}: not a LUSE checkpoint")
        version, side, channels, n_blocks, out_dim = struct.unpack("<IIIII", f.read(20))
        if version != CHECKPOINT_VERSION:
            raise InvalidInputError(f"{path}: unsupported checkpoint version {version}")
        p = side * side

        def read(shape):
            n = int(np.prod(shape))
            return np.frombuffer(f.read(8 * n), dtype="<f8").reshape(shape).copy()

        params = EncoderParams(
            patch_w=read((p, channels)), patch_b=read((channels,)),
            block_w=[], block_b=[],
            head_w=np.zeros((channels, out_dim)), head_b=np.zeros(out_dim),
        )
        for _ in range(n_blocks):
            params.block_w.append(read((channels, channels)))
            params.block_b.append(read((channels,)))
        params.head_w = read((channels, out_dim))
        params.head_b = read((out_dim,))
    dims = {"frame_side": side, "channels": channels, "blocks": n_blocks, "out_dim": out_dim}
    return params, dims
