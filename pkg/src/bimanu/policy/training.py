"""Training loop: AdamW on the noise-prediction loss, EMA weights for
evaluation, and in-memory batch assembly from recorded episodes."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import torch

from ..data.episode import Episode, Observation
from ..data.metrics import CHUNK_LEN, gt_chunk
from .policy import DiffusionPolicy


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-4
    weight_decay: float = 1e-5
    batch_size: int = 128
    ema_decay: float = 0.999
    steps: int = 2000
    seed: int = 0
    # learning-rate schedule: linear warmup then piecewise-constant decay.
    # The multiplier is a pure function of the absolute step number, so a
    # resumed run recomputes the identical learning rate at every step.
    lr_warmup: int = 100
    lr_milestones: tuple[int, ...] = (8000, 13000)
    lr_gamma: float = 0.3
    # train-time input noise (normalized units): scripted demonstrations are
    # nearly noise-free, so without it the policy is brittle to the small
    # state perturbations that accumulate when it drives the simulator
    # itself. Drawn from the trainer's torch generator, so resume stays
    # bitwise identical.
    aug_proprio_std: float = 0.03
    aug_touch_std: float = 0.01
    aug_image_std: float = 0.02


def lr_factor(step: int, cfg: TrainConfig) -> float:
    """Learning-rate multiplier at an absolute step: linear warmup over
    lr_warmup steps, then multiplied by lr_gamma at each milestone."""
    warm = min(1.0, (step + 1) / max(1, cfg.lr_warmup))
    decay = cfg.lr_gamma ** sum(step >= m for m in cfg.lr_milestones)
    return warm * decay


class EmaTracker:
    """Exponential moving average of all parameters:
    ema <- decay * ema + (1 - decay) * params."""

    def __init__(self, model: torch.nn.Module, decay: float = 0.999):
        self.decay = decay
        self.shadow = {
            k: v.detach().clone() for k, v in model.state_dict().items()
        }

    def update(self, model: torch.nn.Module, decay: float | None = None):
        d = self.decay if decay is None else decay
        with torch.no_grad():
            for k, v in model.state_dict().items():
                if v.dtype.is_floating_point:
                    self.shadow[k].mul_(d).add_(v, alpha=1.0 - d)
                else:
                    self.shadow[k] = v.detach().clone()

    def copy_to(self, model: torch.nn.Module):
        model.load_state_dict(self.shadow)

    def apply_clone(self, model: torch.nn.Module) -> torch.nn.Module:
        import copy

        clone = copy.deepcopy(model)
        clone.load_state_dict(self.shadow)
        clone.eval()
        return clone


class EpisodeTensors:
    """Flattened per-frame training arrays; images stay in their raw integer
    types until batch time."""

    def __init__(self, policy: DiffusionPolicy, episodes: list[Episode]):
        self.policy = policy
        stats = policy.stats
        proprio, touch, chunks = [], [], []
        images = {name: [] for name in policy.cfg.cameras}
        depths = {name: [] for name in policy.cfg.cameras} if policy.cfg.use_depth else None
        for ep in episodes:
            actions_norm = stats.normalize_action(ep.actions())
            for t, frame in enumerate(ep.frames):
                proprio.append(stats.normalize_proprio(frame.obs.proprio()))
                if policy.cfg.use_touch:
                    touch.append(stats.normalize_touch(frame.obs.touch))
                for name in policy.cfg.cameras:
                    images[name].append(frame.obs.images[name])
                    if depths is not None:
                        depths[name].append(frame.obs.depths[name])
                chunks.append(gt_chunk(actions_norm, t))
        self.proprio = np.asarray(proprio, dtype=np.float32)
        self.touch = np.asarray(touch, dtype=np.float32) if touch else None
        self.chunks = np.asarray(chunks, dtype=np.float32)
        self.images = {k: np.asarray(v) for k, v in images.items()}
        self.depths = {k: np.asarray(v) for k, v in depths.items()} if depths else None
        self.n = self.proprio.shape[0]

    def batch(self, idx: np.ndarray, dtype=torch.float32) -> tuple[dict, torch.Tensor]:
        tensors = {"proprio": torch.as_tensor(self.proprio[idx], dtype=dtype)}
        if self.touch is not None:
            tensors["touch"] = torch.as_tensor(self.touch[idx], dtype=dtype)
        for name in self.policy.cfg.cameras:
            rgb = self.images[name][idx].astype(np.float32)
            img = rgb.transpose(0, 3, 1, 2) / 255.0 * 2.0 - 1.0
            if self.depths is not None:
                d = self.depths[name][idx].astype(np.float32)[:, None] / 65535.0 * 2.0 - 1.0
                img = np.concatenate([img, d], axis=1)
            tensors[f"image:{name}"] = torch.as_tensor(img, dtype=dtype)
        actions = torch.as_tensor(self.chunks[idx], dtype=dtype)
        return tensors, actions


def ema_warmup_decay(step: int, decay: float) -> float:
    """Ramp the EMA decay as (1+step)/(10+step) capped at the configured
    decay, so early shadows do not stay dominated by the random init."""
    return min(decay, (1.0 + step) / (10.0 + step))


def augment_inputs(
    tensors: dict, cfg: TrainConfig, generator: torch.Generator | None
) -> dict:
    """Add Gaussian noise to the normalized observation tensors in place."""

    def jitter(x: torch.Tensor, std: float) -> torch.Tensor:
        if std <= 0.0:
            return x
        return x + std * torch.randn(x.shape, generator=generator, dtype=x.dtype)

    for key, x in tensors.items():
        if key == "proprio":
            tensors[key] = jitter(x, cfg.aug_proprio_std)
        elif key == "touch":
            tensors[key] = jitter(x, cfg.aug_touch_std)
        elif key.startswith("image:"):
            tensors[key] = jitter(x, cfg.aug_image_std)
    return tensors


def train_step(
    policy: DiffusionPolicy,
    optimizer: torch.optim.Optimizer,
    ema: EmaTracker,
    tensors: dict,
    actions_norm: torch.Tensor,
    generator: torch.Generator | None = None,
    ema_decay: float | None = None,
) -> float:
    loss = policy.loss(tensors, actions_norm, generator)
    if not torch.isfinite(loss):
        raise TrainingError("non-finite loss; parameters left unchanged")
    optimizer.zero_grad(set_to_none=True)
    loss.backward()
    optimizer.step()
    ema.update(policy, ema_decay)
    return float(loss.detach())


def train_policy(
    policy: DiffusionPolicy,
    episodes: list[Episode],
    cfg: TrainConfig,
    log_every: int = 50,
    progress=None,
) -> tuple[EmaTracker, list[tuple[int, float]]]:
    """Train in place; returns the EMA tracker and a (step, loss) curve."""
    torch.manual_seed(cfg.seed)
    data = EpisodeTensors(policy, episodes)
    optimizer = torch.optim.AdamW(
        policy.parameters(), lr=cfg.lr, weight_decay=cfg.weight_decay
    )
    ema = EmaTracker(policy, cfg.ema_decay)
    gen = torch.Generator().manual_seed(cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    curve = []
    for step in range(cfg.steps):
        for group in optimizer.param_groups:
            group["lr"] = cfg.lr * lr_factor(step, cfg)
        idx = rng.integers(0, data.n, cfg.batch_size)
        tensors, actions = data.batch(idx)
        augment_inputs(tensors, cfg, gen)
        loss = train_step(
            policy, optimizer, ema, tensors, actions, gen,
            ema_decay=ema_warmup_decay(step, cfg.ema_decay),
        )
        if step % log_every == 0 or step == cfg.steps - 1:
            curve.append((step, loss))
            if progress is not None:
                progress(step, loss)
    return ema, curve


class Trainer:
    """Resumable training driver: all mutable state (parameters, optimizer
    moments, EMA shadow, both RNGs, step counter) round-trips through
    state_dict, so save/load/continue is bitwise identical to an
    uninterrupted run at matching dtype."""

    def __init__(
        self,
        policy: DiffusionPolicy,
        episodes: list[Episode],
        cfg: TrainConfig,
        dtype: torch.dtype = torch.float32,
    ):
        self.policy = policy
        self.cfg = cfg
        self.dtype = dtype
        if dtype == torch.float64:
            policy.double()
        self.data = EpisodeTensors(policy, episodes)
        self.optimizer = torch.optim.AdamW(
            policy.parameters(), lr=cfg.lr, weight_decay=cfg.weight_decay
        )
        self.ema = EmaTracker(policy, cfg.ema_decay)
        self.gen = torch.Generator().manual_seed(cfg.seed)
        self.rng = np.random.default_rng(cfg.seed)
        self.step = 0

    def run(self, until_step: int, log_every: int = 50, progress=None):
        """Advance to until_step; returns the (step, loss) curve segment."""
        curve = []
        while self.step < until_step:
            for group in self.optimizer.param_groups:
                group["lr"] = self.cfg.lr * lr_factor(self.step, self.cfg)
            idx = self.rng.integers(0, self.data.n, self.cfg.batch_size)
            tensors, actions = self.data.batch(idx, dtype=self.dtype)
            augment_inputs(tensors, self.cfg, self.gen)
            loss = train_step(
                self.policy, self.optimizer, self.ema, tensors, actions, self.gen,
                ema_decay=ema_warmup_decay(self.step, self.cfg.ema_decay),
            )
            if self.step % log_every == 0 or self.step == until_step - 1:
                curve.append((self.step, loss))
                if progress is not None:
                    progress(self.step, loss)
            self.step += 1
        return curve

    def state_dict(self) -> dict:
        return {
            "step": self.step,
            "model": self.policy.state_dict(),
            "optimizer": self.optimizer.state_dict(),
            "ema": self.ema.shadow,
            "torch_gen": self.gen.get_state(),
            "np_rng": self.rng.bit_generator.state,
        }

    def load_state_dict(self, state: dict) -> None:
        self.step = state["step"]
        self.policy.load_state_dict(state["model"])
        self.optimizer.load_state_dict(state["optimizer"])
        self.ema.shadow = {k: v.clone() for k, v in state["ema"].items()}
        self.gen.set_state(state["torch_gen"])
        self.rng.bit_generator.state = state["np_rng"]

    def save_state(self, path) -> None:
        tmp = str(path) + ".tmp"
        torch.save(self.state_dict(), tmp)
        os.replace(tmp, str(path))

    def load_state(self, path) -> None:
        self.load_state_dict(torch.load(path, weights_only=False))


def make_predictor(policy: DiffusionPolicy, steps: int | None = None, seed: int = 0):
    """Deterministic Observation -> (16, 24) chunk closure: the sampling
    noise is re-seeded per call so the result depends only on the
    observation."""

    def predict(obs: Observation) -> np.ndarray:
        gen = torch.Generator().manual_seed(seed)
        return policy.sample(obs, steps=steps, generator=gen)

    return predict
