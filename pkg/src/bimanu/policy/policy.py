"""Conditional DDPM policy over 16x24 action chunks."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
import torch
import torch.nn as nn

from ..data.episode import Observation
from ..data.stats import DatasetStats
from .nets import Denoiser, DenoiserConfig, EncoderConfig, MlpEncoder, VisionEncoder
from .schedule import DiffusionSchedule

CAMERA_ORDER = ("wrist_left", "wrist_right", "third_view")


@dataclass(frozen=True)
class PolicyConfig:
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    denoiser: DenoiserConfig = field(default_factory=DenoiserConfig)
    train_steps: int = 100  # diffusion T
    schedule_s: float = 0.008
    beta_max: float = 0.999
    inference_steps: int = 15
    obs_horizon: int = 1
    cameras: tuple[str, ...] = CAMERA_ORDER  # empty tuple = vision dropped
    use_touch: bool = True
    use_depth: bool = False
    full_depth_vision: bool = False

    def feature_dim(self) -> int:
        return (
            self.encoder.vision_out * len(self.cameras)
            + (self.encoder.mlp_out if self.use_touch else 0)
            + self.encoder.mlp_out
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["encoder"] = asdict(self.encoder)
        d["denoiser"] = asdict(self.denoiser)
        return d

    @staticmethod
    def from_dict(d: dict) -> "PolicyConfig":
        d = dict(d)
        enc = dict(d.pop("encoder"))
        den = dict(d.pop("denoiser"))
        enc["vision_channels"] = tuple(enc["vision_channels"])
        den["channels"] = tuple(den["channels"])
        d["cameras"] = tuple(d["cameras"])
        return PolicyConfig(encoder=EncoderConfig(**enc), denoiser=DenoiserConfig(**den), **d)


class DiffusionPolicy(nn.Module):
    """Encoders + denoiser + schedule; inputs normalized via DatasetStats.

    Dropped modalities have no encoder at all: the conditioning vector
    simply shrinks.
    """

    def __init__(self, cfg: PolicyConfig, stats: DatasetStats):
        super().__init__()
        self.cfg = cfg
        self.stats = stats
        self.schedule = DiffusionSchedule.cosine(cfg.train_steps, cfg.schedule_s, cfg.beta_max)
        enc = cfg.encoder
        self.proprio_encoder = MlpEncoder(enc.proprio_dim, enc.mlp_hidden, enc.mlp_out)
        self.touch_encoder = (
            MlpEncoder(enc.touch_dim, enc.mlp_hidden, enc.mlp_out) if cfg.use_touch else None
        )
        self.vision_encoders = nn.ModuleDict(
            {
                name: VisionEncoder(enc, full_depth=cfg.full_depth_vision)
                for name in cfg.cameras
            }
        )
        self.denoiser = Denoiser(cfg.denoiser, cfg.feature_dim())

    # -- observation plumbing --------------------------------------------

    def obs_to_tensors(self, observations: list[Observation], dtype=torch.float32) -> dict:
        proprio = np.stack([self.stats.normalize_proprio(o.proprio()) for o in observations])
        out = {"proprio": torch.as_tensor(proprio, dtype=dtype)}
        if self.cfg.use_touch:
            touch = np.stack([self.stats.normalize_touch(o.touch) for o in observations])
            out["touch"] = torch.as_tensor(touch, dtype=dtype)
        for name in self.cfg.cameras:
            imgs = []
            for o in observations:
                rgb = o.images[name]
                if rgb is None:
                    raise ValueError(f"observation lacks camera {name!r}")
                chans = [rgb.astype(np.float32).transpose(2, 0, 1) / 255.0 * 2.0 - 1.0]
                if self.cfg.use_depth:
                    depth = o.depths[name]
                    chans.append(
                        depth.astype(np.float32)[None] / 65535.0 * 2.0 - 1.0
                    )
                imgs.append(np.concatenate(chans, axis=0))
            out[f"image:{name}"] = torch.as_tensor(np.stack(imgs), dtype=dtype)
        return out

    def encode(self, tensors: dict) -> torch.Tensor:
        """Concatenation order is fixed: cameras (wrist_left, wrist_right,
        third_view), then touch, then proprio."""
        feats = [self.vision_encoders[n](tensors[f"image:{n}"]) for n in self.cfg.cameras]
        if self.touch_encoder is not None:
            feats.append(self.touch_encoder(tensors["touch"]))
        feats.append(self.proprio_encoder(tensors["proprio"]))
        return torch.cat(feats, dim=-1)

    # -- DDPM objective ---------------------------------------------------

    def loss(
        self,
        tensors: dict,
        actions_norm: torch.Tensor,
        generator: torch.Generator | None = None,
    ) -> torch.Tensor:
        """Noise-prediction MSE: t ~ U{1..T}, eps ~ N(0, I),
        x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps, minimize |eps_hat - eps|^2."""
        B = actions_norm.shape[0]
        dtype = actions_norm.dtype
        t = torch.randint(
            1, self.schedule.T + 1, (B,), generator=generator, device=actions_norm.device
        )
        eps = torch.randn(actions_norm.shape, generator=generator, dtype=dtype)
        abar = torch.as_tensor(
            self.schedule.alpha_bars[t.numpy()], dtype=dtype
        )[:, None, None]
        x_t = torch.sqrt(abar) * actions_norm + torch.sqrt(1.0 - abar) * eps
        eps_hat = self.denoiser(x_t, t, self.encode(tensors))
        return torch.mean((eps_hat - eps) ** 2)

    # -- sampling ---------------------------------------------------------

    @torch.no_grad()
    def sample(
        self,
        obs: Observation,
        steps: int | None = None,
        generator: torch.Generator | None = None,
    ) -> np.ndarray:
        """Ancestral DDPM sampling over the re-spaced step grid; returns a
        (horizon, action_dim) normalized chunk clipped to [-1, 1]."""
        steps = steps if steps is not None else self.cfg.inference_steps
        grid = self.schedule.sampling_steps(steps)
        feat = self.encode(self.obs_to_tensors([obs]))
        dtype = feat.dtype
        dc = self.cfg.denoiser
        x = torch.randn((1, dc.horizon, dc.action_dim), generator=generator, dtype=dtype)
        abars = self.schedule.alpha_bars
        for i, t_cur in enumerate(grid):
            t_prev = int(grid[i + 1]) if i + 1 < len(grid) else 0
            abar_cur = abars[t_cur]
            abar_prev = abars[t_prev]
            alpha = abar_cur / abar_prev
            beta = 1.0 - alpha
            t_tensor = torch.full((1,), int(t_cur), dtype=torch.long)
            eps_hat = self.denoiser(x, t_tensor, feat)
            # x0-parameterized posterior mean with the x0 estimate clipped to
            # the normalized action range; the equivalent eps-form divides by
            # sqrt(alpha), which underflows across re-spaced strides in the
            # clipped high-noise tail of the schedule
            x0_hat = (x - np.sqrt(1.0 - abar_cur) * eps_hat) / np.sqrt(abar_cur)
            x0_hat = torch.clamp(x0_hat, -1.0, 1.0)
            coef_x0 = np.sqrt(abar_prev) * beta / (1.0 - abar_cur)
            coef_xt = np.sqrt(alpha) * (1.0 - abar_prev) / (1.0 - abar_cur)
            mean = float(coef_x0) * x0_hat + float(coef_xt) * x
            if t_prev > 0:
                var = beta * (1.0 - abar_prev) / (1.0 - abar_cur)
                noise = torch.randn(x.shape, generator=generator, dtype=dtype)
                x = mean + float(np.sqrt(var)) * noise
            else:
                x = mean
        return np.clip(x[0].numpy(), -1.0, 1.0)
