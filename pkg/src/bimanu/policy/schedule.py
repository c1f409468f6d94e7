"""Square-cosine diffusion noise schedule and the re-spaced sampling grid."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def cosine_alpha_bar(t: int, T: int = 100, s: float = 0.008) -> float:
    """Cumulative retention at step t, normalized so the value at t=0 is 1:

        f(t) = cos^2(((t/T + s) / (1 + s)) * pi/2),  abar(t) = f(t) / f(0)

    Valid for 0 <= t <= T.
    """
    if not 0 <= t <= T:
        raise ValueError(f"t={t} outside [0, {T}]")

    def f(u: float) -> float:
        return float(np.cos(((u / T + s) / (1 + s)) * np.pi / 2.0) ** 2)

    return f(t) / f(0)


@dataclass(frozen=True)
class DiffusionSchedule:
    """Discrete schedule over steps 1..T with per-step beta clipped at
    beta_max; alpha_bars is indexable at 0..T with alpha_bars[0] == 1."""

    T: int
    betas: np.ndarray  # (T,), betas[t-1] is the step t beta
    alphas: np.ndarray  # (T,)
    alpha_bars: np.ndarray  # (T+1,)

    @staticmethod
    def cosine(T: int = 100, s: float = 0.008, beta_max: float = 0.999) -> "DiffusionSchedule":
        raw = np.array([cosine_alpha_bar(t, T, s) for t in range(T + 1)])
        betas = np.clip(1.0 - raw[1:] / raw[:-1], 0.0, beta_max)
        alphas = 1.0 - betas
        alpha_bars = np.concatenate([[1.0], np.cumprod(alphas)])
        return DiffusionSchedule(T, betas, alphas, alpha_bars)

    def alpha_bar(self, t: int) -> float:
        if not 0 <= t <= self.T:
            raise ValueError(f"t={t} outside [0, {self.T}]")
        return float(self.alpha_bars[t])

    def sampling_steps(self, n: int) -> np.ndarray:
        """n steps spread by uniform stride over 1..T, endpoints included,
        returned descending for ancestral sampling."""
        if not 1 <= n <= self.T:
            raise ValueError(f"need 1 <= n <= {self.T}")
        if n == 1:
            return np.array([self.T])
        steps = np.unique(np.round(np.linspace(1, self.T, n)).astype(int))
        return steps[::-1].copy()
