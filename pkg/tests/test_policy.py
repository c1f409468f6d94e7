"""Diffusion policy: noise schedule against a high-precision oracle,
analytic-vs-numeric gradients, sampling behavior, EMA bookkeeping, and
checkpoint serialization."""

import numpy as np
import pytest
import torch

from bimanu.data.episode import Observation
from bimanu.data.stats import DatasetStats
from bimanu.geometry import NormStats
from bimanu.hand import HAND_JOINT_MAX
from bimanu.policy.checkpoint import load_checkpoint, save_checkpoint
from bimanu.policy.nets import DenoiserConfig, EncoderConfig
from bimanu.policy.policy import DiffusionPolicy, PolicyConfig
from bimanu.policy.schedule import DiffusionSchedule, cosine_alpha_bar
from bimanu.policy.training import (
    EmaTracker,
    TrainConfig,
    Trainer,
    TrainingError,
    ema_warmup_decay,
    make_predictor,
    train_step,
)

# cos^2-schedule cumulative retention, evaluated independently at 40
# decimal digits of precision (mpmath) and frozen here
ALPHA_BAR_ORACLE_T100 = {
    0: 1.0,
    1: 0.99936871840165847997,
    7: 0.98545143174784977153,
    25: 0.84701216132690473446,
    50: 0.49384359044063771332,
    77: 0.12307357226535198669,
    99: 0.00024285722793500606173,
    100: 4.2732858501323127932e-86,
}
ALPHA_BAR_ORACLE_T20 = {
    0: 1.0,
    5: 0.84701216132690473446,
    13: 0.26916752443817855833,
    20: 4.2732858501323127932e-86,
}


def simple_stats() -> DatasetStats:
    return DatasetStats(
        eef=NormStats.fixed(-np.ones(12), np.ones(12)),
        touch=NormStats.fixed(np.zeros(60), np.full(60, 4000.0)),
        arm_action=NormStats.fixed(np.full(12, -np.pi), np.full(12, np.pi)),
        hand=NormStats.fixed(np.zeros(6), HAND_JOINT_MAX),
    )


def tiny_config(cameras=(), use_touch=False, train_steps=100) -> PolicyConfig:
    return PolicyConfig(
        encoder=EncoderConfig(
            mlp_hidden=16, mlp_out=8, vision_out=8,
            vision_channels=(8, 8), vision_groups=4,
        ),
        denoiser=DenoiserConfig(channels=(8, 16), step_embed_dim=16),
        train_steps=train_steps,
        cameras=tuple(cameras),
        use_touch=use_touch,
    )


def fake_obs(rng, cameras=(), h=12, w=16) -> Observation:
    return Observation(
        tick=0,
        eef_left=rng.uniform(-1, 1, 6),
        eef_right=rng.uniform(-1, 1, 6),
        arm_q_left=np.zeros(6),
        arm_q_right=np.zeros(6),
        hand_q_left=rng.uniform(0, 90, 6),
        hand_q_right=rng.uniform(0, 90, 6),
        touch=rng.uniform(200, 3000, 60),
        images={c: rng.integers(0, 256, (h, w, 3), dtype=np.uint8) for c in cameras},
        depths={c: rng.integers(0, 65536, (h, w), dtype=np.uint16) for c in cameras},
    )


class TestSchedule:
    @pytest.mark.parametrize("t,expected", sorted(ALPHA_BAR_ORACLE_T100.items()))
    def test_alpha_bar_oracle_t100(self, t, expected):
        assert cosine_alpha_bar(t, 100) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("t,expected", sorted(ALPHA_BAR_ORACLE_T20.items()))
    def test_alpha_bar_oracle_t20(self, t, expected):
        assert cosine_alpha_bar(t, 20) == pytest.approx(expected, rel=1e-12)

    def test_out_of_range_t(self):
        with pytest.raises(ValueError):
            cosine_alpha_bar(-1, 100)
        with pytest.raises(ValueError):
            cosine_alpha_bar(101, 100)

    def test_betas_clipped_and_positive(self):
        s = DiffusionSchedule.cosine(100)
        assert np.all(s.betas > 0.0)
        assert np.all(s.betas <= 0.999)
        assert s.betas[-1] == pytest.approx(0.999)  # the tail hits the clip

    def test_alpha_bars_consistent_with_clipped_betas(self):
        s = DiffusionSchedule.cosine(100)
        assert s.alpha_bars[0] == 1.0
        np.testing.assert_allclose(
            s.alpha_bars[1:], np.cumprod(1.0 - s.betas), rtol=1e-12
        )
        assert np.all(np.diff(s.alpha_bars) < 0.0)

    def test_unclipped_prefix_matches_analytic_ratio(self):
        # before any beta hits the clip, alpha_bars equals the analytic value
        s = DiffusionSchedule.cosine(100)
        first_clip = int(np.argmax(s.betas >= 0.999))
        assert first_clip > 50
        for t in (1, 10, first_clip):
            assert s.alpha_bars[t] == pytest.approx(
                cosine_alpha_bar(t, 100), rel=1e-9
            )

    def test_sampling_steps_grid(self):
        s = DiffusionSchedule.cosine(100)
        for n in (1, 2, 5, 15, 100):
            g = s.sampling_steps(n)
            assert g[0] == 100
            assert len(np.unique(g)) == len(g)
            assert np.all(np.diff(g) < 0)
            assert g.min() >= 1
            if n > 1:
                assert g[-1] == 1
        np.testing.assert_array_equal(s.sampling_steps(100), np.arange(100, 0, -1))
        with pytest.raises(ValueError):
            s.sampling_steps(0)
        with pytest.raises(ValueError):
            s.sampling_steps(101)


class TestGradients:
    def test_analytic_matches_central_differences(self):
        """f64 finite-difference check of the training loss gradient on a
        tiny proprio+touch model."""
        torch.manual_seed(0)
        policy = DiffusionPolicy(tiny_config(use_touch=True), simple_stats()).double()
        rng = np.random.default_rng(0)
        obs = [fake_obs(rng) for _ in range(3)]
        tensors = policy.obs_to_tensors(obs, dtype=torch.float64)
        actions = torch.as_tensor(rng.uniform(-1, 1, (3, 16, 24)), dtype=torch.float64)

        def loss_value():
            gen = torch.Generator().manual_seed(123)
            return policy.loss(tensors, actions, gen)

        loss = loss_value()
        loss.backward()
        params = list(policy.named_parameters())
        prng = np.random.default_rng(1)
        checked = 0
        for name, p in params:
            if p.grad is None:
                continue
            flat = p.detach().view(-1)
            for idx in prng.choice(flat.numel(), size=min(2, flat.numel()), replace=False):
                idx = int(idx)
                orig = float(flat[idx])
                h = 1e-6 * max(1.0, abs(orig))
                with torch.no_grad():
                    flat[idx] = orig + h
                up = float(loss_value().detach())
                with torch.no_grad():
                    flat[idx] = orig - h
                down = float(loss_value().detach())
                with torch.no_grad():
                    flat[idx] = orig
                numeric = (up - down) / (2 * h)
                analytic = float(p.grad.view(-1)[idx])
                assert numeric == pytest.approx(analytic, rel=1e-4, abs=1e-7), name
                checked += 1
        assert checked >= 20


class TestSampling:
    def test_shape_range_and_determinism(self):
        torch.manual_seed(0)
        policy = DiffusionPolicy(tiny_config(), simple_stats())
        obs = fake_obs(np.random.default_rng(0))
        a = policy.sample(obs, generator=torch.Generator().manual_seed(5))
        b = policy.sample(obs, generator=torch.Generator().manual_seed(5))
        c = policy.sample(obs, generator=torch.Generator().manual_seed(6))
        assert a.shape == (16, 24)
        assert np.all(np.abs(a) <= 1.0)
        np.testing.assert_array_equal(a, b)
        assert np.any(a != c)

    def test_predictor_depends_only_on_observation(self):
        torch.manual_seed(0)
        policy = DiffusionPolicy(tiny_config(), simple_stats())
        predict = make_predictor(policy, seed=3)
        rng = np.random.default_rng(1)
        o1, o2 = fake_obs(rng), fake_obs(rng)
        np.testing.assert_array_equal(predict(o1), predict(o1))
        assert np.any(predict(o1) != predict(o2))

    def test_missing_camera_rejected(self):
        torch.manual_seed(0)
        policy = DiffusionPolicy(tiny_config(cameras=("third_view",)), simple_stats())
        obs = fake_obs(np.random.default_rng(0))  # has no cameras
        obs.images["third_view"] = None
        obs.depths["third_view"] = None
        with pytest.raises(ValueError):
            policy.sample(obs)

    def test_single_mode_convergence(self):
        """Trained on one constant target chunk, samples must concentrate
        around it relative to the untrained model."""
        torch.manual_seed(0)
        cfg = PolicyConfig(
            encoder=EncoderConfig(
                mlp_hidden=16, mlp_out=8, vision_out=8,
                vision_channels=(8, 8), vision_groups=4,
            ),
            denoiser=DenoiserConfig(channels=(32, 64), step_embed_dim=64),
            train_steps=50,
            cameras=(),
            use_touch=False,
        )
        policy = DiffusionPolicy(cfg, simple_stats())
        obs = fake_obs(np.random.default_rng(0))
        untrained = policy.sample(obs, steps=25, generator=torch.Generator().manual_seed(1))
        untrained_err = float(np.mean(np.abs(untrained - 0.3)))
        tensors = policy.obs_to_tensors([obs] * 16)
        target = torch.full((16, 16, 24), 0.3)
        opt = torch.optim.Adam(policy.parameters(), lr=2e-3)
        gen = torch.Generator().manual_seed(0)
        first_loss = None
        for _ in range(800):
            loss = policy.loss(tensors, target, gen)
            first_loss = first_loss if first_loss is not None else float(loss.detach())
            opt.zero_grad()
            loss.backward()
            opt.step()
        assert float(loss.detach()) < 0.15 * first_loss
        sample = policy.sample(obs, steps=25, generator=torch.Generator().manual_seed(1))
        err = float(np.mean(np.abs(sample - 0.3)))
        assert err < 0.6 * untrained_err
        assert abs(float(sample.mean()) - 0.3) < 0.15


class TestEma:
    def test_warmup_schedule(self):
        assert ema_warmup_decay(0, 0.999) == pytest.approx(0.1)
        assert ema_warmup_decay(9, 0.999) == pytest.approx(10 / 19)
        assert ema_warmup_decay(100000, 0.999) == 0.999

    def test_update_math(self):
        lin = torch.nn.Linear(2, 2)
        ema = EmaTracker(lin, decay=0.9)
        w0 = lin.weight.detach().clone()
        with torch.no_grad():
            lin.weight += 1.0
        ema.update(lin)
        expected = 0.9 * w0 + 0.1 * (w0 + 1.0)
        np.testing.assert_allclose(ema.shadow["weight"].numpy(), expected.numpy(), atol=1e-7)

    def test_non_finite_loss_aborts_before_update(self):
        torch.manual_seed(0)
        policy = DiffusionPolicy(tiny_config(), simple_stats())
        obs = fake_obs(np.random.default_rng(0))
        tensors = policy.obs_to_tensors([obs])
        bad_actions = torch.full((1, 16, 24), float("nan"))
        opt = torch.optim.Adam(policy.parameters())
        ema = EmaTracker(policy)
        before = {k: v.clone() for k, v in policy.state_dict().items()}
        with pytest.raises(TrainingError):
            train_step(policy, opt, ema, tensors, bad_actions)
        for k, v in policy.state_dict().items():
            np.testing.assert_array_equal(v.numpy(), before[k].numpy())


class TestTrainerResume:
    def test_interrupted_run_is_bitwise_identical_at_f64(self, tmp_path):
        torch.manual_seed(0)
        stats = simple_stats()
        rng = np.random.default_rng(0)
        from bimanu.data.episode import Episode, Frame

        frames = [
            Frame(obs=fake_obs(rng), action=rng.uniform(-1, 1, 24)) for _ in range(8)
        ]
        for t, f in enumerate(frames):
            f.obs.tick = t
        ep = Episode(task="x", seed=0, cameras=[], frames=frames, success=True,
                     with_depth=False)
        cfg = TrainConfig(batch_size=4, steps=8, seed=0)

        def make_trainer():
            torch.manual_seed(0)
            policy = DiffusionPolicy(tiny_config(use_touch=True), stats)
            return Trainer(policy, [ep], cfg, dtype=torch.float64)

        straight = make_trainer()
        straight.run(8)

        resumed = make_trainer()
        resumed.run(4)
        resumed.save_state(tmp_path / "state.pt")
        fresh = make_trainer()
        fresh.load_state(tmp_path / "state.pt")
        assert fresh.step == 4
        fresh.run(8)

        a = straight.policy.state_dict()
        b = fresh.policy.state_dict()
        for k in a:
            np.testing.assert_array_equal(a[k].numpy(), b[k].numpy())
        for k in straight.ema.shadow:
            np.testing.assert_array_equal(
                straight.ema.shadow[k].numpy(), fresh.ema.shadow[k].numpy()
            )


class TestCheckpoint:
    def make_policy(self):
        torch.manual_seed(0)
        return DiffusionPolicy(
            tiny_config(cameras=("third_view",), use_touch=True), simple_stats()
        )

    def test_round_trip_identical_samples(self, tmp_path):
        policy = self.make_policy()
        path = tmp_path / "p.bmck"
        save_checkpoint(policy, path, extra={"note": 1})
        loaded = load_checkpoint(path)
        assert loaded.cfg == policy.cfg
        assert loaded.stats.digest() == policy.stats.digest()
        obs = fake_obs(np.random.default_rng(0), cameras=("third_view",))
        a = policy.sample(obs, generator=torch.Generator().manual_seed(0))
        b = loaded.sample(obs, generator=torch.Generator().manual_seed(0))
        np.testing.assert_array_equal(a, b)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "p.bmck"
        save_checkpoint(self.make_policy(), path)
        data = bytearray(path.read_bytes())
        data[:8] = b"XXXX0000"
        path.write_bytes(bytes(data))
        with pytest.raises(ValueError):
            load_checkpoint(path)

    def test_stats_tamper_detected(self, tmp_path):
        import json
        import struct

        path = tmp_path / "p.bmck"
        save_checkpoint(self.make_policy(), path)
        data = path.read_bytes()
        (hlen,) = struct.unpack_from("<I", data, 8)
        header = json.loads(data[12 : 12 + hlen])
        header["stats"]["touch"]["max"][0] += 1.0
        hdr = json.dumps(header, sort_keys=True).encode()
        path.write_bytes(data[:8] + struct.pack("<I", len(hdr)) + hdr + data[12 + hlen :])
        with pytest.raises(ValueError, match="stats hash"):
            load_checkpoint(path)

    def test_no_vision_checkpoint_has_no_vision_tensors(self, tmp_path):
        torch.manual_seed(0)
        policy = DiffusionPolicy(tiny_config(use_touch=True), simple_stats())
        path = tmp_path / "nv.bmck"
        save_checkpoint(policy, path)
        loaded = load_checkpoint(path)
        assert len(loaded.vision_encoders) == 0
        assert loaded.cfg.cameras == ()
