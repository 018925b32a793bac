import numpy as np
import pytest

from fpsampler import nn, problems, pushforward, testfn, trainer
from fpsampler.errors import ConfigError
from fpsampler.nn import Activation
from fpsampler.pushforward import BaseDistribution, BaseKind, MapVariant, PushforwardMap
from fpsampler.rng import derive_rng
from fpsampler.trainer import TrainConfig


def ou_setup(K=10, seed=0, sizes=(1, 8, 8, 1)):
    prob = problems.make_ou_1d()
    net = nn.init_net(nn.mlp_specs(list(sizes), Activation.TANH), seed=seed)
    pm = PushforwardMap(MapVariant.STEADY, net, BaseDistribution(BaseKind.UNIFORM_UNIT, 1), 1)
    bank = testfn.init_bank(K, 1, seed=seed)
    return prob, pm, bank


class TestSteadyLoss:
    def test_constant_waves_zero_loss(self):
        prob, pm, bank = ou_setup()
        bank = testfn.PlaneWaveBank(np.zeros((4, 1)), np.zeros(4), np.linspace(0, 3, 4))
        r = np.random.default_rng(0).random((50, 1))
        loss, residuals, _ = trainer.steady_loss(pm, bank, prob, r)
        assert loss == 0.0
        assert np.all(residuals == 0.0)

    def test_single_wave_single_sample(self):
        # loss = (Lf(x1))^2; net frozen to constant output 2.0 so the
        # operator value is the hand-checkable sin(2)
        prob, pm, _ = ou_setup()
        flat = np.zeros(pm.net.n_params)
        net = pm.net.with_params(flat)
        net.biases[-1][:] = 2.0
        pm = PushforwardMap(MapVariant.STEADY, net, pm.base, 1)
        bank = testfn.PlaneWaveBank(np.array([[1.0]]), np.zeros(1), np.array([0.0]))
        loss, residuals, _ = trainer.steady_loss(pm, bank, prob, np.array([[0.5]]))
        assert residuals[0] == pytest.approx(np.sin(2.0), abs=1e-12)
        assert loss == pytest.approx(np.sin(2.0) ** 2, abs=1e-12)

    def test_loss_from_residuals_arithmetic(self):
        # K=2 with residuals 0.3, -0.1 -> loss (0.09 + 0.01)/2
        res = np.array([0.3, -0.1])
        assert float(np.mean(res**2)) == pytest.approx(0.05, abs=1e-15)

    def test_loss_recomputable_from_residuals(self):
        prob, pm, bank = ou_setup(K=7, seed=3)
        r = np.random.default_rng(1).random((100, 1))
        loss, residuals, _ = trainer.steady_loss(pm, bank, prob, r)
        assert loss >= 0.0
        assert abs(loss - np.mean(residuals**2)) < 1e-12

    def test_generator_grad_matches_fd(self):
        prob, pm, bank = ou_setup(K=6, seed=5)
        rng = np.random.default_rng(2)
        r = rng.random((40, 1))
        _, res, cache = trainer.steady_loss(pm, bank, prob, r)
        g = trainer.steady_generator_grad(pm, bank, prob, res, cache)
        p = pm.param_vector()
        h = 1e-6
        for idx in rng.choice(p.size, 12, replace=False):
            pp = p.copy(); pp[idx] += h
            pmv = p.copy(); pmv[idx] -= h
            lp, _, _ = trainer.steady_loss(pm.with_params(pp), bank, prob, r)
            lm, _, _ = trainer.steady_loss(pm.with_params(pmv), bank, prob, r)
            fd = (lp - lm) / (2 * h)
            assert abs(fd - g[idx]) <= 1e-5 * max(abs(fd), 1e-8)


class TestTimeLoss:
    def test_constant_wave_exact_cancellation(self):
        prob = problems.make_ou_time(1, np.array([3.0]))
        net = nn.init_net(nn.mlp_specs([3, 6, 1], Activation.TANH), seed=0)
        pm = PushforwardMap(MapVariant.SQRT_TIME, net,
                            BaseDistribution(BaseKind.STANDARD_NORMAL, 2), 1)
        bank = testfn.PlaneWaveBank(np.zeros((3, 1)), np.zeros(3), np.array([0.2, 1.0, 2.5]))
        cfg = TrainConfig(K=3, M=20, epochs=1, gen_lr=0.0, M0=10, MT=15, seed=1)
        batch = trainer.draw_time_batches(prob, pm, cfg, np.random.default_rng(0))
        loss, residuals, _ = trainer.time_loss(pm, bank, prob, batch)
        assert np.allclose(residuals, 0.0, atol=1e-14)
        assert loss == pytest.approx(0.0, abs=1e-28)

    def test_frozen_identity_map_ou_hand_value(self):
        # map F(t, x0, r) = x0 with all mass at x0 = 0 under b(x) = -x:
        # every term of R is zero
        prob = problems.make_ou_time(1, np.array([0.0]), sigma0=1e-12)
        net = nn.init_net(nn.mlp_specs([3, 4, 1], Activation.TANH), seed=0)
        net = net.with_params(np.zeros(net.n_params))  # F~ = 0 so x = x0
        pm = PushforwardMap(MapVariant.SQRT_TIME, net,
                            BaseDistribution(BaseKind.STANDARD_NORMAL, 2), 1)
        bank = testfn.PlaneWaveBank(np.array([[1.0]]), np.zeros(1), np.array([0.0]))
        cfg = TrainConfig(K=1, M=50, epochs=1, gen_lr=0.0, M0=20, MT=20, seed=2)
        batch = trainer.draw_time_batches(prob, pm, cfg, np.random.default_rng(1))
        batch.x0_int[:] = 0.0
        batch.x0_init[:] = 0.0
        batch.x0_term[:] = 0.0
        _, residuals, _ = trainer.time_loss(pm, bank, prob, batch)
        assert residuals[0] == pytest.approx(0.0, abs=1e-14)


class TestTrainLoop:
    def test_zero_learning_rates_freeze_everything(self):
        prob, pm, bank = ou_setup(K=5, seed=1)
        cfg = TrainConfig(K=5, M=30, epochs=1, gen_lr=0.0, adv_lr=0.0,
                          adv_steps=2, adv_every=1, seed=7)
        before = pm.param_vector().copy()
        res = trainer.train(prob, pm, bank, cfg)
        assert np.array_equal(res.map.param_vector(), before)
        assert np.array_equal(res.bank.param_vector(), bank.param_vector())
        # identical evaluation on the same fixed batch twice
        r = pushforward.sample_base(pm.base, 30, derive_rng(7, "x"))
        l1, _, _ = trainer.steady_loss(res.map, res.bank, prob, r)
        l2, _, _ = trainer.steady_loss(res.map, res.bank, prob, r)
        assert l1 == l2

    def test_ascent_property_on_frozen_generator(self):
        # one tiny adversary step cannot decrease the loss on the same batch
        prob, pm, bank = ou_setup(K=8, seed=4)
        r = pushforward.sample_base(pm.base, 100, derive_rng(3, "x"))
        loss0, res0, cache0 = trainer.steady_loss(pm, bank, prob, r)
        g = testfn.adversary_grads_steady(bank, cache0.ev, res0).flatten()
        lr = 1e-6
        bank2 = bank.with_params(bank.param_vector() + lr * g)
        loss1, _, _ = trainer.steady_loss(pm, bank2, prob, r)
        assert loss1 >= loss0 - 1e-10

    def test_determinism_identical_history(self):
        prob, pm, bank = ou_setup(K=5, seed=2)
        cfg = TrainConfig(K=5, M=50, epochs=20, gen_lr=1e-3, adv_lr=1e-2,
                          adv_steps=3, adv_every=5, seed=11)
        h1 = [r.loss for r in trainer.train(prob, pm, bank, cfg).history]
        prob2, pm2, bank2 = ou_setup(K=5, seed=2)
        h2 = [r.loss for r in trainer.train(prob2, pm2, bank2, cfg).history]
        assert h1 == h2

    def test_loss_decreases_on_ou(self):
        prob, pm, bank = ou_setup(K=20, seed=0)
        cfg = TrainConfig(K=20, M=200, epochs=300, gen_lr=5e-3, adv_steps=0, seed=0)
        res = trainer.train(prob, pm, bank, cfg)
        assert res.final_loss < 0.5 * res.history[0].loss

    def test_adv_steps_zero_keeps_bank_fixed(self):
        prob, pm, bank = ou_setup(K=4, seed=6)
        cfg = TrainConfig(K=4, M=20, epochs=5, gen_lr=1e-3, adv_steps=0, seed=3)
        res = trainer.train(prob, pm, bank, cfg)
        assert np.array_equal(res.bank.param_vector(), bank.param_vector())

    def test_mass_conserved_every_epoch(self):
        prob, pm, bank = ou_setup(K=4, seed=8)
        counts = []
        def sink(report, pm_now, bank_now):
            X = pushforward.push_steady(pm_now, np.random.default_rng(0).random((64, 1)))[0]
            counts.append(X.shape[0])
        cfg = TrainConfig(K=4, M=16, epochs=4, gen_lr=1e-3, adv_steps=0, seed=5)
        trainer.train(prob, pm, bank, cfg, sink=sink)
        assert counts == [64] * 4

    def test_dimension_mismatch_rejected(self):
        prob, pm, _ = ou_setup()
        bank2 = testfn.init_bank(10, 2, seed=0)
        cfg = TrainConfig(K=10, M=10, epochs=1, gen_lr=1e-3, seed=0)
        with pytest.raises(ConfigError):
            trainer.train(prob, pm, bank2, cfg)

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            TrainConfig(K=0, M=10, epochs=1, gen_lr=1e-3)
        with pytest.raises(ConfigError):
            TrainConfig(K=1, M=10, epochs=1, gen_lr=1e-3, adv_every=0)
