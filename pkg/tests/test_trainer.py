"""Training harness: dataset, backprop, method equivalences, firewall, divergence."""
import dataclasses

import numpy as np
import pytest

from fpl_lab.errors import InvalidConfigError, InvalidInputError, TrainingDivergedError
from fpl_lab.trainer import (
    Model,
    SampleRecord,
    TrainConfig,
    compute_unlabeled_targets,
    config_from_mapping,
    evaluate_accuracy,
    forward,
    forward_batch,
    init_model,
    make_dataset,
    pseudo_label,
    run_experiment,
    step_loss_and_grads,
    with_overrides,
)

from oracles import central_diff_flat

FAST = dict(L=20, U=64, epochs=3, batch_size=32, lr=0.05)


class TestConfig:
    def test_defaults_valid(self):
        TrainConfig()

    def test_rejects_bad_values(self):
        with pytest.raises(InvalidConfigError):
            TrainConfig(T=1.0)
        with pytest.raises(InvalidConfigError):
            TrainConfig(beta=-0.1)
        with pytest.raises(InvalidConfigError):
            TrainConfig(lr=0.0)
        with pytest.raises(InvalidConfigError):
            TrainConfig(method="emt")
        with pytest.raises(InvalidConfigError):
            TrainConfig(C=1)

    def test_mapping_parses_types(self):
        cfg = config_from_mapping(
            {"seed": "3", "T": "0.85", "method": "vanilla", "use_adaptive_weight": "false"}
        )
        assert cfg.seed == 3
        assert cfg.T == 0.85
        assert cfg.method == "vanilla"
        assert cfg.use_adaptive_weight is False

    def test_mapping_rejects_unknown_and_malformed(self):
        with pytest.raises(InvalidConfigError):
            config_from_mapping({"momentum": "0.9"})
        with pytest.raises(InvalidConfigError):
            config_from_mapping({"epochs": "ten"})
        with pytest.raises(InvalidConfigError):
            config_from_mapping({"use_adaptive_weight": "maybe"})

    def test_overrides_replace_fields(self):
        cfg = with_overrides(TrainConfig(), {"T": "0.5", "epochs": "7"})
        assert cfg.T == 0.5 and cfg.epochs == 7


class TestMakeDataset:
    def test_split_sizes_and_labels(self):
        cfg = TrainConfig(L=20, U=40)
        data = make_dataset(cfg)
        labeled = [s for s in data if s.split == "labeled"]
        unlabeled = [s for s in data if s.split == "unlabeled"]
        test = [s for s in data if s.split == "test"]
        assert len(labeled) == 20 and len(unlabeled) == 40 and len(test) == 200
        assert all(s.label is not None and s.hidden_label is None for s in labeled + test)
        assert all(s.label is None and s.hidden_label is not None for s in unlabeled)

    def test_class_balance(self):
        data = make_dataset(TrainConfig(L=20, U=40, C=4))
        lab = [s.label for s in data if s.split == "labeled"]
        hid = [s.hidden_label for s in data if s.split == "unlabeled"]
        assert all(lab.count(c) == 5 for c in range(4))
        assert all(hid.count(c) == 10 for c in range(4))

    def test_deterministic_in_seed(self):
        a = make_dataset(TrainConfig(seed=5))
        b = make_dataset(TrainConfig(seed=5))
        c = make_dataset(TrainConfig(seed=6))
        assert all(np.array_equal(x.features, y.features) for x, y in zip(a, b))
        assert any(not np.array_equal(x.features, y.features) for x, y in zip(a, c))

    def test_feature_dimension(self):
        data = make_dataset(TrainConfig(D=3))
        assert all(s.features.shape == (3,) for s in data)


class TestForward:
    def test_single_matches_batch(self):
        cfg = TrainConfig()
        model = init_model(cfg)
        rng = np.random.default_rng(80)
        x = rng.normal(0, 1, (5, cfg.D))
        z_batch, h = forward_batch(model, x)
        assert z_batch.shape == (5, cfg.C) and h.shape == (5, cfg.H)
        for i in range(5):
            # single-row and batched matmuls may take different BLAS paths
            np.testing.assert_allclose(forward(model, x[i]), z_batch[i], rtol=1e-14, atol=1e-15)

    def test_shape_validation(self):
        model = init_model(TrainConfig())
        with pytest.raises(InvalidInputError):
            forward(model, np.zeros(3))
        with pytest.raises(InvalidInputError):
            forward_batch(model, np.zeros((4, 3)))

    def test_pseudo_label_is_argmax(self):
        model = init_model(TrainConfig(seed=2))
        rng = np.random.default_rng(81)
        for _ in range(20):
            x = rng.normal(0, 2, 2)
            assert pseudo_label(model, x) == int(np.argmax(forward(model, x)))

    def test_init_deterministic(self):
        a = init_model(TrainConfig(seed=9))
        b = init_model(TrainConfig(seed=9))
        np.testing.assert_array_equal(a.w1, b.w1)
        np.testing.assert_array_equal(a.w2, b.w2)


class TestBackprop:
    @pytest.mark.parametrize("method", ["fpl", "vanilla", "negative", "soft", "supervised-only"])
    def test_parameter_gradient_matches_finite_differences(self, method):
        cfg = TrainConfig(method=method, H=4, U=16, L=8, beta=0.7)
        rng = np.random.default_rng(82)
        model = init_model(cfg)
        x_l = rng.normal(0, 2, (6, cfg.D))
        y_l = rng.integers(0, cfg.C, 6)
        if method == "supervised-only":
            x_u_pert, targets = None, None
        else:
            x_u = rng.normal(0, 2, (10, cfg.D))
            targets = compute_unlabeled_targets(model, x_u, cfg)
            x_u_pert = x_u + cfg.noise_sigma * rng.standard_normal(x_u.shape)

        sup, uns, grads = step_loss_and_grads(model, x_l, y_l, x_u_pert, targets, cfg)
        analytic = np.concatenate([g.ravel() for g in grads])
        theta0 = model.flat()

        def objective(theta):
            m = Model(model.w1.copy(), model.b1.copy(), model.w2.copy(), model.b2.copy())
            m.set_flat(theta)
            s, u, _ = step_loss_and_grads(m, x_l, y_l, x_u_pert, targets, cfg)
            return s + cfg.beta * u

        numeric = central_diff_flat(objective, theta0, h=1e-6)
        np.testing.assert_allclose(analytic, numeric, rtol=1e-5, atol=1e-8)
        assert np.isfinite(sup) and np.isfinite(uns)

    def test_flat_roundtrip(self):
        model = init_model(TrainConfig(seed=4))
        theta = model.flat()
        clone = init_model(TrainConfig(seed=5))
        clone.set_flat(theta)
        np.testing.assert_array_equal(clone.w1, model.w1)
        np.testing.assert_array_equal(clone.b2, model.b2)


class TestMethodEquivalences:
    def test_beta_zero_identical_to_supervised_only(self):
        a = run_experiment(TrainConfig(method="fpl", beta=0.0, **FAST))
        b = run_experiment(TrainConfig(method="supervised-only", **FAST))
        for ta, tb in zip(a.param_trace, b.param_trace):
            np.testing.assert_array_equal(ta, tb)

    def test_forced_singleton_set_matches_vanilla(self):
        # T below 1/C forces K=1, and unit weights remove the only other
        # difference; the two methods then optimize the same objective
        fpl = run_experiment(
            TrainConfig(method="fpl", T=0.01, use_adaptive_weight=False, **FAST)
        )
        vanilla = run_experiment(TrainConfig(method="vanilla", T=0.01, **FAST))
        for rf, rv in zip(fpl.rows, vanilla.rows):
            assert abs(rf.train_uns_loss - rv.train_uns_loss) < 1e-10
            assert abs(rf.train_sup_loss - rv.train_sup_loss) < 1e-10
        np.testing.assert_allclose(fpl.param_trace[-1], vanilla.param_trace[-1], rtol=0, atol=1e-10)


class TestHiddenLabelFirewall:
    def test_hidden_labels_cannot_influence_training(self):
        cfg = TrainConfig(**FAST)
        data = make_dataset(cfg)
        scrubbed = [
            dataclasses.replace(s, hidden_label=0) if s.split == "unlabeled" else s
            for s in data
        ]
        a = run_experiment(cfg, dataset=data)
        b = run_experiment(cfg, dataset=scrubbed)
        for ta, tb in zip(a.param_trace, b.param_trace):
            np.testing.assert_array_equal(ta, tb)
        # diagnostics, by contrast, do read hidden labels and must differ
        assert (a.rows[-1].case1_count, a.rows[-1].impurity) != (
            b.rows[-1].case1_count,
            b.rows[-1].impurity,
        )


class TestRunExperiment:
    def test_row_shape_and_ranges(self):
        cfg = TrainConfig(**FAST)
        result = run_experiment(cfg)
        assert len(result.rows) == cfg.epochs
        assert len(result.param_trace) == cfg.epochs
        for row in result.rows:
            assert row.case1_count + row.case2_count + row.case3_count == cfg.U
            assert 1.0 <= row.avg_k <= cfg.C - 1
            assert 0.0 <= row.impurity <= 1.0
            assert 0.0 <= row.frac_k1 <= 1.0
            assert 0.0 <= row.test_accuracy <= 1.0
            assert np.isfinite(row.train_sup_loss)
            # logged per-case score means keep the per-instance sign ranges
            if row.case1_count:
                assert 0.0 <= row.mean_r_fuzzy_case1 <= 1.0
                if not np.isnan(row.mean_r_vanilla_case1):
                    assert row.mean_r_vanilla_case1 == 1.0
            if row.case2_count:
                assert 0.0 <= row.mean_r_fuzzy_case2 <= 1.0
                if not np.isnan(row.mean_r_vanilla_case2):
                    assert -1.0 <= row.mean_r_vanilla_case2 <= 0.0
            if row.case3_count:
                assert -1.0 <= row.mean_r_fuzzy_case3 <= 0.0
                if not np.isnan(row.mean_r_vanilla_case3):
                    assert -1.0 <= row.mean_r_vanilla_case3 <= 0.0

    def test_deterministic(self):
        cfg = TrainConfig(**FAST)
        a = run_experiment(cfg)
        b = run_experiment(cfg)
        for ra, rb in zip(a.rows, b.rows):
            # NaN-tolerant equality: empty-case means are NaN by design
            np.testing.assert_equal(dataclasses.asdict(ra), dataclasses.asdict(rb))
        for ta, tb in zip(a.param_trace, b.param_trace):
            np.testing.assert_array_equal(ta, tb)

    def test_supervised_baseline_learns_the_blobs(self):
        cfg = TrainConfig(method="supervised-only", epochs=40)
        result = run_experiment(cfg)
        assert result.rows[-1].test_accuracy >= 0.8

    def test_divergence_reported_with_epoch(self):
        params = dict(FAST, lr=1e308)
        with pytest.raises(TrainingDivergedError) as err:
            with np.errstate(over="ignore", invalid="ignore"):
                run_experiment(TrainConfig(**params))
        assert err.value.epoch >= 1
        assert isinstance(err.value.partial_rows, list)

    def test_empty_labeled_split_rejected(self):
        cfg = TrainConfig(**FAST)
        data = [s for s in make_dataset(cfg) if s.split != "labeled"]
        with pytest.raises(InvalidInputError):
            run_experiment(cfg, dataset=data)


class TestEvaluateAccuracy:
    def test_perfect_and_zero(self):
        model = Model(
            w1=np.eye(2), b1=np.zeros(2), w2=np.eye(2) * 10, b2=np.zeros(2)
        )
        good = [SampleRecord(np.array([3.0, -3.0]), 0, "test"), SampleRecord(np.array([-3.0, 3.0]), 1, "test")]
        flipped = [SampleRecord(np.array([3.0, -3.0]), 1, "test"), SampleRecord(np.array([-3.0, 3.0]), 0, "test")]
        assert evaluate_accuracy(model, good) == 1.0
        assert evaluate_accuracy(model, flipped) == 0.0
