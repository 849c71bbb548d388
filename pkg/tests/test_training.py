import numpy as np
import pytest

from fairboost.adversary import init_xavier
from fairboost.cart import TreeParams, fit_tree
from fairboost.data import Dataset
from fairboost.errors import ConfigError, DataError
from fairboost.synthetic import generate
from fairboost.training import (
    TRACE_COLUMNS,
    BoostingModel,
    TrainConfig,
    adversary_residuals,
    classify,
    combine_residuals,
    init_f0,
    line_search_gamma,
    load_model,
    predict_proba,
    predict_scores,
    predictor_loss,
    predictor_residuals,
    save_model,
    train,
)
from fairboost.adversary import AdversaryNet, adversary_loss, forward
from fairboost.util import sigmoid


def one_unit(w, b):
    return AdversaryNet(weights=[np.array([[w]])], biases=[np.array([b])])


def constant_model(f0, stages=(), mode="plain", feature_names=("x",)):
    return BoostingModel(
        mode=mode,
        f0=f0,
        stages=list(stages),
        adversary=None,
        config=TrainConfig(iterations=0),
        feature_names=list(feature_names),
    )


class TestInitF0:
    def test_balanced_labels(self):
        assert init_f0([1, 0]) == 0.0

    def test_matches_numeric_argmin(self):
        y = np.array([1, 1, 1, 0], dtype=float)
        grid = np.linspace(-5, 5, 200001)
        losses = [np.sum(predictor_loss(y, np.full(4, g))) for g in grid]
        best = grid[int(np.argmin(losses))]
        assert init_f0(y) == pytest.approx(np.log(3), abs=1e-9)
        assert init_f0(y) == pytest.approx(best, abs=1e-4)

    def test_single_class_clipped(self):
        want = np.log(0.875 / 0.125)
        assert init_f0([1, 1, 1, 1]) == pytest.approx(want, abs=1e-12)
        assert want == pytest.approx(1.945910, abs=1e-6)


class TestPredictorLoss:
    def test_symmetric_point(self):
        assert predictor_loss(1, 0.0) == pytest.approx(0.6931471805599453, abs=1e-12)
        assert predictor_loss(0, 0.0) == pytest.approx(0.6931471805599453, abs=1e-12)

    def test_confident_correct(self):
        assert predictor_loss(1, 2.0) == pytest.approx(-np.log(sigmoid(2.0)), abs=1e-12)
        assert predictor_loss(1, 2.0) == pytest.approx(0.126928, abs=1e-6)


class TestPredictorResiduals:
    def test_half_points(self):
        assert predictor_residuals(np.array([1.0]), np.array([0.0]))[0] == 0.5
        assert predictor_residuals(np.array([0.0]), np.array([0.0]))[0] == -0.5

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        y = rng.integers(0, 2, size=200).astype(float)
        F = rng.normal(scale=2.0, size=200)
        h = 1e-5
        fd = -(predictor_loss(y, F + h) - predictor_loss(y, F - h)) / (2 * h)
        r = predictor_residuals(y, F)
        denom = np.maximum(np.abs(r), 1e-8)
        assert np.max(np.abs(r - fd) / denom) < 1e-6

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            predictor_residuals(np.zeros(3), np.zeros(4))


class TestAdversaryResiduals:
    def test_zero_net_gives_zero(self):
        net = init_xavier([1, 8, 1], seed=0)
        for w in net.weights:
            w[:] = 0.0
        t = adversary_residuals(net, np.zeros(5), np.zeros(5), np.ones(5), "demographic_parity")
        assert np.array_equal(t, np.zeros(5))

    def test_one_unit_closed_form(self):
        w, b = 1.3, -0.4
        net = one_unit(w, b)
        F = np.array([0.7, -1.2])
        s = np.array([1.0, 0.0])
        t = adversary_residuals(net, F, np.zeros(2), s, "demographic_parity")
        p = sigmoid(F)
        want = -(sigmoid(w * p + b) - s) * w * p * (1 - p)
        assert t == pytest.approx(want, abs=1e-12)

    def test_matches_finite_differences_dp(self):
        rng = np.random.default_rng(1)
        net = init_xavier([1, 16, 8, 1], seed=3)
        F = rng.normal(size=40)
        s = rng.integers(0, 2, size=40)
        y = rng.integers(0, 2, size=40)
        t = adversary_residuals(net, F, y, s, "demographic_parity")
        h = 1e-5
        for i in range(40):
            up = adversary_loss(net, np.array([sigmoid(F[i] + h)]), s[i])
            down = adversary_loss(net, np.array([sigmoid(F[i] - h)]), s[i])
            fd = -(up - down) / (2 * h)
            denom = max(abs(t[i]), abs(fd), 1e-8)
            assert abs(t[i] - fd) / denom < 1e-4

    def test_matches_finite_differences_eo(self):
        rng = np.random.default_rng(2)
        net = init_xavier([2, 16, 8, 1], seed=4)
        F = rng.normal(size=30)
        s = rng.integers(0, 2, size=30)
        y = rng.integers(0, 2, size=30).astype(float)
        t = adversary_residuals(net, F, y, s, "equalized_odds")
        h = 1e-5
        for i in range(30):
            up = adversary_loss(net, np.array([sigmoid(F[i] + h), y[i]]), s[i])
            down = adversary_loss(net, np.array([sigmoid(F[i] - h), y[i]]), s[i])
            fd = -(up - down) / (2 * h)
            denom = max(abs(t[i]), abs(fd), 1e-8)
            assert abs(t[i] - fd) / denom < 1e-4

    def test_mode_net_mismatch(self):
        net = init_xavier([1, 4, 1], seed=5)
        with pytest.raises(ConfigError):
            adversary_residuals(net, np.zeros(3), np.zeros(3), np.ones(3), "equalized_odds")
        with pytest.raises(ConfigError):
            adversary_residuals(net, np.zeros(3), np.zeros(3), np.ones(3), "plain")


class TestCombineResiduals:
    def test_lambda_zero_identity(self):
        r = np.array([0.1, -0.4])
        t = np.array([5.0, 5.0])
        assert np.array_equal(combine_residuals(r, t, 0.0), r)

    def test_arithmetic(self):
        assert combine_residuals(np.array([0.5]), np.array([0.2]), 1.0)[0] == pytest.approx(0.3)
        assert combine_residuals(np.array([0.5]), np.array([0.2]), 0.015)[0] == pytest.approx(0.497)

    def test_validation(self):
        with pytest.raises(ValueError):
            combine_residuals(np.zeros(2), np.zeros(3), 0.0)
        with pytest.raises(ValueError):
            combine_residuals(np.zeros(2), np.zeros(2), -1.0)


class TestLineSearch:
    def test_zero_direction_returns_zero(self):
        out = line_search_gamma(np.zeros(4), np.zeros(4), np.ones(4), np.ones(4), None, 0.0, "plain")
        assert out == 0.0

    def test_monotone_objective_hits_upper_bound(self):
        out = line_search_gamma(
            np.array([0.0]), np.array([1.0]), np.array([1.0]), np.array([1.0]), None, 0.0, "plain",
            gamma_max=4.0,
        )
        assert out == pytest.approx(4.0, abs=1e-3)

    def test_beats_grid_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            n = 30
            F = rng.normal(size=n)
            h = rng.normal(size=n)
            y = rng.integers(0, 2, size=n).astype(float)
            got = line_search_gamma(F, h, y, np.ones(n), None, 0.0, "plain", gamma_max=4.0)
            obj = lambda g: float(np.sum(predictor_loss(y, F + g * h)))
            grid_best = min(obj(g) for g in np.linspace(0, 4, 101))
            assert obj(got) <= grid_best + 1e-6


class TestPredict:
    def test_intercept_only_tie_rule(self):
        model = constant_model(0.0)
        X = np.zeros((3, 1))
        assert np.all(predict_proba(model, X) == 0.5)
        assert np.all(classify(model, X) == 0)

    def test_log3_gives_three_quarters(self):
        model = constant_model(np.log(3.0))
        assert predict_proba(model, np.zeros((1, 1)))[0] == pytest.approx(0.75, abs=1e-12)

    def test_single_stage(self):
        leaf = fit_tree(np.zeros((2, 1)), np.ones(2), TreeParams(max_depth=0))
        model = constant_model(0.0, stages=[(leaf, 1.0)])
        assert predict_scores(model, np.zeros((1, 1)))[0] == 1.0
        assert predict_proba(model, np.zeros((1, 1)))[0] == pytest.approx(0.7310585786300049, abs=1e-12)

    def test_dimension_mismatch(self):
        model = constant_model(0.0)
        with pytest.raises(ValueError):
            predict_scores(model, np.zeros((2, 3)))

    def test_score_additivity(self):
        ds = generate(300, seed=5)
        model, _ = train(ds, TrainConfig(iterations=10, seed=1, validation_fraction=0.0))
        partial = BoostingModel(
            mode=model.mode,
            f0=model.f0,
            stages=model.stages[:-1],
            adversary=None,
            config=model.config,
            feature_names=model.feature_names,
        )
        tree, gamma = model.stages[-1]
        full = predict_scores(model, ds.features)
        stepwise = predict_scores(partial, ds.features) + gamma * tree.predict(ds.features)
        assert np.array_equal(full, stepwise)


class TestTrainConfig:
    def test_lambda_key_mapping(self):
        cfg = TrainConfig.from_dict({"iterations": 5, "lambda": 0.02})
        assert cfg.lam == 0.02
        assert cfg.to_dict()["lambda"] == 0.02

    def test_unknown_field_named(self):
        with pytest.raises(ConfigError, match="bogus"):
            TrainConfig.from_dict({"iterations": 5, "bogus": 1})

    def test_missing_iterations(self):
        with pytest.raises(ConfigError, match="iterations"):
            TrainConfig.from_dict({"mode": "plain"})

    def test_bad_values_named(self):
        for field, value in [
            ("iterations", -1),
            ("mode", "fair"),
            ("lambda", -0.1),
            ("shrinkage", 0.0),
            ("adversary_lr", 0.0),
            ("adversary_steps_per_iter", 0),
            ("warmstart_iters", -2),
            ("max_depth", -1),
            ("min_samples_leaf", 0),
            ("adversary_layers", [0]),
            ("adversary_optimizer", "rmsprop"),
            ("validation_fraction", 1.0),
            ("gamma_max", 0.0),
        ]:
            d = {"iterations": 5, field: value}
            with pytest.raises(ConfigError, match=field.replace("lam", "lam")):
                TrainConfig.from_dict(d)

    def test_type_checks(self):
        with pytest.raises(ConfigError, match="iterations"):
            TrainConfig.from_dict({"iterations": 2.5})
        with pytest.raises(ConfigError, match="use_line_search"):
            TrainConfig.from_dict({"iterations": 2, "use_line_search": "yes"})

    def test_round_trip(self):
        cfg = TrainConfig(iterations=7, mode="equalized_odds", lam=0.05, seed=9)
        assert TrainConfig.from_dict(cfg.to_dict()) == cfg


class TestTrain:
    def test_lambda_zero_equals_plain(self):
        ds = generate(400, seed=6)
        base = dict(iterations=25, max_depth=2, warmstart_iters=5, seed=11)
        plain, _ = train(ds, TrainConfig(mode="plain", **base))
        fair, _ = train(ds, TrainConfig(mode="demographic_parity", lam=0.0, **base))
        assert plain.f0 == fair.f0
        assert len(plain.stages) == len(fair.stages)
        for (ta, ga), (tb, gb) in zip(plain.stages, fair.stages):
            assert ga == gb
            assert ta.to_dict() == tb.to_dict()
        assert np.array_equal(predict_scores(plain, ds.features), predict_scores(fair, ds.features))
        assert fair.adversary is not None and plain.adversary is None

    def test_zero_iterations(self):
        ds = generate(500, seed=7)
        model, trace = train(ds, TrainConfig(iterations=0, validation_fraction=0.0))
        assert model.stages == [] and len(trace) == 0
        preds = classify(model, ds.features)
        base = ds.labels.mean()
        assert (preds == ds.labels).mean() == pytest.approx(max(base, 1 - base))

    def test_training_loss_descends_plain(self):
        ds = generate(800, seed=8)
        _, trace = train(
            ds,
            TrainConfig(iterations=60, shrinkage=0.3, max_depth=3, validation_fraction=0.0, seed=2),
        )
        losses = trace.column("pred_loss")
        assert np.all(np.diff(losses) <= 1e-9)

    def test_trace_shape(self):
        ds = generate(300, seed=9)
        _, trace = train(ds, TrainConfig(iterations=7, seed=3))
        assert len(trace) == 7
        assert [row["iter"] for row in trace.rows] == list(range(1, 8))
        assert set(trace.rows[0]) == set(TRACE_COLUMNS)

    def test_trace_without_validation_has_nan_val_columns(self):
        ds = generate(300, seed=10)
        _, trace = train(ds, TrainConfig(iterations=3, validation_fraction=0.0, seed=4))
        assert np.isnan(trace.final("val_acc"))
        assert np.isfinite(trace.final("train_acc"))

    def test_plain_mode_has_nan_adv_loss(self):
        ds = generate(300, seed=11)
        _, trace = train(ds, TrainConfig(iterations=3, seed=5))
        assert np.isnan(trace.final("adv_loss"))

    def test_eo_mode_smoke(self):
        ds = generate(600, seed=12)
        model, trace = train(
            ds,
            TrainConfig(
                iterations=15,
                mode="equalized_odds",
                lam=0.01,
                warmstart_iters=5,
                seed=6,
            ),
        )
        assert model.adversary.d_in == 2
        assert np.isfinite(trace.final("adv_loss"))

    def test_line_search_mode(self):
        ds = generate(400, seed=13)
        model, trace = train(
            ds,
            TrainConfig(iterations=10, use_line_search=True, gamma_max=2.0, validation_fraction=0.0, seed=7),
        )
        gammas = [g for _, g in model.stages]
        assert all(0.0 <= g <= 2.0 for g in gammas)
        losses = trace.column("pred_loss")
        assert losses[-1] < losses[0]

    def test_adversary_cannot_beat_chance_on_independent_attribute(self):
        ds = generate(10000, seed=14)
        coin = np.random.default_rng(99).integers(0, 2, size=ds.n)
        shuffled = Dataset(ds.features, coin, ds.labels, ds.feature_names)
        cfg = TrainConfig(
            iterations=60,
            mode="demographic_parity",
            lam=0.015,
            warmstart_iters=20,
            seed=8,
        )
        model, _ = train(shuffled, cfg)
        v = sigmoid(predict_scores(model, shuffled.features))[:, None]
        adv_preds = (sigmoid(forward(model.adversary, v)) > 0.5).astype(int)
        adv_acc = (adv_preds == coin).mean()
        base = max(coin.mean(), 1 - coin.mean())
        assert abs(adv_acc - base) <= 0.03

    def test_determinism(self):
        ds = generate(400, seed=15)
        cfg = TrainConfig(iterations=12, mode="demographic_parity", lam=0.02, warmstart_iters=4, seed=9)
        a, ta = train(ds, cfg)
        b, tb = train(ds, cfg)
        assert np.array_equal(predict_scores(a, ds.features), predict_scores(b, ds.features))
        assert ta.rows == tb.rows


class TestModelSerialization:
    def test_round_trip(self, tmp_path):
        ds = generate(300, seed=16)
        model, _ = train(
            ds, TrainConfig(iterations=8, mode="demographic_parity", lam=0.01, warmstart_iters=2, seed=10)
        )
        path = tmp_path / "model.json"
        save_model(model, path)
        clone = load_model(path)
        assert clone.mode == model.mode
        assert clone.f0 == model.f0
        assert clone.config == model.config
        assert clone.feature_names == model.feature_names
        assert np.array_equal(predict_scores(clone, ds.features), predict_scores(model, ds.features))

    def test_corrupt_file_rejected(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text("{broken")
        with pytest.raises(DataError, match="invalid model JSON"):
            load_model(path)

    def test_trace_csv_text(self):
        ds = generate(200, seed=17)
        _, trace = train(ds, TrainConfig(iterations=2, validation_fraction=0.0, seed=11))
        text = trace.to_csv_text()
        lines = text.strip().split("\n")
        assert lines[0] == ",".join(TRACE_COLUMNS)
        assert len(lines) == 3
        assert lines[1].startswith("1,")
