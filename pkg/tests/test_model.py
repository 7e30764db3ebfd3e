import dataclasses

import numpy as np
import pytest

from tpamtl.errors import EmptyTrainingSet, ParseError, SingleClass
from tpamtl.model import ModelMode, TrainedModel, dumps_model, loads_model, predict, predict_many, train
from tpamtl.optimizer import Hyperparams, objective, one_hot
from tpamtl.patterns import MiningConfig, featurize_many, mine
from tpamtl.synthgen import benchmark_templates, generate, separable_templates


@pytest.fixture(scope="module")
def separable():
    return generate(separable_templates(2), 10, seed=1)


@pytest.fixture(scope="module")
def noisy():
    return generate(benchmark_templates(0.3), 8, seed=2)


def test_separable_training_accuracy(separable):
    model = train(separable)
    assert model.info["train_accuracy"] == 1.0
    assert model.info["outer_iterations"] <= 50
    assert all(predict(model, a)[0] == a.label for a in separable)


def test_errors(separable):
    with pytest.raises(EmptyTrainingSet):
        train([])
    one_class = [a for a in separable if a.label == 0]
    with pytest.raises(SingleClass):
        train(one_class)


@pytest.mark.parametrize(
    "mode, reduced_hp",
    [
        (ModelMode.MTL, Hyperparams(0.05, 0.001, 0.0)),
        (ModelMode.GL, Hyperparams(0.0, 0.001, 0.01)),
    ],
)
def test_mode_reductions(noisy, mode, reduced_hp):
    base = train(noisy, hp=Hyperparams(0.05, 0.001, 0.01), mode=mode)
    full = train(noisy, hp=reduced_hp, mode=ModelMode.AMTL)
    assert np.linalg.norm(base.W - full.W) < 1e-6
    X = featurize_many(noisy, base.feature_space)
    Y = one_hot([a.label for a in noisy], 4)
    omega = np.eye(4) / 4 if base.omega is None else base.omega
    eff = mode.effective(Hyperparams(0.05, 0.001, 0.01))
    assert objective(X, Y, base.W, omega, eff) == objective(X, Y, base.W, omega, reduced_hp)


def test_lasso_mode_is_sparse_elementwise(noisy):
    model = train(noisy, hp=Hyperparams(0.0, 0.001, 0.5), mode="lasso")
    assert model.omega is None
    assert np.count_nonzero(model.W) < model.W.size
    assert model.info["train_accuracy"] > 0.5


def test_predict_zero_weights_ties_to_first(separable):
    model = train(separable)
    zero = dataclasses.replace(model, W=np.zeros_like(model.W))
    cls, scores = predict(zero, separable[-1])
    assert cls == 0
    np.testing.assert_array_equal(scores, 0.0)


def test_argmax_scale_invariance(noisy):
    model = train(noisy)
    scaled = dataclasses.replace(model, W=3.7 * model.W)
    for a in noisy:
        assert predict(model, a)[0] == predict(scaled, a)[0]


def test_predict_is_pure(noisy):
    model = train(noisy)
    c1, s1 = predict(model, noisy[3])
    c2, s2 = predict(model, noisy[3])
    assert c1 == c2 and s1.tobytes() == s2.tobytes()


def test_standardize_recorded_and_applied(noisy):
    model = train(noisy, standardize=True)
    assert model.center is not None and model.scale is not None
    back = loads_model(dumps_model(model))
    np.testing.assert_array_equal(predict_many(model, noisy), predict_many(back, noisy))


def test_precomputed_feature_space(noisy):
    fs = mine(noisy, MiningConfig())
    a = train(noisy, feature_space=fs)
    b = train(noisy)
    assert a.W.tobytes() == b.W.tobytes()


class TestSerialization:
    def test_round_trip_bit_exact(self, noisy):
        model = train(noisy, label_names=["a", "b", "c", "d"])
        text = dumps_model(model)
        back = loads_model(text)
        assert back.W.tobytes() == model.W.tobytes()
        assert back.omega.tobytes() == model.omega.tobytes()
        assert back.label_names == ["a", "b", "c", "d"]
        assert back.feature_space.patterns == model.feature_space.patterns
        for act in noisy:
            assert predict(back, act)[1].tobytes() == predict(model, act)[1].tobytes()
        assert dumps_model(back) == text

    def test_gl_model_has_no_omega(self, noisy):
        model = train(noisy, mode="gl")
        back = loads_model(dumps_model(model))
        assert back.omega is None and back.mode is ModelMode.GL

    def test_deterministic_bytes(self, noisy):
        assert dumps_model(train(noisy)) == dumps_model(train(list(noisy)))

    def test_rejects_garbage(self):
        with pytest.raises(ParseError):
            loads_model("hello\n")

    def test_shape_invariant(self, noisy):
        model = train(noisy)
        with pytest.raises(ValueError):
            TrainedModel(model.feature_space, model.W[:-1], model.label_names, model.mode, model.hyperparams)
