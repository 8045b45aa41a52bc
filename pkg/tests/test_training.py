import numpy as np
import pytest

from solarcast import pipeline
from solarcast.errors import ConfigurationError, DivergenceError, ShapeError
from solarcast.features import FeatureConfig, DatasetSplit
from solarcast import training
from solarcast.rnn import RnnDims, RnnParams, forward, init_params, load_checkpoint
from solarcast.synthetic import TOY_LEARNING_RATE, TOY_TRAIN_SEED, toy_problem
from solarcast.training import TrainConfig, TrainReport, fit_arrays, predict, sgd_step, train

from conftest import BON


@pytest.fixture(scope="module")
def small_split():
    cfg = FeatureConfig(stride=60)
    return pipeline.synthetic_split(BON, cfg, seed=1, train_days=6, test_days=3)


def _const_params(value, shape=(1, 1)):
    return RnnParams(*(np.full(s, value) for s in [shape, (1, 1), (1,), (1, 1), (1,)]))


def test_sgd_arithmetic():
    out = sgd_step(_const_params(1.0), _const_params(0.5), 0.1)
    for a in out.arrays():
        assert a.item() == pytest.approx(0.95, abs=1e-15)


def test_sgd_zero_gradient_and_zero_lr():
    p = init_params(RnnDims(3, 4, 1, 2), 0)
    zeros = RnnParams(*(np.zeros_like(a) for a in p.arrays()))
    assert sgd_step(p, zeros, 0.1).equal(p)
    assert sgd_step(p, p, 0.0).equal(p)


def test_sgd_shape_mismatch():
    p = init_params(RnnDims(3, 4), 0)
    with pytest.raises(ShapeError):
        sgd_step(p, init_params(RnnDims(2, 4), 0), 0.1)


def test_zero_epochs_returns_init():
    X, y = toy_problem()
    dims = RnnDims(4, 8, 1, 1, 5)
    params, report = fit_arrays(dims, X, y, epochs=0, seed=3)
    assert params.equal(init_params(dims, 3))
    assert report.train_mse == []


def test_descent_sanity_on_toy():
    X, y = toy_problem()
    _, report = fit_arrays(RnnDims(4, 8, 1, 1, 5), X, y, epochs=100, batch_size=10,
                           learning_rate=TOY_LEARNING_RATE, seed=TOY_TRAIN_SEED)
    assert report.train_mse[99] < report.train_mse[0]


def test_toy_overfit_short():
    X, y = toy_problem()
    _, report = fit_arrays(RnnDims(4, 8, 1, 1, 5), X, y, epochs=1500, batch_size=10,
                           learning_rate=TOY_LEARNING_RATE, seed=TOY_TRAIN_SEED)
    assert report.train_mse[-1] < 1e-3


def test_initial_lr_of_halving_schedule_fails_on_toy():
    # documents why the pinned rate is half of 1.0
    X, y = toy_problem()
    _, report = fit_arrays(RnnDims(4, 8, 1, 1, 5), X, y, epochs=300, batch_size=10,
                           learning_rate=1.0, seed=TOY_TRAIN_SEED)
    assert report.train_mse[-1] > report.train_mse[0]


def test_partial_last_batch_is_used():
    X, y = toy_problem(n=7)
    dims = RnnDims(4, 3, 1, 1, 5)
    a, _ = fit_arrays(dims, X, y, epochs=1, batch_size=5, learning_rate=0.1, seed=0)
    b, _ = fit_arrays(dims, X[:5], y[:5], epochs=1, batch_size=5, learning_rate=0.1, seed=0)
    assert not a.equal(b)


def test_divergence_raises_with_epoch():
    X, y = toy_problem()
    with pytest.raises(DivergenceError) as info:
        fit_arrays(RnnDims(4, 8, 1, 1, 5), X * 1e150, y, epochs=5, learning_rate=1e10, seed=0)
    assert info.value.epoch == 1
    assert info.value.exit_code == 4


def test_train_deterministic(small_split):
    cfg = TrainConfig.parse_mode("multi:1,2,3,4", epochs=3, learning_rate=0.01, seed=5)
    p1, r1 = train(cfg, small_split)
    p2, r2 = train(cfg, small_split)
    assert p1.equal(p2)
    assert r1.train_mse == r2.train_mse and r1.test_mse == r2.test_mse


def test_test_split_has_no_influence(small_split):
    cfg = TrainConfig.parse_mode("multi:1,2,3,4", epochs=3, learning_rate=0.01, seed=5)
    with_test, r1 = train(cfg, small_split)
    no_test = DatasetSplit(small_split.train, small_split.test[np.zeros(0, dtype=int)],
                           small_split.norm, small_split.train_years, small_split.test_years)
    without, r2 = train(cfg, no_test)
    assert with_test.equal(without)
    assert r1.train_mse == r2.train_mse
    assert all(np.isnan(r2.test_mse)) and all(np.isfinite(r1.test_mse))


def test_fixed_mode_selects_one_output(small_split):
    cfg = TrainConfig.parse_mode("fixed:3", epochs=1, learning_rate=0.01)
    params, _ = train(cfg, small_split)
    assert params.W_yh.shape[0] == 1
    assert cfg.horizons == (3,)


def test_missing_horizon_rejected(small_split):
    with pytest.raises(ConfigurationError):
        train(TrainConfig.parse_mode("fixed:6", epochs=1), small_split)


@pytest.mark.parametrize("text", ["fixed:1,2", "multi:", "bogus:1", "multi:a", "fixed:0"])
def test_bad_modes(text):
    with pytest.raises(ConfigurationError):
        TrainConfig.parse_mode(text)


def test_mode_string_round_trip():
    cfg = TrainConfig.parse_mode("multi:1,2,3,4")
    assert cfg.mode_string == "multi:1,2,3,4"


def test_checkpoint_written_every_k(small_split, tmp_path, monkeypatch):
    saved = []
    real_save = training.save_checkpoint

    def spy(path, params, dims):
        saved.append(params.copy())
        real_save(path, params, dims)

    monkeypatch.setattr(training, "save_checkpoint", spy)
    path = tmp_path / "m.ckpt"
    cfg = TrainConfig.parse_mode("fixed:1", epochs=5, learning_rate=0.01, checkpoint_every=2)
    params, _ = train(cfg, small_split, checkpoint_path=path)
    assert len(saved) == 3  # epochs 2 and 4, then the final parameters
    assert saved[-1].equal(params) and not saved[0].equal(params)
    back, dims = load_checkpoint(path)
    assert back.equal(params)
    assert dims.seq_len == 60 and dims.input_dim == 22


def test_report_csv_round_trip(tmp_path):
    rep = TrainReport([0.5, 0.25], [float("nan"), 0.125])
    rep.write_csv(tmp_path / "r.csv")
    back = TrainReport.read_csv(tmp_path / "r.csv")
    assert back.train_mse == [0.5, 0.25]
    assert np.isnan(back.test_mse[0]) and back.test_mse[1] == 0.125
    assert (tmp_path / "r.csv").read_text().splitlines()[0] == "epoch,train_mse,test_mse"


# -- predict ----------------------------------------------------------------------

def test_predict_night_is_zero(small_split):
    params = init_params(RnnDims(22, 15, 1, 4, 60), 0)
    kt, ghi = predict(params, small_split.test.inputs[0], small_split.norm, np.zeros(4))
    assert (ghi == 0).all()
    assert ((kt >= 0) & (kt <= 2)).all()


def test_predict_unit_kt_gives_clear_sky(small_split):
    stats = small_split.norm.select((1,))
    params = RnnParams(np.zeros((1, 22)), np.zeros((1, 1)), np.zeros(1), np.zeros((1, 1)),
                       np.array([(1.0 - stats.target_mean[0]) / stats.target_std[0]]))
    kt, ghi = predict(params, small_split.test.inputs[0], stats, [600.0])
    assert kt[0] == pytest.approx(1.0, abs=1e-12)
    assert ghi[0] == pytest.approx(600.0, abs=1e-9)


def test_predict_from_checkpoint_recomposes(small_split, tmp_path):
    cfg = TrainConfig.parse_mode("multi:1,2,3,4", epochs=2, learning_rate=0.01)
    params, _ = train(cfg, small_split, checkpoint_path=tmp_path / "m.ckpt")
    loaded, _ = load_checkpoint(tmp_path / "m.ckpt")
    window = small_split.test.inputs[2]
    cs = small_split.test.clearsky[2]
    kt, ghi = predict(loaded, window, small_split.norm, cs)
    manual = forward(params, window).output * small_split.norm.target_std + small_split.norm.target_mean
    manual = np.clip(manual, 0, 2)
    np.testing.assert_array_equal(kt, manual)
    np.testing.assert_array_equal(ghi, manual * cs)


def test_predict_shape_errors(small_split):
    params = init_params(RnnDims(22, 15, 1, 4, 60), 0)
    with pytest.raises(ShapeError):
        predict(params, np.zeros((60, 3)), small_split.norm, np.zeros(4))
    with pytest.raises(ShapeError):
        predict(params, small_split.test.inputs[0], small_split.norm, np.zeros(2))
