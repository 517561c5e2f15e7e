import math

import numpy as np
import pytest

import pintadj


def small_model(**kwargs):
    options = dict(t_final=1.0, n_steps=128)
    options.update(kwargs)
    return pintadj.ModelConfig(**options)


def test_config_defaults_and_kwargs():
    mc = pintadj.ModelConfig()
    assert mc.n == 100
    assert mc.dim == 102
    mc = small_model(n=10)
    assert mc.n_steps == 128
    assert mc.dim == 12
    sc = pintadj.SolverConfig(max_levels=2, coarsening=2, relaxation=pintadj.Relaxation.F)
    assert sc.max_levels == 2
    assert sc.relaxation == pintadj.Relaxation.F


def test_unknown_option_rejected():
    with pytest.raises(TypeError):
        pintadj.ModelConfig(bogus=1)


def test_invalid_config_raises_value_error():
    with pytest.raises(ValueError):
        pintadj.sequential(small_model(dx=-1.0), 2.0)
    with pytest.raises(pintadj.ConfigError):
        pintadj.mgrit(small_model(n_steps=16), pintadj.SolverConfig(workers=20), 2.0)


def test_sequential_shapes():
    r = pintadj.sequential(small_model(), 2.0)
    assert r["trajectory"].shape == (129, 102)
    assert np.allclose(r["trajectory"][0], 1.0)
    assert math.isfinite(r["objective"]) and r["objective"] > 0.0


def test_mgrit_matches_sequential():
    mc = small_model()
    seq = pintadj.sequential(mc, 2.0)
    sc = pintadj.SolverConfig(max_levels=2, coarsening=2, tol=1e-11, workers=2)
    r = pintadj.mgrit(mc, sc, 2.0)
    assert r["converged"]
    assert len(r["residual_history"]) == r["iterations"]
    assert np.max(np.abs(r["state"] - seq["trajectory"])) < 1e-9


def test_piggyback_gradient_matches_sequential_and_fd():
    mc = small_model()
    seq = pintadj.sequential(mc, 2.0)
    sc = pintadj.SolverConfig(max_levels=2, coarsening=2, tol=1e-11)
    r = pintadj.piggyback(mc, sc, 2.0)
    assert r["converged"]
    assert r["adjoint"].shape == r["state"].shape
    assert r["gradient"] == pytest.approx(seq["gradient"], rel=1e-8)
    fd = pintadj.finite_difference_gradient(mc, 2.0, epsilon=1e-5, scheme="central")
    assert r["gradient"] == pytest.approx(fd, rel=1e-5)


def test_bad_fd_scheme():
    with pytest.raises(ValueError):
        pintadj.finite_difference_gradient(small_model(), 2.0, scheme="backward")
