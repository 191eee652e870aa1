"""Initialization recipes and the restart/continue optimization protocol."""

import math

import numpy as np
import pytest

import ffgp.features as ft
from ffgp.data import make_cosine
from ffgp.errors import (
    DimensionError,
    DomainError,
    InsufficientDataError,
    OptimizationFailureError,
)
from ffgp.gp import nlml_value_and_grad
from ffgp.model import load_model, save_model
from ffgp.train import (
    QUANTILE_LEVELS,
    TrainConfig,
    fit,
    init_ard,
    init_family,
    init_lengthscale_quantiles,
    sample_pair_distances,
)


def test_config_validation():
    TrainConfig()  # defaults fine
    TrainConfig(max_iters=0, restart_iters=0)  # zero budgets are legal
    with pytest.raises(DomainError):
        TrainConfig(restart_count=0)
    with pytest.raises(DomainError):
        TrainConfig(lbfgs_memory=0)
    with pytest.raises(DomainError):
        TrainConfig(max_iters=-1)
    with pytest.raises(DomainError):
        TrainConfig(restart_iters=-1)
    with pytest.raises(DomainError):
        TrainConfig(gradient_tolerance=0.0)
    with pytest.raises(DomainError):
        TrainConfig(seed=-1)


def test_quantile_convention():
    # linear-interpolation quantiles of 1..100 at the five candidate levels
    got = np.quantile(np.arange(1.0, 101.0), QUANTILE_LEVELS)
    np.testing.assert_allclose(got, [10.9, 30.7, 50.5, 70.3, 90.1], rtol=0, atol=1e-12)


def test_pair_distances_shape_and_guards():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((137, 3))
    dists = sample_pair_distances(X, rng)
    assert dists.shape == (28,)  # ceil(137 / 5)
    assert np.all(dists > 0)
    big = rng.standard_normal((50_000, 2))
    assert sample_pair_distances(big, rng).shape == (2000,)  # capped
    with pytest.raises(InsufficientDataError):
        sample_pair_distances(X[:1], rng)
    with pytest.raises(InsufficientDataError):
        sample_pair_distances(np.zeros((40, 2)), rng)


def test_lengthscale_candidates_monotone():
    rng = np.random.default_rng(1)
    X = rng.uniform(0, 5, size=(400, 2))
    cands = init_lengthscale_quantiles(X, rng)
    assert cands.shape == (5,)
    assert np.all(np.diff(cands) >= 0) and cands[0] > 0


def test_init_ard_bounds_and_constant_column():
    rng = np.random.default_rng(2)
    X = np.column_stack([np.linspace(0, 4, 60), np.linspace(-1, 1, 60)])
    d = 2
    for _ in range(20):
        ell = init_ard(X, rng)
        lo = 0.4 * np.array([4.0, 2.0]) * math.sqrt(d)
        hi = 0.8 * np.array([4.0, 2.0]) * math.sqrt(d)
        assert np.all(ell >= lo) and np.all(ell <= hi)
    Xc = X.copy()
    Xc[:, 1] = 7.0
    with pytest.warns(UserWarning, match="constant"):
        ell = init_ard(Xc, rng)
    assert ell[1] == 1.0


def test_gm_init_weights_and_noise():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((100, 2))
    y = np.tile([2.0, -2.0], 50)  # std exactly 2
    spec = ft.KernelSpec.template("gm", 2, 4, 8)
    h = init_family(spec, X, y, rng)
    assert h[0] == math.log(0.2)  # noise std = std(y)/10
    spec0, _ = ft.unpack_hyper(spec, h)
    for idx, _group in spec0.weight_param_info():
        assert math.exp(spec0.params[idx]) == pytest.approx(0.5, rel=1e-12)  # std(y)/Q


def test_frbf_init_amplitude_and_quantile_cycling():
    X = np.linspace(0, 10, 200)[:, None]
    y = np.sin(X[:, 0])
    sy = float(np.std(y))
    spec = ft.KernelSpec.template("frbf", 1, 1, 8)
    ells = []
    for r in range(5):
        rng = np.random.default_rng(42)  # same draws, only the cycle index moves
        h = init_family(spec, X, y, rng, restart=r)
        spec0, _ = ft.unpack_hyper(spec, h)
        assert math.exp(spec0.params[0]) == pytest.approx(sy, rel=1e-12)
        ells.append(math.exp(spec0.params[1]))
    assert np.all(np.diff(ells) > 0)  # candidates cycle through rising quantiles


def test_fsgbard_init_copies_stack_diagonals():
    spec = ft.KernelSpec.template("fsgbard", 3, 2, 8)
    stacks = ft.build_stacks(spec, seed=9)
    spec = ft.KernelSpec.fsgbard_from_stacks(3, 2, 8, np.ones(3), stacks)
    rng = np.random.default_rng(4)
    X = rng.standard_normal((50, 3))
    y = rng.standard_normal(50)
    h = init_family(spec, X, y, rng)
    spec0, _ = ft.unpack_hyper(spec, h)
    for q, stack in enumerate(stacks):
        np.testing.assert_array_equal(spec0.g_raw(q), stack.g_diag)
        np.testing.assert_array_equal(spec0.b_raw(q), stack.b_diag)


def test_init_family_rejects_bad_explore():
    spec = ft.KernelSpec.template("frbf", 1, 1, 4)
    X = np.linspace(0, 1, 10)[:, None]
    with pytest.raises(DomainError):
        init_family(spec, X, np.zeros(10), np.random.default_rng(0), explore=1.5)


def test_zero_iteration_fit_returns_best_init():
    X, y = make_cosine(60, seed=0)
    spec = ft.KernelSpec.template("frbf", 1, 1, 16)
    config = TrainConfig(max_iters=0, restart_count=3, restart_iters=0, seed=5)
    model, nlml = fit(spec, X, y, config)

    stacks = ft.build_stacks(spec, config.seed)
    values = []
    for r in range(3):
        rng = np.random.default_rng(np.random.SeedSequence((config.seed, 1000 + r)))
        explore = 0.0 if r == 0 else r / 2
        h0 = init_family(spec, X, y, rng, explore=explore, restart=r)
        f0, _ = nlml_value_and_grad(spec, stacks, X, y, h0)
        values.append(f0)
    assert nlml == pytest.approx(min(values), rel=1e-12)
    assert model.nlml == nlml


def test_fit_is_deterministic(tmp_path):
    X, y = make_cosine(50, seed=1)
    spec = ft.KernelSpec.template("gm", 1, 2, 8)
    config = TrainConfig(max_iters=5, restart_count=2, restart_iters=3, seed=7)
    pa, pb = tmp_path / "a.bin", tmp_path / "b.bin"
    save_model(fit(spec, X, y, config)[0], pa)
    save_model(fit(spec, X, y, config)[0], pb)
    assert pa.read_bytes() == pb.read_bytes()


def test_fit_improves_on_initialization():
    X, y = make_cosine(80, seed=2)
    spec = ft.KernelSpec.template("frbf", 1, 1, 16)
    _, nlml0 = fit(spec, X, y, TrainConfig(max_iters=0, restart_count=1, restart_iters=0, seed=0))
    _, nlml1 = fit(spec, X, y, TrainConfig(max_iters=30, restart_count=1, restart_iters=0, seed=0))
    assert nlml1 < nlml0


def test_fit_shape_validation():
    spec = ft.KernelSpec.template("frbf", 2, 1, 8)
    X = np.zeros((10, 2))
    with pytest.raises(DimensionError):
        fit(spec, X, np.zeros(9), TrainConfig())
    with pytest.raises(DimensionError):
        fit(spec, np.zeros((10, 3)), np.zeros(10), TrainConfig())


def test_fit_rejects_nonfinite_inputs():
    spec = ft.KernelSpec.template("frbf", 1, 1, 8)
    X = np.linspace(0, 1, 10)[:, None]
    y = np.zeros(10)
    y[3] = np.nan
    with pytest.raises(DomainError):
        fit(spec, X, y, TrainConfig())
    with pytest.raises(DomainError):  # finite but statistics overflow
        fit(spec, X, np.tile([1e200, -1e200], 5), TrainConfig())


def test_all_restarts_diverging_raises(monkeypatch):
    # force every likelihood evaluation to diverge; the protocol must
    # surface the failure with the first endpoint attached
    import ffgp.train as tr

    spec = ft.KernelSpec.template("frbf", 1, 1, 8)
    monkeypatch.setattr(
        tr, "nlml_value_and_grad", lambda *a, **k: (np.inf, np.zeros(spec.n_hypers))
    )
    X, y = make_cosine(20, seed=6)
    config = TrainConfig(max_iters=0, restart_count=2, restart_iters=0, seed=0)
    with pytest.raises(OptimizationFailureError) as err:
        fit(spec, X, y, config)
    assert err.value.best_value == np.inf
    assert err.value.best_hyper.shape == (spec.n_hypers,)


def test_fit_roundtrips_through_file(tmp_path):
    X, y = make_cosine(40, seed=3)
    spec = ft.KernelSpec.template("fard", 1, 1, 8)
    model, _ = fit(spec, X, y, TrainConfig(max_iters=3, restart_count=1, restart_iters=2, seed=2))
    path = tmp_path / "m.bin"
    save_model(model, path)
    loaded = load_model(path)
    xs = np.linspace(0, 10, 25)[:, None]
    m1, v1 = model.predict(xs)
    m2, v2 = loaded.predict(xs)
    np.testing.assert_array_equal(m1, m2)
    np.testing.assert_array_equal(v1, v2)
