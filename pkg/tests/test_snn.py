import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from simplicial.complex import SimplicialComplex, distance_matrix
from simplicial.snn import (
    AdamState,
    ConvLayer,
    SnnModel,
    TrainConfig,
    TrainingDivergedError,
    adam_step,
    conv_forward,
    gradients,
    init_model,
    l1_masked_loss,
    model_forward,
    read_model,
    train,
    write_model,
)
from simplicial.spectral import hodge_laplacian

from conftest import FIG1_EDGE_CITATIONS, FIG1_L1, random_complex
from oracles import dense_forward, finite_difference_check, relative_error

GOLDEN = __import__("pathlib").Path(__file__).parent / "data" / "golden_forward_fig1.txt"


def single(weights, slope=None, bias=0.0):
    return ConvLayer(np.array(weights, float).reshape(1, 1, -1), [bias], slope)


@pytest.fixture
def lap1(fig1):
    return hodge_laplacian(fig1, 1)


def test_conv_identity_filter(lap1):
    x = FIG1_EDGE_CITATIONS[None, :]
    np.testing.assert_array_equal(conv_forward(single([1.0]), lap1, x), x)


def test_conv_first_power(lap1):
    out = conv_forward(single([0.0, 1.0]), lap1, FIG1_EDGE_CITATIONS[None, :])
    np.testing.assert_array_equal(out[0], FIG1_L1 @ FIG1_EDGE_CITATIONS)
    np.testing.assert_array_equal(out[0], [460, 306, 274, 296, -182])


def test_conv_leaky_relu(lap1):
    out = conv_forward(single([0.0, 1.0], slope=0.01), lap1, FIG1_EDGE_CITATIONS[None, :])
    np.testing.assert_allclose(out[0], [460, 306, 274, 296, -1.82], rtol=1e-15)


def test_conv_shape_errors(lap1):
    with pytest.raises(ValueError):
        conv_forward(single([1.0]), lap1, np.ones((2, 5)))
    with pytest.raises(ValueError):
        conv_forward(single([1.0]), lap1, np.ones((1, 4)))


def test_layer_validation():
    with pytest.raises(ValueError):
        ConvLayer(np.ones((1, 1, 2)), [0.0], slope=1.5)
    with pytest.raises(ValueError):
        ConvLayer(np.full((1, 1, 1), np.inf), [0.0])
    with pytest.raises(ValueError, match="identity"):
        SnnModel([single([1.0], slope=0.01)])
    with pytest.raises(ValueError, match="channel"):
        SnnModel([ConvLayer(np.ones((2, 1, 1)), np.zeros(2), 0.01), single([1.0])])


def test_model_forward_identity_and_zero(lap1):
    x = FIG1_EDGE_CITATIONS
    np.testing.assert_array_equal(model_forward(SnnModel([single([1.0])]), lap1, x), x)
    model = init_model(seed=3)
    for layer in model.layers:
        layer.weights[:] = 0
    np.testing.assert_array_equal(model_forward(model, lap1, x), np.zeros(5))
    with pytest.raises(ValueError):
        model_forward(model, lap1, np.ones(4))


def test_default_model_matches_dense_oracle_and_golden(lap1):
    model = init_model(seed=0)
    assert [(l.in_channels, l.out_channels, l.degree) for l in model.layers] == [(1, 30, 5), (30, 30, 5), (30, 1, 5)]
    out = model_forward(model, lap1, FIG1_EDGE_CITATIONS)
    ref, _ = dense_forward(model, FIG1_L1.astype(float), FIG1_EDGE_CITATIONS)
    assert out.shape == (5,) and np.all(np.isfinite(out))
    np.testing.assert_allclose(out, ref, rtol=1e-10)
    golden = np.loadtxt(GOLDEN)
    np.testing.assert_allclose(out, golden, rtol=1e-12)


def test_init_bounds_and_bias():
    model = init_model((1, 30, 30, 1), degree=5, seed=1)
    for layer in model.layers:
        limit = np.sqrt(6 / ((layer.in_channels + layer.out_channels) * 6))
        assert np.abs(layer.weights).max() <= limit
        assert np.all(layer.bias == 0)
    assert model.layers[-1].slope is None
    assert all(l.slope == 0.01 for l in model.layers[:-1])


def test_l1_loss_examples():
    assert l1_masked_loss([1, 2, 3], [1, 2, 3], [True] * 3) == 0
    assert l1_masked_loss([1, 2], [0, 0], [True, False]) == 1.0
    assert l1_masked_loss([3, 5, 7], [1, 1, 1], [True] * 3) == 4.0
    with pytest.raises(ValueError):
        l1_masked_loss([1, 2], [1, 2], [False, False])


def test_mask_decouples_loss(lap1):
    model = init_model((1, 4, 1), degree=2, seed=5)
    x = FIG1_EDGE_CITATIONS / 100
    mask = np.array([True, True, False, True, False])
    target = x.copy()
    other = target.copy()
    other[~mask] += 1e3
    g1 = gradients(model, lap1, x, target, mask)
    g2 = gradients(model, lap1, x, other, mask)
    assert g1.loss == g2.loss
    for (_, a), (_, b) in zip(g1.items(), g2.items()):
        np.testing.assert_array_equal(a, b)


def test_degree_zero_gradient_by_hand(lap1):
    w0 = 0.7
    model = SnnModel([single([w0])])
    x = np.array([1.0, -2.0, 3.0, 4.0, 5.0])
    target = np.array([0.0, 0.0, 10.0, 0.0, 0.0])
    mask = np.array([True, True, True, False, True])
    g = gradients(model, lap1, x, target, mask)
    expected = np.mean(np.sign(w0 * x - target)[mask] * x[mask])
    assert g.weights[0].shape == (1, 1, 1)
    assert g.weights[0][0, 0, 0] == pytest.approx(expected, rel=1e-15)


def test_gradients_match_finite_differences_all_coordinates(lap1):
    rng = np.random.default_rng(11)
    lap_dense = FIG1_L1.astype(float)
    for draw in range(5):
        model = init_model((1, 6, 1), degree=3, seed=draw)
        for layer in model.layers:
            layer.bias[:] = rng.normal(size=layer.out_channels)
        x = rng.uniform(0, 200, size=5)
        target = rng.uniform(0, 200, size=5)
        mask = rng.random(5) < 0.7
        mask[0] = True
        g = gradients(model, lap1, x, target, mask)
        analytic = dict(g.items())
        coords = [(n, j) for n, arr in model.parameters() for j in range(arr.size)]
        a, n = finite_difference_check(model, lap_dense, x, target, mask, analytic, coords)
        assert len(a) > 0.8 * len(coords)
        assert relative_error(a, n) <= 1e-5


def test_adam_examples():
    state = AdamState(lr=1e-3)
    params = {"w": np.array([2.0])}
    new, state = adam_step(state, params, {"w": np.array([0.0])})
    assert new["w"][0] == 2.0 and state.t == 1

    state = AdamState(lr=1e-3)
    new, _ = adam_step(state, {"w": np.array([0.0])}, {"w": np.array([1.0])})
    assert new["w"][0] == pytest.approx(-1e-3 / (1 + 1e-8), rel=1e-12)

    state = AdamState()
    p = {"w": np.array([1.0])}
    p1, state = adam_step(state, p, {"w": np.array([0.5])})
    p2, state = adam_step(state, p1, {"w": np.array([0.5])})
    assert p2["w"][0] < p1["w"][0] < p["w"][0]


def test_adam_rejects_non_finite():
    with pytest.raises(FloatingPointError, match="layers\\[1\\].bias"):
        adam_step(AdamState(), {"layers[1].bias": np.zeros(2)}, {"layers[1].bias": np.array([0.0, np.nan])})


def test_train_identity_converges(lap1):
    x = FIG1_EDGE_CITATIONS / 100
    cfg = TrainConfig(widths=(1, 1), degree=0)
    model, hist = train(init_model((1, 1), 0, seed=0), lap1, x, x, np.ones(5, bool), cfg)
    assert len(hist) == 1000
    assert min(hist) < 1e-3
    assert l1_masked_loss(model_forward(model, lap1, x), x, np.ones(5, bool)) < 1e-3


def test_train_rejects_zero_iterations():
    with pytest.raises(ValueError):
        TrainConfig(iterations=0)


def test_train_is_deterministic(lap1):
    cfg = TrainConfig(iterations=50, widths=(1, 4, 1), degree=2)
    x = FIG1_EDGE_CITATIONS / 100
    mask = np.array([True, False, True, True, True])
    _, h1 = train(init_model((1, 4, 1), 2, seed=9), lap1, x, x, mask, cfg)
    _, h2 = train(init_model((1, 4, 1), 2, seed=9), lap1, x, x, mask, cfg)
    assert np.array_equal(np.array(h1), np.array(h2))
    assert h1[-1] < h1[0]


def test_train_divergence_guard(lap1):
    cfg = TrainConfig(iterations=5, widths=(1, 1), degree=1)
    model = SnnModel([single([1.0, 1e308])])
    with pytest.raises(TrainingDivergedError):
        train(model, lap1, FIG1_EDGE_CITATIONS, FIG1_EDGE_CITATIONS, np.ones(5, bool), cfg)


def test_model_file_round_trip(lap1):
    model = init_model((1, 3, 2, 1), degree=2, seed=4)
    model.shift, model.scale = 1.5, 2.25
    buf = io.StringIO()
    write_model(model, buf)
    text = buf.getvalue()
    assert text.startswith("snn v1\n")
    assert "layer 1 3 2 0.01\n" in text and "layer 2 1 2 identity\n" in text
    back = read_model(io.StringIO(text))
    x = FIG1_EDGE_CITATIONS
    assert np.array_equal(model_forward(back, lap1, x), model_forward(model, lap1, x))


def test_standardized_model_round_trips_affine(lap1):
    model = SnnModel([single([1.0])], shift=100.0, scale=50.0)
    np.testing.assert_allclose(model_forward(model, lap1, FIG1_EDGE_CITATIONS), FIG1_EDGE_CITATIONS)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.integers(0, 2))
def test_locality(seed, degree):
    rng = np.random.default_rng(seed)
    cx = random_complex(rng)
    p = int(rng.integers(0, cx.dimension + 1))
    lap = hodge_laplacian(cx, p)
    model = init_model((1, 3, 1), degree=degree, seed=seed)
    dist = distance_matrix(cx, p)
    x = rng.normal(size=lap.size)
    base = model_forward(model, lap, x)
    total = model.total_degree
    for t in range(lap.size):
        bumped = x.copy()
        bumped[t] += 10.0
        out = model_forward(model, lap, bumped)
        far = dist[:, t] > total
        assert np.array_equal(out[far], base[far])


def test_permutation_equivariance():
    rng = np.random.default_rng(2)
    maximal = [[0, 1, 2], [1, 3], [2, 3, 4], [0, 4], [4, 5]]
    cx = SimplicialComplex.from_simplices(maximal)
    relabel = rng.permutation(6)
    cx2 = SimplicialComplex.from_simplices([[int(relabel[v]) for v in s] for s in maximal])
    model = init_model((1, 5, 1), degree=3, seed=8)
    linear = init_model((1, 1), degree=3, seed=8)
    for p in range(3):
        x = rng.normal(size=cx.n_simplices(p))
        perm = [cx2.position([int(relabel[v]) for v in s]) for s in cx.simplices[p]]
        # relabelling can reverse orientations: L' = S P L P^T S with S = diag(signs)
        signs = _orientation_signs(cx, relabel, p)
        x2 = np.empty_like(x)
        x2[perm] = signs * x
        if p == 0:
            np.testing.assert_array_equal(signs, 1.0)
            out, out2 = (model_forward(model, hodge_laplacian(c, 0), v) for c, v in ((cx, x), (cx2, x2)))
            np.testing.assert_allclose(out2[perm], out, rtol=1e-10, atol=1e-10)
        y = model_forward(linear, hodge_laplacian(cx, p), x)
        y2 = model_forward(linear, hodge_laplacian(cx2, p), x2)
        np.testing.assert_allclose(y2[perm], signs * y, rtol=1e-10, atol=1e-10)


def _orientation_signs(cx, relabel, p):
    """Sign of the permutation sorting each relabelled simplex."""
    out = []
    for s in cx.simplices[p]:
        img = [int(relabel[v]) for v in s]
        inversions = sum(1 for i in range(len(img)) for j in range(i + 1, len(img)) if img[i] > img[j])
        out.append(-1.0 if inversions % 2 else 1.0)
    return np.array(out)


def test_permutation_equivariance_orientation_preserving():
    rng = np.random.default_rng(4)
    maximal = [[0, 1, 2], [1, 3], [2, 3, 4], [0, 4], [4, 5]]
    cx = SimplicialComplex.from_simplices(maximal)
    # order-preserving relabel keeps every orientation, so the full nonlinear model commutes
    relabel = np.array([2, 5, 7, 8, 11, 13])
    cx2 = SimplicialComplex.from_simplices([[int(relabel[v]) for v in s] for s in maximal])
    model = init_model(seed=6)
    for p in range(3):
        x = rng.normal(size=cx.n_simplices(p))
        out = model_forward(model, hodge_laplacian(cx, p), x)
        out2 = model_forward(model, hodge_laplacian(cx2, p), x)
        np.testing.assert_allclose(out2, out, rtol=1e-10)
    perm = rng.permutation(cx.n_simplices(1))
    lap = hodge_laplacian(cx, 1).to_dense()
    from scipy.sparse import csr_matrix
    x = rng.normal(size=len(perm))
    y = model_forward(model, csr_matrix(lap), x)
    y_perm = model_forward(model, csr_matrix(lap[np.ix_(perm, perm)]), x[perm])
    np.testing.assert_allclose(y_perm, y[perm], rtol=1e-9)


def test_linear_when_identity_nonlinearities(lap1):
    rng = np.random.default_rng(0)
    model = init_model((1, 4, 4, 1), degree=3, seed=2)
    for layer in model.layers:
        layer.slope = None
    x, y = rng.normal(size=5), rng.normal(size=5)
    a, b = 2.5, -0.75
    np.testing.assert_allclose(
        model_forward(model, lap1, a * x + b * y),
        a * model_forward(model, lap1, x) + b * model_forward(model, lap1, y),
        rtol=1e-9, atol=1e-9 * np.abs(model_forward(model, lap1, x)).max())
