import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from radioshift.adcore import (
    Parameter, Tensor, adam_step, backward, kernels, load_checkpoint, ops, save_checkpoint,
    zero_grad,
)
from radioshift.adcore.gradcheck import grad_rel_error, leaf
from radioshift.adcore.kernels import available_backends, out_length
from radioshift.errors import DegenerateBatchError, LabelError, ShapeError

TOL = 1e-4
N_SHAPES = 20


def rand(rng, *shape):
    return rng.standard_normal(shape)


def naive_conv1d(x, w, b, stride, pad):
    bsz, cin, length = x.shape
    cout, _, k = w.shape
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad)))
    lout = (length + 2 * pad - k) // stride + 1
    out = np.zeros((bsz, cout, lout))
    for n in range(bsz):
        for o in range(cout):
            for t in range(lout):
                acc = b[o] if b is not None else 0.0
                for c in range(cin):
                    for j in range(k):
                        acc += w[o, c, j] * xp[n, c, t * stride + j]
                out[n, o, t] = acc
    return out


# -- conv1d -----------------------------------------------------------------------------
def test_conv_hand_example():
    x = Tensor(np.array([[[1.0, 2, 3, 4]]]))
    w = Tensor(np.ones((1, 1, 3)))
    y = ops.conv1d(x, w, Tensor(np.zeros(1)), stride=2, pad=1)
    assert np.allclose(y.data, [[[3.0, 9.0]]])


def test_conv_identity_kernel():
    x = np.random.default_rng(0).standard_normal((2, 1, 7))
    y = ops.conv1d(Tensor(x), Tensor(np.ones((1, 1, 1))), None)
    assert np.allclose(y.data, x)


def test_conv_output_length():
    assert out_length(4096, 3, 2, 1) == 2048


def test_conv_shape_error():
    with pytest.raises(ShapeError):
        ops.conv1d(Tensor(np.zeros((1, 2, 8))), Tensor(np.zeros((4, 3, 3))), None)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 2), st.integers(1, 3), st.integers(1, 4), st.integers(3, 16),
       st.sampled_from([1, 3, 5]), st.integers(1, 3), st.integers(0, 2), st.integers(0, 10_000))
def test_conv_matches_naive(bsz, cin, cout, length, k, stride, pad, seed):
    if k > length + 2 * pad:
        return
    rng = np.random.default_rng(seed)
    x, w, b = rand(rng, bsz, cin, length), rand(rng, cout, cin, k), rand(rng, cout)
    y = ops.conv1d(Tensor(x), Tensor(w), Tensor(b), stride, pad)
    assert np.allclose(y.data, naive_conv1d(x, w, b, stride, pad))


def test_kernel_backends_agree():
    backends = available_backends()
    assert "numpy" in backends
    rng = np.random.default_rng(1)
    for _ in range(10):
        b, c, l = rng.integers(1, 4), rng.integers(1, 5), rng.integers(4, 40)
        k, s, p = int(rng.choice([1, 3, 5])), int(rng.integers(1, 3)), int(rng.integers(0, 3))
        x = rng.standard_normal((b, c, l)).astype(np.float32)
        lout = out_length(l, k, s, p)
        cols = rng.standard_normal((b, c * k, lout)).astype(np.float32)
        ref_cols = backends["numpy"].im2col1d(x, k, s, p)
        ref_img = backends["numpy"].col2im1d(cols, l, k, s, p)
        for impl in backends.values():
            assert np.array_equal(impl.im2col1d(x, k, s, p), ref_cols)
            assert np.array_equal(impl.col2im1d(cols, l, k, s, p), ref_img)


def test_backend_is_reported():
    assert kernels.BACKEND in available_backends()


# -- finite-difference checks on random shapes ------------------------------------------
def shapes(seed):
    rng = np.random.default_rng(seed)
    for _ in range(N_SHAPES):
        yield rng, int(rng.integers(2, 4)), int(rng.integers(1, 4)), int(rng.integers(3, 9))


def test_fd_conv1d():
    for rng, b, c, l in shapes(0):
        cout, k = int(rng.integers(1, 4)), int(rng.choice([1, 3]))
        stride, pad = int(rng.integers(1, 3)), int(rng.integers(0, 2))
        x, w, bias = leaf(rand(rng, b, c, l)), leaf(rand(rng, cout, c, k)), leaf(rand(rng, cout))
        f = lambda x, w, bias: (ops.conv1d(x, w, bias, stride, pad) ** 2).sum()
        assert grad_rel_error(f, [x, w, bias]) <= TOL


@pytest.mark.parametrize("mode", ["train", "eval"])
def test_fd_batchnorm(mode):
    for rng, b, c, l in shapes(1):
        x, g, be = leaf(rand(rng, b, c, l)), leaf(rand(rng, c)), leaf(rand(rng, c))
        rm, rv = rand(rng, c) * 0.1, rng.uniform(0.5, 2, c)
        coef = rand(rng, b, c, l)
        f = lambda x, g, be: (ops.batchnorm1d(x, g, be, rm.copy(), rv.copy(), mode,
                                              update_stats=False) * Tensor(coef)).sum()
        assert grad_rel_error(f, [x, g, be]) <= TOL


def test_fd_dense_and_activations():
    for rng, b, c, _ in shapes(2):
        fout = int(rng.integers(1, 5))
        x, w, bias = leaf(rand(rng, b, c)), leaf(rand(rng, fout, c)), leaf(rand(rng, fout))
        f = lambda x, w, bias: (ops.sigmoid(ops.dense(x, w, bias)) * ops.softplus(x @ w.T)).sum()
        assert grad_rel_error(f, [x, w, bias]) <= TOL
        g = lambda x: (ops.relu(x + 0.05) * ops.exp(x * 0.3) + ops.abs(x + 0.05)).mean()
        assert grad_rel_error(g, [leaf(rand(rng, b, c))]) <= TOL


def test_fd_elementwise_and_shape_ops():
    for rng, b, c, l in shapes(3):
        x, y = leaf(rand(rng, b, c, l)), leaf(rng.uniform(0.5, 2, (b, c, l)))
        f = lambda x, y: (ops.log(y) * x / y - x ** 2 + ops.clamp_min(y, 1.0)).sum()
        assert grad_rel_error(f, [x, y]) <= TOL
        h = lambda x: (ops.concat([ops.global_avg_pool(x), x[:, :, 0]], axis=1) ** 2).sum() \
            + (ops.transpose(x, (2, 0, 1)).reshape(l, -1) ** 3).mean()
        assert grad_rel_error(h, [x]) <= TOL


def test_fd_softmax_losses():
    for rng, b, c, _ in shapes(4):
        k = c + 1
        z = leaf(rand(rng, b, k) * 2)
        y = ops.onehot(rng.integers(0, k, b), k, np.float64)
        assert grad_rel_error(lambda z: ops.softmax_cross_entropy(z, y), [z]) <= TOL
        coef = Tensor(rand(rng, b, k))
        assert grad_rel_error(lambda z: (ops.softmax(z) * coef).sum(), [z]) <= TOL
        assert grad_rel_error(lambda z: (ops.log_softmax(z) * coef).sum(), [z]) <= TOL
        p = leaf(rng.uniform(0.1, 0.9, (b, 1)))
        t = rng.integers(0, 2, (b, 1))
        assert grad_rel_error(lambda p: ops.binary_cross_entropy(p, t), [p]) <= TOL


def test_fd_dropout_fixed_mask():
    for rng, b, c, l in shapes(5):
        x = leaf(rand(rng, b, c, l))
        seed = int(rng.integers(1 << 30))
        f = lambda x: (ops.relu_dropout(x, 0.3, "train", np.random.default_rng(seed)) ** 2).sum()
        assert grad_rel_error(f, [x]) <= TOL


# -- batchnorm semantics ----------------------------------------------------------------
def bn_args(c):
    return Tensor(np.ones(c)), Tensor(np.zeros(c)), np.zeros(c), np.ones(c)


def test_bn_constant_channel_is_zero():
    g, b, rm, rv = bn_args(2)
    y = ops.batchnorm1d(Tensor(np.full((3, 2, 5), 7.0)), g, b, rm, rv, "train")
    assert np.allclose(y.data, 0.0)


def test_bn_train_output_statistics():
    x = np.random.default_rng(0).normal(3.0, 5.0, (8, 4, 32))
    g, b, rm, rv = bn_args(4)
    y = ops.batchnorm1d(Tensor(x), g, b, rm, rv, "train").data
    assert np.allclose(y.mean(axis=(0, 2)), 0.0, atol=1e-6)
    assert np.allclose(y.var(axis=(0, 2)), 1.0, atol=1e-4)


def test_bn_momentum_one_reproduces_batch_stats():
    x = np.random.default_rng(1).normal(2.0, 3.0, (4, 3, 10))
    g, b, rm, rv = bn_args(3)
    y_train = ops.batchnorm1d(Tensor(x), g, b, rm, rv, "train", momentum=1.0).data
    assert np.allclose(rm, x.mean(axis=(0, 2)))
    y_eval = ops.batchnorm1d(Tensor(x), g, b, rm, rv, "eval").data
    assert np.allclose(y_eval, y_train)


def test_bn_degenerate_batch():
    g, b, rm, rv = bn_args(2)
    with pytest.raises(DegenerateBatchError):
        ops.batchnorm1d(Tensor(np.ones((1, 2, 1))), g, b, rm, rv, "train")


def test_bn_eval_leaves_running_stats():
    g, b, rm, rv = bn_args(2)
    ops.batchnorm1d(Tensor(np.ones((2, 2, 3))), g, b, rm, rv, "eval")
    assert np.array_equal(rm, np.zeros(2)) and np.array_equal(rv, np.ones(2))


# -- dense, dropout, pooling, losses ----------------------------------------------------
def test_dense_hand_example():
    y = ops.dense(Tensor(np.array([[1.0, 2.0]])), Tensor(np.array([[1.0, 1.0], [0.0, 1.0]])),
                  Tensor(np.array([0.5, 0.0])))
    assert np.allclose(y.data, [[3.5, 2.0]])


def test_dense_bias_gradient_is_ones():
    b = leaf(np.zeros(3))
    backward(ops.dense(Tensor(np.ones((1, 2))), Tensor(np.ones((3, 2))), b).sum())
    assert np.allclose(b.grad, 1.0)


def test_relu_dropout_eval():
    y = ops.relu_dropout(Tensor(np.array([-1.0, 2.0])), 0.5, "eval")
    assert np.allclose(y.data, [0.0, 2.0])


def test_dropout_zero_probability_is_identity():
    x = Tensor(np.arange(5.0))
    assert ops.dropout(x, 0.0, "train", np.random.default_rng(0)) is x


def test_dropout_preserves_expectation():
    y = ops.dropout(Tensor(np.ones(100_000)), 0.5, "train", np.random.default_rng(0)).data
    assert y.mean() == pytest.approx(1.0, rel=0.02)
    assert set(np.unique(y)) <= {0.0, 2.0}


def test_global_avg_pool():
    x = leaf(np.array([[[1.0, 2, 3, 4]]]))
    y = ops.global_avg_pool(x)
    assert y.data[0, 0] == 2.5
    backward(y.sum())
    assert np.allclose(x.grad, 0.25)


def test_cross_entropy_uniform_logits():
    loss = ops.softmax_cross_entropy(Tensor(np.zeros((3, 4))), ops.onehot([0, 1, 3], 4))
    assert float(loss.data) == pytest.approx(np.log(4), abs=1e-6)


def test_cross_entropy_large_logit_is_stable():
    loss = ops.softmax_cross_entropy(Tensor(np.array([[1e6, 0, 0, 0]])), ops.onehot([0], 4))
    assert np.isfinite(loss.data) and float(loss.data) == pytest.approx(0.0, abs=1e-9)


def test_cross_entropy_gradient_closed_form():
    z = leaf(np.random.default_rng(0).standard_normal((5, 4)))
    y = ops.onehot([0, 1, 2, 3, 0], 4, np.float64)
    backward(ops.softmax_cross_entropy(z, y))
    sm = np.exp(z.data) / np.exp(z.data).sum(axis=1, keepdims=True)
    assert np.allclose(z.grad, (sm - y) / 5)


def test_cross_entropy_rejects_bad_labels():
    with pytest.raises(LabelError):
        ops.softmax_cross_entropy(Tensor(np.zeros((2, 3))), np.array([[1, 1, 0], [0, 0, 1]]))


# -- tape -------------------------------------------------------------------------------
def test_shared_parameter_accumulates_both_paths():
    w = leaf(np.array([2.0]))
    x = Tensor(np.array([3.0]))
    backward((w * x + w * x).sum())
    assert np.allclose(w.grad, [6.0])


def test_backward_twice_doubles():
    w = leaf(np.array([1.0, -2.0]))
    loss = (w * w).sum()
    backward(loss)
    first = w.grad.copy()
    backward(loss)
    assert np.array_equal(w.grad, 2 * first)


def test_cycle_detection():
    a = leaf(np.ones(2))
    b = a * 2.0
    a._parents = (b,)
    with pytest.raises(RuntimeError):
        backward(b.sum())


def test_replay_determinism():
    def run():
        rng = np.random.default_rng(7)
        w = Parameter(rng.standard_normal((3, 4)))
        x = Tensor(rng.standard_normal((5, 4)))
        losses = []
        for _ in range(5):
            zero_grad([w])
            loss = (ops.relu_dropout(x @ w.T, 0.5, "train", rng) ** 2).mean()
            backward(loss)
            adam_step([w], 0.01)
            losses.append(float(loss.data))
        return losses, w.data.copy()
    (l1, w1), (l2, w2) = run(), run()
    assert l1 == l2 and np.array_equal(w1, w2)


# -- Adam -------------------------------------------------------------------------------
def test_adam_hand_step():
    w = Parameter(np.array([1.0]))
    backward((w * w).sum())
    adam_step([w], lr=0.001)
    assert w.data[0] == pytest.approx(0.999, abs=1e-6)


def test_adam_zero_grad_leaves_params():
    w = Parameter(np.array([1.0, 2.0]))
    w.grad = np.zeros(2)
    adam_step([w], 0.001)
    assert np.array_equal(w.data, [1.0, 2.0])


def test_adam_symmetric_updates():
    a, b = Parameter(np.array([0.5])), Parameter(np.array([0.5]))
    for _ in range(3):
        a.grad = np.array([0.3])
        b.grad = np.array([0.3])
        adam_step([a, b], 0.01)
    assert np.array_equal(a.data, b.data)


# -- checkpoints ------------------------------------------------------------------------
def test_checkpoint_round_trip_bitwise(tmp_path):
    rng = np.random.default_rng(0)
    arrays = {"a.w": rng.standard_normal((3, 2, 5)).astype(np.float32),
              "a.b": rng.standard_normal(3).astype(np.float32),
              "scalar": np.float32(1.5)}
    p = tmp_path / "m.rsck"
    save_checkpoint(p, arrays)
    back = load_checkpoint(p)
    assert list(back) == list(arrays)
    for k in arrays:
        assert np.asarray(arrays[k]).tobytes() == back[k].tobytes()
    assert p.read_bytes()[:4] == b"RSCK"


def test_checkpoint_rejects_garbage(tmp_path):
    p = tmp_path / "bad"
    p.write_bytes(b"nope")
    with pytest.raises(ValueError):
        load_checkpoint(p)
