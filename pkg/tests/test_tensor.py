"""Tensor-core tests. Gradient expectations come from tests/oracles.py."""

import numpy as np
import pytest

from graphfuse import tensor as T
from graphfuse.errors import (ConfigError, ContractError,
                              DegenerateBatchError, ShapeMismatchError)
from graphfuse.rng import RngState
from graphfuse.tensor import Tensor

from oracles import finite_difference, max_rel_err


class TestMatmul:
    def test_identity(self):
        m = np.arange(9.0).reshape(3, 3)
        out = T.matmul(Tensor(np.eye(3)), Tensor(m))
        np.testing.assert_array_equal(out.data, m)

    def test_hand_case(self):
        out = T.matmul(Tensor([[1.0, 2.0], [3.0, 4.0]]), Tensor([[1.0], [1.0]]))
        np.testing.assert_array_equal(out.data, [[3.0], [7.0]])

    def test_grad_matches_finite_differences(self):
        rng = RngState(0)
        a = Tensor(rng.normal((4, 5)), requires_grad=True)
        b = Tensor(rng.normal((5, 2)), requires_grad=True)
        loss = T.matmul(a, b).sum()
        loss.backward()
        # closed form: d sum(a@b) / da = ones @ b.T
        np.testing.assert_allclose(a.grad, np.ones((4, 2)) @ b.data.T, rtol=1e-12)
        fd = finite_difference(lambda: (a.data @ b.data).sum(), [a.data, b.data])
        assert max_rel_err(a.grad, fd[0]) < 1e-6
        assert max_rel_err(b.grad, fd[1]) < 1e-6

    def test_batched_broadcast_grad(self):
        rng = RngState(1)
        a = Tensor(rng.normal((2, 3, 4, 5)), requires_grad=True)
        b = Tensor(rng.normal((5, 6)), requires_grad=True)
        (T.matmul(a, b) ** 2.0).sum().backward()
        fd = finite_difference(lambda: ((a.data @ b.data) ** 2).sum(),
                               [a.data, b.data], step=1e-5)
        assert max_rel_err(a.grad, fd[0]) < 1e-6
        assert max_rel_err(b.grad, fd[1]) < 1e-6

    def test_shape_errors_name_both_shapes(self):
        with pytest.raises(ShapeMismatchError) as e:
            T.matmul(Tensor(np.zeros((2, 3))), Tensor(np.zeros((4, 2))))
        assert "(2, 3)" in str(e.value) and "(4, 2)" in str(e.value)
        with pytest.raises(ShapeMismatchError):
            T.matmul(Tensor(np.zeros(3)), Tensor(np.zeros((3, 2))))


class TestSoftmax:
    def test_uniform(self):
        out = T.softmax(Tensor([0.0, 0.0, 0.0]), axis=-1)
        np.testing.assert_allclose(out.data, [1 / 3] * 3, atol=1e-15)

    def test_shift_invariance(self):
        x = np.array([0.3, 1.3, 2.3])
        a = T.softmax(Tensor(x), axis=-1).data
        b = T.softmax(Tensor(x + 50.0), axis=-1).data
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_against_scalar_reference(self):
        x = np.array([1.0, 2.0, 3.0])
        want = np.exp(x) / np.exp(x).sum()
        np.testing.assert_allclose(T.softmax(Tensor(x), axis=-1).data, want,
                                   rtol=1e-12)

    def test_rows_sum_to_one(self):
        rng = RngState(2)
        x = rng.normal((7, 11)) * 30.0
        y = T.softmax(Tensor(x), axis=-1).data
        np.testing.assert_allclose(y.sum(axis=-1), np.ones(7), atol=1e-9)
        assert (y > 0).all()

    def test_grad_matches_finite_differences(self):
        rng = RngState(3)
        x = Tensor(rng.normal((3, 4)), requires_grad=True)
        w = rng.normal((3, 4))  # fixed projection so the loss is non-trivial

        (T.softmax(x, axis=-1) * w).sum().backward()

        def ref():
            e = np.exp(x.data - x.data.max(axis=-1, keepdims=True))
            return ((e / e.sum(axis=-1, keepdims=True)) * w).sum()

        fd = finite_difference(ref, [x.data])
        assert max_rel_err(x.grad, fd[0]) < 1e-6


class TestPointwise:
    def test_leaky_relu_values(self):
        out = T.leaky_relu(Tensor([0.0, -1.0, 2.0]), 0.2)
        np.testing.assert_allclose(out.data, [0.0, -0.2, 2.0])

    def test_leaky_relu_grad_at_minus_two(self):
        x = Tensor([-2.0], requires_grad=True)
        T.leaky_relu(x, 0.2).sum().backward()
        np.testing.assert_allclose(x.grad, [0.2])

    def test_leaky_relu_slope_validation(self):
        with pytest.raises(ConfigError):
            T.leaky_relu(Tensor([1.0]), 1.5)

    def test_elu_matches_definition(self):
        x = np.array([-2.0, -0.5, 0.0, 0.7])
        out = T.elu(Tensor(x)).data
        want = np.where(x > 0, x, np.exp(x) - 1.0)
        np.testing.assert_allclose(out, want, rtol=1e-12)

    def test_elu_grad(self):
        rng = RngState(4)
        x = Tensor(rng.normal((8,)), requires_grad=True)
        (T.elu(x) * rng.normal((8,))).sum().backward()
        # avoid FD across the kink by construction: no |x| < 1e-3 in sample
        assert np.abs(x.data).min() > 1e-3
        got = x.grad.copy()
        x.zero_grad()
        fd = finite_difference(
            lambda: float(np.where(x.data > 0, x.data, np.exp(x.data) - 1).sum()),
            [x.data])
        # grad of plain sum:
        (T.elu(x)).sum().backward()
        assert max_rel_err(x.grad, fd[0]) < 1e-6
        assert got.shape == fd[0].shape


class TestLayerNorm:
    def test_constant_row_maps_to_bias(self):
        x = Tensor(np.full((2, 4), 3.5))
        out = T.layer_norm(x, Tensor(np.ones(4)), Tensor(np.zeros(4)), 1e-5)
        np.testing.assert_allclose(out.data, np.zeros((2, 4)), atol=1e-12)

    def test_output_mean_is_bias(self):
        rng = RngState(5)
        x = Tensor(rng.normal((3, 6)) * 4.0)
        bias = Tensor(np.full(6, 0.25))
        out = T.layer_norm(x, Tensor(np.ones(6)), bias, 1e-8)
        np.testing.assert_allclose(out.data.mean(axis=-1), np.full(3, 0.25),
                                   atol=1e-6)

    def test_grads_match_finite_differences(self):
        rng = RngState(6)
        x = Tensor(rng.normal((2, 4)), requires_grad=True)
        gain = Tensor(rng.uniform(0.5, 1.5, (4,)), requires_grad=True)
        bias = Tensor(rng.normal((4,)), requires_grad=True)
        w = rng.normal((2, 4))

        (T.layer_norm(x, gain, bias, 1e-5) * w).sum().backward()

        def ref():
            mu = x.data.mean(-1, keepdims=True)
            var = x.data.var(-1, keepdims=True)
            xh = (x.data - mu) / np.sqrt(var + 1e-5)
            return ((xh * gain.data + bias.data) * w).sum()

        fd = finite_difference(ref, [x.data, gain.data, bias.data])
        assert max_rel_err(x.grad, fd[0]) < 1e-5
        assert max_rel_err(gain.grad, fd[1]) < 1e-5
        assert max_rel_err(bias.grad, fd[2]) < 1e-5

    def test_affine_shape_check(self):
        with pytest.raises(ShapeMismatchError):
            T.layer_norm(Tensor(np.zeros((2, 4))), Tensor(np.ones(3)),
                         Tensor(np.zeros(4)), 1e-5)


class TestDropoutMask:
    def test_p_zero_is_ones(self):
        m = T.dropout_mask((5, 5), 0.0, RngState(0), training=True)
        np.testing.assert_array_equal(m.data, np.ones((5, 5)))

    def test_eval_mode_is_ones(self):
        m = T.dropout_mask((5, 5), 0.9, RngState(0), training=False)
        np.testing.assert_array_equal(m.data, np.ones((5, 5)))

    def test_keep_rate(self):
        m = T.dropout_mask((100_000,), 0.3, RngState(7), training=True)
        keep = float((m.data > 0).mean())
        assert abs(keep - 0.7) < 0.01
        # inverted scaling: surviving entries are 1/(1-p)
        np.testing.assert_allclose(np.unique(m.data), [0.0, 1.0 / 0.7])

    def test_invalid_p(self):
        with pytest.raises(ConfigError):
            T.dropout_mask((2,), 1.0, RngState(0), training=True)
        with pytest.raises(ConfigError):
            T.dropout_mask((2,), -0.1, RngState(0), training=True)

    def test_deterministic_given_seed(self):
        a = T.dropout_mask((64,), 0.5, RngState(11), training=True)
        b = T.dropout_mask((64,), 0.5, RngState(11), training=True)
        assert a.data.tobytes() == b.data.tobytes()


class TestBackwardEngine:
    def test_sum_grad_is_ones(self):
        t = Tensor(np.arange(6.0).reshape(2, 3), requires_grad=True)
        t.sum().backward()
        np.testing.assert_array_equal(t.grad, np.ones((2, 3)))

    def test_sum_of_squares(self):
        t = Tensor([1.0, 2.0], requires_grad=True)
        (t ** 2.0).sum().backward()
        np.testing.assert_allclose(t.grad, [2.0, 4.0])

    def test_shared_subexpression_dag(self):
        # y = x*x reused twice: loss = sum(y + y*c); FD is the authority
        rng = RngState(8)
        x = Tensor(rng.normal((3, 3)), requires_grad=True)
        c = rng.normal((3, 3))
        y = x * x
        loss = (y + y * c).sum()
        loss.backward()
        fd = finite_difference(lambda: (x.data ** 2 * (1 + c)).sum(), [x.data])
        assert max_rel_err(x.grad, fd[0]) < 1e-6

    def test_each_node_visited_once(self):
        # diamond: two paths from x to the loss; grad must not double count
        x = Tensor([2.0], requires_grad=True)
        a = x * 3.0
        b = x * 4.0
        (a * b).sum().backward()  # d/dx (12 x^2) = 24 x = 48
        np.testing.assert_allclose(x.grad, [48.0])

    def test_accumulation_across_calls(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        (x ** 2.0).sum().backward()
        first = x.grad.copy()
        (x ** 2.0).sum().backward()
        np.testing.assert_allclose(x.grad, 2 * first)
        x.zero_grad()
        assert x.grad is None

    def test_non_scalar_loss_rejected(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        with pytest.raises(ContractError):
            (x * 2.0).backward()

    def test_no_grad_suppresses_graph(self):
        x = Tensor([1.0], requires_grad=True)
        with T.no_grad():
            y = (x * 2.0).sum()
        assert not y.requires_grad
        with pytest.raises(ContractError):
            y.backward()

    def test_broadcast_add_grads(self):
        rng = RngState(9)
        a = Tensor(rng.normal((4, 5)), requires_grad=True)
        b = Tensor(rng.normal((5,)), requires_grad=True)
        ((a + b) * rng.normal((4, 5))).sum().backward()
        assert a.grad.shape == (4, 5)
        assert b.grad.shape == (5,)

    def test_mean_and_reshape_and_transpose_grads(self):
        rng = RngState(10)
        x = Tensor(rng.normal((2, 3, 4)), requires_grad=True)
        w = rng.normal((4, 6))
        loss = (T.transpose(x, (1, 0, 2)).reshape(6, 4) @ Tensor(w)).mean()
        loss.backward()
        fd = finite_difference(
            lambda: (x.data.transpose(1, 0, 2).reshape(6, 4) @ w).mean(),
            [x.data])
        assert max_rel_err(x.grad, fd[0]) < 1e-6


class TestGatherScatter:
    def test_gather_rows_forward(self):
        x = Tensor(np.arange(12.0).reshape(4, 3))
        out = T.gather_rows(x, [2, 0, 2])
        np.testing.assert_array_equal(out.data, x.data[[2, 0, 2]])

    def test_gather_rows_grad_accumulates_repeats(self):
        x = Tensor(np.ones((4, 3)), requires_grad=True)
        T.gather_rows(x, [2, 0, 2]).sum().backward()
        want = np.zeros((4, 3))
        want[0] = 1.0
        want[2] = 2.0
        np.testing.assert_array_equal(x.grad, want)

    def test_gather_rows_bounds(self):
        with pytest.raises(ContractError):
            T.gather_rows(Tensor(np.zeros((3, 2))), [0, 3])

    def test_segment_sum_forward_and_grad(self):
        x = Tensor(np.arange(10.0).reshape(5, 2), requires_grad=True)
        seg = np.array([0, 0, 2, 1, 2])
        out = T.segment_sum(x, seg, 3)
        want = np.array([[0 + 2, 1 + 3], [6.0, 7.0], [4 + 8, 5 + 9]])
        np.testing.assert_array_equal(out.data, want)
        (out * np.array([[1.0, 2], [3, 4], [5, 6]])).sum().backward()
        np.testing.assert_array_equal(
            x.grad, np.array([[1.0, 2], [1, 2], [5, 6], [3, 4], [5, 6]]))

    def test_segment_sum_validates(self):
        with pytest.raises(ContractError):
            T.segment_sum(Tensor(np.zeros((3, 2))), [0, 1, 5], 3)


class TestMaskedCrossEntropy:
    def test_uniform_logits_anchor(self):
        # L = 5 classes, uniform logits: the loss must be ln 5
        logits = Tensor(np.zeros((2, 4, 5)), requires_grad=True)
        labels = np.zeros((2, 4), dtype=np.int64)
        loss = T.masked_cross_entropy(logits, labels)
        assert abs(loss.item() - np.log(5.0)) < 1e-9

    def test_ignored_positions_have_exactly_zero_grad(self):
        rng = RngState(12)
        logits = Tensor(rng.normal((2, 3, 4)), requires_grad=True)
        labels = np.array([[0, -100, 2], [-100, 1, -100]])
        T.masked_cross_entropy(logits, labels).backward()
        ignored = labels == -100
        assert np.all(logits.grad[ignored] == 0.0)
        assert np.any(logits.grad[~ignored] != 0.0)

    def test_grad_matches_finite_differences(self):
        rng = RngState(13)
        logits = Tensor(rng.normal((2, 3, 4)), requires_grad=True)
        labels = np.array([[0, -100, 2], [3, 1, -100]])

        T.masked_cross_entropy(logits, labels).backward()

        def ref():
            flat = logits.data.reshape(-1, 4)
            lab = labels.reshape(-1)
            keep = lab != -100
            rows = flat[keep]
            sh = rows - rows.max(axis=1, keepdims=True)
            lse = np.log(np.exp(sh).sum(axis=1))
            return float((lse - sh[np.arange(keep.sum()), lab[keep]]).mean())

        fd = finite_difference(ref, [logits.data], step=1e-6)
        assert max_rel_err(logits.grad, fd[0]) < 1e-4

    def test_all_masked_raises(self):
        logits = Tensor(np.zeros((1, 2, 3)))
        with pytest.raises(DegenerateBatchError):
            T.masked_cross_entropy(logits, np.full((1, 2), -100))

    def test_bad_label_id_raises(self):
        logits = Tensor(np.zeros((1, 2, 3)))
        with pytest.raises(ContractError):
            T.masked_cross_entropy(logits, np.array([[0, 7]]))
