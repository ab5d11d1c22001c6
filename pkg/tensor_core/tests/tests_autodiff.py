import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose, assert_array_equal

from tensor_core import functional as F
from tensor_core.exceptions import DimensionError
from tensor_core.gradcheck import check_gradients
from tensor_core.module import Linear
from tensor_core.rng import Rng
from tensor_core.tensor import backward, parameter, tensor

SEEDS = range(10)
TOLERANCE = 1e-4


def sample_leaf(rng, shape, spread=1.0):
    return tensor(rng.normal(0, spread, shape), requires_grad=True)


def weighted_sum(out, rng_seed=1234):
    """Scalar readout with non-uniform weights so every output matters."""
    weights = tensor(Rng(rng_seed).normal(0, 1, out.shape))
    return F.sum_(F.mul(out, weights))


class BackwardTest(SimpleTestCase):
    def test_linear_case(self):
        weight = parameter(np.zeros((3, 2)), name="weight")
        x = tensor([[1.0, 2.0, 3.0]])
        loss = F.sum_(F.matmul(x, weight))
        backward(loss)
        assert_array_equal(weight.grad, np.array([[1, 1], [2, 2], [3, 3]]))

    def test_disconnected_parameter_has_zero_grad(self):
        used = parameter(np.ones((2, 2)), name="used")
        unused = parameter(np.ones((2, 2)), name="unused")
        backward(F.sum_(F.relu(used)))
        assert_array_equal(used.grad, np.ones((2, 2)))
        assert_array_equal(unused.grad, np.zeros((2, 2)))

    def test_non_scalar_loss(self):
        weight = parameter(np.ones((2, 2)))
        with self.assertRaises(DimensionError):
            backward(F.relu(weight))

    def test_shared_subexpression_accumulates(self):
        x = parameter([[2.0]])
        y = F.mul(x, x)
        backward(F.sum_(F.add(y, y)))
        assert_allclose(x.grad, [[8.0]])

    def test_grad_has_parameter_shape(self):
        layer = Linear(4, 3, Rng(0))
        backward(F.sum_(layer(tensor(np.ones((5, 4))))))
        for name, param in layer.named_parameters():
            self.assertEqual(param.grad.shape, param.shape, name)


class FiniteDifferenceTest(SimpleTestCase):
    def assert_gradients(self, build, shapes):
        for seed in SEEDS:
            rng = Rng(seed)
            leaves = [sample_leaf(rng, shape) for shape in shapes]
            report = check_gradients(
                lambda: weighted_sum(build(*leaves)), leaves
            )
            self.assertLess(report.max_relative_error, TOLERANCE, seed)

    def test_matmul(self):
        self.assert_gradients(F.matmul, [(3, 4), (4, 2)])

    def test_batched_matmul(self):
        self.assert_gradients(F.matmul, [(2, 3, 4), (4, 2)])

    def test_softmax_rows(self):
        self.assert_gradients(F.softmax_rows, [(3, 5)])

    def test_layer_norm(self):
        self.assert_gradients(lambda x: F.layer_norm(x, 1e-5), [(3, 6)])

    def test_relu_sigmoid(self):
        self.assert_gradients(lambda x: F.sigmoid(F.relu(x)), [(4, 4)])

    def test_pooling(self):
        self.assert_gradients(
            lambda x: F.add(F.max_pool(x, axis=2), F.mean_pool(x, axis=2)),
            [(2, 3, 5)],
        )

    def test_concat_split_take(self):
        def build(a, b):
            left, right = F.split(F.concat([a, b], axis=1), [3, 2], axis=1)
            return F.take(F.mul(left, left), [2, 0, 2], axis=0)

        self.assert_gradients(build, [(3, 2), (3, 3)])

    def test_dropout_with_fixed_mask(self):
        self.assert_gradients(
            lambda x: F.dropout(x, 0.4, Rng(77), training=True), [(5, 5)]
        )

    def test_binary_cross_entropy(self):
        labels = tensor((Rng(4).random((3, 4)) > 0.5).astype(float))
        self.assert_gradients(
            lambda x: F.binary_cross_entropy(F.sigmoid(x), labels), [(3, 4)]
        )

    def test_broadcast_add_and_scale(self):
        self.assert_gradients(
            lambda a, b: F.scale(F.add(a, b), -0.5), [(4, 3), (1, 3)]
        )
