import numpy as np
import pytest

from dynetforge.autodiff import (NumericError, ShapeError, Tensor, add, backward,
                                 concat_cols, gradcheck, matmul, mean_abs, mul,
                                 no_grad, relu, scalar_mul, sigmoid, sin,
                                 slice_cols, sub, tanh, tensor_sum)


def test_sigmoid_at_zero_value_and_derivative():
    x = Tensor([[0.0]], requires_grad=True)
    out = sigmoid(x)
    assert out.item() == 0.5
    backward(out)
    assert x.grad[0, 0] == 0.25


def test_mean_abs_known_value():
    x = Tensor([[1.0, -2.0], [3.0, -4.0]])
    assert mean_abs(sub(x, Tensor(np.zeros((2, 2))))).item() == 2.5


def test_matmul_gradient_matches_central_differences():
    rng = np.random.default_rng(42)
    a = Tensor(rng.standard_normal((2, 3)), requires_grad=True)
    b = Tensor(rng.standard_normal((3, 2)), requires_grad=True)
    worst = gradcheck(lambda a, b: mean_abs(matmul(a, b)), [a, b], rel_tol=1e-6)
    assert worst < 1e-6


@pytest.mark.parametrize("op", [sigmoid, tanh, sin])
def test_smooth_unary_gradcheck(op):
    rng = np.random.default_rng(7)
    x = Tensor(rng.standard_normal((3, 4)), requires_grad=True)
    gradcheck(lambda x: mean_abs(op(x)), [x])


def test_relu_gradcheck_away_from_kink():
    rng = np.random.default_rng(8)
    data = rng.standard_normal((3, 4))
    data[np.abs(data) < 1e-3] = 0.5  # keep the finite-difference probe off the kink
    x = Tensor(data, requires_grad=True)
    gradcheck(lambda x: tensor_sum(relu(x)), [x])


def test_relu_derivative_zero_at_zero():
    x = Tensor([[0.0, -1.0, 2.0]], requires_grad=True)
    backward(tensor_sum(relu(x)))
    assert np.array_equal(x.grad, np.array([[0.0, 0.0, 1.0]]))


def test_binary_and_structural_gradcheck():
    rng = np.random.default_rng(9)
    a = Tensor(rng.standard_normal((2, 3)), requires_grad=True)
    b = Tensor(rng.standard_normal((2, 3)), requires_grad=True)
    c = Tensor(rng.standard_normal((2, 2)), requires_grad=True)

    def f(a, b, c):
        joined = concat_cols(mul(a, b), scalar_mul(c, 1.7))
        return mean_abs(slice_cols(joined, 1, 4))

    gradcheck(f, [a, b, c])


def test_add_sub_with_shared_operand():
    x = Tensor([[2.0]], requires_grad=True)
    backward(tensor_sum(add(x, x)))
    assert x.grad[0, 0] == 2.0
    x.zero_grad()
    backward(tensor_sum(sub(x, x)))
    assert x.grad[0, 0] == 0.0


def test_sum_of_squares_gradient():
    x = Tensor([[3.0]], requires_grad=True)
    loss = tensor_sum(mul(x, x))
    backward(loss)
    assert x.grad[0, 0] == 6.0


def test_unused_leaf_keeps_zero_grad():
    w = Tensor([[5.0]], requires_grad=True)
    x = Tensor([[2.0]], requires_grad=True)
    backward(tensor_sum(mul(x, x)))
    assert w.grad[0, 0] == 0.0


def test_backward_rejects_nonscalar():
    x = Tensor(np.ones((2, 2)), requires_grad=True)
    with pytest.raises(ShapeError):
        backward(add(x, x))


def test_double_backward_raises():
    x = Tensor([[1.0]], requires_grad=True)
    loss = tensor_sum(mul(x, x))
    backward(loss)
    with pytest.raises(NumericError):
        backward(loss)


def test_forward_values_independent_of_requires_grad():
    rng = np.random.default_rng(3)
    data_a, data_b = rng.standard_normal((3, 3)), rng.standard_normal((3, 3))

    def run(flag):
        a = Tensor(data_a, requires_grad=flag)
        b = Tensor(data_b, requires_grad=flag)
        return tanh(add(matmul(a, b), mul(a, b))).data

    assert np.array_equal(run(True), run(False))


def test_shape_mismatch_reports_shapes():
    a = Tensor(np.ones((2, 3)))
    b = Tensor(np.ones((2, 3)))
    with pytest.raises(ShapeError, match=r"\(2, 3\)"):
        matmul(a, b)
    with pytest.raises(ShapeError, match=r"\(2, 3\)"):
        add(a, Tensor(np.ones((3, 2))))


def test_no_grad_suppresses_recording():
    x = Tensor([[1.0]], requires_grad=True)
    with no_grad():
        out = sigmoid(x)
    assert not out.requires_grad
    assert out._parents == ()


def test_grad_accumulates_across_multiple_uses():
    x = Tensor([[2.0]], requires_grad=True)
    y = add(mul(x, x), scalar_mul(x, 3.0))  # x^2 + 3x
    backward(tensor_sum(y))
    assert x.grad[0, 0] == 7.0  # 2*2 + 3
