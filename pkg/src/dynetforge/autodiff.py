"""Reverse-mode automatic differentiation on dense float64 matrices.

Every value is a 2-D Tensor. Operations record their parents and a backward
closure on the output (define-by-run), so the recorded graph is rebuilt on
every forward pass and consumed by a single backward() call. Gradients
accumulate into ``.grad`` of tensors flagged ``requires_grad``; constants
(graph operators, observations) are skipped entirely.

Inference code should run under ``no_grad()`` so intermediate states are
garbage-collected as the computation proceeds.
"""

import contextlib

import numpy as np
from scipy.special import expit


class ShapeError(ValueError):
    """Operands have incompatible shapes for the requested primitive."""


class NumericError(RuntimeError):
    """A computation produced or received non-finite values."""


_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Disable tape recording inside the block (inference fast path)."""
    global _grad_enabled
    saved = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = saved


class Tensor:
    """A dense (rows, cols) float64 matrix, optionally tracked on the tape."""

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward", "_consumed")

    def __init__(self, data, requires_grad=False):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        elif arr.ndim == 1:
            arr = arr.reshape(1, -1)
        elif arr.ndim != 2:
            raise ShapeError(f"tensors are 2-D matrices, got shape {arr.shape}")
        self.data = arr
        self.requires_grad = requires_grad
        self.grad = np.zeros_like(arr) if requires_grad else None
        self._parents = ()
        self._backward = None
        self._consumed = False

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a 1x1 tensor, got shape {self.shape}")
        return float(self.data[0, 0])

    def zero_grad(self):
        if self.requires_grad:
            self.grad = np.zeros_like(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    # operator sugar; model code reads like the matrix algebra it implements
    def __matmul__(self, other):
        return matmul(self, other)

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        if isinstance(other, Tensor):
            return mul(self, other)
        return scalar_mul(self, other)

    def __rmul__(self, other):
        return scalar_mul(self, other)

    def sum(self):
        return tensor_sum(self)

    def backward(self):
        backward(self)


def _make(data, parents, backward_fn):
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out._consumed = False
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward_fn
    else:
        out.requires_grad = False
        out._parents = ()
        out._backward = None
    return out


def _accumulate(t: Tensor, g: np.ndarray):
    # Leaves pre-allocate zero grads, so the donation branch only ever takes
    # ownership of arrays on intermediate nodes, whose upstream grad buffer is
    # already fully consumed by the time their own backward runs.
    if t.grad is None:
        t.grad = g
    else:
        t.grad += g


# ---------------------------------------------------------------------------
# primitives

def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape[1] != b.data.shape[0]:
        raise ShapeError(f"matmul: inner dims differ, {a.data.shape} @ {b.data.shape}")
    out = _make(a.data @ b.data, (a, b), None)

    if out._parents:
        def _bw():
            g = out.grad
            if a.requires_grad:
                _accumulate(a, g @ b.data.T)
            if b.requires_grad:
                _accumulate(b, a.data.T @ g)
        out._backward = _bw
    return out


def _same_shape(a, b, opname):
    if a.data.shape != b.data.shape:
        raise ShapeError(f"{opname}: shapes differ, {a.data.shape} vs {b.data.shape}")


def add(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "add")
    out = _make(a.data + b.data, (a, b), None)
    if out._parents:
        def _bw():
            g = out.grad
            if a.requires_grad:
                _accumulate(a, g)
                if b.requires_grad:
                    # both parents must not share one buffer
                    _accumulate(b, g.copy())
            elif b.requires_grad:
                _accumulate(b, g)
        out._backward = _bw
    return out


def sub(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "sub")
    out = _make(a.data - b.data, (a, b), None)
    if out._parents:
        def _bw():
            g = out.grad
            if a.requires_grad:
                _accumulate(a, g)
            if b.requires_grad:
                _accumulate(b, -g)
        out._backward = _bw
    return out


def scalar_mul(a: Tensor, s: float) -> Tensor:
    s = float(s)
    out = _make(a.data * s, (a,), None)
    if out._parents:
        def _bw():
            _accumulate(a, out.grad * s)
        out._backward = _bw
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "mul")
    out = _make(a.data * b.data, (a, b), None)
    if out._parents:
        def _bw():
            g = out.grad
            if a.requires_grad:
                _accumulate(a, g * b.data)
            if b.requires_grad:
                _accumulate(b, g * a.data)
        out._backward = _bw
    return out


def sigmoid(a: Tensor) -> Tensor:
    val = expit(a.data)
    out = _make(val, (a,), None)
    if out._parents:
        def _bw():
            _accumulate(a, out.grad * val * (1.0 - val))
        out._backward = _bw
    return out


def tanh(a: Tensor) -> Tensor:
    val = np.tanh(a.data)
    out = _make(val, (a,), None)
    if out._parents:
        def _bw():
            _accumulate(a, out.grad * (1.0 - val * val))
        out._backward = _bw
    return out


def relu(a: Tensor) -> Tensor:
    out = _make(np.maximum(a.data, 0.0), (a,), None)
    if out._parents:
        # derivative 0 at exactly 0
        def _bw():
            _accumulate(a, out.grad * (a.data > 0.0))
        out._backward = _bw
    return out


def sin(a: Tensor) -> Tensor:
    out = _make(np.sin(a.data), (a,), None)
    if out._parents:
        def _bw():
            _accumulate(a, out.grad * np.cos(a.data))
        out._backward = _bw
    return out


def concat_cols(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape[0] != b.data.shape[0]:
        raise ShapeError(f"concat_cols: row counts differ, {a.data.shape} vs {b.data.shape}")
    ca = a.data.shape[1]
    out = _make(np.hstack((a.data, b.data)), (a, b), None)
    if out._parents:
        def _bw():
            g = out.grad
            if a.requires_grad:
                _accumulate(a, g[:, :ca])
            if b.requires_grad:
                _accumulate(b, g[:, ca:])
        out._backward = _bw
    return out


def slice_cols(a: Tensor, start: int, stop: int) -> Tensor:
    if not (0 <= start <= stop <= a.data.shape[1]):
        raise ShapeError(f"slice_cols: [{start}, {stop}) out of range for shape {a.data.shape}")
    out = _make(a.data[:, start:stop].copy(), (a,), None)
    if out._parents:
        def _bw():
            g = np.zeros_like(a.data)
            g[:, start:stop] = out.grad
            _accumulate(a, g)
        out._backward = _bw
    return out


def mean_abs(a: Tensor) -> Tensor:
    """Scalar mean of absolute entries; backward uses sign with sign(0) = 0."""
    out = _make(np.array([[np.mean(np.abs(a.data))]]), (a,), None)
    if out._parents:
        def _bw():
            _accumulate(a, (out.grad[0, 0] / a.data.size) * np.sign(a.data))
        out._backward = _bw
    return out


def tensor_sum(a: Tensor) -> Tensor:
    out = _make(np.array([[a.data.sum()]]), (a,), None)
    if out._parents:
        def _bw():
            _accumulate(a, np.full_like(a.data, out.grad[0, 0]))
        out._backward = _bw
    return out


# ---------------------------------------------------------------------------
# backward pass

def backward(loss: Tensor):
    """Populate gradients of every requires_grad leaf the loss depends on.

    The recorded graph is torn down afterwards; a second backward on the same
    recording raises.
    """
    if loss.data.shape != (1, 1):
        raise ShapeError(f"backward needs a scalar (1x1) loss, got shape {loss.shape}")
    if loss._consumed:
        raise NumericError("backward already ran on this recording; rebuild the forward pass")
    loss._consumed = True

    # iterative topological order (rollouts can be thousands of nodes deep)
    topo = []
    visited = {id(loss)}
    stack = [(loss, iter(loss._parents))]
    while stack:
        node, it = stack[-1]
        advanced = False
        for parent in it:
            if id(parent) not in visited and parent._backward is not None:
                visited.add(id(parent))
                stack.append((parent, iter(parent._parents)))
                advanced = True
                break
        if not advanced:
            topo.append(node)
            stack.pop()

    loss.grad = np.ones((1, 1))
    for node in reversed(topo):
        if node._backward is not None:
            node._backward()
    # break closure reference cycles and free intermediate gradients;
    # topo holds internal nodes only, so leaf grads survive
    for node in topo:
        node._backward = None
        node._parents = ()
        if node is not loss:
            node.grad = None


def gradcheck(fn, tensors, step=1e-6, rel_tol=1e-5, floor=1e-6):
    """Compare analytic gradients of scalar fn(*tensors) to central differences.

    Returns the worst relative error over all entries of all requires_grad
    inputs. ``floor`` guards the denominator for near-zero gradients.
    """
    for t in tensors:
        t.zero_grad()
    out = fn(*tensors)
    backward(out)
    worst = 0.0
    for t in tensors:
        if not t.requires_grad:
            continue
        flat = t.data.ravel()
        gflat = t.grad.ravel()
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + step
            f_plus = fn(*tensors).item()
            flat[idx] = orig - step
            f_minus = fn(*tensors).item()
            flat[idx] = orig
            fd = (f_plus - f_minus) / (2.0 * step)
            denom = max(abs(gflat[idx]), abs(fd), floor)
            worst = max(worst, abs(gflat[idx] - fd) / denom)
    if worst > rel_tol:
        raise AssertionError(f"gradcheck failed: max relative error {worst:.3e} > {rel_tol:.0e}")
    return worst
