"""Adam optimizer with bias correction, operating on named parameter tensors."""

import numpy as np

from .autodiff import NumericError


class Adam:
    """Standard Adam update:

        m <- b1*m + (1-b1)*g,  v <- b2*v + (1-b2)*g^2
        p <- p - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)

    ``params`` is a dict name -> Tensor; names show up in error messages and
    checkpointed optimizer state. Deterministic given the gradient sequence.
    """

    def __init__(self, params: dict, lr=0.01, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = dict(params)
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.t = 0
        self.m = {name: np.zeros_like(p.data) for name, p in self.params.items()}
        self.v = {name: np.zeros_like(p.data) for name, p in self.params.items()}

    def zero_grad(self):
        for p in self.params.values():
            p.zero_grad()

    def step(self):
        for name, p in self.params.items():
            if not np.all(np.isfinite(p.grad)):
                raise NumericError(f"non-finite gradient for parameter {name!r}")
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for name, p in self.params.items():
            g = p.grad
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p.data -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)

    def state_arrays(self) -> dict:
        """Flat name -> array view of the moment estimates (for checkpoints)."""
        out = {}
        for name in self.params:
            out[f"adam.m.{name}"] = self.m[name]
            out[f"adam.v.{name}"] = self.v[name]
        return out

    def load_state_arrays(self, arrays: dict, t: int):
        self.t = int(t)
        for name in self.params:
            self.m[name] = np.array(arrays[f"adam.m.{name}"], dtype=np.float64)
            self.v[name] = np.array(arrays[f"adam.v.{name}"], dtype=np.float64)


def adam_step(params: dict, state: Adam | None = None, lr=0.01,
              beta1=0.9, beta2=0.999, eps=1e-8) -> Adam:
    """One functional Adam update over ``params`` (dict name -> Tensor).

    Creates zero-moment state on the first call; returns the state to thread
    through subsequent calls. Gradients are read from each tensor's ``.grad``.
    """
    if state is None:
        state = Adam(params, lr=lr, beta1=beta1, beta2=beta2, eps=eps)
    state.step()
    return state
