#!/usr/bin/env python3
"""Tour of the reverse-mode autodiff engine behind every model here.

Builds a tiny expression graph by hand, checks its gradients against central
finite differences, then runs gradient descent with the Adam optimizer on a
least-squares fit to show the full train-step loop.
"""

import numpy as np

from dynetforge import Adam, Tensor, backward
from dynetforge.autodiff import gradcheck, matmul, mean_abs, sigmoid, sub, tanh

rng = np.random.default_rng(0)

# 1. a scalar chain: loss = mean|tanh(x @ w) - y|
x = Tensor(rng.standard_normal((4, 3)))
y = Tensor(rng.standard_normal((4, 2)))
w = Tensor(rng.standard_normal((3, 2)), requires_grad=True)

loss = mean_abs(sub(tanh(matmul(x, w)), y))
backward(loss)
print(f"loss = {loss.item():.4f}")
print(f"dloss/dw (first row) = {w.grad[0]}")

# 2. the same gradients, validated against central finite differences
w2 = Tensor(w.data.copy(), requires_grad=True)
worst = gradcheck(lambda w2: mean_abs(sub(tanh(matmul(x, w2)), y)), [w2])
print(f"gradcheck max relative error vs finite differences: {worst:.2e}")

# 3. a full optimization loop: recover a planted linear map
target = rng.standard_normal((3, 2))
inputs = Tensor(rng.standard_normal((64, 3)))
labels = Tensor(inputs.data @ target)
w3 = Tensor(np.zeros((3, 2)), requires_grad=True)
opt = Adam({"w": w3}, lr=0.05)
for step in range(300):
    opt.zero_grad()
    fit = mean_abs(sub(matmul(inputs, w3), labels))
    backward(fit)
    opt.step()
    if step % 60 == 0:
        print(f"step {step:3d}  fit loss {fit.item():.5f}")
print(f"recovered weights within {np.max(np.abs(w3.data - target)):.4f} of the target")

# 4. sigmoid sanity: value 0.5 and slope 0.25 at zero
z = Tensor([[0.0]], requires_grad=True)
s = sigmoid(z)
backward(s)
print(f"sigmoid(0) = {s.item()}, derivative = {z.grad[0, 0]}")
