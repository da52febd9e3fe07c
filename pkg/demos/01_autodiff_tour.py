"""A short tour of the numpy autodiff core: build a graph, run backward, check it."""

import numpy as np

from dsin import tensor as tn
from dsin.tensor import Tensor, backward, finite_diff_check

# a leaf that wants gradients
x = Tensor([1.0, 2.0], requires_grad=True)
loss = tn.tsum(x * x)
backward(loss)
print("d/dx sum(x*x) at [1, 2] ->", x.grad)          # [2. 4.]

# broadcasting: the bias gradient is summed back to its own shape
a = Tensor(np.ones((3, 4)), requires_grad=True)
b = Tensor(np.zeros(4), requires_grad=True)
backward(tn.tsum(tn.relu(a + b)))
print("bias grad shape", b.grad.shape, "values", b.grad)

# masked softmax: padded positions get exactly zero weight
w = tn.softmax(Tensor([2.0, 1.0, 5.0]), mask=[True, True, False])
print("masked softmax", w.data, "sum", w.data.sum())

# layer norm of [1, 3] with unit gain is [-1, 1]
print("layer_norm([1,3])", tn.layer_norm(Tensor([1.0, 3.0]), Tensor([1.0, 1.0]), Tensor([0.0, 0.0]), eps=0.0).data)

# every op ships with an analytic backward; compare against central differences
rng = np.random.default_rng(0)
q = Tensor(rng.normal(size=(3, 5)), requires_grad=True)
mask = rng.random((3, 5)) < 0.7
mask[:, 0] = True
report = finite_diff_check(lambda v: tn.tsum(tn.softmax(v, mask=mask) * np.arange(5.0)), [q])
print(f"softmax gradcheck: max rel err {report.max_rel_err:.2e}, passed={report.passed}")
