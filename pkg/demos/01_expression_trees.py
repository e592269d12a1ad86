"""Expression trees with exact second-order derivatives.

Candidate energies are trees over the shifted invariants (I1-3, I2-3).
Forward-mode propagation carries value, gradient, and Hessian through every
node in one pass, so stresses (first derivatives) and stability checks
(second derivatives) need no finite differencing.
"""

import numpy as np

from hypersr import exprtree

# Build a small energy by parsing; round-trips through the formatter.
expr = exprtree.parse("0.2*I1 + 0.05*I2 + 0.01*I1^2")
print("expression: ", exprtree.format_expr(expr))
print("complexity: ", exprtree.complexity(expr), "nodes")

# Exact derivatives at one state.
point = np.array([2.0, 1.5])   # (I1-3, I2-3)
out = exprtree.evaluate_with_derivatives(expr, point)
print("\nat (I1-3, I2-3) =", tuple(point))
print("W      =", out.value)
print("grad W =", out.gradient)
print("hess W =\n", out.hessian)

# Compare against central finite differences.
h = 1e-6
fd = np.empty(2)
for i in range(2):
    lo, hi = point.copy(), point.copy()
    lo[i] -= h
    hi[i] += h
    fd[i] = (exprtree.evaluate(expr, hi) - exprtree.evaluate(expr, lo)) / (2 * h)
print("\nfinite-difference gradient:", fd)
print("max abs error:             ", np.max(np.abs(fd - out.gradient)))

# Batched evaluation: derivatives for many states at once.
pts = np.stack([np.linspace(0, 5, 6), np.linspace(0, 3, 6)])
vals, grads, hess = exprtree.evaluate_d2_batch(expr, pts)
print("\nbatched W over 6 states:", np.round(vals, 4))
print("dW/dI1 over 6 states:   ", np.round(grads[0], 4))

# Invalid operations propagate NaN instead of being masked, so the search
# can reject ill-defined candidates outright.
bad = exprtree.parse("log(I1 - 10.0)")
print("\nlog of a negative argument ->", exprtree.evaluate(bad, np.array([2.0, 0.0])))

# Simplification folds constants and strips redundant structure.
messy = exprtree.parse("-(-0.05*I2 + -0.2*I1) + 0.0*I1")
print("\nsimplify:", exprtree.format_expr(messy), "->",
      exprtree.format_expr(exprtree.simplify(messy)))
