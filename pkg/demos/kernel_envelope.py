"""
The frequency-localized kernel along x1
=======================================

|J(x1, 0, 0, 0)| at level k, against the envelope 2^(3k) min(1, |x1|^-2).
"""
import numpy as np

from dzk.kernel import cutoff_integral, kernel, kernel_tail_fit

k = 2
print(f"origin: {abs(kernel((0.0, 0.0, 0.0), 0.0, k)):.1f}  closed form: {cutoff_integral(k) ** 3:.1f}")
for x1 in np.geomspace(0.5, 50, 7):
    value = abs(kernel((x1, 0.0, 0.0), 0.0, k))
    envelope = 2.0 ** (3 * k) * min(1.0, x1**-2)
    print(f"x1={x1:7.3f}  |J|={value:12.5e}  |J|/envelope={value / envelope:9.3e}")

fit = kernel_tail_fit(k, np.geomspace(1.0, 100.0, 21))
print(f"tail slope of the decreasing envelope: {fit.slope:.3f}")
