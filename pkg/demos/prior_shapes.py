"""
Shapes of the two- and three-layer priors.

Prints log-densities on a grid of |alpha| so the tails can be compared
without a plotting dependency. Run with ``python demos/prior_shapes.py``.
"""

import numpy as np

from sbchan.model import log_prior_2L, log_prior_3L

# %% Two layers, fixed eta
# epsilon = 1.5 is the Laplace case; smaller shapes put a pole at the
# origin and fatten the tail.
r = np.array([0.01, 0.1, 0.5, 1.0, 2.0, 5.0])
print("|alpha|      " + " ".join(f"{x:>9.2f}" for x in r))
for eps in (0.5, 1.0, 1.5, 2.5):
    row = log_prior_2L(r, eps, 1.0)
    print(f"2L eps={eps:<4}  " + " ".join(f"{v:9.3f}" for v in row))

# %% Three layers, eta integrated out
# With a hyperprior on eta the tail decays polynomially rather than
# exponentially, which is what lets large gains escape shrinkage.
for eps in (0.5, 1.5):
    row = [log_prior_3L(x, eps, 1.0, 1.0) for x in r]
    print(f"3L eps={eps:<4}  " + " ".join(f"{v:9.3f}" for v in row))

# %% Tail slopes in log-log coordinates
far = np.array([10.0, 100.0])
for label, vals in [
    ("2L eps=1.5", log_prior_2L(far, 1.5, 1.0)),
    ("3L eps=1.5", np.array([log_prior_3L(x, 1.5, 1.0, 1.0) for x in far])),
]:
    print(f"{label}: d log p / d log|alpha| between 10 and 100 = {np.diff(vals)[0] / np.log(10):.2f}")
