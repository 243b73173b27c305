"""Two-timescale Adam-family methods for nonsmooth stochastic optimization.

Library layout:

- core: float64 vector helpers, sign selections, the (x, m, v) state triple
- problems: finite-sum nonsmooth test problems with conservative-gradient
  selections, a small ReLU network with tape-based backprop, closed-form
  stationarity gaps, and a finite-difference oracle
- optim: the momentum/second-moment update engine with five estimator rules
  (adam, adabelief, amsgrad, nadam, yogi)
- clip: clipping regions, the clipped methods sgd-c and adam-c, and the
  clipped estimator variants
- schedules_noise: stepsize, two-timescale, and clipping-radius schedules
  with validity checks; gaussian, uniform, and alpha-stable noise models
- analysis: Lyapunov evaluation, explicit-Euler simulation of the limiting
  differential inclusion, stationarity tracking, trajectory recording,
  and the stochastic experiment runner
- verification: named invariant and acceptance checks shared by the CLI
  and the test suite
- cli: the ``nsopt`` command (run, sweep, verify, simulate-di)
"""

__version__ = "0.1.0"
