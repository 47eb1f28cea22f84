"""Simulation and analysis lab for estimating a signal observed through
random cyclic shifts and additive Gaussian noise.

Modules: :mod:`.model` (signal/observation model and conventions),
:mod:`.metrics` (orbit distortion and aligned-channel yardsticks),
:mod:`.estimators` (template matching, EM, genie, two-stage net search),
:mod:`.bounds` (information-theoretic bounds, all in nats),
:mod:`.harness` (seeded sweeps and CSV contracts), :mod:`.cli` (the
``mra-lab`` command).
"""

__version__ = "0.1.0"
