"""Wiener chaos functionals: Hermite machinery, sampling and Malliavin calculus."""

from chaoslab.chaos.functional import (
    ChaosFunctional,
    OUOperator,
    chaos_inner,
    divergence,
    eval_chaos,
    malliavin_derivative,
    ou_apply,
)
from chaoslab.chaos.hermite import HermiteCoefficients, hermite_eval, hermite_expand
from chaoslab.chaos.sampling import GaussianDraw, mehler_coupled_draw, stream_rng
