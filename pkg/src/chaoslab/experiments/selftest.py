"""Self-test suite: Malliavin calculus identities on random functionals."""

from __future__ import annotations

import logging
import math

import numpy as np

from chaoslab.chaos.functional import (
    ChaosFunctional,
    OUOperator,
    chaos_inner,
    divergence,
    eval_chaos,
    malliavin_derivative,
    ou_apply,
    poincare_sides,
    random_functional,
)
from chaoslab.chaos.sampling import GaussianDraw, mehler_coupled_draw, monte_carlo_blocks, stream_rng
from chaoslab.chaos.hermite import gauss_hermite, hermite_table
from chaoslab.core.tensors import HilbertSpec, occupation
from chaoslab.experiments.checks import CheckResult, at_most, family_z_gate
from chaoslab.experiments.config import SelftestConfig
from chaoslab.utils.parallel import ordered_sum

logger = logging.getLogger(__name__)


def _negate(F: ChaosFunctional) -> ChaosFunctional:
    return F.scale_orders([-1.0] * F.max_order, mean_factor=-1.0)


def basis_orthogonality(m: int, max_order: int) -> float:
    """Largest ``|E[Π H_{a_j} Π H_{b_j}]|`` between basis elements of different orders.

    One-dimensional Gauss–Hermite moments are exact at these degrees, so the
    Gram matrix factorises coordinate by coordinate.
    """
    knots, weights = gauss_hermite(max_order + 1)
    table = hermite_table(max_order, knots)
    moments = (table * weights) @ table.T
    occ = [occupation(m, n) for n in range(max_order + 1)]
    worst = 0.0
    for n in range(max_order + 1):
        for k in range(n + 1, max_order + 1):
            gram = np.prod(moments[occ[n][:, None, :], occ[k][None, :, :]], axis=2)
            worst = max(worst, float(np.abs(gram).max()))
    return worst


def identity_checks(functionals: list[ChaosFunctional], cfg: SelftestConfig, seed: int) -> list[CheckResult]:
    """Exact identities, worst kernel discrepancy over all functionals."""
    tol = cfg.tolerance
    worst = {"L=-deltaD": 0.0, "semigroup": 0.0, "L_Linv": 0.0, "delta_phi=I1": 0.0,
             "orthogonality": 0.0, "poincare": 0.0, "poincare_equality": 0.0}
    times = cfg.semigroup_times
    rng = stream_rng(seed, "selftest.phi")
    for F in functionals:
        generator = ou_apply(F, OUOperator.GENERATOR)
        worst["L=-deltaD"] = max(worst["L=-deltaD"],
                                 generator.max_abs_difference(_negate(divergence(malliavin_derivative(F, 1)))))
        for t in times:
            for s in times:
                twice = ou_apply(ou_apply(F, OUOperator.SEMIGROUP, t), OUOperator.SEMIGROUP, s)
                once = ou_apply(F, OUOperator.SEMIGROUP, t + s)
                worst["semigroup"] = max(worst["semigroup"], twice.max_abs_difference(once))
        round_trip = ou_apply(ou_apply(F, OUOperator.PSEUDO_INVERSE), OUOperator.GENERATOR)
        worst["L_Linv"] = max(worst["L_Linv"], round_trip.max_abs_difference(F.centered()))

        lifted = F.spec.lift(1)
        phi = rng.standard_normal(lifted.p)
        integral = divergence(ChaosFunctional.constant(lifted, phi))
        expected = phi.reshape(F.spec.m, F.spec.p)
        gap = max(float(np.abs(integral.kernel(1).coeffs - expected).max()),
                  max((float(np.abs(k.coeffs).max(initial=0.0)) for k in integral.kernels[1:]), default=0.0))
        worst["delta_phi=I1"] = max(worst["delta_phi=I1"], gap)

        var, grad = poincare_sides(F)
        worst["poincare"] = max(worst["poincare"], var - grad)
        var1, grad1 = poincare_sides(F.truncated(1))
        worst["poincare_equality"] = max(worst["poincare_equality"], abs(var1 - grad1))

    if functionals:
        worst["orthogonality"] = basis_orthogonality(functionals[0].spec.m, max(F.max_order for F in functionals))
    return [at_most(name, value, tol, n_functionals=len(functionals)) for name, value in worst.items()]


def isometry_check(F: ChaosFunctional, cfg: SelftestConfig, seed: int, z_gate: float,
                   block_size=None, threads=1) -> CheckResult:
    """Monte Carlo covariance of ``eval_chaos`` against ``chaos_inner``, entrywise z-scores."""
    m, p = F.spec.m, F.spec.p

    def block(rng, index, n):
        x = eval_chaos(F, rng.standard_normal((n, m))) - F.mean
        outer = np.einsum("ni,nj->nij", x, x)
        return np.stack([outer.sum(axis=0), (outer ** 2).sum(axis=0)])

    sums = ordered_sum(monte_carlo_blocks(block, cfg.n_mc, seed, "selftest.isometry", block_size, threads))
    mean = sums[0] / cfg.n_mc
    stderr = np.sqrt(np.clip(sums[1] / cfg.n_mc - mean ** 2, 0.0, None) / cfg.n_mc)
    exact = chaos_inner(F, F)[0].entries
    iu = np.triu_indices(p)
    z = np.abs(mean - exact)[iu] / stderr[iu]
    gate = family_z_gate(z_gate, z.size)
    return at_most("isometry", float(z.max()), gate, kind="statistical", n_mc=cfg.n_mc, comparisons=int(z.size))


def mehler_check(F: ChaosFunctional, cfg: SelftestConfig, seed: int, z_gate: float,
                 block_size=None, threads=1) -> CheckResult:
    """``P_t F(g)`` against the coupled-draw average ``E[F(e^{-t}g + √(1-e^{-2t}) g')]``."""
    points = GaussianDraw.sample(F.spec.m, stream_rng(seed, "selftest.mehler.points"), cfg.mehler_points)
    z_max, comparisons = 0.0, 0
    for t in cfg.mehler_times:
        analytic = eval_chaos(ou_apply(F, OUOperator.SEMIGROUP, t), points.g)
        for i, g in enumerate(points.batch):
            def block(rng, index, n, g=g):
                base = GaussianDraw(np.repeat(g[None, :], n, axis=0))
                values = eval_chaos(F, mehler_coupled_draw(base, rng, t))
                return np.stack([values.sum(axis=0), (values ** 2).sum(axis=0)])

            tag = f"selftest.mehler.t={t:g}.point={i}"
            sums = ordered_sum(monte_carlo_blocks(block, cfg.n_mc, seed, tag, block_size, threads))
            mean = sums[0] / cfg.n_mc
            stderr = np.sqrt(np.clip(sums[1] / cfg.n_mc - mean ** 2, 0.0, None) / cfg.n_mc)
            z = np.abs(mean - analytic[i]) / np.where(stderr > 0, stderr, math.inf)
            z_max = max(z_max, float(z.max()))
            comparisons += z.size
    gate = family_z_gate(z_gate, comparisons)
    return at_most("mehler", z_max, gate, kind="statistical", n_mc=cfg.n_mc, comparisons=comparisons)


def selftest_functionals(cfg: SelftestConfig, seed: int) -> list[ChaosFunctional]:
    spec = HilbertSpec.euclidean(cfg.m, cfg.p)
    return [
        random_functional(spec, cfg.max_order, stream_rng(seed, "selftest.functionals", i), centered=False)
        for i in range(cfg.n_functionals)
    ]


def run_selftest_checks(cfg: SelftestConfig, seed: int, z_gate: float = 3.0,
                        block_size=None, threads=1) -> tuple[list[CheckResult], list[ChaosFunctional]]:
    functionals = selftest_functionals(cfg, seed)
    logger.info("selftest: %d functionals (m=%d, p=%d, orders <= %d)",
                len(functionals), cfg.m, cfg.p, cfg.max_order)
    checks = identity_checks(functionals, cfg, seed)
    checks.append(isometry_check(functionals[0], cfg, seed, z_gate, block_size, threads))
    checks.append(mehler_check(functionals[0], cfg, seed, z_gate, block_size, threads))
    return checks, functionals
