"""Conditional draws of the model coefficients given a selected model.

With the inclusion vectors fixed, the step coefficients, the atom
coefficients and the noise variance have conjugate full conditionals:

    beta   ~ N( s1·G^{-1}·Xg'(Y - Fr·lambda),  sigma2·s1·G^{-1} )
    lambda ~ N( s2·H^{-1}·Fr'(Y - Xg·beta),    sigma2·s2·H^{-1} )
    sigma2 ~ InvGamma( a, b/2 )

where G = Xg'Xg, H = Fr'Fr, s1 = c1/(1+c1), s2 = c2/(1+c2),
a = (n + d_g + d_r)/2 and b is the residual sum of squares plus the two
g-prior penalties beta'G beta/c1 and lambda'H lambda/c2.  The inverse
gamma is parametrized by shape a and scale b/2, density proportional to
x^{-a-1}·exp(-(b/2)/x); this is the unique parametrization consistent
with the product of the Gaussian likelihood, the two g-priors and the
scale-invariant noise prior.

The scan order is beta, lambda, sigma2.  Segmentation-only fits skip
the lambda step, drop the lambda penalty from b and use a = (n + d_g)/2.

The first step column and the constant atom are both all-ones, so the
fit is invariant under moving a constant offset between the segment
means and the dictionary part.  Reported posterior-mean estimates
resolve this by assigning the constant direction to the means: the
constant atom keeps coefficient 0 and beta at position 1 absorbs it.
The raw draws in the trace are left untouched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .errors import ComputeError, ValidationError
from .mh import InclusionProbabilities
from .posterior import MODE_SP, LatentState, PosteriorContext
from .stepmodel import (
    Segmentation,
    SparseStepVector,
    apply_step,
    beta_to_segmentation,
    step_gram,
)


@dataclass(frozen=True)
class GibbsConfig:
    total_iterations: int = 20000
    burn_in: int = 5000
    seed: int = 0
    initial_sigma2: float | None = None
    store_trace: bool = True

    def __post_init__(self):
        if not 0 <= self.burn_in < self.total_iterations:
            raise ValidationError("burn_in must satisfy 0 <= burn_in < total_iterations")
        if self.initial_sigma2 is not None and self.initial_sigma2 <= 0:
            raise ValidationError("initial sigma2 must be positive")


@dataclass(frozen=True)
class GibbsState:
    beta: np.ndarray
    lam: np.ndarray | None
    sigma2: float

    def __post_init__(self):
        if self.sigma2 <= 0:
            raise ValidationError("sigma2 must be positive")


@dataclass(frozen=True)
class GibbsTrace:
    """Post-initialization draws, one row per iteration."""

    beta: np.ndarray
    lam: np.ndarray | None
    sigma2: np.ndarray
    positions: tuple[int, ...]
    atoms: tuple[int, ...] | None

    def state_at(self, t: int) -> GibbsState:
        return GibbsState(beta=self.beta[t],
                          lam=self.lam[t] if self.lam is not None else None,
                          sigma2=float(self.sigma2[t]))

    def export_csv(self, path) -> None:
        cols = [f"beta@{p}" for p in self.positions]
        if self.atoms is not None:
            cols += [f"lambda@{a}" for a in self.atoms]
        with open(path, "w") as fh:
            fh.write("iteration," + ",".join(cols) + ",sigma2\n")
            for t in range(len(self.sigma2)):
                row = [str(t)] + [repr(float(v)) for v in self.beta[t]]
                if self.lam is not None:
                    row += [repr(float(v)) for v in self.lam[t]]
                row.append(repr(float(self.sigma2[t])))
                fh.write(",".join(row) + "\n")


@dataclass(frozen=True)
class FitResult:
    """Posterior-mean estimates for one selected model."""

    mode: str
    positions: tuple[int, ...]
    atoms: tuple[int, ...] | None
    beta_hat: np.ndarray
    lambda_hat: np.ndarray | None
    sigma_hat: float
    f_hat: np.ndarray | None
    segmentation_hat: Segmentation
    k_hat: int
    inclusion: InclusionProbabilities | None = None
    trace: GibbsTrace | None = None

    def beta_sparse(self) -> SparseStepVector:
        entries = {p: v for p, v in zip(self.positions, self.beta_hat) if v != 0.0}
        return SparseStepVector(entries=entries)

    def mean_path(self, n: int) -> np.ndarray:
        return self.segmentation_hat.mean_path(n)


class GibbsSampler:
    """Per-selection precomputation plus the three conditional draws."""

    def __init__(self, ctx: PosteriorContext, selection: LatentState):
        ctx.check_state(selection)
        self.ctx = ctx
        self.positions = selection.positions()
        self.d_gamma = self.positions.size
        self.gram = step_gram(self.positions, ctx.n)
        self.chol_g = np.linalg.cholesky(self.gram)
        self.xty = ctx.suffix_y[self.positions - 1]
        self.s1 = ctx.hyper.c1 / (1.0 + ctx.hyper.c1)
        if ctx.mode == MODE_SP:
            self.r_idx = np.flatnonzero(selection.r)
            self.atoms = self.r_idx + 1
            self.d_r = self.r_idx.size
            self.f_sel = ctx.design.matrix[:, self.r_idx]
            self.frfr = ctx.ftf[np.ix_(self.r_idx, self.r_idx)]
            try:
                self.chol_f = np.linalg.cholesky(self.frfr)
            except np.linalg.LinAlgError as exc:
                raise ComputeError("selected atoms are linearly dependent") from exc
            self.fty = ctx.fty[self.r_idx]
            self.xtf = ctx.suffix_f[self.positions - 1][:, self.r_idx]
            self.s2 = ctx.hyper.c2 / (1.0 + ctx.hyper.c2)
        else:
            self.d_r = 0
            self.atoms = None
        self.a_shape = 0.5 * (ctx.n + self.d_gamma + self.d_r)

    def beta_mean(self, lam: np.ndarray | None) -> np.ndarray:
        rhs = self.xty if lam is None else self.xty - self.xtf @ lam
        return self.s1 * cho_solve((self.chol_g, True), rhs)

    def beta_cov(self, sigma2: float) -> np.ndarray:
        return sigma2 * self.s1 * cho_solve((self.chol_g, True), np.eye(self.d_gamma))

    def draw_beta(self, lam, sigma2: float, rng: np.random.Generator) -> np.ndarray:
        z = rng.standard_normal(self.d_gamma)
        noise = solve_triangular(self.chol_g, z, lower=True, trans="T")
        return self.beta_mean(lam) + np.sqrt(sigma2 * self.s1) * noise

    def lambda_mean(self, beta: np.ndarray) -> np.ndarray:
        rhs = self.fty - self.xtf.T @ beta
        return self.s2 * cho_solve((self.chol_f, True), rhs)

    def lambda_cov(self, sigma2: float) -> np.ndarray:
        return sigma2 * self.s2 * cho_solve((self.chol_f, True), np.eye(self.d_r))

    def draw_lambda(self, beta, sigma2: float, rng: np.random.Generator) -> np.ndarray:
        z = rng.standard_normal(self.d_r)
        noise = solve_triangular(self.chol_f, z, lower=True, trans="T")
        return self.lambda_mean(beta) + np.sqrt(sigma2 * self.s2) * noise

    def sigma2_b(self, beta: np.ndarray, lam: np.ndarray | None) -> float:
        fit = apply_step(self.positions, beta, self.ctx.n)
        penalty = float(beta @ self.gram @ beta) / self.ctx.hyper.c1
        if lam is not None:
            fit = fit + self.f_sel @ lam
            penalty += float(lam @ self.frfr @ lam) / self.ctx.hyper.c2
        resid = self.ctx.series.values - fit
        return float(resid @ resid) + penalty

    def draw_sigma2(self, beta, lam, rng: np.random.Generator) -> float:
        b = self.sigma2_b(beta, lam)
        if b <= 0.0:
            raise ComputeError("inverse-gamma scale must be positive")
        return 1.0 / rng.gamma(shape=self.a_shape, scale=2.0 / b)


def draw_beta(lam, sigma2, ctx, selection, rng) -> np.ndarray:
    return GibbsSampler(ctx, selection).draw_beta(lam, sigma2, rng)


def draw_lambda(beta, sigma2, ctx, selection, rng) -> np.ndarray:
    return GibbsSampler(ctx, selection).draw_lambda(beta, sigma2, rng)


def draw_sigma2(beta, lam, ctx, selection, rng) -> float:
    return GibbsSampler(ctx, selection).draw_sigma2(beta, lam, rng)


def run_gibbs(ctx: PosteriorContext, selection: LatentState, config: GibbsConfig,
              rng: np.random.Generator | None = None,
              inclusion: InclusionProbabilities | None = None) -> FitResult:
    """Systematic-scan chain; posterior means over post-burn-in draws.

    Starts from the conditional means at the initial variance, which
    removes the transient without biasing the retained draws.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    sampler = GibbsSampler(ctx, selection)
    sp = ctx.mode == MODE_SP

    sigma2 = config.initial_sigma2
    if sigma2 is None:
        sigma2 = float(np.var(ctx.series.values))
        if sigma2 <= 0.0:
            sigma2 = 1.0
    beta = sampler.beta_mean(None if not sp else np.zeros(sampler.d_r))
    lam = sampler.lambda_mean(beta) if sp else None

    total, burn = config.total_iterations, config.burn_in
    beta_draws = np.empty((total, sampler.d_gamma))
    lam_draws = np.empty((total, sampler.d_r)) if sp else None
    sigma2_draws = np.empty(total)
    for t in range(total):
        beta = sampler.draw_beta(lam, sigma2, rng)
        if sp:
            lam = sampler.draw_lambda(beta, sigma2, rng)
        sigma2 = sampler.draw_sigma2(beta, lam, rng)
        beta_draws[t] = beta
        if sp:
            lam_draws[t] = lam
        sigma2_draws[t] = sigma2

    beta_hat = beta_draws[burn:].mean(axis=0)
    lambda_hat = lam_draws[burn:].mean(axis=0) if sp else None
    sigma_hat = float(np.sqrt(sigma2_draws[burn:]).mean())
    if sp:
        beta_hat[0] += lambda_hat[0]
        lambda_hat[0] = 0.0
    f_hat = sampler.f_sel @ lambda_hat if sp else None

    positions = tuple(int(p) for p in sampler.positions)
    beta_sparse = SparseStepVector(
        entries={p: v for p, v in zip(positions, beta_hat) if v != 0.0})
    segmentation = beta_to_segmentation(beta_sparse, ctx.n)

    trace = None
    if config.store_trace:
        trace = GibbsTrace(
            beta=beta_draws, lam=lam_draws, sigma2=sigma2_draws,
            positions=positions,
            atoms=tuple(int(a) for a in sampler.atoms) if sp else None,
        )
    return FitResult(
        mode=ctx.mode,
        positions=positions,
        atoms=tuple(int(a) for a in sampler.atoms) if sp else None,
        beta_hat=beta_hat,
        lambda_hat=lambda_hat,
        sigma_hat=sigma_hat,
        f_hat=f_hat,
        segmentation_hat=segmentation,
        k_hat=len(beta_sparse.entries),
        inclusion=inclusion,
        trace=trace,
    )
