"""Collapsed log-posterior over the pair of inclusion vectors.

The coefficient vectors and the noise variance are integrated out
analytically, leaving a density over (gamma, r) alone.  Up to one
additive constant shared by every state on a fixed context, it equals

    -(d_g/2)·log(1+c1) + log_prior(gamma) + log_prior(r)
    + (1/2)·logdet(Fr'Fr) - (d_r/2)·log c2 - (1/2)·logdet(A)
    - (n/2)·log(q/2)

with  A = (1 + 1/c2)·Fr'Fr - s·(Xg'Fr)'(Xg'Xg)^{-1}(Xg'Fr),
      q = Y'Uinv·Y - v'A^{-1}v,   v = Fr'Uinv·Y,
      Uinv = I - s·Xg(Xg'Xg)^{-1}Xg',   s = c1/(1+c1).

The optimized path expands every Uinv product through that projection
identity, so no n x n matrix is ever formed: per evaluation it gathers
cached suffix sums (O(n·(d_g + d_r)) work) and factorizes matrices of
size d_g and d_r only.  A dense reference path forms Uinv explicitly
and follows the integration result term by term; both paths return the
same value, shared constant included.

Segmentation-only evaluation ("p" mode) drops every r-dependent term:
-(d_g/2)·log(1+c1) + log_prior(gamma) - (n/2)·log(q_p/2) with
q_p = Y'Uinv·Y (same integration with the dictionary term absent).

Singular Fr'Fr or A means the selected atoms are linearly dependent:
the model is improper under the g-prior, and the state gets density
-inf rather than a jittered factorization.  Likewise q below the
relative floor Q_FLOOR·Y'Y is treated as a degenerate perfect fit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve

from .dictionary import DesignMatrix
from .errors import ValidationError
from .stepmodel import TimeSeries

MODE_SP = "sp"
MODE_P = "p"

Q_FLOOR = 1e-12


def _log_or_neg_inf(p: np.ndarray) -> np.ndarray:
    return np.where(p > 0.0, np.log(np.where(p > 0.0, p, 1.0)), -np.inf)


@dataclass(frozen=True)
class Hyperparameters:
    """Prior scales and per-component inclusion probabilities.

    pi[0] and eta[0] (the 1-based "first" entries) are pinned at 1:
    the first step position and the constant atom are always in.
    """

    c1: float
    pi: np.ndarray
    c2: float | None = None
    eta: np.ndarray | None = None

    def __post_init__(self):
        if self.c1 <= 0:
            raise ValidationError("c1 must be positive")
        pi = np.asarray(self.pi, dtype=float)
        if pi[0] != 1.0:
            raise ValidationError("pi[1] must equal 1 (first position pinned)")
        if np.any((pi < 0) | (pi > 1)):
            raise ValidationError("pi entries must lie in [0, 1]")
        object.__setattr__(self, "pi", pi)
        if self.eta is not None:
            if self.c2 is None or self.c2 <= 0:
                raise ValidationError("c2 must be positive when eta is given")
            eta = np.asarray(self.eta, dtype=float)
            if eta[0] != 1.0:
                raise ValidationError("eta[1] must equal 1 (constant atom pinned)")
            if np.any((eta < 0) | (eta > 1)):
                raise ValidationError("eta entries must lie in [0, 1]")
            object.__setattr__(self, "eta", eta)

    @classmethod
    def flat(cls, n: int, num_atoms: int | None, c1: float = 50.0,
             c2: float | None = 50.0, pi: float = 0.01, eta: float = 0.01):
        """Single scalar prior probability for every free component."""
        pi_vec = np.full(n, pi)
        pi_vec[0] = 1.0
        if num_atoms is None:
            return cls(c1=c1, pi=pi_vec)
        eta_vec = np.full(num_atoms, eta)
        eta_vec[0] = 1.0
        return cls(c1=c1, pi=pi_vec, c2=c2, eta=eta_vec)


@dataclass(frozen=True)
class LatentState:
    """Inclusion bits: gamma over step positions, r over atoms.

    r is None for segmentation-only states.  Bit 1 of each vector is
    always set.
    """

    gamma: np.ndarray
    r: np.ndarray | None = None

    def __post_init__(self):
        gamma = np.asarray(self.gamma, dtype=bool)
        if gamma.size == 0 or not gamma[0]:
            raise ValidationError("gamma[1] must be set")
        object.__setattr__(self, "gamma", gamma)
        if self.r is not None:
            r = np.asarray(self.r, dtype=bool)
            if r.size == 0 or not r[0]:
                raise ValidationError("r[1] must be set")
            object.__setattr__(self, "r", r)

    @property
    def d_gamma(self) -> int:
        return int(self.gamma.sum())

    @property
    def d_r(self) -> int:
        return int(self.r.sum()) if self.r is not None else 0

    def positions(self) -> np.ndarray:
        """1-based selected step positions, ascending."""
        return np.flatnonzero(self.gamma) + 1

    def atoms(self) -> np.ndarray:
        """1-based selected atom indices, ascending."""
        if self.r is None:
            raise ValidationError("state has no atom component")
        return np.flatnonzero(self.r) + 1


def log_prior_inclusion(bits: np.ndarray, probs: np.ndarray) -> float:
    """Independent-Bernoulli log prior; the pinned first entry adds 0."""
    bits = np.asarray(bits, dtype=bool)
    probs = np.asarray(probs, dtype=float)
    if bits.shape != probs.shape:
        raise ValidationError("bits and probabilities must have equal length")
    lp1 = _log_or_neg_inf(probs)
    lp0 = _log_or_neg_inf(1.0 - probs)
    return float(np.where(bits, lp1, lp0).sum())


class PosteriorContext:
    """Immutable per-series cache shared by every posterior evaluation.

    Holds Y'Y, F'F, F'Y plus the suffix sums of Y and of each design
    column; products against the step matrix then reduce to gathers.
    """

    def __init__(self, series: TimeSeries, hyper: Hyperparameters,
                 design: DesignMatrix | None = None, mode: str = MODE_SP):
        if mode not in (MODE_SP, MODE_P):
            raise ValidationError(f"mode must be '{MODE_SP}' or '{MODE_P}'")
        y = series.values
        n = len(y)
        if len(hyper.pi) != n:
            raise ValidationError("pi length must match series length")
        self.mode = mode
        self.series = series
        self.hyper = hyper
        self.design = design
        self.n = n
        self.yty = float(y @ y)
        self.suffix_y = np.cumsum(y[::-1])[::-1]
        self._lp1_gamma = _log_or_neg_inf(hyper.pi)
        self._lp0_gamma = _log_or_neg_inf(1.0 - hyper.pi)
        self.shrink = hyper.c1 / (1.0 + hyper.c1)
        self.log1p_c1 = float(np.log1p(hyper.c1))
        if mode == MODE_SP:
            if design is None:
                raise ValidationError("sp mode requires a design matrix")
            if hyper.eta is None:
                raise ValidationError("sp mode requires eta and c2")
            if design.n != n:
                raise ValidationError("design rows must match series length")
            if len(hyper.eta) != design.num_atoms:
                raise ValidationError("eta length must match atom count")
            F = design.matrix
            self.num_atoms = design.num_atoms
            self.ftf = F.T @ F
            self.fty = F.T @ y
            self.suffix_f = np.cumsum(F[::-1, :], axis=0)[::-1, :]
            self.log_c2 = float(np.log(hyper.c2))
            self.c2_inv = 1.0 / hyper.c2
            self._lp1_r = _log_or_neg_inf(hyper.eta)
            self._lp0_r = _log_or_neg_inf(1.0 - hyper.eta)
        else:
            self.num_atoms = 0

    def log_prior_gamma(self, gamma: np.ndarray) -> float:
        return float(np.where(gamma, self._lp1_gamma, self._lp0_gamma).sum())

    def log_prior_r(self, r: np.ndarray) -> float:
        return float(np.where(r, self._lp1_r, self._lp0_r).sum())

    def check_state(self, state: LatentState) -> None:
        if len(state.gamma) != self.n:
            raise ValidationError("gamma length must match series length")
        if self.mode == MODE_SP:
            if state.r is None:
                raise ValidationError("sp mode requires an atom component")
            if len(state.r) != self.num_atoms:
                raise ValidationError("r length must match atom count")


def _evaluate(ctx: PosteriorContext, gamma: np.ndarray, r: np.ndarray | None) -> float:
    """Collapsed log density on raw bit arrays; no argument validation.

    The Metropolis-Hastings inner loop calls this directly, so it stays
    allocation-lean: tiny-matrix factorizations only, cached gathers for
    every product against the step matrix.
    """
    gpos = np.flatnonzero(gamma) + 1
    d_gamma = gpos.size

    log_prior = ctx.log_prior_gamma(gamma)
    if ctx.mode == MODE_SP:
        log_prior += ctx.log_prior_r(r)
    if log_prior == -np.inf:
        return -np.inf

    gram = (ctx.n + 1 - np.maximum.outer(gpos, gpos)).astype(float)
    try:
        chol_g = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError:
        return -np.inf
    xty = ctx.suffix_y[gpos - 1]

    if ctx.mode == MODE_P:
        z = cho_solve((chol_g, True), xty, check_finite=False)
        q = ctx.yty - ctx.shrink * float(xty @ z)
        if q <= 0.0 or q < Q_FLOOR * ctx.yty:
            return -np.inf
        return (-0.5 * d_gamma * ctx.log1p_c1 + log_prior
                - 0.5 * ctx.n * np.log(0.5 * q))

    r_idx = np.flatnonzero(r)
    d_r = r_idx.size
    frfr = ctx.ftf[r_idx[:, None], r_idx]
    try:
        chol_f = np.linalg.cholesky(frfr)
    except np.linalg.LinAlgError:
        return -np.inf

    xtf = ctx.suffix_f[gpos - 1][:, r_idx]
    rhs = np.concatenate([xty[:, None], xtf], axis=1)
    sol = cho_solve((chol_g, True), rhs, check_finite=False)
    z, w = sol[:, 0], sol[:, 1:]

    y_uinv_y = ctx.yty - ctx.shrink * float(xty @ z)
    a_mat = (1.0 + ctx.c2_inv) * frfr - ctx.shrink * (xtf.T @ w)
    try:
        chol_a = np.linalg.cholesky(a_mat)
    except np.linalg.LinAlgError:
        return -np.inf
    v = ctx.fty[r_idx] - ctx.shrink * (xtf.T @ z)
    q = y_uinv_y - float(v @ cho_solve((chol_a, True), v, check_finite=False))
    if q <= 0.0 or q < Q_FLOOR * ctx.yty:
        return -np.inf

    logdet_f = 2.0 * float(np.log(chol_f.diagonal()).sum())
    logdet_a = 2.0 * float(np.log(chol_a.diagonal()).sum())
    return (-0.5 * d_gamma * ctx.log1p_c1 + log_prior
            + 0.5 * logdet_f - 0.5 * d_r * ctx.log_c2 - 0.5 * logdet_a
            - 0.5 * ctx.n * np.log(0.5 * q))


def log_integrated_posterior(state: LatentState, ctx: PosteriorContext) -> float:
    """Optimized collapsed log-posterior (no n x n matrices formed)."""
    ctx.check_state(state)
    return _evaluate(ctx, state.gamma, state.r)


MAX_DENSE_N = 512


def log_integrated_posterior_dense(state: LatentState, ctx: PosteriorContext) -> float:
    """Reference evaluation via the explicit n x n projection matrix.

    Same value as the optimized path, shared constant included.  Guarded
    to small n so it is never hit with production-size inputs.
    """
    if ctx.n > MAX_DENSE_N:
        raise ValidationError(f"dense evaluation limited to n <= {MAX_DENSE_N}")
    ctx.check_state(state)
    gpos = state.positions()
    d_gamma = gpos.size

    log_prior = ctx.log_prior_gamma(state.gamma)
    if ctx.mode == MODE_SP:
        log_prior += ctx.log_prior_r(state.r)
    if log_prior == -np.inf:
        return -np.inf

    n = ctx.n
    y = ctx.series.values
    x_full = np.tril(np.ones((n, n)))
    x_g = x_full[:, gpos - 1]
    u_inv = np.eye(n) - ctx.shrink * x_g @ np.linalg.solve(x_g.T @ x_g, x_g.T)
    y_uinv_y = float(y @ u_inv @ y)

    if ctx.mode == MODE_P:
        q = y_uinv_y
        if q <= 0.0 or q < Q_FLOOR * ctx.yty:
            return -np.inf
        return (-0.5 * d_gamma * ctx.log1p_c1 + log_prior
                - 0.5 * n * np.log(0.5 * q))

    r_idx = np.flatnonzero(state.r)
    d_r = r_idx.size
    f_r = ctx.design.matrix[:, r_idx]
    frfr = f_r.T @ f_r
    try:
        chol_f = np.linalg.cholesky(frfr)
    except np.linalg.LinAlgError:
        return -np.inf
    a_mat = f_r.T @ (u_inv + np.eye(n) * ctx.c2_inv) @ f_r
    try:
        chol_a = np.linalg.cholesky(a_mat)
    except np.linalg.LinAlgError:
        return -np.inf
    v = f_r.T @ (u_inv @ y)
    q = y_uinv_y - float(v @ cho_solve((chol_a, True), v))
    if q <= 0.0 or q < Q_FLOOR * ctx.yty:
        return -np.inf

    logdet_f = 2.0 * float(np.log(np.diag(chol_f)).sum())
    logdet_a = 2.0 * float(np.log(np.diag(chol_a)).sum())
    return (-0.5 * d_gamma * ctx.log1p_c1 + log_prior
            + 0.5 * logdet_f - 0.5 * d_r * ctx.log_c2 - 0.5 * logdet_a
            - 0.5 * n * np.log(0.5 * q))
