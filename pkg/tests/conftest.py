import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dictseg import (
    MODE_P,
    MODE_SP,
    Atom,
    Dictionary,
    Hyperparameters,
    LatentState,
    PosteriorContext,
    TimeSeries,
    evaluate_dictionary,
)


def make_state(gamma_positions, n, atom_indices=None, num_atoms=None):
    """LatentState from 1-based selected positions/atom indices."""
    gamma = np.zeros(n, dtype=bool)
    gamma[np.asarray(gamma_positions, dtype=int) - 1] = True
    r = None
    if atom_indices is not None:
        r = np.zeros(num_atoms, dtype=bool)
        r[np.asarray(atom_indices, dtype=int) - 1] = True
    return LatentState(gamma=gamma, r=r)


def small_dictionary():
    """Constant + one sine + one point indicator (M = 3)."""
    return Dictionary(atoms=(
        Atom("constant"),
        Atom("sine", {"frequency": 1 / 6}),
        Atom("point_indicator", {"location": 4.0}),
    ))


def small_context(n=12, seed=42, mode=MODE_SP, pi=0.1, eta=0.2, c1=50.0, c2=50.0):
    """Seeded instance used across the posterior tests."""
    rng = np.random.default_rng(seed)
    values = rng.normal(0.0, 1.0, n) + np.where(np.arange(1, n + 1) > n // 2, 2.0, 0.0)
    series = TimeSeries(values=values)
    if mode == MODE_P:
        hyper = Hyperparameters.flat(n, None, c1=c1, pi=pi)
        return PosteriorContext(series, hyper, None, MODE_P)
    design = evaluate_dictionary(small_dictionary(), series.covariate)
    hyper = Hyperparameters.flat(n, design.num_atoms, c1=c1, c2=c2, pi=pi, eta=eta)
    return PosteriorContext(series, hyper, design, MODE_SP)


def random_instance(rng, n_max=64, mode=MODE_SP, d_gamma_max=8, d_r_max=6):
    """Random (context, state) pair for oracle-agreement sweeps."""
    n = int(rng.integers(8, n_max + 1))
    values = rng.normal(0.0, 1.0, n) + rng.normal(0.0, 2.0) \
        + np.where(np.arange(n) > n // 2, rng.normal(0.0, 1.5), 0.0)
    series = TimeSeries(values=values)
    d_gamma = int(rng.integers(1, min(d_gamma_max, n - 1) + 1))
    gpos = [1] + sorted(rng.choice(np.arange(2, n + 1), size=d_gamma - 1,
                                   replace=False).tolist())
    pi_scalar = float(rng.uniform(0.005, 0.3))
    c1 = float(rng.uniform(2.0, 200.0))
    if mode == MODE_P:
        hyper = Hyperparameters.flat(n, None, c1=c1, pi=pi_scalar)
        ctx = PosteriorContext(series, hyper, None, MODE_P)
        return ctx, make_state(gpos, n)
    num_atoms = int(rng.integers(2, 9))
    atoms = [Atom("constant")]
    for j in range(1, num_atoms):
        kind = rng.choice(["sine", "cosine", "point_indicator", "poly"])
        if kind in ("sine", "cosine"):
            atoms.append(Atom(kind, {"frequency": float(rng.uniform(0.02, 0.45))}))
        elif kind == "poly":
            atoms.append(Atom("poly", {"degree": int(rng.integers(1, 4))}))
        else:
            atoms.append(Atom("point_indicator",
                              {"location": float(rng.integers(1, n + 1))}))
    design = evaluate_dictionary(Dictionary(atoms=tuple(atoms)), series.covariate)
    d_r = int(rng.integers(1, min(d_r_max, num_atoms) + 1))
    ratoms = [1] + sorted(rng.choice(np.arange(2, num_atoms + 1), size=d_r - 1,
                                     replace=False).tolist())
    c2 = float(rng.uniform(2.0, 200.0))
    eta_scalar = float(rng.uniform(0.005, 0.3))
    hyper = Hyperparameters.flat(n, num_atoms, c1=c1, c2=c2, pi=pi_scalar, eta=eta_scalar)
    ctx = PosteriorContext(series, hyper, design, MODE_SP)
    return ctx, make_state(gpos, n, ratoms, num_atoms)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
