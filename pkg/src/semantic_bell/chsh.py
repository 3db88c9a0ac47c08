"""CHSH estimators: product vectors, density matrix, projector expectations.

Two estimators are provided:

* ``chsh_literal`` builds rho = (1/N) sum v v^T from unit-normalised product
  vectors and reads E(XY) = 4 Tr(rho P_XY) with P_XY the rank-1 diagonal
  projector. Because the projector discards sign, E >= 0, the four E sum to 4
  and S = 4 - 2 E(AB').
* ``chsh_signed`` is the textbook mean-of-products estimator, usable on
  joint trial records or on pairwise samples from synthetic sources.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import SETTING_LABELS, SettingLabel, TrialRecord

CLASSICAL_BOUND = 2.0
TSIRELSON_BOUND = 2.0 * math.sqrt(2.0)
ALGEBRAIC_MAXIMUM = 4.0

NORM_TOL = 1e-12
TRACE_TOL = 1e-12
SYMMETRY_TOL = 1e-12
PSD_TOL = 1e-10

# Component order of product vectors and of the density-matrix axes.
PAIR_LABELS = ("AB", "AB'", "A'B", "A'B'")
_PAIR_SIGNS = np.array([1.0, -1.0, 1.0, 1.0])
_PAIR_FACTORS = {
    "AB": (SettingLabel.A, SettingLabel.B),
    "AB'": (SettingLabel.A, SettingLabel.B_PRIME),
    "A'B": (SettingLabel.A_PRIME, SettingLabel.B),
    "A'B'": (SettingLabel.A_PRIME, SettingLabel.B_PRIME),
}


class ZeroNorm(ValueError):
    pass


class EmptyEnsemble(ValueError):
    pass


class MissingPair(ValueError):
    pass


class EstimatorMode(str, enum.Enum):
    JOINT = "joint"
    PAIRWISE = "pairwise"


def product_vector(trial: TrialRecord) -> np.ndarray:
    """(a*b, a*b', a'*b, a'*b') for one trial; zero outcomes propagate."""
    return np.array(
        [trial.outcomes[x].value * trial.outcomes[y].value for x, y in _PAIR_FACTORS.values()],
        dtype=float,
    )


def normalize(raw: Sequence[float]) -> np.ndarray:
    v = np.asarray(raw, dtype=float)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise ZeroNorm("product vector is all zeros")
    return v / norm


@dataclass(frozen=True)
class DensityMatrix:
    matrix: np.ndarray

    def check(self) -> None:
        m = self.matrix
        if m.shape != (4, 4):
            raise ValueError(f"density matrix must be 4x4, got {m.shape}")
        if abs(np.trace(m) - 1.0) > TRACE_TOL:
            raise ValueError(f"trace {np.trace(m)!r} differs from 1")
        if np.max(np.abs(m - m.T)) > SYMMETRY_TOL:
            raise ValueError("density matrix is not symmetric")
        if np.linalg.eigvalsh(m).min() < -PSD_TOL:
            raise ValueError("density matrix is not positive semidefinite")


def density_matrix(vectors: Iterable[Sequence[float]]) -> DensityMatrix:
    vs = np.asarray(list(vectors), dtype=float)
    if vs.size == 0:
        raise EmptyEnsemble("no vectors")
    vs = vs.reshape(-1, 4)
    norms = np.linalg.norm(vs, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-9):
        raise ValueError("density_matrix expects unit-normalised vectors")
    rho = vs.T @ vs / len(vs)
    # exact symmetry; the matmul already is, this just guards against BLAS quirks
    rho = 0.5 * (rho + rho.T)
    return DensityMatrix(rho)


def expectation(rho: DensityMatrix, component: str) -> float:
    """E(XY) = 4 Tr(rho P_XY) with P_XY the diagonal projector on ``component``."""
    i = PAIR_LABELS.index(component)
    projector = np.zeros((4, 4))
    projector[i, i] = 1.0
    return 4.0 * float(np.trace(rho.matrix @ projector))


@dataclass(frozen=True)
class CHSHResult:
    e_ab: float
    e_abp: float
    e_apb: float
    e_apbp: float
    s_literal: float
    s_signed: float
    n_complete: int
    n_discarded: int

    @property
    def expectations(self) -> tuple[float, float, float, float]:
        return (self.e_ab, self.e_abp, self.e_apb, self.e_apbp)

    def to_dict(self) -> dict:
        return {
            "E_AB": self.e_ab,
            "E_AB'": self.e_abp,
            "E_A'B": self.e_apb,
            "E_A'B'": self.e_apbp,
            "S_literal": self.s_literal,
            "S_signed": self.s_signed,
            "n_complete": self.n_complete,
            "n_discarded": self.n_discarded,
        }


def _signed_from_products(products: np.ndarray) -> float:
    total = 0.0
    for j, sign in enumerate(_PAIR_SIGNS):
        col = products[:, j]
        nonzero = col[col != 0]
        # a pair with no usable products contributes nothing
        if nonzero.size:
            total += sign * nonzero.mean()
    return float(total)


def chsh_literal(trials: Sequence[TrialRecord]) -> CHSHResult:
    """Density-matrix S over trials; all-zero product vectors are discarded."""
    raw = [product_vector(t) for t in trials]
    kept = [v for v in raw if np.any(v != 0)]
    if not kept:
        raise EmptyEnsemble(f"all {len(raw)} trials have zero product vectors")
    rho = density_matrix(normalize(v) for v in kept)
    e = [expectation(rho, c) for c in PAIR_LABELS]
    s_literal = e[0] - e[1] + e[2] + e[3]
    return CHSHResult(
        *e,
        s_literal=s_literal,
        s_signed=_signed_from_products(np.array(kept)),
        n_complete=len(kept),
        n_discarded=len(raw) - len(kept),
    )


@dataclass(frozen=True)
class PairSample:
    """One pairwise sample: which setting pair was measured, and the two outcomes."""

    pair: str
    a: int
    b: int


def chsh_signed(samples, mode: EstimatorMode = EstimatorMode.JOINT) -> float:
    """mean(ab) - mean(ab') + mean(a'b) + mean(a'b'), zero products excluded per mean.

    JOINT takes TrialRecords (or raw 4-tuples of outcomes ordered a, a', b, b');
    PAIRWISE takes PairSample-like ``(pair, a, b)`` triples.
    """
    mode = EstimatorMode(mode)
    if mode == EstimatorMode.JOINT:
        rows = []
        for s in samples:
            if isinstance(s, TrialRecord):
                rows.append(product_vector(s))
            else:
                a, ap, b, bp = s
                rows.append([a * b, a * bp, ap * b, ap * bp])
        if not rows:
            raise EmptyEnsemble("no trials")
        return _signed_from_products(np.asarray(rows, dtype=float))

    sums = dict.fromkeys(PAIR_LABELS, 0.0)
    counts = dict.fromkeys(PAIR_LABELS, 0)
    for s in samples:
        pair, a, b = (s.pair, s.a, s.b) if isinstance(s, PairSample) else s
        if pair not in sums:
            raise ValueError(f"unknown setting pair {pair!r}")
        if a * b != 0:
            sums[pair] += a * b
            counts[pair] += 1
    missing = [p for p in PAIR_LABELS if counts[p] == 0]
    if missing:
        raise MissingPair(f"no usable samples for {missing}")
    return float(sum(sign * sums[p] / counts[p] for sign, p in zip(_PAIR_SIGNS, PAIR_LABELS)))


__all__ = [
    "ALGEBRAIC_MAXIMUM",
    "CHSHResult",
    "CLASSICAL_BOUND",
    "DensityMatrix",
    "EmptyEnsemble",
    "EstimatorMode",
    "MissingPair",
    "PAIR_LABELS",
    "PairSample",
    "SETTING_LABELS",
    "TSIRELSON_BOUND",
    "ZeroNorm",
    "chsh_literal",
    "chsh_signed",
    "density_matrix",
    "expectation",
    "normalize",
    "product_vector",
]
