"""Finite measures, kernels, joints, and exact information functionals.

Everything here is exact desk-scale probability: weights are plain numpy
arrays, all divergences are in nats, ``0 * log 0 = 0`` by convention, and
``+inf`` is a first-class value wherever absolute continuity fails.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import rel_entr

from .errors import ConfigurationError

# Constructors renormalize silent drift up to this much and reject anything worse.
DRIFT_TOL = 1e-9
# Post-construction mass and marginal checks hold to this.
MASS_TOL = 1e-12
# Individual weights may be negative by at most this (LP round-off); they are clipped.
NEG_TOL = 1e-12


def _clean_weights(w, what: str) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.size == 0:
        raise ConfigurationError(f"{what}: empty support")
    if not np.all(np.isfinite(w)):
        raise ConfigurationError(f"{what}: non-finite weights")
    if w.min() < -NEG_TOL:
        raise ConfigurationError(f"{what}: negative weight {w.min():.3e}")
    w = np.clip(w, 0.0, None)
    total = w.sum()
    if abs(total - 1.0) > DRIFT_TOL:
        raise ConfigurationError(f"{what}: mass {total!r} drifts from 1 beyond {DRIFT_TOL}")
    if total != 1.0:
        w = w / total
    w.flags.writeable = False
    return w


@dataclass(frozen=True)
class FiniteMeasure:
    """Probability vector over {0, ..., k-1}."""

    weights: np.ndarray

    def __init__(self, weights) -> None:
        object.__setattr__(self, "weights", _clean_weights(weights, "FiniteMeasure"))

    @property
    def support_size(self) -> int:
        return int(self.weights.size)

    def expectation(self, values) -> float:
        values = np.asarray(values, dtype=float)
        if values.shape != self.weights.shape:
            raise ConfigurationError("expectation: value vector shape mismatch")
        return float(self.weights @ values)

    @staticmethod
    def uniform(k: int) -> "FiniteMeasure":
        return FiniteMeasure(np.full(k, 1.0 / k))

    @staticmethod
    def point_mass(i: int, k: int) -> "FiniteMeasure":
        w = np.zeros(k)
        w[i] = 1.0
        return FiniteMeasure(w)

    def to_json(self) -> str:
        return json.dumps({"weights": self.weights.tolist()})

    @staticmethod
    def from_json(text: str) -> "FiniteMeasure":
        obj = json.loads(text)
        if not isinstance(obj, dict) or "weights" not in obj:
            raise ConfigurationError("FiniteMeasure JSON must be {\"weights\": [...]}")
        return FiniteMeasure(obj["weights"])


@dataclass(frozen=True)
class MarkovKernel:
    """Row-stochastic matrix: one FiniteMeasure per input point."""

    matrix: np.ndarray

    def __init__(self, rows) -> None:
        if isinstance(rows, np.ndarray) and rows.ndim == 2:
            mat = np.stack([_clean_weights(r, "MarkovKernel row") for r in rows])
        else:
            rows = list(rows)
            if not rows:
                raise ConfigurationError("MarkovKernel: no rows")
            if all(isinstance(r, FiniteMeasure) for r in rows):
                sizes = {r.support_size for r in rows}
                if len(sizes) != 1:
                    raise ConfigurationError("MarkovKernel: rows have mixed support sizes")
                mat = np.stack([r.weights for r in rows])
            else:
                mat = np.stack([_clean_weights(r, "MarkovKernel row") for r in rows])
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)

    @property
    def input_size(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def output_size(self) -> int:
        return int(self.matrix.shape[1])

    def row(self, i: int) -> FiniteMeasure:
        return FiniteMeasure(self.matrix[i])

    @staticmethod
    def constant(measure: FiniteMeasure, input_size: int) -> "MarkovKernel":
        return MarkovKernel(np.tile(measure.weights, (input_size, 1)))

    def to_json(self) -> str:
        return json.dumps({"rows": self.matrix.tolist()})

    @staticmethod
    def from_json(text: str) -> "MarkovKernel":
        obj = json.loads(text)
        if not isinstance(obj, dict) or "rows" not in obj:
            raise ConfigurationError("MarkovKernel JSON must be {\"rows\": [[...]]}")
        return MarkovKernel(np.asarray(obj["rows"], dtype=float))


@dataclass(frozen=True)
class JointMeasure:
    """Probability matrix over a product of two finite sets.

    Declared marginals, when attached, are re-checked against the row and
    column sums to MASS_TOL.
    """

    weights: np.ndarray
    marginals: tuple | None = field(default=None, compare=False)

    def __init__(self, weights, marginals: tuple | None = None) -> None:
        w = np.asarray(weights, dtype=float)
        if w.ndim != 2:
            raise ConfigurationError("JointMeasure: weights must be a 2-d array")
        flat = _clean_weights(w.ravel(), "JointMeasure")
        w = flat.reshape(w.shape)
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "marginals", marginals)
        if marginals is not None:
            mx, my = marginals
            if (np.abs(w.sum(axis=1) - mx.weights).max() > MASS_TOL
                    or np.abs(w.sum(axis=0) - my.weights).max() > MASS_TOL):
                raise ConfigurationError("JointMeasure: declared marginals do not match")

    def marginal_x(self) -> FiniteMeasure:
        return FiniteMeasure(self.weights.sum(axis=1))

    def marginal_y(self) -> FiniteMeasure:
        return FiniteMeasure(self.weights.sum(axis=0))

    def to_json(self) -> str:
        return json.dumps({"rows": self.weights.tolist()})

    @staticmethod
    def from_json(text: str) -> "JointMeasure":
        obj = json.loads(text)
        if not isinstance(obj, dict) or "rows" not in obj:
            raise ConfigurationError("JointMeasure JSON must be {\"rows\": [[...]]}")
        return JointMeasure(np.asarray(obj["rows"], dtype=float))


def product(p_x: FiniteMeasure, kernel: MarkovKernel) -> JointMeasure:
    """Joint law of (X, Y) when X ~ p_x and Y | X=x follows the kernel row."""
    if kernel.input_size != p_x.support_size:
        raise ConfigurationError("product: kernel input size != measure support size")
    return JointMeasure(p_x.weights[:, None] * kernel.matrix)


def kl_divergence(mu: FiniteMeasure, nu: FiniteMeasure) -> float:
    """Relative entropy D(mu || nu) in nats; +inf when mu is not << nu."""
    if mu.support_size != nu.support_size:
        raise ConfigurationError("kl_divergence: support size mismatch")
    # rel_entr implements x log(x/y) with the 0 log 0 = 0 convention and
    # returns inf exactly on the mass-escape cells.
    return float(rel_entr(mu.weights, nu.weights).sum())


def _kl_rows(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    return rel_entr(p, q).sum(axis=-1)


def mutual_information(joint: JointMeasure) -> float:
    """I(X;Y) of a joint table. Always finite: the joint is << its marginal product."""
    w = joint.weights
    px = w.sum(axis=1)
    py = w.sum(axis=0)
    return float(rel_entr(w, np.outer(px, py)).sum())


def conditional_divergence(p: MarkovKernel, q: MarkovKernel, base: FiniteMeasure) -> float:
    """D(p || q | base) = sum_u base(u) * D(p_u || q_u); base-null rows are skipped."""
    if p.input_size != q.input_size or p.output_size != q.output_size:
        raise ConfigurationError("conditional_divergence: kernel shape mismatch")
    if p.input_size != base.support_size:
        raise ConfigurationError("conditional_divergence: base size mismatch")
    total = 0.0
    for u in range(p.input_size):
        b = base.weights[u]
        if b == 0.0:
            continue  # null conditioning sets contribute nothing, even if D = inf there
        total += b * float(rel_entr(p.matrix[u], q.matrix[u]).sum())
    return float(total)


def conditional_mutual_information(joint_xyz) -> float:
    """I(X;Y|Z) from a three-index weight array indexed [x, y, z]."""
    w = np.asarray(joint_xyz, dtype=float)
    if w.ndim != 3:
        raise ConfigurationError("conditional_mutual_information: need a 3-d array")
    flat = _clean_weights(w.ravel(), "conditional_mutual_information")
    w = flat.reshape(w.shape)
    p_z = w.sum(axis=(0, 1))
    total = 0.0
    for z in range(w.shape[2]):
        pz = p_z[z]
        if pz == 0.0:
            continue
        slab = w[:, :, z] / pz
        px = slab.sum(axis=1)
        py = slab.sum(axis=0)
        total += pz * float(rel_entr(slab, np.outer(px, py)).sum())
    return float(total)
