"""Exact optimal transport on finite supports.

Distances come from a linear program solved with HiGHS; at the package's
desk scale (<= 64 atoms a side) that is exact, deterministic, and returns a
vertex plan. Geodesics are displacement interpolations of an optimal plan
between two measures sharing one Euclidean support.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import json

import numpy as np
from scipy.optimize import linprog
from scipy.spatial.distance import cdist

from .errors import ConfigurationError, DomainError, UnsupportedGeometryError
from .measures import FiniteMeasure

PLAN_MARGINAL_TOL = 1e-9
DEDUP_DECIMALS = 12


@dataclass(frozen=True)
class EmbeddedSupport:
    """Finitely many labelled points in R^dim."""

    points: np.ndarray

    def __init__(self, points) -> None:
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ConfigurationError("EmbeddedSupport: need a (k, dim) point array")
        if not np.all(np.isfinite(pts)):
            raise ConfigurationError("EmbeddedSupport: non-finite coordinates")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def size(self) -> int:
        return int(self.points.shape[0])

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])

    def to_json(self) -> str:
        return json.dumps({"dim": self.dim, "points": self.points.tolist()})

    @staticmethod
    def from_json(text: str) -> "EmbeddedSupport":
        obj = json.loads(text)
        if not isinstance(obj, dict) or "points" not in obj:
            raise ConfigurationError("EmbeddedSupport JSON must be {\"dim\": d, \"points\": [[...]]}")
        emb = EmbeddedSupport(np.asarray(obj["points"], dtype=float))
        if "dim" in obj and int(obj["dim"]) != emb.dim:
            raise ConfigurationError("EmbeddedSupport JSON: dim field disagrees with points")
        return emb


@dataclass(frozen=True)
class CostMatrix:
    entries: np.ndarray

    def __init__(self, entries) -> None:
        c = np.asarray(entries, dtype=float)
        if c.ndim != 2:
            raise ConfigurationError("CostMatrix: need a 2-d array")
        if not np.all(np.isfinite(c)) or np.any(c < 0.0):
            raise ConfigurationError("CostMatrix: entries must be finite and nonnegative")
        c.flags.writeable = False
        object.__setattr__(self, "entries", c)


def euclidean_cost(a: EmbeddedSupport, b: EmbeddedSupport) -> CostMatrix:
    if a.dim != b.dim:
        raise UnsupportedGeometryError("euclidean_cost: embeddings live in different dimensions")
    return CostMatrix(cdist(a.points, b.points))


@dataclass(frozen=True)
class TransportPlan:
    """Coupling of (source, target); marginals hold to PLAN_MARGINAL_TOL."""

    weights: np.ndarray
    source: FiniteMeasure
    target: FiniteMeasure

    def __init__(self, weights, source: FiniteMeasure, target: FiniteMeasure) -> None:
        w = np.asarray(weights, dtype=float)
        if w.shape != (source.support_size, target.support_size):
            raise ConfigurationError("TransportPlan: shape does not match marginals")
        if w.min() < -1e-12:
            raise ConfigurationError(f"TransportPlan: negative mass {w.min():.3e}")
        w = np.clip(w, 0.0, None)
        if (np.abs(w.sum(axis=1) - source.weights).max() > PLAN_MARGINAL_TOL
                or np.abs(w.sum(axis=0) - target.weights).max() > PLAN_MARGINAL_TOL):
            raise ConfigurationError("TransportPlan: marginal constraint violated")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "source", source)
        object.__setattr__(self, "target", target)

    def cost(self, cost: CostMatrix, p: float) -> float:
        return float((self.weights * cost.entries**p).sum()) ** (1.0 / p)


def product_plan(mu: FiniteMeasure, nu: FiniteMeasure) -> TransportPlan:
    return TransportPlan(np.outer(mu.weights, nu.weights), mu, nu)


def diagonal_plan(mu: FiniteMeasure) -> TransportPlan:
    return TransportPlan(np.diag(mu.weights), mu, mu)


def wasserstein(mu: FiniteMeasure, nu: FiniteMeasure, cost: CostMatrix,
                p: float = 1.0) -> tuple[float, TransportPlan]:
    """W_p distance and an optimal plan, by exact LP.

    Minimizes <pi, cost^p> over couplings of (mu, nu) and returns the p-th
    root. HiGHS is run at its tightest accepted feasibility tolerance (1e-10,
    inside PLAN_MARGINAL_TOL) so the returned plan passes its own validation.
    """
    if p < 1.0:
        raise DomainError(f"wasserstein: p >= 1 required, got {p}")
    m, n = mu.support_size, nu.support_size
    if cost.entries.shape != (m, n):
        raise ConfigurationError("wasserstein: cost shape does not match supports")
    c = (cost.entries**p).ravel()
    # the transportation system has rank m + n - 1; keeping all m + n rows
    # makes HiGHS presolve declare instances with atoms below its feasibility
    # tolerance infeasible, so the redundant last column constraint is dropped
    a_eq = np.zeros((m + n - 1, m * n))
    for i in range(m):
        a_eq[i, i * n:(i + 1) * n] = 1.0
    for j in range(n - 1):
        a_eq[m + j, j::n] = 1.0
    b_eq = np.concatenate([mu.weights, nu.weights[:-1]])
    res = linprog(c, A_eq=a_eq, b_eq=b_eq, bounds=(0.0, None), method="highs",
                  options={"primal_feasibility_tolerance": 1e-10,
                           "dual_feasibility_tolerance": 1e-10})
    if not res.success:
        raise ConfigurationError(f"wasserstein: LP failed: {res.message}")
    plan = TransportPlan(res.x.reshape(m, n), mu, nu)
    return float(res.fun) ** (1.0 / p), plan


# ---------------------------------------------------------------------------
# displacement geodesics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GeodesicPoint:
    measure: FiniteMeasure
    support: EmbeddedSupport


@dataclass(frozen=True)
class Geodesic:
    """Interpolation points plus the atom bookkeeping needed for couplings.

    atom_pairs holds the (i, j) indices of the nonzero plan cells, atom_mass
    their masses, and atom_to_point[k][a] the index of atom a inside the
    deduplicated support at time k.
    """

    times: tuple
    points: tuple
    plan: TransportPlan = field(compare=False)
    atom_pairs: np.ndarray = field(compare=False)
    atom_mass: np.ndarray = field(compare=False)
    atom_to_point: tuple = field(compare=False)
    distance: float


def _dedupe(positions: np.ndarray, mass: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # Atoms landing on the same coordinates (to DEDUP_DECIMALS places) merge.
    key = np.round(positions, DEDUP_DECIMALS)
    key[key == 0.0] = 0.0  # normalize -0.0
    uniq, inverse = np.unique(key, axis=0, return_inverse=True)
    merged = np.zeros(uniq.shape[0])
    np.add.at(merged, inverse, mass)
    return uniq, merged, inverse


def geodesic(mu: FiniteMeasure, nu: FiniteMeasure, emb: EmbeddedSupport, times,
             cost: CostMatrix | None = None) -> Geodesic:
    """Constant-speed W_2 path from mu (t=0) to nu (t=1) on one embedded support.

    Every returned point is a FiniteMeasure over a freshly deduplicated
    EmbeddedSupport of interpolated atoms. A caller-supplied cost matrix is
    only accepted if it agrees with the embedding's Euclidean distances.
    """
    if emb.size != mu.support_size or emb.size != nu.support_size:
        raise ConfigurationError("geodesic: measures and embedding disagree in size")
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size < 2 or t[0] != 0.0 or t[-1] != 1.0 or np.any(np.diff(t) <= 0):
        raise ConfigurationError("geodesic: times must increase from exactly 0 to exactly 1")
    eucl = euclidean_cost(emb, emb)
    if cost is not None:
        if cost.entries.shape != eucl.entries.shape or np.abs(cost.entries - eucl.entries).max() > 1e-9:
            raise UnsupportedGeometryError("geodesic: supplied cost is not the Euclidean one")
    dist, plan = wasserstein(mu, nu, eucl, p=2.0)

    ii, jj = np.nonzero(plan.weights)
    mass = plan.weights[ii, jj]
    src = emb.points[ii]
    dst = emb.points[jj]

    points, members = [], []
    for tk in t:
        pos = (1.0 - tk) * src + tk * dst
        uniq, merged, inverse = _dedupe(pos, mass)
        points.append(GeodesicPoint(FiniteMeasure(merged), EmbeddedSupport(uniq)))
        members.append(inverse)
    return Geodesic(times=tuple(float(x) for x in t), points=tuple(points), plan=plan,
                    atom_pairs=np.stack([ii, jj], axis=1), atom_mass=mass,
                    atom_to_point=tuple(members), distance=dist)


def consecutive_couplings(geo: Geodesic, plan: TransportPlan) -> list[TransportPlan]:
    """Couplings between consecutive geodesic points, induced by the plan's atoms.

    These are W_2-optimal for each step (atoms travel in straight lines at
    constant speed). The plan must be the one the geodesic was produced from.
    """
    if plan is not geo.plan and not (plan.weights.shape == geo.plan.weights.shape
                                     and np.array_equal(plan.weights, geo.plan.weights)):
        raise ConfigurationError("consecutive_couplings: plan does not match geodesic provenance")
    out = []
    for k in range(1, len(geo.times)):
        prev, cur = geo.points[k - 1], geo.points[k]
        w = np.zeros((prev.measure.support_size, cur.measure.support_size))
        np.add.at(w, (geo.atom_to_point[k - 1], geo.atom_to_point[k]), geo.atom_mass)
        out.append(TransportPlan(w, prev.measure, cur.measure))
    return out
