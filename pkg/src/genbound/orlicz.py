"""Orlicz calculus for the family psi_p(x) = exp(x^p) - 1, p >= 1.

psi_p is the Young function behind the exponential-moment machinery used by
every bound in this package: psi_p^{-1}(x) = (log(x+1))^{1/p}, the Orlicz
norm of a finite random variable is the usual Luxemburg functional, and
``decorrelation_terms`` evaluates both right-hand sides of the change-of-
measure inequality that the bounds are built from.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import logsumexp

from .errors import AbsoluteContinuityError, ConfigurationError, DomainError
from .measures import FiniteMeasure, kl_divergence

NORM_REL_TOL = 1e-10
# Above this value of x^p, exp(x^p) leaves float64; the property grid switches
# to the factored gap forms there.
_EXP_SAFE = 600.0
# The "square" gap is a difference of two e^{x^p}-sized terms whose true value
# is only e^{x^p/2}-sized, so float64 cancellation corrupts it long before
# overflow; beyond this the factored form is mandatory.
_SQUARE_SAFE = 60.0


def _check_xp(x, p: float) -> np.ndarray:
    if p < 1.0:
        raise DomainError(f"psi family needs p >= 1, got {p}")
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0.0):
        raise DomainError("psi family is defined on x >= 0")
    return arr


def psi(x, p: float):
    """psi_p(x) = exp(x^p) - 1; overflow saturates to +inf."""
    arr = _check_xp(x, p)
    with np.errstate(over="ignore"):
        out = np.expm1(arr**p)
    return float(out) if np.isscalar(x) else out


def psi_inv(x, p: float):
    """psi_p^{-1}(x) = (log(x+1))^{1/p}; accepts +inf."""
    if p < 1.0:
        raise DomainError(f"psi family needs p >= 1, got {p}")
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0.0):
        raise DomainError("psi_inv is defined on x >= 0")
    out = np.log1p(arr) ** (1.0 / p)
    return float(out) if np.isscalar(x) else out


@dataclass(frozen=True)
class DiscreteRandomVariable:
    """A real value on each atom of a finite law."""

    values: np.ndarray
    law: FiniteMeasure

    def __init__(self, values, law: FiniteMeasure) -> None:
        vals = np.asarray(values, dtype=float)
        if vals.ndim != 1 or vals.size != law.support_size:
            raise ConfigurationError("DiscreteRandomVariable: values/law size mismatch")
        if not np.all(np.isfinite(vals)):
            raise ConfigurationError("DiscreteRandomVariable: non-finite values")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "law", law)


def orlicz_norm(x: DiscreteRandomVariable, p: float) -> float:
    """Luxemburg norm inf{c > 0 : E[psi_p(|X|/c)] <= 1} of a finite variable.

    The psi-moment is decreasing in c, E <= 1 at c_hi = max|X|/psi_inv(1) and
    E >= 1 at c_lo = max|X|/psi_inv(1/min positive mass), so [c_lo, c_hi] is a
    guaranteed bracket; plain bisection to relative tolerance NORM_REL_TOL.
    """
    if p < 1.0:
        raise DomainError(f"orlicz_norm needs p >= 1, got {p}")
    mass = x.law.weights
    live = mass > 0.0
    vals = np.abs(x.values[live])
    mass = mass[live]
    vmax = vals.max()
    if vmax == 0.0:
        return 0.0

    def moment(c: float) -> float:
        with np.errstate(over="ignore"):
            return float(mass @ np.expm1((vals / c) ** p))

    lo = vmax / psi_inv(1.0 / mass.min(), p)
    hi = vmax / psi_inv(1.0, p)
    while hi - lo > NORM_REL_TOL * hi:
        mid = 0.5 * (lo + hi)
        if moment(mid) <= 1.0:
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# psi-calculus property grid
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PsiPropertyResult:
    item: str
    max_violation: float
    argmax_input: tuple

    def to_json(self) -> dict:
        return {"item": self.item, "max_violation": self.max_violation,
                "argmax_input": list(self.argmax_input)}


def _psi_gap_factored(x: float, p: float, item: str) -> float:
    # The naive gaps subtract e^{x^p}-sized terms whose difference is
    # exponentially smaller, so direct evaluation cancels catastrophically.
    # Both factor exactly: with a = e^{x^p/2} and b = e^{x^p/4},
    #   square:  (a-1)^2 - (a^2-1)           = -2 (a-1)
    #   product: x (b-1) - 2^{1/p} (b^2-1)   = (b-1) (x - 2^{1/p} (b+1))
    # Every factor is well scaled; mpmath supplies the huge exponentials and
    # float() saturates to -inf with the correct sign.
    import mpmath as mp

    with mp.workdps(30):
        xm, pm = mp.mpf(x), mp.mpf(p)
        if item == "square":
            gap = -2 * mp.expm1(xm**pm / 2)
        elif item == "product":
            quarter = mp.expm1(xm**pm / 4)
            gap = quarter * (xm - 2 ** (1 / pm) * (quarter + 2))
        else:
            raise ValueError(item)
        return float(gap)


def check_psi_properties(grid) -> list[PsiPropertyResult]:
    """Evaluate the four psi_p workhorse inequalities over a grid of (x, p, q).

    Items: "square"   psi_p(x/2^{1/p})^2        <= psi_p(x)
           "product"  x * psi_p(x/4^{1/p})      <= 2^{1/p} * psi_p(x/2^{1/p})
           "power"    psi_p^{-1}(x^q)           <= q^{1/p} * psi_p^{-1}(x)   (q >= 1)
           "shift"    psi_p^{-1}(x)             <= (log x)^{1/p} + 1         (x >= 1)

    Returns one report per item with the worst (lhs - rhs) gap and where it
    happened; every max_violation should sit at or below 1e-12.
    """
    worst = {item: (-np.inf, ()) for item in ("square", "product", "power", "shift")}

    def consider(item: str, gap: float, args: tuple) -> None:
        if gap > worst[item][0]:
            worst[item] = (gap, args)

    for x, p, q in grid:
        x, p, q = float(x), float(p), float(q)
        if p < 1.0 or q < 1.0 or x < 0.0:
            raise DomainError(f"grid point out of domain: {(x, p, q)}")
        if x**p <= _SQUARE_SAFE:
            consider("square", psi(x / 2 ** (1 / p), p) ** 2 - psi(x, p), (x, p))
        else:
            consider("square", _psi_gap_factored(x, p, "square"), (x, p))
        if x**p <= _EXP_SAFE:
            consider("product",
                     x * psi(x / 4 ** (1 / p), p) - 2 ** (1 / p) * psi(x / 2 ** (1 / p), p),
                     (x, p))
        else:
            consider("product", _psi_gap_factored(x, p, "product"), (x, p))
        consider("power", psi_inv(x**q, p) - q ** (1 / p) * psi_inv(x, p), (x, p, q))
        if x >= 1.0:
            consider("shift", psi_inv(x, p) - (np.log(x) ** (1 / p) + 1.0), (x, p))
    return [PsiPropertyResult(item, gap, args) for item, (gap, args) in worst.items()]


# ---------------------------------------------------------------------------
# sum-vs-integral sandwich for nonincreasing positive functions on (0, 1]
# ---------------------------------------------------------------------------

class StepFunction:
    """Piecewise-constant nonincreasing positive function on (0, 1].

    values[i] is taken on (breakpoints[i-1], breakpoints[i]] with an implicit
    leading breakpoint 0; the final breakpoint must be 1.
    """

    def __init__(self, breakpoints, values) -> None:
        b = np.asarray(breakpoints, dtype=float)
        v = np.asarray(values, dtype=float)
        if b.ndim != 1 or b.size == 0 or b.size != v.size:
            raise ConfigurationError("StepFunction: breakpoints/values mismatch")
        if not (np.all(np.diff(b) > 0) and 0.0 < b[0] and b[-1] == 1.0):
            raise ConfigurationError("StepFunction: breakpoints must increase to exactly 1")
        if np.any(v <= 0.0):
            raise DomainError("StepFunction: values must be positive")
        if np.any(np.diff(v) > 0):
            raise DomainError("StepFunction: values must be nonincreasing")
        self.breakpoints = b
        self.values = v

    def __call__(self, eps: float) -> float:
        if eps <= 0.0:
            return float(self.values[0])
        if eps > 1.0:
            raise DomainError("StepFunction domain is (0, 1]")
        return float(self.values[np.searchsorted(self.breakpoints, eps)])

    def integral(self) -> float:
        widths = np.diff(np.concatenate(([0.0], self.breakpoints)))
        return float(widths @ self.values)


def check_sum_to_integral(f, r: float, terms: int) -> tuple[float, float, float]:
    """Sandwich sum_{k=1}^K r^{-k} f(r^{-k}) <= r * int_0^1 f <= r^2 * sum_{k>=0} r^{-k} f(r^{-k}).

    f may be a StepFunction (everything closed-form, including the infinite
    tail) or a plain callable (adaptive quadrature; divergence near 0 is
    rejected). Raises if the sandwich fails, which only a broken f can cause.
    """
    if r < 2.0:
        raise DomainError(f"sandwich needs r >= 2, got {r}")
    if terms < 1:
        raise DomainError("need at least one term")

    if isinstance(f, StepFunction):
        lhs = sum(r**-k * f(r**-k) for k in range(1, terms + 1))
        mid = r * f.integral()
        # Below the leftmost breakpoint f is constant, so the tail is geometric.
        b0 = f.breakpoints[0]
        k0 = 0
        while r**-k0 > b0:
            k0 += 1
        head = sum(r**-k * f(r**-k) for k in range(0, k0))
        tail = f.values[0] * r**-k0 / (1.0 - 1.0 / r)
        rhs = r**2 * (head + tail)
    else:
        probe = [r**-k for k in range(0, 60)] + list(np.linspace(1e-6, 1.0, 64))
        vals = [float(f(t)) for t in sorted(probe)]
        if any(v <= 0.0 for v in vals):
            raise DomainError("f must be positive on (0, 1]")
        if any(vals[i] < vals[i + 1] - 1e-12 for i in range(len(vals) - 1)):
            raise DomainError("f must be nonincreasing on (0, 1]")
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                quad_val, _ = integrate.quad(f, 0.0, 1.0, epsabs=1e-10, epsrel=1e-8)
            except integrate.IntegrationWarning as exc:
                raise DomainError(f"f looks non-integrable near 0: {exc}") from exc
        if not np.isfinite(quad_val):
            raise DomainError("f is non-integrable on (0, 1]")
        lhs = sum(r**-k * f(r**-k) for k in range(1, terms + 1))
        mid = r * quad_val
        rhs_sum, k = 0.0, 0
        while True:
            term = r**-k * float(f(r**-k))
            rhs_sum += term
            k += 1
            if k > 10 and term <= 1e-16 * max(rhs_sum, 1.0):
                break
            if k > 5000:
                raise DomainError("tail sum fails to converge; f is not integrable")
        rhs = r**2 * rhs_sum

    if not (lhs <= mid * (1 + 1e-9) + 1e-12 and mid <= rhs * (1 + 1e-9) + 1e-12):
        raise DomainError(f"sandwich violated: {lhs} <= {mid} <= {rhs} fails")
    return float(lhs), float(mid), float(rhs)


# ---------------------------------------------------------------------------
# decorrelation terms and the psi-inverse / KL comparison
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DecorrelationTerms:
    """lhs = <mu, f g> and the two upper bounds it is compared against."""

    lhs: float
    rhs1: float
    rhs2: float


def _density(mu: FiniteMeasure, nu: FiniteMeasure) -> np.ndarray:
    if mu.support_size != nu.support_size:
        raise ConfigurationError("density: support size mismatch")
    m, n = mu.weights, nu.weights
    if np.any((m > 0.0) & (n == 0.0)):
        raise AbsoluteContinuityError("mu is not absolutely continuous w.r.t. nu")
    with np.errstate(invalid="ignore", divide="ignore"):
        dens = np.where(n > 0.0, m / np.where(n > 0.0, n, 1.0), 0.0)
    return dens


def decorrelation_terms(mu: FiniteMeasure, nu: FiniteMeasure, f, g, p: float) -> DecorrelationTerms:
    """Evaluate <mu, fg> against its two decorrelated majorants.

    rhs1 = 2^{1/p} <mu, f psi_p^{-1}(dmu/dnu)> + <nu, f psi_p(g)>
    rhs2 = 2^{1/p} ||f||_{L2(nu)} + 4^{1/p} <mu, f psi_p^{-1}(dmu/dnu)>
           + 4^{1/p} ||f||_{L1(mu)} (log <nu, exp(g^p)>)^{1/p}

    f, g must be nonnegative; the exponential moment in rhs2 is evaluated
    through logsumexp so large g degrades gracefully instead of overflowing.
    """
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != mu.weights.shape or g.shape != mu.weights.shape:
        raise ConfigurationError("decorrelation_terms: f/g shape mismatch")
    if np.any(f < 0.0) or np.any(g < 0.0):
        raise DomainError("decorrelation_terms: f and g must be nonnegative")
    if p < 1.0:
        raise DomainError(f"decorrelation_terms: p >= 1 required, got {p}")

    dens = _density(mu, nu)
    mu_w, nu_w = mu.weights, nu.weights
    lhs = float(mu_w @ (f * g))
    cross = float(mu_w @ (f * psi_inv(dens, p)))

    with np.errstate(over="ignore"):
        rhs1 = 2.0 ** (1.0 / p) * cross + float(nu_w @ (f * np.expm1(g**p)))

    # log <nu, exp(g^p)> >= 0 since g >= 0; logsumexp keeps it finite in float.
    log_moment = float(logsumexp(g**p, b=nu_w))
    rhs2 = (2.0 ** (1.0 / p) * float(np.sqrt(nu_w @ f**2))
            + 4.0 ** (1.0 / p) * cross
            + 4.0 ** (1.0 / p) * float(mu_w @ f) * log_moment ** (1.0 / p))
    return DecorrelationTerms(lhs=lhs, rhs1=float(rhs1), rhs2=float(rhs2))


def check_psi_kl(mu: FiniteMeasure, nu: FiniteMeasure, p: float) -> tuple[float, float]:
    """Return (<mu, psi_p^{-1}(dmu/dnu)>, (D(mu||nu) + 1)^{1/p}); lhs <= rhs always."""
    if p < 1.0:
        raise DomainError(f"check_psi_kl: p >= 1 required, got {p}")
    dens = _density(mu, nu)
    lhs = float(mu.weights @ psi_inv(dens, p))
    rhs = (kl_divergence(mu, nu) + 1.0) ** (1.0 / p)
    return lhs, rhs
