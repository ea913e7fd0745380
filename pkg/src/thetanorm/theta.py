"""Riemann theta functions with characteristics, to certified precision.

A level-k section with characteristic c (an integer vector reduced mod k D)
is realized as the lattice sum

    theta_c(z) = sum over n in Z^g of exp(pi i k m' tau m + 2 pi i k m' z),
    m = n + (k D)^{-1} c,

evaluated at z plus the section's translation offset. The sum is truncated
to the ball ||m|| <= R, where R comes from a conservative scalar Gaussian
tail bound driven by lambda_min(Im tau), so the truncation error is
certified below the requested epsilon.

Values of theta can span hundreds of orders of magnitude once Im(z) is
large, so every internal computation factors out the peak exponent and
works with (mantissa, log-scale) pairs. The scalar entry point materializes
the product mantissa * exp(log-scale); the epsilon contract is then honored
in absolute terms whenever |theta| is of order one, and relative to the
peak magnitude beyond that, which is the float64 limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import InvalidParameterError, PrecisionError
from .torus import (
    PolarizationType,
    RiemannMatrix,
    TorusPoint,
    complex_value,
    polarization_type,
    zero_point,
)

DEFAULT_EPSILON = 1e-12

# Requests below this cannot be told apart from summation roundoff even at
# unit scale (a few hundred terms at machine epsilon).
PRECISION_FLOOR = 64 * np.finfo(float).eps

# Hard cap on enumerated lattice points, to keep memory bounded.
MAX_LATTICE_POINTS = 50_000_000

__all__ = [
    "ThetaSection",
    "SectionProduct",
    "TruncationPlan",
    "DEFAULT_EPSILON",
    "theta_eval",
    "theta_values",
    "theta_values_scaled",
    "product_values_scaled",
    "values_scaled",
    "basis_L_power",
    "translate_section",
    "truncation_plan",
    "quasi_periodicity_residual",
    "section_label",
]


@dataclass(frozen=True, eq=False)
class ThetaSection:
    """A theta function of level k with characteristic c and a translation.

    Characteristics are reduced mod k*d_i at construction. The translation
    offset keeps its q-part reduced mod 1 (exact periodicity direction) but
    its p-part raw: shifting p by an integer changes the value by a
    nontrivial automorphy factor, so reducing it would change the function.
    """

    level: int
    characteristic: tuple[int, ...]
    divisors: PolarizationType
    tau: RiemannMatrix
    translation: TorusPoint | None = None

    def __post_init__(self):
        ptype = polarization_type(self.divisors)
        object.__setattr__(self, "divisors", ptype)
        k = int(self.level)
        if k < 1:
            raise InvalidParameterError(f"level must be >= 1, got {self.level}")
        object.__setattr__(self, "level", k)
        if ptype.g != self.tau.g:
            raise InvalidParameterError("type and tau dimensions disagree")
        c = tuple(int(x) for x in self.characteristic)
        if len(c) != ptype.g:
            raise InvalidParameterError("characteristic length must equal g")
        c = tuple(x % (k * d) for x, d in zip(c, ptype.divisors))
        object.__setattr__(self, "characteristic", c)
        t = self.translation if self.translation is not None else zero_point(ptype.g)
        if t.g != ptype.g:
            raise InvalidParameterError("translation dimension must equal g")
        t = TorusPoint(t.p, tuple(x % 1 for x in t.q))
        object.__setattr__(self, "translation", t)

    @property
    def g(self) -> int:
        return self.divisors.g

    def characteristic_fraction(self) -> np.ndarray:
        """The shift (k D)^{-1} c of the summation lattice, as floats."""
        return np.array(
            [c / (self.level * d) for c, d in zip(self.characteristic, self.divisors.divisors)]
        )

    def _key(self):
        return (
            self.level,
            self.characteristic,
            self.divisors.divisors,
            self.tau,
            self.translation.p,
            self.translation.q,
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, ThetaSection):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())


@dataclass(frozen=True)
class SectionProduct:
    """Pointwise product of theta sections on one torus.

    Products of level-k_i sections are sections of the bundle of level
    sum(k_i) (up to a translation twist), which is how degree-r monomials
    and the two-factor Kummer sections are formed.
    """

    factors: tuple[ThetaSection, ...]

    def __post_init__(self):
        if len(self.factors) < 1:
            raise InvalidParameterError("a section product needs at least one factor")
        first = self.factors[0]
        for f in self.factors[1:]:
            if f.divisors != first.divisors or f.tau != first.tau:
                raise InvalidParameterError(
                    "product factors must live on the same polarized torus"
                )

    @property
    def g(self) -> int:
        return self.factors[0].g

    @property
    def divisors(self) -> PolarizationType:
        return self.factors[0].divisors

    @property
    def tau(self) -> RiemannMatrix:
        return self.factors[0].tau

    @property
    def level(self) -> int:
        return sum(f.level for f in self.factors)


SectionLike = Union[ThetaSection, SectionProduct]


@dataclass(frozen=True)
class TruncationPlan:
    """Certified summation radius for one evaluation batch.

    tail_bound is the value of the Gaussian tail estimate at the chosen
    radius; the plan is valid whenever tail_bound < epsilon.
    """

    radius: float
    epsilon: float
    lattice_point_count: int
    tail_bound: float


def _tail_bound(lam_min: float, g: int, k: int, z_bound: float, radius: float) -> float:
    """Upper bound for sum over ||m|| > radius of exp(-pi k lam ||m||^2 + 2 pi k ||m|| z_bound).

    Unit shells [r, r+1) are bounded by the crude count (2r+3)^g times the
    maximum of the exponential over the shell. Conservative by design.
    """
    total = 0.0
    peak_s = z_bound / lam_min
    prev = math.inf
    j = 0
    while j < 200_000:
        lo = radius + j
        s = min(max(peak_s, lo), lo + 1.0)
        expo = math.pi * k * (2.0 * s * z_bound - lam_min * s * s)
        if expo > 700.0:
            return math.inf
        term = (2.0 * (lo + 1.0) + 1.0) ** g * math.exp(expo)
        total += term
        if lo > peak_s and term <= 0.25 * prev and term < 1e-3 * max(total, 1e-300):
            # Remaining terms are dominated by a geometric series with
            # ratio <= 1/4, so they add at most term / 3.
            return total + term / 3.0
        prev = term
        j += 1
    return math.inf


def truncation_plan(
    tau: RiemannMatrix, k: int, z_bound: float, epsilon: float
) -> TruncationPlan:
    """Smallest radius on a fixed grid whose tail bound is below epsilon.

    The grid starts at max(1, sqrt(g)) and steps by 1/2, which makes the
    returned radius monotone: non-decreasing as epsilon shrinks and
    non-increasing as lambda_min grows.
    """
    if not (epsilon > 0):
        raise InvalidParameterError(f"epsilon must be positive, got {epsilon}")
    if k < 1:
        raise InvalidParameterError(f"level must be >= 1, got {k}")
    if not np.isfinite(z_bound) or z_bound < 0:
        raise InvalidParameterError(f"z_bound must be finite and >= 0, got {z_bound}")
    g = tau.g
    radius = max(1.0, math.sqrt(g))
    while True:
        if (2.0 * radius + 3.0) ** g > MAX_LATTICE_POINTS:
            raise PrecisionError(
                f"truncation radius {radius} needs more than {MAX_LATTICE_POINTS} "
                "lattice points; epsilon or z_bound out of supported range"
            )
        tail = _tail_bound(tau.lambda_min, g, k, z_bound, radius)
        if tail < epsilon:
            count = _lattice_count(g, radius)
            return TruncationPlan(radius, epsilon, count, tail)
        radius += 0.5


def _lattice_count(g: int, radius: float) -> int:
    side = np.arange(math.ceil(-radius), math.floor(radius) + 1)
    grids = np.meshgrid(*([side] * g), indexing="ij")
    pts = np.stack([a.reshape(-1) for a in grids], axis=1)
    return int(((pts * pts).sum(axis=1) <= radius * radius + 1e-9).sum())


def _lattice_shifts(g: int, radius: float, frac: np.ndarray) -> np.ndarray:
    """All m = n + frac with integer n and ||m|| <= radius, as a (M, g) float array."""
    axes = []
    for i in range(g):
        lo = math.ceil(-radius - frac[i])
        hi = math.floor(radius - frac[i])
        axes.append(np.arange(lo, hi + 1, dtype=float))
    grids = np.meshgrid(*axes, indexing="ij")
    n = np.stack([a.reshape(-1) for a in grids], axis=1)
    m = n + frac[None, :]
    keep = (m * m).sum(axis=1) <= radius * radius + 1e-9
    return m[keep]


def _scaled_sum(
    tau_arr: np.ndarray, k: int, m: np.ndarray, zs: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Sum exp(pi i k m'tau m + 2 pi i k m'z) over rows of m, peak-extracted.

    Returns (mantissa, log_scale) per point with value = mantissa * exp(log_scale).
    Points are processed in chunks to bound the (lattice x points) temporary.
    """
    n_points = zs.shape[0]
    vals = np.empty(n_points, dtype=complex)
    logs = np.empty(n_points, dtype=float)
    if m.shape[0] == 0:
        vals[:] = 0.0
        logs[:] = 0.0
        return vals, logs
    quad = 1j * math.pi * k * np.einsum("mi,ij,mj->m", m, tau_arr, m)
    chunk = max(1, int(4_000_000 // m.shape[0]))
    for start in range(0, n_points, chunk):
        z = zs[start : start + chunk]
        expo = quad[:, None] + (2j * math.pi * k) * (m @ z.T)
        peak = expo.real.max(axis=0)
        vals[start : start + z.shape[0]] = np.exp(expo - peak[None, :]).sum(axis=0)
        logs[start : start + z.shape[0]] = peak
    return vals, logs


def _as_point_array(
    points, tau: RiemannMatrix, divisors: PolarizationType
) -> np.ndarray:
    """Coerce TorusPoints or complex coordinate rows to a (P, g) complex array."""
    if isinstance(points, TorusPoint):
        points = [points]
    if len(points) > 0 and isinstance(points[0], TorusPoint):
        arr = np.array([complex_value(pt, tau, divisors) for pt in points])
    else:
        arr = np.atleast_2d(np.asarray(points, dtype=complex))
    if arr.ndim != 2 or arr.shape[1] != tau.g:
        raise InvalidParameterError(
            f"points must be (P, {tau.g}) coordinates, got shape {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise InvalidParameterError("evaluation points contain non-finite values")
    return arr


def theta_values_scaled(
    section: ThetaSection, points, epsilon: float = DEFAULT_EPSILON
) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate a section at many points as (mantissa, log_scale) pairs.

    The truncation radius is planned per batch from the largest ||Im z||
    actually present, translation included.
    """
    if not (epsilon > 0):
        raise InvalidParameterError(f"epsilon must be positive, got {epsilon}")
    if epsilon < PRECISION_FLOOR:
        raise PrecisionError(
            f"epsilon {epsilon:.2e} is below the float64 summation floor "
            f"{PRECISION_FLOOR:.2e}"
        )
    zs = _as_point_array(points, section.tau, section.divisors)
    offset = complex_value(section.translation, section.tau, section.divisors)
    zs = zs + offset[None, :]
    z_bound = float(np.sqrt((zs.imag**2).sum(axis=1)).max()) if zs.shape[0] else 0.0
    plan = truncation_plan(section.tau, section.level, z_bound, epsilon)
    m = _lattice_shifts(section.g, plan.radius, section.characteristic_fraction())
    return _scaled_sum(section.tau.tau, section.level, m, zs)


def product_values_scaled(
    product: SectionProduct, points, epsilon: float = DEFAULT_EPSILON
) -> tuple[np.ndarray, np.ndarray]:
    """Scaled values of a product section: mantissas multiply, scales add."""
    zs = _as_point_array(points, product.tau, product.divisors)
    vals = np.ones(zs.shape[0], dtype=complex)
    logs = np.zeros(zs.shape[0], dtype=float)
    for factor in product.factors:
        v, c = theta_values_scaled(factor, zs, epsilon)
        vals *= v
        logs += c
    return vals, logs


def values_scaled(
    section: SectionLike, points, epsilon: float = DEFAULT_EPSILON
) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(section, SectionProduct):
        return product_values_scaled(section, points, epsilon)
    return theta_values_scaled(section, points, epsilon)


def theta_values(
    section: SectionLike, points, epsilon: float = DEFAULT_EPSILON
) -> np.ndarray:
    """Plain complex values; may overflow to inf for extreme arguments."""
    vals, logs = values_scaled(section, points, epsilon)
    with np.errstate(over="ignore"):
        return vals * np.exp(logs)


def theta_eval(section: SectionLike, z, epsilon: float = DEFAULT_EPSILON) -> complex:
    """Value of a section at a single point (TorusPoint or complex g-vector)."""
    if isinstance(z, TorusPoint):
        pts = [z]
    else:
        pts = np.atleast_2d(np.asarray(z, dtype=complex))
        if pts.shape != (1, section.g):
            raise InvalidParameterError(
                f"expected a single point of dimension {section.g}"
            )
    return complex(theta_values(section, pts, epsilon)[0])


def basis_L_power(divisors, tau: RiemannMatrix, k: int) -> list[ThetaSection]:
    """The k^g * prod(d_i) characteristic thetas spanning sections of level k."""
    ptype = polarization_type(divisors)
    if k < 1:
        raise InvalidParameterError(f"level must be >= 1, got {k}")
    from itertools import product as iter_product

    return [
        ThetaSection(k, c, ptype, tau)
        for c in iter_product(*(range(k * d) for d in ptype.divisors))
    ]


def translate_section(section: ThetaSection, x: TorusPoint) -> ThetaSection:
    """Section evaluating as the original at z + x; offsets accumulate."""
    return ThetaSection(
        section.level,
        section.characteristic,
        section.divisors,
        section.tau,
        section.translation + x,
    )


def _factors_of(section: SectionLike) -> tuple[ThetaSection, ...]:
    return section.factors if isinstance(section, SectionProduct) else (section,)


def quasi_periodicity_residual(
    section: SectionLike,
    z,
    p: Sequence[int],
    epsilon: float = DEFAULT_EPSILON,
) -> float:
    """Normalized residual of the automorphy law under z -> z + tau p.

    For a product with factors of levels k_i and translations t_i the law is

        s(z + tau p) = exp(-pi i K p'tau p - 2 pi i (K p'z + p' sum k_i t_i)) s(z),

    with K = sum k_i. The residual is |lhs - factor * rhs| measured relative
    to |factor| * (1 + |s(z)|), computed entirely in log scale; dividing by
    |factor| is what keeps the quantity representable when the factor spans
    hundreds of orders of magnitude.
    """
    tau = section.tau
    divisors = section.divisors
    zs = _as_point_array(z, tau, divisors)
    if zs.shape[0] != 1:
        raise InvalidParameterError("residual is defined for a single point")
    p_arr = np.asarray(p, dtype=float)
    if p_arr.shape != (tau.g,) or not np.all(p_arr == np.round(p_arr)):
        raise InvalidParameterError("p must be an integer vector of length g")
    factors = _factors_of(section)
    K = sum(f.level for f in factors)
    t_weighted = np.zeros(tau.g, dtype=complex)
    for f in factors:
        t_weighted += f.level * complex_value(f.translation, tau, divisors)
    z0 = zs[0]
    w = (
        -1j * math.pi * K * (p_arr @ tau.tau @ p_arr)
        - 2j * math.pi * (K * (p_arr @ z0) + p_arr @ t_weighted)
    )
    shifted = zs + (tau.tau @ p_arr)[None, :]
    v1, c1 = values_scaled(section, shifted, epsilon)
    v2, c2 = values_scaled(section, zs, epsilon)
    # log-scales of the two sides of the identity
    s1 = c1[0]
    s2 = c2[0] + w.real
    top = max(s1, s2)
    lhs = v1[0] * math.exp(s1 - top)
    rhs = v2[0] * np.exp(1j * w.imag) * math.exp(s2 - top)
    log_num = math.log(abs(lhs - rhs) + 1e-300) + top
    # denominator |factor| * (1 + |s(z)|), also in log scale
    log_denom = w.real + np.logaddexp(0.0, math.log(abs(v2[0]) + 1e-300) + c2[0])
    return math.exp(min(log_num - log_denom, 700.0))


def section_label(section: SectionLike) -> str:
    """Stable human-readable identifier used in matrices and reports."""
    if isinstance(section, SectionProduct):
        return "*".join(section_label(f) for f in section.factors)
    c = ",".join(str(x) for x in section.characteristic)
    label = f"k{section.level}c({c})"
    t = section.translation
    if any(x != 0 for x in t.p + t.q):
        pt = ",".join(str(x) for x in t.p)
        qt = ",".join(str(x) for x in t.q)
        label += f"+t[{pt};{qt}]"
    return label
