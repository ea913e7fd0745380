"""Polarized complex tori in a fixed analytic model.

A genus-g torus is A = C^g / (tau Z^g + D Z^g), where tau lies in the Siegel
upper half space (symmetric with positive-definite imaginary part) and
D = diag(d_1, ..., d_g) encodes the polarization type. This module owns the
group theory attached to that model: the fixed group of the polarization,
the alternating pairing on it, the canonical maximal isotropic subgroup, and
the quotient data that descends the polarization to a principal one.

Points live in lattice coordinates (p, q) with exact rationals, meaning
z = tau @ p + D @ q. Torsion membership and subgroup closure are exact;
floating point enters only when a point is converted to its complex value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as iter_product
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidParameterError

SYMMETRY_TOL = 1e-12

__all__ = [
    "PolarizationType",
    "RiemannMatrix",
    "TorusPoint",
    "KGroupElement",
    "DescentData",
    "polarization_type",
    "h0_of_type",
    "theorem_bound_holds",
    "sample_tau",
    "torus_point",
    "zero_point",
    "complex_value",
    "k_group_element",
    "element_point",
    "weil_pairing",
    "descent_data",
    "is_subgroup",
    "tau_to_json",
    "tau_from_json",
]


@dataclass(frozen=True)
class PolarizationType:
    """Elementary divisors (d_1, ..., d_g) with d_i | d_{i+1}."""

    divisors: tuple[int, ...]

    def __post_init__(self):
        divs = tuple(int(d) for d in self.divisors)
        object.__setattr__(self, "divisors", divs)
        if len(divs) < 1:
            raise InvalidParameterError("polarization type needs g >= 1 divisors")
        if any(d < 1 for d in divs):
            raise InvalidParameterError(f"divisors must be positive, got {divs}")
        for a, b in zip(divs, divs[1:]):
            if b % a != 0:
                raise InvalidParameterError(
                    f"divisor chain violated: {a} does not divide {b}"
                )

    @property
    def g(self) -> int:
        return len(self.divisors)

    @property
    def h0(self) -> int:
        """Dimension of the space of sections, the product of the divisors."""
        return math.prod(self.divisors)

    def scaled(self, k: int) -> "PolarizationType":
        """Type of the k-th power of the bundle."""
        return PolarizationType(tuple(k * d for d in self.divisors))


def polarization_type(divisors) -> PolarizationType:
    """Coerce a sequence of integers (or an existing type) to a PolarizationType."""
    if isinstance(divisors, PolarizationType):
        return divisors
    return PolarizationType(tuple(divisors))


def h0_of_type(divisors) -> int:
    return polarization_type(divisors).h0


def theorem_bound_holds(g: int, divisors) -> bool:
    """Strict inequality h0 > 2^g * g! for the projective-normality criterion."""
    ptype = polarization_type(divisors)
    if ptype.g != g:
        raise InvalidParameterError(
            f"type length {ptype.g} does not match g={g}"
        )
    return ptype.h0 > (2**g) * math.factorial(g)


@dataclass(frozen=True, eq=False)
class RiemannMatrix:
    """Symmetric g x g complex matrix with positive-definite imaginary part.

    The smallest eigenvalue of Im(tau) is computed once at construction and
    cached for the truncation planner.
    """

    tau: np.ndarray
    lambda_min: float = field(init=False)

    def __post_init__(self):
        arr = np.array(self.tau, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
            raise InvalidParameterError(f"tau must be square g x g, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidParameterError("tau has non-finite entries")
        sym_residual = float(np.abs(arr - arr.T).max())
        if sym_residual > SYMMETRY_TOL:
            raise InvalidParameterError(
                f"tau not symmetric: residual {sym_residual:.3e} > {SYMMETRY_TOL}"
            )
        eigs = np.linalg.eigvalsh(arr.imag)
        lam = float(eigs[0])
        if lam <= 0:
            raise InvalidParameterError(
                f"Im(tau) not positive definite: lambda_min = {lam:.3e}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "tau", arr)
        object.__setattr__(self, "lambda_min", lam)

    @property
    def g(self) -> int:
        return self.tau.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, RiemannMatrix):
            return NotImplemented
        return self.g == other.g and self.tau.tobytes() == other.tau.tobytes()

    def __hash__(self) -> int:
        return hash((self.g, self.tau.tobytes()))


def sample_tau(g: int, seed: int, scale: float = 1.0) -> RiemannMatrix:
    """Draw a generic Siegel point tau = S + i (Q^T Q + scale * I).

    S is symmetric with entries uniform in [-1/2, 1/2] and Q is a standard
    normal g x g draw, so lambda_min(Im tau) >= scale by construction. The
    draw is a pure function of (g, seed, scale); identical arguments give a
    bit-identical matrix.
    """
    if g < 1:
        raise InvalidParameterError(f"g must be >= 1, got {g}")
    if not (scale > 0):
        raise InvalidParameterError(f"scale must be positive, got {scale}")
    rng = np.random.default_rng(seed)
    upper = rng.uniform(-0.5, 0.5, size=(g, g))
    s = np.triu(upper) + np.triu(upper, 1).T
    q = rng.standard_normal((g, g))
    y = q.T @ q + scale * np.eye(g)
    y = (y + y.T) / 2.0
    return RiemannMatrix(s + 1j * y)


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, (float, np.floating)):
        return Fraction(float(value))
    raise InvalidParameterError(f"cannot interpret {value!r} as an exact rational")


@dataclass(frozen=True, eq=False)
class TorusPoint:
    """A point z = tau @ p + D @ q in exact lattice coordinates.

    Two points are equal iff their coordinates differ by integer vectors;
    the canonical representative has all coordinates in [0, 1).
    """

    p: tuple[Fraction, ...]
    q: tuple[Fraction, ...]

    def __post_init__(self):
        p = tuple(_as_fraction(x) for x in self.p)
        q = tuple(_as_fraction(x) for x in self.q)
        if len(p) != len(q) or len(p) < 1:
            raise InvalidParameterError("p and q must have equal positive length")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @property
    def g(self) -> int:
        return len(self.p)

    def reduce(self) -> "TorusPoint":
        """Canonical representative with coordinates in [0, 1)."""
        return TorusPoint(tuple(x % 1 for x in self.p), tuple(x % 1 for x in self.q))

    def is_lattice(self) -> bool:
        return all(x.denominator == 1 for x in self.p + self.q)

    def __add__(self, other: "TorusPoint") -> "TorusPoint":
        if self.g != other.g:
            raise InvalidParameterError("dimension mismatch in point addition")
        return TorusPoint(
            tuple(a + b for a, b in zip(self.p, other.p)),
            tuple(a + b for a, b in zip(self.q, other.q)),
        )

    def __neg__(self) -> "TorusPoint":
        return TorusPoint(tuple(-x for x in self.p), tuple(-x for x in self.q))

    def __sub__(self, other: "TorusPoint") -> "TorusPoint":
        return self + (-other)

    def scaled(self, n: int) -> "TorusPoint":
        return TorusPoint(tuple(n * x for x in self.p), tuple(n * x for x in self.q))

    def _key(self):
        r = self.reduce()
        return (r.p, r.q)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TorusPoint):
            return NotImplemented
        return self.g == other.g and self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())


def torus_point(p, q) -> TorusPoint:
    """Build a TorusPoint from scalar or sequence coordinates."""
    p_seq = (p,) if not isinstance(p, (tuple, list, np.ndarray)) else tuple(p)
    q_seq = (q,) if not isinstance(q, (tuple, list, np.ndarray)) else tuple(q)
    return TorusPoint(tuple(p_seq), tuple(q_seq))


def zero_point(g: int) -> TorusPoint:
    return TorusPoint((Fraction(0),) * g, (Fraction(0),) * g)


def complex_value(point: TorusPoint, tau: RiemannMatrix, divisors) -> np.ndarray:
    """Complex coordinates tau @ p + D @ q of a point, as a (g,) array."""
    ptype = polarization_type(divisors)
    if point.g != tau.g or point.g != ptype.g:
        raise InvalidParameterError("point, tau and type dimensions disagree")
    p = np.array([float(x) for x in point.p])
    q = np.array([float(x) for x in point.q])
    d = np.array(ptype.divisors, dtype=float)
    return tau.tau @ p + d * q


@dataclass(frozen=True)
class KGroupElement:
    """Element of the fixed group K(L) = (Z^g/D Z^g)^2 in split coordinates.

    `a` indexes the tau-direction component (the point tau D^{-1} a) and
    `q` the real-direction component (the point q). Both are reduced mod D.
    """

    a: tuple[int, ...]
    q: tuple[int, ...]


def k_group_element(a: Sequence[int], q: Sequence[int], divisors) -> KGroupElement:
    ptype = polarization_type(divisors)
    a = tuple(int(x) for x in a)
    q = tuple(int(x) for x in q)
    if len(a) != ptype.g or len(q) != ptype.g:
        raise InvalidParameterError("component length must equal g")
    a_red = tuple(x % d for x, d in zip(a, ptype.divisors))
    q_red = tuple(x % d for x, d in zip(q, ptype.divisors))
    return KGroupElement(a_red, q_red)


def element_point(x: KGroupElement, divisors) -> TorusPoint:
    """The torus point tau D^{-1} a + q represented by a fixed-group element."""
    ptype = polarization_type(divisors)
    p = tuple(Fraction(ai, di) for ai, di in zip(x.a, ptype.divisors))
    q = tuple(Fraction(qi, di) for qi, di in zip(x.q, ptype.divisors))
    return TorusPoint(p, q)


def weil_pairing(x: KGroupElement, y: KGroupElement, divisors) -> complex:
    """Alternating pairing e(x, y) = exp(2 pi i (a_x . D^{-1} q_y - a_y . D^{-1} q_x)).

    The phase is accumulated as an exact rational, so the value is a root of
    unity of order dividing d_g up to one complex exponential rounding.
    """
    ptype = polarization_type(divisors)
    phase = Fraction(0)
    for ax, ay, qx, qy, d in zip(x.a, y.a, x.q, y.q, ptype.divisors):
        phase += Fraction(ax * qy - ay * qx, d)
    return complex(np.exp(2j * np.pi * float(phase % 1)))


def _index_vectors(divisors: tuple[int, ...]) -> Iterable[tuple[int, ...]]:
    """Lexicographic enumeration of Z^g mod D."""
    return iter_product(*(range(d) for d in divisors))


@dataclass(frozen=True)
class DescentData:
    """Quotient data for the isogeny A -> B = A/H killing the real directions.

    H is the canonical maximal isotropic subgroup {(a=0, q)} of order
    prod(d_i); B = C^g / (tau Z^g + Z^g) carries a principal polarization,
    and H_prime lists the points tau D^{-1} c of B dual to the characters
    of H, in lexicographic order of c.
    """

    base_type: PolarizationType
    tau: RiemannMatrix
    H: tuple[KGroupElement, ...]
    H_prime: tuple[TorusPoint, ...]

    @property
    def quotient_type(self) -> PolarizationType:
        return PolarizationType((1,) * self.base_type.g)


def descent_data(divisors, tau: RiemannMatrix) -> DescentData:
    ptype = polarization_type(divisors)
    if ptype.g != tau.g:
        raise InvalidParameterError("type and tau dimensions disagree")
    g = ptype.g
    zeros = (0,) * g
    H = tuple(KGroupElement(zeros, qv) for qv in _index_vectors(ptype.divisors))
    H_prime = tuple(
        TorusPoint(
            tuple(Fraction(ci, di) for ci, di in zip(cv, ptype.divisors)),
            (Fraction(0),) * g,
        )
        for cv in _index_vectors(ptype.divisors)
    )
    data = DescentData(ptype, tau, H, H_prime)
    # Cheap structural guarantees: orders match and the pairing is exactly
    # trivial on H because every element has a = 0.
    assert len(H) == len(H_prime) == ptype.h0
    return data


def is_subgroup(points: Sequence[TorusPoint]) -> bool:
    """Exact check that a finite point list is a subgroup of the torus."""
    if len(points) == 0:
        return False
    g = points[0].g
    reduced = {pt.reduce()._key() for pt in points}
    if len(reduced) != len(points):
        return False
    if zero_point(g).reduce()._key() not in reduced:
        return False
    for x in points:
        if (-x).reduce()._key() not in reduced:
            return False
        for y in points:
            if (x + y).reduce()._key() not in reduced:
                return False
    return True


def tau_to_json(tau: RiemannMatrix) -> dict:
    """Serialize to {"g", "re", "im"} with full row-major matrices."""
    return {
        "g": tau.g,
        "re": [[float(v) for v in row] for row in tau.tau.real],
        "im": [[float(v) for v in row] for row in tau.tau.imag],
    }


def tau_from_json(obj: dict) -> RiemannMatrix:
    """Rebuild a RiemannMatrix from its JSON form, revalidating symmetry."""
    try:
        g = int(obj["g"])
        re = np.array(obj["re"], dtype=float)
        im = np.array(obj["im"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidParameterError(f"malformed tau object: {exc}") from exc
    if re.shape != (g, g) or im.shape != (g, g):
        raise InvalidParameterError(
            f"tau matrices must be {g} x {g}, got re {re.shape}, im {im.shape}"
        )
    return RiemannMatrix(re + 1j * im)
