"""Multiplication-map ranks, descent blocks, and normality verdicts.

The pipeline decides whether the degree-r multiplication maps out of the
section space of an ample bundle are surjective, by evaluating monomials of
the level-1 theta basis at random points and certifying numeric ranks. The
degree-2 case is additionally cross-checked through the quotient torus: the
map splits into blocks indexed by the dual subgroup H', each block spanned
by two-factor products of translated principal thetas, and the block ranks
must add up to the direct rank exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations_with_replacement, product as iter_product
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    ConsistencyError,
    DegenerateInputError,
    InconclusiveRankError,
    InvalidParameterError,
)
from .ranks import (
    DEFAULT_MIN_MARGIN,
    RankReport,
    design_point_count,
    matrix_from_scaled_rows,
    numeric_rank,
    oversampled,
    require_conclusive,
    sample_points,
)
from .theta import (
    DEFAULT_EPSILON,
    SectionLike,
    ThetaSection,
    basis_L_power,
    theta_values_scaled,
    translate_section,
    values_scaled,
)
from .torus import (
    DescentData,
    PolarizationType,
    RiemannMatrix,
    TorusPoint,
    descent_data,
    is_subgroup,
    polarization_type,
    theorem_bound_holds,
    zero_point,
)

# spawn-key tags keeping the seeded point streams of the pipeline apart
_TAG_RHO = 10
_TAG_BLOCK = 20
_TAG_SPAN = 30
_TAG_PROBE_SUP = 40

ZERO_TOL_DEFAULT = 1e-6
AMBIGUOUS_BAND = 100.0  # relative magnitudes in [zero_tol, 100*zero_tol) are ambiguous

__all__ = [
    "Tolerances",
    "MultiplicationMapSpec",
    "NormalityVerdict",
    "SpanCheckResult",
    "DivisorProbeResult",
    "rho_rank",
    "quadric_dim",
    "block_rho_ranks",
    "kummer_span_check",
    "subgroup_span_check",
    "subgroup_span_report",
    "divisor_subgroup_probe",
    "full_check",
]


@dataclass(frozen=True)
class Tolerances:
    """Numeric policy shared by the pipeline operations."""

    theta_epsilon: float = DEFAULT_EPSILON
    rank_rel_tol: float = 1e-14
    zero_tol: float = ZERO_TOL_DEFAULT
    min_margin: float = DEFAULT_MIN_MARGIN

    def __post_init__(self):
        for name in ("theta_epsilon", "rank_rel_tol", "zero_tol", "min_margin"):
            if not (getattr(self, name) > 0):
                raise InvalidParameterError(f"{name} must be positive")

    def as_json(self) -> dict:
        return {
            "theta_epsilon": self.theta_epsilon,
            "rank_rel_tol": self.rank_rel_tol,
            "zero_tol": self.zero_tol,
            "min_margin": self.min_margin,
        }


DEFAULT_TOLERANCES = Tolerances()


@dataclass(frozen=True)
class MultiplicationMapSpec:
    """Degree-r multiplication out of the level-1 basis, optionally twisted.

    translations, when given, holds one offset per tensor factor; all-zero
    offsets give the plain map. Offsets realize degree-0 twists of the
    factors, so a generic twist is a seeded random translation.
    """

    divisors: PolarizationType
    tau: RiemannMatrix
    r: int
    translations: tuple[TorusPoint, ...] | None = None

    def __post_init__(self):
        ptype = polarization_type(self.divisors)
        object.__setattr__(self, "divisors", ptype)
        if self.r < 2:
            raise InvalidParameterError(f"r must be >= 2, got {self.r}")
        if ptype.g != self.tau.g:
            raise InvalidParameterError("type and tau dimensions disagree")
        if self.translations is not None:
            if len(self.translations) != self.r:
                raise InvalidParameterError(
                    f"need {self.r} translations, got {len(self.translations)}"
                )
            object.__setattr__(self, "translations", tuple(self.translations))

    @property
    def expected_rank(self) -> int:
        """Target dimension of sections at level r."""
        return (self.r**self.divisors.g) * self.divisors.h0


def _monomial_rows(
    basis_values: Mapping[TorusPoint, tuple[np.ndarray, np.ndarray]],
    groups: Sequence[tuple[TorusPoint, int]],
    h0: int,
) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Rows for all degree-r monomials, symmetrized within equal-offset groups."""
    per_group: list[list[tuple[tuple[int, ...], np.ndarray, np.ndarray]]] = []
    for offset, mult in groups:
        vals, logs = basis_values[offset]
        combos = []
        for idx in combinations_with_replacement(range(h0), mult):
            v = np.ones(vals.shape[1], dtype=complex)
            c = np.zeros(vals.shape[1], dtype=float)
            for i in idx:
                v = v * vals[i]
                c = c + logs[i]
            combos.append((idx, v, c))
        per_group.append(combos)
    rows_v, rows_c, labels = [], [], []
    for parts in iter_product(*per_group):
        v = parts[0][1].copy()
        c = parts[0][2].copy()
        for _, pv, pc in parts[1:]:
            v *= pv
            c += pc
        rows_v.append(v)
        rows_c.append(c)
        labels.append("|".join(_idx_label(idx) for idx, _, _ in parts))
    return np.array(rows_v), np.array(rows_c), labels


def _idx_label(idx: tuple[int, ...]) -> str:
    return "*".join(f"b{i}" for i in idx)


def rho_rank(
    spec: MultiplicationMapSpec,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    seed: int = 0,
) -> RankReport:
    """Numeric rank of the degree-r multiplication map.

    Monomials are multisets of level-1 basis indices within each distinct
    translation offset (for the plain r = 2 map, the h0 (h0 + 1) / 2
    symmetric products). Surjectivity holds iff the rank equals
    r^g * prod(d_i).
    """
    ptype = spec.divisors
    g = ptype.g
    offsets = list(spec.translations) if spec.translations else [zero_point(g)] * spec.r
    groups: list[tuple[TorusPoint, int]] = []
    for off in offsets:
        for j, (existing, mult) in enumerate(groups):
            if existing == off:
                groups[j] = (existing, mult + 1)
                break
        else:
            groups.append((off, 1))

    n_base = design_point_count(spec.expected_rank)
    points = sample_points(g, oversampled(n_base), seed, tag=_TAG_RHO + spec.r)
    basis = basis_L_power(ptype, spec.tau, 1)
    basis_values: dict[TorusPoint, tuple[np.ndarray, np.ndarray]] = {}
    for offset, _ in groups:
        vals = np.empty((ptype.h0, len(points)), dtype=complex)
        logs = np.empty_like(vals, dtype=float)
        for i, section in enumerate(basis):
            vals[i], logs[i] = theta_values_scaled(
                translate_section(section, offset), points, tolerances.theta_epsilon
            )
        basis_values[offset] = (vals, logs)

    rows_v, rows_c, labels = _monomial_rows(basis_values, groups, ptype.h0)
    matrix = matrix_from_scaled_rows(rows_v, rows_c, labels, points, base_cols=n_base)
    return numeric_rank(matrix, tolerances.rank_rel_tol)


def quadric_dim(h0: int, rho2_report: RankReport) -> int:
    """Dimension of the kernel of the degree-2 map on symmetric products."""
    if not rho2_report.verdict_stable:
        raise InconclusiveRankError(
            "quadric dimension requires a stable degree-2 rank",
            report=rho2_report,
            component="quadric_dim",
        )
    dim = h0 * (h0 + 1) // 2 - rho2_report.rank
    if dim < 0:
        raise ConsistencyError(
            f"degree-2 rank {rho2_report.rank} exceeds the symmetric square "
            f"dimension {h0 * (h0 + 1) // 2}"
        )
    return dim


def _raw_key(point: TorusPoint):
    return (point.p, point.q)


def block_offset_plan(descent: DescentData):
    """Raw translation lifts behind the block sections, shared across blocks.

    Returns (offsets, pairs): offsets maps a raw coordinate key to the lift
    itself, and pairs maps each block index c to the list of
    (left_key, right_key) per b in H', where the row is the product of the
    thetas translated by the left (-b) and right (b - sigma) lifts. Lifts
    are never reduced mod the lattice; see block_rho_ranks.
    """
    offsets: dict = {}
    for b in descent.H_prime:
        offsets.setdefault(_raw_key(-b), -b)
    pairs: dict[tuple[int, ...], list] = {}
    divisors = descent.base_type.divisors
    for c_vec, sigma in zip(iter_product(*(range(d) for d in divisors)), descent.H_prime):
        row_keys = []
        for b in descent.H_prime:
            diff = b - sigma
            offsets.setdefault(_raw_key(diff), diff)
            row_keys.append((_raw_key(-b), _raw_key(diff)))
        pairs[c_vec] = row_keys
    return offsets, pairs


def block_rho_ranks(
    divisors,
    tau: RiemannMatrix,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    seed: int = 0,
) -> dict[tuple[int, ...], RankReport]:
    """Per-block rank of the degree-2 map seen on the principal quotient.

    Keys are the characteristic vectors c of the dual-subgroup points
    sigma = tau D^{-1} c, in lexicographic order. Each block is spanned by
    the sections s_b(z) = theta(z - b) * theta(z + b - sigma) over b in H';
    the expected full rank is 2^g, the section count of the squared
    principal bundle.

    The translation lifts -b and b - sigma are used raw, never reduced mod
    the lattice: every row then carries the same total offset -sigma, which
    is what keeps all rows of a block inside one automorphy class. Reducing
    a lift would multiply that row by a z-dependent factor and inflate the
    rank beyond 2^g.
    """
    ptype = polarization_type(divisors)
    descent = descent_data(ptype, tau)
    g = ptype.g
    expected = 2**g
    n_base = design_point_count(expected)
    points = sample_points(g, oversampled(n_base), seed, tag=_TAG_BLOCK)
    principal = descent.quotient_type
    theta_b = ThetaSection(1, (0,) * g, principal, tau)

    offsets, pairs = block_offset_plan(descent)
    translate_values: dict = {}
    for key, offset in offsets.items():
        section = translate_section(theta_b, offset)
        translate_values[key] = theta_values_scaled(
            section, points, tolerances.theta_epsilon
        )

    reports: dict[tuple[int, ...], RankReport] = {}
    h = len(descent.H_prime)
    for c_vec, row_keys in pairs.items():
        rows_v = np.empty((h, len(points)), dtype=complex)
        rows_c = np.empty_like(rows_v, dtype=float)
        for j, (left, right) in enumerate(row_keys):
            lv, lc = translate_values[left]
            rv, rc = translate_values[right]
            rows_v[j] = lv * rv
            rows_c[j] = lc + rc
        matrix = matrix_from_scaled_rows(
            rows_v, rows_c, [f"b{j}" for j in range(h)], points, base_cols=n_base
        )
        reports[c_vec] = numeric_rank(matrix, tolerances.rank_rel_tol)
    return reports


def index_of_c(ptype: PolarizationType, c_vec: tuple[int, ...]) -> int:
    """Position of a characteristic vector in the lexicographic enumeration."""
    idx = 0
    for c, d in zip(c_vec, ptype.divisors):
        idx = idx * d + (c % d)
    return idx


def kummer_span_check(
    divisors,
    tau: RiemannMatrix,
    sigma: tuple[int, ...] | TorusPoint,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    seed: int = 0,
) -> bool:
    """Whether the dual-subgroup image spans the translated square system.

    This is the geometric restatement of one block being surjective: the
    points b -> t_b theta + t_{sigma - b} theta of the quotient span the
    2^g-dimensional target. sigma may be a characteristic vector or the
    corresponding point.
    """
    ptype = polarization_type(divisors)
    if isinstance(sigma, TorusPoint):
        descent = descent_data(ptype, tau)
        index_of = {pt.reduce()._key(): i for i, pt in enumerate(descent.H_prime)}
        key = sigma.reduce()._key()
        if key not in index_of:
            raise InvalidParameterError("sigma must be a dual-subgroup point")
        pos = index_of[key]
        c_vec = list(iter_product(*(range(d) for d in ptype.divisors)))[pos]
    else:
        c_vec = tuple(int(x) % d for x, d in zip(sigma, ptype.divisors))
    report = block_rho_ranks(ptype, tau, tolerances, seed)[c_vec]
    require_conclusive(report, f"kummer block {c_vec}", tolerances.min_margin)
    return report.rank == 2**ptype.g


@dataclass(frozen=True)
class SpanCheckResult:
    report: RankReport
    spanning: bool
    h0: int
    group_order: int
    in_hypothesis: bool
    excluded_base_points: int


def subgroup_span_report(
    divisors,
    tau: RiemannMatrix,
    level: int,
    group: Sequence[TorusPoint],
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> SpanCheckResult:
    """Evaluate the full level-k basis at the points of a finite subgroup.

    The images of the group span the system iff the sections-by-points
    matrix has full row rank h0. Points where every basis section vanishes
    (base locus) are excluded beforehand. The column set is the whole
    group, so the rank certificate is the margin alone.
    """
    ptype = polarization_type(divisors)
    if not is_subgroup(list(group)):
        raise InvalidParameterError("points do not form a subgroup")
    basis = basis_L_power(ptype, tau, level)
    h0 = len(basis)
    pts = [pt.reduce() for pt in group]
    vals = np.empty((h0, len(pts)), dtype=complex)
    logs = np.empty_like(vals, dtype=float)
    for i, section in enumerate(basis):
        vals[i], logs[i] = theta_values_scaled(section, pts, tolerances.theta_epsilon)

    with np.errstate(divide="ignore"):
        mag = np.where(vals != 0, np.log(np.abs(vals) + 0.0), -1e30) + logs
    global_sup = mag.max()
    col_sup = mag.max(axis=0)
    keep = col_sup >= global_sup + math.log(tolerances.zero_tol)
    excluded = int((~keep).sum())
    if not keep.any():
        raise DegenerateInputError(
            "every subgroup point lies in the base locus of the system"
        )
    matrix = matrix_from_scaled_rows(
        vals[:, keep],
        logs[:, keep],
        [f"s{i}" for i in range(h0)],
        [p for p, k in zip(pts, keep) if k],
        base_cols=int(keep.sum()),
        exhaustive=True,
    )
    report = require_conclusive(
        numeric_rank(matrix, tolerances.rank_rel_tol),
        "subgroup span",
        tolerances.min_margin,
    )
    threshold = h0 * math.factorial(ptype.g)
    return SpanCheckResult(
        report=report,
        spanning=report.rank == h0,
        h0=h0,
        group_order=len(group),
        in_hypothesis=len(group) > threshold,
        excluded_base_points=excluded,
    )


def subgroup_span_check(
    divisors,
    tau: RiemannMatrix,
    level: int,
    group: Sequence[TorusPoint],
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> bool:
    return subgroup_span_report(divisors, tau, level, group, tolerances).spanning


@dataclass(frozen=True)
class DivisorProbeResult:
    """Zero counts of a section over a finite subgroup.

    count_on_divisor points fall below zero_tol relative to the sampled
    sup-norm; ambiguous ones sit in the guard band just above. bound_ok is
    False only in the alarming configuration: the whole subgroup on the
    divisor although the order exceeds h0 * g!, which on a generic torus
    should be impossible and indicates a calibration problem.
    """

    count_on_divisor: int
    ambiguous: int
    group_order: int
    containment_bound: int
    bound_ok: bool
    log_sup: float


def divisor_subgroup_probe(
    section: SectionLike,
    group: Sequence[TorusPoint],
    zero_tol: float = ZERO_TOL_DEFAULT,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    seed: int = 0,
) -> DivisorProbeResult:
    if not (0 < zero_tol < 1):
        raise InvalidParameterError("zero_tol must lie in (0, 1)")
    if not is_subgroup(list(group)):
        raise InvalidParameterError("points do not form a subgroup")
    ptype = section.divisors
    g = ptype.g
    sup_pts = sample_points(g, 64, seed, tag=_TAG_PROBE_SUP)
    sv, sc = values_scaled(section, sup_pts, tolerances.theta_epsilon)
    gv, gc = values_scaled(section, [pt.reduce() for pt in group], tolerances.theta_epsilon)
    log_mag = np.log(np.abs(gv) + 1e-300) + gc
    # reference scale: the sampled sup together with the group values, so
    # points with large imaginary parts are judged against their own scale
    log_sup = float(max((np.log(np.abs(sv) + 1e-300) + sc).max(), log_mag.max()))
    rel = log_mag - log_sup
    on_divisor = int((rel < math.log(zero_tol)).sum())
    ambiguous = int(
        ((rel >= math.log(zero_tol)) & (rel < math.log(zero_tol * AMBIGUOUS_BAND))).sum()
    )
    h0 = (section.level**g) * ptype.h0
    bound = h0 * math.factorial(g)
    bound_ok = (on_divisor < len(group)) or (len(group) <= bound)
    return DivisorProbeResult(
        count_on_divisor=on_divisor,
        ambiguous=ambiguous,
        group_order=len(group),
        containment_bound=bound,
        bound_ok=bound_ok,
        log_sup=log_sup,
    )


@dataclass(frozen=True)
class NormalityVerdict:
    """Complete evidence bundle for one polarized torus instance."""

    g: int
    divisors: PolarizationType
    bound_holds: bool
    two_normal: bool
    r_normal: dict[int, bool]
    dim_I2: int
    rho_reports: dict[int, RankReport]
    block_ranks: dict[tuple[int, ...], RankReport]
    kummer_span: dict[tuple[int, ...], bool]
    seed: int
    tolerances: Tolerances
    genericity_assumed: bool = True

    @property
    def h0(self) -> int:
        return self.divisors.h0

    @property
    def expected_rho2(self) -> int:
        return (2**self.g) * self.h0


def full_check(
    g: int,
    divisors,
    tau: RiemannMatrix,
    r_list: Sequence[int] = (2, 3),
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    seed: int = 0,
) -> NormalityVerdict:
    """End-to-end verdict: bound, degree-r ranks, blocks, span checks.

    Internal consistency is asserted hard: block ranks must add up to the
    direct degree-2 rank, the span checks must match 2-normality, a
    passing bound with a failing verdict aborts (generic instances cannot
    do that unless the build is wrong), and 2-normality must propagate to
    every higher requested degree.
    """
    ptype = polarization_type(divisors)
    if ptype.g != g or tau.g != g:
        raise InvalidParameterError("g, type and tau dimensions disagree")
    r_list = sorted(set(int(r) for r in r_list) | {2})
    if any(r not in (2, 3, 4) for r in r_list):
        raise InvalidParameterError(f"r_list must be within {{2, 3, 4}}, got {r_list}")

    bound = theorem_bound_holds(g, ptype)

    rho_reports: dict[int, RankReport] = {}
    r_normal: dict[int, bool] = {}
    for r in r_list:
        spec = MultiplicationMapSpec(ptype, tau, r)
        report = rho_rank(spec, tolerances, seed)
        require_conclusive(report, f"rho_{r}", tolerances.min_margin)
        rho_reports[r] = report
        r_normal[r] = report.rank == spec.expected_rank

    two_normal = r_normal[2]
    dim_i2 = quadric_dim(ptype.h0, rho_reports[2])

    blocks = block_rho_ranks(ptype, tau, tolerances, seed)
    expected_block = 2**g
    kummer: dict[tuple[int, ...], bool] = {}
    for c_vec, report in blocks.items():
        require_conclusive(report, f"block {c_vec}", tolerances.min_margin)
        if report.rank > expected_block:
            raise ConsistencyError(
                f"block {c_vec} rank {report.rank} exceeds the target "
                f"dimension {expected_block}; the descent model is broken"
            )
        kummer[c_vec] = report.rank == expected_block

    block_sum = sum(rep.rank for rep in blocks.values())
    if block_sum != rho_reports[2].rank:
        raise ConsistencyError(
            f"block additivity violated: sum of block ranks {block_sum} != "
            f"direct degree-2 rank {rho_reports[2].rank}"
        )
    if two_normal != all(kummer.values()):
        raise ConsistencyError(
            "2-normality and the span checks disagree: "
            f"two_normal={two_normal}, blocks={[kummer[c] for c in kummer]}"
        )
    if bound and not two_normal:
        raise ConsistencyError(
            f"bound {ptype.h0} > {2**g * math.factorial(g)} holds but the "
            "degree-2 map is not surjective; genericity or the build failed "
            f"(rank {rho_reports[2].rank} of {(2**g) * ptype.h0})"
        )
    if two_normal and not all(r_normal.values()):
        raise ConsistencyError(
            f"2-normal instance with a deficient higher-degree map: {r_normal}"
        )

    return NormalityVerdict(
        g=g,
        divisors=ptype,
        bound_holds=bound,
        two_normal=two_normal,
        r_normal=r_normal,
        dim_I2=dim_i2,
        rho_reports=rho_reports,
        block_ranks=blocks,
        kummer_span=kummer,
        seed=seed,
        tolerances=tolerances,
    )
