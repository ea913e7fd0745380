"""Evaluation matrices and certified numeric ranks.

Rank evidence comes as an EvaluationMatrix (sections x sample points, rows
normalized to unit sup-norm) plus a RankReport carrying the singular values,
the margin at the rank cut, and a stability verdict obtained by comparing
the rank at the designed sample count against the rank with 50% more
columns. Downstream verdicts must pass `require_conclusive`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import InconclusiveRankError, InvalidParameterError
from .theta import DEFAULT_EPSILON, SectionLike, section_label, values_scaled
from .torus import TorusPoint

DEFAULT_REL_TOL = 1e-14
OVERSAMPLE = 1.5
DEFAULT_MIN_MARGIN = 10.0

LOG_ZERO = -1e30  # placeholder log-magnitude for exactly zero rows

__all__ = [
    "EvaluationMatrix",
    "RankReport",
    "eval_matrix",
    "matrix_from_scaled_rows",
    "numeric_rank",
    "require_conclusive",
    "span_rank",
    "rank_report_json",
    "sample_points",
    "design_point_count",
    "oversampled",
]


def design_point_count(ambient_dim: int) -> int:
    """Default sample count: ambient dimension plus a safety margin."""
    return ambient_dim + max(8, -(-ambient_dim // 4))


def oversampled(count: int) -> int:
    return math.ceil(OVERSAMPLE * count)


@dataclass(frozen=True)
class RankReport:
    """Numeric rank with its certificate.

    margin is sigma_rank / sigma_{rank+1} (inf when the matrix has full
    rank or the next singular value underflows); verdict_stable records
    whether the rank was unchanged between the designed sample count and
    the 1.5x oversampled column set.
    """

    rank: int
    singular_values: tuple[float, ...]
    margin: float
    rel_tol: float
    sample_count: int
    verdict_stable: bool
    degenerate: bool = False


@dataclass(frozen=True)
class EvaluationMatrix:
    """Section values at sample points, diagonally equilibrated.

    Theta magnitudes swing over hundreds of orders as the imaginary part of
    the sample point moves, and the swing is a per-point effect common to
    every section of one automorphy class. Diagonal rescalings never change
    the rank, so each column is first brought to unit sup-norm and then
    each row is (the recorded scales recover the raw values). base_cols is
    the designed sample count, always <= the actual column count; the extra
    columns exist for the stability recheck. exhaustive_columns marks
    matrices whose column set is a complete finite point set (such as a
    whole subgroup) rather than a random sample, for which column
    subsampling is meaningless.
    """

    values: np.ndarray
    row_log_scale: np.ndarray
    col_log_scale: np.ndarray
    row_labels: tuple[str, ...]
    points: tuple[TorusPoint, ...] | None
    base_cols: int
    exhaustive_columns: bool = False

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def matrix_from_scaled_rows(
    vals: np.ndarray,
    logs: np.ndarray,
    labels: Sequence[str],
    points: Sequence[TorusPoint] | None = None,
    base_cols: int | None = None,
    exhaustive: bool = False,
) -> EvaluationMatrix:
    """Assemble an EvaluationMatrix from (mantissa, log-scale) rows."""
    vals = np.asarray(vals, dtype=complex)
    logs = np.asarray(logs, dtype=float)
    if vals.ndim != 2 or vals.shape != logs.shape:
        raise InvalidParameterError("values and log scales must be equal 2-d arrays")
    if vals.shape[0] != len(labels):
        raise InvalidParameterError("one label per row required")
    if not (np.all(np.isfinite(vals)) and np.all(np.isfinite(logs))):
        raise InvalidParameterError("matrix entries must be finite")
    n_rows, n_cols = vals.shape
    if n_cols < 1 or n_rows < 1:
        raise InvalidParameterError("matrix must be non-empty")
    if base_cols is None:
        base_cols = math.ceil(n_cols / OVERSAMPLE)
    if not (1 <= base_cols <= n_cols):
        raise InvalidParameterError(
            f"base_cols {base_cols} out of range for {n_cols} columns"
        )
    with np.errstate(divide="ignore"):
        mag = np.where(vals != 0, np.log(np.abs(vals) + 0.0), LOG_ZERO) + logs
    col_scale = mag.max(axis=0)
    col_scale = np.where(col_scale <= LOG_ZERO / 2, 0.0, col_scale)
    mag = mag - col_scale[None, :]
    row_scale = mag.max(axis=1)
    dead = row_scale <= LOG_ZERO / 2
    row_scale = np.where(dead, 0.0, row_scale)
    normalized = vals * np.exp(logs - col_scale[None, :] - row_scale[:, None])
    normalized[dead] = 0.0
    return EvaluationMatrix(
        values=normalized,
        row_log_scale=row_scale,
        col_log_scale=col_scale,
        row_labels=tuple(labels),
        points=tuple(points) if points is not None else None,
        base_cols=int(base_cols),
        exhaustive_columns=exhaustive,
    )


def eval_matrix(
    sections: Sequence[SectionLike],
    points: Sequence[TorusPoint],
    epsilon: float = DEFAULT_EPSILON,
    base_cols: int | None = None,
) -> EvaluationMatrix:
    """Evaluate sections at pairwise-distinct points, one row per section."""
    if len(sections) == 0:
        raise InvalidParameterError("at least one section required")
    reduced = [pt.reduce() for pt in points]
    if len({(r.p, r.q) for r in reduced}) != len(points):
        raise InvalidParameterError("evaluation points must be pairwise distinct")
    vals = np.empty((len(sections), len(points)), dtype=complex)
    logs = np.empty_like(vals, dtype=float)
    for i, section in enumerate(sections):
        vals[i], logs[i] = values_scaled(section, list(points), epsilon)
    labels = [section_label(s) for s in sections]
    return matrix_from_scaled_rows(vals, logs, labels, points, base_cols)


def _svd_rank(values: np.ndarray, rel_tol: float) -> tuple[int, np.ndarray]:
    sv = np.linalg.svd(values, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0, sv
    return int((sv > rel_tol * sv[0]).sum()), sv


def numeric_rank(matrix: EvaluationMatrix, rel_tol: float = DEFAULT_REL_TOL) -> RankReport:
    """Rank by singular-value cut, with margin and stability verdict.

    The rank is taken from the full column set; stability compares it with
    the rank at the designed base_cols sample count. Exhaustive-column
    matrices are their own certificate and are marked stable.
    """
    if not (0 < rel_tol < 1):
        raise InvalidParameterError(f"rel_tol must lie in (0, 1), got {rel_tol}")
    rank, sv = _svd_rank(matrix.values, rel_tol)
    degenerate = sv.size == 0 or sv[0] == 0.0
    if matrix.exhaustive_columns:
        stable = True
    else:
        sub_rank, _ = _svd_rank(matrix.values[:, : matrix.base_cols], rel_tol)
        stable = sub_rank == rank
    if rank == 0 or rank >= sv.size or sv[rank] == 0.0:
        margin = math.inf
    else:
        margin = float(sv[rank - 1] / sv[rank])
    return RankReport(
        rank=rank,
        singular_values=tuple(float(s) for s in sv),
        margin=margin,
        rel_tol=rel_tol,
        sample_count=matrix.base_cols,
        verdict_stable=stable,
        degenerate=degenerate,
    )


def require_conclusive(
    report: RankReport,
    component: str,
    min_margin: float = DEFAULT_MIN_MARGIN,
) -> RankReport:
    """Gate a report before it may feed a verdict; raises when flaky."""
    if report.degenerate:
        raise InconclusiveRankError(
            f"{component}: all sampled values vanished, no rank evidence",
            report=report,
            component=component,
        )
    if not report.verdict_stable:
        raise InconclusiveRankError(
            f"{component}: rank changed under 1.5x sampling "
            f"(rank {report.rank}); rerun with a fresh seed",
            report=report,
            component=component,
        )
    if report.margin < min_margin:
        raise InconclusiveRankError(
            f"{component}: singular-value margin {report.margin:.2f} below "
            f"{min_margin}; rerun with a fresh seed",
            report=report,
            component=component,
        )
    return report


def span_rank(
    sections: Sequence[SectionLike],
    ambient_dim: int,
    points: Sequence[TorusPoint],
    epsilon: float = DEFAULT_EPSILON,
    rel_tol: float = DEFAULT_REL_TOL,
    min_margin: float = DEFAULT_MIN_MARGIN,
) -> tuple[RankReport, bool]:
    """Whether the sections span an ambient_dim-dimensional space of values.

    Never reports spanning unless the stable rank equals ambient_dim.
    """
    if ambient_dim < 1:
        raise InvalidParameterError("ambient_dim must be >= 1")
    if len(points) < ambient_dim + 8:
        raise InvalidParameterError(
            f"need at least ambient_dim + 8 = {ambient_dim + 8} points, "
            f"got {len(points)}"
        )
    matrix = eval_matrix(sections, points, epsilon)
    report = require_conclusive(numeric_rank(matrix, rel_tol), "span_rank", min_margin)
    return report, report.rank == ambient_dim


def rank_report_json(report: RankReport, expected: int) -> dict:
    """JSON form with head/tail singular values around the spectrum."""
    sv = report.singular_values
    return {
        "rank": report.rank,
        "expected": int(expected),
        "margin": "inf" if math.isinf(report.margin) else float(report.margin),
        "stable": report.verdict_stable,
        "sv_head": [float(s) for s in sv[:5]],
        "sv_tail": [float(s) for s in sv[-5:]],
    }


def sample_points(g: int, count: int, seed: int, tag: int = 0) -> list[TorusPoint]:
    """Uniform points on the real torus (p = 0), deterministic in (seed, tag).

    Restricting sections to the real torus is injective (the lattice-sum
    frequencies are pairwise distinct across characteristics), so real
    sample points certify the same ranks as fully generic ones while
    keeping every magnitude of order one; sampling the tau directions
    instead makes entries swing exponentially and drowns the rank cut.
    """
    if g < 1 or count < 1:
        raise InvalidParameterError("g and count must be positive")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(tag,)))
    coords = rng.random((count, g))
    zero = (Fraction(0),) * g
    return [TorusPoint(zero, tuple(row.tolist())) for row in coords]
