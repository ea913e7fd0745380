"""Arbitrary-precision certification of descent-block ranks.

Thin polarization types concentrate the dual subgroup along few torus
directions, and the transverse components of the block sections then enter
at scales like exp(-pi * quadratic form), e.g. around 1e-24 relative for a
generic (1, 1, 49) threefold. Double precision cannot separate such
directions from roundoff, so this module re-evaluates the block matrices
with mpmath at a configurable working precision and reads the rank off the
then-unambiguous spectral gap.

The evaluation exploits that every block offset is a pure tau-direction
lift and every sample point is real: theta(z + tau nu) at real z is a sum
of unimodular point factors exp(2 pi i n.z) against offset weights
exp(pi i (n.tau n + 2 n.tau nu)), so the point factors are shared across
all offsets and the lattice is enumerated once.

The degree-2 multiplication rank equals the sum of the block ranks
exactly, which is how `rho2_rank_mp` certifies ranks that the double
precision pipeline reports as inconclusive or contradictory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath as mp
import numpy as np

from .errors import InvalidParameterError
from .normality import block_offset_plan
from .ranks import design_point_count, oversampled, sample_points
from .theta import truncation_plan
from .torus import RiemannMatrix, descent_data, polarization_type

__all__ = ["PreciseBlockReport", "block_rho_ranks_mp", "rho2_rank_mp"]

# digits of headroom between the requested tail bound and the working dps
_TAIL_GUARD = 5

_TAG_MP_POINTS = 50


@dataclass(frozen=True)
class PreciseBlockReport:
    """Rank of one block with its high-precision spectral certificate."""

    rank: int
    log10_margin: float
    log10_singular_values: tuple[float, ...]
    verdict_stable: bool


def _mp_fraction(x: Fraction):
    return mp.mpf(x.numerator) / x.denominator


def _svd_values(rows: list[list]) -> list:
    """Singular values (descending) of a list-of-rows complex matrix."""
    a = mp.matrix(rows)
    if a.rows < a.cols:
        a = a.T
    return list(mp.svd_c(a, compute_uv=False))


def _rank_of(values: list, rel_tol) -> int:
    if not values or values[0] == 0:
        return 0
    cut = rel_tol * values[0]
    return sum(1 for s in values if s > cut)


def block_rho_ranks_mp(
    divisors,
    tau: RiemannMatrix,
    dps: int = 60,
    seed: int = 0,
    rel_tol: float | None = None,
    base_points: int | None = None,
) -> dict[tuple[int, ...], PreciseBlockReport]:
    """Per-block degree-2 ranks certified at dps working digits.

    rel_tol defaults to 10^(15 - dps), which leaves the roundoff floor a
    comfortable distance below any direction the chosen precision can
    represent. Stability compares the rank against a column subset, as in
    the double precision path.
    """
    ptype = polarization_type(divisors)
    if dps < 20:
        raise InvalidParameterError("dps below 20 is not a certification")
    if rel_tol is None:
        rel_tol = 10.0 ** (15 - dps)
    descent = descent_data(ptype, tau)
    g = ptype.g
    offsets, pairs = block_offset_plan(descent)
    if base_points is None:
        base_points = design_point_count(2**g)
    points = sample_points(g, oversampled(base_points), seed, tag=_TAG_MP_POINTS)
    n_points = len(points)

    y = tau.tau.imag
    z_bound = max(
        float(np.linalg.norm(y @ np.array([float(x) for x in off.p])))
        for off in offsets.values()
    )
    plan = truncation_plan(tau, 1, z_bound, 10.0 ** (-(dps + _TAIL_GUARD)))
    pad = 1.0 + max(
        float(max(abs(x) for x in off.p)) for off in offsets.values()
    )
    radius = plan.radius + pad * math.sqrt(g)

    side = np.arange(math.ceil(-radius), math.floor(radius) + 1)
    grids = np.meshgrid(*([side] * g), indexing="ij")
    ns = np.stack([a.reshape(-1) for a in grids], axis=1)
    ns = ns[(ns * ns).sum(axis=1) <= radius * radius]

    with mp.workdps(dps):
        tau_mp = [
            [mp.mpc(float(tau.tau[i, j].real), float(tau.tau[i, j].imag)) for j in range(g)]
            for i in range(g)
        ]
        # per lattice vector: n.tau n and tau n, reused by every offset
        quad0 = []
        taun = []
        for n in ns:
            nv = [mp.mpf(int(x)) for x in n]
            tn = [sum(tau_mp[i][j] * nv[j] for j in range(g)) for i in range(g)]
            quad0.append(sum(nv[i] * tn[i] for i in range(g)))
            taun.append(tn)

        # unimodular point factors exp(2 pi i n.z), shared by every offset
        zs = [[_mp_fraction(q) for q in pt.q] for pt in points]
        point_cols = []
        for z in zs:
            point_cols.append(
                [
                    mp.expjpi(2 * sum(int(n[i]) * z[i] for i in range(g)))
                    for n in ns
                ]
            )

        values: dict = {}
        for key, off in offsets.items():
            nu = [_mp_fraction(x) for x in off.p]
            weights = [
                mp.expjpi(quad0[i] + 2 * sum(taun[i][j] * nu[j] for j in range(g)))
                for i in range(len(ns))
            ]
            values[key] = [mp.fdot(weights, col) for col in point_cols]

        reports: dict[tuple[int, ...], PreciseBlockReport] = {}
        for c_vec, row_keys in pairs.items():
            rows = [
                [values[left][j] * values[right][j] for j in range(n_points)]
                for left, right in row_keys
            ]
            sv = _svd_values(rows)
            rank = _rank_of(sv, rel_tol)
            sub = _svd_values([row[:base_points] for row in rows])
            stable = _rank_of(sub, rel_tol) == rank
            if rank == 0 or rank >= len(sv) or sv[rank] == 0:
                margin = math.inf
            else:
                margin = float(mp.log10(sv[rank - 1] / sv[rank]))
            logs = tuple(
                float(mp.log10(s / sv[0])) if s > 0 else -math.inf for s in sv
            )
            reports[c_vec] = PreciseBlockReport(
                rank=rank,
                log10_margin=margin,
                log10_singular_values=logs,
                verdict_stable=stable,
            )
    return reports


def rho2_rank_mp(divisors, tau: RiemannMatrix, dps: int = 60, seed: int = 0) -> int:
    """Degree-2 multiplication rank as the exact sum of certified block ranks."""
    reports = block_rho_ranks_mp(divisors, tau, dps=dps, seed=seed)
    if not all(r.verdict_stable for r in reports.values()):
        raise InvalidParameterError(
            "a block rank was unstable at the requested precision; raise dps"
        )
    return sum(r.rank for r in reports.values())
