"""Multiplication ranks, blocks, span checks, probes and the full verdict."""

from __future__ import annotations

import math
from fractions import Fraction

import pytest

from thetanorm import (
    InvalidParameterError,
    MultiplicationMapSpec,
    PolarizationType,
    SectionProduct,
    ThetaSection,
    TorusPoint,
    block_rho_ranks,
    divisor_subgroup_probe,
    full_check,
    kummer_span_check,
    quadric_dim,
    rho_rank,
    sample_tau,
    subgroup_span_check,
    subgroup_span_report,
    translate_section,
    zero_point,
)
from thetanorm.normality import Tolerances, index_of_c
from thetanorm.precise import block_rho_ranks_mp


def cyclic(g, generator: TorusPoint, order: int):
    return [generator.scaled(k).reduce() for k in range(order)]


def q_generator(g, num, den, divisor_index=0):
    p = (Fraction(0),) * g
    q = [Fraction(0)] * g
    q[divisor_index] = Fraction(num, den)
    return TorusPoint(p, tuple(q))


class TestRhoRank:
    def test_degree_two_forced_deficit(self):
        tau = sample_tau(1, 1)
        rep = rho_rank(MultiplicationMapSpec(PolarizationType((2,)), tau, 2))
        assert rep.rank == 3  # Sym^2 of dim 2 cannot reach 4

    def test_degree_three_surjective(self):
        tau = sample_tau(1, 2)
        rep = rho_rank(MultiplicationMapSpec(PolarizationType((3,)), tau, 2))
        assert rep.rank == 6
        assert rep.verdict_stable and rep.margin > 10

    def test_r_must_be_at_least_two(self):
        tau = sample_tau(1, 1)
        with pytest.raises(InvalidParameterError):
            MultiplicationMapSpec(PolarizationType((3,)), tau, 1)

    def test_translation_count_checked(self):
        tau = sample_tau(1, 1)
        with pytest.raises(InvalidParameterError):
            MultiplicationMapSpec(
                PolarizationType((3,)), tau, 2, translations=(zero_point(1),)
            )

    def test_translated_map_full_rank(self):
        # products of the basis with a generically translated copy
        tau = sample_tau(1, 3)
        x = TorusPoint((Fraction(3, 17),), (Fraction(5, 13),))
        spec = MultiplicationMapSpec(
            PolarizationType((3,)), tau, 2, translations=(zero_point(1), x)
        )
        rep = rho_rank(spec, seed=3)
        assert rep.rank == 6  # same target dimension as the plain map

    def test_expected_rank_property(self):
        tau = sample_tau(2, 1)
        spec = MultiplicationMapSpec(PolarizationType((1, 9)), tau, 3)
        assert spec.expected_rank == 81


class TestQuadricDim:
    def test_elliptic_quartic_pencil(self):
        tau = sample_tau(1, 4)
        rep = rho_rank(MultiplicationMapSpec(PolarizationType((4,)), tau, 2))
        assert rep.rank == 8
        assert quadric_dim(4, rep) == 2  # 10 - 8

    def test_nonnormal_case_has_larger_kernel(self):
        tau = sample_tau(1, 1)
        rep = rho_rank(MultiplicationMapSpec(PolarizationType((2,)), tau, 2))
        # dim Sym^2 - rank = 3 - 3 = 0 quadrics, but the deficit shows in
        # rank < h0(L^2); kernel dimension is still nonnegative
        assert quadric_dim(2, rep) == 0
        assert rep.rank < 4

    def test_requires_stable_rank(self):
        from thetanorm.ranks import RankReport
        from thetanorm import InconclusiveRankError

        fake = RankReport(
            rank=3,
            singular_values=(1.0,),
            margin=math.inf,
            rel_tol=1e-14,
            sample_count=5,
            verdict_stable=False,
        )
        with pytest.raises(InconclusiveRankError):
            quadric_dim(3, fake)


class TestBlocks:
    def test_g1_degree3_blocks(self):
        tau = sample_tau(1, 3)
        blocks = block_rho_ranks((3,), tau)
        assert set(blocks) == {(0,), (1,), (2,)}
        assert all(rep.rank == 2 for rep in blocks.values())

    def test_g1_degree2_paired_sections(self):
        # in the sigma block with 2 sigma = 0 != sigma the two rows coincide,
        # so that block cannot exceed rank 1; out of the span hypothesis
        tau = sample_tau(1, 3)
        blocks = block_rho_ranks((2,), tau)
        assert blocks[(0,)].rank == 2
        assert blocks[(1,)].rank == 1

    def test_block_additivity_small(self):
        tau = sample_tau(1, 5)
        for d in (2, 3, 4):
            blocks = block_rho_ranks((d,), tau, seed=5)
            rho2 = rho_rank(MultiplicationMapSpec(PolarizationType((d,)), tau, 2), seed=5)
            assert sum(rep.rank for rep in blocks.values()) == rho2.rank

    def test_index_of_c(self):
        ptype = PolarizationType((2, 4))
        assert index_of_c(ptype, (0, 0)) == 0
        assert index_of_c(ptype, (0, 3)) == 3
        assert index_of_c(ptype, (1, 0)) == 4
        assert index_of_c(ptype, (1, 3)) == 7


class TestKummerSpan:
    def test_degree4_sigma0(self):
        tau = sample_tau(1, 7)
        assert kummer_span_check((4,), tau, (0,)) is True

    def test_sigma_as_point(self):
        tau = sample_tau(1, 7)
        sigma = TorusPoint((Fraction(1, 4),), (Fraction(0),))
        assert kummer_span_check((4,), tau, sigma) is True

    def test_sigma_not_in_dual_subgroup(self):
        tau = sample_tau(1, 7)
        bad = TorusPoint((Fraction(1, 5),), (Fraction(0),))
        with pytest.raises(InvalidParameterError):
            kummer_span_check((4,), tau, bad)


class TestSubgroupSpan:
    def test_level2_order3_spans(self):
        tau = sample_tau(1, 11)
        group = cyclic(1, q_generator(1, 1, 3), 3)
        assert subgroup_span_check((1,), tau, 2, group) is True

    def test_trivial_subgroup_cannot_span(self):
        tau = sample_tau(1, 11)
        assert subgroup_span_check((1,), tau, 2, [zero_point(1)]) is False

    def test_degree5_with_7_torsion(self):
        tau = sample_tau(1, 12)
        group = cyclic(1, q_generator(1, 1, 7), 7)
        result = subgroup_span_report((5,), tau, 1, group)
        assert result.spanning and result.report.rank == 5
        assert result.in_hypothesis  # 7 > 5

    def test_out_of_hypothesis_flag(self):
        tau = sample_tau(1, 11)
        group = cyclic(1, q_generator(1, 1, 2), 2)
        result = subgroup_span_report((1,), tau, 2, group)
        assert not result.in_hypothesis  # 2 > 2 fails

    def test_non_subgroup_rejected(self):
        tau = sample_tau(1, 11)
        points = [q_generator(1, 1, 3), q_generator(1, 1, 5)]
        with pytest.raises(InvalidParameterError):
            subgroup_span_check((1,), tau, 2, points)


class TestDivisorProbe:
    def test_generic_section_misses_torsion(self):
        tau = sample_tau(1, 13)
        section = ThetaSection(1, (1,), PolarizationType((3,)), tau)
        shifted = translate_section(section, TorusPoint((0.113,), (0.791,)))
        group = cyclic(1, q_generator(1, 1, 5), 5)
        result = divisor_subgroup_probe(shifted, group, 1e-6)
        assert result.count_on_divisor < 5
        assert result.bound_ok

    def test_trivial_group_nonvanishing(self):
        tau = sample_tau(1, 13)
        section = ThetaSection(1, (0,), PolarizationType((3,)), tau)
        result = divisor_subgroup_probe(section, [zero_point(1)], 1e-6)
        assert result.count_on_divisor == 0
        assert result.bound_ok

    def test_equality_case_two_torsion_product(self):
        # product of theta translated by each two-torsion point vanishes
        # exactly on that order-4 subgroup; |G| = 4 = h0 * g! is allowed
        tau = sample_tau(1, 14)
        principal = PolarizationType((1,))
        theta = ThetaSection(1, (0,), principal, tau)
        half = Fraction(1, 2)
        t2 = [
            TorusPoint((Fraction(0),), (Fraction(0),)),
            TorusPoint((half,), (Fraction(0),)),
            TorusPoint((Fraction(0),), (half,)),
            TorusPoint((half,), (half,)),
        ]
        product = SectionProduct(tuple(translate_section(theta, t) for t in t2))
        result = divisor_subgroup_probe(product, t2, 1e-6)
        assert result.count_on_divisor == 4
        assert result.group_order == 4
        assert result.containment_bound == 4
        assert result.bound_ok

    def test_zero_tol_validated(self):
        tau = sample_tau(1, 13)
        section = ThetaSection(1, (0,), PolarizationType((3,)), tau)
        with pytest.raises(InvalidParameterError):
            divisor_subgroup_probe(section, [zero_point(1)], 2.0)


class TestFullCheck:
    def test_degree2_sharp_failure(self):
        tau = sample_tau(1, 1)
        verdict = full_check(1, (2,), tau, r_list=(2,), seed=1)
        assert verdict.bound_holds is False  # 2 > 2 fails strictly
        assert verdict.two_normal is False
        assert verdict.rho_reports[2].rank == 3
        assert verdict.dim_I2 == 0

    def test_type_1_7_exploratory(self):
        # bound fails (7 < 8) yet the degree-2 map is surjective
        tau = sample_tau(2, 2)
        verdict = full_check(2, (1, 7), tau, r_list=(2,), seed=2)
        assert verdict.bound_holds is False
        assert verdict.two_normal is True
        assert verdict.rho_reports[2].rank == 28

    def test_r_list_validation(self):
        tau = sample_tau(1, 1)
        with pytest.raises(InvalidParameterError):
            full_check(1, (3,), tau, r_list=(2, 5), seed=1)

    def test_verdict_invariant_under_reseeding(self):
        tau = sample_tau(1, 9)
        a = full_check(1, (3,), tau, r_list=(2, 3), seed=1)
        b = full_check(1, (3,), tau, r_list=(2, 3), seed=2)
        assert a.two_normal == b.two_normal
        assert a.r_normal == b.r_normal
        assert a.dim_I2 == b.dim_I2
        assert [r.rank for r in a.block_ranks.values()] == [
            r.rank for r in b.block_ranks.values()
        ]

    def test_tolerances_validated(self):
        with pytest.raises(InvalidParameterError):
            Tolerances(theta_epsilon=-1.0)


class TestPreciseBlocks:
    def test_matches_float_path_on_small_case(self):
        tau = sample_tau(1, 3)
        float_blocks = block_rho_ranks((3,), tau, seed=3)
        mp_blocks = block_rho_ranks_mp((3,), tau, dps=30, seed=3)
        for key, rep in mp_blocks.items():
            assert rep.rank == float_blocks[key].rank
            assert rep.verdict_stable
            assert rep.log10_margin > 5

    def test_dps_validation(self):
        tau = sample_tau(1, 3)
        with pytest.raises(InvalidParameterError):
            block_rho_ranks_mp((3,), tau, dps=10)
