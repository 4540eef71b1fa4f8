import itertools

import numpy as np
import pytest

from conftest import (
    F,
    HAMMING_D,
    X,
    XT,
    XTPROJ_F,
    XOR_F,
    Y,
    YPROJ_F,
    binary_cascade_model,
    bsc_rows,
    random_binary_model,
)
from sfcomp.models import DistortionSpec, FunctionSpec, MultiArm, MultiModel
from sfcomp.multifunction import (
    ChainViolation,
    MultiAuxSystem,
    build_multi_joint,
    eval_inner_mf,
    eval_outer_mf,
    factorizes_per_arm,
    multi_chain_report,
    single_arm_tuple,
)
from sfcomp.probability import (
    Alphabet,
    CondDist,
    Dist,
    JointDist,
    bsc,
    constant_channel,
    identity_channel,
    uniform,
)
from sfcomp.regions import (
    AuxPair,
    AuxSystem,
    ReconstructionFn,
    aux_mixture_joint,
    constant_aux,
    eval_lossless_corner,
    eval_lossy_corner,
    identity_aux,
    optimal_g,
    singleton_alphabet,
    v_equals_u_aux,
)


def single_arm_model(m, f=XOR_F, d=HAMMING_D):
    return MultiModel(m.p_x, (MultiArm(m.p_xt_given_x, m.p_yz_given_x, f, d),))


def two_arm_model(m1, m2, f1=XOR_F, f2=XOR_F):
    return MultiModel(m1.p_x, (
        MultiArm(m1.p_xt_given_x, m1.p_yz_given_x, f1, HAMMING_D),
        MultiArm(m2.p_xt_given_x, m2.p_yz_given_x, f2, HAMMING_D),
    ))


def multi_from_aux(aux_list, p_q=None):
    p_q = p_q or uniform(singleton_alphabet("q"))
    return MultiAuxSystem(p_q, tuple(tuple(a.per_q) for a in aux_list))


def random_aux_pair(rng, u_size=2, v_size=2):
    from sfcomp.regions import _alphabet_of_size
    u_alpha = _alphabet_of_size("u", u_size)
    v_alpha = _alphabet_of_size("v", v_size)
    u_rows = np.stack([rng.dirichlet((1.5,) * u_size) for _ in range(2)])
    v_rows = np.stack([rng.dirichlet((1.5,) * v_size) for _ in range(u_size)])
    return AuxPair(CondDist(XT, u_alpha, u_rows), CondDist(u_alpha, v_alpha, v_rows))


class TestBuildMultiJoint:
    def test_single_arm_matches_single_function_joint(self, cascade_model):
        aux = identity_aux(cascade_model)
        single = aux_mixture_joint(cascade_model, aux)
        multi = build_multi_joint(single_arm_model(cascade_model),
                                  multi_from_aux([aux]))
        assert multi.names == ("q", "v1", "u1", "xtilde1", "x", "y1", "z1")
        assert np.array_equal(multi.table, single.table)

    def test_identical_arms_swap_symmetric(self, cascade_model):
        mm = two_arm_model(cascade_model, cascade_model)
        aux = multi_from_aux([identity_aux(cascade_model)] * 2)
        j = build_multi_joint(mm, aux)
        swapped = j.reorder(("q", "v2", "v1", "u2", "u1", "xtilde2", "xtilde1",
                             "x", "y2", "y1", "z2", "z1"))
        assert np.allclose(j.table, swapped.table, atol=1e-15)

    def test_two_arm_observation_agreement(self, cascade_model):
        # oracle: hand enumeration over the shared source letter
        mm = two_arm_model(cascade_model, cascade_model)
        aux = multi_from_aux([identity_aux(cascade_model)] * 2)
        j = build_multi_joint(mm, aux).marginal(("xtilde1", "xtilde2"))
        agree = float(j.table[0, 0] + j.table[1, 1])
        assert agree == pytest.approx(0.94**2 + 0.06**2, abs=1e-12)


class TestInnerBound:
    def test_j1_reduces_to_single_function_lossless(self):
        rng = np.random.default_rng(21)
        for _ in range(6):
            m = random_binary_model(rng)
            aux = v_equals_u_aux(identity_channel(XT, "u"))
            single = eval_lossless_corner(m, aux, XOR_F)
            multi = eval_inner_mf(single_arm_model(m), multi_from_aux([aux]), "lossless")
            got = single_arm_tuple(multi)
            for a, b in zip(single.coords().values(), got.coords().values()):
                assert a == pytest.approx(b, abs=1e-12)

    def test_j1_reduces_to_single_function_lossy(self):
        rng = np.random.default_rng(22)
        for _ in range(6):
            m = random_binary_model(rng)
            pair = random_aux_pair(rng)
            aux = AuxSystem(uniform(singleton_alphabet("q")), (pair,))
            g = optimal_g(m, aux, XOR_F, HAMMING_D)
            single = eval_lossy_corner(m, aux, XOR_F, g, HAMMING_D)
            multi = eval_inner_mf(single_arm_model(m), multi_from_aux([aux]),
                                  "lossy", (g,))
            got = single_arm_tuple(multi)
            for a, b in zip(single.coords().values(), got.coords().values()):
                assert a == pytest.approx(b, abs=1e-12)

    def test_constant_arms_zero_for_y_functions(self, cascade_model):
        mm = two_arm_model(cascade_model, cascade_model, YPROJ_F, YPROJ_F)
        aux = multi_from_aux([constant_aux(cascade_model)] * 2)
        rates = eval_inner_mf(mm, aux, "lossless")
        assert rates.r_s == pytest.approx(0.0, abs=1e-12)
        assert rates.r_eve == pytest.approx(0.0, abs=1e-12)
        assert rates.sum_w == pytest.approx(0.0, abs=1e-12)
        for v in rates.r_w + rates.r_dec:
            assert v == pytest.approx(0.0, abs=1e-12)

    def test_sum_storage_constraint_on_identical_arms(self, cascade_model):
        # arms correlate through the shared source, so the joint storage floor
        # sits between the largest per-arm floor and the per-arm sum
        mm = two_arm_model(cascade_model, cascade_model)
        aux = multi_from_aux([identity_aux(cascade_model)] * 2)
        rates = eval_inner_mf(mm, aux, "lossless")
        assert rates.sum_w <= sum(rates.r_w) + 1e-9
        assert rates.sum_w >= max(rates.r_w) - 1e-9

    def test_sum_storage_tight_for_independent_arms(self, cascade_model):
        # a deterministic source decouples the arms: the sum constraint is tight
        det = Dist(X, np.array([1.0, 0.0]))
        m = binary_cascade_model()
        mm = MultiModel(det, (
            MultiArm(m.p_xt_given_x, m.p_yz_given_x, XOR_F, HAMMING_D),
            MultiArm(m.p_xt_given_x, m.p_yz_given_x, XOR_F, HAMMING_D),
        ))
        aux = multi_from_aux([identity_aux(m)] * 2)
        rates = eval_inner_mf(mm, aux, "lossless")
        assert rates.sum_w == pytest.approx(sum(rates.r_w), abs=1e-12)

    def test_arm_permutation_equivariance(self, cascade_model):
        other = binary_cascade_model(p=0.12, q_dec=0.2, q_eve=0.3)
        mm12 = two_arm_model(cascade_model, other)
        mm21 = two_arm_model(other, cascade_model)
        a1, a2 = identity_aux(cascade_model), identity_aux(other)
        r12 = eval_inner_mf(mm12, multi_from_aux([a1, a2]), "lossless")
        r21 = eval_inner_mf(mm21, multi_from_aux([a2, a1]), "lossless")
        assert r12.r_s == pytest.approx(r21.r_s, abs=1e-12)
        assert r12.r_eve == pytest.approx(r21.r_eve, abs=1e-12)
        assert r12.sum_w == pytest.approx(r21.sum_w, abs=1e-12)
        assert r12.r_w == pytest.approx(tuple(reversed(r21.r_w)), abs=1e-12)
        assert r12.r_dec == pytest.approx(tuple(reversed(r21.r_dec)), abs=1e-12)


def shared_flip_joint(m1, m2):
    """Non-product coupling: each arm's auxiliary is its observation xored
    with one shared fair coin; V constant, no time sharing. Every per-arm
    chain holds, but arms are coupled beyond the product form."""
    mm = two_arm_model(m1, m2, YPROJ_F, YPROJ_F)
    q = singleton_alphabet("q")
    v1, v2 = singleton_alphabet("v1"), singleton_alphabet("v2")
    u1, u2 = XT.renamed("u1"), XT.renamed("u2")
    xt1, xt2 = XT.renamed("xtilde1"), XT.renamed("xtilde2")
    y1, y2 = XT.renamed("y1"), XT.renamed("y2")
    z1, z2 = XT.renamed("z1"), XT.renamed("z2")
    axes = (q, v1, v2, u1, u2, xt1, xt2, X, y1, y2, z1, z2)
    table = np.zeros(tuple(a.size for a in axes))
    p1 = m1.p_yz_given_x.rows.reshape(2, 2, 2)
    p2 = m2.p_yz_given_x.rows.reshape(2, 2, 2)
    for x in range(2):
        px = float(m1.p_x.probs[x])
        for a1 in range(2):
            for a2 in range(2):
                pxt = (float(m1.p_xt_given_x.rows[x, a1])
                       * float(m2.p_xt_given_x.rows[x, a2]))
                for s in range(2):
                    pu = 0.5
                    b1, b2 = a1 ^ s, a2 ^ s
                    for yy1 in range(2):
                        for zz1 in range(2):
                            for yy2 in range(2):
                                for zz2 in range(2):
                                    table[0, 0, 0, b1, b2, a1, a2, x,
                                          yy1, yy2, zz1, zz2] += (
                                        px * pxt * pu
                                        * p1[x, yy1, zz1] * p2[x, yy2, zz2])
    return mm, JointDist(axes, table)


class TestOuterBound:
    def test_product_system_passes_and_matches_inner(self, cascade_model):
        mm = two_arm_model(cascade_model, cascade_model)
        aux = multi_from_aux([identity_aux(cascade_model)] * 2)
        inner = eval_inner_mf(mm, aux, "lossless")
        outer, report = eval_outer_mf(mm, aux, "lossless")
        assert all(c.ok for c in report)
        assert outer.r_s == pytest.approx(inner.r_s, abs=1e-12)
        assert outer.sum_w == pytest.approx(inner.sum_w, abs=1e-12)
        assert outer.r_w == pytest.approx(inner.r_w, abs=1e-12)

    def test_j1_outer_equals_inner(self, cascade_model):
        mm = single_arm_model(cascade_model)
        aux = multi_from_aux([identity_aux(cascade_model)])
        inner = eval_inner_mf(mm, aux, "lossless")
        outer, _ = eval_outer_mf(mm, aux, "lossless")
        assert outer == inner

    def test_coupled_joint_accepted_by_outer_rejected_by_inner(self, cascade_model):
        other = binary_cascade_model(p=0.1, q_dec=0.2, q_eve=0.3)
        mm, joint = shared_flip_joint(cascade_model, other)
        report = multi_chain_report(mm, joint)
        assert all(c.ok for c in report)
        assert not factorizes_per_arm(mm, joint)
        outer, _ = eval_outer_mf(mm, joint, "lossless")
        # the coupled auxiliaries reveal the xor of the two observations
        assert outer.r_s > 0.1
        # per-arm marginals are pure noise, so the product-form corner is free
        assert outer.r_w == pytest.approx((0.0, 0.0), abs=1e-9)

    def test_product_joints_factorize(self, cascade_model):
        mm = two_arm_model(cascade_model, cascade_model)
        aux = multi_from_aux([identity_aux(cascade_model)] * 2)
        assert factorizes_per_arm(mm, build_multi_joint(mm, aux))

    def test_chain_violation_is_named(self, cascade_model):
        # u1 copying the source itself breaks (q,v1,u1) -- xtilde1 -- x
        mm, joint = shared_flip_joint(cascade_model, cascade_model)
        names = joint.names
        table = joint.table.copy()
        # rebuild with u1 := x (deterministically), keeping the axis shapes
        new = np.zeros_like(table)
        for idx in np.ndindex(table.shape):
            jdx = list(idx)
            jdx[names.index("u1")] = idx[names.index("x")]
            new[tuple(jdx)] += table[idx]
        bad = JointDist(joint.axes, new)
        with pytest.raises(ChainViolation, match="xtilde1 -- x"):
            eval_outer_mf(mm, bad, "lossless")
