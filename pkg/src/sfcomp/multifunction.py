"""Multi-function rate bounds for several encoder-decoder pairs on one source.

The inner bound evaluates rate tuples on the product-form joint in which,
given the source letter and the time-sharing label, arms are independent and
each arm factors source -> observation -> U -> V. The outer bound evaluates
the same expressions on any supplied joint whose arms each satisfy the
per-arm Markov chain; couplings across arms beyond the product form are
allowed there, and that relaxation is the only difference between the two.

Axis naming convention for a J-arm joint:
(q, v1..vJ, u1..uJ, xtilde1..xtildeJ, x, y1..yJ, z1..zJ).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import (
    ADMISSIBILITY_TOL,
    MultiModel,
    admissibility_gap,
    build_joint,
)
from .probability import (
    CondDist,
    Dist,
    JointDist,
    compose,
    cond_entropy,
    cond_mutual_info,
    mixture,
    product_alphabet,
    push_function,
)
from .regions import (
    AuxPair,
    AuxSystem,
    CardinalityError,
    InadmissibleAuxiliary,
    RateTuple,
    ReconstructionFn,
    RegionError,
    _clamp_rate,
    _corner_rates,
    min_zero,
)

CHAIN_TOL = 1e-9
MODEL_MATCH_TOL = 1e-9


class ChainViolation(RegionError):
    """A required per-arm Markov condition fails on the supplied joint."""


@dataclass(frozen=True)
class MultiAuxSystem:
    """Per-arm, per-branch auxiliary channel pairs under one time-sharing weight."""

    p_q: Dist
    arms: tuple[tuple[AuxPair, ...], ...]  # arms[j][q]

    def __post_init__(self) -> None:
        object.__setattr__(self, "arms", tuple(tuple(a) for a in self.arms))
        nq = self.p_q.alphabet.size
        if not self.arms:
            raise RegionError("a multi-function auxiliary system needs at least one arm")
        for j, pairs in enumerate(self.arms):
            if len(pairs) != nq:
                raise RegionError(f"arm {j} must supply one channel pair per weight symbol")
            for pair in pairs[1:]:
                if (pair.u_alphabet != pairs[0].u_alphabet
                        or pair.v_alphabet != pairs[0].v_alphabet):
                    raise RegionError(f"arm {j} channel pairs must share alphabets")

    @property
    def j(self) -> int:
        return len(self.arms)

    def arm_system(self, j: int) -> AuxSystem:
        return AuxSystem(self.p_q, self.arms[j])

    def validate_cardinalities(self, m: MultiModel, mode: str) -> None:
        slack = {"lossless": 5, "lossy": 6}.get(mode)
        if slack is None:
            raise RegionError(f"mode must be 'lossless' or 'lossy', got {mode!r}")
        if self.p_q.alphabet.size > 2:
            raise CardinalityError("time-sharing alphabet is limited to 2 symbols")
        for j, pairs in enumerate(self.arms):
            xt = m.arms[j].p_xt_given_x.output.size
            if pairs[0].v_alphabet.size > xt + slack:
                raise CardinalityError(f"arm {j}: |V| exceeds bound {xt + slack}")
            if pairs[0].u_alphabet.size > (xt + slack) ** 2:
                raise CardinalityError(f"arm {j}: |U| exceeds bound {(xt + slack) ** 2}")


@dataclass(frozen=True)
class MultiRateTuple:
    """Joint secrecy/eavesdropper coordinates plus per-arm storage and decoder privacy."""

    r_s: float
    r_w: tuple[float, ...]
    sum_w: float
    r_dec: tuple[float, ...]
    r_eve: float
    d: tuple[float, ...] | None = None


def _axis_names(j: int) -> dict[str, tuple[str, ...]]:
    arms = range(1, j + 1)
    return {
        "v": tuple(f"v{k}" for k in arms),
        "u": tuple(f"u{k}" for k in arms),
        "xt": tuple(f"xtilde{k}" for k in arms),
        "y": tuple(f"y{k}" for k in arms),
        "z": tuple(f"z{k}" for k in arms),
    }


def build_multi_joint(m: MultiModel, a: MultiAuxSystem) -> JointDist:
    """Product-form joint over (q, v_*, u_*, xtilde_*, x, y_*, z_*)."""
    if a.j != m.j:
        raise RegionError(f"auxiliary system has {a.j} arms, model has {m.j}")
    xn = m.p_x.alphabet.name
    names = _axis_names(m.j)
    components = []
    for qi in range(a.p_q.alphabet.size):
        steps = []
        for j, arm in enumerate(m.arms):
            pair = a.arms[j][qi]
            xt_j = arm.p_xt_given_x.output.renamed(names["xt"][j])
            p_xt = CondDist(arm.p_xt_given_x.input, xt_j, arm.p_xt_given_x.rows)
            u_j = pair.u_alphabet.renamed(names["u"][j])
            p_u = CondDist(xt_j, u_j, pair.p_u_given_xt.rows)
            v_j = pair.v_alphabet.renamed(names["v"][j])
            p_v = CondDist(u_j, v_j, pair.p_v_given_u.rows)
            steps.extend([(p_xt, xn), (p_u, xt_j.name), (p_v, u_j.name)])
        for j, arm in enumerate(m.arms):
            out = arm.p_yz_given_x.output
            yz_j = product_alphabet(f"yz{j + 1}",
                                    out.parts[0].renamed(names["y"][j]),
                                    out.parts[1].renamed(names["z"][j]))
            steps.append((CondDist(arm.p_yz_given_x.input, yz_j, arm.p_yz_given_x.rows), xn))
        joint = compose(m.p_x, *steps)
        for j in range(m.j):
            joint = joint.split(f"yz{j + 1}")
        order = names["v"] + names["u"] + names["xt"] + (xn,) + names["y"] + names["z"]
        components.append(joint.reorder(order))
    return mixture(a.p_q, components)


def _multi_rates(joint: JointDist, j: int, q_name: str = "q") -> MultiRateTuple:
    names = _axis_names(j)
    u_all, v_all = names["u"], names["v"]
    xt_all, y_all, z_all = names["xt"], names["y"], names["z"]
    uq = u_all + (q_name,)
    offset = min_zero(cond_mutual_info(joint, u_all, z_all, v_all + (q_name,))
                      - cond_mutual_info(joint, u_all, y_all, v_all + (q_name,)))
    r_w = tuple(_clamp_rate(cond_mutual_info(joint, (u_all[k], q_name), xt_all[k], y_all[k]))
                for k in range(j))
    r_dec = tuple(_clamp_rate(cond_mutual_info(joint, (u_all[k], q_name), "x", y_all[k]))
                  for k in range(j))
    return MultiRateTuple(
        r_s=_clamp_rate(cond_mutual_info(joint, uq, xt_all, z_all) + offset),
        r_w=r_w,
        sum_w=_clamp_rate(cond_mutual_info(joint, uq, xt_all, y_all)),
        r_dec=r_dec,
        r_eve=_clamp_rate(cond_mutual_info(joint, uq, "x", z_all) + offset),
    )


def _arm_distortions(m: MultiModel, joint: JointDist,
                     g_list: tuple[ReconstructionFn, ...]) -> tuple[float, ...]:
    if len(g_list) != m.j:
        raise RegionError("lossy evaluation needs one reconstruction per arm")
    names = _axis_names(m.j)
    out = []
    for j, arm in enumerate(m.arms):
        u, xt, y = names["u"][j], names["xt"][j], names["y"][j]
        sub = joint.marginal((u, xt, y))
        val = arm.d.table[arm.f.table[None, :, :], g_list[j].table[:, None, :]]
        out.append(float(np.sum(sub.table * val)))
    return tuple(out)


def eval_inner_mf(m: MultiModel, a: MultiAuxSystem, mode: str,
                  g_list: tuple[ReconstructionFn, ...] | None = None) -> MultiRateTuple:
    """Inner-bound corner on the product-form joint.

    Lossless mode requires every arm's auxiliary channel to be admissible for
    that arm's function; lossy mode instead takes per-arm reconstructions and
    reports expected distortions.
    """
    a.validate_cardinalities(m, mode)
    if mode == "lossless":
        for j in range(m.j):
            arm_model = m.arm_model(j)
            for qi, pair in enumerate(a.arms[j]):
                gap = admissibility_gap(arm_model, pair.p_u_given_xt, m.arms[j].f)
                if gap > ADMISSIBILITY_TOL:
                    raise InadmissibleAuxiliary(
                        f"arm {j}, weight symbol {qi}: function undetermined by "
                        f"(U, Y), residual {gap:.3g} bits")
    joint = build_multi_joint(m, a)
    rates = _multi_rates(joint, m.j, a.p_q.alphabet.name)
    if mode == "lossy":
        if g_list is None:
            raise RegionError("lossy mode needs reconstruction functions")
        return MultiRateTuple(rates.r_s, rates.r_w, rates.sum_w, rates.r_dec,
                              rates.r_eve, d=_arm_distortions(m, joint, tuple(g_list)))
    return rates


@dataclass(frozen=True)
class ChainCheck:
    name: str
    value: float
    ok: bool


def multi_chain_report(m: MultiModel, joint: JointDist,
                       tol: float = CHAIN_TOL) -> tuple[ChainCheck, ...]:
    """Verify each arm's Markov chain and its model marginal on a supplied joint."""
    j = m.j
    names = _axis_names(j)
    checks: list[ChainCheck] = []
    for k in range(j):
        v, u, xt = names["v"][k], names["u"][k], names["xt"][k]
        y, z = names["y"][k], names["z"][k]
        conds = [
            (f"arm{k + 1}: (q,{v}) -- {u} -- {xt}",
             cond_mutual_info(joint, ("q", v), xt, u)),
            (f"arm{k + 1}: (q,{v},{u}) -- {xt} -- x",
             cond_mutual_info(joint, ("q", v, u), "x", xt)),
            (f"arm{k + 1}: (q,{v},{u},{xt}) -- x -- ({y},{z})",
             cond_mutual_info(joint, ("q", v, u, xt), (y, z), "x")),
        ]
        for name, value in conds:
            checks.append(ChainCheck(name, float(value), bool(value <= tol)))
        model_marg = build_joint(m.arm_model(k))
        got = joint.marginal((xt, "x", y, z)).table
        err = float(np.max(np.abs(got - model_marg.table)))
        checks.append(ChainCheck(f"arm{k + 1}: model marginal reproduced", err,
                                 err <= MODEL_MATCH_TOL))
    return tuple(checks)


def factorizes_per_arm(m: MultiModel, joint: JointDist,
                       tol: float = CHAIN_TOL) -> bool:
    """True when arms are conditionally independent given (q, x), as the
    product-form inner bound requires."""
    names = _axis_names(m.j)
    if m.j == 1:
        return True
    for k in range(m.j):
        mine = (names["v"][k], names["u"][k], names["xt"][k], names["y"][k], names["z"][k])
        others = tuple(n for grp in ("v", "u", "xt", "y", "z")
                       for i, n in enumerate(names[grp]) if i != k)
        if cond_mutual_info(joint, mine, others, ("q", "x")) > tol:
            return False
    return True


def eval_outer_mf(m: MultiModel, system: "MultiAuxSystem | JointDist", mode: str,
                  g_list: tuple[ReconstructionFn, ...] | None = None,
                  ) -> tuple[MultiRateTuple, tuple[ChainCheck, ...]]:
    """Outer-bound corner on a supplied joint, verifying only per-arm chains.

    Accepts either a product-form auxiliary system or a raw joint using the
    documented axis naming; couplings across arms beyond the product form
    pass as long as each arm's chain holds. Lossless mode additionally checks
    per-arm admissibility on the joint. Raises ChainViolation naming the first
    failing condition.
    """
    if isinstance(system, MultiAuxSystem):
        system.validate_cardinalities(m, mode)
        joint = build_multi_joint(m, system)
    else:
        joint = system
    report = multi_chain_report(m, joint)
    for check in report:
        if not check.ok:
            raise ChainViolation(f"{check.name} fails with value {check.value:.3g}")
    names = _axis_names(m.j)
    if mode == "lossless":
        for k in range(m.j):
            u, xt, y = names["u"][k], names["xt"][k], names["y"][k]
            sub = joint.marginal((u, "q", xt, y))
            arm = m.arms[k]
            jf = push_function(sub, (xt, y), arm.f.table, arm.f.output)
            gap = cond_entropy(jf, arm.f.output.name, (u, "q", y))
            if gap > ADMISSIBILITY_TOL:
                raise InadmissibleAuxiliary(
                    f"arm {k}: function undetermined by (U, Q, Y), residual {gap:.3g} bits")
    rates = _multi_rates(joint, m.j)
    if mode == "lossy":
        if g_list is None:
            raise RegionError("lossy mode needs reconstruction functions")
        rates = MultiRateTuple(rates.r_s, rates.r_w, rates.sum_w, rates.r_dec,
                               rates.r_eve, d=_arm_distortions(m, joint, tuple(g_list)))
    return rates, report


def single_arm_tuple(rates: MultiRateTuple) -> RateTuple:
    """View a one-arm multi tuple as a single-function rate tuple."""
    if len(rates.r_w) != 1:
        raise RegionError("single_arm_tuple needs a one-arm tuple")
    return RateTuple(rates.r_s, rates.r_w[0], rates.r_dec[0], rates.r_eve,
                     d=None if rates.d is None else rates.d[0])
