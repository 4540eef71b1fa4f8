"""Single-function rate-region evaluation, membership search, boundary tracing.

A rate corner for a given auxiliary system mixes a time-sharing weight with
per-weight auxiliary channel pairs. The four rate coordinates are conditional
mutual informations on the mixed joint plus a nonpositive offset
min(I(U;Z|V,Q) - I(U;Y|V,Q), 0); the offset conditions on (V,Q) while the
leading terms are evaluated on the mixture itself. A per-weight diagnostic
report is available for the averaged view.

Search operations (membership, boundary tracing) are seeded multi-start
coordinate descent with step halving and simplex projection; restart r of
grid point g uses the derived seed child_seed(seed, g, r).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .models import (
    ADMISSIBILITY_TOL,
    DistortionSpec,
    FunctionSpec,
    ModelError,
    SourceModel,
    admissibility_gap,
)
from .probability import (
    Alphabet,
    CondDist,
    Dist,
    JointDist,
    compose,
    cond_mutual_info,
    constant_channel,
    identity_channel,
    min_zero,
    mixture,
    push_function,
    uniform,
)
from .seeding import child_seed, uniforms

RATE_NEG_TOL = 1e-9
MEMBERSHIP_TOL = 1e-9


class RegionError(ValueError):
    """Invalid auxiliary system, budget, or evaluation request."""


class CardinalityError(RegionError):
    """Auxiliary alphabet larger than the mode's search bound."""


class InadmissibleAuxiliary(RegionError):
    """Auxiliary channel fails the determine-the-function requirement."""


@dataclass(frozen=True)
class AuxPair:
    """One auxiliary channel pair: encoder observation -> U -> V."""

    p_u_given_xt: CondDist
    p_v_given_u: CondDist

    def __post_init__(self) -> None:
        if self.p_v_given_u.input != self.p_u_given_xt.output:
            raise RegionError("inner auxiliary channel must be fed by the outer one")

    @property
    def u_alphabet(self) -> Alphabet:
        return self.p_u_given_xt.output

    @property
    def v_alphabet(self) -> Alphabet:
        return self.p_v_given_u.output


@dataclass(frozen=True)
class AuxSystem:
    """Time-sharing weight plus one auxiliary channel pair per weight symbol."""

    p_q: Dist
    per_q: tuple[AuxPair, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "per_q", tuple(self.per_q))
        if len(self.per_q) != self.p_q.alphabet.size:
            raise RegionError("need exactly one channel pair per time-sharing symbol")
        first = self.per_q[0]
        for pair in self.per_q[1:]:
            if pair.u_alphabet != first.u_alphabet or pair.v_alphabet != first.v_alphabet:
                raise RegionError("per-weight channel pairs must share alphabets")
            if pair.p_u_given_xt.input != first.p_u_given_xt.input:
                raise RegionError("per-weight channel pairs must share the input alphabet")

    @property
    def u_alphabet(self) -> Alphabet:
        return self.per_q[0].u_alphabet

    @property
    def v_alphabet(self) -> Alphabet:
        return self.per_q[0].v_alphabet

    def validate_cardinalities(self, xt_size: int, mode: str) -> None:
        slack = {"lossless": 4, "lossy": 5}.get(mode)
        if slack is None:
            raise RegionError(f"mode must be 'lossless' or 'lossy', got {mode!r}")
        if self.p_q.alphabet.size > 2:
            raise CardinalityError("time-sharing alphabet is limited to 2 symbols")
        v_cap, u_cap = xt_size + slack, (xt_size + slack) ** 2
        if self.v_alphabet.size > v_cap:
            raise CardinalityError(f"|V| = {self.v_alphabet.size} exceeds bound {v_cap}")
        if self.u_alphabet.size > u_cap:
            raise CardinalityError(f"|U| = {self.u_alphabet.size} exceeds bound {u_cap}")


@dataclass(frozen=True)
class RateTuple:
    """Secrecy, storage, decoder-privacy, eavesdropper-privacy rates in bits/symbol."""

    r_s: float
    r_w: float
    r_dec: float
    r_eve: float
    d: float | None = None

    def coords(self) -> dict[str, float]:
        out = {"r_s": self.r_s, "r_w": self.r_w, "r_dec": self.r_dec, "r_eve": self.r_eve}
        if self.d is not None:
            out["d"] = self.d
        return out

    def dominates(self, target: "RateTuple", tol: float = MEMBERSHIP_TOL) -> bool:
        """True when every coordinate is <= the target's within tol."""
        mine, theirs = self.coords(), target.coords()
        return all(mine.get(k, 0.0) <= v + tol for k, v in theirs.items())


@dataclass(frozen=True)
class ReconstructionFn:
    """Deterministic reconstruction table on (auxiliary symbol, decoder observation)."""

    u_alphabet: Alphabet
    y_alphabet: Alphabet
    output: Alphabet
    table: np.ndarray  # symbol indices, shape (|u|, |y|)

    def __post_init__(self) -> None:
        table = np.asarray(self.table, dtype=np.int64)
        if table.shape != (self.u_alphabet.size, self.y_alphabet.size):
            raise RegionError(f"reconstruction table shape {table.shape} does not cover the domain")
        if table.min() < 0 or table.max() >= self.output.size:
            raise RegionError("reconstruction table symbol out of range")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)


def singleton_alphabet(name: str) -> Alphabet:
    return Alphabet(name, ("0",))


def identity_aux(m: SourceModel, u_name: str = "u", v_name: str = "v",
                 q_name: str = "q") -> AuxSystem:
    """U copies the encoder observation, V is constant, no time sharing."""
    p_u = identity_channel(m.xt_alphabet, u_name)
    p_v = constant_channel(p_u.output, singleton_alphabet(v_name))
    return AuxSystem(uniform(singleton_alphabet(q_name)), (AuxPair(p_u, p_v),))


def constant_aux(m: SourceModel, u_name: str = "u", v_name: str = "v",
                 q_name: str = "q") -> AuxSystem:
    """U and V carry no information."""
    p_u = constant_channel(m.xt_alphabet, singleton_alphabet(u_name))
    p_v = constant_channel(p_u.output, singleton_alphabet(v_name))
    return AuxSystem(uniform(singleton_alphabet(q_name)), (AuxPair(p_u, p_v),))


def v_equals_u_aux(p_u_given_xt: CondDist, v_name: str = "v", q_name: str = "q") -> AuxSystem:
    """Wrap a single auxiliary channel with V a noiseless copy of U."""
    p_v = identity_channel(p_u_given_xt.output, v_name)
    return AuxSystem(uniform(singleton_alphabet(q_name)), (AuxPair(p_u_given_xt, p_v),))


def aux_mixture_joint(m: SourceModel, aux: AuxSystem) -> JointDist:
    """Joint over (q, v, u, xt, x, y, z) induced by the model and the auxiliary system."""
    xn, xtn = m.x_alphabet.name, m.xt_alphabet.name
    components = []
    for pair in aux.per_q:
        j = compose(m.p_x,
                    (m.p_xt_given_x, xn),
                    (pair.p_u_given_xt, xtn),
                    (pair.p_v_given_u, pair.u_alphabet.name),
                    (m.p_yz_given_x, xn))
        j = j.split(m.p_yz_given_x.output.name)
        j = j.reorder((pair.v_alphabet.name, pair.u_alphabet.name, xtn, xn,
                       m.y_alphabet.name, m.z_alphabet.name))
        components.append(j)
    return mixture(aux.p_q, components)


def _clamp_rate(value: float) -> float:
    if value < -RATE_NEG_TOL:
        raise RegionError(f"rate coordinate {value!r} is negative beyond tolerance")
    return 0.0 if value < 0.0 else value


def _corner_rates(m: SourceModel, aux: AuxSystem, joint: JointDist | None = None,
                  ) -> tuple[RateTuple, float, JointDist]:
    # The auxiliary variable of the leading terms absorbs the time-sharing
    # label, so they are evaluated with the axis pair (u, q); the offset
    # conditions on (v, q). With one branch the two readings coincide; with
    # heterogeneous branches only this one keeps every coordinate >= 0.
    if joint is None:
        joint = aux_mixture_joint(m, aux)
    q = aux.p_q.alphabet.name
    v, u = aux.v_alphabet.name, aux.u_alphabet.name
    xt, x = m.xt_alphabet.name, m.x_alphabet.name
    y, z = m.y_alphabet.name, m.z_alphabet.name
    uq = (u, q)
    offset = min_zero(cond_mutual_info(joint, u, z, (v, q))
                      - cond_mutual_info(joint, u, y, (v, q)))
    rates = RateTuple(
        r_s=_clamp_rate(cond_mutual_info(joint, uq, xt, z) + offset),
        r_w=_clamp_rate(cond_mutual_info(joint, uq, xt, y)),
        r_dec=_clamp_rate(cond_mutual_info(joint, uq, x, y)),
        r_eve=_clamp_rate(cond_mutual_info(joint, uq, x, z) + offset),
    )
    return rates, offset, joint


def eval_lossless_corner(m: SourceModel, aux: AuxSystem, f: FunctionSpec) -> RateTuple:
    """Componentwise-minimal achievable tuple for an admissible auxiliary system."""
    aux.validate_cardinalities(m.xt_alphabet.size, "lossless")
    for qi, pair in enumerate(aux.per_q):
        gap = admissibility_gap(m, pair.p_u_given_xt, f)
        if gap > ADMISSIBILITY_TOL:
            raise InadmissibleAuxiliary(
                f"auxiliary channel for weight symbol {qi} leaves {gap:.3g} bits "
                "of the function undetermined")
    rates, _, _ = _corner_rates(m, aux)
    return rates


def _function_conditional(m: SourceModel, aux: AuxSystem, f: FunctionSpec,
                          joint: JointDist) -> JointDist:
    """Marginal over (u, y, f) with the function pushed onto its own axis."""
    u, xt, y = aux.u_alphabet.name, m.xt_alphabet.name, m.y_alphabet.name
    sub = joint.marginal((u, xt, y))
    jf = push_function(sub, (xt, y), f.table, f.output)
    return jf.marginal((u, y, f.output.name))


def optimal_g(m: SourceModel, aux: AuxSystem, f: FunctionSpec,
              d: DistortionSpec) -> ReconstructionFn:
    """Reconstruction minimizing conditional expected distortion cell by cell.

    Under Hamming distortion this is the most-likely-function-value rule.
    Cells with zero probability get the globally most likely function symbol;
    ties break toward the lowest symbol index.
    """
    joint = aux_mixture_joint(m, aux)
    juyf = _function_conditional(m, aux, f, joint)
    p = juyf.table  # (u, y, f)
    nf = f.output.size
    # risk[u, y, fhat] = sum_f p(u,y,f) d(f, fhat)
    risk = np.einsum("uyf,fg->uyg", p, d.table)
    table = np.argmin(risk, axis=2)
    cell_mass = p.sum(axis=2)
    global_best = int(np.argmax(p.sum(axis=(0, 1))))
    table = np.where(cell_mass > 0.0, table, global_best)
    return ReconstructionFn(aux.u_alphabet, m.y_alphabet, f.output, table)


def expected_distortion(m: SourceModel, aux: AuxSystem, f: FunctionSpec,
                        g: ReconstructionFn, d: DistortionSpec) -> float:
    """E d(f(xt, y), g(u, y)) on the mixture joint."""
    joint = aux_mixture_joint(m, aux)
    u, xt, y = aux.u_alphabet.name, m.xt_alphabet.name, m.y_alphabet.name
    sub = joint.marginal((u, xt, y))  # axes in joint order: (u, xt, y)
    val = d.table[f.table[None, :, :], g.table[:, None, :]]
    return float(np.sum(sub.table * val))


def eval_lossy_corner(m: SourceModel, aux: AuxSystem, f: FunctionSpec,
                      g: ReconstructionFn, d: DistortionSpec) -> RateTuple:
    """Rate corner plus expected distortion; no admissibility requirement."""
    aux.validate_cardinalities(m.xt_alphabet.size, "lossy")
    rates, _, joint = _corner_rates(m, aux)
    u, xt, y = aux.u_alphabet.name, m.xt_alphabet.name, m.y_alphabet.name
    sub = joint.marginal((u, xt, y))
    val = d.table[f.table[None, :, :], g.table[:, None, :]]
    dist = float(np.sum(sub.table * val))
    return RateTuple(rates.r_s, rates.r_w, rates.r_dec, rates.r_eve, d=dist)


@dataclass(frozen=True)
class PerQEntry:
    label: str
    weight: float
    rates: RateTuple
    offset: float


def per_q_report(m: SourceModel, aux: AuxSystem) -> tuple[PerQEntry, ...]:
    """Evaluate each time-sharing branch as its own singleton system."""
    out = []
    for qi, pair in enumerate(aux.per_q):
        single = AuxSystem(uniform(singleton_alphabet(aux.p_q.alphabet.name)), (pair,))
        rates, offset, _ = _corner_rates(m, single)
        out.append(PerQEntry(aux.p_q.alphabet.labels[qi], float(aux.p_q.probs[qi]),
                             rates, offset))
    return tuple(out)


# ---------------------------------------------------------------------------
# Search: seeded multi-start coordinate descent over channel entries
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SearchBudget:
    """Search parameters; defaults follow the documented evaluation recipe."""

    restarts: int = 64
    iters: int = 500
    seed: int = 0
    u_size: int | None = None  # defaults to the encoder-observation alphabet size
    v_size: int = 1
    q_size: int = 1
    init_step: float = 0.25
    min_step: float = 1e-6
    candidates: tuple[AuxSystem, ...] = field(default=())

    def __post_init__(self) -> None:
        if self.restarts < 0 or self.iters < 1:
            raise RegionError("invalid budget: restarts must be >= 0 and iters >= 1")
        if self.v_size < 1 or self.q_size < 1 or (self.u_size is not None and self.u_size < 1):
            raise RegionError("invalid budget: alphabet sizes must be >= 1")
        if not (0 < self.min_step <= self.init_step):
            raise RegionError("invalid budget: need 0 < min_step <= init_step")

    def resolved_sizes(self, m: SourceModel, mode: str) -> tuple[int, int, int]:
        slack = {"lossless": 4, "lossy": 5}[mode]
        xt = m.xt_alphabet.size
        u = self.u_size if self.u_size is not None else xt
        if self.q_size > 2 or self.v_size > xt + slack or u > (xt + slack) ** 2:
            raise RegionError("invalid budget: auxiliary sizes exceed the search bounds")
        return u, self.v_size, self.q_size


def _project_simplex(v: np.ndarray) -> np.ndarray:
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    rho = np.nonzero(u - css / np.arange(1, len(v) + 1) > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def _alphabet_of_size(name: str, n: int) -> Alphabet:
    return Alphabet(name, tuple(str(i) for i in range(n)))


class _AuxParam:
    """Flat simplex-block parameterization of an auxiliary system."""

    def __init__(self, m: SourceModel, u_size: int, v_size: int, q_size: int):
        self.m = m
        self.q_alpha = _alphabet_of_size("q", q_size)
        self.u_alpha = _alphabet_of_size("u", u_size)
        self.v_alpha = _alphabet_of_size("v", v_size)
        xt = m.xt_alphabet.size
        self.blocks: list[int] = []
        if q_size > 1:
            self.blocks.append(q_size)
        for _ in range(q_size):
            self.blocks.extend([u_size] * xt)
            if v_size > 1:
                self.blocks.extend([v_size] * u_size)

    def random(self, seed: int) -> list[np.ndarray]:
        total = sum(self.blocks)
        raw = -np.log(np.maximum(uniforms(seed, 0, total), 1e-300))
        out, at = [], 0
        for size in self.blocks:
            chunk = raw[at:at + size]
            out.append(chunk / chunk.sum())
            at += size
        return out

    def to_aux(self, blocks: list[np.ndarray]) -> AuxSystem:
        xt = self.m.xt_alphabet.size
        at = 0
        if self.q_alpha.size > 1:
            p_q = Dist(self.q_alpha, _renorm(blocks[at]))
            at += 1
        else:
            p_q = uniform(self.q_alpha)
        pairs = []
        for _ in range(self.q_alpha.size):
            u_rows = np.stack([_renorm(blocks[at + i]) for i in range(xt)])
            at += xt
            if self.v_alpha.size > 1:
                v_rows = np.stack([_renorm(blocks[at + i]) for i in range(self.u_alpha.size)])
                at += self.u_alpha.size
            else:
                v_rows = np.ones((self.u_alpha.size, 1))
            pairs.append(AuxPair(CondDist(self.m.xt_alphabet, self.u_alpha, u_rows),
                                 CondDist(self.u_alpha, self.v_alpha, v_rows)))
        return AuxSystem(p_q, tuple(pairs))


def _renorm(v: np.ndarray) -> np.ndarray:
    w = np.maximum(v, 0.0)
    s = w.sum()
    return w / s if s > 0 else np.full_like(w, 1.0 / len(w))


def _coordinate_descent(objective, param: _AuxParam, blocks, iters, init_step, min_step):
    best = objective(blocks)
    step = init_step
    for _ in range(iters):
        improved = False
        for bi in range(len(blocks)):
            for ci in range(len(blocks[bi])):
                for sign in (1.0, -1.0):
                    cand = [b.copy() for b in blocks]
                    cand[bi][ci] += sign * step
                    cand[bi] = _project_simplex(cand[bi])
                    val = objective(cand)
                    if val < best - 1e-15:
                        blocks, best = cand, val
                        improved = True
                        break
        if not improved:
            step *= 0.5
            if step < min_step:
                break
    return blocks, best


@dataclass(frozen=True)
class MembershipResult:
    found: bool
    witness: AuxSystem | None
    achieved: RateTuple | None
    g: ReconstructionFn | None = None


def _eval_candidate(m, aux, f, mode, d):
    """(rates, admissibility gap); distortion filled in lossy mode when d given."""
    gap = 0.0
    if mode == "lossless":
        gap = max(admissibility_gap(m, pair.p_u_given_xt, f) for pair in aux.per_q)
        rates, _, _ = _corner_rates(m, aux)
        return rates, gap
    if d is not None:
        g = optimal_g(m, aux, f, d)
        return eval_lossy_corner(m, aux, f, g, d), gap
    rates, _, _ = _corner_rates(m, aux)
    return rates, gap


def membership(m: SourceModel, f: FunctionSpec, target: RateTuple, mode: str,
               budget: SearchBudget | None = None,
               d: DistortionSpec | None = None) -> MembershipResult:
    """Search for an auxiliary system whose corner sits under the target.

    Returns a witness when one is found; a not-found answer is *not* a proof
    of non-membership. Deterministic given the budget seed. Candidate systems
    supplied in the budget are verified first (witness reuse), then canonical
    corners, then seeded random restarts refined by coordinate descent.
    """
    budget = budget or SearchBudget()
    if mode not in ("lossless", "lossy"):
        raise RegionError(f"mode must be 'lossless' or 'lossy', got {mode!r}")
    if not all(np.isfinite(v) for v in target.coords().values()):
        raise RegionError("membership target must have finite coordinates")
    if mode == "lossy" and target.d is not None and d is None:
        raise RegionError("a distortion target needs a distortion spec")
    want_d = target.d is not None

    def verdict(aux: AuxSystem) -> MembershipResult | None:
        rates, gap = _eval_candidate(m, aux, f, mode, d if want_d else None)
        if gap <= ADMISSIBILITY_TOL and rates.dominates(target):
            g = optimal_g(m, aux, f, d) if (want_d and d is not None) else None
            return MembershipResult(True, aux, rates, g)
        return None

    for aux in budget.candidates:
        hit = verdict(aux)
        if hit:
            return hit
    for aux in (identity_aux(m), constant_aux(m),
                v_equals_u_aux(identity_channel(m.xt_alphabet, "u"))):
        try:
            hit = verdict(aux)
        except RegionError:
            hit = None
        if hit:
            return hit

    u_size, v_size, q_size = budget.resolved_sizes(m, mode)
    param = _AuxParam(m, u_size, v_size, q_size)
    tcoords = target.coords()

    def objective(blocks) -> float:
        aux = param.to_aux(blocks)
        rates, gap = _eval_candidate(m, aux, f, mode, d if want_d else None)
        excess = max(rates.coords().get(k, 0.0) - v for k, v in tcoords.items())
        return excess + 1e3 * max(gap - ADMISSIBILITY_TOL, 0.0)

    for r in range(budget.restarts):
        blocks = param.random(child_seed(budget.seed, 0, r))
        blocks, val = _coordinate_descent(objective, param, blocks, budget.iters,
                                          budget.init_step, budget.min_step)
        if val <= MEMBERSHIP_TOL:
            hit = verdict(param.to_aux(blocks))
            if hit:
                return hit
    return MembershipResult(False, None, None)


@dataclass(frozen=True)
class BoundarySweep:
    """Trace the best `minimize` coordinate subject to `coordinate` <= each grid value."""

    coordinate: str
    grid: tuple[float, ...]
    minimize: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "grid", tuple(float(g) for g in self.grid))
        if not self.grid:
            raise RegionError("boundary sweep needs a nonempty grid")
        names = ("r_s", "r_w", "r_dec", "r_eve", "d")
        if self.coordinate not in names or self.minimize not in names:
            raise RegionError(f"sweep coordinates must be among {names}")


def trace_boundary(m: SourceModel, f: FunctionSpec, sweep: BoundarySweep, mode: str,
                   budget: SearchBudget | None = None,
                   d: DistortionSpec | None = None) -> list[RateTuple]:
    """Best tuple per grid point by seeded multi-start coordinate descent."""
    budget = budget or SearchBudget()
    u_size, v_size, q_size = budget.resolved_sizes(m, mode)
    param = _AuxParam(m, u_size, v_size, q_size)
    use_d = "d" in (sweep.coordinate, sweep.minimize)
    if use_d and d is None:
        raise RegionError("sweeping distortion needs a distortion spec")
    penalty = 1e3
    results: list[RateTuple] = []
    for gi, bound in enumerate(sweep.grid):
        best_feasible: tuple[float, RateTuple] | None = None
        best_any: tuple[float, RateTuple] | None = None

        def score(blocks) -> float:
            nonlocal best_feasible, best_any
            aux = param.to_aux(blocks)
            rates, gap = _eval_candidate(m, aux, f, mode, d if use_d else None)
            coords = rates.coords()
            obj = coords[sweep.minimize]
            viol = max(coords[sweep.coordinate] - bound, 0.0) + max(gap - ADMISSIBILITY_TOL, 0.0)
            val = obj + penalty * viol
            if viol <= MEMBERSHIP_TOL and (best_feasible is None or obj < best_feasible[0]):
                best_feasible = (obj, rates)
            if best_any is None or val < best_any[0]:
                best_any = (val, rates)
            return val

        for r in range(budget.restarts):
            blocks = param.random(child_seed(budget.seed, gi, r))
            _coordinate_descent(score, param, blocks, budget.iters,
                                budget.init_step, budget.min_step)
        chosen = best_feasible or best_any
        assert chosen is not None
        results.append(chosen[1])
    return results
