"""Remote-source measurement models, function and distortion tables, model files.

A source model is a hidden i.i.d. source together with two measurement
channels: one feeding the transmitting terminal and one broadcast channel
feeding the fusion center and the eavesdropper jointly, so noise at the two
receiving terminals may be correlated. Model files declare the broadcast
channel as a single conditional over the product output alphabet for the
same reason.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .probability import (
    Alphabet,
    CondDist,
    Dist,
    JointDist,
    ProductAlphabet,
    cond_mutual_info,
    compose,
    entropy,
    product_alphabet,
    push_function,
)

ADMISSIBILITY_TOL = 1e-9
DEGRADEDNESS_TOL = 1e-9
ROW_SUM_TOL = 1e-9


class ModelError(ValueError):
    """Inconsistent model structure."""


class ModelFileError(ModelError):
    """Malformed or semantically invalid model file."""


@dataclass(frozen=True)
class SourceModel:
    """Hidden source plus the two measurement channels of a single computation."""

    p_x: Dist
    p_xt_given_x: CondDist
    p_yz_given_x: CondDist

    def __post_init__(self) -> None:
        if self.p_xt_given_x.input != self.p_x.alphabet:
            raise ModelError("encoder measurement channel must be fed by the source alphabet")
        if self.p_yz_given_x.input != self.p_x.alphabet:
            raise ModelError("decoder/eavesdropper channel must be fed by the source alphabet")
        out = self.p_yz_given_x.output
        if not isinstance(out, ProductAlphabet) or len(out.parts) != 2:
            raise ModelError("broadcast output must be a two-part product alphabet (y, z)")

    @property
    def x_alphabet(self) -> Alphabet:
        return self.p_x.alphabet

    @property
    def xt_alphabet(self) -> Alphabet:
        return self.p_xt_given_x.output

    @property
    def y_alphabet(self) -> Alphabet:
        return self.p_yz_given_x.output.parts[0]

    @property
    def z_alphabet(self) -> Alphabet:
        return self.p_yz_given_x.output.parts[1]


@dataclass(frozen=True)
class FunctionSpec:
    """Total per-letter function table on (encoder observation, decoder observation)."""

    xt_alphabet: Alphabet
    y_alphabet: Alphabet
    output: Alphabet
    table: np.ndarray  # symbol indices, shape (|xt|, |y|)

    def __post_init__(self) -> None:
        table = np.asarray(self.table, dtype=np.int64)
        if table.shape != (self.xt_alphabet.size, self.y_alphabet.size):
            raise ModelError(f"function table shape {table.shape} does not cover the domain")
        if table.min() < 0 or table.max() >= self.output.size:
            raise ModelError("function table contains symbols outside the output alphabet")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    @classmethod
    def from_labels(cls, xt_alphabet: Alphabet, y_alphabet: Alphabet,
                    output: Alphabet, rows: list[list[str]]) -> "FunctionSpec":
        table = np.array([[output.index(v) for v in row] for row in rows])
        return cls(xt_alphabet, y_alphabet, output, table)


@dataclass(frozen=True)
class DistortionSpec:
    """Per-letter distortion d(f, fhat) >= 0 with zero diagonal."""

    alphabet: Alphabet
    table: np.ndarray  # shape (|f|, |f|)

    def __post_init__(self) -> None:
        table = np.asarray(self.table, dtype=np.float64)
        n = self.alphabet.size
        if table.shape != (n, n):
            raise ModelError(f"distortion table shape {table.shape}, expected {(n, n)}")
        if np.any(table < 0):
            raise ModelError("distortion values must be nonnegative")
        if np.any(np.diag(table) != 0):
            raise ModelError("distortion of a symbol against itself must be 0")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    @classmethod
    def hamming(cls, alphabet: Alphabet) -> "DistortionSpec":
        return cls(alphabet, 1.0 - np.eye(alphabet.size))


@dataclass(frozen=True)
class MultiArm:
    """One encoder-decoder pair of a multi-function network."""

    p_xt_given_x: CondDist
    p_yz_given_x: CondDist
    f: FunctionSpec
    d: DistortionSpec


@dataclass(frozen=True)
class MultiModel:
    """Shared hidden source measured by J encoder-decoder pairs."""

    p_x: Dist
    arms: tuple[MultiArm, ...]

    def __post_init__(self) -> None:
        if len(self.arms) < 1:
            raise ModelError("a multi-function model needs at least one arm")
        for arm in self.arms:
            SourceModel(self.p_x, arm.p_xt_given_x, arm.p_yz_given_x)  # validates

    @property
    def j(self) -> int:
        return len(self.arms)

    def arm_model(self, j: int) -> SourceModel:
        arm = self.arms[j]
        return SourceModel(self.p_x, arm.p_xt_given_x, arm.p_yz_given_x)


def build_joint(m: SourceModel) -> JointDist:
    """The induced joint over (xt, x, y, z): source times the two channels."""
    j = compose(m.p_x, (m.p_xt_given_x, m.p_x.alphabet.name),
                (m.p_yz_given_x, m.p_x.alphabet.name))
    j = j.split(m.p_yz_given_x.output.name)
    return j.reorder((m.xt_alphabet.name, m.x_alphabet.name,
                      m.y_alphabet.name, m.z_alphabet.name))


def _project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    rho = np.nonzero(u - css / np.arange(1, len(v) + 1) > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def is_physically_degraded_eve(m: SourceModel, tol: float = DEGRADEDNESS_TOL) -> bool:
    """True when the eavesdropper channel factors through the decoder channel.

    Searches for a stochastic matrix taking y to z whose cascade with the
    y-marginal channel reproduces the declared broadcast channel: per-y
    least squares, projection onto the simplex, then a max-abs residual
    check against `tol`. Verifies user inputs rather than assuming the
    modeling hypothesis.
    """
    ny, nz = m.y_alphabet.size, m.z_alphabet.size
    pyz = m.p_yz_given_x.rows.reshape(m.x_alphabet.size, ny, nz)
    py = pyz.sum(axis=2)  # (x, y)
    z_given_y = np.zeros((ny, nz))
    for y in range(ny):
        denom = float(np.sum(py[:, y] ** 2))
        if denom < 1e-30:
            z_given_y[y] = 1.0 / nz  # y unreachable; any row works
            continue
        w = pyz[:, y, :].T @ py[:, y] / denom
        z_given_y[y] = _project_simplex(w)
    residual = np.max(np.abs(pyz - py[:, :, None] * z_given_y[None, :, :]))
    return bool(residual <= tol)


def markov_chain_holds(joint: JointDist, a, b, c, tol: float = DEGRADEDNESS_TOL) -> bool:
    """True iff a - b - c holds on the joint: I(a; c | b) <= tol."""
    return cond_mutual_info(joint, a, c, b) <= tol


def admissibility_gap(m: SourceModel, p_u_given_xt: CondDist, f: FunctionSpec) -> float:
    """H(F | U, Y) in bits on the composed joint; zero means (U, Y) determine f."""
    if p_u_given_xt.input != m.xt_alphabet:
        raise ModelError("auxiliary channel must be fed by the encoder observation")
    j = compose(m.p_x, (m.p_xt_given_x, m.x_alphabet.name),
                (p_u_given_xt, m.xt_alphabet.name),
                (m.p_yz_given_x, m.x_alphabet.name))
    j = j.split(m.p_yz_given_x.output.name)
    u, xt, y = p_u_given_xt.output.name, m.xt_alphabet.name, m.y_alphabet.name
    j = j.marginal((u, xt, y))
    jf = push_function(j, (xt, y), f.table, f.output)
    return entropy(jf, (f.output.name, u, y)) - entropy(jf, (u, y))


def is_admissible(m: SourceModel, p_u_given_xt: CondDist, f: FunctionSpec,
                  tol: float = ADMISSIBILITY_TOL) -> bool:
    """True when the auxiliary variable and the decoder observation pin down f.

    Exact-zero residual entropy is fragile under floating-point composition,
    hence the small tolerance.
    """
    return admissibility_gap(m, p_u_given_xt, f) <= tol


# ---------------------------------------------------------------------------
# Model files: YAML key/value with nested lists. Probabilities appear as
# decimal strings; each stochastic row must sum to 1 within 1e-9 and is then
# normalized to machine precision before the strict 1e-12 validation runs.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParsedModel:
    model: SourceModel
    f: FunctionSpec
    d: DistortionSpec
    multi: MultiModel | None


def _as_floats(rows, key: str) -> np.ndarray:
    try:
        arr = np.array([[float(v) for v in row] for row in rows], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ModelFileError(f"{key}: expected rows of decimal numbers ({exc})") from None
    return arr


def _stochastic(rows, key: str, n_in: int, n_out: int) -> np.ndarray:
    arr = _as_floats(rows, key)
    if arr.shape != (n_in, n_out):
        raise ModelFileError(f"{key}: shape {arr.shape}, expected {(n_in, n_out)}")
    if np.any(arr < 0):
        raise ModelFileError(f"{key}: negative probability")
    sums = arr.sum(axis=1)
    bad = np.nonzero(np.abs(sums - 1.0) > ROW_SUM_TOL)[0]
    if bad.size:
        raise ModelFileError(
            f"{key}: row {int(bad[0])} sums to {sums[bad[0]]!r}, not 1 within {ROW_SUM_TOL}")
    return arr / sums[:, None]


def _alphabet(spec, name: str) -> Alphabet:
    if not isinstance(spec, list) or not spec:
        raise ModelFileError(f"alphabets.{name}: expected a nonempty list of labels")
    return Alphabet(name, tuple(str(s) for s in spec))


def _arm_tables(block: dict, key_prefix: str, x: Alphabet, xt: Alphabet,
                y: Alphabet, z: Alphabet, fa: Alphabet):
    yz = product_alphabet(f"{y.name}{z.name}", y, z)
    p_xt = CondDist(x, xt, _stochastic(block["p_xtilde_given_x"],
                                       f"{key_prefix}p_xtilde_given_x", x.size, xt.size))
    p_yz = CondDist(x, yz, _stochastic(block["p_yz_given_x"],
                                       f"{key_prefix}p_yz_given_x", x.size, yz.size))
    frows = block["function_table"]
    if not isinstance(frows, list) or len(frows) != xt.size:
        raise ModelFileError(f"{key_prefix}function_table: expected {xt.size} rows")
    try:
        f = FunctionSpec.from_labels(xt, y, fa, frows)
    except Exception as exc:
        raise ModelFileError(f"{key_prefix}function_table: {exc}") from None
    darr = _as_floats(block["distortion_table"], f"{key_prefix}distortion_table")
    try:
        d = DistortionSpec(fa, darr)
    except ModelError as exc:
        raise ModelFileError(f"{key_prefix}distortion_table: {exc}") from None
    return p_xt, p_yz, f, d


_REQUIRED_KEYS = ("alphabets", "p_x", "p_xtilde_given_x", "p_yz_given_x",
                  "function_table", "distortion_table")


def parse_model_text(text: str, source: str = "<string>") -> ParsedModel:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ModelFileError(f"{source}: malformed model file{where}: {exc}") from None
    if not isinstance(data, dict):
        raise ModelFileError(f"{source}: model file must be a key/value mapping")
    for key in _REQUIRED_KEYS:
        if key not in data:
            raise ModelFileError(f"{source}: missing key {key!r}")
    alph = data["alphabets"]
    if not isinstance(alph, dict):
        raise ModelFileError(f"{source}: alphabets must be a mapping")
    for key in ("x", "xtilde", "y", "z", "f"):
        if key not in alph:
            raise ModelFileError(f"{source}: alphabets must declare {key!r}")
    x = _alphabet(alph["x"], "x")
    xt = _alphabet(alph["xtilde"], "xtilde")
    y = _alphabet(alph["y"], "y")
    z = _alphabet(alph["z"], "z")
    fa = _alphabet(alph["f"], "f")

    px_rows = [data["p_x"]]
    p_x = Dist(x, _stochastic(px_rows, "p_x", 1, x.size)[0])
    p_xt, p_yz, f, d = _arm_tables(data, "", x, xt, y, z, fa)
    model = SourceModel(p_x, p_xt, p_yz)

    multi = None
    if "multi" in data and data["multi"] is not None:
        blocks = data["multi"]
        if not isinstance(blocks, list) or not blocks:
            raise ModelFileError(f"{source}: multi must be a nonempty list of arm blocks")
        arms = []
        for k, block in enumerate(blocks):
            if not isinstance(block, dict):
                raise ModelFileError(f"{source}: multi[{k}] must be a mapping")
            sub = dict(block)
            over = sub.get("alphabets", {})
            xt_k = _alphabet(over["xtilde"], "xtilde") if "xtilde" in over else xt
            y_k = _alphabet(over["y"], "y") if "y" in over else y
            z_k = _alphabet(over["z"], "z") if "z" in over else z
            fa_k = _alphabet(over["f"], "f") if "f" in over else fa
            for key in ("p_xtilde_given_x", "p_yz_given_x", "function_table", "distortion_table"):
                if key not in sub:
                    raise ModelFileError(f"{source}: multi[{k}] missing key {key!r}")
            p_xt_k, p_yz_k, f_k, d_k = _arm_tables(sub, f"multi[{k}].", x, xt_k, y_k, z_k, fa_k)
            arms.append(MultiArm(p_xt_k, p_yz_k, f_k, d_k))
        multi = MultiModel(p_x, tuple(arms))

    return ParsedModel(model, f, d, multi)


def parse_model_file(path: str | Path) -> ParsedModel:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ModelFileError(f"cannot read model file {path}: {exc}") from None
    return parse_model_text(text, source=str(path))
