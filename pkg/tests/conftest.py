import numpy as np
import pytest

from sfcomp.models import DistortionSpec, FunctionSpec, SourceModel
from sfcomp.probability import (
    CondDist,
    Dist,
    binary_alphabet,
    bsc,
    product_alphabet,
    uniform,
)

X = binary_alphabet("x")
XT = binary_alphabet("xtilde")
Y = binary_alphabet("y")
Z = binary_alphabet("z")
F = binary_alphabet("f")
YZ = product_alphabet("yz", Y, Z)


def bsc_rows(p):
    return np.array([[1 - p, p], [p, 1 - p]])


def cascade_yz_channel(q_dec, q_eve):
    """y from x via BSC(q_dec), z from y via BSC(q_eve): physically degraded."""
    rows = np.zeros((2, 4))
    py = bsc_rows(q_dec)
    pz = bsc_rows(q_eve)
    for x in range(2):
        for y in range(2):
            for z in range(2):
                rows[x, 2 * y + z] = py[x, y] * pz[y, z]
    return CondDist(X, YZ, rows)


def binary_cascade_model(p=0.06, q_dec=0.15, q_eve=0.25):
    """Uniform binary source, BSC(p) encoder arm, decoder/eavesdropper cascade."""
    return SourceModel(uniform(X), bsc(p, X, XT), cascade_yz_channel(q_dec, q_eve))


def random_binary_model(rng):
    p_x = Dist(X, rng.dirichlet((2.0, 2.0)))
    p_xt = CondDist(X, XT, np.stack([rng.dirichlet((2.0, 2.0)) for _ in range(2)]))
    p_yz = CondDist(X, YZ, np.stack([rng.dirichlet((1.5,) * 4) for _ in range(2)]))
    return SourceModel(p_x, p_xt, p_yz)


XOR_F = FunctionSpec(XT, Y, F, np.array([[0, 1], [1, 0]]))
YPROJ_F = FunctionSpec(XT, Y, F, np.array([[0, 1], [0, 1]]))
XTPROJ_F = FunctionSpec(XT, Y, F, np.array([[0, 0], [1, 1]]))
HAMMING_D = DistortionSpec.hamming(F)


@pytest.fixture
def cascade_model():
    return binary_cascade_model()
