from __future__ import annotations

import numpy as np
import pytest

from schmidt_measure import PartyLayout, PureState


def ket(bits: str, dims=None) -> PureState:
    """Computational basis state from a digit string, e.g. ket("010")."""
    digits = [int(c) for c in bits]
    if dims is None:
        dims = [2] * len(digits)
    layout = PartyLayout(dims)
    amps = np.zeros(layout.total_dim, dtype=np.complex128)
    amps[int(np.ravel_multi_index(digits, dims))] = 1.0
    return PureState(layout, amps)


def superpose(*terms, dims=None) -> PureState:
    """Uniform-coefficient superposition of basis strings, or weighted
    ``(coeff, bits)`` pairs."""
    first = terms[0]
    if isinstance(first, str):
        terms = [(1.0, t) for t in terms]
    n = len(terms[0][1])
    if dims is None:
        dims = [2] * n
    layout = PartyLayout(dims)
    amps = np.zeros(layout.total_dim, dtype=np.complex128)
    for coeff, bits in terms:
        digits = [int(c) for c in bits]
        amps[int(np.ravel_multi_index(digits, dims))] += coeff
    return PureState(layout, amps)


@pytest.fixture
def rng():
    return np.random.default_rng(20260814)
