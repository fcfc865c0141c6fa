"""Named reference states used as golden fixtures and CLI presets.

Every constructor returns a fresh :class:`PureState` or
:class:`DensityOperator` on a qubit layout.  The registry at the bottom
maps public names to builders plus the known exact measures, so the CLI
and the golden tests can iterate over the catalogue without hardcoding
state data anywhere else.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import InputError
from .states import DensityOperator, PartyLayout, PureState

_SQRT2 = float(np.sqrt(2.0))


def _qubit_pure(amplitudes: np.ndarray, n: int) -> PureState:
    return PureState(PartyLayout((2,) * n), amplitudes)


def ghz(n: int = 3) -> PureState:
    """(|0...0> + |1...1>)/sqrt(2) on ``n`` qubits."""
    if n < 2:
        raise InputError(f"ghz needs at least 2 parties, got {n}")
    amp = np.zeros(2**n, dtype=np.complex128)
    amp[0] = amp[-1] = 1.0 / _SQRT2
    return _qubit_pure(amp, n)


def w(n: int = 3) -> PureState:
    """Uniform superposition of all single-excitation basis states."""
    if n < 2:
        raise InputError(f"w needs at least 2 parties, got {n}")
    amp = np.zeros(2**n, dtype=np.complex128)
    for k in range(n):
        amp[1 << k] = 1.0 / np.sqrt(n)
    return _qubit_pure(amp, n)


def cluster4() -> PureState:
    """The four-qubit cluster state (|0000>+|0011>+|1100>-|1111>)/2."""
    amp = np.zeros(16, dtype=np.complex128)
    amp[0b0000] = amp[0b0011] = amp[0b1100] = 0.5
    amp[0b1111] = -0.5
    return _qubit_pure(amp, 4)


def bell_pair_product() -> PureState:
    """Two maximally entangled qubit pairs side by side."""
    return ghz(2).tensor_with(ghz(2))


def _projector(amp: np.ndarray) -> np.ndarray:
    return np.outer(amp, amp.conj())


def _check_unit_interval(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise InputError(f"{name} must lie in [0, 1], got {value}")
    return value


def werner(lam: float) -> DensityOperator:
    """lam * singlet projector + (1 - lam) * I/4 on two qubits."""
    lam = _check_unit_interval("lam", lam)
    singlet = np.zeros(4, dtype=np.complex128)
    singlet[0b01] = 1.0 / _SQRT2
    singlet[0b10] = -1.0 / _SQRT2
    matrix = lam * _projector(singlet) + (1.0 - lam) * np.eye(4) / 4.0
    return DensityOperator(PartyLayout((2, 2)), matrix)


def rho_lambda_mu(lam: float, mu: float) -> DensityOperator:
    """Mixture of the three flagged Bell pairs on three qubits.

    Weight ``lam`` goes to a Bell pair on parties 1,2 with party 3 in
    |0>, weight ``mu`` to a pair on parties 2,3 with party 1 in |0>,
    and the remainder to a pair on parties 3,1 with party 2 in |0>.
    """
    lam = _check_unit_interval("lam", lam)
    mu = _check_unit_interval("mu", mu)
    if lam + mu > 1.0 + 1e-12:
        raise InputError(f"lam + mu must not exceed 1, got {lam + mu}")
    nu = max(1.0 - lam - mu, 0.0)

    def bell_with_flag(lo: int, hi: int) -> np.ndarray:
        amp = np.zeros(8, dtype=np.complex128)
        amp[0] = 1.0 / _SQRT2
        amp[lo | hi] = 1.0 / _SQRT2
        return amp

    # Bit masks for the excited half of each Bell pair; the flagged
    # party stays at |0> in both branches.
    pair_12 = bell_with_flag(0b100, 0b010)
    pair_23 = bell_with_flag(0b010, 0b001)
    pair_31 = bell_with_flag(0b001, 0b100)
    matrix = (
        lam * _projector(pair_12)
        + mu * _projector(pair_23)
        + nu * _projector(pair_31)
    )
    return DensityOperator(PartyLayout((2, 2, 2)), matrix)


def rho_m() -> DensityOperator:
    """The even three-way mixture of flagged Bell pairs."""
    return rho_lambda_mu(1.0 / 3.0, 1.0 / 3.0)


def rho_g(lam: float) -> DensityOperator:
    """lam * GHZ projector + (1 - lam) * |000><000| on three qubits."""
    lam = _check_unit_interval("lam", lam)
    zero = np.zeros(8, dtype=np.complex128)
    zero[0] = 1.0
    matrix = lam * _projector(ghz(3).amplitudes) + (1.0 - lam) * _projector(zero)
    return DensityOperator(PartyLayout((2, 2, 2)), matrix)


@dataclass(frozen=True)
class ZooEntry:
    """Catalogue row: a builder plus the exact measures known for it.

    ``expected`` is keyed by split string.  For pure entries the values
    are minimal product-term counts (integers, so measures like
    log2(3) stay exact); they refer to the four-party instances of the
    reference table, so parameterized builders must be called with
    ``n=4`` when checking them.  For mixed entries the values are the
    measure itself, either a constant or a callable of the builder's
    parameters.
    """

    name: str
    builder: Callable[..., PureState | DensityOperator]
    kind: str
    params: tuple[str, ...] = ()
    expected: Mapping[str, object] = field(default_factory=dict)

    def build(self, **params) -> PureState | DensityOperator:
        unknown = set(params) - set(self.params)
        if unknown:
            raise InputError(
                f"zoo state {self.name!r} takes parameters {self.params}, "
                f"got unexpected {sorted(unknown)}"
            )
        return self.builder(**params)


ZOO: dict[str, ZooEntry] = {
    entry.name: entry
    for entry in (
        ZooEntry(
            name="ghz",
            builder=ghz,
            kind="pure",
            params=("n",),
            expected={
                "1|2|3|4": 2,
                "12|3|4": 2,
                "12|34": 2,
                "13|24": 2,
                "123|4": 2,
            },
        ),
        ZooEntry(
            name="w",
            builder=w,
            kind="pure",
            params=("n",),
            expected={
                "1|2|3|4": 4,
                "12|3|4": 3,
                "12|34": 2,
                "13|24": 2,
                "123|4": 2,
            },
        ),
        ZooEntry(
            name="cluster4",
            builder=cluster4,
            kind="pure",
            expected={
                "1|2|3|4": 4,
                "12|3|4": 2,
                "12|34": 2,
                "13|24": 4,
                "123|4": 2,
            },
        ),
        ZooEntry(
            name="bell_pair_product",
            builder=bell_pair_product,
            kind="pure",
            expected={
                "1|2|3|4": 4,
                "12|3|4": 2,
                "12|34": 1,
                "13|24": 4,
                "123|4": 2,
            },
        ),
        ZooEntry(
            name="werner",
            builder=werner,
            kind="mixed",
            params=("lam",),
            expected={
                "1|2": lambda lam: max(0.0, 1.5 * lam - 0.5),
            },
        ),
        ZooEntry(
            name="rho_g",
            builder=rho_g,
            kind="mixed",
            params=("lam",),
            expected={
                "1|2|3": lambda lam: lam,
                "12|3": lambda lam: lam,
                "13|2": lambda lam: lam,
                "23|1": lambda lam: lam,
            },
        ),
        ZooEntry(
            name="rho_m",
            builder=rho_m,
            kind="mixed",
            expected={
                "1|2|3": 1.0,
                "12|3": 2.0 / 3.0,
                "13|2": 2.0 / 3.0,
                "23|1": 2.0 / 3.0,
            },
        ),
        ZooEntry(
            name="rho_lambda_mu",
            builder=rho_lambda_mu,
            kind="mixed",
            params=("lam", "mu"),
            expected={
                "1|2|3": lambda lam, mu: 1.0,
                "12|3": lambda lam, mu: 1.0 - lam,
                "13|2": lambda lam, mu: lam + mu,
                "23|1": lambda lam, mu: 1.0 - mu,
            },
        ),
    )
}


def build(name: str, **params) -> PureState | DensityOperator:
    """Construct a zoo state by registry name."""
    try:
        entry = ZOO[name]
    except KeyError:
        known = ", ".join(sorted(ZOO))
        raise InputError(f"unknown zoo state {name!r}; available: {known}") from None
    return entry.build(**params)


def expected_measure(entry: ZooEntry, split_key: str, **params) -> float | None:
    """Resolve an entry's expected measure for one split, if recorded."""
    raw = entry.expected.get(split_key)
    if raw is None:
        return None
    if callable(raw):
        return float(raw(**params))
    if entry.kind == "pure":
        return float(np.log2(raw))
    return float(raw)
