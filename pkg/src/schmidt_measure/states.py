"""State containers: party layouts, pure states, density operators, ensembles.

Amplitude vectors are indexed in mixed radix with party 1 as the most
significant digit: the amplitude array reshaped to ``dims`` in C order has
party ``i`` on axis ``i - 1``.  All containers validate their defining
invariants at construction time and keep their numpy payloads read-only.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import InputError

#: Largest total Hilbert-space dimension accepted by default ("desk scale").
DEFAULT_MAX_TOTAL_DIM = 4096

NORM_ATOL = 1e-12
HERM_ATOL = 1e-12
TRACE_ATOL = 1e-12
PSD_ATOL = 1e-10
WEIGHT_ATOL = 1e-10

#: Norm tolerance applied to *external* input (state files) before the
#: constructor renormalises.  Files must either be normalised to this
#: accuracy or opt in with ``"normalize": true``.
FILE_NORM_ATOL = 1e-9


class PartyLayout:
    """An ordered tuple of local dimensions, one per party.

    Parameters
    ----------
    dims : sequence of int
        Local dimension of each party, every entry >= 2.
    max_total_dim : int, optional
        Cap on the product of the dimensions.  Defaults to
        ``DEFAULT_MAX_TOTAL_DIM``.
    """

    __slots__ = ("dims",)

    def __init__(self, dims, max_total_dim: int | None = None):
        dims = tuple(int(d) for d in dims)
        if len(dims) == 0:
            raise InputError("a layout needs at least one party")
        if any(d < 2 for d in dims):
            raise InputError(f"every party dimension must be >= 2, got {dims}")
        cap = DEFAULT_MAX_TOTAL_DIM if max_total_dim is None else int(max_total_dim)
        total = int(np.prod(dims))
        if total > cap:
            raise InputError(
                f"total dimension {total} exceeds the desk-scale cap {cap}")
        object.__setattr__(self, "dims", dims)

    def __setattr__(self, *_):
        raise AttributeError("PartyLayout is immutable")

    @property
    def n_parties(self) -> int:
        return len(self.dims)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    def block_dim(self, parties) -> int:
        """Joint dimension of a collection of 1-based party indices."""
        return int(np.prod([self.dims[p - 1] for p in parties]))

    def __eq__(self, other):
        return isinstance(other, PartyLayout) and self.dims == other.dims

    def __hash__(self):
        return hash(self.dims)

    def __repr__(self):
        return f"PartyLayout({list(self.dims)})"


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class PureState:
    """A normalised pure state over a :class:`PartyLayout`.

    The constructor rescales the supplied amplitudes to unit norm and
    rejects the zero vector.
    """

    __slots__ = ("layout", "amplitudes")

    def __init__(self, layout: PartyLayout, amplitudes):
        amps = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        if amps.size != layout.total_dim:
            raise InputError(
                f"amplitude vector has length {amps.size}, layout expects "
                f"{layout.total_dim}")
        norm = float(np.linalg.norm(amps))
        if norm < NORM_ATOL:
            raise InputError("cannot normalise the zero vector")
        amps = amps / norm
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "amplitudes", _readonly(amps))

    def __setattr__(self, *_):
        raise AttributeError("PureState is immutable")

    @classmethod
    def from_amplitudes(cls, amplitudes, dims) -> "PureState":
        return cls(PartyLayout(dims), amplitudes)

    def tensor(self) -> np.ndarray:
        """The amplitudes reshaped to one axis per party (read-only view)."""
        return self.amplitudes.reshape(self.layout.dims)

    def density(self) -> "DensityOperator":
        rho = np.outer(self.amplitudes, self.amplitudes.conj())
        return DensityOperator(self.layout, rho)

    def tensor_with(self, other: "PureState") -> "PureState":
        """Tensor product; the other state's parties are appended."""
        dims = self.layout.dims + other.layout.dims
        return PureState(PartyLayout(dims),
                         np.kron(self.amplitudes, other.amplitudes))

    def overlap(self, other: "PureState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def __repr__(self):
        return f"PureState(dims={list(self.layout.dims)})"


class DensityOperator:
    """A density operator: Hermitian, unit trace, positive semidefinite.

    Hermiticity and trace are enforced within ``1e-12``, eigenvalues may
    dip to ``-1e-10`` to absorb roundoff.
    """

    __slots__ = ("layout", "matrix")

    def __init__(self, layout: PartyLayout, matrix):
        mat = np.asarray(matrix, dtype=np.complex128)
        d = layout.total_dim
        if mat.shape != (d, d):
            raise InputError(f"matrix shape {mat.shape} does not match "
                             f"layout dimension {d}")
        if not np.allclose(mat, mat.conj().T, rtol=0, atol=HERM_ATOL):
            raise InputError("matrix is not Hermitian within 1e-12")
        tr = float(np.real(np.trace(mat)))
        if abs(tr - 1.0) > TRACE_ATOL:
            raise InputError(f"trace is {tr!r}, expected 1 within 1e-12")
        evals = np.linalg.eigvalsh(mat)
        if evals[0] < -PSD_ATOL:
            raise InputError(
                f"matrix has negative eigenvalue {evals[0]:.3e} below -1e-10")
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "matrix", _readonly(mat))

    def __setattr__(self, *_):
        raise AttributeError("DensityOperator is immutable")

    @classmethod
    def from_pure(cls, psi: PureState) -> "DensityOperator":
        return psi.density()

    @property
    def rank(self) -> int:
        evals = np.linalg.eigvalsh(self.matrix)
        return int(np.sum(evals > 1e-12))

    def eig_ensemble(self, tol: float = 1e-12) -> "Ensemble":
        """Spectral decomposition as an ensemble, tiny weights dropped."""
        evals, evecs = np.linalg.eigh(self.matrix)
        keep = evals > tol
        weights = evals[keep]
        weights = weights / weights.sum()
        states = [PureState(self.layout, evecs[:, i])
                  for i in np.nonzero(keep)[0]]
        return Ensemble(tuple(float(w) for w in weights), tuple(states))

    def is_pure(self, tol: float = 1e-10) -> bool:
        purity = float(np.real(np.trace(self.matrix @ self.matrix)))
        return purity > 1.0 - tol

    def as_pure(self) -> PureState:
        """Extract the dominant eigenvector; only valid if ``is_pure()``."""
        evals, evecs = np.linalg.eigh(self.matrix)
        return PureState(self.layout, evecs[:, -1])

    def __repr__(self):
        return f"DensityOperator(dims={list(self.layout.dims)})"


class Ensemble:
    """A finite weighted collection of pure states on a common layout."""

    __slots__ = ("weights", "states")

    def __init__(self, weights, states):
        weights = tuple(float(w) for w in weights)
        states = tuple(states)
        if len(weights) != len(states) or not states:
            raise InputError("need equally many weights and states, at least one")
        if any(w <= 0 or w > 1 for w in weights):
            raise InputError("ensemble weights must lie in (0, 1]")
        if abs(sum(weights) - 1.0) > WEIGHT_ATOL:
            raise InputError("ensemble weights must sum to 1 within 1e-10")
        layout = states[0].layout
        if any(s.layout != layout for s in states):
            raise InputError("all ensemble members must share one layout")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "states", states)

    def __setattr__(self, *_):
        raise AttributeError("Ensemble is immutable")

    @property
    def layout(self) -> PartyLayout:
        return self.states[0].layout

    def __len__(self):
        return len(self.states)

    def assemble(self) -> DensityOperator:
        """Reassemble sum_i w_i |psi_i><psi_i| as a density operator."""
        d = self.layout.total_dim
        rho = np.zeros((d, d), dtype=np.complex128)
        for w, s in zip(self.weights, self.states):
            rho += w * np.outer(s.amplitudes, s.amplitudes.conj())
        return DensityOperator(self.layout, rho)


# ---------------------------------------------------------------------------
# JSON state format
# ---------------------------------------------------------------------------

def _complex_pairs(a: np.ndarray) -> list:
    return [[float(z.real), float(z.imag)] for z in a]


def _from_pairs(pairs) -> np.ndarray:
    try:
        return np.array([complex(p[0], p[1]) for p in pairs],
                        dtype=np.complex128)
    except (TypeError, IndexError) as exc:
        raise InputError(f"expected [re, im] pairs: {exc}") from None


def state_to_dict(state: PureState | DensityOperator) -> dict:
    if isinstance(state, PureState):
        return {"kind": "pure",
                "dims": list(state.layout.dims),
                "amplitudes": _complex_pairs(state.amplitudes)}
    if isinstance(state, DensityOperator):
        return {"kind": "density",
                "dims": list(state.layout.dims),
                "matrix": [_complex_pairs(row) for row in state.matrix]}
    raise InputError(f"cannot serialise {type(state).__name__}")


def state_from_dict(data: dict) -> PureState | DensityOperator:
    """Parse the on-disk state format.

    Raises :class:`InputError` on unknown kinds, shape mismatches, and on
    unnormalised payloads unless the document sets ``"normalize": true``.
    """
    if not isinstance(data, dict):
        raise InputError("state document must be a JSON object")
    kind = data.get("kind")
    if kind not in ("pure", "density"):
        raise InputError(f"unknown state kind {kind!r}")
    if "dims" not in data:
        raise InputError("state document lacks 'dims'")
    layout = PartyLayout(data["dims"])
    allow_rescale = bool(data.get("normalize", False))

    if kind == "pure":
        if "amplitudes" not in data:
            raise InputError("pure state document lacks 'amplitudes'")
        amps = _from_pairs(data["amplitudes"])
        if amps.size != layout.total_dim:
            raise InputError(
                f"{amps.size} amplitudes for total dimension {layout.total_dim}")
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > FILE_NORM_ATOL and not allow_rescale:
            raise InputError(
                f"amplitudes have norm {norm!r}; set \"normalize\": true to "
                "rescale on load")
        return PureState(layout, amps)

    if "matrix" not in data:
        raise InputError("density document lacks 'matrix'")
    rows = data["matrix"]
    mat = np.array([_from_pairs(row) for row in rows], dtype=np.complex128)
    if mat.shape != (layout.total_dim, layout.total_dim):
        raise InputError(f"matrix shape {mat.shape} for total dimension "
                         f"{layout.total_dim}")
    tr = float(np.real(np.trace(mat)))
    if abs(tr - 1.0) > FILE_NORM_ATOL:
        if not allow_rescale:
            raise InputError(
                f"matrix has trace {tr!r}; set \"normalize\": true to rescale")
        if tr <= FILE_NORM_ATOL:
            raise InputError("matrix trace is not positive")
        mat = mat / tr
    mat = 0.5 * (mat + mat.conj().T)   # absorb file roundoff
    return DensityOperator(layout, mat)


def load_state(path) -> PureState | DensityOperator:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read state file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"state file is not valid JSON: {exc}") from None
    return state_from_dict(data)


def save_state(state: PureState | DensityOperator, path) -> None:
    Path(path).write_text(
        json.dumps(state_to_dict(state), indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
