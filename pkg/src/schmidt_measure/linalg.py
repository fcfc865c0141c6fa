"""Dense linear-algebra services: groupings, matricisation, ranks, sampling.

Everything here is a thin, carefully index-checked layer over numpy.  The
grouping convention matches :mod:`schmidt_measure.states`: party 1 is the
most significant digit, and grouped tensors put blocks in canonical split
order with parties ascending inside each block.
"""

from __future__ import annotations

import numpy as np

from .errors import InputError
from .splits import Split
from .states import PureState

RANK_RTOL = 1e-8


def _as_tensor(psi, split: Split) -> np.ndarray:
    """Accept a PureState or an already-shaped amplitude tensor."""
    if isinstance(psi, PureState):
        if split.n_parties != psi.layout.n_parties:
            raise InputError("split and state disagree on the number of parties")
        return psi.tensor()
    nd = np.asarray(psi, dtype=np.complex128)
    if nd.ndim != split.n_parties:
        raise InputError(f"tensor has {nd.ndim} axes but the split expects "
                         f"{split.n_parties}")
    return nd


def group_tensor(psi, split: Split) -> np.ndarray:
    """Reshape a pure state to one axis per block of ``split``."""
    nd = _as_tensor(psi, split).transpose(split.axes_order())
    # block dims follow from the permuted tensor itself
    dims = []
    pos = 0
    for block in split.blocks:
        d = 1
        for _ in block:
            d *= nd.shape[pos]
            pos += 1
        dims.append(d)
    return nd.reshape(dims)


def ungroup_amplitudes(grouped: np.ndarray, layout, split: Split) -> np.ndarray:
    """Inverse of :func:`group_tensor`: back to the flat amplitude vector."""
    order = split.axes_order()
    party_dims = [layout.dims[a] for a in order]
    nd = grouped.reshape(party_dims)
    inverse = np.argsort(order)
    return nd.transpose(inverse).reshape(-1)


def group_density(rho, split: Split) -> np.ndarray:
    """Density matrix reindexed with one composite index per block.

    Both the row and the column multi-index are permuted into the
    split's block order, so the result acts on the grouped tensor
    produced by :func:`group_tensor`.
    """
    if split.n_parties != rho.layout.n_parties:
        raise InputError("split and state disagree on the number of parties")
    dims = list(rho.layout.dims)
    n = len(dims)
    order = split.axes_order()
    four = np.asarray(rho.matrix).reshape(dims + dims)
    perm = order + [n + a for a in order]
    block = [int(np.prod([dims[p - 1] for p in b])) for b in split.blocks]
    d = int(np.prod(block))
    return four.transpose(perm).reshape(d, d)


def ungroup_density(grouped: np.ndarray, layout, split: Split) -> np.ndarray:
    """Inverse of :func:`group_density`: back to party-ordered indices."""
    order = split.axes_order()
    party_dims = [layout.dims[a] for a in order]
    n = len(party_dims)
    four = np.asarray(grouped).reshape(party_dims + party_dims)
    inverse = list(np.argsort(order))
    d = int(np.prod(party_dims))
    return four.transpose(inverse + [n + a for a in inverse]).reshape(d, d)


def matricize(psi, split: Split, row_blocks) -> np.ndarray:
    """Matrix of amplitudes with ``row_blocks`` (block positions within the
    split, 0-based) indexing rows and the remaining blocks indexing columns.

    Row and column indices both run in mixed radix over their blocks in
    canonical split order.
    """
    row_blocks = sorted(set(int(b) for b in row_blocks))
    if not row_blocks or len(row_blocks) == split.k:
        raise InputError("row blocks must be a proper non-empty subset")
    if row_blocks[0] < 0 or row_blocks[-1] >= split.k:
        raise InputError(f"row block index out of range for k={split.k}")
    grouped = group_tensor(psi, split)
    col_blocks = [b for b in range(split.k) if b not in row_blocks]
    perm = row_blocks + col_blocks
    moved = grouped.transpose(perm)
    rows = int(np.prod([grouped.shape[b] for b in row_blocks]))
    return moved.reshape(rows, -1)


def numerical_rank(matrix: np.ndarray, tol: float = RANK_RTOL) -> int:
    """Number of singular values above ``tol`` times the largest one."""
    if matrix.size == 0:
        return 0
    s = np.linalg.svd(matrix, compute_uv=False)
    if s[0] <= 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


def bipartition_schmidt_rank(psi, split: Split,
                             tol: float = RANK_RTOL) -> int:
    """Schmidt rank across a 2-split."""
    if split.k != 2:
        raise InputError("bipartition_schmidt_rank needs a 2-split")
    return numerical_rank(matricize(psi, split, [0]), tol)


def partial_transpose(matrix: np.ndarray, row_dim: int, col_dim: int) -> np.ndarray:
    """Partial transpose over the second tensor factor of a bipartite
    operator on ``C^row_dim (x) C^col_dim``."""
    d = row_dim * col_dim
    if matrix.shape != (d, d):
        raise InputError(f"operator shape {matrix.shape} does not match "
                         f"{row_dim}x{col_dim}")
    four = matrix.reshape(row_dim, col_dim, row_dim, col_dim)
    return four.transpose(0, 3, 2, 1).reshape(d, d)


# -- randomness -------------------------------------------------------------

def haar_isometry(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """A Haar-random isometry with ``V.conj().T @ V = I`` (rows >= cols).

    QR of a complex Gaussian matrix with the R-diagonal phases divided out,
    which is the textbook way to make QR sampling exactly Haar.
    """
    if rows < cols:
        raise InputError("an isometry needs rows >= cols")
    z = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    q, r = np.linalg.qr(z)
    diag = np.diag(r)
    phases = diag / np.abs(np.where(np.abs(diag) > 0, diag, 1.0))
    return q * phases.conj()


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    return haar_isometry(dim, dim, rng)


def random_pure_state(layout, rng: np.random.Generator) -> PureState:
    from .states import PartyLayout
    if not isinstance(layout, PartyLayout):
        layout = PartyLayout(layout)
    d = layout.total_dim
    z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return PureState(layout, z)


def kron_all(vectors) -> np.ndarray:
    """Kronecker product of a sequence of vectors, left to right."""
    out = np.asarray(vectors[0], dtype=np.complex128)
    for v in vectors[1:]:
        out = np.kron(out, np.asarray(v, dtype=np.complex128))
    return out
