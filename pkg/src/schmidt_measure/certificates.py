"""Exact rank certificates for small tensors.

ALS gives upper witnesses; everything here produces the matching exact
or lower information for the cases where that is actually decidable:

* three qubit-sized modes: rank is 1, 2 or 3, decided by flattening
  ranks plus the degree-four invariant of the 2x2x2 cell,
* conciseness reduction: compressing every mode to its mode rank (and
  dropping rank-one modes) preserves rank and often lands in the cell
  above,
* slice pencils: for a qubit mode with slices S0, S1 the rank is at
  least one plus the smallest rank in the pencil S0 + t S1, which is
  decidable for 2x2 and 2x2x2 slices by polynomial root analysis.

All inputs are plain complex ndarrays shaped with one axis per block.
Tolerances are relative to a unit-normalised tensor.
"""

from __future__ import annotations

import itertools

import numpy as np

from .errors import InputError
from .linalg import numerical_rank

CERT_TOL = 1e-10


def hyperdeterminant_222(tensor: np.ndarray) -> complex:
    """Degree-four invariant of a 2x2x2 tensor; zero exactly on the
    closure of the rank-2-degenerate (W-type) orbit."""
    t = np.asarray(tensor, dtype=np.complex128)
    if t.shape != (2, 2, 2):
        raise InputError("hyperdeterminant needs a 2x2x2 tensor")

    def e(i, j, k):
        return t[i, j, k]

    squares = (e(0, 0, 0)**2 * e(1, 1, 1)**2 + e(0, 0, 1)**2 * e(1, 1, 0)**2
               + e(0, 1, 0)**2 * e(1, 0, 1)**2 + e(1, 0, 0)**2 * e(0, 1, 1)**2)
    pairs = (e(0, 0, 0) * e(0, 0, 1) * e(1, 1, 0) * e(1, 1, 1)
             + e(0, 0, 0) * e(0, 1, 0) * e(1, 0, 1) * e(1, 1, 1)
             + e(0, 0, 0) * e(1, 0, 0) * e(0, 1, 1) * e(1, 1, 1)
             + e(0, 0, 1) * e(0, 1, 0) * e(1, 0, 1) * e(1, 1, 0)
             + e(0, 0, 1) * e(1, 0, 0) * e(0, 1, 1) * e(1, 1, 0)
             + e(0, 1, 0) * e(1, 0, 0) * e(0, 1, 1) * e(1, 0, 1))
    quads = (e(0, 0, 0) * e(0, 1, 1) * e(1, 0, 1) * e(1, 1, 0)
             + e(0, 0, 1) * e(0, 1, 0) * e(1, 0, 0) * e(1, 1, 1))
    return complex(squares - 2 * pairs + 4 * quads)


def _mode_flattening(tensor: np.ndarray, mode: int) -> np.ndarray:
    return np.moveaxis(tensor, mode, 0).reshape(tensor.shape[mode], -1)


def rank_222(tensor: np.ndarray, tol: float = CERT_TOL) -> int:
    """Exact tensor rank of a nonzero 2x2x2 tensor."""
    t = np.asarray(tensor, dtype=np.complex128)
    if t.shape != (2, 2, 2):
        raise InputError("rank_222 needs a 2x2x2 tensor")
    nrm = np.linalg.norm(t)
    if nrm == 0.0:
        return 0
    t = t / nrm
    franks = [numerical_rank(_mode_flattening(t, m), tol) for m in range(3)]
    if max(franks) == 1:
        return 1
    if min(franks) == 1:
        return 2
    return 2 if abs(hyperdeterminant_222(t)) > tol else 3


def concise_core(tensor: np.ndarray, tol: float = CERT_TOL):
    """Compress each mode onto its row span and drop trivial modes.

    Returns ``(core, kept_modes, mode_ranks)``.  The core carries the
    same tensor rank as the input; rank-one modes factor out entirely and
    are removed from the shape.
    """
    t = np.asarray(tensor, dtype=np.complex128)
    nrm = np.linalg.norm(t)
    if nrm == 0.0:
        raise InputError("cannot take the core of the zero tensor")
    t = t / nrm
    mode_ranks = []
    for m in range(t.ndim):
        flat = _mode_flattening(t, m)
        u, s, _ = np.linalg.svd(flat, full_matrices=False)
        r = int(np.sum(s > tol * s[0]))
        mode_ranks.append(r)
        proj = u[:, :r].conj().T
        t = np.moveaxis(np.tensordot(proj, np.moveaxis(t, m, 0), axes=1), 0, m)
    kept = tuple(m for m, r in enumerate(mode_ranks) if r > 1)
    core = t.reshape([r for r in mode_ranks if r > 1]) if kept else t.reshape([])
    return core, kept, tuple(mode_ranks)


# -- pencil analysis ---------------------------------------------------------

def _poly_is_zero(coeffs, tol):
    return all(abs(c) <= tol for c in coeffs)


def _poly_roots(coeffs, tol):
    """Roots of c[0] + c[1] t + ... with near-zero leading terms trimmed."""
    arr = np.array(list(coeffs), dtype=np.complex128)
    while arr.size and abs(arr[-1]) <= tol:
        arr = arr[:-1]
    if arr.size <= 1:
        return []
    return list(np.roots(arr[::-1]))


def _common_roots(polys, tol):
    """Finite points where every polynomial in the list vanishes.

    Returns ``(roots, identically_zero)``; the flag is set when every
    polynomial is the zero polynomial, in which case any point works.
    """
    alive = [p for p in polys if not _poly_is_zero(p, tol)]
    if not alive:
        return [], True
    candidates = _poly_roots(alive[0], tol)
    roots = []
    for lam in candidates:
        scale = max(1.0, abs(lam)) ** max(len(p) - 1 for p in alive)
        if all(abs(np.polyval(p[::-1], lam)) <= 100 * tol * scale
               for p in alive):
            roots.append(lam)
    return roots, False


def _quadratic_minors(a: np.ndarray, b: np.ndarray):
    """Coefficients of every 2x2 minor of the 2xN pencil A + t B, each a
    quadratic ``(c0, c1, c2)`` in t."""
    n = a.shape[1]
    out = []
    for i, j in itertools.combinations(range(n), 2):
        c0 = a[0, i] * a[1, j] - a[0, j] * a[1, i]
        c2 = b[0, i] * b[1, j] - b[0, j] * b[1, i]
        c1 = (a[0, i] * b[1, j] + b[0, i] * a[1, j]
              - a[0, j] * b[1, i] - b[0, j] * a[1, i])
        out.append((c0, c1, c2))
    return out


def matrix_pencil_min_rank(a: np.ndarray, b: np.ndarray,
                           tol: float = CERT_TOL) -> int:
    """Smallest rank of A + t B over finite complex t, for 2x2 slices."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.shape != (2, 2) or b.shape != (2, 2):
        raise InputError("matrix pencils are only analysed at shape 2x2")
    scale = max(np.linalg.norm(a), np.linalg.norm(b))
    if scale == 0.0:
        return 0
    a, b = a / scale, b / scale
    # rank 0 at t = -a/b requires proportional slices
    stacked = np.stack([a.reshape(-1), b.reshape(-1)])
    if numerical_rank(stacked, tol) <= 1 and np.linalg.norm(b) > tol:
        return 0
    # determinant of the 2x2 pencil as a quadratic in t
    c0 = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    c2 = b[0, 0] * b[1, 1] - b[0, 1] * b[1, 0]
    c1 = (a[0, 0] * b[1, 1] + b[0, 0] * a[1, 1]
          - a[0, 1] * b[1, 0] - b[0, 1] * a[1, 0])
    if _poly_is_zero((c0, c1, c2), tol):
        return 1
    return 1 if _poly_roots((c0, c1, c2), tol) else 2


def _det_pencil_samples(s0: np.ndarray, s1: np.ndarray):
    """The 2x2x2 invariant along the pencil, sampled at five points; a
    degree-four polynomial vanishing at all five is identically zero."""
    points = [0.0, 1.0, -1.0, 1j, -1j]
    return points, [hyperdeterminant_222(s0 + lam * s1) for lam in points]


def _flattening_rank_le_one_points(s0, s1, mode, tol):
    """Parameters where the given mode flattening of S0 + t S1 drops to
    rank <= 1; ``(points, everywhere)``."""
    a = _mode_flattening(s0, mode)
    b = _mode_flattening(s1, mode)
    return _common_roots(_quadratic_minors(a, b), tol)


def pencil_min_rank_222(s0: np.ndarray, s1: np.ndarray,
                        tol: float = CERT_TOL) -> int:
    """Smallest tensor rank in the pencil S0 + t S1 of 2x2x2 slices,
    over finite complex t."""
    s0 = np.asarray(s0, dtype=np.complex128)
    s1 = np.asarray(s1, dtype=np.complex128)
    if s0.shape != (2, 2, 2) or s1.shape != (2, 2, 2):
        raise InputError("pencil_min_rank_222 needs 2x2x2 slices")
    scale = max(np.linalg.norm(s0), np.linalg.norm(s1))
    if scale == 0.0:
        return 0
    s0, s1 = s0 / scale, s1 / scale

    stacked = np.stack([s0.reshape(-1), s1.reshape(-1)])
    if numerical_rank(stacked, tol) <= 1 and np.linalg.norm(s1) > tol:
        return 0

    # rank one somewhere: all three flattenings degenerate at a common t
    minors = []
    for mode in range(3):
        minors.extend(_quadratic_minors(_mode_flattening(s0, mode),
                                        _mode_flattening(s1, mode)))
    roots, everywhere = _common_roots(minors, tol)
    if everywhere:
        return 1
    for lam in roots:
        if rank_222(s0 + lam * s1, tol) <= 1:
            return 1

    # rank two somewhere: either the invariant is not identically zero,
    # or a single flattening degenerates at some parameter
    _, samples = _det_pencil_samples(s0, s1)
    if any(abs(v) > tol for v in samples):
        return 2
    for mode in range(3):
        pts, everywhere = _flattening_rank_le_one_points(s0, s1, mode, tol)
        if everywhere:
            return 2
        for lam in pts:
            if rank_222(s0 + lam * s1, tol) <= 2:
                return 2
    return 3


def pencil_max_rank_at_most_two(s0: np.ndarray, s1: np.ndarray,
                                tol: float = CERT_TOL) -> bool:
    """Certify that every member of span{S0, S1} has tensor rank <= 2.

    Rank three requires the degree-four invariant to vanish while all
    flattenings stay at rank two, so it is excluded by checking the
    invariant's roots (both pencil orientations cover the projective
    line).
    """
    s0 = np.asarray(s0, dtype=np.complex128)
    s1 = np.asarray(s1, dtype=np.complex128)
    if s0.shape != (2, 2, 2) or s1.shape != (2, 2, 2):
        raise InputError("pencil_max_rank_at_most_two needs 2x2x2 slices")
    scale = max(np.linalg.norm(s0), np.linalg.norm(s1))
    if scale == 0.0:
        return True
    s0, s1 = s0 / scale, s1 / scale

    for base, direction in ((s0, s1), (s1, s0)):
        if np.linalg.norm(direction) <= tol:
            continue
        pts, samples = _det_pencil_samples(base, direction)
        if all(abs(v) <= tol for v in samples):
            # invariant vanishes on the whole line: every point must have
            # a degenerate flattening for the certificate to go through
            degenerate_everywhere = False
            for mode in range(3):
                _, everywhere = _flattening_rank_le_one_points(
                    base, direction, mode, tol)
                if everywhere:
                    degenerate_everywhere = True
                    break
            if not degenerate_everywhere:
                return False
            continue
        # invariant vanishes only at finitely many points; interpolate the
        # quartic from the five samples and check rank at each root
        vand = np.vander(np.array(pts, dtype=np.complex128), 5,
                         increasing=True)
        coeffs = np.linalg.solve(vand, np.array(samples))
        for lam in _poly_roots(tuple(coeffs), tol):
            if rank_222(base + lam * direction, tol) > 2:
                return False
    return True


def substitution_lower_bound(tensor: np.ndarray,
                             tol: float = CERT_TOL):
    """Lower bound on tensor rank from qubit-mode slice pencils.

    For any qubit mode write T = e0 (x) S0 + e1 (x) S1; whenever the
    spectator slice is nonzero the rank is at least one plus the minimum
    rank along the slice pencil.  Applies to tensors whose remaining
    modes form a 2x2 or 2x2x2 cell; returns None when no mode qualifies.
    """
    t = np.asarray(tensor, dtype=np.complex128)
    nrm = np.linalg.norm(t)
    if nrm == 0.0:
        return None
    t = t / nrm
    best = None
    for mode in range(t.ndim):
        if t.shape[mode] != 2:
            continue
        rest_shape = t.shape[:mode] + t.shape[mode + 1:]
        if rest_shape not in ((2, 2), (2, 2, 2)):
            continue
        s0 = np.take(t, 0, axis=mode)
        s1 = np.take(t, 1, axis=mode)
        solver = (matrix_pencil_min_rank if len(rest_shape) == 2
                  else pencil_min_rank_222)
        for base, direction in ((s0, s1), (s1, s0)):
            if np.linalg.norm(direction) <= tol:
                continue
            bound = 1 + solver(base, direction, tol)
            if best is None or bound > best:
                best = bound
    return best


def exact_rank_via_core(tensor: np.ndarray, tol: float = CERT_TOL):
    """Exact tensor rank when the concise core is small enough to decide.

    Covers cores with at most three effective modes of dimension two
    (vectors, matrices and the 2x2x2 cell).  Returns None when the core
    is out of reach.
    """
    core, kept, _ = concise_core(tensor, tol)
    if len(kept) == 0:
        return 1
    if len(kept) == 1:
        return 1
    if len(kept) == 2:
        return numerical_rank(core, tol)
    if len(kept) == 3 and core.shape == (2, 2, 2):
        return rank_222(core, tol)
    return None
