"""Measure endpoints for density operators.

The centrepiece is an exact route for states whose range, grouped by the
split, supports only measures zero and one: there the measure equals one
minus the largest weight of product states subtractable while keeping
the remainder positive.  When the product directions inside the range
form a finite set they are enumerated algebraically and the weight
problem becomes a tiny determinant-barrier programme, solved here to
certificate accuracy.  States with a continuum of product directions
fall back to greedy subtraction with joint weight re-optimisation, which
yields an upper endpoint always and an exact value for two qubits when
the remainder collapses to a pure entangled state.

Lower endpoints additionally come from a flagged-mixture rule: when one
block carries an orthogonal classical marker separating the state into
sectors, the measure is bounded below by the sector average.  The rule
is applied only after the orthogonality precondition has been verified
on the matrix itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import InputError, InvariantBreach
from .linalg import (
    group_density,
    numerical_rank,
    partial_transpose,
    haar_isometry,
    ungroup_amplitudes,
    ungroup_density,
)
from .pure import FitOptions, rank_bracket, schmidt_measure_pure
from .splits import Split
from .states import DensityOperator, Ensemble, PureState

PSD_SLACK = 1e-9
GAIN_TOL = 1e-8
GAP_TOL = 1e-6
_RANGE_CUT = 1e-11
_RAY_SIGMA = 1e-9
_WEIGHT_DROP = 1e-10


@dataclass(frozen=True)
class MixedOptions:
    """Search budgets for the mixed-state routines.

    ``extra_states`` caps ensemble sizes at ``rank + extra_states``;
    ``samples`` is the total random-isometry budget of the ensemble
    search and ``refine_rounds`` the number of pairwise refinement
    passes.  ``fit`` configures the pure-state brackets evaluated on
    ensemble members.
    """

    extra_states: int = 4
    samples: int = 96
    refine_rounds: int = 3
    seed: int = 0
    fit: FitOptions = FitOptions()


class MixedMeasureValue:
    """Certified bracket ``[lower, upper]`` on a mixed state's measure.

    ``witness`` is an ensemble achieving ``upper`` as its average pure
    measure, when one was constructed.  ``exact`` is derived, never set:
    it holds when the endpoints meet within 1e-6.
    """

    __slots__ = ("lower", "upper", "witness")

    def __init__(self, lower: float, upper: float,
                 witness: Optional[Ensemble]):
        lower = float(lower)
        upper = float(upper)
        if lower < -1e-12:
            raise InvariantBreach(f"negative lower endpoint {lower!r}")
        if lower > upper + PSD_SLACK:
            raise InvariantBreach(
                f"lower endpoint {lower!r} exceeds upper endpoint {upper!r}")
        object.__setattr__(self, "lower", max(0.0, min(lower, upper)))
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "witness", witness)

    def __setattr__(self, *_):
        raise AttributeError("MixedMeasureValue is immutable")

    @property
    def exact(self) -> bool:
        return self.upper - self.lower <= GAP_TOL

    def __str__(self):
        if self.exact:
            return f"{self.upper:.6f}"
        return f"[{self.lower:.6f}, {self.upper:.6f}]"

    def __repr__(self):
        return f"MixedMeasureValue(lower={self.lower!r}, upper={self.upper!r})"


class BsaResult:
    """Best product-state subtraction found for a state and 2-split.

    ``s`` is the total subtracted weight, ``separable_part`` the list of
    ``(weight, product state)`` pairs on the original party layout and
    ``remainder`` the normalised entangled rest (absent when ``s`` is
    within 1e-6 of one).  ``certified_feasible`` records whether the
    weight is known to be maximal: either the product directions inside
    the range were enumerated exhaustively, or two-qubit remainder
    evidence (pure and entangled) was obtained.  Construction re-checks
    feasibility, so every instance is a valid subtraction.
    """

    __slots__ = ("split", "s", "separable_part", "remainder",
                 "certified_feasible")

    def __init__(self, rho: DensityOperator, split: Split, s: float,
                 separable_part, remainder: Optional[DensityOperator],
                 certified_feasible: bool):
        s = float(s)
        parts = tuple((float(w), state) for w, state in separable_part)
        if s < -1e-12 or s > 1 + 1e-9:
            raise InvariantBreach(f"separable weight {s!r} outside [0, 1]")
        total = sum(w for w, _ in parts)
        if abs(total - s) > 1e-8:
            raise InvariantBreach("part weights do not sum to the weight s")
        d = rho.layout.total_dim
        subtracted = np.zeros((d, d), dtype=np.complex128)
        for w, state in parts:
            if w <= 0:
                raise InvariantBreach("separable part weights must be positive")
            if state.layout != rho.layout:
                raise InputError("separable part lives on a different layout")
            amps = state.amplitudes
            subtracted += w * np.outer(amps, amps.conj())
        gap = np.linalg.eigvalsh(rho.matrix - subtracted)[0]
        if gap < -PSD_SLACK:
            raise InvariantBreach(
                f"subtraction is infeasible: remainder eigenvalue {gap:.3e}")
        if remainder is None:
            if 1 - s > 1e-6:
                raise InvariantBreach("missing remainder for weight below one")
        else:
            model = subtracted + (1 - s) * remainder.matrix
            if not np.allclose(model, rho.matrix, atol=1e-7):
                raise InvariantBreach("parts and remainder do not reassemble")
        object.__setattr__(self, "split", split)
        object.__setattr__(self, "s", min(max(s, 0.0), 1.0))
        object.__setattr__(self, "separable_part", parts)
        object.__setattr__(self, "remainder", remainder)
        object.__setattr__(self, "certified_feasible", bool(certified_feasible))

    def __setattr__(self, *_):
        raise AttributeError("BsaResult is immutable")

    def __repr__(self):
        return (f"BsaResult(s={self.s!r}, terms={len(self.separable_part)}, "
                f"certified={self.certified_feasible})")


# -- small algebra helpers ----------------------------------------------------

def _range_basis(matrix: np.ndarray, cut: float = _RANGE_CUT):
    """Orthonormal basis of the range plus the compressed matrix."""
    evals, evecs = np.linalg.eigh(matrix)
    keep = evals > cut * max(evals[-1], 0.0)
    basis = evecs[:, keep]
    compressed = basis.conj().T @ matrix @ basis
    compressed = 0.5 * (compressed + compressed.conj().T)
    return basis, compressed


def _poly_from_samples(values, points):
    """Coefficients (highest first) interpolated from sample values."""
    n = len(points)
    vand = np.vander(np.asarray(points, dtype=np.complex128), n)
    return np.linalg.solve(vand, np.asarray(values, dtype=np.complex128))


def _trimmed_roots(coeffs):
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    scale = np.max(np.abs(coeffs))
    if scale == 0.0:
        return None
    coeffs = coeffs / scale
    lead = np.nonzero(np.abs(coeffs) > 1e-12)[0]
    if len(lead) == 0:
        return None
    trimmed = coeffs[lead[0]:]
    if len(trimmed) == 1:
        return []
    return list(np.roots(trimmed))


def _pencil_product_rays(mats):
    """Coefficient vectors x with ``sum x_i mats_i`` of rank one.

    Each matrix has exactly two columns.  A combination has rank at most
    one exactly when some direction (s, t) annihilates both columns at
    once, i.e. when x lies in the kernel of s*A + t*B for the stacked
    first-column and second-column maps A and B.  Kernels appear only
    where the r x r minors of the pencil vanish, a one-variable root
    problem.  Returns None when the ray set is not finite or the shape
    rules the reduction out.
    """
    r = len(mats)
    d1 = mats[0].shape[0]
    if d1 < r:
        return None
    a = np.stack([m[:, 0] for m in mats], axis=1)
    b = np.stack([m[:, 1] for m in mats], axis=1)
    scale = max(np.linalg.norm(a), np.linalg.norm(b))
    if scale == 0.0:
        return None

    # minor polynomials of t*A + B on every r-row subset, by interpolation
    points = [np.exp(2j * np.pi * k / (r + 1)) for k in range(r + 1)]
    pencils = [p * a + b for p in points]
    best_coeffs = None
    best_size = 0.0
    from itertools import combinations
    for rows in combinations(range(d1), r):
        vals = [np.linalg.det(p[list(rows), :]) for p in pencils]
        coeffs = _poly_from_samples(vals, points)
        size = float(np.max(np.abs(coeffs)))
        if size > best_size:
            best_size = size
            best_coeffs = coeffs
    if best_coeffs is None or best_size <= 1e-13 * scale ** r:
        return None

    candidates = _trimmed_roots(best_coeffs)
    if candidates is None:
        return None
    pencil_list = [float(t.real) + 1j * float(t.imag) for t in candidates]
    rays = []
    for t in pencil_list + ["inf"]:
        pencil = a if t == "inf" else t * a + b
        u, sig, vh = np.linalg.svd(pencil)
        if sig[0] == 0.0:
            return None
        # multiple roots are recovered with square-root-of-epsilon error,
        # so candidacy uses a loose gate; the polish and the final
        # rank-one test downstream arbitrate.  Two near-null directions
        # at one pencil point still mean a whole plane of rays.
        small = sig <= 1e-4 * sig[0]
        nullity = int(np.sum(small)) + max(0, r - len(sig))
        if nullity == 0:
            continue
        if nullity > 1:
            return None
        rays.append(vh[-1, :].conj())
    return rays


def _polish_ray_coords(x, mats):
    """Sharpen a near-rank-one combination by alternating projection."""
    stack = np.stack([m.reshape(-1) for m in mats], axis=1)
    for _ in range(6):
        m = sum(c * mat for c, mat in zip(x, mats))
        u, sig, vh = np.linalg.svd(m)
        target = sig[0] * np.outer(u[:, 0], vh[0, :])
        x, *_ = np.linalg.lstsq(stack, target.reshape(-1), rcond=None)
        norm = np.linalg.norm(x)
        if norm == 0.0:
            return None
        x = x / norm
    return x


def _block_flattenings(vec, dims):
    """Each block-versus-rest matricisation of a grouped vector."""
    tensor = vec.reshape(dims)
    k = len(dims)
    mats = []
    for b in range(k):
        mats.append(np.moveaxis(tensor, b, 0).reshape(dims[b], -1))
    return mats


def _product_rays(basis: np.ndarray, dims) -> Optional[list]:
    """All rays in the span that are product across every block.

    Works through a block of dimension two: rank-one combinations across
    that cut form a finite, exhaustively computed candidate list (or a
    continuum, reported as None), which is then filtered down to the
    fully product ones.  Returns pairs (coords, grouped vector).
    """
    r = basis.shape[1]
    k = len(dims)
    candidates = None
    for b in range(k):
        if dims[b] != 2:
            continue
        mats = []
        for i in range(r):
            tensor = basis[:, i].reshape(dims)
            mats.append(np.moveaxis(tensor, b, -1).reshape(-1, 2))
        found = _pencil_product_rays(mats)
        if found is None:
            continue
        polished = []
        for x in found:
            x = _polish_ray_coords(x, mats)
            if x is None:
                continue
            m = sum(c * mat for c, mat in zip(x, mats))
            sig = np.linalg.svd(m, compute_uv=False)
            if sig[1] <= _RAY_SIGMA * sig[0]:
                polished.append(x)
        candidates = polished
        break
    if candidates is None:
        return None
    rays = []
    for x in candidates:
        vec = basis @ x
        vec = vec / np.linalg.norm(vec)
        if any(numerical_rank(m, 1e-8) > 1 for m in _block_flattenings(vec, dims)):
            continue
        if any(abs(np.vdot(prev, vec)) > 1 - 1e-8 for _, prev in rays):
            continue
        coords = basis.conj().T @ vec
        rays.append((coords / np.linalg.norm(coords), vec))
    return rays


def _ray_weight_barrier(rho_r: np.ndarray, coords, gap_tol: float = 1e-11):
    """Maximise the total weight on fixed directions with the remainder
    positive semidefinite, by a determinant log-barrier with Newton steps.

    All quantities live in the range's orthonormal coordinates, so the
    constraint matrix is strictly positive at weight zero and the path
    is followed until the duality gap drops below ``gap_tol``.  Returns
    the weight total, the weights, the final constraint matrix and the
    final path parameter (whose inverse scales the dual certificate).
    """
    m = len(coords)
    r = rho_r.shape[0]
    if m == 0:
        return 0.0, np.zeros(0), rho_r.copy(), math.inf
    qc = np.stack(coords, axis=1)
    lam_min = float(np.linalg.eigvalsh(rho_r)[0])
    w = np.full(m, 0.25 * lam_min / m)

    def constraint(weights):
        return rho_r - (qc * weights) @ qc.conj().T

    t = 1.0
    while True:
        for _ in range(60):
            c = constraint(w)
            x = np.linalg.solve(c, qc)
            g = qc.conj().T @ x
            grad = t + 1.0 / w - np.real(np.diag(g))
            hess = np.abs(g) ** 2 + np.diag(1.0 / w ** 2)
            ridge = 1e-14 * float(np.max(np.diag(hess).real))
            for _ in range(8):
                try:
                    step = np.linalg.solve(
                        hess + ridge * np.eye(m), grad)
                    break
                except np.linalg.LinAlgError:
                    ridge *= 1e3
            else:
                break
            if float(grad @ step) <= 1e-18:
                break
            alpha = 1.0
            for _ in range(50):
                trial = w + alpha * step
                if np.all(trial > 0) and \
                        np.linalg.eigvalsh(constraint(trial))[0] > 0:
                    break
                alpha *= 0.6
            else:
                break
            w = w + alpha * step
        if (m + r) / t < gap_tol:
            break
        t *= 8.0
    return float(np.sum(w)), w, constraint(w), t


# -- greedy subtraction for full-range states ---------------------------------

def _best_subtractions(remainder: np.ndarray, d1: int, d2: int,
                       rng: np.random.Generator, eps: float,
                       n_random: int = 8, warm_starts=None):
    """Product directions with large subtractable weight against the
    remainder, by alternating smallest-eigenvector steps on a softened
    inverse.

    The exact pricing metric is the inverse of the remainder, which is
    close to singular near the optimum; flooring its spectrum at ``eps``
    times the largest eigenvalue keeps the eigenvector iteration stable,
    and the joint re-optimisation decides the real worth of a candidate.
    Returns deduplicated candidates, best first.
    """
    evals, evecs = np.linalg.eigh(remainder)
    vmax = float(evals[-1])
    if vmax <= 1e-13:
        return []
    reg = np.maximum(evals, eps * vmax)
    inv = (evecs / reg) @ evecs.conj().T
    kern = inv.reshape(d1, d2, d1, d2)

    marg = np.trace(remainder.reshape(d1, d2, d1, d2), axis1=1, axis2=3)
    seeds = list(warm_starts or [])
    seeds.extend(np.eye(d1)[i] for i in range(d1))
    seeds.extend(np.linalg.eigh(marg)[1][:, -i].copy() for i in (1, 2))
    for _ in range(n_random):
        z = rng.standard_normal(d1) + 1j * rng.standard_normal(d1)
        seeds.append(z / np.linalg.norm(z))

    found = []
    for e in seeds:
        e = np.asarray(e, dtype=np.complex128)
        e /= np.linalg.norm(e)
        f = None
        last = np.inf
        for _ in range(60):
            m_f = np.einsum("i,iajb,j->ab", e.conj(), kern, e)
            f = np.linalg.eigh(0.5 * (m_f + m_f.conj().T))[1][:, 0]
            m_e = np.einsum("a,iajb,b->ij", f.conj(), kern, f)
            vals_e, vecs_e = np.linalg.eigh(0.5 * (m_e + m_e.conj().T))
            e = vecs_e[:, 0]
            if abs(vals_e[0] - last) < 1e-13 * max(1.0, abs(last)):
                break
            last = vals_e[0]
        vec = np.kron(e, f)
        quad = float(np.real(vec.conj() @ inv @ vec))
        if quad <= 0:
            continue
        if any(abs(np.vdot(vec, v)) > 1 - 1e-9 for _, v in found):
            continue
        found.append((1.0 / quad, vec))
    found.sort(key=lambda pair: -pair[0])
    return found[:12]


_EPS_LADDER = (1e-1, 1e-2, 1e-4, 1e-7)


def _greedy_pool(grouped: np.ndarray, d1: int, d2: int, seed: int):
    """Column generation: price new product directions against the
    remainder, re-optimise all weights jointly, stop once a few pricing
    rounds in a row fail to move the total.

    Pricing runs a ladder of regularisation strengths every round.  The
    optimum often corners the remainder at a degenerate vertex where a
    sharply-priced metric cannot see improving directions any more; the
    softly-priced levels stay informative there.
    """
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0xB5A)))
    basis, rho_r = _range_basis(grouped)
    pool_vecs = []
    pool_coords = []
    s = 0.0
    weights = np.zeros(0)
    c_r = rho_r
    remainder = grouped
    stall = 0
    for _ in range(40):
        added = False
        for eps in _EPS_LADDER:
            for _, vec in _best_subtractions(remainder, d1, d2, rng, eps,
                                             n_random=4):
                if any(abs(np.vdot(vec, v)) > 1 - 1e-9 for v in pool_vecs):
                    continue
                coords = basis.conj().T @ vec
                norm = float(np.linalg.norm(coords))
                if 1.0 - norm > 1e-7:
                    continue
                pool_vecs.append(vec)
                pool_coords.append(coords / norm)
                added = True
        if added:
            new_s, weights, c_r = _ray_weight_barrier(rho_r, pool_coords)[:3]
            pool_vecs, pool_coords, weights = _prune(
                pool_vecs, pool_coords, weights)
            remainder = basis @ c_r @ basis.conj().T
        else:
            new_s = s
        stall = stall + 1 if new_s - s < 1e-10 else 0
        s = max(s, new_s)
        if stall >= 4 or len(pool_vecs) > 150:
            break
    s, pool_vecs, pool_coords, weights, c_r = _reseat_pool(
        rho_r, basis, pool_vecs, pool_coords, weights, c_r, d1, d2, rng, s)
    s, pool_vecs, pool_coords, weights, c_r = _consolidate(
        rho_r, pool_vecs, pool_coords, weights, c_r, s)
    return s, pool_vecs, weights, basis, c_r


def _prune(pool_vecs, pool_coords, weights, floor=1e-12):
    keep = [i for i in range(len(pool_vecs)) if weights[i] > floor]
    if len(keep) == len(pool_vecs):
        return pool_vecs, pool_coords, weights
    return ([pool_vecs[i] for i in keep], [pool_coords[i] for i in keep],
            np.asarray([weights[i] for i in keep]))


def _consolidate(rho_r, pool_vecs, pool_coords, weights, c_r, s):
    """Re-solve on the smallest weight support that loses nothing.

    Degenerate optima spread weight across many near-parallel columns;
    the subtraction itself is achievable on far fewer.  Thresholds are
    tried from coarse to fine and the first support whose re-solve stays
    within 1e-9 of the full total wins.
    """
    if len(pool_vecs) <= 1:
        return s, pool_vecs, pool_coords, weights, c_r
    for threshold in (1e-3, 1e-5, 1e-7, 1e-10):
        keep = [i for i in range(len(pool_vecs))
                if weights[i] > threshold * max(s, 1e-9)]
        if not keep:
            continue
        vecs = [pool_vecs[i] for i in keep]
        coords = [pool_coords[i] for i in keep]
        new_s, new_w, new_c, _ = _ray_weight_barrier(rho_r, coords)
        if new_s >= s - 1e-9:
            return max(s, new_s), vecs, coords, new_w, new_c
    return s, pool_vecs, pool_coords, weights, c_r


def _reseat_pool(rho_r, basis, pool_vecs, pool_coords, weights, c_r,
                 d1, d2, rng, s):
    """Polish the active directions one at a time.

    Each active column is handed its weight back, re-priced against that
    partial remainder from a warm start, and the improved direction joins
    the pool before a joint re-solve.  This closes the slow tail that
    column generation with a fixed pool leaves behind.
    """
    if len(pool_vecs) == 0:
        return s, pool_vecs, pool_coords, weights, c_r
    for _ in range(14):
        active = [i for i in range(len(pool_vecs)) if weights[i] > 1e-10]
        active.sort(key=lambda i: -weights[i])
        added = False
        for i in active[:16]:
            vec = pool_vecs[i]
            partial = basis @ c_r @ basis.conj().T \
                + weights[i] * np.outer(vec, vec.conj())
            warm = np.linalg.svd(vec.reshape(d1, d2))[0][:, 0]
            for eps in (1e-3, 1e-6):
                cands = _best_subtractions(partial, d1, d2, rng, eps,
                                           n_random=1, warm_starts=[warm])
                for _, new_vec in cands[:1]:
                    if any(abs(np.vdot(new_vec, v)) > 1 - 1e-11
                           for v in pool_vecs):
                        continue
                    coords = basis.conj().T @ new_vec
                    norm = float(np.linalg.norm(coords))
                    if 1.0 - norm > 1e-7:
                        continue
                    pool_vecs.append(new_vec)
                    pool_coords.append(coords / norm)
                    added = True
        if not added:
            break
        new_s, weights, c_r = _ray_weight_barrier(rho_r, pool_coords)[:3]
        pool_vecs, pool_coords, weights = _prune(
            pool_vecs, pool_coords, weights)
        gain = new_s - s
        s = max(s, new_s)
        if gain < 1e-11:
            break
    return s, pool_vecs, pool_coords, weights, c_r


# -- public operations ---------------------------------------------------------

def _dual_weight_bound(rho_r, basis, pool_coords, d1, d2, seed):
    """Upper bound on the best possible subtraction weight, from duality.

    Any positive matrix Z bounds the weight by trace(rho Z) divided by
    the smallest product score against Z.  The inverse of the final
    barrier constraint matrix, scaled by the final path parameter, is
    such a Z, and at barrier stationarity its pairing with the state is
    the weight total plus the duality gap, an identity used here instead
    of a trace product.  Off the range of the state, Z is padded so
    out-of-range directions never realise the minimum.  The product
    minimisation is multistart alternating descent, so the bound is
    strong evidence rather than proof; returns infinity when no
    informative bound was obtained.
    """
    r = rho_r.shape[0]
    if len(pool_coords) == 0:
        return math.inf
    coords = list(pool_coords)
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0xD0A1)))
    off_range = np.eye(d1 * d2) - basis @ basis.conj().T
    best_bound = math.inf
    for _ in range(12):
        m = len(coords)
        # a moderate path point: far enough out that the gap term is
        # small, near enough that the constraint matrix stays well
        # conditioned and Newton actually reaches stationarity in double
        # precision
        s, _, c_fin, t_fin = _ray_weight_barrier(rho_r, coords,
                                                 gap_tol=1e-7)
        evals, evecs = np.linalg.eigh(c_fin)
        if evals[0] <= 0 or not math.isfinite(t_fin):
            return best_bound
        paired = s + (m + r) / t_fin
        z_r = (evecs / (evals * t_fin)) @ evecs.conj().T
        z = basis @ z_r @ basis.conj().T
        z = z + float(np.max(np.abs(z))) * 10.0 * off_range
        kern = z.reshape(d1, d2, d1, d2)
        starts = [np.eye(d1)[i] for i in range(d1)]
        for _ in range(12):
            v = rng.standard_normal(d1) + 1j * rng.standard_normal(d1)
            starts.append(v / np.linalg.norm(v))
        mu = np.inf
        dip = None
        for e in starts:
            e = np.asarray(e, dtype=np.complex128)
            e /= np.linalg.norm(e)
            f = np.zeros(d2)
            last = np.inf
            for _ in range(80):
                m_f = np.einsum("i,iajb,j->ab", e.conj(), kern, e)
                f = np.linalg.eigh(0.5 * (m_f + m_f.conj().T))[1][:, 0]
                m_e = np.einsum("a,iajb,b->ij", f.conj(), kern, f)
                vals_e, vecs_e = np.linalg.eigh(0.5 * (m_e + m_e.conj().T))
                e = vecs_e[:, 0]
                if abs(vals_e[0] - last) < 1e-14 * max(1.0, abs(last)):
                    break
                last = vals_e[0]
            if float(last) < mu:
                mu = float(last)
                dip = np.kron(e, f)
        if not math.isfinite(mu) or mu <= 0:
            return best_bound
        best_bound = min(best_bound, paired / mu)
        if mu >= 1.0 - 1e-6:
            break
        # the minimiser lies between pool columns; pinning it as a new
        # column lifts the dual there and tightens the next bound
        dip_coords = basis.conj().T @ dip
        norm = float(np.linalg.norm(dip_coords))
        if 1.0 - norm > 1e-7:
            break
        dip_coords = dip_coords / norm
        if any(abs(np.vdot(dip_coords, c)) > 1 - 1e-12 for c in coords):
            break
        coords.append(dip_coords)
    return best_bound


def ppt_check(rho: DensityOperator, split: Split) -> str:
    """Partial-transpose test across a 2-split.

    A negative eigenvalue proves entanglement for any dimensions; a
    nonnegative spectrum decides separability only for 2x2 and 2x3
    blocks, anything larger stays inconclusive.
    """
    if split.k != 2:
        raise InputError("the partial-transpose test needs a 2-split")
    d1, d2 = split.block_dims(rho.layout)
    pt = partial_transpose(group_density(rho, split), d1, d2)
    low = float(np.linalg.eigvalsh(pt)[0])
    if low < -1e-10:
        return "entangled"
    if sorted((d1, d2)) in ([2, 2], [2, 3]):
        return "separable"
    return "inconclusive"


def _pt_weight_cap(grouped: np.ndarray, d1: int, d2: int) -> float:
    """Largest product-state weight any 2-split decomposition can carry.

    The partial transpose of a normalised state never has an eigenvalue
    below -1/2, and the minimum eigenvalue is superadditive under
    mixing.  Writing ``rho = s*sigma + (1 - s)*tau`` with ``sigma``
    separable therefore forces ``eigmin(pt(rho)) >= -(1 - s)/2``, which
    rearranges into the cap returned here.
    """
    low = float(np.linalg.eigvalsh(partial_transpose(grouped, d1, d2))[0])
    return 1.0 - 2.0 * max(0.0, -low)


def werner_measure(lam: float) -> float:
    """Exact measure of the Werner family: zero up to the separability
    threshold at one third, then linear with slope three halves."""
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise InputError(f"Werner parameter {lam!r} outside [0, 1]")
    return max(0.0, 1.5 * lam - 0.5)


def _grouped_product_state(layout, split, vec):
    amps = ungroup_amplitudes(vec.reshape(split.block_dims(layout)),
                              layout, split)
    return PureState(layout, amps)


def _remainder_states(layout, split, basis, c_r, drop=1e-11):
    """Eigen-states of a range-coordinate remainder, lifted and ungrouped."""
    evals, evecs = np.linalg.eigh(c_r)
    out = []
    for i in range(len(evals)):
        if evals[i] <= drop:
            continue
        vec = basis @ evecs[:, i]
        out.append((float(evals[i]),
                    _grouped_product_state(layout, split, vec)))
    return out


def bsa(rho: DensityOperator, split: Split,
        opts: Optional[MixedOptions] = None) -> BsaResult:
    """Best product-state subtraction across a 2-split.

    When the product directions inside the range form a finite set the
    optimum is exact and certified.  Otherwise greedy pricing with joint
    re-optimisation is used; for two-qubit blocks a pure entangled
    remainder (or a vanishing one on a positive partial transpose)
    upgrades the result to certified.
    """
    if split.k != 2:
        raise InputError("subtraction is defined across a 2-split")
    if split.n_parties != rho.layout.n_parties:
        raise InputError("split and state disagree on the number of parties")
    opts = opts or MixedOptions()
    d1, d2 = split.block_dims(rho.layout)
    grouped = group_density(rho, split)
    basis, rho_r = _range_basis(grouped)
    rays = _product_rays(basis, (d1, d2)) if min(d1, d2) == 2 else None

    if rays is not None:
        s, weights, c_r, _ = _ray_weight_barrier(rho_r, [c for c, _ in rays])
        parts = [(float(w), _grouped_product_state(rho.layout, split, vec))
                 for w, (_, vec) in zip(weights, rays) if w > _WEIGHT_DROP]
        certified = True
    else:
        s, pool, weights, basis, c_r = _greedy_pool(grouped, d1, d2, opts.seed)
        parts = [(float(w), _grouped_product_state(rho.layout, split, vec))
                 for w, vec in zip(weights, pool) if w > _WEIGHT_DROP]
        if 1 - s < 1e-7:
            # total weight one means the state itself was reassembled from
            # products, which is maximal on its own
            certified = True
        elif s >= _pt_weight_cap(grouped, d1, d2) - 5e-9:
            certified = True
        else:
            coords = [basis.conj().T @ v for v in pool]
            coords = [c / np.linalg.norm(c) for c in coords]
            bound = _dual_weight_bound(_range_basis(grouped)[1], basis,
                                       coords, d1, d2, opts.seed)
            certified = bound <= s + 5e-5

    s = float(sum(w for w, _ in parts))
    if 1 - s > 1e-6:
        rem_grouped = basis @ c_r @ basis.conj().T
        rem_grouped = rem_grouped / float(np.real(np.trace(rem_grouped)))
        remainder = DensityOperator(
            rho.layout, ungroup_density(rem_grouped, rho.layout, split))
    else:
        remainder = None
    if not parts and remainder is None:
        remainder = rho
    return BsaResult(rho, split, s, parts, remainder, certified)


def roof_upper_bound(ensemble: Ensemble, split: Split,
                     opts: Optional[MixedOptions] = None) -> float:
    """Weighted average of the members' certified upper endpoints; by
    convexity this bounds the mixture's measure from above."""
    opts = opts or MixedOptions()
    total = 0.0
    for weight, state in zip(ensemble.weights, ensemble.states):
        bracket = rank_bracket(state, split, opts.fit)
        total += weight * math.log2(bracket.hi)
    return total


def _witness_from_subtraction(rho, split, rays, weights, basis, c_r):
    """Ensemble mixing the subtracted product states with the eigenstates
    of the entangled remainder."""
    members = []
    for w, (_, vec) in zip(weights, rays):
        if w > _WEIGHT_DROP:
            members.append((float(w),
                            _grouped_product_state(rho.layout, split, vec)))
    members.extend(_remainder_states(rho.layout, split, basis, c_r))
    total = sum(w for w, _ in members)
    weights_out = tuple(w / total for w, _ in members)
    return Ensemble(weights_out, tuple(state for _, state in members))


def _two_level_range(rho, split, opts):
    """Exact route through the enumerated product directions.

    The subtractable product weight s bounds the measure from below by
    1 - s for any split, because every non-product ensemble member
    contributes at least one.  The witness built from the optimal
    subtraction is then scored honestly through the pure machinery; when
    each remainder eigenstate has measure one the endpoints meet.
    """
    grouped = group_density(rho, split)
    basis, rho_r = _range_basis(grouped)
    dims = split.block_dims(rho.layout)
    rays = _product_rays(basis, dims)
    if rays is None:
        return None
    if rays:
        s, weights, c_r, _ = _ray_weight_barrier(rho_r, [c for c, _ in rays])
    else:
        s, weights, c_r = 0.0, np.zeros(0), rho_r.copy()
    lower = max(0.0, 1.0 - s)
    witness = _witness_from_subtraction(rho, split, rays, weights, basis, c_r)
    upper = roof_upper_bound(witness, split, opts)
    if lower > upper + PSD_SLACK:
        raise InvariantBreach(
            "enumerated subtraction exceeds the witness roof")
    return lower, upper, witness


def flagged_mixture_bound(rho: DensityOperator, split: Split,
                          opts: Optional[MixedOptions] = None,
                          _depth: int = 0):
    """Sector decomposition along an orthogonal local marker, if any.

    Looks for a block whose computational basis splits into groups never
    connected by a matrix element of the state.  Such a marker is
    classical for the split, so the measure is sandwiched between the
    sector averages of lower and upper endpoints.  Returns the triple
    (lower, upper, witness) or None when no block carries a marker.
    """
    if split.n_parties != rho.layout.n_parties:
        raise InputError("split and state disagree on the number of parties")
    opts = opts or MixedOptions()
    grouped = group_density(rho, split)
    dims = split.block_dims(rho.layout)
    k = len(dims)
    total = grouped.shape[0]
    for b in range(k):
        db = dims[b]
        if db < 2:
            continue
        rest = total // db
        four = np.abs(
            grouped.reshape(dims + dims)
        )
        # link strength between block-b basis states, maximised over the rest
        moved = np.moveaxis(np.moveaxis(four, b, 0), k + b, 1)
        links = moved.reshape(db, db, -1).max(axis=2)
        adjacency = links > 1e-12
        labels = _components(adjacency)
        groups = sorted(set(labels))
        if len(groups) < 2:
            continue
        sectors = []
        for g in groups:
            mask = np.zeros(db)
            mask[[i for i, lab in enumerate(labels) if lab == g]] = 1.0
            proj = np.ones(1)
            for j in range(k):
                proj = np.kron(proj, mask if j == b else np.ones(dims[j]))
            sector = grouped * np.outer(proj, proj)
            eta = float(np.real(np.trace(sector)))
            if eta < 1e-12:
                continue
            sectors.append((eta, sector / eta))
        if len(sectors) < 2:
            continue
        lower = upper = 0.0
        members = []
        complete = True
        for eta, sector in sectors:
            branch = DensityOperator(
                rho.layout, ungroup_density(sector, rho.layout, split))
            value = _measure_impl(branch, split, opts, _depth + 1)
            lower += eta * value.lower
            upper += eta * value.upper
            if value.witness is None:
                complete = False
            else:
                members.extend((eta * w, state) for w, state in
                               zip(value.witness.weights, value.witness.states))
        witness = None
        if complete:
            norm = sum(w for w, _ in members)
            witness = Ensemble(tuple(w / norm for w, _ in members),
                               tuple(state for _, state in members))
        return lower, upper, witness
    return None


def _components(adjacency: np.ndarray):
    """Connected-component labels of a symmetric boolean matrix."""
    n = adjacency.shape[0]
    labels = [-1] * n
    current = 0
    for start in range(n):
        if labels[start] >= 0:
            continue
        stack = [start]
        labels[start] = current
        while stack:
            node = stack.pop()
            for other in range(n):
                if labels[other] < 0 and (adjacency[node, other]
                                          or adjacency[other, node]):
                    labels[other] = current
                    stack.append(other)
        current += 1
    return labels


# -- ensemble search -----------------------------------------------------------

def _score_ensemble(weights, states, split, fit):
    parts = []
    for w, state in zip(weights, states):
        bracket = rank_bracket(state, split, fit)
        parts.append(w * math.log2(bracket.hi))
    return float(sum(parts)), parts


def _pencil_directions(ta: np.ndarray, tb: np.ndarray, dims):
    """Distinguished directions x*ta + tb where some flattening drops to
    rank one, plus (for three-qubit blocks) where the hyperdeterminant
    vanishes; these are where a pencil can leave the generic stratum."""
    directions = []
    for b in range(len(dims)):
        fa = np.moveaxis(ta.reshape(dims), b, 0).reshape(dims[b], -1)
        fb = np.moveaxis(tb.reshape(dims), b, 0).reshape(dims[b], -1)
        polys = []
        rows, cols = fa.shape
        from itertools import combinations
        for r_pair in combinations(range(rows), 2):
            for c_pair in combinations(range(cols), 2):
                def minor(t):
                    sub = t * fa[np.ix_(r_pair, c_pair)] \
                        + fb[np.ix_(r_pair, c_pair)]
                    return sub[0, 0] * sub[1, 1] - sub[0, 1] * sub[1, 0]
                vals = [minor(p) for p in (0.0, 1.0, -1.0)]
                polys.append(np.array([
                    0.5 * (vals[1] + vals[2]) - vals[0],
                    0.5 * (vals[1] - vals[2]),
                    vals[0],
                ]))
        scale = max(float(np.max(np.abs(p))) for p in polys)
        if scale <= 1e-13:
            continue
        pivot = max(polys, key=lambda p: float(np.max(np.abs(p))))
        roots = _trimmed_roots(pivot)
        if roots is None:
            continue
        for root in roots:
            pencil = root * fa + fb
            sig = np.linalg.svd(pencil, compute_uv=False)
            if sig[0] > 0 and sig[1] <= 1e-7 * sig[0]:
                directions.append((complex(root), 1.0))
        sig_a = np.linalg.svd(fa, compute_uv=False)
        if sig_a[0] > 0 and sig_a[1] <= 1e-7 * sig_a[0]:
            directions.append((1.0, 0.0))
    if tuple(dims) == (2, 2, 2):
        from .certificates import hyperdeterminant_222
        points = [0.0, 1.0, -1.0, 2.0, -2.0]
        vals = [hyperdeterminant_222((p * ta + tb).reshape(2, 2, 2))
                for p in points]
        coeffs = _poly_from_samples(vals, points)
        roots = _trimmed_roots(coeffs)
        if roots is not None:
            directions.extend((complex(root), 1.0) for root in roots)
        if abs(hyperdeterminant_222(ta.reshape(2, 2, 2))) < 1e-12:
            directions.append((1.0, 0.0))
    unique = []
    for s, t in directions:
        vec = np.array([s, t], dtype=np.complex128)
        vec /= np.linalg.norm(vec)
        if any(abs(np.vdot(vec, u)) > 1 - 1e-9 for u in unique):
            continue
        unique.append(vec)
    return unique


def _refine_pairs(weights, states, split, fit, layout, rounds):
    """Greedy pairwise rotations towards algebraically distinguished
    directions; accepts only strict improvements of the average."""
    dims = split.block_dims(layout)
    from .linalg import group_tensor
    value, parts = _score_ensemble(weights, states, split, fit)
    n = len(states)
    for _ in range(rounds):
        improved = False
        for i in range(n):
            for j in range(i + 1, n):
                a = math.sqrt(weights[i]) * states[i].amplitudes
                b = math.sqrt(weights[j]) * states[j].amplitudes
                ga = group_tensor(states[i], split).reshape(-1) * math.sqrt(
                    weights[i])
                gb = group_tensor(states[j], split).reshape(-1) * math.sqrt(
                    weights[j])
                for direction in _pencil_directions(ga, gb, dims):
                    alpha, beta = direction
                    new_a = alpha * a + beta * b
                    new_b = -np.conj(beta) * a + np.conj(alpha) * b
                    wa, wb = np.linalg.norm(new_a) ** 2, np.linalg.norm(new_b) ** 2
                    if wa < 1e-12 or wb < 1e-12:
                        continue
                    sa = PureState(layout, new_a)
                    sb = PureState(layout, new_b)
                    pa = wa * math.log2(rank_bracket(sa, split, fit).hi)
                    pb = wb * math.log2(rank_bracket(sb, split, fit).hi)
                    delta = (pa + pb) - (parts[i] + parts[j])
                    if delta < -1e-12:
                        weights = list(weights)
                        states = list(states)
                        weights[i], weights[j] = wa, wb
                        states[i], states[j] = sa, sb
                        parts[i], parts[j] = pa, pb
                        value += delta
                        improved = True
        if not improved:
            break
    return value, tuple(weights), tuple(states)


def ensemble_search(rho: DensityOperator, split: Split,
                    opts: Optional[MixedOptions] = None):
    """Smallest ensemble roof found over eigen-, subtraction- and random
    isometry candidates, then pairwise refinement.  Returns the value and
    the achieving ensemble; the value never dips below the measure.
    """
    opts = opts or MixedOptions()
    if rho.is_pure():
        psi = rho.as_pure()
        ens = Ensemble((1.0,), (psi,))
        return roof_upper_bound(ens, split, opts), ens
    scan_fit = replace(opts.fit, max_iters=min(opts.fit.max_iters, 2500),
                       restarts=min(opts.fit.restarts, 6))
    eig = rho.eig_ensemble()
    best_value, _ = _score_ensemble(eig.weights, eig.states, split, scan_fit)
    best = (eig.weights, eig.states)

    exact = _two_level_range(rho, split, opts)
    if exact is not None:
        _, upper, witness = exact
        if upper < best_value - 1e-12:
            best_value = upper
            best = (witness.weights, witness.states)

    m = len(eig)
    root = np.asarray([math.sqrt(w) * s.amplitudes
                       for w, s in zip(eig.weights, eig.states)])
    sizes = list(range(m, m + opts.extra_states + 1))
    rng = np.random.default_rng(np.random.SeedSequence((opts.seed, 0xE25)))
    per_size = max(1, opts.samples // len(sizes))
    for n in sizes:
        for _ in range(per_size):
            iso = haar_isometry(n, m, rng)
            rows = iso @ root
            weights = np.linalg.norm(rows, axis=1) ** 2
            keep = weights > 1e-12
            states = tuple(PureState(rho.layout, rows[i])
                           for i in np.nonzero(keep)[0])
            value, _ = _score_ensemble(weights[keep], states, split, scan_fit)
            if value < best_value - 1e-12:
                best_value = value
                best = (tuple(float(w) for w in weights[keep]), states)

    value, weights, states = _refine_pairs(list(best[0]), list(best[1]),
                                           split, scan_fit, rho.layout,
                                           opts.refine_rounds)
    final, _ = _score_ensemble(weights, states, split, opts.fit)
    norm = sum(weights)
    ensemble = Ensemble(tuple(w / norm for w in weights), states)
    return final, ensemble


# -- the measure ---------------------------------------------------------------

def _pure_value(rho, split, opts):
    psi = rho.as_pure()
    value = schmidt_measure_pure(psi, split, opts.fit)
    ens = Ensemble((1.0,), (psi,))
    return MixedMeasureValue(value.value_lo, value.value_hi, ens)


def _measure_impl(rho, split, opts, depth) -> MixedMeasureValue:
    if split.n_parties != rho.layout.n_parties:
        raise InputError("split and state disagree on the number of parties")
    opts = opts or MixedOptions()
    if rho.is_pure():
        return _pure_value(rho, split, opts)

    if split.k == 2 and ppt_check(rho, split) == "separable":
        return MixedMeasureValue(0.0, 0.0, None)

    lower = 0.0
    upper = math.inf
    witness = None

    if split.k == 2:
        # every non-product member of a decomposition contributes at
        # least one unit, so the measure is at least one minus the
        # largest weight separable states can carry
        d1, d2 = split.block_dims(rho.layout)
        pt_floor = 1.0 - _pt_weight_cap(group_density(rho, split), d1, d2)
        lower = max(lower, pt_floor)

    exact = _two_level_range(rho, split, opts)
    if exact is not None:
        lower = max(lower, exact[0])
        if exact[1] < upper:
            upper, witness = exact[1], exact[2]

    if exact is None and split.k == 2 and min(split.block_dims(rho.layout)) == 2:
        res = bsa(rho, split, opts)
        cap = 1.0 - res.s
        if res.certified_feasible:
            lower = max(lower, cap)
        if cap < upper:
            members = list(res.separable_part)
            if res.remainder is not None:
                members.extend(
                    ((1 - res.s) * w, state) for w, state in
                    zip(res.remainder.eig_ensemble().weights,
                        res.remainder.eig_ensemble().states))
            norm = sum(w for w, _ in members)
            upper = cap
            witness = Ensemble(tuple(w / norm for w, _ in members),
                               tuple(s for _, s in members))

    if depth < 3:
        flagged = flagged_mixture_bound(rho, split, opts, depth)
        if flagged is not None:
            lower = max(lower, flagged[0])
            if flagged[1] < upper:
                upper, witness = flagged[1], flagged[2]

    if math.isinf(upper) or upper - lower > GAP_TOL:
        eig = rho.eig_ensemble()
        roof = roof_upper_bound(eig, split, opts)
        if roof < upper:
            upper, witness = roof, eig

    if depth == 0 and upper - lower > GAP_TOL:
        searched, found = ensemble_search(rho, split, opts)
        if searched < upper:
            upper, witness = searched, found

    if lower > upper + PSD_SLACK:
        raise InvariantBreach(
            f"lower engine {lower!r} contradicts upper engine {upper!r}")
    return MixedMeasureValue(min(lower, upper), upper, witness)


def schmidt_measure_mixed(rho: DensityOperator, split: Split,
                          opts: Optional[MixedOptions] = None
                          ) -> MixedMeasureValue:
    """Certified measure bracket for a density operator across a split.

    Pure inputs delegate to the pure-state bracket.  Otherwise lower
    endpoints come from the enumerated-subtraction route, the flagged
    sector rule and (for decisive partial transposes) separability;
    upper endpoints from the subtraction witness, sector roofs, the
    spectral ensemble and, if the bracket is still open, the ensemble
    search.  Endpoints are certified individually, so an open bracket is
    a legitimate outcome rather than an error.
    """
    return _measure_impl(rho, split, opts or MixedOptions(), 0)


def two_qubit_measure(rho: DensityOperator,
                      opts: Optional[MixedOptions] = None
                      ) -> MixedMeasureValue:
    """Exact measure of a two-qubit state: zero for positive partial
    transpose, otherwise one minus the certified subtractable weight."""
    if tuple(rho.layout.dims) != (2, 2):
        raise InputError("this routine is specific to two qubits")
    return schmidt_measure_mixed(rho, Split(((1,), (2,))), opts)
