"""Reference alternating-least-squares kernel, plain numpy.

Fits a sum of ``rank`` product terms to a grouped amplitude tensor by
cycling through the modes and solving a regularised normal equation for
one factor matrix at a time.  The compiled kernel in ``als_cy`` mirrors
this module operation for operation; keep the two in sync.

Weights are carried by mode 0: at the end of every sweep the columns of
all later factor matrices are normalised and their norms folded into the
first one.  Runaway column norms are how a border-rank plateau shows up,
so the sweep loop aborts once they pass ten times the acceptance cap.
"""

from __future__ import annotations

import numpy as np

STATUS_CONVERGED = 0
STATUS_STALLED = 1
STATUS_MAX_ITERS = 2
STATUS_DIVERGED = 3

_JITTER_SCALE = 1e-14
# The Gram-identity residual subtracts near-equal numbers, so below
# roughly sqrt(machine epsilon) it is pure noise; inside that band the
# error is recomputed by direct reassembly instead.
_CANCEL_GUARD = 1e-7


def khatri_rao(mats):
    """Columnwise Kronecker product; the leftmost matrix varies slowest."""
    out = mats[0]
    for m in mats[1:]:
        out = (out[:, None, :] * m[None, :, :]).reshape(-1, out.shape[1])
    return out


def _hadamard_rest(grams, skip):
    """Entrywise product of all Gram matrices except ``grams[skip]``."""
    h = None
    for l, g in enumerate(grams):
        if l == skip:
            continue
        h = g.copy() if h is None else h * g
    return h


def _exact_residual(unfold0, factors):
    """Fit error by direct reassembly, accurate down to machine scale."""
    w = khatri_rao(factors[1:])
    model = factors[0] @ w.T
    return float(np.linalg.norm(unfold0 - model))


def _normalise_into_mode0(factors):
    for f in factors[1:]:
        norms = np.linalg.norm(f, axis=0)
        safe = np.where(norms > 0.0, norms, 1.0)
        f /= safe
        factors[0] *= safe


def als_sweeps(tensor, factors, max_iters, eps_fit, norm_cap,
               stall_rtol, stall_window):
    """Run ALS sweeps until one of the four stopping rules fires.

    Returns ``(factors, weights, residual, sweeps, status)`` with the
    weights folded into mode 0 and every other factor column-normalised.
    """
    k = tensor.ndim
    rank = factors[0].shape[1]
    factors = [np.array(f, dtype=np.complex128, order="C") for f in factors]
    t_norm_sq = float(np.vdot(tensor, tensor).real)
    unfolds = [np.ascontiguousarray(
        np.moveaxis(tensor, j, 0).reshape(tensor.shape[j], -1))
        for j in range(k)]
    grams = [f.conj().T @ f for f in factors]
    eye = np.eye(rank)

    status = STATUS_MAX_ITERS
    residual = np.inf
    # a sweep's closing least-squares step can never do worse than the
    # zero model, so ||T|| is a valid starting point for stall tracking
    best = float(np.sqrt(t_norm_sq))
    stall_count = 0
    sweeps = 0
    b_last = None

    for sweeps in range(1, max_iters + 1):
        for j in range(k):
            w = khatri_rao([factors[l] for l in range(k) if l != j])
            b = unfolds[j] @ w.conj()
            h = _hadamard_rest(grams, j)
            jitter = _JITTER_SCALE * max(float(np.trace(h).real), 1.0)
            factors[j] = np.ascontiguousarray(
                np.linalg.solve(h + jitter * eye, b.T).T)
            grams[j] = factors[j].conj().T @ factors[j]
            b_last = b

        # Fit error for the factors as they stand.  tr(B^H A) is the
        # overlap of the tensor with the model; the model norm comes from
        # the Grams.  Column rescaling below leaves the model unchanged.
        model_sq = float(np.sum(grams[k - 1] * _hadamard_rest(grams, k - 1)).real)
        overlap = float(np.sum(b_last.conj() * factors[k - 1]).real)
        residual = float(np.sqrt(max(t_norm_sq - 2.0 * overlap + model_sq, 0.0)))
        if residual <= max(eps_fit, _CANCEL_GUARD * np.sqrt(t_norm_sq)):
            residual = _exact_residual(unfolds[0], factors)

        _normalise_into_mode0(factors)
        grams = [f.conj().T @ f for f in factors]
        weights = np.linalg.norm(factors[0], axis=0)

        if residual <= eps_fit:
            status = STATUS_CONVERGED
            break
        if float(weights.max()) > 10.0 * norm_cap:
            status = STATUS_DIVERGED
            break
        if best - residual <= stall_rtol * best:
            stall_count += 1
            if stall_count >= stall_window:
                status = STATUS_STALLED
                break
        else:
            stall_count = 0
        best = min(best, residual)

    weights = np.linalg.norm(factors[0], axis=0)
    return factors, weights, residual, sweeps, status
