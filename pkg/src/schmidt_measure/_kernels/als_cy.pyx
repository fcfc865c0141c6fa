# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled ALS sweep loop; mirrors ``als_py.als_sweeps`` step for step.

Typed memoryviews and a hand-rolled pivoted LU keep the whole sweep in C,
which pays off at the small tensor sizes this library lives on, where
numpy call overhead dominates the reference kernel.
"""

import numpy as np

STATUS_CONVERGED = 0
STATUS_STALLED = 1
STATUS_MAX_ITERS = 2
STATUS_DIVERGED = 3

cdef double JITTER_SCALE = 1e-14
# below ~sqrt(machine epsilon) the Gram-identity residual is cancellation
# noise; the error is then recomputed by direct reassembly
cdef double CANCEL_GUARD = 1e-7

ctypedef double complex zdouble


cdef double _cabs2(zdouble z) noexcept:
    return z.real * z.real + z.imag * z.imag


cdef int _lu_factor(zdouble[:, ::1] a, int[::1] piv, int n) noexcept:
    """In-place LU with partial pivoting; returns 0, or -1 on exact
    singularity (cannot happen with jitter but kept for safety)."""
    cdef int i, j, p, row
    cdef double big, mag
    cdef zdouble tmp, mult
    for j in range(n):
        p = j
        big = _cabs2(a[j, j])
        for i in range(j + 1, n):
            mag = _cabs2(a[i, j])
            if mag > big:
                big = mag
                p = i
        if big == 0.0:
            return -1
        piv[j] = p
        if p != j:
            for i in range(n):
                tmp = a[j, i]
                a[j, i] = a[p, i]
                a[p, i] = tmp
        for i in range(j + 1, n):
            mult = a[i, j] / a[j, j]
            a[i, j] = mult
            for row in range(j + 1, n):
                a[i, row] = a[i, row] - mult * a[j, row]
    return 0


cdef void _lu_solve_inplace(zdouble[:, ::1] lu, int[::1] piv,
                            zdouble[::1] x, int n) noexcept:
    cdef int i, j
    cdef zdouble tmp, acc
    for i in range(n):
        if piv[i] != i:
            tmp = x[i]
            x[i] = x[piv[i]]
            x[piv[i]] = tmp
    for i in range(n):
        acc = x[i]
        for j in range(i):
            acc = acc - lu[i, j] * x[j]
        x[i] = acc
    for i in range(n - 1, -1, -1):
        acc = x[i]
        for j in range(i + 1, n):
            acc = acc - lu[i, j] * x[j]
        x[i] = acc / lu[i, i]


cdef void _gram(zdouble[:, ::1] f, zdouble[:, ::1] out,
                int d, int rank) noexcept:
    cdef int r, s, i
    cdef zdouble acc
    for r in range(rank):
        for s in range(rank):
            acc = 0
            for i in range(d):
                acc = acc + f[i, r].conjugate() * f[i, s]
            out[r, s] = acc


def als_sweeps(tensor, factors, int max_iters, double eps_fit,
               double norm_cap, double stall_rtol, int stall_window):
    """Drop-in replacement for the numpy kernel of the same name."""
    cdef int k = tensor.ndim
    cdef int rank = factors[0].shape[1]
    cdef int j, l, sweeps, i, c, r, s, d, cols, seg, reps, stall_count
    cdef double t_norm_sq, residual, best, model_sq, overlap, jitter
    cdef double nrm, wmax, cancel_band, err
    cdef zdouble acc

    # memoryviews need writable buffers, and callers may hand over
    # read-only views; always take a fresh copy
    tensor = np.array(tensor, dtype=np.complex128, order="C")
    t_norm_sq = float(np.vdot(tensor, tensor).real)

    factor_arrs = [np.array(f, dtype=np.complex128, order="C")
                   for f in factors]
    unfold_arrs = [np.ascontiguousarray(
        np.moveaxis(tensor, j, 0).reshape(tensor.shape[j], -1))
        for j in range(k)]
    gram_arrs = [np.empty((rank, rank), dtype=np.complex128) for _ in range(k)]

    cdef int total = tensor.size
    cdef int max_d = max(f.shape[0] for f in factor_arrs)
    cdef int max_cols = total // min(f.shape[0] for f in factor_arrs)

    w_buf = np.empty((max_cols, rank), dtype=np.complex128)
    w_tmp = np.empty((max_cols, rank), dtype=np.complex128)
    b_arr = np.empty((max_d, rank), dtype=np.complex128)
    h_arr = np.empty((rank, rank), dtype=np.complex128)
    rhs_arr = np.empty(rank, dtype=np.complex128)
    piv_arr = np.empty(rank, dtype=np.int32)
    norms_arr = np.empty(rank, dtype=np.float64)
    dims_arr = np.array([f.shape[0] for f in factor_arrs], dtype=np.int32)

    cdef zdouble[:, ::1] w = w_buf
    cdef zdouble[:, ::1] wt = w_tmp
    cdef zdouble[:, ::1] b = b_arr
    cdef zdouble[:, ::1] h = h_arr
    cdef zdouble[::1] rhs = rhs_arr
    cdef int[::1] piv = piv_arr
    cdef double[::1] norms = norms_arr
    cdef int[::1] dims = dims_arr
    cdef zdouble[:, ::1] fj, fl, gl, xj, f0

    for l in range(k):
        fj = factor_arrs[l]
        gl = gram_arrs[l]
        _gram(fj, gl, dims[l], rank)

    cdef int status = STATUS_MAX_ITERS
    residual = np.inf
    best = t_norm_sq ** 0.5
    cancel_band = CANCEL_GUARD * best
    if eps_fit > cancel_band:
        cancel_band = eps_fit
    stall_count = 0
    sweeps = 0

    for sweeps in range(1, max_iters + 1):
        for j in range(k):
            d = dims[j]
            cols = total // d

            # Khatri-Rao of the other factors, leftmost mode slowest
            seg = 0
            for l in range(k):
                if l == j:
                    continue
                fl = factor_arrs[l]
                if seg == 0:
                    for i in range(dims[l]):
                        for r in range(rank):
                            w[i, r] = fl[i, r]
                    seg = dims[l]
                else:
                    for i in range(seg):
                        for c in range(dims[l]):
                            for r in range(rank):
                                wt[i * dims[l] + c, r] = w[i, r] * fl[c, r]
                    seg = seg * dims[l]
                    for i in range(seg):
                        for r in range(rank):
                            w[i, r] = wt[i, r]

            # B = unfold_j @ conj(W)
            xj = unfold_arrs[j]
            for i in range(d):
                for r in range(rank):
                    acc = 0
                    for c in range(cols):
                        acc = acc + xj[i, c] * w[c, r].conjugate()
                    b[i, r] = acc

            # H = Hadamard product of the other Grams, plus jitter
            for r in range(rank):
                for s in range(rank):
                    h[r, s] = 1
            for l in range(k):
                if l == j:
                    continue
                gl = gram_arrs[l]
                for r in range(rank):
                    for s in range(rank):
                        h[r, s] = h[r, s] * gl[r, s]
            jitter = 0.0
            for r in range(rank):
                jitter += h[r, r].real
            jitter = JITTER_SCALE * (jitter if jitter > 1.0 else 1.0)
            for r in range(rank):
                h[r, r] = h[r, r] + jitter

            # solve H (A_j)^T = B^T row by row of B; the jitter makes H
            # positive definite, so a zero pivot column cannot occur
            if _lu_factor(h, piv, rank) != 0:
                continue
            fj = factor_arrs[j]
            for i in range(d):
                for r in range(rank):
                    rhs[r] = b[i, r]
                _lu_solve_inplace(h, piv, rhs, rank)
                for r in range(rank):
                    fj[i, r] = rhs[r]
            gl = gram_arrs[j]
            _gram(fj, gl, d, rank)

        # fit error; B still holds the last mode's right-hand side
        for r in range(rank):
            for s in range(rank):
                h[r, s] = 1
        for l in range(k - 1):
            gl = gram_arrs[l]
            for r in range(rank):
                for s in range(rank):
                    h[r, s] = h[r, s] * gl[r, s]
        gl = gram_arrs[k - 1]
        model_sq = 0.0
        for r in range(rank):
            for s in range(rank):
                model_sq += (gl[r, s] * h[r, s]).real
        fj = factor_arrs[k - 1]
        overlap = 0.0
        d = dims[k - 1]
        for i in range(d):
            for r in range(rank):
                overlap += (b[i, r].conjugate() * fj[i, r]).real
        residual = t_norm_sq - 2.0 * overlap + model_sq
        residual = residual if residual > 0.0 else 0.0
        residual = residual ** 0.5

        if residual <= cancel_band:
            # inside the noise band of the identity above: recompute the
            # error from the assembled model
            seg = 0
            for l in range(1, k):
                fl = factor_arrs[l]
                if seg == 0:
                    for i in range(dims[l]):
                        for r in range(rank):
                            w[i, r] = fl[i, r]
                    seg = dims[l]
                else:
                    for i in range(seg):
                        for c in range(dims[l]):
                            for r in range(rank):
                                wt[i * dims[l] + c, r] = w[i, r] * fl[c, r]
                    seg = seg * dims[l]
                    for i in range(seg):
                        for r in range(rank):
                            w[i, r] = wt[i, r]
            xj = unfold_arrs[0]
            f0 = factor_arrs[0]
            d = dims[0]
            cols = total // d
            err = 0.0
            for i in range(d):
                for c in range(cols):
                    acc = 0
                    for r in range(rank):
                        acc = acc + f0[i, r] * w[c, r]
                    err += _cabs2(xj[i, c] - acc)
            residual = err ** 0.5

        # fold column norms of modes 1..k-1 into mode 0
        f0 = factor_arrs[0]
        for l in range(1, k):
            fl = factor_arrs[l]
            d = dims[l]
            for r in range(rank):
                nrm = 0.0
                for i in range(d):
                    nrm += _cabs2(fl[i, r])
                nrm = nrm ** 0.5
                if nrm > 0.0:
                    for i in range(d):
                        fl[i, r] = fl[i, r] / nrm
                    for i in range(dims[0]):
                        f0[i, r] = f0[i, r] * nrm
        for l in range(k):
            fj = factor_arrs[l]
            gl = gram_arrs[l]
            _gram(fj, gl, dims[l], rank)
        wmax = 0.0
        for r in range(rank):
            nrm = 0.0
            for i in range(dims[0]):
                nrm += _cabs2(f0[i, r])
            norms[r] = nrm ** 0.5
            if norms[r] > wmax:
                wmax = norms[r]

        if residual <= eps_fit:
            status = STATUS_CONVERGED
            break
        if wmax > 10.0 * norm_cap:
            status = STATUS_DIVERGED
            break
        if best - residual <= stall_rtol * best:
            stall_count += 1
            if stall_count >= stall_window:
                status = STATUS_STALLED
                break
        else:
            stall_count = 0
        if residual < best:
            best = residual

    weights = np.linalg.norm(factor_arrs[0], axis=0)
    return factor_arrs, weights, float(residual), sweeps, int(status)
