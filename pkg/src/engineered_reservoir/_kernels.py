"""Compiled Lindblad right-hand side and Dormand-Prince 5(4) integrator.

The generator is never materialized as a superoperator. Every operator is held
as COO triplets and applied row-wise, so one evaluation costs O(nnz * dim).

Packed model tuple layout (see ``lindblad.compile_model``)::

    k_rows, k_cols, k_vals, k_term, k_conj   # entries of K(t) = -iH(t) - 1/2 sum C^dag C
    amps, freqs                              # rotating-term coefficients amp * exp(i freq t)
    j_rows, j_cols, j_vals, j_ptr            # sqrt(rate) * C, concatenated per collapse op

Static K entries carry ``k_term == -1`` and already include the factor -i.
Rotating entries store the bare operator value; ``k_conj`` selects the
conjugated coefficient used by the Hermitian-conjugate half of a term.
"""
import numpy as np
from numba import njit

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = np.array(
    [
        [0.0, 0.0, 0.0, 0.0, 0.0],
        [1 / 5, 0.0, 0.0, 0.0, 0.0],
        [3 / 40, 9 / 40, 0.0, 0.0, 0.0],
        [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0],
        [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0],
        [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    ]
)
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
# quartic continuous extension (Shampine), y(t + theta h) = y + h sum_i K_i sum_k P[i,k] theta^(k+1)
_P = np.array(
    [
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

STATUS_OK = 0
STATUS_UNDERFLOW = 1
STATUS_MAX_STEPS = 2
STATUS_NONFINITE = 3


@njit(cache=True, nogil=True)
def apply_generator(t, rho, out, work, coef, model):
    """out <- L_t(herm(rho)), exactly Hermitian.

    Only the Hermitian part of ``rho`` is propagated: rounding noise in the
    anti-Hermitian part would otherwise grow like exp((Gamma_max - Gamma_min) t / 2).
    ``work`` is a (3, d, d) scratch buffer.
    """
    k_rows, k_cols, k_vals, k_term, k_conj, amps, freqs, j_rows, j_cols, j_vals, j_ptr = model
    d = rho.shape[0]
    rh = work[0]
    acc = work[1]
    tmp = work[2]
    for i in range(d):
        for j in range(d):
            rh[i, j] = 0.5 * (rho[i, j] + np.conj(rho[j, i]))
    for j in range(amps.shape[0]):
        coef[j] = amps[j] * np.exp(1j * freqs[j] * t)

    # acc = K(t) rho
    acc[:, :] = 0.0
    for e in range(k_rows.shape[0]):
        v = k_vals[e]
        term = k_term[e]
        if term >= 0:
            c = coef[term]
            if k_conj[e]:
                c = np.conj(c)
            v = -1j * c * v
        r = k_rows[e]
        col = k_cols[e]
        for j in range(d):
            acc[r, j] += v * rh[col, j]

    # acc += 1/2 sum_k C_k rho C_k^dag, so that out = acc + acc^dag
    for op in range(j_ptr.shape[0] - 1):
        lo = j_ptr[op]
        hi = j_ptr[op + 1]
        tmp[:, :] = 0.0
        for e in range(lo, hi):
            r = j_rows[e]
            col = j_cols[e]
            v = j_vals[e]
            for j in range(d):
                tmp[r, j] += v * rh[col, j]
        for e in range(lo, hi):
            r = j_rows[e]
            col = j_cols[e]
            v = 0.5 * np.conj(j_vals[e])
            for i in range(d):
                acc[i, r] += tmp[i, col] * v

    for i in range(d):
        for j in range(d):
            out[i, j] = acc[i, j] + np.conj(acc[j, i])


@njit(cache=True, nogil=True)
def _rms(y_old, y_new, err, rtol, atol):
    d = err.shape[0]
    acc = 0.0
    for i in range(d):
        for j in range(d):
            scale = atol + rtol * max(abs(y_old[i, j]), abs(y_new[i, j]))
            q = abs(err[i, j]) / scale
            acc += q * q
    return np.sqrt(acc / (d * d))


@njit(cache=True, nogil=True)
def _initial_step(t0, y0, f0, rtol, atol, t_span, work, coef, model, y1, f1):
    d = y0.shape[0]
    zero = np.zeros_like(y0)
    d0 = _rms(y0, y0, y0, rtol, atol)
    d1 = _rms(y0, y0, f0, rtol, atol)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, t_span)
    for i in range(d):
        for j in range(d):
            y1[i, j] = y0[i, j] + h0 * f0[i, j]
    apply_generator(t0 + h0, y1, f1, work, coef, model)
    for i in range(d):
        for j in range(d):
            zero[i, j] = f1[i, j] - f0[i, j]
    d2 = _rms(y0, y0, zero, rtol, atol) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, t_span)


@njit(cache=True, nogil=True)
def dopri5(rho0, t_out, rtol, atol, max_steps, model):
    """Integrate d rho/dt = L_t(rho) and sample at ``t_out`` (increasing).

    Returns (samples, status, t_reached, nfev, n_accepted, n_rejected).
    """
    d = rho0.shape[0]
    n_out = t_out.shape[0]
    n_terms = model[5].shape[0]
    Y = np.zeros((n_out, d, d), dtype=np.complex128)
    K = np.empty((7, d, d), dtype=np.complex128)
    work = np.empty((3, d, d), dtype=np.complex128)
    coef = np.empty(max(n_terms, 1), dtype=np.complex128)
    y = rho0.copy()
    y_stage = np.empty((d, d), dtype=np.complex128)
    y_new = np.empty((d, d), dtype=np.complex128)
    err = np.empty((d, d), dtype=np.complex128)
    bt = np.empty(7)

    t = t_out[0]
    t_end = t_out[n_out - 1]
    Y[0] = y
    i_out = 1
    nfev = 0
    n_acc = 0
    n_rej = 0
    status = STATUS_OK
    if n_out == 1:
        return Y, status, t, nfev, n_acc, n_rej

    apply_generator(t, y, K[0], work, coef, model)
    nfev += 1
    h = _initial_step(t, y, K[0], rtol, atol, t_end - t, work, coef, model, y_stage, K[1])
    nfev += 1
    rejected = False

    while i_out < n_out:
        if n_acc + n_rej >= max_steps:
            status = STATUS_MAX_STEPS
            break
        h_min = 10.0 * np.spacing(max(abs(t), 1.0))
        if h < h_min:
            status = STATUS_UNDERFLOW
            break
        last = False
        if t + h >= t_end:
            h = t_end - t
            last = True

        for s in range(1, 6):
            for i in range(d):
                for j in range(d):
                    acc = y[i, j]
                    for m in range(s):
                        acc += h * _A[s, m] * K[m, i, j]
                    y_stage[i, j] = acc
            apply_generator(t + _C[s] * h, y_stage, K[s], work, coef, model)
        for i in range(d):
            for j in range(d):
                acc = y[i, j]
                for m in range(6):
                    acc += h * _B[m] * K[m, i, j]
                y_new[i, j] = acc
        t_new = t_end if last else t + h
        apply_generator(t_new, y_new, K[6], work, coef, model)
        nfev += 6
        for i in range(d):
            for j in range(d):
                acc = 0.0j
                for m in range(7):
                    acc += _E[m] * K[m, i, j]
                err[i, j] = h * acc
        en = _rms(y, y_new, err, rtol, atol)
        if not np.isfinite(en):
            status = STATUS_NONFINITE
            break

        if en <= 1.0:
            while i_out < n_out and t_out[i_out] <= t_new:
                if t_out[i_out] == t_new:
                    Y[i_out] = y_new
                else:
                    theta = (t_out[i_out] - t) / h
                    for m in range(7):
                        p = theta
                        acc = 0.0
                        for k in range(4):
                            acc += _P[m, k] * p
                            p *= theta
                        bt[m] = acc
                    for i in range(d):
                        for j in range(d):
                            acc = y[i, j]
                            for m in range(7):
                                acc += h * bt[m] * K[m, i, j]
                            Y[i_out, i, j] = acc
                i_out += 1
            t = t_new
            y[:, :] = y_new
            K[0] = K[6]
            n_acc += 1
            factor = 10.0 if en == 0.0 else min(10.0, 0.9 * en ** -0.2)
            if rejected:
                factor = min(1.0, factor)
            h *= factor
            rejected = False
        else:
            n_rej += 1
            h *= max(0.2, 0.9 * en ** -0.2)
            rejected = True

    return Y, status, t, nfev, n_acc, n_rej
