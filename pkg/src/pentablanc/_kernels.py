"""Hot loops for the random walks.

Each kernel has a scalar per-walker loop (compiled with numba when available)
and a numpy twin that loops over steps and vectorizes across walkers.  Both
consume the same pre-drawn generator indices, so they produce the same
statistics up to floating-point rounding.
"""
import math

import numpy as np

from ._accel import jit

TWO_PI = 2.0 * math.pi


# ================================================================ pentagon


def _bin_angle(th, nb):
    b = int(math.floor((th + math.pi) / TWO_PI * nb))
    if b >= nb:
        b = nb - 1
    if b < 0:
        b = 0
    return b


def _bin_lin(x, half, nb):
    b = int(math.floor((x + half) / (2.0 * half) * nb))
    if b >= nb:
        b = nb - 1
    if b < 0:
        b = 0
    return b


_bin_angle_c = jit(_bin_angle) or _bin_angle
_bin_lin_c = jit(_bin_lin) or _bin_lin


def _pent_record(w, tt, ell, nb, rect, abins, do_hist, do_push, do_ang, pi, pj, thr,
                 hist_th, hist_a3, whist, push_th, push_a3, ang):
    c0 = tt[0].conjugate()
    if do_hist:
        n1 = tt[1] * c0
        n2 = tt[2] * c0
        n3 = tt[3] * c0
        n4 = tt[4] * c0
        b1 = _bin_angle_c(math.atan2(n1.imag, n1.real), nb)
        b3 = _bin_angle_c(math.atan2(n3.imag, n3.real), nb)
        hist_th[w, b1, b3] += 1
        a3 = ell[0] + ell[1] * n1 + ell[2] * n2
        hist_a3[w, _bin_lin_c(a3.real, rect, nb), _bin_lin_c(a3.imag, rect, nb)] += 1
        whist[w, b1, b3] += ell[2] * ell[4] * abs((n2 * n4.conjugate()).imag)
    if do_ang:
        ang[w, _bin_angle_c(math.atan2(tt[0].imag, tt[0].real), abins)] += 1
    if do_push:
        for g in range(pi.shape[0]):
            i = pi[g]
            j = pj[g]
            W = ell[i] * tt[i] + ell[j] * tt[j]
            aw = abs(W)
            if aw < thr * (ell[i] + ell[j]):
                continue
            u = W / aw
            u2 = u * u
            s = np.empty(5, dtype=np.complex128)
            for k in range(5):
                s[k] = tt[k]
            s[i] = u2 * tt[i].conjugate()
            s[j] = u2 * tt[j].conjugate()
            d0 = s[0].conjugate()
            m1 = s[1] * d0
            m2 = s[2] * d0
            m3 = s[3] * d0
            b1 = _bin_angle_c(math.atan2(m1.imag, m1.real), nb)
            b3 = _bin_angle_c(math.atan2(m3.imag, m3.real), nb)
            push_th[w, g, b1, b3] += 1
            a3 = ell[0] + ell[1] * m1 + ell[2] * m2
            push_a3[w, g, _bin_lin_c(a3.real, rect, nb), _bin_lin_c(a3.imag, rect, nb)] += 1


_pent_record_c = jit(_pent_record) or _pent_record


def _pent_reproject(tt, ell):
    """Restore |t_k| = 1, then one minimum-norm Newton step on sum l_k t_k = 0."""
    for k in range(5):
        tt[k] = tt[k] / abs(tt[k])
    F = 0j
    for k in range(5):
        F += ell[k] * tt[k]
    res = abs(F)
    # rows: Re and Im of d/dtheta_k (l_k t_k) = i l_k t_k, k = 1..4
    a = np.empty((2, 4))
    for k in range(1, 5):
        g = 1j * ell[k] * tt[k]
        a[0, k - 1] = g.real
        a[1, k - 1] = g.imag
    m00 = 0.0
    m01 = 0.0
    m11 = 0.0
    for k in range(4):
        m00 += a[0, k] * a[0, k]
        m01 += a[0, k] * a[1, k]
        m11 += a[1, k] * a[1, k]
    det = m00 * m11 - m01 * m01
    if det > 1e-300:
        y0 = (m11 * F.real - m01 * F.imag) / det
        y1 = (-m01 * F.real + m00 * F.imag) / det
        for k in range(4):
            d = -(a[0, k] * y0 + a[1, k] * y1)
            tt[k + 1] = tt[k + 1] * complex(math.cos(d), math.sin(d))
    return res


_pent_reproject_c = jit(_pent_reproject) or _pent_reproject


def _pent_loop(ell, pi, pj, dk, t, a0, choices, resample, step0, reproj_every, thr,
               record_first, nb, rect, abins, do_hist, do_push, do_ang,
               hist_th, hist_a3, whist, push_th, push_a3, ang,
               ck_steps, ck_out, rej, maxres):
    nw = t.shape[0]
    ns = choices.shape[1]
    nck = ck_steps.shape[0]
    for w in range(nw):
        tt = t[w]
        c = 0
        while c < nck and ck_steps[c] <= step0:
            c += 1
        if record_first:
            _pent_record_c(w, tt, ell, nb, rect, abins, do_hist, do_push, do_ang, pi, pj, thr,
                           hist_th, hist_a3, whist, push_th, push_a3, ang)
        for s in range(ns):
            g = choices[w, s]
            i = pi[g]
            j = pj[g]
            W = ell[i] * tt[i] + ell[j] * tt[j]
            aw = abs(W)
            ok = True
            if aw < thr * (ell[i] + ell[j]):
                rej[w] += 1
                g = resample[w, s]
                i = pi[g]
                j = pj[g]
                W = ell[i] * tt[i] + ell[j] * tt[j]
                aw = abs(W)
                if aw < thr * (ell[i] + ell[j]):
                    rej[w] += 1
                    ok = False
            if ok:
                u = W / aw
                u2 = u * u
                ni = u2 * tt[i].conjugate()
                nj = u2 * tt[j].conjugate()
                k = dk[g]
                if k == i:
                    a0[w] += ell[k] * (ni - tt[k])
                elif k == j:
                    a0[w] += ell[k] * (nj - tt[k])
                tt[i] = ni
                tt[j] = nj
            gidx = step0 + s + 1
            if reproj_every > 0 and gidx % reproj_every == 0:
                r = _pent_reproject_c(tt, ell)
                if r > maxres[w]:
                    maxres[w] = r
            while c < nck and ck_steps[c] == gidx:
                ck_out[w, c] = a0[w]
                c += 1
            _pent_record_c(w, tt, ell, nb, rect, abins, do_hist, do_push, do_ang, pi, pj, thr,
                           hist_th, hist_a3, whist, push_th, push_a3, ang)


_pent_loop_c = jit(_pent_loop)


def _angle_bins(z, nb):
    b = np.floor((np.arctan2(z.imag, z.real) + np.pi) / TWO_PI * nb).astype(np.int64)
    return np.clip(b, 0, nb - 1)


def _lin_bins(x, half, nb):
    b = np.floor((x + half) / (2.0 * half) * nb).astype(np.int64)
    return np.clip(b, 0, nb - 1)


def _pent_record_np(t, ell, nb, rect, abins, do_hist, do_push, do_ang, pi, pj, thr,
                    hist_th, hist_a3, whist, push_th, push_a3, ang):
    wi = np.arange(t.shape[0])
    c0 = t[:, 0].conj()
    if do_hist:
        n1, n2, n3, n4 = (t[:, k] * c0 for k in (1, 2, 3, 4))
        b1 = _angle_bins(n1, nb)
        b3 = _angle_bins(n3, nb)
        np.add.at(hist_th, (wi, b1, b3), 1)
        a3 = ell[0] + ell[1] * n1 + ell[2] * n2
        np.add.at(hist_a3, (wi, _lin_bins(a3.real, rect, nb), _lin_bins(a3.imag, rect, nb)), 1)
        np.add.at(whist, (wi, b1, b3), ell[2] * ell[4] * np.abs((n2 * n4.conj()).imag))
    if do_ang:
        np.add.at(ang, (wi, _angle_bins(t[:, 0], abins)), 1)
    if do_push:
        for g in range(len(pi)):
            i, j = pi[g], pj[g]
            W = ell[i] * t[:, i] + ell[j] * t[:, j]
            aw = np.abs(W)
            ok = aw >= thr * (ell[i] + ell[j])
            u = W / np.where(ok, aw, 1.0)
            u2 = u * u
            s = t.copy()
            s[:, i] = u2 * t[:, i].conj()
            s[:, j] = u2 * t[:, j].conj()
            d0 = s[:, 0].conj()
            m1, m2, m3 = s[:, 1] * d0, s[:, 2] * d0, s[:, 3] * d0
            b1 = _angle_bins(m1, nb)[ok]
            b3 = _angle_bins(m3, nb)[ok]
            gw = np.full(int(ok.sum()), g)
            np.add.at(push_th, (wi[ok], gw, b1, b3), 1)
            a3 = (ell[0] + ell[1] * m1 + ell[2] * m2)[ok]
            np.add.at(push_a3, (wi[ok], gw, _lin_bins(a3.real, rect, nb), _lin_bins(a3.imag, rect, nb)), 1)


def _rowsum(x):
    # left-to-right over columns; BLAS and reductions may reorder by batch size
    acc = x[:, 0].copy()
    for k in range(1, x.shape[1]):
        acc += x[:, k]
    return acc


def _pent_reproject_np(t, ell):
    t /= np.abs(t)
    F = _rowsum(t * ell)
    res = np.abs(F)
    g = 1j * ell[1:] * t[:, 1:]
    a = np.stack([g.real, g.imag], axis=1)  # (W, 2, 4)
    m00 = _rowsum(a[:, 0] * a[:, 0])
    m01 = _rowsum(a[:, 0] * a[:, 1])
    m11 = _rowsum(a[:, 1] * a[:, 1])
    det = m00 * m11 - m01 * m01
    ok = det > 1e-300
    sdet = np.where(ok, det, 1.0)
    y0 = (m11 * F.real - m01 * F.imag) / sdet
    y1 = (-m01 * F.real + m00 * F.imag) / sdet
    d = -(a[:, 0] * y0[:, None] + a[:, 1] * y1[:, None])
    d = np.where(ok[:, None], d, 0.0)
    t[:, 1:] *= np.cos(d) + 1j * np.sin(d)
    return res


def _pent_loop_np(ell, pi, pj, dk, t, a0, choices, resample, step0, reproj_every, thr,
                  record_first, nb, rect, abins, do_hist, do_push, do_ang,
                  hist_th, hist_a3, whist, push_th, push_a3, ang,
                  ck_steps, ck_out, rej, maxres):
    nw, ns = choices.shape
    wi = np.arange(nw)
    rec = (ell, nb, rect, abins, do_hist, do_push, do_ang, pi, pj, thr,
           hist_th, hist_a3, whist, push_th, push_a3, ang)
    ck_index = {int(v): n for n, v in enumerate(ck_steps)}
    if record_first:
        _pent_record_np(t, *rec)
    for s in range(ns):
        g = choices[:, s].astype(np.int64)
        i, j = pi[g], pj[g]
        ti, tj = t[wi, i], t[wi, j]
        W = ell[i] * ti + ell[j] * tj
        aw = np.abs(W)
        bad = aw < thr * (ell[i] + ell[j])
        if np.any(bad):
            rej[bad] += 1
            g = np.where(bad, resample[:, s].astype(np.int64), g)
            i, j = pi[g], pj[g]
            ti, tj = t[wi, i], t[wi, j]
            W = ell[i] * ti + ell[j] * tj
            aw = np.abs(W)
            bad2 = aw < thr * (ell[i] + ell[j])
            rej[bad2] += 1
            ok = ~bad2
        else:
            ok = np.ones(nw, dtype=bool)
        u = W / np.where(ok, aw, 1.0)
        u2 = u * u
        ni = u2 * ti.conj()
        nj = u2 * tj.conj()
        k = dk[g]
        move_i = ok & (k == i)
        move_j = ok & (k == j)
        a0 += np.where(move_i, ell[np.maximum(k, 0)] * (ni - ti), 0)
        a0 += np.where(move_j, ell[np.maximum(k, 0)] * (nj - tj), 0)
        t[wi[ok], i[ok]] = ni[ok]
        t[wi[ok], j[ok]] = nj[ok]
        gidx = step0 + s + 1
        if reproj_every > 0 and gidx % reproj_every == 0:
            r = _pent_reproject_np(t, ell)
            np.maximum(maxres, r, out=maxres)
        if gidx in ck_index:
            for c in range(ck_index[gidx], len(ck_steps)):
                if ck_steps[c] != gidx:
                    break
                ck_out[:, c] = a0
        _pent_record_np(t, *rec)


def pent_loop(backend, *args):
    if backend == "numba":
        return _pent_loop_c(*args)
    return _pent_loop_np(*args)


# ================================================================ Blanc


def _cubic_F(u, v, w, X, Y, Z):
    return Y * Y * Z - X * X * X - u * X * X * Z - v * X * Z * Z - w * Z * Z * Z


_cubic_F_c = jit(_cubic_F) or _cubic_F


def _curve_dist(px, py, xr, b0, b1, mesh):
    """Distance from (px, py) to y^2 = (x - xr)(x^2 + b1 x + b0), one real branch."""
    d0 = math.hypot(px - xr, py)
    tm = px + d0 - xr
    if tm < 0.0:
        tm = 0.0
    T = math.sqrt(tm) + 1e-9
    best = d0
    bt = 0.0
    for m in range(mesh):
        tau = -T + 2.0 * T * m / (mesh - 1)
        x = xr + tau * tau
        q = x * x + b1 * x + b0
        y = tau * math.sqrt(q if q > 0.0 else 0.0)
        d = math.hypot(x - px, y - py)
        if d < best:
            best = d
            bt = tau
    tau = bt
    for _ in range(25):
        x = xr + tau * tau
        q = x * x + b1 * x + b0
        if q <= 0.0:
            break
        s = math.sqrt(q)
        dq = 2.0 * x + b1
        ds = dq / (2.0 * s)
        dds = (4.0 * q - dq * dq) / (4.0 * q * s)
        x1 = 2.0 * tau
        y = tau * s
        y1 = s + tau * ds * x1
        y2 = 2.0 * ds * x1 + tau * (dds * x1 * x1 + 2.0 * ds)
        dx = x - px
        dy = y - py
        g1 = dx * x1 + dy * y1
        g2 = x1 * x1 + y1 * y1 + dx * 2.0 + dy * y2
        if g2 <= 0.0:
            break
        step = -g1 / g2
        tn = tau + step
        xn = xr + tn * tn
        qn = xn * xn + b1 * xn + b0
        yn = tn * math.sqrt(qn if qn > 0.0 else 0.0)
        dn = math.hypot(xn - px, yn - py)
        if dn > math.hypot(dx, dy):
            tn = tau + 0.5 * step
            xn = xr + tn * tn
            qn = xn * xn + b1 * xn + b0
            yn = tn * math.sqrt(qn if qn > 0.0 else 0.0)
            dn = math.hypot(xn - px, yn - py)
        tau = tn
        if dn < best:
            best = dn
        if abs(step) < 1e-15 * (1.0 + abs(tau)):
            break
    return best


_curve_dist_c = jit(_curve_dist) or _curve_dist


def _blanc_step(P, u, v, w, Q, base, nbase, base_tol, tan_tol, out):
    """Apply sigma_Q to unit vector P; returns False when rejected."""
    X, Y, Z = P[0], P[1], P[2]
    for b in range(nbase):
        bx, by, bz = base[b, 0], base[b, 1], base[b, 2]
        nb_ = math.sqrt(bx * bx + by * by + bz * bz)
        # |P x b| / |b| is the sine of the angle, free of cancellation
        cx = Y * bz - Z * by
        cy = Z * bx - X * bz
        cz = X * by - Y * bx
        sn = (cx * cx + cy * cy + cz * cz) / (nb_ * nb_)
        if sn < base_tol * base_tol:
            return False
    qx, qy, qz = Q[0], Q[1], Q[2]
    f = _cubic_F_c(u, v, w, X, Y, Z)
    gx = -3 * X * X - 2 * u * X * Z - v * Z * Z
    gy = 2 * Y * Z
    gz = Y * Y - u * X * X - 2 * v * X * Z - 3 * w * Z * Z
    dq = qx * gx + qy * gy + qz * gz
    # 1/2 Q^T Hess(F)(P) Q
    hxx = -6 * X - 2 * u * Z
    hxz = -2 * u * X - 2 * v * Z
    hyy = 2 * Z
    hyz = 2 * Y
    hzz = -2 * v * X - 6 * w * Z
    c = 0.5 * (hxx * qx * qx + hyy * qy * qy + hzz * qz * qz
               + 2 * hxz * qx * qz + 2 * hyz * qy * qz)
    nq = math.sqrt(qx * qx + qy * qy + qz * qz)
    if abs(c) > 1e-14:
        disc = dq * dq - 4 * c * f
        sep = math.sqrt(abs(disc)) / abs(c)
        # |P + t Q| for both roots (complex when disc < 0)
        pq = (X * qx + Y * qy + Z * qz) / nq
        if disc >= 0:
            r1 = (-dq + math.sqrt(disc)) / (2 * c) * nq
            r2 = (-dq - math.sqrt(disc)) / (2 * c) * nq
            n1 = math.sqrt(max(1.0 + 2 * r1 * pq + r1 * r1, 0.0))
            n2 = math.sqrt(max(1.0 + 2 * r2 * pq + r2 * r2, 0.0))
        else:
            re = -dq / (2 * c) * nq
            im = math.sqrt(-disc) / (2 * abs(c)) * nq
            n1 = math.sqrt(max(1.0 + 2 * re * pq + re * re + im * im, 0.0))
            n2 = n1
        cx = Y * qz - Z * qy
        cy = Z * qx - X * qz
        cz = X * qy - Y * qx
        cross = math.sqrt(cx * cx + cy * cy + cz * cz) / nq
        if n1 * n2 > 0 and sep * nq * cross / (n1 * n2) < tan_tol:
            return False
    ox = f * qx - 0.5 * dq * X
    oy = f * qy - 0.5 * dq * Y
    oz = f * qz - 0.5 * dq * Z
    n = math.sqrt(ox * ox + oy * oy + oz * oz)
    if n == 0.0:
        return False
    ox /= n
    oy /= n
    oz /= n
    # canonical sign: largest-modulus coordinate positive
    ax, ay, az = abs(ox), abs(oy), abs(oz)
    if ax >= ay and ax >= az:
        sg = 1.0 if ox > 0 else -1.0
    elif ay >= az:
        sg = 1.0 if oy > 0 else -1.0
    else:
        sg = 1.0 if oz > 0 else -1.0
    out[0] = sg * ox
    out[1] = sg * oy
    out[2] = sg * oz
    return True


_blanc_step_c = jit(_blanc_step) or _blanc_step


def _blanc_observe(P, xr, b0, b1, mesh, dcap):
    if abs(P[2]) < 1e-12:
        return dcap
    d = _curve_dist_c(P[0] / P[2], P[1] / P[2], xr, b0, b1, mesh)
    return d if d < dcap else dcap


_blanc_observe_c = jit(_blanc_observe) or _blanc_observe


def _blanc_loop(uvw, Q, base, nbase, P, choices, resample, step0, base_tol, tan_tol,
                xr, b0, b1, mesh, eps, dcap, record_first,
                tube, dsum, nobs, ck_steps, ck_tube, ck_dsum, ck_nobs, rej):
    nw = P.shape[0]
    ns = choices.shape[1]
    nck = ck_steps.shape[0]
    u, v, w = uvw[0], uvw[1], uvw[2]
    out = np.empty(3)
    for k in range(nw):
        p = P[k]
        c = 0
        while c < nck and ck_steps[c] <= step0:
            c += 1
        if record_first:
            d = _blanc_observe_c(p, xr, b0, b1, mesh, dcap)
            dsum[k] += d
            nobs[k] += 1
            if d < eps:
                tube[k] += 1
        for s in range(ns):
            g = choices[k, s]
            ok = _blanc_step_c(p, u, v, w, Q[g], base[g], nbase[g], base_tol, tan_tol, out)
            if not ok:
                rej[k] += 1
                g = resample[k, s]
                ok = _blanc_step_c(p, u, v, w, Q[g], base[g], nbase[g], base_tol, tan_tol, out)
                if not ok:
                    rej[k] += 1
            if ok:
                p[0] = out[0]
                p[1] = out[1]
                p[2] = out[2]
            d = _blanc_observe_c(p, xr, b0, b1, mesh, dcap)
            dsum[k] += d
            nobs[k] += 1
            if d < eps:
                tube[k] += 1
            gidx = step0 + s + 1
            while c < nck and ck_steps[c] == gidx:
                ck_tube[k, c] = tube[k]
                ck_dsum[k, c] = dsum[k]
                ck_nobs[k, c] = nobs[k]
                c += 1


_blanc_loop_c = jit(_blanc_loop)


def _blanc_loop_np(uvw, Q, base, nbase, P, choices, resample, step0, base_tol, tan_tol,
                   xr, b0, b1, mesh, eps, dcap, record_first,
                   tube, dsum, nobs, ck_steps, ck_tube, ck_dsum, ck_nobs, rej):
    # The Blanc step has many data-dependent branches; the fallback reuses the
    # scalar step and distance routines per walker, vectorizing nothing.
    nw, ns = choices.shape
    u, v, w = (float(x) for x in uvw)
    out = np.empty(3)
    ck_index = {int(val): n for n, val in enumerate(ck_steps)}
    for k in range(nw):
        p = P[k]
        if record_first:
            d = _blanc_observe(p, xr, b0, b1, mesh, dcap)
            dsum[k] += d
            nobs[k] += 1
            tube[k] += d < eps
        for s in range(ns):
            g = int(choices[k, s])
            ok = _blanc_step(p, u, v, w, Q[g], base[g], int(nbase[g]), base_tol, tan_tol, out)
            if not ok:
                rej[k] += 1
                g = int(resample[k, s])
                ok = _blanc_step(p, u, v, w, Q[g], base[g], int(nbase[g]), base_tol, tan_tol, out)
                if not ok:
                    rej[k] += 1
            if ok:
                p[:] = out
            d = _blanc_observe(p, xr, b0, b1, mesh, dcap)
            dsum[k] += d
            nobs[k] += 1
            tube[k] += d < eps
            gidx = step0 + s + 1
            if gidx in ck_index:
                for c in range(ck_index[gidx], len(ck_steps)):
                    if ck_steps[c] != gidx:
                        break
                    ck_tube[k, c] = tube[k]
                    ck_dsum[k, c] = dsum[k]
                    ck_nobs[k, c] = nobs[k]


def blanc_loop(backend, *args):
    if backend == "numba":
        return _blanc_loop_c(*args)
    return _blanc_loop_np(*args)


# ================================================================ matrices


def _lyap_loop(mats, choices, v, renorm_every, logsum):
    nr = v.shape[0]
    ns = choices.shape[1]
    d = v.shape[1]
    tmp = np.empty(d)
    for r in range(nr):
        for s in range(ns):
            m = mats[choices[r, s]]
            for i in range(d):
                acc = 0.0
                for j in range(d):
                    acc += m[i, j] * v[r, j]
                tmp[i] = acc
            for j in range(d):
                v[r, j] = tmp[j]
            if (s + 1) % renorm_every == 0 or s == ns - 1:
                n = 0.0
                for j in range(d):
                    n += v[r, j] * v[r, j]
                n = math.sqrt(n)
                logsum[r] += math.log(n)
                for j in range(d):
                    v[r, j] /= n


_lyap_loop_c = jit(_lyap_loop)


def _lyap_loop_np(mats, choices, v, renorm_every, logsum):
    nr, ns = choices.shape
    for s in range(ns):
        m = mats[choices[:, s]]
        w = m[:, :, 0] * v[:, :1]
        for j in range(1, v.shape[1]):
            w += m[:, :, j] * v[:, j:j + 1]
        v[:] = w
        if (s + 1) % renorm_every == 0 or s == ns - 1:
            n = np.sqrt(_rowsum(v * v))
            logsum += np.log(n)
            v /= n[:, None]


def lyap_loop(backend, *args):
    if backend == "numba":
        return _lyap_loop_c(*args)
    return _lyap_loop_np(*args)
