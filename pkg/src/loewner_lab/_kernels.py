"""Compiled inner loops for slit-map composition.

Every routine works on plain arrays: ``v`` holds the constant driving value of
each step and ``dt`` its capacity-time increment.  Step ``k`` is the vertical
slit map ``g(z) = v[k] + sqrt((z - v[k])**2 + 2*a*dt[k])``.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def root_up(w, ref):
    # square root with Im >= 0; on the real axis the sign follows ``ref``
    s = np.sqrt(w)
    if s.imag < 0.0:
        s = -s
    elif s.imag == 0.0 and s.real * ref < 0.0:
        s = -s
    return s


@njit(cache=True)
def forward_chain(z, v, dt, a, floor):
    """Apply steps 0..n-1 to ``z``; return (g, g', survived, fatal step)."""
    g = z
    d = 1.0 + 0.0j
    for k in range(v.size):
        zv = g - v[k]
        s = root_up(zv * zv + 2.0 * a * dt[k], zv.real)
        d *= zv / s
        g = v[k] + s
        if g.imag < floor:
            return g, d, False, k
    return g, d, True, -1


@njit(cache=True)
def inverse_chain(w, v, dt, a, n):
    """Compose the inverses of steps n-1..0 at ``w``; return (f, f')."""
    h = w
    d = 1.0 + 0.0j
    for k in range(n - 1, -1, -1):
        zu = h - v[k]
        s = root_up(zu * zu - 2.0 * a * dt[k], zu.real)
        d *= zu / s
        h = v[k] + s
    return h, d


@njit(cache=True)
def inverse_chain_many(ws, v, dt, a, n):
    out = np.empty(ws.size, dtype=np.complex128)
    der = np.empty(ws.size, dtype=np.complex128)
    for i in range(ws.size):
        out[i], der[i] = inverse_chain(ws[i], v, dt, a, n)
    return out, der


@njit(cache=True)
def inverse_chain_ragged(ws, ns, v, dt, a):
    """Like ``inverse_chain_many`` but point ``i`` uses the first ``ns[i]`` steps."""
    out = np.empty(ws.size, dtype=np.complex128)
    der = np.empty(ws.size, dtype=np.complex128)
    for i in range(ws.size):
        out[i], der[i] = inverse_chain(ws[i], v, dt, a, ns[i])
    return out, der


@njit(cache=True)
def forward_chain_many(zs, v, dt, a, floor):
    out = np.empty(zs.size, dtype=np.complex128)
    der = np.empty(zs.size, dtype=np.complex128)
    alive = np.empty(zs.size, dtype=np.bool_)
    for i in range(zs.size):
        g, d, ok, _ = forward_chain(zs[i], v, dt, a, floor)
        out[i] = g
        der[i] = d
        alive[i] = ok
    return out, der, alive


@njit(cache=True)
def reverse_flow(z, u, dt, a):
    """Reverse Loewner flow with driving ``u[k]`` held on reverse step ``k``."""
    h = z
    d = 1.0 + 0.0j
    for k in range(u.size):
        zu = h - u[k]
        s = root_up(zu * zu - 2.0 * a * dt[k], zu.real)
        d *= zu / s
        h = u[k] + s
    return h, d


@njit(cache=True)
def reverse_abs_deriv_at(z, u, dt, a, stops):
    """|h'_t(z)| at the step counts listed in ``stops`` (ascending)."""
    out = np.empty(stops.size)
    h = z
    logd = 0.0
    j = 0
    for k in range(u.size + 1):
        while j < stops.size and stops[j] == k:
            out[j] = logd
            j += 1
        if k == u.size:
            break
        zu = h - u[k]
        s = root_up(zu * zu - 2.0 * a * dt[k], zu.real)
        logd += np.log(np.abs(zu / s))
        h = u[k] + s
    return np.exp(out)


@njit(cache=True)
def reverse_martingale_at(z, u, dt, a, lam, zeta, r, stops):
    """|h'|^lam * Y^zeta * (sin arg Z)^(-r) at the step counts in ``stops``.

    ``u`` has one more entry than ``dt``: ``u[k]`` is the driving value at the
    start of step ``k`` and also the value of U at that grid time.
    """
    out = np.empty(stops.size)
    h = z
    logd = 0.0
    j = 0
    n = dt.size
    for k in range(n + 1):
        while j < stops.size and stops[j] == k:
            zz = h - u[k]
            y = zz.imag
            out[j] = np.exp(lam * logd + zeta * np.log(y) - r * (np.log(y) - np.log(np.abs(zz))))
            j += 1
        if k == n:
            break
        zu = h - u[k]
        s = root_up(zu * zu - 2.0 * a * dt[k], zu.real)
        logd += np.log(np.abs(zu / s))
        h = u[k] + s
    return out


@njit(cache=True)
def tips_all(v, dt, a, y):
    """f_hat_{t_k}(iy) for every k = 1..n (y = 0 gives the exact discrete tip)."""
    n = v.size
    out = np.empty(n, dtype=np.complex128)
    for m in range(1, n + 1):
        w = v[m - 1] + 1j * y
        h, _ = inverse_chain(w, v, dt, a, m)
        out[m - 1] = h
    return out


@njit(cache=True)
def forward_observables_kernel(z, v, dt, a, v0, floor, stop_upsilon):
    """Per-step (g, |g'|) along the forward flow; stops once Upsilon <= threshold."""
    n = v.size
    gs = np.empty(n + 1, dtype=np.complex128)
    ds = np.empty(n + 1)
    gs[0] = z
    ds[0] = 1.0
    g = z
    d = 1.0 + 0.0j
    last = n
    for k in range(n):
        if g.imag / np.abs(d) <= stop_upsilon:
            last = k
            break
        zv = g - v[k]
        s = root_up(zv * zv + 2.0 * a * dt[k], zv.real)
        d *= zv / s
        g = v[k] + s
        gs[k + 1] = g
        ds[k + 1] = np.abs(d)
        if g.imag < floor:
            last = k + 1
            break
    return gs[: last + 1], ds[: last + 1]


@njit(cache=True)
def forward_martingale_kernel(z, normals, base, t_max, a, r, lam, xi, thresholds):
    """Forward flow under Brownian driving with height-adapted steps.

    Step ``k`` has length ``min(base * |Z|**2, t_max - t)`` with Z = g - V
    (the vector field is a/Z, so this bounds the relative change) and the driving
    moves by ``sqrt(dt) * normals[k]`` (the step uses the value at its end).
    Returns M = S^-r Upsilon^(xi+r) Delta^(lam+r) at the first step where
    Upsilon <= thresholds[i] (or at t_max), the hit flags, and the number of
    normals used; ``used == normals.size`` with t < t_max means the caller
    must supply a longer stream.
    """
    m = thresholds.size
    vals = np.empty(m)
    hit = np.zeros(m, dtype=np.bool_)
    g = z
    logd = 0.0
    vdrive = 0.0
    y = z.imag
    ups = y
    logm = -r * (np.log(y) - np.log(np.abs(z))) + (xi + r) * np.log(ups)
    done = 0
    for i in range(m):
        if ups <= thresholds[i]:
            vals[i] = np.exp(logm)
            hit[i] = True
            done += 1
    t = 0.0
    k = 0
    zabs2 = z.real * z.real + y * y
    while done < m and t < t_max and k < normals.size:
        step = base * zabs2
        if step >= t_max - t:
            step = t_max - t
        vdrive += np.sqrt(step) * normals[k]
        k += 1
        t += step
        zv = g - vdrive
        s = root_up(zv * zv + 2.0 * a * step, zv.real)
        logd += np.log(np.abs(zv / s))
        g = vdrive + s
        y = s.imag
        zabs2 = s.real * s.real + y * y
        if y <= 0.0:
            break
        ups = y * np.exp(-logd)
        logm = (-r * (np.log(y) - np.log(np.abs(s))) + (xi + r) * np.log(ups)
                + (lam + r) * logd)
        for i in range(m):
            if not hit[i] and ups <= thresholds[i]:
                vals[i] = np.exp(logm)
                hit[i] = True
                done += 1
    for i in range(m):
        if not hit[i]:
            vals[i] = np.exp(logm)
    complete = done == m or t >= t_max or y <= 0.0
    return vals, hit, complete


@njit(cache=True)
def reverse_logderiv_bm(z, normals, dt, a):
    """log|h'_T(z)| for the reverse flow driven by U with U_0 = 0 and
    increments sqrt(dt[k]) * normals[k]; step k uses U at its start."""
    h = z
    logd = 0.0
    u = 0.0
    for k in range(dt.size):
        zu = h - u
        s = root_up(zu * zu - 2.0 * a * dt[k], zu.real)
        logd += np.log(np.abs(zu / s))
        h = u + s
        u += np.sqrt(dt[k]) * normals[k]
    return logd


@njit(cache=True)
def reverse_tip_logderiv_coarse(values, n_t, dt_fine, y, a, m):
    """log|f_hat'_T(iy)| with T = n_t * dt_fine via the reverse flow.

    Reverse step lengths are whole multiples of the fine step, close to
    (y**2 + 2*a*s)/m at reverse time s, so each step is small compared with
    the squared height the point has at that moment.  With ``m`` large enough
    every step is one fine step and the value is exact for the fine chain.
    """
    h = 1j * y
    logd = 0.0
    vt = values[n_t]
    i = 0
    while i < n_t:
        k = int((y * y + 2.0 * a * i * dt_fine) / (m * dt_fine))
        if k < 1:
            k = 1
        if k > n_t - i:
            k = n_t - i
        u = values[n_t - i] - vt
        zu = h - u
        s = root_up(zu * zu - 2.0 * a * k * dt_fine, zu.real)
        logd += np.log(np.abs(zu / s))
        h = u + s
        i += k
    return logd


@njit(cache=True)
def count_scan(values, dt_fine, a, stride, j_lo, j_hi, y, m):
    """log|f_hat'_{T_j}(iy)| for j = j_lo..j_hi with T_j = (j - 1) * stride * dt_fine."""
    out = np.empty(j_hi - j_lo + 1)
    for j in range(j_lo, j_hi + 1):
        out[j - j_lo] = reverse_tip_logderiv_coarse(values, (j - 1) * stride, dt_fine, y, a, m)
    return out


@njit(cache=True)
def theta_em_kernel(theta0, drift, dt, normals, checkpoints, r):
    """Euler-Maruyama for d(theta) = drift * cot(theta) dt + dW.

    Returns theta at the end, sin(theta)**r at each checkpoint step and the
    number of steps where the positivity guard had to act.
    """
    th = theta0
    sq = np.sqrt(dt)
    guard = 0
    out = np.empty(checkpoints.size)
    j = 0
    for k in range(normals.size + 1):
        while j < checkpoints.size and checkpoints[j] == k:
            out[j] = np.sin(th) ** r
            j += 1
        if k == normals.size:
            break
        nxt = th + drift * np.cos(th) / np.sin(th) * dt + sq * normals[k]
        if nxt <= 0.0 or nxt >= np.pi:
            # redraw-free guard: keep the old state for this step
            guard += 1
            continue
        th = nxt
    return th, out, guard
