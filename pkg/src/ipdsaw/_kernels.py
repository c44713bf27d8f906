"""Numba kernels for the dynamic programs and the rejection samplers.

All recursions exploit the memoryless two-sided geometric increment law:
convolving a row against the kernel ``x^{|v-v'|}`` is two running
geometric scans (left and right), O(1) per cell.  Slices are kept in plain
double precision scaled by a per-slice factor; the driver carries the log
of the accumulated scale, so exposed masses are exact log-space values
while the inner loops stay multiply-add only.
"""
from __future__ import annotations

import numpy as np
from numba import njit

# ---------------------------------------------------------------------------
# free-walk slice step
# ---------------------------------------------------------------------------

@njit(cache=True)
def free_step(W, Wn, C, v0, gcap, x, inv_cb):
    """One forward step of the free-walk (v, g) slice.

    ``W[g, v0+v]``: current scaled masses of ``(V_n = v, G_n = g)``;
    ``Wn`` receives step ``n+1`` restricted to ``g <= gcap``
    (cells with larger ``g`` can never reach any remaining target).
    Returns the max entry of ``Wn`` for rescaling.
    """
    Wn[: gcap + 1].fill(0.0)
    for h in range(gcap + 1):
        vt = gcap - h           # largest |v| needed from this source row
        m = vt if vt > h else h  # scan must still sweep all sources |v'| <= h
        # left scan: C[v] = sum_{v' <= v} W[h, v'] x^{v - v'}
        acc = 0.0
        for v in range(-m, m + 1):
            acc *= x
            if -h <= v <= h:
                acc += W[h, v0 + v]
            if -vt <= v <= vt:
                C[h, v0 + v] = acc
        # right scan adds sum_{v' > v} W[h, v'] x^{v' - v}
        acc = 0.0
        for v in range(m, -m - 1, -1):
            acc *= x
            if -vt <= v <= vt:
                C[h, v0 + v] += acc
            if -h <= v <= h:
                acc += W[h, v0 + v]
    mx = 0.0
    for g in range(gcap + 1):
        for v in range(-g, g + 1):
            val = C[g - abs(v), v0 + v] * inv_cb
            Wn[g, v0 + v] = val
            if val > mx:
                mx = val
    return mx


@njit(cache=True)
def close_and_zero_rows(W, v0, gcap, xpow, inv_cb, close_row, zero_row):
    """Aggregate a slice: ``sum_v W[t, v] x^{|v|}/c_beta`` and ``W[t, 0]``.

    The first is (scaled) ``P(G_n = t, V_{n+1} = 0)``, the second
    ``P(G_n = t, V_n = 0)``.
    """
    for t in range(gcap + 1):
        s = W[t, v0]
        for v in range(1, t + 1):
            s += (W[t, v0 + v] + W[t, v0 - v]) * xpow[v]
        close_row[t] = s * inv_cb
        zero_row[t] = W[t, v0]


@njit(cache=True)
def slice_scale(W, gcap, inv_mx):
    for g in range(gcap + 1):
        for v in range(W.shape[1]):
            W[g, v] *= inv_mx


# ---------------------------------------------------------------------------
# folded nonzero-until-zero walk (patterns), with Y-moment accumulators
# ---------------------------------------------------------------------------

@njit(cache=True)
def pattern_dp(x, cb, tmax, xpow, keep_slices):
    """Joint law of (return time, swept area) with Y-moment accumulators.

    Folded representation: state ``v >= 1`` stands for ``V = +-v`` jointly
    (the walk may change sign without touching 0; kernel
    ``x^{|b-a|} + x^{a+b}``).  Tracks per state the mass ``P``, the
    sign-weighted first moment ``E1 = E[Y sign(V); .]`` and the second
    moment ``Q2 = E[Y^2; .]`` of ``Y_n = sum (-1)^{i-1} V_i``.

    Returns ``R[N, s] = P(T = N, G_N = s)`` and
    ``Q[N, s] = E[Y_N^2; T = N, G_N = s]`` for ``N + s <= tmax``,
    where ``T`` is the first hit of 0 and ``G`` the geometric area.
    """
    A = tmax
    inv_cb = 1.0 / cb
    P = np.zeros((A + 1, A + 1))
    E1 = np.zeros((A + 1, A + 1))
    Q2 = np.zeros((A + 1, A + 1))
    for v in range(1, A + 1):
        P[v, v] = 2.0 * xpow[v] * inv_cb
        E1[v, v] = v * P[v, v]
        Q2[v, v] = v * v * P[v, v]
    if keep_slices:
        slices = np.zeros((tmax + 1, A + 1, A + 1))
        slices[1] = P
    else:
        slices = np.zeros((1, 1, 1))
    R = np.zeros((A + 1, A + 1))
    Q = np.zeros((A + 1, A + 1))
    R[1, 0] = inv_cb
    tsP = np.zeros(A + 1)
    tsE = np.zeros(A + 1)
    tsQ = np.zeros(A + 1)
    for n in range(1, tmax):
        # stops at N = n + 1: jump to zero, area unchanged, Y unchanged
        for g in range(0, tmax - n):
            sP = 0.0
            sQ = 0.0
            for v in range(1, g + 1):
                w = xpow[v] * inv_cb
                sP += P[g, v] * w
                sQ += Q2[g, v] * w
            R[n + 1, g] = sP
            Q[n + 1, g] = sQ
        sgn = 1.0 if (n % 2 == 0) else -1.0  # sign of V_{n+1} in Y
        gcap = tmax - (n + 1)
        Pn = np.zeros((A + 1, A + 1))
        En = np.zeros((A + 1, A + 1))
        Qn = np.zeros((A + 1, A + 1))
        for h in range(1, gcap):
            vt = gcap - h
            if vt < 1:
                continue
            m = vt if vt > h else h
            # two-pass scans for the |b - a| part, all three arrays at once
            accP = 0.0
            accE = 0.0
            accQ = 0.0
            for v in range(1, m + 1):
                accP *= x
                accE *= x
                accQ *= x
                if v <= h:
                    accP += P[h, v]
                    accE += E1[h, v]
                    accQ += Q2[h, v]
                if v <= vt:
                    tsP[v] = accP
                    tsE[v] = accE
                    tsQ[v] = accQ
            accP = 0.0
            accE = 0.0
            accQ = 0.0
            for v in range(m, 0, -1):
                accP *= x
                accE *= x
                accQ *= x
                if v <= vt:
                    tsP[v] += accP
                    tsE[v] += accE
                    tsQ[v] += accQ
                if v <= h:
                    accP += P[h, v]
                    accE += E1[h, v]
                    accQ += Q2[h, v]
            # reflection sums T = sum_a r(a) x^a (the x^{a+b} part)
            TP = 0.0
            TE = 0.0
            TQ = 0.0
            for a in range(1, min(h, A) + 1):
                TP += P[h, a] * xpow[a]
                TE += E1[h, a] * xpow[a]
                TQ += Q2[h, a] * xpow[a]
            for b in range(1, vt + 1):
                g = h + b
                refl = xpow[b]
                pc = (tsP[b] + refl * TP) * inv_cb      # ConvPlus(P)
                ec = (tsE[b] - refl * TE) * inv_cb      # ConvMinus(E1)
                qc = (tsQ[b] + refl * TQ) * inv_cb      # ConvPlus(Q2)
                Pn[g, b] = pc
                En[g, b] = ec + sgn * b * pc
                Qn[g, b] = qc + 2.0 * sgn * b * ec + b * b * pc
        P = Pn
        E1 = En
        Q2 = Qn
        if keep_slices:
            slices[n + 1] = P
    return R, Q, slices


# ---------------------------------------------------------------------------
# critical excursion (strict sign, stop at sign change or zero hit)
# ---------------------------------------------------------------------------

@njit(cache=True)
def excursion_xlaw(x, cb, nmax, xpow, from_zero):
    """Law of ``X = tau + area`` of one excursion, exact for ``X <= nmax``.

    State ``(v >= 1, a)`` with ``a = sum_{j<=i} |V_j|`` (start included);
    survival requires a strict constant sign, so the folded kernel has no
    reflection term; jumps to ``<= 0`` stop the excursion with
    ``P(U <= -v) = x^v / ((1-x) c_beta)``.  A zero start sticks on a
    zero line until the walk leaves it.
    """
    A = nmax
    inv_cb = 1.0 / cb
    D = np.zeros((A + 1, A + 1))   # [a, v]
    if from_zero:
        z = 1.0
    else:
        z = 1.0 - x
        for v in range(1, A + 1):
            D[v, v] = (1.0 - x) * xpow[v]
    PX = np.zeros(nmax + 1)
    C = np.zeros(A + 1)
    stop_c = 1.0 / ((1.0 - x) * cb)
    for i in range(1, nmax + 1):
        acap_prev = nmax - (i - 1)
        acap = nmax - i
        # stops: tau = i, Area = a, X = i + a
        for a in range(0, acap_prev + 1):
            s = 0.0
            for v in range(1, a + 1):
                s += D[a, v] * xpow[v]
            if s > 0.0:
                PX[i + a] += s * stop_c
        Dn = np.zeros((A + 1, A + 1))
        for a in range(0, acap_prev + 1):
            vt = acap - a
            if vt < 1:
                continue
            m = vt if vt > a else a
            acc = 0.0
            for v in range(1, m + 1):
                acc *= x
                if v <= a:
                    acc += D[a, v]
                if v <= vt:
                    C[v] = acc
            acc = 0.0
            for v in range(m, 0, -1):
                acc *= x
                if v <= vt:
                    C[v] += acc
                if v <= a:
                    acc += D[a, v]
            for vp in range(1, vt + 1):
                Dn[a + vp, vp] += C[vp] * inv_cb
        if z > 0.0:
            for vp in range(1, min(acap, A) + 1):
                Dn[vp, vp] += z * 2.0 * xpow[vp] * inv_cb
            z *= inv_cb
        D = Dn
    return PX


@njit(cache=True)
def excursion_tau_law(x, cb, nmax, vmax, from_zero):
    """Marginal law of the excursion clock ``tau``, value-truncated at vmax.

    Truncation loses only walks that exceed ``vmax`` (mass ~ n x^{vmax}),
    negligible for ``vmax >> sqrt(nmax)``; the lost mass is returned.
    """
    inv_cb = 1.0 / cb
    D = np.zeros(vmax + 1)
    if from_zero:
        z = 1.0
    else:
        z = 1.0 - x
        for v in range(1, vmax + 1):
            D[v] = (1.0 - x) * x ** v
    ptau = np.zeros(nmax + 1)
    C = np.zeros(vmax + 1)
    stop_c = 1.0 / ((1.0 - x) * cb)
    for i in range(1, nmax + 1):
        s = 0.0
        for v in range(1, vmax + 1):
            s += D[v] * x ** v
        ptau[i] = s * stop_c
        acc = 0.0
        for v in range(1, vmax + 1):
            acc *= x
            acc += D[v]
            C[v] = acc
        acc = 0.0
        for v in range(vmax, 0, -1):
            acc *= x
            C[v] += acc
            acc += D[v]
        for v in range(1, vmax + 1):
            D[v] = C[v] * inv_cb
        if z > 0.0:
            for v in range(1, vmax + 1):
                D[v] += z * 2.0 * x ** v * inv_cb
            z *= inv_cb
    lost = 1.0 - ptau.sum() - D.sum() - z
    return ptau, lost


@njit(cache=True)
def renewal_masses(first, subsequent, mmax):
    """``u(m) = P(m in renewal set)`` with a delayed first inter-arrival."""
    v = np.zeros(mmax + 1)
    v[0] = 1.0
    for m in range(1, mmax + 1):
        s = 0.0
        for j in range(1, m + 1):
            s += subsequent[j] * v[m - j]
        v[m] = s
    u = np.zeros(mmax + 1)
    for m in range(1, mmax + 1):
        s = 0.0
        for j in range(1, m + 1):
            s += first[j] * v[m - j]
        u[m] = s
    return u


# ---------------------------------------------------------------------------
# rejection samplers (uniform-buffer driven, bitwise deterministic)
# ---------------------------------------------------------------------------

@njit(cache=True)
def _increment_from_uniform(u, x, p0, log_x):
    """Exact inverse-CDF two-sided geometric draw from one uniform."""
    if u < p0:
        return 0
    up = (u - p0) / (1.0 - p0)
    if up < 0.5:
        sign = 1
        uf = 2.0 * up
    else:
        sign = -1
        uf = 2.0 * up - 1.0
    if uf < 1e-300:
        uf = 1e-300
    mag = 1 + int(np.log(uf) / log_x)
    return sign * mag


@njit(cache=True)
def perfect_trials(buf, pos, L, x, cb, out_walks, out_n, got, want, lifetime_log_gamma):
    """Run acceptance-rejection trials at the critical (or lifetime-killed) walk.

    Each trial simulates the free walk, tracking ``G_n + n`` (strictly
    increasing, so the candidate is unique); a trial whose track hits ``L``
    exactly at ``n = N`` is a candidate, accepted iff the next increment
    closes ``V_{N+1} = 0`` (and, in lifetime mode, iff an independent
    geometric lifetime exceeds ``N``).  Accepted walks ``V_1..V_N`` fill
    rows of ``out_walks`` starting at row ``got``.

    Returns ``(got, trials, pos, exhausted)``; ``exhausted`` signals that
    the uniform buffer ran low and the caller must refill and call again.
    """
    p0 = 1.0 / cb
    log_x = np.log(x)
    nbuf = buf.shape[0]
    trials = 0
    scratch = np.empty(L + 1, dtype=np.int64)
    # worst-case uniforms per trial: one lifetime + N steps + closing step,
    # and track grows by >= 1 per step so N <= L
    margin = L + 3
    while got < want:
        if pos + margin > nbuf:
            return got, trials, pos, True
        trials += 1
        if lifetime_log_gamma < 0.0:
            uS = buf[pos]
            pos += 1
            if uS < 1e-300:
                uS = 1e-300
            life = 1 + int(np.log(uS) / lifetime_log_gamma)
        else:
            life = 1 << 60
        v = 0
        track = 0          # G_n + n
        n = 0
        while True:
            u = buf[pos]
            pos += 1
            v = v + _increment_from_uniform(u, x, p0, log_x)
            n += 1
            scratch[n] = v
            track += 1 + abs(v)
            if track >= L:
                break
        if track == L and n < life:
            u2 = buf[pos]
            pos += 1
            if _increment_from_uniform(u2, x, p0, log_x) == -v:
                out_n[got] = n
                for i in range(1, n + 1):
                    out_walks[got, i] = scratch[i]
                got += 1
    return got, trials, pos, False


@njit(cache=True)
def excursion_chopper(buf, pos, x, cb, start_value, have_start, from_mu,
                      cap, out, got, want):
    """Chop a walk into excursions at sign-change/zero-hit times.

    ``out`` rows receive ``(extension, area, v_tau, v_start, censored)``.
    The chain restarts each excursion at the recorded ``v_tau``; an
    excursion exceeding ``cap`` steps is emitted censored (with the fields
    gathered so far) and the chain restarts from a fresh ``mu_beta`` draw
    (or from zero when ``from_mu`` is false).

    Returns ``(got, pos, cur_start, have_cur, exhausted)``.
    """
    p0 = 1.0 / cb
    log_x = np.log(x)
    nbuf = buf.shape[0]
    cur = start_value
    have = have_start
    while got < want:
        if not have:
            if from_mu:
                if pos >= nbuf:
                    return got, pos, cur, False, True
                u = buf[pos]
                pos += 1
                cur = _increment_from_uniform(u, x, 1.0 - x, log_x)
            else:
                cur = 0
            have = True
        v0 = cur
        area = abs(cur)
        steps = 0
        censored = False
        while True:
            if pos >= nbuf:
                # save state: restart this excursion from scratch on refill
                return got, pos, v0, True, True
            u = buf[pos]
            pos += 1
            nxt = cur + _increment_from_uniform(u, x, p0, log_x)
            steps += 1
            if cur != 0 and cur * nxt <= 0:
                break
            cur = nxt
            area += abs(cur)
            if steps >= cap:
                censored = True
                break
        if censored:
            out[got, 0] = steps
            out[got, 1] = area
            out[got, 2] = cur
            out[got, 3] = v0
            out[got, 4] = 1
            have = False        # fresh restart after a censored excursion
        else:
            # area holds sum |V_j| for j = start .. tau-1 (|nxt| never added)
            out[got, 0] = steps
            out[got, 1] = area
            out[got, 2] = nxt
            out[got, 3] = v0
            out[got, 4] = 0
            cur = nxt
        got += 1
    return got, pos, cur, have, False
