"""Compiled inner loops for ODE integration and learner simulation.

These mirror the numpy reference code in ``dynamics``, ``replay`` and
``agents`` operation for operation; the test suite checks that both paths
agree. Nothing here validates its inputs.
"""

import numpy as np
from numba import njit

# revision-protocol codes
REPLICATOR, BNN, SMITH, SRP = 0, 1, 2, 3
# agent kinds
ERID, CROSS, HEDGE = 0, 1, 2
# schedule kinds
STATIC, PHASE_SWITCHED, CONTINUOUS_SCALED = 0, 1, 2
# status codes returned by the loops
OK, STEP_BOUND, REWARD_RANGE, NON_FINITE, OUT_OF_BOX = 0, 1, 2, 3, 4

SIMPLEX_TOL = 1e-9

# ipar slots of a packed agent
I_KIND, I_PROTOCOL, I_CAPACITY, I_HEAD, I_SIZE = 0, 1, 2, 3, 4
# fpar slots
F_ALPHA, F_HEDGE_RATE, F_RMIN, F_RMAX = 0, 1, 2, 3


@njit(cache=True)
def revision_delta(code, x, values, mean, lower, upper, out):
    m = x.size
    if code == REPLICATOR:
        for i in range(m):
            out[i] = x[i] * (values[i] - mean)
    elif code == BNN:
        total = 0.0
        for i in range(m):
            e = values[i] - mean
            out[i] = e if e > 0.0 else 0.0
            total += out[i]
        for i in range(m):
            out[i] -= x[i] * total
    elif code == SMITH:
        for i in range(m):
            inflow = 0.0
            outflow = 0.0
            for j in range(m):
                d = values[i] - values[j]
                if d > 0.0:
                    inflow += x[j] * d
                elif d < 0.0:
                    outflow -= d
            out[i] = inflow - x[i] * outflow
    else:
        for i in range(m):
            acc = 0.0
            for j in range(m):
                d = values[i] - values[j]
                if d > 0.0:
                    acc += (x[j] - lower[j]) * (upper[i] - x[i]) * d
                elif d < 0.0:
                    acc += (x[i] - lower[i]) * (upper[j] - x[j]) * d
            out[i] = acc


@njit(cache=True)
def _field(code, a, b, x, y, l1, u1, l2, u2, dx, dy, v1, v2):
    m1, m2 = a.shape
    for i in range(m1):
        s = 0.0
        for j in range(m2):
            s += a[i, j] * y[j]
        v1[i] = s
    for j in range(m2):
        s = 0.0
        for i in range(m1):
            s += x[i] * b[i, j]
        v2[j] = s
    mean1 = 0.0
    for i in range(m1):
        mean1 += x[i] * v1[i]
    mean2 = 0.0
    for j in range(m2):
        mean2 += y[j] * v2[j]
    revision_delta(code, x, v1, mean1, l1, u1, dx)
    revision_delta(code, y, v2, mean2, l2, u2, dy)


@njit(cache=True)
def _finish_step(z, n_proj):
    """Apply the drift policy to an updated policy vector in place.

    Returns the new projection count, or -1 when the vector is not finite.
    """
    total = 0.0
    lo = 0.0
    for i in range(z.size):
        if not np.isfinite(z[i]):
            return -1
        total += z[i]
        if z[i] < lo:
            lo = z[i]
    drift = max(abs(total - 1.0), -lo)
    if drift > SIMPLEX_TOL:
        s = 0.0
        for i in range(z.size):
            if z[i] < 0.0:
                z[i] = 0.0
            s += z[i]
        if s <= 0.0:
            return -1
        for i in range(z.size):
            z[i] /= s
        return n_proj + 1
    if lo < 0.0:
        for i in range(z.size):
            if z[i] < 0.0:
                z[i] = 0.0
    return n_proj


@njit(cache=True)
def _in_box(z, lower, upper):
    for i in range(z.size):
        if z[i] < lower[i] - SIMPLEX_TOL or z[i] > upper[i] + SIMPLEX_TOL:
            return False
    return True


@njit(cache=True)
def rk4_static(code, a, b, x0, y0, h, n_steps, record_every, l1, u1, l2, u2, check_box,
               out_x, out_y, out_step):
    """Fixed-step RK4 on a static game.

    Returns (status, step_of_failure, n_records, n_projections).
    """
    m1, m2 = a.shape
    x = x0.copy()
    y = y0.copy()
    kx = np.empty((4, m1))
    ky = np.empty((4, m2))
    tx = np.empty(m1)
    ty = np.empty(m2)
    v1 = np.empty(m1)
    v2 = np.empty(m2)
    n_proj = 0
    rec = 0
    out_x[0] = x
    out_y[0] = y
    out_step[0] = 0
    rec = 1
    for n in range(n_steps):
        _field(code, a, b, x, y, l1, u1, l2, u2, kx[0], ky[0], v1, v2)
        for stage in range(1, 4):
            w = 0.5 * h if stage < 3 else h
            for i in range(m1):
                tx[i] = x[i] + w * kx[stage - 1, i]
            for j in range(m2):
                ty[j] = y[j] + w * ky[stage - 1, j]
            _field(code, a, b, tx, ty, l1, u1, l2, u2, kx[stage], ky[stage], v1, v2)
        for i in range(m1):
            x[i] += h / 6.0 * (kx[0, i] + 2.0 * kx[1, i] + 2.0 * kx[2, i] + kx[3, i])
        for j in range(m2):
            y[j] += h / 6.0 * (ky[0, j] + 2.0 * ky[1, j] + 2.0 * ky[2, j] + ky[3, j])
        n_proj = _finish_step(x, n_proj)
        if n_proj < 0:
            return NON_FINITE, n + 1, rec, 0
        n_proj = _finish_step(y, n_proj)
        if n_proj < 0:
            return NON_FINITE, n + 1, rec, 0
        if check_box and not (_in_box(x, l1, u1) and _in_box(y, l2, u2)):
            return OUT_OF_BOX, n + 1, rec, n_proj
        if (n + 1) % record_every == 0 or n + 1 == n_steps:
            out_x[rec] = x
            out_y[rec] = y
            out_step[rec] = n + 1
            rec += 1
    return OK, n_steps, rec, n_proj


@njit(cache=True)
def schedule_matchup(skind, t, phase_length, initial_length, segment_length, v_max):
    """(matchup index RP=0/SR=1/PS=2, scale factor) at step ``t``."""
    if skind == PHASE_SWITCHED:
        phase = int(t // phase_length)
        return phase % 3, v_max
    if t < initial_length:
        return 0, v_max
    seg = int((t - initial_length) // segment_length) + 1
    if seg > 4:
        return 2, v_max
    frac = (t - initial_length - (seg - 1) * segment_length) / segment_length
    if seg == 1:
        return 0, v_max + (1.0 - v_max) * frac
    if seg == 2:
        return 1, 1.0 + (v_max - 1.0) * frac
    if seg == 3:
        return 1, v_max + (1.0 - v_max) * frac
    return 2, 1.0 + (v_max - 1.0) * frac


@njit(cache=True)
def fill_scaled_rps(matchup, v, a, b):
    a[0, 0] = 0.0
    a[0, 1] = -1.0
    a[0, 2] = 1.0
    a[1, 0] = 1.0
    a[1, 1] = 0.0
    a[1, 2] = -1.0
    a[2, 0] = -1.0
    a[2, 1] = 1.0
    a[2, 2] = 0.0
    if matchup == 0:
        a[0, 1] = -v
        a[1, 0] = v
    elif matchup == 1:
        a[2, 0] = -v
        a[0, 2] = v
    else:
        a[1, 2] = -v
        a[2, 1] = v
    for i in range(3):
        for j in range(3):
            b[i, j] = a[j, i]


@njit(cache=True)
def sample_action(p, u):
    c = 0.0
    for i in range(p.size):
        c += p[i]
        if u < c:
            return i
    for i in range(p.size - 1, -1, -1):
        if p[i] > 0.0:
            return i
    return p.size - 1


@njit(cache=True)
def buffer_push(ipar, buf_a, buf_r, sums, counts, action, reward):
    cap = ipar[I_CAPACITY]
    if ipar[I_SIZE] < cap:
        pos = (ipar[I_HEAD] + ipar[I_SIZE]) % cap
        ipar[I_SIZE] += 1
    else:
        pos = ipar[I_HEAD]
        old = buf_a[pos]
        counts[old] -= 1
        if counts[old] == 0:
            sums[old] = 0.0
        else:
            sums[old] -= buf_r[pos]
        ipar[I_HEAD] = (ipar[I_HEAD] + 1) % cap
    buf_a[pos] = action
    buf_r[pos] = reward
    sums[action] += reward
    counts[action] += 1


@njit(cache=True)
def buffer_averages(ipar, sums, counts, rbar):
    total = 0.0
    for i in range(sums.size):
        rbar[i] = sums[i] / counts[i] if counts[i] > 0 else 0.0
        total += sums[i]
    return total / ipar[I_SIZE]


@njit(cache=True)
def _agent_update(ipar, fpar, policy, buf_a, buf_r, sums, counts, lower, upper, cum,
                  scratch, delta, action, reward, values, n_proj):
    """One learner update. Returns (status, component, n_proj)."""
    kind = ipar[I_KIND]
    m = policy.size
    alpha = fpar[F_ALPHA]
    if kind == ERID:
        buffer_push(ipar, buf_a, buf_r, sums, counts, action, reward)
        mean = buffer_averages(ipar, sums, counts, scratch)
        revision_delta(ipar[I_PROTOCOL], policy, scratch, mean, lower, upper, delta)
        for i in range(m):
            scratch[i] = policy[i] + alpha * delta[i]
            if scratch[i] < -SIMPLEX_TOL:
                return STEP_BOUND, i, n_proj
    elif kind == CROSS:
        rmin = fpar[F_RMIN]
        rmax = fpar[F_RMAX]
        if rmax == rmin:
            if reward != rmin:
                return REWARD_RANGE, action, n_proj
            r = 0.0
        else:
            if reward < rmin or reward > rmax:
                return REWARD_RANGE, action, n_proj
            r = (reward - rmin) / (rmax - rmin)
        for i in range(m):
            if i == action:
                scratch[i] = policy[i] + alpha * r * (1.0 - policy[i])
            else:
                scratch[i] = policy[i] - alpha * r * policy[i]
    else:
        # Hedge agents carry the log of their initial policy in ``lower``
        rate = fpar[F_HEDGE_RATE]
        top = -np.inf
        for i in range(m):
            cum[i] += values[i]
            scratch[i] = lower[i] + rate * cum[i]
            if scratch[i] > top:
                top = scratch[i]
        s = 0.0
        for i in range(m):
            scratch[i] = np.exp(scratch[i] - top)
            s += scratch[i]
        for i in range(m):
            scratch[i] /= s
    n_proj = _finish_step(scratch, n_proj)
    if n_proj < 0:
        return NON_FINITE, 0, 0
    if kind == ERID and ipar[I_PROTOCOL] == SRP and not _in_box(scratch, lower, upper):
        return OUT_OF_BOX, 0, n_proj
    for i in range(m):
        policy[i] = scratch[i]
    return OK, 0, n_proj


@njit(cache=True)
def run_block(t0, n, uniforms, noise, noisy, skind, phase_length, initial_length, segment_length, v_max,
              a, b, self_play,
              ip1, fp1, pol1, ba1, br1, su1, co1, lo1, up1, cu1,
              ip2, fp2, pol2, ba2, br2, su2, co2, lo2, up2, cu2):
    """Advance both seats ``n`` steps from step index ``t0``.

    When ``noisy`` is set, ``noise[k, seat]`` is added to the sampled reward of
    that seat at step ``t0 + k``. Returns (status, step, seat, component,
    n_proj) where ``step``/``seat`` locate a failure.
    """
    m1, m2 = a.shape
    s1 = np.empty(m1)
    d1 = np.empty(m1)
    s2 = np.empty(m2)
    d2 = np.empty(m2)
    val1 = np.empty(m1)
    val2 = np.empty(m2)
    n_proj = 0
    for k in range(n):
        t = t0 + k
        if skind != STATIC:
            matchup, v = schedule_matchup(skind, float(t), phase_length, initial_length,
                                          segment_length, v_max)
            fill_scaled_rps(matchup, v, a, b)
        a1 = sample_action(pol1, uniforms[k, 0])
        if self_play:
            a2 = sample_action(pol1, uniforms[k, 1])
        else:
            a2 = sample_action(pol2, uniforms[k, 1])
        opp = pol1 if self_play else pol2
        if ip1[I_KIND] == HEDGE:
            for i in range(m1):
                s = 0.0
                for j in range(m2):
                    s += a[i, j] * opp[j]
                val1[i] = s
        if not self_play and ip2[I_KIND] == HEDGE:
            for j in range(m2):
                s = 0.0
                for i in range(m1):
                    s += pol1[i] * b[i, j]
                val2[j] = s
        r1 = a[a1, a2]
        r2 = b[a1, a2]
        if noisy:
            r1 += noise[k, 0]
            r2 += noise[k, 1]
        # seat-2 values above already used seat 1's pre-update policy
        status, comp, n_proj = _agent_update(ip1, fp1, pol1, ba1, br1, su1, co1, lo1, up1, cu1,
                                             s1, d1, a1, r1, val1, n_proj)
        if status != OK:
            return status, t, 0, comp, n_proj
        if not self_play:
            status, comp, n_proj = _agent_update(ip2, fp2, pol2, ba2, br2, su2, co2, lo2, up2, cu2,
                                                 s2, d2, a2, r2, val2, n_proj)
            if status != OK:
                return status, t, 1, comp, n_proj
    return OK, t0 + n, 0, 0, n_proj

