"""Hot numeric kernels with numba and pure-numpy implementations.

Every public name here is a dispatcher built by :func:`mfglab._backend.dispatch`.
Kernels whose natural numpy form is already vectorised (backward solves over
the player-count axis, the master equation, Monte Carlo event loops over
pre-drawn random blocks) share a single body that numba compiles as-is.
The phase-plane shooting kernels have two bodies: a loop version for numba
and a batch-vectorised version for numpy.

Conventions: float64 throughout; piecewise-linear tables are clamped to
their end values outside the knot range (np.interp semantics); states are
frozen once |x| or |y| exceeds ``cap`` so that boundary-mismatch signs stay
well defined for blown-up shots.
"""

import numpy as np

from ._backend import dispatch, jit


def _pl_scalar(knots, vals, x):
    # clamped piecewise-linear evaluation, matching np.interp
    if x <= knots[0]:
        return vals[0]
    if x >= knots[-1]:
        return vals[-1]
    j = np.searchsorted(knots, x) - 1
    if j < 0:
        j = 0
    slope = (vals[j + 1] - vals[j]) / (knots[j + 1] - knots[j])
    return vals[j] + slope * (x - knots[j])


_pl_scalar_c = jit(_pl_scalar)


# ---------------------------------------------------------------------------
# Reduced (x, y) phase-plane integration
#   dx/dt = y - x|y| - 2*eta*x
#   dy/dt = -df(x) + y|y|/2 + 2*eta*y
# ---------------------------------------------------------------------------

def _xy_batch_numpy(x0, y0s, eta, kx, kv, dt, n_steps, cap):
    m = y0s.shape[0]
    x = np.full(m, x0)
    y = y0s.copy()
    exited = np.zeros(m, dtype=np.bool_)
    capped = np.zeros(m, dtype=np.bool_)
    for _ in range(n_steps):
        alive = (np.abs(x) <= cap) & (np.abs(y) <= cap)
        capped |= ~alive
        kx1 = y - x * np.abs(y) - 2.0 * eta * x
        ky1 = -np.interp(x, kx, kv) + 0.5 * y * np.abs(y) + 2.0 * eta * y
        x2 = x + 0.5 * dt * kx1
        y2 = y + 0.5 * dt * ky1
        kx2 = y2 - x2 * np.abs(y2) - 2.0 * eta * x2
        ky2 = -np.interp(x2, kx, kv) + 0.5 * y2 * np.abs(y2) + 2.0 * eta * y2
        x3 = x + 0.5 * dt * kx2
        y3 = y + 0.5 * dt * ky2
        kx3 = y3 - x3 * np.abs(y3) - 2.0 * eta * x3
        ky3 = -np.interp(x3, kx, kv) + 0.5 * y3 * np.abs(y3) + 2.0 * eta * y3
        x4 = x + dt * kx3
        y4 = y + dt * ky3
        kx4 = y4 - x4 * np.abs(y4) - 2.0 * eta * x4
        ky4 = -np.interp(x4, kx, kv) + 0.5 * y4 * np.abs(y4) + 2.0 * eta * y4
        xn = x + (dt / 6.0) * (kx1 + 2.0 * kx2 + 2.0 * kx3 + kx4)
        yn = y + (dt / 6.0) * (ky1 + 2.0 * ky2 + 2.0 * ky3 + ky4)
        x = np.where(alive, xn, x)
        y = np.where(alive, yn, y)
        exited |= np.abs(x) > 1.0 + 1e-9
    return x, y, exited, capped


def _xy_batch_loop(x0, y0s, eta, kx, kv, dt, n_steps, cap):
    m = y0s.shape[0]
    xT = np.empty(m)
    yT = np.empty(m)
    exited = np.zeros(m, dtype=np.bool_)
    capped = np.zeros(m, dtype=np.bool_)
    for i in range(m):
        x = x0
        y = y0s[i]
        for _ in range(n_steps):
            if abs(x) > cap or abs(y) > cap:
                capped[i] = True
                break
            kx1 = y - x * abs(y) - 2.0 * eta * x
            ky1 = -_pl_scalar_c(kx, kv, x) + 0.5 * y * abs(y) + 2.0 * eta * y
            x2 = x + 0.5 * dt * kx1
            y2 = y + 0.5 * dt * ky1
            kx2 = y2 - x2 * abs(y2) - 2.0 * eta * x2
            ky2 = -_pl_scalar_c(kx, kv, x2) + 0.5 * y2 * abs(y2) + 2.0 * eta * y2
            x3 = x + 0.5 * dt * kx2
            y3 = y + 0.5 * dt * ky2
            kx3 = y3 - x3 * abs(y3) - 2.0 * eta * x3
            ky3 = -_pl_scalar_c(kx, kv, x3) + 0.5 * y3 * abs(y3) + 2.0 * eta * y3
            x4 = x + dt * kx3
            y4 = y + dt * ky3
            kx4 = y4 - x4 * abs(y4) - 2.0 * eta * x4
            ky4 = -_pl_scalar_c(kx, kv, x4) + 0.5 * y4 * abs(y4) + 2.0 * eta * y4
            x = x + (dt / 6.0) * (kx1 + 2.0 * kx2 + 2.0 * kx3 + kx4)
            y = y + (dt / 6.0) * (ky1 + 2.0 * ky2 + 2.0 * ky3 + ky4)
            if abs(x) > 1.0 + 1e-9:
                exited[i] = True
        xT[i] = x
        yT[i] = y
    return xT, yT, exited, capped


xy_batch = dispatch(_xy_batch_numpy, _xy_batch_loop)


def _xy_path_numpy(x0, y0, eta, kx, kv, dt, n_steps, cap):
    xs = np.empty(n_steps + 1)
    ys = np.empty(n_steps + 1)
    x = float(x0)
    y = float(y0)
    xs[0] = x
    ys[0] = y
    exited = False
    capped = False
    for k in range(n_steps):
        if abs(x) > cap or abs(y) > cap:
            capped = True
            xs[k + 1] = x
            ys[k + 1] = y
            continue
        kx1 = y - x * abs(y) - 2.0 * eta * x
        ky1 = -np.interp(x, kx, kv) + 0.5 * y * abs(y) + 2.0 * eta * y
        x2 = x + 0.5 * dt * kx1
        y2 = y + 0.5 * dt * ky1
        kx2 = y2 - x2 * abs(y2) - 2.0 * eta * x2
        ky2 = -np.interp(x2, kx, kv) + 0.5 * y2 * abs(y2) + 2.0 * eta * y2
        x3 = x + 0.5 * dt * kx2
        y3 = y + 0.5 * dt * ky2
        kx3 = y3 - x3 * abs(y3) - 2.0 * eta * x3
        ky3 = -np.interp(x3, kx, kv) + 0.5 * y3 * abs(y3) + 2.0 * eta * y3
        x4 = x + dt * kx3
        y4 = y + dt * ky3
        kx4 = y4 - x4 * abs(y4) - 2.0 * eta * x4
        ky4 = -np.interp(x4, kx, kv) + 0.5 * y4 * abs(y4) + 2.0 * eta * y4
        x = x + (dt / 6.0) * (kx1 + 2.0 * kx2 + 2.0 * kx3 + kx4)
        y = y + (dt / 6.0) * (ky1 + 2.0 * ky2 + 2.0 * ky3 + ky4)
        if abs(x) > 1.0 + 1e-9:
            exited = True
        xs[k + 1] = x
        ys[k + 1] = y
    return xs, ys, exited, capped


def _xy_path_loop(x0, y0, eta, kx, kv, dt, n_steps, cap):
    xs = np.empty(n_steps + 1)
    ys = np.empty(n_steps + 1)
    x = x0
    y = y0
    xs[0] = x
    ys[0] = y
    exited = False
    capped = False
    for k in range(n_steps):
        if abs(x) > cap or abs(y) > cap:
            capped = True
            xs[k + 1] = x
            ys[k + 1] = y
            continue
        kx1 = y - x * abs(y) - 2.0 * eta * x
        ky1 = -_pl_scalar_c(kx, kv, x) + 0.5 * y * abs(y) + 2.0 * eta * y
        x2 = x + 0.5 * dt * kx1
        y2 = y + 0.5 * dt * ky1
        kx2 = y2 - x2 * abs(y2) - 2.0 * eta * x2
        ky2 = -_pl_scalar_c(kx, kv, x2) + 0.5 * y2 * abs(y2) + 2.0 * eta * y2
        x3 = x + 0.5 * dt * kx2
        y3 = y + 0.5 * dt * ky2
        kx3 = y3 - x3 * abs(y3) - 2.0 * eta * x3
        ky3 = -_pl_scalar_c(kx, kv, x3) + 0.5 * y3 * abs(y3) + 2.0 * eta * y3
        x4 = x + dt * kx3
        y4 = y + dt * ky3
        kx4 = y4 - x4 * abs(y4) - 2.0 * eta * x4
        ky4 = -_pl_scalar_c(kx, kv, x4) + 0.5 * y4 * abs(y4) + 2.0 * eta * y4
        x = x + (dt / 6.0) * (kx1 + 2.0 * kx2 + 2.0 * kx3 + kx4)
        y = y + (dt / 6.0) * (ky1 + 2.0 * ky2 + 2.0 * ky3 + ky4)
        if abs(x) > 1.0 + 1e-9:
            exited = True
        xs[k + 1] = x
        ys[k + 1] = y
    return xs, ys, exited, capped


xy_path = dispatch(_xy_path_numpy, _xy_path_loop)


# ---------------------------------------------------------------------------
# Single-player best response (backward) and population flow (forward)
# ---------------------------------------------------------------------------

def _br_backward(theta, knots, f0v, f1v, psi0T, psi1T, eta, dt):
    """Backward RK4 for -du(i)/dt = f(i,th) - ((u_i - u_{1-i})_+)^2/2 - eta(u_i - u_{1-i})."""
    n = theta.shape[0] - 1
    thmid = 0.5 * (theta[:-1] + theta[1:])
    f0n = np.interp(theta, knots, f0v)
    f1n = np.interp(theta, knots, f1v)
    f0m = np.interp(thmid, knots, f0v)
    f1m = np.interp(thmid, knots, f1v)
    u0 = np.empty(n + 1)
    u1 = np.empty(n + 1)
    a = psi0T
    b = psi1T
    u0[n] = a
    u1[n] = b
    for k in range(n, 0, -1):
        d = a - b
        k0a = f0n[k] - 0.5 * max(d, 0.0) ** 2 - eta * d
        k0b = f1n[k] - 0.5 * max(-d, 0.0) ** 2 + eta * d
        a2 = a + 0.5 * dt * k0a
        b2 = b + 0.5 * dt * k0b
        d = a2 - b2
        k1a = f0m[k - 1] - 0.5 * max(d, 0.0) ** 2 - eta * d
        k1b = f1m[k - 1] - 0.5 * max(-d, 0.0) ** 2 + eta * d
        a3 = a + 0.5 * dt * k1a
        b3 = b + 0.5 * dt * k1b
        d = a3 - b3
        k2a = f0m[k - 1] - 0.5 * max(d, 0.0) ** 2 - eta * d
        k2b = f1m[k - 1] - 0.5 * max(-d, 0.0) ** 2 + eta * d
        a4 = a + dt * k2a
        b4 = b + dt * k2b
        d = a4 - b4
        k3a = f0n[k - 1] - 0.5 * max(d, 0.0) ** 2 - eta * d
        k3b = f1n[k - 1] - 0.5 * max(-d, 0.0) ** 2 + eta * d
        a = a + (dt / 6.0) * (k0a + 2.0 * k1a + 2.0 * k2a + k3a)
        b = b + (dt / 6.0) * (k0b + 2.0 * k1b + 2.0 * k2b + k3b)
        u0[k - 1] = a
        u1[k - 1] = b
    return u0, u1


br_backward = dispatch(_br_backward)


def _pop_forward(y, eta, theta0, dt):
    """Forward RK4 for th' = (1-th)((y)_+ + eta) - th((-y)_+ + eta), y sampled on nodes."""
    n = y.shape[0] - 1
    out = np.empty(n + 1)
    th = theta0
    out[0] = th
    for k in range(n):
        y0 = y[k]
        ym = 0.5 * (y[k] + y[k + 1])
        y1 = y[k + 1]
        up = max(y0, 0.0) + eta
        dn = max(-y0, 0.0) + eta
        k0 = (1.0 - th) * up - th * dn
        t2 = th + 0.5 * dt * k0
        up = max(ym, 0.0) + eta
        dn = max(-ym, 0.0) + eta
        k1 = (1.0 - t2) * up - t2 * dn
        t3 = th + 0.5 * dt * k1
        k2 = (1.0 - t3) * up - t3 * dn
        t4 = th + dt * k2
        up = max(y1, 0.0) + eta
        dn = max(-y1, 0.0) + eta
        k3 = (1.0 - t4) * up - t4 * dn
        th = th + (dt / 6.0) * (k0 + 2.0 * k1 + 2.0 * k2 + k3)
        out[k + 1] = th
    return out


pop_forward = dispatch(_pop_forward)


# ---------------------------------------------------------------------------
# N+1 player backward solves
# ---------------------------------------------------------------------------

def _mpe_backward(f0n, f1n, psi0n, psi1n, eta, dt, n_steps):
    """Symmetric Markov-perfect backward solve; policy recomputed inside every stage.

    Transition intensities for the exchangeable (i, n) chain, all players
    using the instantaneous policy a*(i,n) = (u_i(n) - u_{1-i}(n))_+ :
      own flip        a*(i,n) + eta
      n -> n+1        (N-n) * (a*(1, n+1-i) + eta)
      n -> n-1        n * (a*(0, n-i) + eta)
    The (N-n) / n prefactors vanish exactly where the shifted policy index
    would leave the table, so those entries are never read.
    """
    np1 = f0n.shape[0]
    nn = np1 - 1
    fac_up = nn - np.arange(np1).astype(np.float64)
    fac_dn = np.arange(np1).astype(np.float64)
    out = np.empty((2, np1, n_steps + 1))
    u0 = psi0n.copy()
    u1 = psi1n.copy()
    out[0, :, n_steps] = u0
    out[1, :, n_steps] = u1
    for k in range(n_steps, 0, -1):
        acc0 = np.zeros(np1)
        acc1 = np.zeros(np1)
        s0 = u0
        s1 = u1
        for j in range(4):
            Y = s1 - s0
            a1 = np.maximum(Y, 0.0)
            a0 = np.maximum(-Y, 0.0)
            gp0 = np.zeros(np1)
            gp0[:nn] = fac_up[:nn] * (a1[1:] + eta)
            gp1 = np.zeros(np1)
            gp1[:nn] = fac_up[:nn] * (a1[:nn] + eta)
            gm0 = fac_dn * (a0 + eta)
            gm1 = np.zeros(np1)
            gm1[1:] = fac_dn[1:] * (a0[:nn] + eta)
            d0 = f0n - 0.5 * a0 * a0 + eta * (s1 - s0)
            d1 = f1n - 0.5 * a1 * a1 + eta * (s0 - s1)
            d0[:nn] += gp0[:nn] * (s0[1:] - s0[:nn])
            d1[:nn] += gp1[:nn] * (s1[1:] - s1[:nn])
            d0[1:] += gm0[1:] * (s0[:nn] - s0[1:])
            d1[1:] += gm1[1:] * (s1[:nn] - s1[1:])
            w = 1.0 if (j == 0 or j == 3) else 2.0
            acc0 += w * d0
            acc1 += w * d1
            if j < 3:
                step = 0.5 * dt if j < 2 else dt
                s0 = u0 + step * d0
                s1 = u1 + step * d1
        u0 = u0 + (dt / 6.0) * acc0
        u1 = u1 + (dt / 6.0) * acc1
        out[0, :, k - 1] = u0
        out[1, :, k - 1] = u1
    return out


mpe_backward = dispatch(_mpe_backward)


def _yapprox_backward(dfn, dpsin, eta, dt, n_steps):
    """Backward solve of the value-difference approximation
    -Y'(n) = df(n) - |Y|Y/2 - 2 eta Y + (N-n)(Y_+ + eta)(Y(n+1)-Y(n))
             + n((-Y)_+ + eta)(Y(n-1)-Y(n)).
    """
    np1 = dfn.shape[0]
    nn = np1 - 1
    fac_up = nn - np.arange(np1).astype(np.float64)
    fac_dn = np.arange(np1).astype(np.float64)
    out = np.empty((np1, n_steps + 1))
    y = dpsin.copy()
    out[:, n_steps] = y
    for k in range(n_steps, 0, -1):
        acc = np.zeros(np1)
        s = y
        for j in range(4):
            d = dfn - 0.5 * np.abs(s) * s - 2.0 * eta * s
            cu = fac_up * (np.maximum(s, 0.0) + eta)
            cd = fac_dn * (np.maximum(-s, 0.0) + eta)
            d[:nn] += cu[:nn] * (s[1:] - s[:nn])
            d[1:] += cd[1:] * (s[:nn] - s[1:])
            w = 1.0 if (j == 0 or j == 3) else 2.0
            acc += w * d
            if j < 3:
                step = 0.5 * dt if j < 2 else dt
                s = y + step * d
        y = y + (dt / 6.0) * acc
        out[:, k - 1] = y
    return out


yapprox_backward = dispatch(_yapprox_backward)


def _response_chain_backward(f0n, f1n, psi0n, psi1n, beta0, beta1, eta, dt,
                             n_steps, optimize):
    """Cost-to-go of a reference player while the other N play the decentralized
    policy beta(i, t); optimize=False evaluates the same beta for the reference
    player, optimize=True computes the best response.  Returns values at t=0.
    """
    np1 = f0n.shape[0]
    nn = np1 - 1
    fac_up = nn - np.arange(np1).astype(np.float64)
    fac_dn = np.arange(np1).astype(np.float64)
    u0 = psi0n.copy()
    u1 = psi1n.copy()
    for k in range(n_steps, 0, -1):
        b0n = beta0[k]
        b0m = 0.5 * (beta0[k] + beta0[k - 1])
        b0e = beta0[k - 1]
        b1n = beta1[k]
        b1m = 0.5 * (beta1[k] + beta1[k - 1])
        b1e = beta1[k - 1]
        acc0 = np.zeros(np1)
        acc1 = np.zeros(np1)
        s0 = u0
        s1 = u1
        for j in range(4):
            if j == 0:
                b0 = b0n
                b1 = b1n
            elif j == 3:
                b0 = b0e
                b1 = b1e
            else:
                b0 = b0m
                b1 = b1m
            gp = fac_up * (b1 + eta)
            gm = fac_dn * (b0 + eta)
            if optimize:
                a0 = np.maximum(s0 - s1, 0.0)
                a1 = np.maximum(s1 - s0, 0.0)
                d0 = f0n - 0.5 * a0 * a0 + eta * (s1 - s0)
                d1 = f1n - 0.5 * a1 * a1 + eta * (s0 - s1)
            else:
                d0 = f0n + 0.5 * b0 * b0 + (b0 + eta) * (s1 - s0)
                d1 = f1n + 0.5 * b1 * b1 + (b1 + eta) * (s0 - s1)
            d0[:nn] += gp[:nn] * (s0[1:] - s0[:nn])
            d1[:nn] += gp[:nn] * (s1[1:] - s1[:nn])
            d0[1:] += gm[1:] * (s0[:nn] - s0[1:])
            d1[1:] += gm[1:] * (s1[:nn] - s1[1:])
            w = 1.0 if (j == 0 or j == 3) else 2.0
            acc0 += w * d0
            acc1 += w * d1
            if j < 3:
                step = 0.5 * dt if j < 2 else dt
                s0 = u0 + step * d0
                s1 = u1 + step * d1
        u0 = u0 + (dt / 6.0) * acc0
        u1 = u1 + (dt / 6.0) * acc1
    return u0, u1


response_chain_backward = dispatch(_response_chain_backward)


# ---------------------------------------------------------------------------
# Occupancy master equation and Monte Carlo thinning
# ---------------------------------------------------------------------------

def _kfe_forward(alpha, eta, p0, dt, n_steps):
    """Birth-death master equation for the count m of players in state 0.

    alpha has shape (2, N+1, n_steps+1) and shares the output grid, so stage
    rates are node values or adjacent-node averages.
      m -> m+1 at (N+1-m)(alpha[1, m, t] + eta)
      m -> m-1 at m(alpha[0, m-1, t] + eta)
    """
    np2 = p0.shape[0]
    n_players = np2 - 1
    m_fac = np.arange(np2).astype(np.float64)
    out = np.empty((n_steps + 1, np2))
    p = p0.copy()
    out[0] = p
    for k in range(n_steps):
        a0n = alpha[0, :, k]
        a0m = 0.5 * (alpha[0, :, k] + alpha[0, :, k + 1])
        a0e = alpha[0, :, k + 1]
        a1n = alpha[1, :, k]
        a1m = 0.5 * (alpha[1, :, k] + alpha[1, :, k + 1])
        a1e = alpha[1, :, k + 1]
        acc = np.zeros(np2)
        s = p
        for j in range(4):
            if j == 0:
                a0 = a0n
                a1 = a1n
            elif j == 3:
                a0 = a0e
                a1 = a1e
            else:
                a0 = a0m
                a1 = a1m
            up = np.zeros(np2)
            up[:np2 - 1] = (n_players - m_fac[:np2 - 1]) * (a1 + eta)
            dn = np.zeros(np2)
            dn[1:] = m_fac[1:] * (a0 + eta)
            d = -(up + dn) * s
            d[1:] += up[:np2 - 1] * s[:np2 - 1]
            d[:np2 - 1] += dn[1:] * s[1:]
            w = 1.0 if (j == 0 or j == 3) else 2.0
            acc += w * d
            if j < 3:
                step = 0.5 * dt if j < 2 else dt
                s = p + step * d
        p = p + (dt / 6.0) * acc
        out[k + 1] = p
    return out


kfe_forward = dispatch(_kfe_forward)


def _mc_paths(alpha, eta, dt_pol, n_total, m0, horizon, lam, E, U, n_out):
    """Exact thinning simulation of the occupancy count against rate bound lam.

    Each proposal consumes one exponential gap E[r, j] and one uniform U[r, j];
    the per-replica consumption order is fixed, so results are identical across
    backends.  Returns node samples of m and a per-replica exhaustion flag
    (set when a random block was too short; caller retries with a larger one).
    """
    reps = E.shape[0]
    block = E.shape[1]
    n_pol = alpha.shape[2] - 1
    dt_out = horizon / n_out
    paths = np.empty((reps, n_out + 1))
    exhausted = np.zeros(reps, dtype=np.bool_)
    for r in range(reps):
        t = 0.0
        m = m0
        ptr = 0
        paths[r, 0] = m
        done = False
        for j in range(block):
            t_new = t + E[r, j]
            limit = t_new if t_new < horizon else horizon
            while ptr < n_out and (ptr + 1) * dt_out <= limit:
                ptr += 1
                paths[r, ptr] = m
            if t_new >= horizon:
                while ptr < n_out:
                    ptr += 1
                    paths[r, ptr] = m
                done = True
                break
            pos = t_new / dt_pol
            k = int(pos)
            if k >= n_pol:
                k = n_pol - 1
            w = pos - k
            up = 0.0
            if m < n_total:
                a1 = (1.0 - w) * alpha[1, m, k] + w * alpha[1, m, k + 1]
                up = (n_total - m) * (a1 + eta)
            dn = 0.0
            if m >= 1:
                a0 = (1.0 - w) * alpha[0, m - 1, k] + w * alpha[0, m - 1, k + 1]
                dn = m * (a0 + eta)
            u = U[r, j]
            if u < dn / lam:
                m -= 1
            elif u < (dn + up) / lam:
                m += 1
            t = t_new
        if not done:
            exhausted[r] = True
    return paths, exhausted


mc_paths = dispatch(_mc_paths)
