"""Compiled numeric kernels shared by the public wrappers and the episode loop.

Every function here works on plain float64 arrays so that the step-by-step
API and the batched episode runner go through the same arithmetic and produce
bit-identical results.
"""

import math

import numpy as np
from numba import njit

MEAN_FLOOR = 1e-3
INITIAL_STEP_MIN = 1e-12

FAIR_UCB = 0
HIGH_STARTUP = 1
BASELINE_UCB = 2


@njit(cache=True)
def nsw_value(pi, mu):
    out = 1.0
    for j in range(mu.shape[0]):
        s = 0.0
        for a in range(mu.shape[1]):
            s += pi[a] * mu[j, a]
        out *= s
    return out


@njit(cache=True)
def agent_means(pi, mu, out):
    for j in range(mu.shape[0]):
        s = 0.0
        for a in range(mu.shape[1]):
            s += pi[a] * mu[j, a]
        out[j] = s


@njit(cache=True)
def log_nsw_value(pi, mu):
    out = 0.0
    for j in range(mu.shape[0]):
        s = 0.0
        for a in range(mu.shape[1]):
            s += pi[a] * mu[j, a]
        if s <= 0.0:
            return -np.inf
        out += math.log(s)
    return out


@njit(cache=True)
def log_nsw_grad(pi, mu, means, grad):
    """Gradient of sum_j log(pi . mu_j); ``means`` must hold pi . mu_j."""
    K = mu.shape[1]
    for a in range(K):
        grad[a] = 0.0
    for j in range(mu.shape[0]):
        inv = 1.0 / means[j]
        for a in range(K):
            grad[a] += mu[j, a] * inv


@njit(cache=True)
def project_simplex_into(v, out, work):
    """Sort-and-threshold projection of ``v`` written into ``out``.

    ``work`` is scratch of the same length; insertion sort keeps the small-K
    case allocation free.
    """
    K = v.shape[0]
    for i in range(K):
        x = v[i]
        k = i
        while k > 0 and work[k - 1] < x:
            work[k] = work[k - 1]
            k -= 1
        work[k] = x
    css = 0.0
    theta = 0.0
    for i in range(K):
        css += work[i]
        t = (css - 1.0) / (i + 1)
        if work[i] - t > 0.0:
            theta = t
    for a in range(K):
        x = v[a] - theta
        out[a] = x if x > 0.0 else 0.0


@njit(cache=True)
def project_simplex(v):
    out = np.empty(v.shape[0])
    project_simplex_into(v, out, np.empty(v.shape[0]))
    return out


@njit(cache=True)
def _dot(x, y):
    s = 0.0
    for i in range(x.shape[0]):
        s += x[i] * y[i]
    return s


@njit(cache=True)
def project_halfspace_into(v, c, b, out, work, shifted):
    """Projection onto {simplex} ∩ {c.pi <= b} written into ``out``.

    Returns False (leaving ``out`` untouched) when the intersection is
    empty. The active-constraint case bisects on the half-space multiplier
    m; c . proj(v - m c) is nonincreasing in m.
    """
    K = v.shape[0]
    cmin = c[0]
    for a in range(1, K):
        if c[a] < cmin:
            cmin = c[a]
    if cmin > b:
        return False
    project_simplex_into(v, out, work)
    if _dot(c, out) <= b:
        return True
    lo = 0.0
    hi = 1.0
    for _ in range(200):
        for a in range(K):
            shifted[a] = v[a] - hi * c[a]
        project_simplex_into(shifted, out, work)
        if _dot(c, out) <= b:
            break
        lo = hi
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        for a in range(K):
            shifted[a] = v[a] - mid * c[a]
        project_simplex_into(shifted, out, work)
        if _dot(c, out) <= b:
            hi = mid
        else:
            lo = mid
    for a in range(K):
        shifted[a] = v[a] - hi * c[a]
    project_simplex_into(shifted, out, work)
    return True


@njit(cache=True)
def project_simplex_halfspace(v, c, b):
    K = v.shape[0]
    out = np.full(K, np.nan)
    ok = project_halfspace_into(v, c, b, out, np.empty(K), np.empty(K))
    return out, ok


@njit(cache=True)
def _moved(x, y):
    for a in range(x.shape[0]):
        if x[a] != y[a]:
            return True
    return False


@njit(cache=True)
def pga_log_nsw(mu, min_improvement, window, max_iters, step):
    """Projected gradient ascent on log NSW from the uniform policy.

    Each iteration backtracks from ``step`` by halving until the objective
    does not decrease. Stops when the iterate stops moving, when the gain
    over the last ``window`` iterations is below ``min_improvement``, or
    after ``max_iters`` iterations.
    """
    N, K = mu.shape
    x = np.full(K, 1.0 / K)
    cand = np.empty(K)
    trial = np.empty(K)
    work = np.empty(K)
    means = np.empty(N)
    grad = np.empty(K)
    hist = np.empty(window + 1)
    f = log_nsw_value(x, mu)
    hist[0] = f
    if not np.isfinite(f):
        return x, f
    for it in range(1, max_iters + 1):
        agent_means(x, mu, means)
        log_nsw_grad(x, mu, means, grad)
        s = step
        accepted = False
        while s >= INITIAL_STEP_MIN:
            for a in range(K):
                trial[a] = x[a] + s * grad[a]
            project_simplex_into(trial, cand, work)
            fc = log_nsw_value(cand, mu)
            if fc >= f:
                accepted = True
                break
            s *= 0.5
        if not accepted or not _moved(x, cand):
            break
        x[:] = cand
        f = fc
        hist[it % (window + 1)] = f
        if it >= window and f - hist[(it - window) % (window + 1)] < min_improvement:
            break
    return x, f


@njit(cache=True)
def nsw_linear_value(pi, mu, bonus):
    return nsw_value(pi, mu) + _dot(pi, bonus)


@njit(cache=True)
def nsw_linear_grad(pi, mu, bonus, means, grad):
    N, K = mu.shape
    F = 1.0
    for j in range(N):
        F *= means[j]
    for a in range(K):
        grad[a] = bonus[a]
    if F == 0.0:
        return
    for j in range(N):
        r = F / means[j]
        for a in range(K):
            grad[a] += r * mu[j, a]


@njit(cache=True)
def pga_nsw_linear_single(mu, bonus, c, b, constrained, x0,
                          min_improvement, window, max_iters, step):
    """Ascent on F(pi, mu) + bonus . pi from the projection of ``x0``."""
    N, K = mu.shape
    x = np.empty(K)
    cand = np.empty(K)
    trial = np.empty(K)
    work = np.empty(K)
    shifted = np.empty(K)
    means = np.empty(N)
    grad = np.empty(K)
    hist = np.empty(window + 1)
    if constrained:
        project_halfspace_into(x0, c, b, x, work, shifted)
    else:
        project_simplex_into(x0, x, work)
    f = nsw_linear_value(x, mu, bonus)
    hist[0] = f
    for it in range(1, max_iters + 1):
        agent_means(x, mu, means)
        nsw_linear_grad(x, mu, bonus, means, grad)
        s = step
        accepted = False
        while s >= INITIAL_STEP_MIN:
            for a in range(K):
                trial[a] = x[a] + s * grad[a]
            if constrained:
                project_halfspace_into(trial, c, b, cand, work, shifted)
            else:
                project_simplex_into(trial, cand, work)
            fc = nsw_linear_value(cand, mu, bonus)
            if fc >= f:
                accepted = True
                break
            s *= 0.5
        if not accepted or not _moved(x, cand):
            break
        x[:] = cand
        f = fc
        hist[it % (window + 1)] = f
        if it >= window and f - hist[(it - window) % (window + 1)] < min_improvement:
            break
    return x, f


@njit(cache=True)
def pga_nsw_linear(mu, bonus, c, b, constrained, starts,
                   min_improvement, window, max_iters, step):
    """Best local optimum over the rows of ``starts`` (earliest row wins ties)."""
    best_x, best_f = pga_nsw_linear_single(
        mu, bonus, c, b, constrained, starts[0],
        min_improvement, window, max_iters, step)
    for r in range(1, starts.shape[0]):
        x, f = pga_nsw_linear_single(
            mu, bonus, c, b, constrained, starts[r],
            min_improvement, window, max_iters, step)
        if f > best_f:
            best_x = x
            best_f = f
    return best_x, best_f


@njit(cache=True)
def width_value(mu_hat, count, log_term, scale):
    v = 1.0 - mu_hat
    if v < 0.0:
        v = 0.0
    return scale * (math.sqrt(12.0 * v * log_term / count) + 12.0 * log_term / count)


@njit(cache=True)
def fair_log_term(N, K, T, t, delta, anytime):
    if anytime:
        return math.log(8.0 * N * K * float(t) * float(t) / delta)
    return math.log(4.0 * N * K * float(T) / delta)


@njit(cache=True)
def clamp_floor(m):
    out = m.copy()
    for j in range(out.shape[0]):
        for a in range(out.shape[1]):
            if out[j, a] < MEAN_FLOOR:
                out[j, a] = MEAN_FLOOR
    return out


@njit(cache=True)
def empirical_means(counts, sums):
    N, K = sums.shape
    out = np.zeros((N, K))
    for a in range(K):
        if counts[a] > 0:
            for j in range(N):
                out[j, a] = sums[j, a] / counts[a]
    return out


@njit(cache=True)
def fair_policy(counts, sums, t, T, delta, anytime, scale,
                min_improvement, window, max_iters, step):
    """Policy of the fair UCB algorithm at round ``t`` (1-based)."""
    N, K = sums.shape
    if t <= K:
        pi = np.zeros(K)
        pi[t - 1] = 1.0
        return pi
    mu_hat = empirical_means(counts, sums)
    L = fair_log_term(N, K, T, t, delta, anytime)
    ucb = np.empty((N, K))
    for j in range(N):
        for a in range(K):
            u = mu_hat[j, a] + width_value(mu_hat[j, a], counts[a], L, scale)
            ucb[j, a] = u if u < 1.0 else 1.0
    pi, _ = pga_log_nsw(clamp_floor(ucb), min_improvement, window, max_iters, step)
    return pi


@njit(cache=True)
def startup_log_term(N, K, T, delta):
    return math.log(6.0 * N * K * float(T) / delta)


@njit(cache=True)
def startup_block(N, K, T, delta, multiplier):
    """Consecutive pulls per arm during the warm-up (at least one)."""
    blk = multiplier * N * N * startup_log_term(N, K, T, delta) * math.log(float(T))
    return blk if blk > 1.0 else 1.0


@njit(cache=True)
def eta_vector(counts, mu_hat, widths, N, K, T, delta):
    l6 = startup_log_term(N, K, T, delta)
    lk = math.log(6.0 * K * float(T) / delta)
    ln_t = math.log(float(T))
    shortfall_coef = ((4.0 * math.sqrt(lk) + 6.0 * math.sqrt(2.0) * l6 * math.sqrt(2.0 + 2.0 * ln_t))
                      * math.sqrt(K / float(T)))
    count_coef = ((4.0 * math.sqrt(lk) + math.sqrt(1.0 + ln_t)) * math.sqrt(float(T) / K)
                  + 12.0 * math.sqrt(2.0) * math.sqrt(float(N)) * l6 * math.sqrt(2.0 + 2.0 * ln_t))
    width_coef = 1.0 / (20.0 * math.sqrt(float(N)) / 19.0 - 1.0)
    eta = np.empty(K)
    for a in range(K):
        short = 0.0
        wsum = 0.0
        for j in range(N):
            short += 1.0 - mu_hat[j, a]
            wsum += widths[j, a]
        eta[a] = shortfall_coef * short + count_coef / counts[a] + width_coef * wsum
    return eta


@njit(cache=True)
def dirichlet_start(u, K):
    """Uniform random simplex point from K uniforms (normalized exponentials)."""
    x = np.empty(K)
    s = 0.0
    for a in range(K):
        e = -math.log(1.0 - u[a])
        x[a] = e
        s += e
    if s <= 0.0:
        return np.full(K, 1.0 / K)
    return x / s


@njit(cache=True)
def make_starts(K, aux, restarts):
    starts = np.empty((restarts, K))
    starts[0, :] = 1.0 / K
    for r in range(1, restarts):
        starts[r, :] = dirichlet_start(aux[(r - 1) * K:r * K], K)
    return starts


@njit(cache=True)
def high_startup_policy(counts, sums, t, T, delta, multiplier, u_fallback, aux, restarts,
                        min_improvement, window, max_iters, step):
    """Policy of the high start-up cost algorithm; second value flags the fallback."""
    N, K = sums.shape
    blk = startup_block(N, K, T, delta, multiplier)
    if t <= K * blk:
        pi = np.zeros(K)
        arm = int(math.ceil(t / blk))
        if arm > K:
            arm = K
        if arm < 1:
            arm = 1
        pi[arm - 1] = 1.0
        return pi, False
    mu_hat = empirical_means(counts, sums)
    c = np.empty(K)
    for a in range(K):
        s = 0.0
        for j in range(N):
            s += 1.0 - mu_hat[j, a]
        c[a] = s
    b = 1.0 + 2.0 * math.log(float(T))
    cmin = c.min()
    if cmin > b:
        pi = np.zeros(K)
        arm = int(u_fallback * K)
        if arm >= K:
            arm = K - 1
        pi[arm] = 1.0
        return pi, True
    L = startup_log_term(N, K, T, delta)
    widths = np.empty((N, K))
    for j in range(N):
        for a in range(K):
            widths[j, a] = width_value(mu_hat[j, a], counts[a], L, 1.0)
    eta = eta_vector(counts, mu_hat, widths, N, K, T, delta)
    starts = make_starts(K, aux, restarts)
    pi, _ = pga_nsw_linear(clamp_floor(mu_hat), eta, c, b, True, starts,
                           min_improvement, window, max_iters, step)
    return pi, False


@njit(cache=True)
def baseline_bonus(counts, N, K, t, scale):
    alpha = float(N)
    lg = math.log(float(N) * K * float(t))
    out = np.empty(K)
    for a in range(K):
        out[a] = scale * alpha * math.sqrt(lg / counts[a])
    return out


@njit(cache=True)
def baseline_policy(counts, sums, t, scale, aux, restarts,
                    min_improvement, window, max_iters, step):
    N, K = sums.shape
    if t <= K:
        pi = np.zeros(K)
        pi[t - 1] = 1.0
        return pi
    mu_hat = empirical_means(counts, sums)
    bonus = baseline_bonus(counts, N, K, t, scale)
    starts = make_starts(K, aux, restarts)
    dummy = np.zeros(K)
    pi, _ = pga_nsw_linear(clamp_floor(mu_hat), bonus, dummy, 0.0, False, starts,
                           min_improvement, window, max_iters, step)
    return pi


@njit(cache=True)
def sample_arm(pi, u):
    """Inverse-CDF draw; returns a 0-based arm index."""
    K = pi.shape[0]
    acc = 0.0
    last = 0
    for a in range(K):
        if pi[a] > 0.0:
            last = a
        acc += pi[a]
        if u < acc:
            return a
    return last


@njit(cache=True)
def aux_width(kind, K, restarts):
    if kind == FAIR_UCB:
        return 0
    if kind == HIGH_STARTUP:
        return 1 + (restarts - 1) * K
    return (restarts - 1) * K


@njit(cache=True)
def run_chunk(kind, mu_star, opt_nsw, counts, sums, t0, T, uniforms,
              delta, anytime, scale, multiplier, bonus_scale, restarts,
              min_improvement, window, max_iters, step,
              coverage_scale, cum0, out_arm, out_pi, out_nsw, out_cum, diag):
    """Play rounds t0 .. t0 + len(uniforms) - 1 in place.

    ``uniforms`` rows are laid out as [aux..., arm draw, reward draws (N)].
    ``diag`` accumulates [coverage violated flag, sum_a pi_a / N_a, fallback
    count]; the first two only over rounds t > K with every arm pulled.
    """
    N, K = mu_star.shape
    na = aux_width(kind, K, restarts)
    cum = cum0
    L_cov_fixed = fair_log_term(N, K, T, 1, delta, False)
    for i in range(uniforms.shape[0]):
        t = t0 + i
        row = uniforms[i]
        if kind == FAIR_UCB:
            pi = fair_policy(counts, sums, t, T, delta, anytime, scale,
                             min_improvement, window, max_iters, step)
        elif kind == HIGH_STARTUP:
            pi, fell_back = high_startup_policy(
                counts, sums, t, T, delta, multiplier, row[0], row[1:na], restarts,
                min_improvement, window, max_iters, step)
            if fell_back:
                diag[2] += 1.0
        else:
            pi = baseline_policy(counts, sums, t, bonus_scale, row[:na], restarts,
                                 min_improvement, window, max_iters, step)
        all_pulled = True
        for a in range(K):
            if counts[a] == 0:
                all_pulled = False
        if t > K and all_pulled:
            s = 0.0
            for a in range(K):
                s += pi[a] / counts[a]
            diag[1] += s
            if diag[0] == 0.0:
                L = fair_log_term(N, K, T, t, delta, True) if anytime else L_cov_fixed
                for a in range(K):
                    for j in range(N):
                        m = sums[j, a] / counts[a]
                        if abs(mu_star[j, a] - m) > width_value(m, counts[a], L, coverage_scale):
                            diag[0] = 1.0
        arm = sample_arm(pi, row[na])
        for j in range(N):
            if row[na + 1 + j] < mu_star[j, arm]:
                sums[j, arm] += 1.0
        counts[arm] += 1
        v = nsw_value(pi, mu_star)
        cum += opt_nsw - v
        out_arm[i] = arm
        out_pi[i, :] = pi
        out_nsw[i] = v
        out_cum[i] = cum
    return cum
