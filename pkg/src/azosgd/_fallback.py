"""Pure-numpy kernels, used when the compiled extension is unavailable.

Same call signatures as ``azosgd._kernels``.
"""
import numpy as np

NOISE_ZERO = 0
NOISE_CONSTANT = 1
NOISE_OSCILLATION = 2
NOISE_MACHINE = 3


def noise_values(sums, kind, level, width):
    """Noise at points whose coordinate sums are ``sums``."""
    sums = np.asarray(sums, dtype=float)
    if kind == NOISE_ZERO:
        return np.zeros_like(sums)
    if kind == NOISE_CONSTANT:
        return np.full_like(sums, level)
    if kind == NOISE_OSCILLATION:
        return level * np.sign(np.sin(sums / width))
    v = 43758.5453 * np.sin(12.9898 * sums)
    return level * (2.0 * (v - np.floor(v)) - 1.0)


def lsq_two_point_coefs(A, b, x, E, idx, tau, kind, level, width):
    """Per-row coefficients ``d/(2 tau) * (f_delta(x + tau e) - f_delta(x - tau e))``.

    Uses ``f(x +- tau e) = (u +- v)^2`` with ``u = a.x - b_i`` and ``v = tau a.e``.
    """
    rows = A[idx]
    u = rows @ x - b[idx]
    v = tau * np.einsum("ij,ij->i", rows, E)
    fp = (u + v) ** 2
    fm = (u - v) ** 2
    if kind != NOISE_ZERO:
        sx = x.sum()
        se = E.sum(axis=1)
        fp = fp + noise_values(sx + tau * se, kind, level, width)
        fm = fm + noise_values(sx - tau * se, kind, level, width)
    return A.shape[1] / (2.0 * tau) * (fp - fm)


def lsq_azo_chunk(A, b, x, x_ag, E, idx, k0, count, batch, gamma, growing,
                  radius, tau, kind, level, width, record, values, xnorms, stop_value):
    """Run ``count`` AZO-SGD iterations starting at iteration ``k0``.

    Updates ``x`` and ``x_ag`` in place; see the compiled twin for the
    output contract.
    """
    m = A.shape[0]
    gnorm = 0.0
    for t in range(count):
        k = k0 + t
        inv = 1.0 / (1.0 + k / 6.0)
        gk = gamma * (k + 1) if growing else gamma
        x_md = inv * x + (1.0 - inv) * x_ag
        block = E[t * batch:(t + 1) * batch]
        c = lsq_two_point_coefs(A, b, x_md, block, idx[t * batch:(t + 1) * batch],
                                tau, kind, level, width)
        g = (c @ block) / batch
        gnorm = float(np.sqrt(g @ g))
        if not np.isfinite(gnorm):
            return t, gnorm, 1
        x -= gk * g
        nrm = float(np.sqrt(x @ x))
        if nrm > radius:
            x *= radius / nrm
            nrm = float(np.sqrt(x @ x))
        xnorms[t] = nrm
        x_ag *= 1.0 - inv
        x_ag += inv * x
        if record[t]:
            r = A @ x_ag - b
            values[t] = (r @ r) / m
            if values[t] <= stop_value:
                return t + 1, gnorm, 2
    return count, gnorm, 0
