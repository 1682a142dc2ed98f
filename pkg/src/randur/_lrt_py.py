"""Pure numpy batch kernel for the likelihood-ratio recursion.

Rows are independent trajectories; the loop runs over time with every
operation vectorised across rows.  Used when the compiled kernel is not
available and as the reference the compiled kernel is checked against.
"""
import numpy as np


def lrt_batch(y, mu1, mu2, sigma, p1, p2, p1_tail, p2_tail, paper_init=False, renorm_every=1):
    """Log likelihood ratios ``log L_t`` for every row of ``y`` and every ``t``.

    ``y`` holds baseline-corrected observations, shape ``(J, T)``.
    """
    y = np.ascontiguousarray(y, dtype=np.float64)
    if y.ndim != 2:
        raise ValueError("y must be a 2-d array (runs x time)")
    n_runs, horizon = y.shape
    delta = len(p1)
    p1 = np.asarray(p1, dtype=np.float64)
    p2 = np.asarray(p2, dtype=np.float64)
    tail = np.concatenate([p1_tail, p2_tail]).astype(np.float64)
    inv_var = 1.0 / (sigma * sigma)
    f1 = (mu1 * y - 0.5 * mu1 * mu1) * inv_var
    f2 = (mu2 * y - 0.5 * mu2 * mu2) * inv_var
    fmax = np.maximum(f1, f2)
    g1 = np.exp(f1 - fmax)
    g2 = np.exp(f2 - fmax)

    out = np.empty((n_runs, horizon))
    if horizon == 0:
        return out
    lam = np.zeros((n_runs, 2 * delta))
    lam[:, 0] = g1[:, 0]
    if paper_init:
        lam[:, delta] = g2[:, 0]
    log_scale = fmax[:, 0].copy()
    norm = lam.sum(axis=1)
    lam /= norm[:, None]
    log_scale += np.log(norm)
    out[:, 0] = np.log(lam @ tail) + log_scale

    new = np.empty_like(lam)
    for k in range(1, horizon):
        a, b = g1[:, k], g2[:, k]
        new[:, 0] = a * (lam[:, delta:] @ p2)
        new[:, 1:delta] = a[:, None] * lam[:, : delta - 1]
        new[:, delta] = b * (lam[:, :delta] @ p1)
        new[:, delta + 1:] = b[:, None] * lam[:, delta: 2 * delta - 1]
        lam, new = new, lam
        log_scale += fmax[:, k]
        if (k + 1) % renorm_every == 0 or k == horizon - 1:
            norm = lam.sum(axis=1)
            if np.any(~(norm > 0)):
                raise FloatingPointError(f"likelihood state vanished at t={k + 1}")
            lam /= norm[:, None]
            log_scale += np.log(norm)
        out[:, k] = np.log(lam @ tail) + log_scale
    return out
