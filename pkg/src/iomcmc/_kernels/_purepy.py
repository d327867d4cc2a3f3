"""Pure-numpy fallback implementations of the chain inner loops.

Semantics must match iomcmc._kernels._core exactly: the driver pre-draws
all randomness, so both backends consume identical streams.
"""
import numpy as np

NAME = "python"


def pcn_dense_chain(W, c, g, s, inv_sigma2, beta, z, b, normals, log_unifs, out_loglam, out_accept):
    """Run len(log_unifs) pCN iterations for the affine generator b = Wz + c.

    z and b are the current state and are updated in place; out_loglam
    receives the BKE log likelihood ratio of the post-update state at every
    iteration.  Returns the number of accepted moves.
    """
    keep = np.sqrt(1.0 - beta * beta)
    gs = g - 0.5 * s
    rnorm2 = float(np.sum((g - b) ** 2))
    n_acc = 0
    for t in range(log_unifs.size):
        z_new = keep * z + beta * normals[t]
        b_new = W @ z_new + c
        rnorm2_new = float(np.sum((g - b_new) ** 2))
        log_alpha = 0.5 * inv_sigma2 * (rnorm2 - rnorm2_new)
        if log_unifs[t] < (log_alpha if log_alpha < 0.0 else 0.0):
            z[:] = z_new
            b[:] = b_new
            rnorm2 = rnorm2_new
            out_accept[t] = 1
            n_acc += 1
        else:
            out_accept[t] = 0
        out_loglam[t] = inv_sigma2 * float(np.dot(gs - b, s))
    return n_acc


def _lump_image(cx, cy, xs, ys, pref, inv2we2):
    ex = np.exp(-((xs - cx) ** 2) * inv2we2)
    ey = np.exp(-((ys - cy) ** 2) * inv2we2)
    return pref * np.outer(ex, ey).ravel()


def lumpy_walk_chain(
    centers, b, g, s, xs, ys, pref, inv2we2, inv_sigma2, fov_x, fov_y,
    lump_idx, steps, log_unifs, out_loglam, out_accept,
):
    """Fixed-count random-walk chain over lump centers.

    centers (n, 2) and the background image b are updated in place.
    Proposals falling outside the field of view have zero prior and are
    rejected outright.  Returns the number of accepted moves.
    """
    gs = g - 0.5 * s
    rnorm2 = float(np.sum((g - b) ** 2))
    n_acc = 0
    for t in range(log_unifs.size):
        i = lump_idx[t]
        cx, cy = centers[i]
        nx_, ny_ = cx + steps[t, 0], cy + steps[t, 1]
        if 0.0 <= nx_ <= fov_x and 0.0 <= ny_ <= fov_y:
            ex_old = np.exp(-((xs - cx) ** 2) * inv2we2)
            ey_old = np.exp(-((ys - cy) ** 2) * inv2we2)
            ex_new = np.exp(-((xs - nx_) ** 2) * inv2we2)
            ey_new = np.exp(-((ys - ny_) ** 2) * inv2we2)
            b_new = b + pref * (np.outer(ex_new, ey_new) - np.outer(ex_old, ey_old)).ravel()
            rnorm2_new = float(np.sum((g - b_new) ** 2))
            log_alpha = 0.5 * inv_sigma2 * (rnorm2 - rnorm2_new)
            if log_unifs[t] < (log_alpha if log_alpha < 0.0 else 0.0):
                centers[i, 0] = nx_
                centers[i, 1] = ny_
                b[:] = b_new
                rnorm2 = rnorm2_new
                out_accept[t] = 1
                n_acc += 1
            else:
                out_accept[t] = 0
        else:
            out_accept[t] = 0
        out_loglam[t] = inv_sigma2 * float(np.dot(gs - b, s))
    return n_acc
