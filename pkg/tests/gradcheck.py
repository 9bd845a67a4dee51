"""Central finite-difference oracle for MLP gradients.

The oracle loss is an independent forward pass in extended precision, so
the difference quotient is not swamped by float64 rounding on entries
whose gradient is many orders of magnitude below the loss itself.
"""
import numpy as np

LD = np.longdouble


def reference_loss(params, X, y, feat_mean, feat_std):
    """Mean softmax cross-entropy of a ReLU MLP; params = [W0, b0, W1, b1, ...]."""
    H = (np.asarray(X, LD) - np.asarray(feat_mean, LD)) / np.asarray(feat_std, LD)
    n_layers = len(params) // 2
    for i in range(n_layers):
        H = H @ params[2 * i] + params[2 * i + 1]
        if i < n_layers - 1:
            H = np.maximum(H, LD(0))
    z = H - H.max(axis=1, keepdims=True)
    log_probs = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    return -log_probs[np.arange(len(y)), np.asarray(y)].mean()


def finite_difference_grads(model, X, y, h=1e-5):
    # h small enough that no hidden ReLU crosses its kink on the test batches
    params = [p.astype(LD) for p in model.params]
    out = []
    for p in params:
        g = np.zeros(p.shape)
        for idx in np.ndindex(p.shape):
            orig = p[idx]
            p[idx] = orig + LD(h)
            up = reference_loss(params, X, y, model.feat_mean, model.feat_std)
            p[idx] = orig - LD(h)
            down = reference_loss(params, X, y, model.feat_mean, model.feat_std)
            p[idx] = orig
            g[idx] = float((up - down) / (2 * LD(h)))
        out.append(g)
    return out


def max_relative_error(analytic, numeric, floor=1e-12):
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst
