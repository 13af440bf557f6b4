"""Distillation and self-supervised target losses as pure array functions.

Every function returns the loss value(s) together with analytic gradients
with respect to its feature-matrix inputs, so the module classes only have
to chain them through network backward passes. Keeping them pure makes the
double-loop value oracles and finite-difference gradient checks direct.
"""

import numpy as np

from ..errors import ContractError

STD_EPS = 1e-8


def distillation_errors(zt, zp):
    """Per-state squared L2 distance between target and predictor features."""
    if zt.shape != zp.shape:
        raise ContractError(f"feature shapes differ: {zt.shape} vs {zp.shape}")
    d = zt.astype(np.float64) - zp.astype(np.float64)
    return np.einsum("nd,nd->n", d, d)


def distillation_loss(zt, zp):
    """Mean squared feature distance and its gradient w.r.t. the predictor.

    The target side is treated as a constant (no gradient), which is what
    makes this a distillation loss rather than a joint embedding objective.
    """
    n = zt.shape[0]
    errors = distillation_errors(zt, zp)
    loss = float(errors.mean())
    dzp = (2.0 / n) * (zp - zt)
    return loss, dzp


def sndv_loss(z, z2, tau, hinge=False, unsquared=False):
    """Contrastive distance-matching loss over feature pairs.

    The default form penalizes the squared difference between each pair's
    squared distance and its binary target tau (0 for same-state pairs, 1
    for distinct ones); ``unsquared`` compares tau against the plain
    distance instead, and ``hinge`` switches to the pull/bounded-push form.
    Returns (loss, dz, dz2).
    """
    if z.shape != z2.shape:
        raise ContractError(f"pair shapes differ: {z.shape} vs {z2.shape}")
    n = z.shape[0]
    if n < 2:
        raise ContractError(f"pair batch needs N >= 2, got {n}")
    tau = np.asarray(tau, dtype=z.dtype)
    if tau.shape != (n,):
        raise ContractError(f"tau must have shape ({n},), got {tau.shape}")
    delta = z - z2
    dsq = np.einsum("nd,nd->n", delta, delta)
    if hinge:
        pull = tau == 0
        push_active = (~pull) & (dsq < 1.0)
        per_pair = np.where(pull, dsq, np.maximum(1.0 - dsq, 0.0))
        # d per_pair / d dsq is +1 on pulled pairs, -1 on active pushed ones
        dd = (pull.astype(z.dtype) - push_active.astype(z.dtype)) / n
    else:
        dist = np.sqrt(np.maximum(dsq, 0.0)) if unsquared else dsq
        per_pair = (tau - dist) ** 2
        dd = 2.0 * (dist - tau) / n
        if unsquared:
            dd = dd / (2.0 * np.maximum(dist, 1e-8))
    loss = float(per_pair.mean())
    dz = (2.0 * dd)[:, None] * delta
    return loss, dz, -dz


def _std_and_grad_scale(z):
    """Per-dimension sample std and the factor (z - mean)/((N-1) std)."""
    n = z.shape[0]
    mean = z.mean(axis=0)
    centered = z - mean
    var = np.einsum("nd,nd->d", centered, centered) / (n - 1)
    std = np.sqrt(var + STD_EPS)
    return std, centered / ((n - 1) * std)


def stdim_losses(zg, la, ln, wg, wl, beta1=1e-4, beta2=1e-4):
    """Spatio-temporal contrastive objective with its two regularizers.

    Args:
        zg: global target features of the anchor states, (N, D).
        la: local feature maps of the anchor states, (N, C, H, W).
        ln: local feature maps of the successor states, (N, C, H, W).
        wg: global-to-local projection, (D, C).
        wl: local-to-local projection, (C, C).

    At every spatial location the N anchors score all N successors; the
    diagonal entries are the positives. Per-location loss is the batch-mean
    cross entropy; location losses are summed and the total is averaged over
    locations, with the logit-norm term scaled by beta1 and the negative
    feature-std term by beta2.

    Returns (components dict, dzg, dla, dln, dwg, dwl).
    """
    n, d = zg.shape
    if n < 2:
        raise ContractError(f"contrastive batch needs N >= 2, got {n}")
    if la.shape != ln.shape or la.ndim != 4 or la.shape[0] != n:
        raise ContractError(f"local maps must be (N, C, H, W), got {la.shape}")
    c, h, w = la.shape[1:]
    hw = h * w
    eye = np.eye(n, dtype=zg.dtype)

    lat = np.ascontiguousarray(la.transpose(2, 3, 0, 1)).reshape(hw, n, c)
    lnt = np.ascontiguousarray(ln.transpose(2, 3, 0, 1)).reshape(hw, n, c)
    lnt_t = lnt.transpose(0, 2, 1)

    ag = zg @ wg
    logits_g = np.matmul(ag[None], lnt_t)
    al = np.matmul(lat, wl)
    logits_l = np.matmul(al, lnt_t)

    def ce_and_grad(logits):
        # batch-mean InfoNCE per location, positives on the diagonal
        m = logits.max(axis=2, keepdims=True)
        exp = np.exp(logits - m)
        sums = exp.sum(axis=2, keepdims=True)
        lse = (m + np.log(sums))[:, :, 0]
        diag = logits[:, np.arange(n), np.arange(n)]
        ce = float((lse - diag).mean(axis=1).sum())
        dlogits = (exp / sums - eye) / n
        return ce, dlogits

    l_gl, dlogits_g = ce_and_grad(logits_g)
    l_ll, dlogits_l = ce_and_grad(logits_l)

    norms_g = np.sqrt(np.einsum("knm,knm->k", logits_g, logits_g))
    norms_l = np.sqrt(np.einsum("knm,knm->k", logits_l, logits_l))
    l2 = float(norms_g.sum() + norms_l.sum())

    std, sgrad = _std_and_grad_scale(zg)
    l_sigma = -float(std.mean())

    total = (l_gl + l_ll + beta1 * l2) / hw + beta2 * l_sigma

    dlogits_g = (
        dlogits_g + beta1 * logits_g / np.maximum(norms_g, 1e-12)[:, None, None]
    ) / hw
    dlogits_l = (
        dlogits_l + beta1 * logits_l / np.maximum(norms_l, 1e-12)[:, None, None]
    ) / hw

    dag = np.matmul(dlogits_g, lnt).sum(axis=0)
    dzg = dag @ wg.T
    dwg = zg.T @ dag
    dlnt = np.matmul(dlogits_g.transpose(0, 2, 1), ag[None])

    dal = np.matmul(dlogits_l, lnt)
    dlat = np.matmul(dal, wl.T)
    dwl = np.matmul(lat.transpose(0, 2, 1), dal).sum(axis=0)
    dlnt += np.matmul(dlogits_l.transpose(0, 2, 1), al)

    dzg = dzg - (beta2 / d) * sgrad

    dla = dlat.reshape(h, w, n, c).transpose(2, 3, 0, 1)
    dln = dlnt.reshape(h, w, n, c).transpose(2, 3, 0, 1)
    components = {
        "gl": l_gl,
        "ll": l_ll,
        "l2": l2,
        "sigma": l_sigma,
        "total": float(total),
    }
    return components, dzg, dla, dln, dwg, dwl


def _variance_term(z):
    d = z.shape[1]
    std, sgrad = _std_and_grad_scale(z)
    active = std < 1.0
    loss = float(np.maximum(1.0 - std, 0.0).mean())
    dz = -(active.astype(z.dtype) / d) * sgrad
    return loss, dz


def _covariance_term(z):
    n, d = z.shape
    centered = z - z.mean(axis=0)
    cov = centered.T @ centered / (n - 1)
    off = cov - np.diag(np.diag(cov))
    loss = float((off * off).sum() / ((n - 1) * d))
    dcov = 2.0 * off / ((n - 1) * d)
    dz = 2.0 * centered @ dcov / (n - 1)
    return loss, dz


def vicreg_losses(z, z2, lambda_=1.0, mu=1.0, nu=1.0 / 25.0):
    """Invariance, variance-hinge, and covariance terms on a feature pair.

    Returns (components dict, dz, dz2). The variance hinge uses a target
    std of 1 per dimension; the covariance term is the sum of squared
    off-diagonal entries of the sample covariance scaled by 1/((N-1) D).
    """
    if z.shape != z2.shape:
        raise ContractError(f"pair shapes differ: {z.shape} vs {z2.shape}")
    n = z.shape[0]
    if n < 2:
        raise ContractError(f"variance needs N >= 2, got {n}")

    diff = z - z2
    inv = float(np.einsum("nd,nd->n", diff, diff).mean())
    dz = lambda_ * 2.0 * diff / n
    dz2 = -dz

    v1, dv1 = _variance_term(z)
    v2, dv2 = _variance_term(z2)
    c1, dc1 = _covariance_term(z)
    c2, dc2 = _covariance_term(z2)
    dz = dz + mu * dv1 + nu * dc1
    dz2 = dz2 + mu * dv2 + nu * dc2

    total = lambda_ * inv + mu * (v1 + v2) + nu * (c1 + c2)
    components = {
        "invariance": inv,
        "variance": v1 + v2,
        "covariance": c1 + c2,
        "total": float(total),
    }
    return components, dz, dz2
