"""Fused training-mode kernels: batch norm + LeakyReLU, and point max-pool.

The numba versions make one or two passes over the activations where the
numpy versions make ten or more.  Both are deterministic; they round
differently (sequential vs pairwise sums), so bitwise results depend on the
backend, selected as in :mod:`zonegraph._kernels`.
"""
from __future__ import annotations

import numpy as np

from .._kernels import HAVE_NUMBA


def bn_act_forward_numpy(x, gamma, beta, eps, leak, act):
    mu = x.mean(axis=0)
    var = x.var(axis=0)
    inv = 1.0 / np.sqrt(var + eps)
    xh = (x - mu) * inv
    y = gamma * xh + beta
    mask = None
    if act:
        mask = y > 0
        y = np.where(mask, y, leak * y)
    return y, xh, inv, mu, var, mask


def bn_act_backward_numpy(dy, xh, inv, gamma, mask, leak):
    if mask is not None:
        dy = dy * np.where(mask, 1.0, leak)
    dgamma = (dy * xh).sum(axis=0)
    dbeta = dy.sum(axis=0)
    dxh = dy * gamma
    m = dxh.shape[0]
    dx = inv / m * (m * dxh - dxh.sum(axis=0) - xh * (dxh * xh).sum(axis=0))
    return dx, dgamma, dbeta


def point_maxpool_numpy(y, n):
    """(Z*n, C) rows grouped by zone -> (Z, C) maxima and their row offsets within each zone."""
    y3 = y.reshape(-1, n, y.shape[1])
    arg = y3.argmax(axis=1)
    return np.take_along_axis(y3, arg[:, None, :], axis=1)[:, 0, :], arg


def point_unpool_numpy(dz, arg, n):
    total, c = dz.shape
    dy = np.zeros((total, n, c))
    np.put_along_axis(dy, arg[:, None, :], dz[:, None, :], axis=1)
    return dy.reshape(total * n, c)


if HAVE_NUMBA:
    from numba import njit

    @njit(cache=True)
    def bn_act_forward_numba(x, gamma, beta, eps, leak, act):
        m, c = x.shape
        mu = np.zeros(c)
        for i in range(m):
            for j in range(c):
                mu[j] += x[i, j]
        mu /= m
        var = np.zeros(c)
        for i in range(m):
            for j in range(c):
                d = x[i, j] - mu[j]
                var[j] += d * d
        var /= m
        inv = 1.0 / np.sqrt(var + eps)
        xh = np.empty_like(x)
        y = np.empty_like(x)
        mask = np.empty(x.shape, dtype=np.bool_)
        for i in range(m):
            for j in range(c):
                h = (x[i, j] - mu[j]) * inv[j]
                xh[i, j] = h
                v = gamma[j] * h + beta[j]
                pos = v > 0
                mask[i, j] = pos
                y[i, j] = v if (pos or not act) else leak * v
        return y, xh, inv, mu, var, mask

    @njit(cache=True)
    def _bn_act_backward_numba(dy, xh, inv, gamma, mask, leak, act):
        m, c = dy.shape
        dgamma = np.zeros(c)
        dbeta = np.zeros(c)
        for i in range(m):
            for j in range(c):
                g = dy[i, j]
                if act and not mask[i, j]:
                    g *= leak
                dgamma[j] += g * xh[i, j]
                dbeta[j] += g
        # sums of dxh and dxh*xh are gamma times dbeta and dgamma
        s1 = gamma * dbeta
        s2 = gamma * dgamma
        dx = np.empty_like(dy)
        for i in range(m):
            for j in range(c):
                g = dy[i, j]
                if act and not mask[i, j]:
                    g *= leak
                dx[i, j] = inv[j] / m * (m * g * gamma[j] - s1[j] - xh[i, j] * s2[j])
        return dx, dgamma, dbeta

    def bn_act_backward_numba(dy, xh, inv, gamma, mask, leak):
        act = mask is not None
        if not act:
            mask = np.empty((1, 1), dtype=np.bool_)
        return _bn_act_backward_numba(np.ascontiguousarray(dy), xh, inv, gamma, mask, leak, act)

    @njit(cache=True)
    def point_maxpool_numba(y, n):
        rows, c = y.shape
        z = rows // n
        out = np.empty((z, c))
        arg = np.zeros((z, c), dtype=np.int64)
        for k in range(z):
            base = k * n
            for j in range(c):
                out[k, j] = y[base, j]
            for p in range(1, n):
                for j in range(c):
                    v = y[base + p, j]
                    if v > out[k, j]:
                        out[k, j] = v
                        arg[k, j] = p
        return out, arg

    @njit(cache=True)
    def point_unpool_numba(dz, arg, n):
        z, c = dz.shape
        dy = np.zeros((z * n, c))
        for k in range(z):
            for j in range(c):
                dy[k * n + arg[k, j], j] = dz[k, j]
        return dy

    def _forward(x, gamma, beta, eps, leak, act):
        y, xh, inv, mu, var, mask = bn_act_forward_numba(np.ascontiguousarray(x), gamma, beta, eps, leak, act)
        return y, xh, inv, mu, var, (mask if act else None)

    bn_act_forward = _forward
    bn_act_backward = bn_act_backward_numba
    point_maxpool = point_maxpool_numba
    point_unpool = point_unpool_numba
else:
    bn_act_forward = bn_act_forward_numpy
    bn_act_backward = bn_act_backward_numpy
    point_maxpool = point_maxpool_numpy
    point_unpool = point_unpool_numpy
