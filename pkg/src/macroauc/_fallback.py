"""Pure-numpy SVRG inner loops; same signatures and update order as ``_kernels``."""
import numpy as np

from .loss import HINGE, LN2, LOGISTIC_BASE2


def _deriv(t, code):
    if code == HINGE:
        return np.where(t < 1.0, -1.0, 0.0)
    g = -0.5 * (1.0 - np.tanh(0.5 * t))
    if code == LOGISTIC_BASE2:
        return g / LN2
    return g


def svrg_epoch_univariate(W, Ws, mu, X, Y, Cn, Ss, idx, eta, lam, loss_code):
    for i in idx:
        x = X[i]
        y = Y[i]
        coefs = Cn[i] * y * (_deriv(y * (W @ x), loss_code) - _deriv(y * Ss[i], loss_code))
        W -= eta * (mu + 2.0 * lam * (W - Ws))
        W -= np.outer(eta * coefs, x)


def svrg_epoch_pairwise(W, Ws, mu, X, ks, ps, qs, eta, lam, loss_code):
    for k, p, q in zip(ks, ps, qs):
        diff = X[p] - X[q]
        coef = _deriv(W[k] @ diff, loss_code) - _deriv(Ws[k] @ diff, loss_code)
        W -= eta * (mu + 2.0 * lam * (W - Ws))
        W[k] -= (eta * coef) * diff
