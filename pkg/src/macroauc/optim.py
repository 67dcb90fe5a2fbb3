"""SVRG with Barzilai-Borwein step sizes."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .risk import AlgorithmKind, LinearModel, Objective

# denominators at or below this are treated as zero curvature
_CURV_EPS = 1e-300


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer settings.

    ``inner=None`` means ``2n`` inner steps per epoch (pair draws for pa).
    ``eta0=None`` means ``0.01 / (1 + lambda)``. ``step_cap=None`` means
    ``10 * eta0``, further clipped to the variance-reduction stability limit
    ``1 / (4 L)`` with ``L`` the largest single-sample smoothness constant.
    The epoch-0 step is clipped the same way.
    """

    epochs: int = 30
    inner: int | None = None
    eta0: float | None = None
    seed: int = 0
    tol: float = 1e-6
    step_cap: float | None = None
    backend: str | None = None

    def __post_init__(self):
        if int(self.epochs) < 1:
            raise ValueError("epochs must be >= 1")
        if self.inner is not None and int(self.inner) < 1:
            raise ValueError("inner must be >= 1")
        for name in ("eta0", "step_cap", "tol"):
            v = getattr(self, name)
            if v is not None and not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and > 0, got {v}")


@dataclass
class TrainReport:
    model: LinearModel
    objectives: list = field(default_factory=list)
    grad_norms: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    fallbacks: list = field(default_factory=list)
    epochs_run: int = 0
    converged: bool = False
    seconds: float = 0.0
    eta0: float = 0.0
    step_cap: float = 0.0
    inner: int = 0
    backend: str = ""
    final_objective: float = math.nan
    final_grad_norm: float = math.nan

    def to_csv(self, path, comment: str | None = None) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            if comment:
                for line in comment.splitlines():
                    fh.write(f"# {line}\n")
            fh.write("epoch,objective,grad_norm,step,bb_fallback\n")
            for s, (f, g, eta, fb) in enumerate(zip(self.objectives, self.grad_norms, self.steps, self.fallbacks)):
                fh.write(f"{s},{f!r},{g!r},{eta!r},{int(fb)}\n")

    def fingerprint(self) -> tuple:
        """Everything except wall-clock time, for determinism checks."""
        return (self.model.weights.tobytes(), tuple(self.objectives), tuple(self.grad_norms),
                tuple(self.steps), tuple(self.fallbacks), self.epochs_run, self.converged,
                self.final_objective, self.final_grad_norm)


class TrainingDivergedError(RuntimeError):
    def __init__(self, message, report: TrainReport):
        super().__init__(message)
        self.report = report


def bb_step_size(w_s, w_prev, g_s, g_prev, m: int):
    """Barzilai-Borwein step ``||dw||^2 / (m <dw, dg>)``.

    Returns ``None`` when the curvature denominator is not safely positive;
    the caller then keeps its previous step.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    dw = np.asarray(w_s, dtype=np.float64) - np.asarray(w_prev, dtype=np.float64)
    dg = np.asarray(g_s, dtype=np.float64) - np.asarray(g_prev, dtype=np.float64)
    num = float(np.vdot(dw, dw))
    den = m * float(np.vdot(dw, dg))
    if not (den > _CURV_EPS) or not math.isfinite(den) or num == 0.0:
        return None
    eta = num / den
    return eta if math.isfinite(eta) and eta > 0 else None


def default_eta0(lam: float) -> float:
    return 0.01 / (1.0 + lam)


def stability_limit(obj: Objective) -> float:
    """``1 / (4 L)`` with ``L`` the largest single-sample smoothness (``inf`` if ``L = 0``)."""
    L = obj.max_sample_smoothness() + 2.0 * obj.lam
    return 0.25 / L if L > 0 else math.inf


def train(obj: Objective, config: TrainConfig = TrainConfig(), init=None) -> TrainReport:
    """Minimize ``obj`` with SVRG-BB starting from zero (or ``init``)."""
    kern = _backend.get_kernels(config.backend)
    ds = obj.data
    n, K = ds.n, ds.K
    X = np.ascontiguousarray(obj._X, dtype=np.float64)
    m = int(config.inner) if config.inner is not None else 2 * n
    eta0 = config.eta0 if config.eta0 is not None else default_eta0(obj.lam)
    limit = stability_limit(obj)
    cap = config.step_cap if config.step_cap is not None else min(10.0 * eta0, limit)
    eta_boot = min(eta0, limit)
    code = obj.base.code
    rng = np.random.default_rng(config.seed)

    W = obj.new_model().weights if init is None else np.array(init, dtype=np.float64, order="C")
    report = TrainReport(model=None, eta0=eta_boot, step_cap=cap, inner=m,
                         backend="cython" if kern.__name__.endswith("_kernels") else "python")
    pairwise = obj.algorithm is AlgorithmKind.PA
    if not pairwise:
        Yf = np.ascontiguousarray(obj._Y)
        Cn = np.ascontiguousarray(n * obj.instance_weights())

    t0 = time.perf_counter()
    prev_w = prev_g = None
    eta = eta_boot
    initial = None

    def finish(converged):
        report.model = LinearModel(W.copy(), loss=obj.base.kind, algorithm=obj.algorithm.value, lam=obj.lam)
        report.converged = converged
        report.epochs_run = len(report.objectives)
        report.seconds = time.perf_counter() - t0
        return report

    for s in range(int(config.epochs)):
        Ws = W.copy()
        f, mu = obj.value_and_gradient(Ws)
        gnorm = float(np.linalg.norm(mu))
        if initial is None:
            initial = f
        fallback = False
        if prev_w is not None:
            bb = bb_step_size(Ws, prev_w, mu, prev_g, m)
            if bb is None:
                fallback = True
            else:
                eta = bb
        eta = min(eta, cap)
        report.objectives.append(f)
        report.grad_norms.append(gnorm)
        report.steps.append(eta)
        report.fallbacks.append(fallback)
        if not (math.isfinite(f) and math.isfinite(gnorm)) or f > 10.0 * max(initial, 1e-300):
            finish(False)
            raise TrainingDivergedError(
                f"objective diverged at epoch {s}: {f!r} (initial {initial!r})", report)
        if gnorm <= config.tol:
            report.final_objective, report.final_grad_norm = f, gnorm
            return finish(True)
        prev_w, prev_g = Ws, mu
        mu = np.ascontiguousarray(mu)
        if pairwise:
            ks, ps, qs = obj.sample(m, rng)
            kern.svrg_epoch_pairwise(W, Ws, mu, X, ks.astype(np.int64), ps.astype(np.int64),
                                     qs.astype(np.int64), float(eta), float(obj.lam), code)
        else:
            idx = obj.sample(m, rng).astype(np.int64)
            Ss = np.ascontiguousarray(X @ Ws.T)
            kern.svrg_epoch_univariate(W, Ws, mu, X, Yf, Cn, Ss, idx, float(eta), float(obj.lam), code)
        if not np.all(np.isfinite(W)):
            W = Ws  # report the last finite snapshot
            finish(False)
            raise TrainingDivergedError(f"non-finite weights after epoch {s}", report)

    # score the last inner iterate so the returned model's objective is on record
    f, g = obj.value_and_gradient(W)
    report.final_objective = f
    report.final_grad_norm = float(np.linalg.norm(g))
    return finish(report.final_grad_norm <= config.tol)
