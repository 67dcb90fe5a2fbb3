"""Property suites behind ``macroauc verify``.

Each suite returns a :class:`SuiteResult`; sizes are parameters so the test
suite can run them at full scale.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import ModelConstants, analytic_rademacher_bound
from .dataset import label_stats
from .depgraph import fractional_cover, janson_decompose, mc_fractional_rademacher, verify_cover
from .loss import CHAIN_INEQUALITIES, check_loss_chain, get_loss, loss_u1, loss_u2
from .risk import Objective
from .synthetic import random_counts_dataset

SUITES = ("chain", "cover", "janson", "gradient", "rademacher")


@dataclass
class SuiteResult:
    name: str
    ok: bool
    checked: int
    failures: list = field(default_factory=list)

    @property
    def summary(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        head = f"{self.name}: {status} ({self.checked} checks"
        if self.failures:
            head += f", {len(self.failures)} failures; first: {self.failures[0]}"
        return head + ")"


def chain_samples(count: int, rng: np.random.Generator, score_range=5.0, n_max=200, balanced=False):
    out = []
    for _ in range(count):
        if balanced:
            half = int(rng.integers(1, n_max // 2 + 1))
            pc, n = half, 2 * half
        else:
            n = int(rng.integers(2, n_max + 1))
            pc = int(rng.integers(1, n))
        sp_, sn = rng.uniform(-score_range, score_range, size=2)
        out.append((float(sp_), float(sn), pc, n - pc, n))
    return out


def suite_chain(losses=("hinge", "logistic2"), samples=10_000, seed=0, inject_bug=False, tol=1e-12):
    """Pointwise loss chain on random samples, plus equality of the middle link at ``tau = 1/2``."""
    rng = np.random.default_rng(seed)
    flip = CHAIN_INEQUALITIES[0] if inject_bug else None
    failures, checked = [], 0
    for name in losses:
        base = get_loss(name)
        data = chain_samples(samples, rng)
        for v in check_loss_chain(base, data, tol=tol, _flip=flip):
            failures.append(f"{name}: {v.inequality} violated at sample {v.index} "
                            f"({v.lhs!r} > {v.rhs!r})")
        checked += len(data) * len(CHAIN_INEQUALITIES)
        for sp_, sn, pc, nc, n in chain_samples(max(1, samples // 10), rng, balanced=True):
            lu2 = loss_u2(base, sp_, sn)
            lu1_tau = loss_u1(base, sp_, sn, pc, nc, n) / (min(pc, nc) / n)
            checked += 1
            if abs(lu2 - lu1_tau) > tol * max(1.0, abs(lu2)):
                failures.append(f"{name}: balanced equality Lu2 == Lu1/tau failed ({lu2!r} vs {lu1_tau!r})")
    return SuiteResult("chain", not failures, checked, failures)


def suite_cover(max_pq=30):
    failures, checked = [], 0
    for p in range(1, max_pq + 1):
        for q in range(1, max_pq + 1):
            cov = fractional_cover(p, q)
            chk = verify_cover(cov)
            checked += 1
            if not chk:
                failures.append(f"({p},{q}): {chk.message}")
            if cov.chromatic != max(p, q):
                failures.append(f"({p},{q}): total weight {cov.chromatic} != {max(p, q)}")
            if sum(w * len(s) for s, w in zip(cov.sets, cov.weights)) != p * q:
                failures.append(f"({p},{q}): weighted set sizes do not add up to {p * q}")
    return SuiteResult("cover", not failures, checked, failures)


def suite_janson(trials=1000, seed=0, max_pq=30, tol=1e-12):
    rng = np.random.default_rng(seed)
    failures = []
    for t in range(trials):
        p, q = (int(v) for v in rng.integers(1, max_pq + 1, size=2))
        values = rng.standard_normal(p * q)
        got = janson_decompose(values, fractional_cover(p, q))
        want = math.fsum(values)
        if abs(got - want) > tol * max(1.0, float(np.abs(values).sum())):
            failures.append(f"trial {t} ({p},{q}): {got!r} != {want!r}")
    return SuiteResult("janson", not failures, trials, failures)


def finite_difference_gradient(obj: Objective, W, h=1e-5):
    G = np.zeros_like(W)
    for idx in np.ndindex(*W.shape):
        Wp, Wm = W.copy(), W.copy()
        Wp[idx] += h
        Wm[idx] -= h
        G[idx] = (obj.value(Wp) - obj.value(Wm)) / (2 * h)
    return G


def gradient_error(obj: Objective, W, h=1e-5) -> float:
    _, g = obj.value_and_gradient(W)
    fd = finite_difference_gradient(obj, W, h)
    return float(np.max(np.abs(g - fd)) / (1.0 + np.max(np.abs(g))))


def suite_gradient(instances=50, seed=0, tol=1e-5, losses=("logistic2", "logistic-e")):
    rng = np.random.default_rng(seed)
    failures, checked = [], 0
    for t in range(instances):
        ds = random_counts_dataset(rng, n_max=20, d_max=5, K_max=3)
        W = rng.standard_normal((ds.K, ds.d))
        lam = float(rng.uniform(0, 1))
        for algo in ("pa", "u1", "u2"):
            for name in losses:
                err = gradient_error(Objective(algo, lam, name, ds), W)
                checked += 1
                if not err <= tol:
                    failures.append(f"instance {t} {algo}/{name}: relative error {err:.3g}")
    return SuiteResult("gradient", not failures, checked, failures)


def rademacher_case(rng, draws, seed):
    """One random dataset: ``(estimate, analytic_pa_bound, Lambda)`` with a random radius."""
    ds = random_counts_dataset(rng, n_max=60, d_max=5, K_max=3)
    Lam = float(rng.uniform(0.5, 2.0))
    r = float(np.linalg.norm(ds.features, axis=1).max())
    const = ModelConstants(Lambda=Lam, r=r, rho=1.0, B=1.0)
    est = mc_fractional_rademacher(ds, None, Lam, draws, seed)
    bound = analytic_rademacher_bound("pa", label_stats(ds), const, ds.n)
    return ds, est, bound, Lam


def suite_rademacher(datasets=20, draws=500, seed=0, margin_se=3.0):
    rng = np.random.default_rng(seed)
    failures = []
    for t in range(datasets):
        ds, est, bound, Lam = rademacher_case(rng, draws, seed + t)
        if not est.mean + margin_se * est.standard_error <= bound:
            failures.append(f"dataset {t}: estimate {est.mean:.4g} (se {est.standard_error:.2g}) vs bound {bound:.4g}")
    return SuiteResult("rademacher", not failures, datasets, failures)


def run_suites(names=SUITES, seed=0, max_pq=30, inject_bug=False, chain_losses=("hinge", "logistic2")):
    out = []
    for name in names:
        if name == "chain":
            out.append(suite_chain(losses=tuple(chain_losses), seed=seed, inject_bug=inject_bug))
        elif name == "cover":
            out.append(suite_cover(max_pq))
        elif name == "janson":
            out.append(suite_janson(seed=seed, max_pq=max_pq))
        elif name == "gradient":
            out.append(suite_gradient(instances=10, seed=seed))
        elif name == "rademacher":
            out.append(suite_rademacher(seed=seed))
        else:
            raise ValueError(f"unknown suite {name!r}; choose from {SUITES}")
    return out
