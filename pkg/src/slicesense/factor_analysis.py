"""Latent-factor fitting per clique and extraction of co-sharing subsets.

Each maximal clique's measurement submatrix is standardized and fitted with
a Gaussian factor model by EM at several factor counts; the winning model's
varimax-rotated loadings are thresholded factor-by-factor into candidate
sets of slices that share one congestible resource.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .correlation import rank_transform
from .errors import AnalysisWarning, FitError, InvalidFactorCountError
from .model import CliqueList, KpiMatrix

_TINY = 1e-12


def ledermann_bound(p: int) -> int:
    """Largest identifiable factor count for p observed variables."""
    return int(math.floor((2 * p + 1 - math.sqrt(8 * p + 1)) / 2))


@dataclass(frozen=True)
class FaOptions:
    """Knobs for the per-clique EM fit and factor-count selection.

    ``use_bic`` selects factor counts by BIC instead of raw log-likelihood.
    It stays on by default: the achieved log-likelihood of nested factor
    models grows with every extra factor on sampled data (by roughly half a
    chi-square per extra parameter), so the raw rule degenerates into
    always picking the largest admissible count and planted factor
    structure is never recovered.
    """

    max_iter: int = 500
    tol: float = 1e-6
    uniqueness_floor: float = 1e-6
    ridge: float = 1e-8
    tie_tol: float = 1e-6
    use_bic: bool = True


@dataclass(frozen=True)
class FactorModel:
    """Fitted factor model for one clique submatrix (standardized columns).

    ``loadings`` is q x p (rows are factors, columns the clique's slices in
    ascending slice order); ``uniquenesses`` are the specific-factor
    variances, floored away from zero so the model covariance
    loadings.T @ loadings + diag(uniquenesses) stays positive definite.
    """

    loadings: np.ndarray
    uniquenesses: np.ndarray
    mean: np.ndarray
    q: int
    log_likelihood: float
    converged: bool
    iterations: int
    ll_trace: tuple[float, ...] = field(repr=False, default=())

    def covariance(self) -> np.ndarray:
        """Model covariance of the standardized columns."""
        return self.loadings.T @ self.loadings + np.diag(self.uniquenesses)


@dataclass(frozen=True)
class SubsetFamily:
    """Deduplicated family of candidate co-sharing slice sets (size >= 2)."""

    subsets: frozenset[frozenset[int]]

    def __post_init__(self):
        fam = frozenset(frozenset(s) for s in self.subsets)
        for s in fam:
            if len(s) < 2:
                raise ValueError("subsets must have size >= 2")
        object.__setattr__(self, "subsets", fam)

    def __len__(self) -> int:
        return len(self.subsets)

    def __iter__(self):
        return iter(self.subsets)

    def union(self, other: "SubsetFamily") -> "SubsetFamily":
        return SubsetFamily(self.subsets | other.subsets)


def _standardized_covariance(mc: np.ndarray, ridge: float):
    mean = mc.mean(axis=0)
    sd = mc.std(axis=0)
    constant = sd == 0.0
    if np.any(constant):
        warnings.warn(
            f"constant column(s) {list(np.nonzero(constant)[0])} in clique "
            "submatrix; treated as pure noise",
            AnalysisWarning,
            stacklevel=3,
        )
        sd = np.where(constant, 1.0, sd)
    xs = (mc - mean) / sd
    s = (xs.T @ xs) / mc.shape[0]
    np.fill_diagonal(s, 1.0)
    eigvals, eigvecs = np.linalg.eigh(s)
    if eigvals[0] < 1e-10:
        warnings.warn(
            "near-singular sample covariance; ridge applied",
            AnalysisWarning,
            stacklevel=3,
        )
        s = s + ridge * np.eye(s.shape[0])
        eigvals, eigvecs = np.linalg.eigh(s)
    return mean, s, eigvals, eigvecs


def _log_likelihood(s: np.ndarray, lam: np.ndarray, psi: np.ndarray, t: int) -> float:
    sigma = lam @ lam.T + np.diag(psi)
    sign, logdet = np.linalg.slogdet(sigma)
    if sign <= 0:
        raise FitError("model covariance lost positive definiteness")
    trace = float(np.trace(np.linalg.solve(sigma, s)))
    p = s.shape[0]
    return -0.5 * t * (p * math.log(2 * math.pi) + logdet + trace)


def fit_fa(mc: np.ndarray, q: int, opts: FaOptions = FaOptions()) -> FactorModel:
    """Maximum-likelihood factor analysis of a T x p submatrix by EM.

    Columns are centered and scaled to unit variance first.  The E-step
    computes posterior factor moments under the current loadings and
    uniquenesses; the M-step updates both, with uniquenesses clamped at the
    floor (a constrained M-step, so the log-likelihood never decreases).
    Iteration stops when the log-likelihood improves by less than ``tol``.
    """
    mc = np.asarray(mc, dtype=float)
    if mc.ndim != 2:
        raise ValueError("expected a T x p matrix")
    t, p = mc.shape
    if t <= p:
        raise FitError(f"need more periods than slices to fit: T={t}, p={p}")
    allowed = max(1, ledermann_bound(p))
    if not 1 <= q <= allowed:
        raise InvalidFactorCountError(
            f"q={q} outside the identifiable range [1, {allowed}] for p={p}"
        )
    mean, s, eigvals, eigvecs = _standardized_covariance(mc, opts.ridge)

    top = np.argsort(eigvals)[::-1][:q]
    lam = eigvecs[:, top] * np.sqrt(np.maximum(eigvals[top], _TINY))  # p x q
    psi = np.maximum(1.0 - (lam**2).sum(axis=1), opts.uniqueness_floor)

    eye_q = np.eye(q)
    ll_prev = -np.inf
    ll = ll_prev
    trace: list[float] = []
    converged = False
    iterations = 0
    for iterations in range(1, opts.max_iter + 1):
        wl = lam / psi[:, None]
        g = np.linalg.inv(eye_q + lam.T @ wl)
        beta = g @ wl.T  # q x p, posterior factor coefficients
        sxz = s @ beta.T  # p x q
        czz = g + beta @ sxz
        lam = np.linalg.solve(czz.T, sxz.T).T
        psi = np.maximum(
            np.diag(s) - np.einsum("ij,ij->i", lam, sxz), opts.uniqueness_floor
        )
        ll = _log_likelihood(s, lam, psi, t)
        trace.append(ll)
        if ll - ll_prev < opts.tol:
            converged = True
            break
        ll_prev = ll

    return FactorModel(
        loadings=lam.T.copy(),
        uniquenesses=psi,
        mean=mean,
        q=q,
        log_likelihood=ll,
        converged=converged,
        iterations=iterations,
        ll_trace=tuple(trace),
    )


def _n_free_params(p: int, q: int) -> int:
    return p * q - q * (q - 1) // 2 + p


def select_q(mc: np.ndarray, opts: FaOptions = FaOptions()) -> FactorModel:
    """Fit every admissible factor count and keep the best model.

    Candidates run from 1 to the Ledermann bound (a lone candidate q=1 when
    the bound vanishes, as for p=2).  Selection maximizes the achieved
    log-likelihood, or the BIC score when ``use_bic`` is set; near-ties go
    to the smaller factor count.
    """
    mc = np.asarray(mc, dtype=float)
    p = mc.shape[1]
    if p < 2:
        raise FitError("need at least two slices in a clique")
    t = mc.shape[0]

    def score(model: FactorModel) -> float:
        if opts.use_bic:
            return model.log_likelihood - 0.5 * _n_free_params(p, model.q) * math.log(t)
        return model.log_likelihood

    best: FactorModel | None = None
    best_score = -np.inf
    for q in range(1, max(1, ledermann_bound(p)) + 1):
        model = fit_fa(mc, q, opts)
        sc = score(model)
        margin = opts.tie_tol * max(1.0, abs(best_score)) if best is not None else 0.0
        if best is None or sc > best_score + margin:
            best, best_score = model, sc
    return best


def varimax(loadings: np.ndarray, max_iter: int = 1000, tol: float = 1e-10) -> np.ndarray:
    """Orthogonal varimax rotation of a p x q loading matrix."""
    lam = np.asarray(loadings, dtype=float)
    p, q = lam.shape
    if q == 1:
        return lam.copy()
    rotation = np.eye(q)
    var = 0.0
    for _ in range(max_iter):
        rotated = lam @ rotation
        tmp = rotated * ((rotated**2).sum(axis=0) / p)
        u, sing, vt = np.linalg.svd(lam.T @ (rotated**3 - tmp))
        rotation = u @ vt
        var_new = sing.sum()
        if var != 0 and var_new < var * (1 + tol):
            break
        var = var_new
    return lam @ rotation


def loadings_to_subsets(
    model: FactorModel, clique, theta: float = 0.5
) -> SubsetFamily:
    """Threshold rotated loadings into co-sharing subsets.

    After varimax, each factor contributes the slices whose absolute loading
    reaches ``theta`` times the factor's largest absolute loading; subsets
    of size < 2 are dropped.  Local column positions map back to the
    clique's slices in ascending order.
    """
    if not 0.0 < theta <= 1.0:
        raise ValueError("theta must lie in (0, 1]")
    members = sorted(clique)
    if len(members) != model.loadings.shape[1]:
        raise ValueError("model was not fitted on this clique")
    rotated = varimax(model.loadings.T).T  # back to q x p
    found = set()
    for row in np.abs(rotated):
        peak = row.max()
        if peak <= _TINY:
            continue
        picked = [members[i] for i in np.nonzero(row >= theta * peak)[0]]
        if len(picked) >= 2:
            found.add(frozenset(picked))
    return SubsetFamily(frozenset(found))


@dataclass(frozen=True)
class CliqueFit:
    """Per-clique outcome retained for detection reports."""

    clique: tuple[int, ...]
    q: int
    log_likelihood: float
    converged: bool
    iterations: int
    subsets: tuple[tuple[int, ...], ...]


def stage3_detailed(
    m: KpiMatrix,
    cliques: CliqueList,
    opts: FaOptions = FaOptions(),
    theta: float = 0.5,
) -> tuple[SubsetFamily, list[CliqueFit]]:
    """Run model selection and subset extraction over every clique.

    Each clique submatrix is rank-transformed per column before fitting:
    the multiplicative measurement noise and the mass of exact-zero delays
    leave the raw-scale covariance of weakly interfering slices nearly
    diagonal, so factors fitted on raw values latch onto idiosyncratic
    variance instead of the shared congestion signal.  Ranks preserve the
    co-movement while discarding the heavy-tailed magnitudes.

    A clique whose fit fails is skipped with a warning; the union of all
    extracted subsets is deduplicated by construction.
    """
    family = SubsetFamily(frozenset())
    fits: list[CliqueFit] = []
    for clique in cliques:
        members = sorted(clique)
        raw = m.values[:, members]
        sub = np.column_stack([rank_transform(raw[:, i]) for i in range(len(members))])
        try:
            model = select_q(sub, opts)
            subsets = loadings_to_subsets(model, members, theta)
        except (FitError, InvalidFactorCountError, np.linalg.LinAlgError) as exc:
            warnings.warn(
                f"clique {tuple(members)} skipped: {exc}",
                AnalysisWarning,
                stacklevel=2,
            )
            continue
        family = family.union(subsets)
        fits.append(
            CliqueFit(
                clique=tuple(members),
                q=model.q,
                log_likelihood=model.log_likelihood,
                converged=model.converged,
                iterations=model.iterations,
                subsets=tuple(sorted(tuple(sorted(s)) for s in subsets)),
            )
        )
    return family, fits


def stage3(
    m: KpiMatrix,
    cliques: CliqueList,
    opts: FaOptions = FaOptions(),
    theta: float = 0.5,
) -> SubsetFamily:
    """Union of candidate co-sharing subsets over all maximal cliques."""
    family, _ = stage3_detailed(m, cliques, opts, theta)
    return family
