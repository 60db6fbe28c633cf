"""Recovery programs and the certificates that predict their success."""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .dictionary import Dictionary, format_complex

RANK_RTOL = 1e-8
SUCCESS_TOL = 1e-5


class RankDeficientError(ValueError):
    pass


class Mode(enum.Enum):
    """Which columns the program may use: E known, X known, or neither."""

    ES = "es"
    XS = "xs"
    C = "c"


@dataclass
class CertificateReport:
    sigma_min: float
    gram_deviation: float
    max_dual_inner: float | None = None
    max_projection_norm: float | None = None
    sign_residual: float | None = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class SolverReport:
    x_hat: np.ndarray
    e_hat: np.ndarray
    success: bool
    rel_error_x: float
    rel_error_e: float
    iterations: int
    primal_residual: float
    dual_residual: float
    certificate: CertificateReport | None = None
    converged: bool = True
    objective: float = math.nan
    feasibility_residual: float = math.nan
    program: str = ""
    extra: dict = field(default_factory=dict)

    def to_dict(self, vectors: bool = False) -> dict:
        out = {
            "program": self.program,
            "success": self.success,
            "converged": self.converged,
            "rel_error_x": self.rel_error_x,
            "rel_error_e": self.rel_error_e,
            "iterations": self.iterations,
            "primal_residual": self.primal_residual,
            "dual_residual": self.dual_residual,
            "objective": self.objective,
            "feasibility_residual": self.feasibility_residual,
            "certificate": self.certificate.to_dict() if self.certificate else None,
            **self.extra,
        }
        if vectors:
            out["x_hat"] = [format_complex(v) for v in self.x_hat]
            out["e_hat"] = [format_complex(v) for v in self.e_hat]
        return out


def rel_error(est, true) -> float:
    return float(np.linalg.norm(est - true) / max(np.linalg.norm(true), 1e-30))


def _finish(x_hat, e_hat, x_true, e_true, success_tol, ok_without_truth, **kw) -> SolverReport:
    if x_true is not None and e_true is not None:
        ex, ee = rel_error(x_hat, x_true), rel_error(e_hat, e_true)
        success = max(ex, ee) <= success_tol
    else:
        ex = ee = math.nan
        success = ok_without_truth
    return SolverReport(x_hat, e_hat, success, ex, ee, **kw)


def _sub_dictionary(da: Dictionary, db: Dictionary, support_x, support_e) -> np.ndarray:
    sx = np.asarray(support_x, dtype=int)
    se = np.asarray(support_e, dtype=int)
    return np.hstack([da.entries[:, sx], db.entries[:, se]])


def _full_rank(sv: np.ndarray) -> bool:
    return sv.size == 0 or sv[-1] >= RANK_RTOL * sv[0]


def _split(s, cols_a, cols_b, n_a, n_b):
    x = np.zeros(n_a, dtype=np.complex128)
    e = np.zeros(n_b, dtype=np.complex128)
    x[cols_a] = s[: len(cols_a)]
    e[cols_b] = s[len(cols_a):]
    return x, e


def _mode_columns(da, db, mode: Mode, support_x, support_e):
    if mode is Mode.ES:
        if support_e is None:
            raise ValueError("mode ES needs support_e")
        return np.arange(da.n), np.sort(np.asarray(support_e, dtype=int))
    if mode is Mode.XS:
        if support_x is None:
            raise ValueError("mode XS needs support_x")
        return np.sort(np.asarray(support_x, dtype=int)), np.arange(db.n)
    return np.arange(da.n), np.arange(db.n)


def recover_both_known(da: Dictionary, db: Dictionary, z, support_x, support_e,
                       x_true=None, e_true=None, success_tol: float = SUCCESS_TOL) -> SolverReport:
    """Least-squares solve on the sub-dictionary [A_X B_E]."""
    sx = np.sort(np.asarray(support_x, dtype=int))
    se = np.sort(np.asarray(support_e, dtype=int))
    d = _sub_dictionary(da, db, sx, se)
    z = np.asarray(z, dtype=np.complex128)
    if d.shape[1] == 0:
        s = np.zeros(0, dtype=np.complex128)
        smin, full = math.inf, True
    else:
        s, *_ = np.linalg.lstsq(d, z, rcond=None)
        sv = np.linalg.svd(d, compute_uv=False)
        tall = d.shape[1] <= d.shape[0]
        smin = float(sv[-1]) if tall else 0.0
        full = tall and _full_rank(sv)
    x_hat, e_hat = _split(s, sx, se, da.n, db.n)
    cert = CertificateReport(sigma_min=smin, gram_deviation=gram_deviation(da, db, sx, se))
    resid = float(np.linalg.norm(d @ s - z))
    report = _finish(x_hat, e_hat, x_true, e_true, success_tol, full,
                     iterations=1, primal_residual=resid, dual_residual=0.0, certificate=cert,
                     converged=True, objective=float(np.abs(s).sum()), feasibility_residual=resid,
                     program="pinv")
    if not full:
        report.success = False
    return report


def soft_threshold(v: np.ndarray, t: float) -> np.ndarray:
    """Complex soft-thresholding: shrink the modulus by t, keep the phase."""
    mag = np.abs(v)
    scale = np.maximum(1.0 - t / np.where(mag > 0, mag, 1.0), 0.0)
    return v * np.where(mag > 0, scale, 0.0)


RHO_FREEZE = 2_500


class _AffineProjector:
    """Orthogonal projection onto {s : D s = z}."""

    def __init__(self, d: np.ndarray, z: np.ndarray):
        self.d = d
        self.z = z
        sv = np.linalg.svd(d, compute_uv=False) if d.size else np.zeros(0)
        self.chol = None
        if d.shape[0] <= d.shape[1] and sv.size and sv[min(d.shape) - 1] >= RANK_RTOL * sv[0]:
            self.chol = sla.cho_factor(d @ d.conj().T)
        else:
            self.pinv = np.linalg.pinv(d, rcond=RANK_RTOL)

    def __call__(self, v: np.ndarray) -> np.ndarray:
        r = self.d @ v - self.z
        if self.chol is not None:
            return v - self.d.conj().T @ sla.cho_solve(self.chol, r)
        return v - self.pinv @ r


def basis_pursuit(d: np.ndarray, z: np.ndarray, tol_abs: float = 1e-9, tol_rel: float = 1e-9,
                  max_iter: int = 50_000, rho: float = 1.0):
    """ADMM for minimize ||s||_1 subject to D s = z (complex).

    Returns (s, iterations, primal_residual, dual_residual, converged). The
    penalty rho is rebalanced every 50 iterations (factor 2 when one residual
    exceeds the other tenfold) during the first ``RHO_FREEZE`` iterations and
    held fixed afterwards, since a penalty that keeps moving can stall ADMM.
    On exit the support of the iterate is refit by
    least squares when that gives a feasible point with no larger l1 norm.
    """
    n = d.shape[1]
    proj = _AffineProjector(d, z)
    w = np.zeros(n, dtype=np.complex128)
    u = np.zeros(n, dtype=np.complex128)
    x = proj(w)
    r_norm = s_norm = math.inf
    converged = False
    sqrt_n = math.sqrt(n)
    it = 0
    for it in range(1, max_iter + 1):
        x = proj(w - u)
        w_old = w
        w = soft_threshold(x + u, 1.0 / rho)
        u = u + x - w
        r_norm = float(np.linalg.norm(x - w))
        s_norm = rho * float(np.linalg.norm(w - w_old))
        eps_pri = sqrt_n * tol_abs + tol_rel * max(np.linalg.norm(x), np.linalg.norm(w))
        eps_dual = sqrt_n * tol_abs + tol_rel * rho * np.linalg.norm(u)
        if r_norm <= eps_pri and s_norm <= eps_dual:
            converged = True
            break
        if it % 50 == 0 and it <= RHO_FREEZE:
            if r_norm > 10.0 * s_norm:
                rho *= 2.0
                u /= 2.0
            elif s_norm > 10.0 * r_norm:
                rho /= 2.0
                u *= 2.0
    return _polish(d, z, x, w), it, r_norm, s_norm, converged


def _polish(d, z, x, w):
    """Refit the support of w when that beats the feasible ADMM iterate x."""
    best = x
    best_obj = float(np.abs(x).sum())
    mag = np.abs(w)
    if mag.size == 0 or mag.max() == 0.0:
        return best
    support = np.flatnonzero(mag > 1e-7 * mag.max())
    if support.size > d.shape[0]:
        return best
    sub = d[:, support]
    sv = np.linalg.svd(sub, compute_uv=False)
    if not _full_rank(sv):
        return best
    coef, *_ = np.linalg.lstsq(sub, z, rcond=None)
    cand = np.zeros_like(x)
    cand[support] = coef
    zn = max(np.linalg.norm(z), 1e-300)
    if (np.linalg.norm(d @ cand - z) <= max(np.linalg.norm(d @ x - z), 1e-12 * zn)
            and float(np.abs(cand).sum()) <= best_obj * (1 + 1e-9)):
        return cand
    return best


def solve_l1(da: Dictionary, db: Dictionary, z, mode: Mode = Mode.C, support_x=None,
             support_e=None, x_true=None, e_true=None, success_tol: float = SUCCESS_TOL,
             tol_abs: float = 1e-9, tol_rel: float = 1e-9, max_iter: int = 50_000) -> SolverReport:
    """l1 recovery: BP-Es (Mode.ES), BP-Xs (Mode.XS) or BP-C (Mode.C).

    With E known, B is restricted to its E columns and only those entries of e
    are estimated (likewise for X known).
    """
    cols_a, cols_b = _mode_columns(da, db, mode, support_x, support_e)
    d = np.hstack([da.entries[:, cols_a], db.entries[:, cols_b]])
    z = np.asarray(z, dtype=np.complex128)
    s, iters, r, sd, conv = basis_pursuit(d, z, tol_abs, tol_rel, max_iter)
    x_hat, e_hat = _split(s, cols_a, cols_b, da.n, db.n)
    feas = float(np.linalg.norm(d @ s - z))
    feasible = feas <= 1e-6 * max(np.linalg.norm(z), 1.0)
    report = _finish(x_hat, e_hat, x_true, e_true, success_tol, conv and feasible,
                     iterations=iters, primal_residual=r, dual_residual=sd, converged=conv,
                     objective=float(np.abs(s).sum()), feasibility_residual=feas,
                     program=f"bp-{mode.value}")
    report.extra["feasible"] = bool(feasible)
    return report


L0_BUDGET = 10 ** 7


def solve_l0_exhaustive(da: Dictionary, db: Dictionary, z, max_total_sparsity: int,
                        mode: Mode = Mode.C, support_x=None, support_e=None, x_true=None,
                        e_true=None, success_tol: float = SUCCESS_TOL) -> SolverReport:
    """Sparsest consistent representation by scanning supports of growing size.

    Supports of equal size are visited in lexicographic order and the first
    one whose least-squares residual is at most 1e-8 ||z|| wins.
    """
    cols_a, cols_b = _mode_columns(da, db, mode, support_x, support_e)
    d = np.hstack([da.entries[:, cols_a], db.entries[:, cols_b]])
    n = d.shape[1]
    k_max = min(max_total_sparsity, n)
    if math.comb(n, k_max) > L0_BUDGET:
        raise ValueError(f"C({n}, {k_max}) = {math.comb(n, k_max)} exceeds the budget {L0_BUDGET}")
    z = np.asarray(z, dtype=np.complex128)
    thresh = 1e-8 * np.linalg.norm(z)
    found = None
    tried = 0
    for k in range(k_max + 1):
        for supp in itertools.combinations(range(n), k):
            tried += 1
            if k == 0:
                if np.linalg.norm(z) <= thresh:
                    found = (supp, np.zeros(0, dtype=np.complex128))
                    break
                continue
            sub = d[:, supp]
            coef, *_ = np.linalg.lstsq(sub, z, rcond=None)
            if np.linalg.norm(sub @ coef - z) <= thresh:
                found = (supp, coef)
                break
        if found is not None:
            break
    s = np.zeros(n, dtype=np.complex128)
    if found is not None:
        s[list(found[0])] = found[1]
    x_hat, e_hat = _split(s, cols_a, cols_b, da.n, db.n)
    feas = float(np.linalg.norm(d @ s - z))
    report = _finish(x_hat, e_hat, x_true, e_true, success_tol, found is not None,
                     iterations=tried, primal_residual=feas, dual_residual=0.0,
                     converged=found is not None, objective=float(np.count_nonzero(s)),
                     feasibility_residual=feas, program=f"l0-{mode.value}")
    if found is None:
        report.success = False
    return report


def gram_deviation(da: Dictionary, db: Dictionary, support_x, support_e) -> float:
    """||D^H D - I|| for the sub-dictionary D = [A_X B_E]."""
    d = _sub_dictionary(da, db, support_x, support_e)
    if d.shape[1] == 0:
        return 0.0
    h = d.conj().T @ d - np.eye(d.shape[1])
    return float(np.abs(np.linalg.eigvalsh(h)).max())


def _candidates(da, db, support_x, support_e, unknown: str) -> np.ndarray:
    if unknown not in ("x", "e", "both"):
        raise ValueError(f"unknown must be 'x', 'e' or 'both', got {unknown!r}")
    parts = []
    if unknown in ("x", "both"):
        parts.append(np.delete(da.entries, np.asarray(support_x, dtype=int), axis=1))
    if unknown in ("e", "both"):
        parts.append(np.delete(db.entries, np.asarray(support_e, dtype=int), axis=1))
    return np.hstack(parts)


def _checked_sub(da, db, support_x, support_e):
    d = _sub_dictionary(da, db, support_x, support_e)
    sv = np.linalg.svd(d, compute_uv=False) if d.shape[1] else np.zeros(0)
    if d.shape[1] > d.shape[0] or not _full_rank(sv):
        raise RankDeficientError("sub-dictionary [A_X B_E] is rank deficient")
    return d, sv


def p0_uniqueness_check(da: Dictionary, db: Dictionary, support_x, support_e,
                        unknown: str) -> float:
    """max ||P d_gamma|| over competing columns outside the support.

    P projects onto range([A_X B_E]). A value below 1 means no competing column
    lies in that range, which makes the l0 solution unique almost surely.
    ``unknown`` selects the competitors: 'x' (E known), 'e' (X known) or 'both'.
    """
    d, _ = _checked_sub(da, db, support_x, support_e)
    cand = _candidates(da, db, support_x, support_e, unknown)
    if cand.shape[1] == 0 or d.shape[1] == 0:
        return 0.0
    q, _ = np.linalg.qr(d)
    return float(np.linalg.norm(q.conj().T @ cand, axis=0).max())


def dual_certificate(da: Dictionary, db: Dictionary, support_x, support_e, sign_vector,
                     unknown: str) -> CertificateReport:
    """Build h = D (D^H D)^{-1} sign and measure its correlation with competing columns.

    ``max_dual_inner`` below 1 certifies that l1 minimization returns the
    vector with this support and sign pattern.
    """
    d, sv = _checked_sub(da, db, support_x, support_e)
    sign = np.asarray(sign_vector, dtype=np.complex128)
    if sign.size != d.shape[1]:
        raise ValueError(f"sign vector has length {sign.size}, support has {d.shape[1]}")
    if sign.size and np.abs(np.abs(sign) - 1.0).max() > 1e-12:
        raise ValueError("sign vector entries must have unit modulus")
    gram = d.conj().T @ d
    cand = _candidates(da, db, support_x, support_e, unknown)
    if d.shape[1] == 0:
        return CertificateReport(math.inf, 0.0, 0.0, 0.0, 0.0)
    h = d @ np.linalg.solve(gram, sign)
    resid = float(np.abs(d.conj().T @ h - sign).max())
    if resid > 1e-10:
        raise RankDeficientError(f"certificate equation violated by {resid:.3g}")
    inner = float(np.abs(cand.conj().T @ h).max()) if cand.shape[1] else 0.0
    q, _ = np.linalg.qr(d)
    proj = float(np.linalg.norm(q.conj().T @ cand, axis=0).max()) if cand.shape[1] else 0.0
    return CertificateReport(
        sigma_min=float(sv[-1]),
        gram_deviation=float(np.abs(np.linalg.eigvalsh(gram - np.eye(d.shape[1]))).max()),
        max_dual_inner=inner,
        max_projection_norm=proj,
        sign_residual=resid,
    )


def sign_of(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.complex128)
    mag = np.abs(v)
    return np.where(mag > 0, v / np.where(mag > 0, mag, 1.0), 0.0)
