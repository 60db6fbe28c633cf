"""Dictionaries with unit-norm columns and the coherence quantities derived from them."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import hadamard as _sylvester

UNIT_NORM_TOL = 1e-12
DENSE_LIMIT = 1024


class ConvergenceError(RuntimeError):
    """Raised when an iterative routine hits its iteration cap.

    ``last`` carries the final iterate (or estimate) so callers can inspect it.
    """

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


@dataclass(frozen=True, eq=False)
class Dictionary:
    """Dense complex m x n matrix whose columns have unit Euclidean norm."""

    entries: np.ndarray
    builder: str = "matrix"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        a = np.array(self.entries, dtype=np.complex128, order="F")
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError(f"dictionary must be a non-empty 2-d matrix, got shape {a.shape}")
        norms = np.linalg.norm(a, axis=0)
        bad = np.flatnonzero(np.abs(norms - 1.0) > UNIT_NORM_TOL)
        if bad.size:
            raise ValueError(
                f"columns {bad[:5].tolist()} do not have unit norm (got {norms[bad[:5]].tolist()})"
            )
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        return self.entries.shape[1]

    def columns(self, idx) -> np.ndarray:
        return self.entries[:, np.asarray(idx, dtype=int)]

    def __repr__(self):
        return f"Dictionary({self.builder}, m={self.m}, n={self.n})"


def from_matrix(mat, normalize: bool = False, builder: str = "matrix", params=None) -> Dictionary:
    a = np.asarray(mat, dtype=np.complex128)
    if a.ndim == 1:
        a = a[:, None]
    if normalize:
        norms = np.linalg.norm(a, axis=0)
        if np.any(norms == 0):
            raise ValueError("cannot normalize a zero column")
        a = a / norms
    return Dictionary(a, builder, dict(params or {}))


def build_dft(m: int) -> Dictionary:
    """Unitary DFT matrix, entries exp(-2 pi i j k / m) / sqrt(m)."""
    _check_positive(m)
    jk = np.outer(np.arange(m), np.arange(m)) % m
    return Dictionary(np.exp(-2j * np.pi * jk / m) / math.sqrt(m), "dft", {"m": m})


def build_identity(m: int) -> Dictionary:
    _check_positive(m)
    return Dictionary(np.eye(m, dtype=np.complex128), "identity", {"m": m})


def build_hadamard(m: int) -> Dictionary:
    """Sylvester Hadamard matrix scaled by 1/sqrt(m); m must be a power of two."""
    _check_positive(m)
    if m & (m - 1):
        raise ValueError(f"Hadamard order must be a power of 2, got {m}")
    return Dictionary(_sylvester(m).astype(np.complex128) / math.sqrt(m), "hadamard", {"m": m})


def build_chirp(m: int) -> Dictionary:
    """DFT with rows modulated by exp(i pi n (n + m mod 2) / m).

    The chirp basis has |<c_j, e_k>| = |<c_j, f_k>| = 1/sqrt(m) for every m, so
    identity, DFT and chirp are three mutually unbiased orthonormal bases.
    """
    _check_positive(m)
    n = np.arange(m)
    phase = np.exp(1j * np.pi * ((n * (n + m % 2)) % (2 * m)) / m)
    return Dictionary(phase[:, None] * build_dft(m).entries, "chirp", {"m": m})


def build_random_unitary(m: int, seed: int = 0) -> Dictionary:
    """Haar-distributed unitary matrix (QR of a complex Gaussian with phase fix)."""
    _check_positive(m)
    rng = np.random.default_rng(seed)
    g = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / math.sqrt(2)
    q, r = np.linalg.qr(g)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    q = q / np.linalg.norm(q, axis=0)
    return Dictionary(q, "unitary", {"m": m, "seed": seed})


def build_random_gaussian(m: int, n: int, seed: int = 0, real: bool = False) -> Dictionary:
    """Gaussian matrix with columns normalized to unit length."""
    _check_positive(m)
    _check_positive(n)
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((m, n))
    if not real:
        g = g + 1j * rng.standard_normal((m, n))
    return from_matrix(g, normalize=True, builder="gaussian",
                       params={"m": m, "n": n, "seed": seed, "real": real})


def concat(d1: Dictionary, d2: Dictionary) -> Dictionary:
    if d1.m != d2.m:
        raise ValueError(f"row-count mismatch: {d1.m} vs {d2.m}")
    return Dictionary(
        np.hstack([d1.entries, d2.entries]),
        "concat",
        {"parts": [{"builder": d1.builder, **d1.params}, {"builder": d2.builder, **d2.params}]},
    )


def _check_positive(m):
    if int(m) != m or m < 1:
        raise ValueError(f"dimension must be a positive integer, got {m!r}")


def coherence(d: Dictionary) -> float:
    """Largest |<d_i, d_j>| over distinct columns; 0 for a single column."""
    if d.n == 1:
        return 0.0
    g = np.abs(d.entries.conj().T @ d.entries)
    np.fill_diagonal(g, 0.0)
    return float(g.max())


def mutual_coherence(da: Dictionary, db: Dictionary) -> float:
    if da.m != db.m:
        raise ValueError(f"row-count mismatch: {da.m} vs {db.m}")
    return float(np.abs(da.entries.conj().T @ db.entries).max())


def _as_array(d) -> np.ndarray:
    return d.entries if isinstance(d, Dictionary) else np.asarray(d, dtype=np.complex128)


def power_iteration_norm(mat, tol: float = 1e-10, max_iter: int = 10_000) -> float:
    """sigma_max by power iteration on the smaller Gram matrix, all-ones start."""
    a = _as_array(mat)
    if tol <= 0:
        raise ValueError("tol must be positive")
    gram = a @ a.conj().T if a.shape[0] < a.shape[1] else a.conj().T @ a
    v = np.ones(gram.shape[0], dtype=np.complex128) / math.sqrt(gram.shape[0])
    lam = 0.0
    for _ in range(max_iter):
        w = gram @ v
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            # start vector in the null space; nothing else to find from here
            return 0.0
        new = float(np.real(np.vdot(v, w)))
        v = w / nrm
        if abs(new - lam) <= tol * max(abs(new), 1e-300):
            return math.sqrt(max(new, 0.0))
        lam = new
    raise ConvergenceError(f"power iteration did not converge in {max_iter} iterations",
                           last=math.sqrt(max(lam, 0.0)))


def singular_values(mat) -> np.ndarray:
    a = _as_array(mat)
    if a.size == 0:
        return np.zeros(0)
    return np.linalg.svd(a, compute_uv=False)


def spectral_norm(d, tol: float = 1e-10, method: str = "auto") -> float:
    """Spectral norm sigma_max.

    ``method`` is "dense" (Hermitian eigensolve of the Gram matrix), "power"
    (power iteration) or "auto", which uses the dense path when the smaller
    dimension is at most 1024.
    """
    a = _as_array(d)
    if tol <= 0:
        raise ValueError("tol must be positive")
    if method == "auto":
        method = "dense" if min(a.shape) <= DENSE_LIMIT else "power"
    if method == "power":
        return power_iteration_norm(a, tol)
    if method != "dense":
        raise ValueError(f"unknown method {method!r}")
    gram = a @ a.conj().T if a.shape[0] < a.shape[1] else a.conj().T @ a
    return math.sqrt(max(float(np.linalg.eigvalsh(gram)[-1]), 0.0))


def sigma_min(mat) -> float:
    """Smallest singular value of a square or tall matrix (0 for wide ones)."""
    a = _as_array(mat)
    if a.shape[1] == 0:
        return math.inf
    if a.shape[1] > a.shape[0]:
        return 0.0
    return float(singular_values(a)[-1])


@dataclass(frozen=True)
class CoherenceProfile:
    """Every dictionary quantity the guarantee formulas consume.

    May be built from explicit numbers (formula scale, m up to 1e12) or from
    actual dictionaries through :func:`coherence_profile`.
    """

    mu_a: float
    mu_b: float
    mu_m: float
    norm_a: float
    norm_b: float
    norm_ab: float
    m: int
    n_a: int
    n_b: int

    def __post_init__(self):
        for name in ("mu_a", "mu_b", "mu_m"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0 + 1e-12:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        for name in ("norm_a", "norm_b"):
            if getattr(self, name) < 1.0 - 1e-9:
                raise ValueError(f"{name} must be >= 1 for unit-norm columns, got {getattr(self, name)}")
        if self.norm_ab < 0:
            raise ValueError("norm_ab must be non-negative")
        for name in ("m", "n_a", "n_b"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")

    def swapped(self) -> "CoherenceProfile":
        """Profile with the roles of A and B interchanged."""
        return CoherenceProfile(self.mu_b, self.mu_a, self.mu_m, self.norm_b, self.norm_a,
                                self.norm_ab, self.m, self.n_b, self.n_a)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("mu_a", "mu_b", "mu_m", "norm_a", "norm_b", "norm_ab", "m", "n_a", "n_b")}


def coherence_profile(da: Dictionary, db: Dictionary, tol: float = 1e-10) -> CoherenceProfile:
    if da.m != db.m:
        raise ValueError(f"row-count mismatch: {da.m} vs {db.m}")
    return CoherenceProfile(
        mu_a=coherence(da),
        mu_b=coherence(db),
        mu_m=mutual_coherence(da, db),
        norm_a=spectral_norm(da, tol),
        norm_b=spectral_norm(db, tol),
        norm_ab=spectral_norm(da.entries.conj().T @ db.entries, tol),
        m=da.m,
        n_a=da.n,
        n_b=db.n,
    )


def unitary_pair_profile(m: float) -> CoherenceProfile:
    """Two unitary, maximally incoherent bases (e.g. DFT and identity)."""
    m = int(m)
    return CoherenceProfile(0.0, 0.0, 1 / math.sqrt(m), 1.0, 1.0, 1.0, m, m, m)


def two_onb_profile(m: float) -> CoherenceProfile:
    """A unitary, B the concatenation of two unitary bases, all maximally incoherent."""
    m = int(m)
    mu = 1 / math.sqrt(m)
    r2 = math.sqrt(2.0)
    return CoherenceProfile(0.0, mu, mu, 1.0, r2, r2, m, m, 2 * m)


# -- builder specs -----------------------------------------------------------

_BUILDERS = {
    "dft": build_dft,
    "identity": build_identity,
    "hadamard": build_hadamard,
    "chirp": build_chirp,
}


def parse_spec(spec: str) -> Dictionary:
    """Build a dictionary from a descriptor.

    Accepted forms: ``dft:64``, ``identity:64``, ``hadamard:64``, ``chirp:64``,
    ``unitary:64[:seed]``, ``gaussian:m:n[:seed]`` and
    ``concat:<spec>+<spec>[+...]``.
    """
    spec = spec.strip()
    if spec.startswith("concat:"):
        parts = spec[len("concat:"):].split("+")
        if len(parts) < 2:
            raise ValueError(f"concat needs at least two parts: {spec!r}")
        d = parse_spec(parts[0])
        for p in parts[1:]:
            d = concat(d, parse_spec(p))
        return d
    name, _, rest = spec.partition(":")
    try:
        nums = [_int_arg(a) for a in rest.split(":")] if rest else []
    except ValueError:
        raise ValueError(f"malformed dictionary spec {spec!r}") from None
    if name in _BUILDERS and len(nums) == 1:
        return _BUILDERS[name](nums[0])
    if name == "unitary" and len(nums) in (1, 2):
        return build_random_unitary(*nums)
    if name == "gaussian" and len(nums) in (2, 3):
        return build_random_gaussian(*nums)
    raise ValueError(f"malformed dictionary spec {spec!r}")


def _int_arg(text: str) -> int:
    value = float(text)
    if not value.is_integer():
        raise ValueError(text)
    return int(value)


# -- serialization ------------------------------------------------------------

def format_complex(v: complex) -> str:
    return f"{v.real:.17g}{v.imag:+.17g}i"


def parse_complex(cell: str) -> complex:
    text = cell.strip()
    if not text.endswith("i"):
        raise ValueError(f"malformed complex cell {cell!r}")
    text = text[:-1]
    # split at the last sign that does not belong to an exponent
    for k in range(len(text) - 1, 0, -1):
        if text[k] in "+-" and text[k - 1] not in "eE":
            return complex(float(text[:k]), float(text[k:]))
    raise ValueError(f"malformed complex cell {cell!r}")


def save_dictionary(d: Dictionary, path) -> None:
    """Write rows as "re+imi" CSV cells plus a JSON sidecar next to it."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        for row in d.entries:
            writer.writerow([format_complex(v) for v in row])
    sidecar = {"m": d.m, "n": d.n, "builder": d.builder, "params": d.params}
    path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2))


def load_dictionary(path) -> Dictionary:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [[parse_complex(c) for c in row] for row in csv.reader(fh) if row]
    meta = {}
    side = path.with_suffix(".json")
    if side.exists():
        meta = json.loads(side.read_text())
    a = np.array(rows, dtype=np.complex128)
    if meta and a.shape != (meta["m"], meta["n"]):
        raise ValueError(f"shape {a.shape} disagrees with sidecar ({meta['m']}, {meta['n']})")
    return Dictionary(a, meta.get("builder", "matrix"), meta.get("params", {}))
