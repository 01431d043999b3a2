"""Random matrix sampling, deterministic deformations and dense spectral primitives.

The ensemble is ``A + X`` with a deterministic ``A`` and an IID matrix ``X``
whose entries are centered with variance ``1/N``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from typing import Any, Callable

import numpy as np

FIELDS = ("real", "complex")
DISTS = ("gaussian", "rademacher", "uniform")


class EnsembleError(ValueError):
    """Invalid model, matrix or sampling request."""


class SpectralError(RuntimeError):
    """A dense eigen/SVD backend failed or returned an inaccurate result."""


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True, eq=False)
class DeformedModel:
    """The ensemble ``A + X``.

    Diagonal deformations are stored by their diagonal only so that very large
    ``N`` stays cheap for the deterministic (MDE/Brown) computations; ``A``
    materialises the dense matrix on demand.
    """

    diag: np.ndarray | None
    dense: np.ndarray | None
    field: str = "complex"
    dist: str = "gaussian"
    label: str = ""
    inv_norm: float | None = None  # ||(A - z0)^-1|| when requested at build time
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if self.field not in FIELDS:
            raise EnsembleError(f"field must be one of {FIELDS}, got {self.field!r}")
        if self.dist not in DISTS:
            raise EnsembleError(f"unsupported distribution tag {self.dist!r}")
        if (self.diag is None) == (self.dense is None):
            raise EnsembleError("exactly one of diag/dense must be given")
        arr = self.diag if self.diag is not None else self.dense
        if self.dense is not None and (arr.ndim != 2 or arr.shape[0] != arr.shape[1]):
            raise EnsembleError(f"A must be square, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise EnsembleError("A has non-finite entries")
        if self.field == "real" and np.any(np.imag(arr) != 0):
            raise EnsembleError("real field requires a real deformation A")

    @classmethod
    def from_matrix(cls, A, field="complex", dist="gaussian", label="", **kw) -> "DeformedModel":
        A = np.asarray(A, dtype=complex)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise EnsembleError(f"A must be square, got shape {A.shape}")
        off = A - np.diag(np.diag(A))
        if not np.any(off):
            return cls(diag=np.diag(A).copy(), dense=None, field=field, dist=dist, label=label, **kw)
        return cls(diag=None, dense=A.copy(), field=field, dist=dist, label=label, **kw)

    @classmethod
    def from_diagonal(cls, d, field="complex", dist="gaussian", label="", **kw) -> "DeformedModel":
        return cls(diag=np.asarray(d, dtype=complex).copy(), dense=None, field=field, dist=dist,
                   label=label, **kw)

    @property
    def N(self) -> int:
        return len(self.diag) if self.diag is not None else self.dense.shape[0]

    @property
    def is_diagonal(self) -> bool:
        return self.diag is not None

    @property
    def A(self) -> np.ndarray:
        if self.diag is not None:
            return np.diag(self.diag)
        return self.dense

    @property
    def norm(self) -> float:
        """Operator norm ``||A||``."""
        if self.diag is not None:
            return float(np.max(np.abs(self.diag))) if len(self.diag) else 0.0
        return float(np.linalg.norm(self.dense, 2))

    def with_(self, **changes) -> "DeformedModel":
        kw = dict(diag=self.diag, dense=self.dense, field=self.field, dist=self.dist,
                  label=self.label, inv_norm=self.inv_norm, meta=self.meta)
        kw.update(changes)
        return DeformedModel(**kw)

    def to_json(self) -> dict:
        out = {"field": self.field, "dist": self.dist, "label": self.label, "N": self.N}
        if self.diag is not None:
            out["diag"] = [[float(x.real), float(x.imag)] for x in self.diag]
        else:
            out["matrix"] = [[[float(x.real), float(x.imag)] for x in row] for row in self.dense]
        if self.meta:
            out["meta"] = self.meta
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "DeformedModel":
        kw = dict(field=obj.get("field", "complex"), dist=obj.get("dist", "gaussian"),
                  label=obj.get("label", ""))
        if "diag" in obj:
            return cls.from_diagonal(_pairs_to_complex(obj["diag"]), **kw)
        if "matrix" in obj:
            return cls.from_matrix(_pairs_to_complex(obj["matrix"]), **kw)
        raise EnsembleError("model JSON needs a 'diag' or 'matrix' entry")


@dataclass(frozen=True, eq=False)
class SampledMatrix:
    entries: np.ndarray  # X only; add model.A for the deformed matrix
    seed: int
    model: DeformedModel
    time: float = 0.0

    @property
    def deformed(self) -> np.ndarray:
        """``A + X``."""
        if self.model.is_diagonal:
            out = self.entries.copy()
            out[np.diag_indices_from(out)] += self.model.diag
            return out
        return self.model.A + self.entries


@dataclass(frozen=True, eq=False)
class Hermitization:
    matrix: np.ndarray
    z: complex

    @property
    def N(self) -> int:
        return self.matrix.shape[0] // 2


def _pairs_to_complex(x) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    return a[..., 0] + 1j * a[..., 1]


# ---------------------------------------------------------------------------
# sampling


def trial_seed(base_seed: int, trial_index: int) -> int:
    """64-bit per-trial seed derived from (base_seed, trial_index)."""
    ss = np.random.SeedSequence([int(base_seed) & 0xFFFFFFFFFFFFFFFF, int(trial_index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _draw(shape, field, dist, rng, var):
    """Centered entries with total variance ``var``; complex entries have E[x^2] = 0."""
    if field == "complex":
        re = _draw(shape, "real", dist, rng, var / 2)
        im = _draw(shape, "real", dist, rng, var / 2)
        return re + 1j * im
    sd = np.sqrt(var)
    if dist == "gaussian":
        return sd * rng.standard_normal(shape)
    if dist == "rademacher":
        return sd * (2.0 * rng.integers(0, 2, size=shape) - 1.0)
    if dist == "uniform":
        return sd * np.sqrt(3.0) * rng.uniform(-1.0, 1.0, size=shape)
    raise EnsembleError(f"unsupported distribution tag {dist!r}")


def sample_iid(model: DeformedModel, seed: int) -> SampledMatrix:
    """Fresh IID matrix X for ``model`` (entries of variance 1/N)."""
    if model.dist not in DISTS:
        raise EnsembleError(f"unsupported distribution tag {model.dist!r}")
    N = model.N
    rng = np.random.default_rng(seed)
    X = _draw((N, N), model.field, model.dist, rng, 1.0 / N)
    return SampledMatrix(np.asarray(X, dtype=complex), int(seed), model, 0.0)


def ou_transition(X0: SampledMatrix, t: float, seed: int) -> SampledMatrix:
    """Exact OU step ``X_t = e^{-t/2} X_0 + G_t`` with Gaussian ``G_t`` of variance (1-e^{-t})/N."""
    if t < 0:
        raise EnsembleError(f"OU time must be nonnegative, got {t}")
    if t == 0:
        return X0
    N = X0.model.N
    rng = np.random.default_rng(seed)
    G = _draw((N, N), X0.model.field, "gaussian", rng, -np.expm1(-t) / N)
    Xt = np.exp(-t / 2) * X0.entries + G
    return SampledMatrix(np.asarray(Xt, dtype=complex), int(seed), X0.model, X0.time + t)


# ---------------------------------------------------------------------------
# dense primitives


def _check_square(B) -> np.ndarray:
    B = np.asarray(B)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise EnsembleError(f"expected a square matrix, got shape {B.shape}")
    return B


def hermitize(B, z: complex = 0.0) -> Hermitization:
    """2N x 2N block matrix [[0, B-z], [(B-z)*, 0]]."""
    B = _check_square(B).astype(complex)
    N = B.shape[0]
    Bz = B - z * np.eye(N)
    H = np.zeros((2 * N, 2 * N), dtype=complex)
    H[:N, N:] = Bz
    H[N:, :N] = Bz.conj().T
    return Hermitization(H, complex(z))


def eigenvalues(B, check_residual: bool = False, tol: float = 1e-8) -> np.ndarray:
    """All eigenvalues of a dense square matrix, with multiplicity."""
    B = _check_square(B)
    if not np.all(np.isfinite(B)):
        raise EnsembleError("matrix has non-finite entries")
    try:
        if check_residual:
            lam, V = np.linalg.eig(B)
        else:
            lam = np.linalg.eigvals(B)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise SpectralError(f"eigenvalue solver did not converge: {exc}") from exc
    if check_residual and B.shape[0]:
        nrm = max(np.linalg.norm(B, 2), np.finfo(float).tiny)
        res = np.linalg.norm(B @ V - V * lam, axis=0) / (nrm * np.linalg.norm(V, axis=0))
        if np.max(res) > tol:
            raise SpectralError(f"eigenpair residual {np.max(res):.2e} exceeds {tol:.1e}")
    return lam


def singular_values(B) -> np.ndarray:
    """Singular values in ascending order."""
    B = _check_square(B)
    if not np.all(np.isfinite(B)):
        raise EnsembleError("matrix has non-finite entries")
    try:
        s = np.linalg.svd(B, compute_uv=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise SpectralError(f"SVD did not converge: {exc}") from exc
    return s[::-1].copy()


# ---------------------------------------------------------------------------
# deformation constructors


def _cluster_diag(N, values, mult=None):
    values = list(values)
    if mult is None:
        k = len(values)
        base, extra = divmod(N, k)
        mult = [base + (1 if i < extra else 0) for i in range(k)]
    if sum(mult) != N:
        raise EnsembleError(f"multiplicities {mult} do not sum to N={N}")
    return np.concatenate([np.full(m, v, dtype=complex) for v, m in zip(values, mult)])


def jordan_block(N: int, lam: complex = 0.0) -> np.ndarray:
    J = np.diag(np.full(N, lam, dtype=complex))
    J += np.diag(np.ones(N - 1, dtype=complex), 1)
    return J


def _builders() -> dict[str, Callable[..., Any]]:
    return {
        "zero": lambda N, **_: np.zeros(N, dtype=complex),
        "twocluster": lambda N, values=(0.0, 5.0), mult=None, **_: _cluster_diag(N, values, mult),
        "threecluster": lambda N, values=(0.0, 5.0, 10.0), mult=None, **_: _cluster_diag(N, values, mult),
        # diag(+1 x N/2, -1 x N/2): I3 vanishes at z0 = 0 where f = 1
        "quadratic": lambda N, a=1.0, **_: _cluster_diag(N, (a, -a)),
        "planted": lambda N, values=(0.0, 5.0), outlier=(2.5 + 3.0j), **_: np.concatenate(
            [_cluster_diag(N - 1, values), [complex(outlier)]]),
        "diag": lambda N=None, entries=(), **_: np.asarray(_maybe_pairs(entries), dtype=complex),
        "jordan": lambda N, lam=0.0, **_: jordan_block(N, complex(lam)),
        "custom": lambda N=None, matrix=(), **_: np.asarray(_maybe_pairs(matrix), dtype=complex),
    }


def _maybe_pairs(x):
    a = np.asarray(x)
    if a.dtype.kind in "fi" and a.ndim >= 1 and a.shape[-1] == 2 and a.ndim in (2, 3):
        return _pairs_to_complex(a)
    return a


MODEL_KINDS = tuple(_builders())


def build_deformation(spec) -> DeformedModel:
    """Construct a model from a spec dict, JSON string or short name.

    Recognised kinds: zero, twocluster, threecluster, quadratic, planted, diag,
    jordan, custom.  Optional keys: field, dist, label, z0 (records
    ``||(A - z0)^-1||`` and rejects singular shifts).
    """
    if isinstance(spec, str):
        spec = json.loads(spec) if spec.strip().startswith("{") else {"kind": spec}
    spec = dict(spec)
    kind = spec.pop("kind", None) or spec.pop("model", None)
    if kind not in _builders():
        raise EnsembleError(f"unknown deformation kind {kind!r}; expected one of {MODEL_KINDS}")
    field_ = spec.pop("field", "complex")
    dist = spec.pop("dist", "gaussian")
    label = spec.pop("label", kind)
    z0 = spec.pop("z0", None)
    if "N" in spec and spec["N"] is not None and int(spec["N"]) <= 0:
        raise EnsembleError("N must be positive")
    if "N" in spec and spec["N"] is not None:
        spec["N"] = int(spec["N"])
    A = _builders()[kind](**spec)
    if kind in ("twocluster", "threecluster", "quadratic") and field_ == "real":
        A = A.real.astype(complex)
    model = DeformedModel.from_diagonal(A, field_, dist, label) if A.ndim == 1 else \
        DeformedModel.from_matrix(A, field_, dist, label)
    if z0 is not None:
        z0 = complex(*z0) if isinstance(z0, (list, tuple)) else complex(z0)
        s = shifted_singular_values(model, z0)
        if np.min(s) <= 1e-12 * max(1.0, model.norm):
            raise EnsembleError(f"A - z0 is singular at z0={z0}")
        model = model.with_(inv_norm=float(1.0 / np.min(s)))
    return model


# ---------------------------------------------------------------------------
# deterministic operator view shared by the MDE / Brown / flow code


class Deformation:
    """Cached spectral view of a deterministic matrix ``A`` for shifted quantities.

    For diagonal ``A`` everything reduces to the distinct diagonal atoms with
    their relative multiplicities, so evaluations at many shifts are vectorised.
    """

    def __init__(self, A):
        if isinstance(A, Deformation):
            self.__dict__.update(A.__dict__)
            return
        if isinstance(A, DeformedModel):
            d = A.diag
            M = A.dense
        else:
            M = np.atleast_2d(np.asarray(A, dtype=complex))
            _check_square(M)
            d = np.diag(M).copy() if not np.any(M - np.diag(np.diag(M))) else None
        if d is not None:
            atoms, counts = np.unique(np.asarray(d, dtype=complex), return_counts=True)
            self.atoms = atoms
            self.weights = counts / counts.sum()
            self.matrix = None
            self.N = int(counts.sum())
        else:
            self.atoms = None
            self.weights = None
            self.matrix = np.asarray(M, dtype=complex)
            self.N = self.matrix.shape[0]
        self.is_real = bool(np.all(np.imag(self.atoms if self.atoms is not None else self.matrix) == 0))

    @property
    def is_diagonal(self) -> bool:
        return self.atoms is not None

    @property
    def norm(self) -> float:
        if self.is_diagonal:
            return float(np.max(np.abs(self.atoms)))
        return float(np.linalg.norm(self.matrix, 2))

    def dense(self) -> np.ndarray:
        if self.is_diagonal:
            raise EnsembleError("dense() is only meaningful for non-diagonal deformations")
        return self.matrix

    def eigenvalues(self) -> np.ndarray:
        if self.is_diagonal:
            return self.atoms
        return eigenvalues(self.matrix)

    def affine(self, alpha: complex, beta: complex) -> "Deformation":
        """View of ``alpha*A + beta``."""
        out = object.__new__(Deformation)
        if self.is_diagonal:
            out.atoms = alpha * self.atoms + beta
            out.weights = self.weights
            out.matrix = None
        else:
            out.atoms = out.weights = None
            out.matrix = alpha * self.matrix + beta * np.eye(self.N)
        out.N = self.N
        out.is_real = bool(np.all(np.imag(out.atoms if out.is_diagonal else out.matrix) == 0))
        return out

    def svals(self, z) -> tuple[np.ndarray, np.ndarray]:
        """Singular values of ``A - z`` for an array of shifts.

        Returns ``(s, w)`` with ``s.shape == z.shape + (n,)`` and weights ``w``
        (shape ``(n,)``) summing to one.
        """
        z = np.asarray(z, dtype=complex)
        if self.is_diagonal:
            return np.abs(self.atoms - z[..., None]), self.weights
        flat = z.reshape(-1)
        eye = np.eye(self.N)
        s = np.empty((flat.size, self.N))
        for i, zz in enumerate(flat):
            s[i] = np.linalg.svd(self.matrix - zz * eye, compute_uv=False)[::-1]
        return s.reshape(z.shape + (self.N,)), np.full(self.N, 1.0 / self.N)

    def moments(self, z) -> dict[str, np.ndarray]:
        """Resolvent traces of ``R = (A - z)^{-1}`` at an array of shifts.

        Keys: ``f = <|R|^2>``, ``I3 = <R^2 R*>`` (= d f / dz), ``I4 = <(R R*)^2>``,
        ``dd = <|R^2|^2>`` (= d dbar f), ``d2 = 2<R^3 R*>`` (= d^2 f / dz^2),
        ``tt = <R R^T>`` (for theta), ``inv_norm = ||R||``.
        """
        z = np.asarray(z, dtype=complex)
        if self.is_diagonal:
            r = 1.0 / (self.atoms - z[..., None])
            w = self.weights
            a2 = np.abs(r) ** 2
            out = {
                "f": a2 @ w,
                "I3": (r * a2) @ w,
                "I4": (a2 ** 2) @ w,
                "dd": (a2 ** 2) @ w,
                "d2": 2 * (r ** 2 * a2) @ w,
                "tt": (r ** 2) @ w,
                "inv_norm": np.max(np.abs(r), axis=-1),
            }
            return out
        flat = z.reshape(-1)
        keys = ("f", "I3", "I4", "dd", "d2", "tt", "inv_norm")
        res = {k: np.empty(flat.size, dtype=complex) for k in keys}
        eye = np.eye(self.N)
        for i, zz in enumerate(flat):
            B = self.matrix - zz * eye
            try:
                R = np.linalg.inv(B)
            except np.linalg.LinAlgError as exc:
                raise EnsembleError(f"A - z is singular at z={zz}") from exc
            R2 = R @ R
            RRs = R @ R.conj().T
            n = self.N
            res["f"][i] = np.sum(np.abs(R) ** 2) / n
            res["I3"][i] = np.sum(R2 * R.conj()) / n
            res["I4"][i] = np.sum(np.abs(RRs) ** 2) / n
            res["dd"][i] = np.sum(np.abs(R2) ** 2) / n
            res["d2"][i] = 2 * np.sum((R2 @ R) * R.conj()) / n
            res["tt"][i] = np.sum(R * R) / n
            res["inv_norm"][i] = np.linalg.norm(R, 2)
        out = {}
        for k in keys:
            v = res[k].reshape(z.shape)
            out[k] = v if k in ("I3", "d2", "tt") else v.real
        return out


def shifted_singular_values(A, z: complex) -> np.ndarray:
    """Singular values of ``A - z`` (ascending, with multiplicity)."""
    if isinstance(A, DeformedModel) and A.is_diagonal:
        return np.sort(np.abs(A.diag - z))
    M = A.A if isinstance(A, DeformedModel) else np.asarray(A, dtype=complex)
    return singular_values(M - z * np.eye(M.shape[0]))
