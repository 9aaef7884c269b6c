"""Homogeneous model geometries with algebraic curvature.

Two families of models are supported:

* ``LieGroupQuotient`` -- a compact quotient of a Lie group carrying a
  left-invariant metric, described by structure constants ``c^k_{ij}``
  (``[e_i, e_j] = c^k_{ij} e_k``) in a fixed basis plus the volume of a
  fundamental domain of that basis ("covolume").  Curvature is computed in
  a Milnor frame: orthonormalize the basis, transport the structure
  constants, and apply the closed-form connection coefficients
  ``G^k_{ij} = (c~^k_{ij} - c~^i_{jk} + c~^j_{ki}) / 2``.
* ``ProductOfSpaceForms`` -- a product of round spheres, circles and flat
  tori, where each factor contributes its constant-curvature block.

Sign conventions, fixed once for the whole package: the curvature operator
is ``R(X,Y)Z = grad_X grad_Y Z - grad_Y grad_X Z - grad_[X,Y] Z`` and the
rank-4 component array is ``R_{ijkl} = <R(f_i, f_j) f_l, f_k>`` in an
orthonormal frame ``f``.  With this choice the unit round sphere satisfies
``R_{ijkl} = g_{ik} g_{jl} - g_{il} g_{jk}``, sectional curvature of a
coordinate plane is ``R_{ijij}``, and ``Ric_{jl} = sum_a R_{ajal}``.

All types are immutable values and all operations are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "GeometryError",
    "ModelGeometry",
    "MetricState",
    "CurvatureData",
    "build_model",
    "heisenberg_model",
    "flat_torus_model",
    "sphere_circle_model",
    "reference_metric",
    "metric_from_matrix",
    "metric_from_scales",
    "orthonormalize",
    "curvature",
    "rm_norm",
    "ricci_fixed_basis",
    "volume",
    "diameter",
    "metric_matrix",
    "scale_metric",
]

LIE_GROUP_QUOTIENT = "lie_group_quotient"
PRODUCT_OF_SPACE_FORMS = "product_of_space_forms"

FACTOR_SPHERE = "sphere"
FACTOR_CIRCLE = "circle"
FACTOR_FLAT_TORUS = "flat_torus"

_JACOBI_TOL = 1e-12
_DEFAULT_PLANE_SAMPLES = 10_000


class GeometryError(ValueError):
    """Invalid model description or metric."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ModelGeometry:
    """Descriptor of a homogeneous model space.

    ``structure_constants`` is stored as ``c[k, i, j] = c^k_{ij}`` for
    quotient models; ``factors`` is a tuple of ``(type, dim, radius)`` for
    products.
    """

    kind: str
    dim: int
    structure_constants: np.ndarray | None = None
    covolume: float | None = None
    factors: tuple[tuple[str, int, float], ...] | None = None

    def factor_slices(self) -> list[slice]:
        out, start = [], 0
        for _, d, _ in self.factors or ():
            out.append(slice(start, start + d))
            start += d
        return out

    def describe(self) -> dict:
        """JSON-serializable description (round-trips through build_model)."""
        if self.kind == LIE_GROUP_QUOTIENT:
            c = self.structure_constants
            brackets = []
            for k in range(self.dim):
                for i in range(self.dim):
                    for j in range(i + 1, self.dim):
                        if c[k, i, j] != 0.0:
                            brackets.append([i + 1, j + 1, k + 1, float(c[k, i, j])])
            return {
                "kind": self.kind,
                "dim": self.dim,
                "covolume": self.covolume,
                "brackets": brackets,
            }
        return {
            "kind": self.kind,
            "dim": self.dim,
            "factors": [[t, d, r] for (t, d, r) in self.factors],
        }


@dataclass(frozen=True)
class MetricState:
    """Invariant metric at one flow time.

    Quotient models carry the full SPD matrix in the fixed basis; products
    carry one positive scale (squared radius) per factor.
    """

    time: float = 0.0
    matrix: np.ndarray | None = None
    scales: tuple[float, ...] | None = None

    def __post_init__(self):
        if (self.matrix is None) == (self.scales is None):
            raise GeometryError("metric state needs exactly one of matrix/scales")
        if self.matrix is not None:
            object.__setattr__(self, "matrix", _readonly(self.matrix))
        else:
            object.__setattr__(self, "scales", tuple(float(s) for s in self.scales))
        if self.time < 0:
            raise GeometryError(f"flow time must be nonnegative, got {self.time}")


@dataclass(frozen=True)
class CurvatureData:
    """Orthonormal-frame curvature of one metric.

    ``rm[i, j, k, l] = R_{ijkl}`` with the conventions of the module
    docstring; ``ric`` is the orthonormal-frame Ricci matrix, so
    ``trace(ric) == scalar``; ``sec_min``/``sec_max`` are extremes of the
    sectional curvature over coordinate 2-planes plus a seeded random
    sample of 2-planes (conservative, reporting only).
    """

    rm: np.ndarray
    ric: np.ndarray
    scalar: float
    rm_norm: float
    sec_min: float
    sec_max: float

    def __post_init__(self):
        object.__setattr__(self, "rm", _readonly(self.rm))
        object.__setattr__(self, "ric", _readonly(self.ric))


# ---------------------------------------------------------------------------
# model construction


def _validate_brackets(n: int, entries: Sequence[Sequence[float]]) -> np.ndarray:
    c = np.zeros((n, n, n))
    seen: dict[tuple[int, int, int], float] = {}
    for entry in entries:
        if len(entry) != 4:
            raise GeometryError(f"bracket entry needs 4 numbers 'i j k coeff', got {entry!r}")
        i, j, k = (int(entry[0]) - 1, int(entry[1]) - 1, int(entry[2]) - 1)
        coeff = float(entry[3])
        for idx in (i, j, k):
            if not 0 <= idx < n:
                raise GeometryError(f"bracket index out of range 1..{n} in {entry!r}")
        if i == j and coeff != 0.0:
            raise GeometryError(f"antisymmetry violated at index triple ({i+1},{j+1},{k+1})")
        if (j, i, k) in seen and seen[(j, i, k)] != -coeff:
            raise GeometryError(
                f"antisymmetry violated at index triple ({i+1},{j+1},{k+1}): "
                f"c^{k+1}_{{{j+1}{i+1}}} = {seen[(j, i, k)]} conflicts with {coeff}"
            )
        if (i, j, k) in seen and seen[(i, j, k)] != coeff:
            raise GeometryError(f"duplicate bracket entry for index triple ({i+1},{j+1},{k+1})")
        seen[(i, j, k)] = coeff
        seen[(j, i, k)] = -coeff
        c[k, i, j] = coeff
        c[k, j, i] = -coeff
    _check_jacobi(c)
    return c


def _check_jacobi(c: np.ndarray) -> None:
    # cyclic sum c^m_{ij} c^l_{mk} + c^m_{jk} c^l_{mi} + c^m_{ki} c^l_{mj}
    t1 = np.einsum("mij,lmk->lijk", c, c)
    jac = t1 + np.einsum("mjk,lmi->lijk", c, c) + np.einsum("mki,lmj->lijk", c, c)
    cmax = float(np.max(np.abs(c))) if c.size else 0.0
    tol = _JACOBI_TOL * max(1.0, cmax * cmax)
    worst = float(np.max(np.abs(jac)))
    if worst > tol:
        l, i, j, k = np.unravel_index(np.argmax(np.abs(jac)), jac.shape)
        raise GeometryError(
            f"Jacobi identity violated at index triple ({i+1},{j+1},{k+1}) "
            f"(component {l+1}): residual {worst:.3e} > {tol:.1e}"
        )


def build_model(spec: dict) -> ModelGeometry:
    """Build and validate a model from a plain description dict.

    Quotient: ``{"kind": "lie_group_quotient", "dim": n, "covolume": v,
    "brackets": [[i, j, k, coeff], ...]}`` with 1-based indices meaning
    ``[e_i, e_j] = coeff * e_k``.  Product: ``{"kind":
    "product_of_space_forms", "factors": [[type, dim, radius], ...]}``.
    """
    kind = spec.get("kind")
    if kind == LIE_GROUP_QUOTIENT:
        n = int(spec.get("dim", 0))
        if n < 3:
            raise GeometryError(f"quotient models need dim >= 3, got {n}")
        covolume = float(spec.get("covolume", 1.0))
        if covolume <= 0:
            raise GeometryError(f"covolume must be positive, got {covolume}")
        c = _validate_brackets(n, spec.get("brackets", ()))
        return ModelGeometry(kind=kind, dim=n, structure_constants=_readonly(c),
                             covolume=covolume)
    if kind == PRODUCT_OF_SPACE_FORMS:
        raw = spec.get("factors", ())
        if not raw:
            raise GeometryError("product model needs at least one factor")
        factors = []
        for f in raw:
            ftype, d, r = str(f[0]).replace("-", "_"), int(f[1]), float(f[2])
            if ftype not in (FACTOR_SPHERE, FACTOR_CIRCLE, FACTOR_FLAT_TORUS):
                raise GeometryError(f"unknown factor type {f[0]!r}")
            if ftype == FACTOR_SPHERE and d < 2:
                raise GeometryError(f"sphere factor needs dim >= 2, got {d}")
            if ftype == FACTOR_CIRCLE and d != 1:
                raise GeometryError(f"circle factor has dim 1, got {d}")
            if ftype == FACTOR_FLAT_TORUS and d < 1:
                raise GeometryError(f"flat_torus factor needs dim >= 1, got {d}")
            if r <= 0:
                raise GeometryError(f"factor radius must be positive, got {r}")
            factors.append((ftype, d, r))
        n = sum(d for _, d, _ in factors)
        if n < 3:
            raise GeometryError(f"total dimension must be >= 3, got {n}")
        return ModelGeometry(kind=kind, dim=n, factors=tuple(factors))
    raise GeometryError(f"unknown model kind {kind!r}")


def heisenberg_model(covolume: float = 1.0, bracket: float = 1.0) -> ModelGeometry:
    """3-dim nilpotent quotient with [e1, e2] = bracket * e3."""
    return build_model({
        "kind": LIE_GROUP_QUOTIENT, "dim": 3, "covolume": covolume,
        "brackets": [[1, 2, 3, bracket]],
    })


def flat_torus_model(dim: int = 3, covolume: float = 1.0) -> ModelGeometry:
    """Abelian quotient: all structure constants zero."""
    return build_model({"kind": LIE_GROUP_QUOTIENT, "dim": dim,
                        "covolume": covolume, "brackets": []})


def sphere_circle_model(sphere_dim: int = 3, circle_radius: float = 1.0,
                        sphere_radius: float = 1.0) -> ModelGeometry:
    """S^d x S^1 product, the standard collapse family."""
    return build_model({
        "kind": PRODUCT_OF_SPACE_FORMS,
        "factors": [[FACTOR_SPHERE, sphere_dim, sphere_radius],
                    [FACTOR_CIRCLE, 1, circle_radius]],
    })


def reference_metric(model: ModelGeometry, time: float = 0.0) -> MetricState:
    """Identity metric (quotients) or reference-radius scales (products)."""
    if model.kind == LIE_GROUP_QUOTIENT:
        return MetricState(time=time, matrix=np.eye(model.dim))
    return MetricState(time=time, scales=tuple(r * r for _, _, r in model.factors))


def metric_from_matrix(matrix: np.ndarray, time: float = 0.0) -> MetricState:
    return MetricState(time=time, matrix=np.asarray(matrix, dtype=float))


def metric_from_scales(scales: Sequence[float], time: float = 0.0) -> MetricState:
    return MetricState(time=time, scales=tuple(scales))


def scale_metric(g: MetricState, lam_sq: float, time: float | None = None) -> MetricState:
    """Return lam_sq * g (the metric scaled by lambda^2)."""
    if lam_sq <= 0:
        raise GeometryError(f"metric scale factor must be positive, got {lam_sq}")
    t = g.time if time is None else time
    if g.matrix is not None:
        return MetricState(time=t, matrix=lam_sq * g.matrix)
    return MetricState(time=t, scales=tuple(lam_sq * s for s in g.scales))


def metric_matrix(model: ModelGeometry, g: MetricState) -> np.ndarray:
    """Metric as a full matrix in the fixed basis (block diagonal for products)."""
    if g.matrix is not None:
        return np.array(g.matrix)
    diag = np.concatenate([np.full(d, s) for (_, d, _), s in zip(model.factors, g.scales)])
    return np.diag(diag)


# ---------------------------------------------------------------------------
# frames and curvature


def _check_spd(mat: np.ndarray) -> np.ndarray:
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise GeometryError(f"metric matrix must be square, got shape {mat.shape}")
    if not np.allclose(mat, mat.T, rtol=0.0, atol=1e-12 * max(1.0, float(np.abs(mat).max()))):
        raise GeometryError("metric matrix is not symmetric")
    evals = np.linalg.eigvalsh(mat)
    if evals[0] <= 0:
        raise GeometryError(f"metric is not positive definite: minimum eigenvalue {evals[0]:.6e}")
    return mat


def _check_scales(model: ModelGeometry, g: MetricState) -> tuple[float, ...]:
    if len(g.scales) != len(model.factors):
        raise GeometryError(
            f"expected {len(model.factors)} factor scales, got {len(g.scales)}")
    if min(g.scales) <= 0:
        raise GeometryError(f"factor scales must be positive, got {g.scales}")
    return g.scales


def _frame(model: ModelGeometry, g: MetricState) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    mat = np.asarray(g.matrix, dtype=float)
    if not np.array_equal(mat, mat.T):      # exact equality is the hot path
        mat = _check_spd(mat)
    evals, vecs = np.linalg.eigh(mat)
    if evals[0] <= 0:
        raise GeometryError(
            f"metric is not positive definite: minimum eigenvalue {evals[0]:.6e}")
    L = (vecs / np.sqrt(evals)) @ vecs.T
    Linv = (vecs * np.sqrt(evals)) @ vecs.T
    c = model.structure_constants
    # c~^c_{ab} = Linv[c,k] L[i,a] L[j,b] c^k_{ij}, contracted one axis at a time
    tmp = np.tensordot(c, L, axes=([1], [0]))        # (k, j, a)
    tmp = np.tensordot(tmp, L, axes=([1], [0]))      # (k, a, b)
    ct = np.tensordot(Linv, tmp, axes=([1], [0]))    # (c, a, b)
    return L, Linv, ct


def orthonormalize(model: ModelGeometry, g: MetricState) -> tuple[np.ndarray, np.ndarray]:
    """Frame change L with L^T g L = I and the transported structure constants.

    The new frame is ``f_a = sum_i L[i, a] e_i``; the transported constants
    satisfy ``c~^c_{ab} = L[i,a] L[j,b] Linv[c,k] c^k_{ij}``.  L is the
    symmetric inverse square root of g, so a diagonal metric keeps a
    diagonal frame change.
    """
    if model.kind != LIE_GROUP_QUOTIENT:
        raise GeometryError("orthonormalize applies to Lie group quotients only")
    L, _, ct = _frame(model, g)
    return L, ct


def _rm_from_structure(ct: np.ndarray) -> np.ndarray:
    """Curvature components in an orthonormal frame from structure constants."""
    # gamma[k,i,j] = (ct[k,i,j] - ct[i,j,k] + ct[j,k,i]) / 2; note that
    # ct.transpose(2,0,1)[k,i,j] == ct[i,j,k] and ct.transpose(1,2,0)[k,i,j] == ct[j,k,i]
    gamma = 0.5 * (ct - ct.transpose(2, 0, 1) + ct.transpose(1, 2, 0))
    # t1[i,j,k,l] = gamma[m,j,l] gamma[k,i,m]
    t1 = np.tensordot(gamma, gamma, axes=([0], [2])).transpose(3, 0, 2, 1)
    # t3[i,j,k,l] = ct[m,i,j] gamma[k,m,l]
    t3 = np.tensordot(ct, gamma, axes=([0], [1]))
    return t1 - t1.transpose(1, 0, 2, 3) - t3


def _rm_product(model: ModelGeometry, scales: Sequence[float]) -> np.ndarray:
    n = model.dim
    rm = np.zeros((n, n, n, n))
    for sl, (ftype, d, _), s in zip(model.factor_slices(), model.factors, scales):
        if ftype != FACTOR_SPHERE:
            continue
        k = 1.0 / s
        idx = range(sl.start, sl.stop)
        for i in idx:
            for j in idx:
                if i != j:
                    rm[i, j, i, j] += k
                    rm[i, j, j, i] -= k
    return rm


def _sec_extremes(rm: np.ndarray, plane_samples: int, seed: int) -> tuple[float, float]:
    n = rm.shape[0]
    secs = [rm[i, j, i, j] for i in range(n) for j in range(i + 1, n)]
    lo, hi = min(secs), max(secs)
    if plane_samples > 0:
        rng = np.random.default_rng(seed)
        u = rng.standard_normal((plane_samples, n))
        v = rng.standard_normal((plane_samples, n))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        v -= np.sum(u * v, axis=1, keepdims=True) * u
        keep = np.linalg.norm(v, axis=1) > 1e-8
        u, v = u[keep], v[keep]
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        k = np.einsum("ijkl,pi,pj,pk,pl->p", rm, u, v, u, v, optimize=True)
        lo = min(lo, float(k.min()))
        hi = max(hi, float(k.max()))
    return float(lo), float(hi)


def curvature(model: ModelGeometry, g: MetricState, *,
              plane_samples: int = _DEFAULT_PLANE_SAMPLES,
              seed: int = 0) -> CurvatureData:
    """Full orthonormal-frame curvature data of (model, g)."""
    if model.kind == LIE_GROUP_QUOTIENT:
        _, _, ct = _frame(model, g)
        rm = _rm_from_structure(ct)
    else:
        rm = _rm_product(model, _check_scales(model, g))
    ric = np.trace(rm, axis1=0, axis2=2)
    ric = 0.5 * (ric + ric.T)
    scalar = float(np.trace(ric))
    rm_n = float(np.sqrt(np.sum(rm * rm)))
    lo, hi = _sec_extremes(rm, plane_samples, seed)
    return CurvatureData(rm=rm, ric=ric, scalar=scalar, rm_norm=rm_n,
                         sec_min=lo, sec_max=hi)


def rm_norm(model: ModelGeometry, g: MetricState) -> float:
    """Pointwise curvature-tensor norm |Rm| (cheap path for the integrator)."""
    if model.kind == LIE_GROUP_QUOTIENT:
        _, _, ct = _frame(model, g)
        rm = _rm_from_structure(ct)
        return float(np.sqrt(np.sum(rm * rm)))
    total = 0.0
    for (ftype, d, _), s in zip(model.factors, _check_scales(model, g)):
        if ftype == FACTOR_SPHERE:
            total += 2.0 * d * (d - 1) / (s * s)
    return math.sqrt(total)


def ricci_fixed_basis(model: ModelGeometry, g: MetricState) -> np.ndarray:
    """Ricci tensor as a bilinear form in the fixed basis."""
    if model.kind == LIE_GROUP_QUOTIENT:
        _, Linv, ct = _frame(model, g)
        rm = _rm_from_structure(ct)
        ric = np.trace(rm, axis1=0, axis2=2)
        out = Linv.T @ ric @ Linv
        return 0.5 * (out + out.T)
    _check_scales(model, g)
    diag = np.concatenate([
        np.full(d, float(d - 1) if ftype == FACTOR_SPHERE else 0.0)
        for (ftype, d, _) in model.factors
    ])
    return np.diag(diag)


# ---------------------------------------------------------------------------
# volume and diameter

_UNIT_SPHERE_VOL = {}


def unit_sphere_volume(d: int) -> float:
    """Riemannian volume of the round unit d-sphere."""
    if d not in _UNIT_SPHERE_VOL:
        _UNIT_SPHERE_VOL[d] = 2.0 * math.pi ** ((d + 1) / 2.0) / math.gamma((d + 1) / 2.0)
    return _UNIT_SPHERE_VOL[d]


def _factor_volume(ftype: str, d: int, s: float) -> float:
    if ftype == FACTOR_SPHERE:
        return unit_sphere_volume(d) * s ** (d / 2.0)
    if ftype == FACTOR_CIRCLE:
        return 2.0 * math.pi * math.sqrt(s)
    return (2.0 * math.pi * math.sqrt(s)) ** d


def volume(model: ModelGeometry, g: MetricState) -> float:
    """Total volume: sqrt(det g) * covolume, or the product of factor volumes."""
    if model.kind == LIE_GROUP_QUOTIENT:
        mat = _check_spd(g.matrix)
        return float(math.sqrt(np.linalg.det(mat)) * model.covolume)
    vol = 1.0
    for (ftype, d, _), s in zip(model.factors, _check_scales(model, g)):
        vol *= _factor_volume(ftype, d, s)
    return vol


def sphere_circle_note(model: ModelGeometry) -> str | None:
    """Counterexample annotation for sphere-times-circle collapse families."""
    if model.kind != PRODUCT_OF_SPACE_FORMS or model.factors is None \
            or len(model.factors) != 2:
        return None
    kinds = sorted(f[0] for f in model.factors)
    if kinds == [FACTOR_CIRCLE, FACTOR_SPHERE]:
        return ("sphere-times-circle products are not infranil (their universal "
                "cover is not Euclidean space): small ||Rm||_{n/2} alone does "
                "not give the pinching conclusion")
    return None


def diameter(model: ModelGeometry, g: MetricState) -> float | None:
    """Exact diameter for products; None (declared unavailable) for quotients."""
    if model.kind == LIE_GROUP_QUOTIENT:
        return None
    total = 0.0
    for (ftype, d, _), s in zip(model.factors, _check_scales(model, g)):
        if ftype == FACTOR_SPHERE or ftype == FACTOR_CIRCLE:
            dm = math.pi * math.sqrt(s)
        else:
            dm = math.pi * math.sqrt(s * d)
        total += dm * dm
    return math.sqrt(total)
