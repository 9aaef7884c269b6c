"""Ricci flow dg/dt = -2 Ric(g) as an ODE on invariant metrics.

On a homogeneous model the flow reduces to a small ODE system: the SPD
metric matrix in the fixed basis (quotients) or one scale per factor
(products).  Integration uses an embedded Dormand-Prince 5(4) pair with
proportional step control; a step is rejected and halved if it would leave
the SPD cone, and the run stops early when |Rm| crosses the blowup
threshold or the step size underflows.

States are recorded on a uniform time grid (spacing ``record_every``), so
the finite-difference identity checks downstream see a regular grid.
Derived per-record quantities are recomputed from the recorded state, never
integrated alongside, which keeps state and invariants drift-free.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import geometry
from .geometry import (
    LIE_GROUP_QUOTIENT,
    GeometryError,
    MetricState,
    ModelGeometry,
)

__all__ = [
    "FlowConfig",
    "Trajectory",
    "TrajectorySchemaError",
    "ricci_rhs",
    "integrate",
    "horizon_T0",
    "parabolic_rescale",
    "normalize_to_unit_volume",
    "derived_row",
    "write_trajectory_csv",
    "read_trajectory_csv",
    "validate_trajectory",
    "csv_columns",
]

TERM_HORIZON = "horizon-reached"
TERM_BLOWUP = "curvature-blowup"
TERM_UNDERFLOW = "step-underflow"

DERIVED_KEYS = ("vol", "rm_norm", "scalar_R", "rm_n2_norm", "J", "theta", "chi",
                "ric_min", "ric_max")

_DEFAULT_RECORDS = 1024
_SAFETY, _MIN_FAC, _MAX_FAC = 0.9, 0.2, 5.0


class TrajectorySchemaError(ValueError):
    """Trajectory file does not match the mandated CSV schema."""


@dataclass(frozen=True)
class FlowConfig:
    """Integration settings.

    ``t_end=None`` derives the horizon gamma * vol^(2/n) * cs0^2 from the
    initial data; ``max_rm=None`` defaults to 1e6 * max(1, |Rm|(0)).
    ``record_every`` is the spacing of the uniform record grid (None picks
    t_end / 1024).  ``cs0`` and ``c_n`` feed the recorded theta and chi
    columns and are echoed into the run metadata.
    """

    gamma: float = 1.0
    t_end: float | None = None
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_rm: float | None = None
    record_every: float | None = None
    cs0: float = 1.0
    c_n: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.rel_tol < 1.0) or not (0.0 < self.abs_tol < 1.0):
            raise ValueError("integrator tolerances must lie in (0, 1)")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.t_end is not None and self.t_end <= 0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if self.record_every is not None and self.record_every <= 0:
            raise ValueError("record_every must be positive")
        if self.cs0 <= 0 or self.c_n <= 0:
            raise ValueError("cs0 and c_n must be positive")


@dataclass
class Trajectory:
    """Time-ordered recorded states with derived invariants and run metadata."""

    model: ModelGeometry
    times: np.ndarray
    mats: np.ndarray                    # (M, n, n) metric in the fixed basis
    scales: np.ndarray | None           # (M, num_factors) for products
    derived: dict[str, np.ndarray]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.times.setflags(write=False)
        self.mats = np.asarray(self.mats, dtype=float)
        self.mats.setflags(write=False)
        if self.scales is not None:
            self.scales = np.asarray(self.scales, dtype=float)
            self.scales.setflags(write=False)
        for k in self.derived:
            self.derived[k] = np.asarray(self.derived[k], dtype=float)
            self.derived[k].setflags(write=False)

    def __len__(self) -> int:
        return len(self.times)

    def state(self, i: int) -> MetricState:
        t = float(self.times[i])
        if self.scales is not None:
            return MetricState(time=t, scales=tuple(self.scales[i]))
        return MetricState(time=t, matrix=self.mats[i])

    @property
    def states(self) -> list[MetricState]:
        return [self.state(i) for i in range(len(self))]


def horizon_T0(gamma: float, vol0: float, cs0: float, n: int) -> float:
    """Flow horizon gamma * vol0^(2/n) * cs0^2."""
    if gamma <= 0 or vol0 <= 0 or cs0 <= 0:
        raise ValueError("horizon inputs must be positive")
    return gamma * vol0 ** (2.0 / n) * cs0 * cs0


def ricci_rhs(model: ModelGeometry, g: MetricState) -> np.ndarray:
    """-2 Ric(g) as a symmetric matrix in the fixed basis."""
    return -2.0 * geometry.ricci_fixed_basis(model, g)


def normalize_to_unit_volume(model: ModelGeometry, g0: MetricState) -> MetricState:
    """Scale the metric so the total volume is 1."""
    vol = geometry.volume(model, g0)
    if abs(vol - 1.0) < 1e-15:
        return g0
    return geometry.scale_metric(g0, vol ** (-2.0 / model.dim))


def _safe_exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def derived_row(model: ModelGeometry, g: MetricState, t: float,
                cs0: float, c_n: float, delta0: float) -> dict[str, float]:
    """Recompute every derived invariant of one recorded state."""
    n = model.dim
    vol = geometry.volume(model, g)
    curv = geometry.curvature(model, g, plane_samples=0)
    ric_eigs = np.linalg.eigvalsh(curv.ric)
    rm_n2 = curv.rm_norm * vol ** (2.0 / n)
    return {
        "vol": vol,
        "rm_norm": curv.rm_norm,
        "scalar_R": curv.scalar,
        "rm_n2_norm": rm_n2,
        "J": curv.rm_norm ** (n / 2.0) * vol,
        "theta": rm_n2 * cs0 * cs0,
        "chi": c_n * _safe_exp(8.0 * t * delta0 / n) * rm_n2,
        "ric_min": float(ric_eigs[0]),
        "ric_max": float(ric_eigs[-1]),
        "ric_eigs": ric_eigs,
    }


def initial_delta0(model: ModelGeometry, g0: MetricState, cs0: float) -> float:
    """cs0^-2 plus the n/2-norm of the negative part of scalar curvature at t=0."""
    n = model.dim
    vol = geometry.volume(model, g0)
    curv = geometry.curvature(model, g0, plane_samples=0)
    neg = max(0.0, -curv.scalar)
    return cs0 ** -2 + neg * vol ** (2.0 / n)


# ---------------------------------------------------------------------------
# state packing

def _tri_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(n)


def _pack(model: ModelGeometry, g: MetricState) -> np.ndarray:
    if model.kind == LIE_GROUP_QUOTIENT:
        iu = _tri_indices(model.dim)
        return np.asarray(g.matrix)[iu].copy()
    return np.asarray(g.scales, dtype=float)


def _unpack(model: ModelGeometry, y: np.ndarray, t: float) -> MetricState:
    if model.kind == LIE_GROUP_QUOTIENT:
        n = model.dim
        mat = np.zeros((n, n))
        iu = _tri_indices(n)
        mat[iu] = y
        mat = mat + np.triu(mat, 1).T
        return MetricState(time=t, matrix=mat)
    return MetricState(time=t, scales=tuple(y))


# Dormand-Prince 5(4) tableau
_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_DP_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
          187 / 2100, 1 / 40)
_DP_ERR = tuple(b5 - b4 for b5, b4 in zip(_DP_B5, _DP_B4))


def _dp54_step(f, t, y, h):
    k = [f(t, y)]
    for i in range(1, 7):
        yi = y + h * sum(a * ki for a, ki in zip(_DP_A[i], k))
        k.append(f(t + _DP_C[i] * h, yi))
    y5 = y + h * sum(b * ki for b, ki in zip(_DP_B5, k) if b != 0.0)
    err = h * sum(e * ki for e, ki in zip(_DP_ERR, k) if e != 0.0)
    return y5, err, 7


def integrate(model: ModelGeometry, g0: MetricState, cfg: FlowConfig) -> Trajectory:
    """Integrate the flow from g0 and record on a uniform time grid.

    Termination is always recorded, never raised: ``horizon-reached``,
    ``curvature-blowup`` (|Rm| crossed max_rm at an accepted step) or
    ``step-underflow``.
    """
    n = model.dim
    vol0 = geometry.volume(model, g0)          # validates SPD / positive scales
    rm0 = geometry.rm_norm(model, g0)
    t_end = cfg.t_end if cfg.t_end is not None else horizon_T0(
        cfg.gamma, vol0, cfg.cs0, n)
    max_rm = cfg.max_rm if cfg.max_rm is not None else 1e6 * max(1.0, rm0)
    if max_rm <= rm0:
        raise ValueError(f"max_rm ({max_rm}) must exceed the initial |Rm| ({rm0})")
    dt_rec = cfg.record_every if cfg.record_every is not None else t_end / _DEFAULT_RECORDS
    n_rec = max(1, int(round(t_end / dt_rec)))
    record_times = np.linspace(0.0, t_end, n_rec + 1)
    delta0 = initial_delta0(model, g0, cfg.cs0)

    def f(t, y):
        state = _unpack(model, y, t)
        rhs = ricci_rhs(model, state)
        if model.kind == LIE_GROUP_QUOTIENT:
            return rhs[_tri_indices(n)]
        return np.array([rhs[sl.start, sl.start] for sl in model.factor_slices()])

    y = _pack(model, g0)
    t = 0.0
    min_step = 1e-14 * t_end
    h = min(record_times[1], t_end / 1000.0)
    stats = {"accepted": 0, "rejected_err": 0, "rejected_spd": 0, "rhs_evals": 0}
    termination = TERM_HORIZON

    recorded_t = [0.0]
    recorded_y = [y.copy()]
    done = False
    for target in record_times[1:]:
        while t < target * (1.0 - 1e-14) and not done:
            h_eff = min(h, target - t)
            if h_eff < min_step:
                termination = TERM_UNDERFLOW
                done = True
                break
            try:
                y_new, err, nfev = _dp54_step(f, t, y, h_eff)
            except (GeometryError, np.linalg.LinAlgError):
                # a stage left the SPD cone: reject exactly like an SPD failure
                stats["rejected_spd"] += 1
                h = 0.5 * h_eff
                continue
            stats["rhs_evals"] += nfev
            scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
            enorm = float(np.sqrt(np.mean((err / scale) ** 2)))
            if enorm > 1.0:
                stats["rejected_err"] += 1
                h = h_eff * max(_MIN_FAC, min(1.0, _SAFETY * enorm ** -0.2))
                continue
            try:
                # rm_norm validates SPD internally; one decomposition does both
                rmn = geometry.rm_norm(model, _unpack(model, y_new, t + h_eff))
            except (GeometryError, np.linalg.LinAlgError):
                stats["rejected_spd"] += 1
                h = 0.5 * h_eff
                continue
            t += h_eff
            y = y_new
            stats["accepted"] += 1
            grow = _MAX_FAC if enorm == 0.0 else min(_MAX_FAC, _SAFETY * enorm ** -0.2)
            h = h_eff * max(_MIN_FAC, grow)
            if rmn > max_rm:
                termination = TERM_BLOWUP
                done = True
        if done:
            break
        t = float(target)
        recorded_t.append(t)
        recorded_y.append(y.copy())

    times = np.array(recorded_t)
    meta = {
        "model": model.describe(),
        "gamma": cfg.gamma,
        "cs0": cfg.cs0,
        "c_n": cfg.c_n,
        "delta0": delta0,
        "rel_tol": cfg.rel_tol,
        "abs_tol": cfg.abs_tol,
        "max_rm": max_rm,
        "record_every": float(record_times[1] - record_times[0]),
        "t_end_requested": t_end,
        "t_reached": t,
        "termination": termination,
        "vol0": vol0,
        "rm_n2_0": rm0 * vol0 ** (2.0 / n),
        "T0": horizon_T0(cfg.gamma, vol0, cfg.cs0, n),
        "integrator": {"method": "dormand-prince-5(4)", **stats},
    }
    return _assemble(model, times, recorded_y, meta)


def _assemble(model: ModelGeometry, times: np.ndarray, packed: list[np.ndarray],
              meta: dict) -> Trajectory:
    n = model.dim
    cs0, c_n, delta0 = meta["cs0"], meta["c_n"], meta["delta0"]
    mats = np.empty((len(times), n, n))
    scales = None
    if model.kind != LIE_GROUP_QUOTIENT:
        scales = np.empty((len(times), len(model.factors)))
    derived = {k: np.empty(len(times)) for k in DERIVED_KEYS}
    derived["ric_eigs"] = np.empty((len(times), n))
    for i, (t, y) in enumerate(zip(times, packed)):
        state = _unpack(model, y, float(t))
        mats[i] = geometry.metric_matrix(model, state)
        if scales is not None:
            scales[i] = state.scales
        row = derived_row(model, state, float(t), cs0, c_n, delta0)
        for k in DERIVED_KEYS:
            derived[k][i] = row[k]
        derived["ric_eigs"][i] = row["ric_eigs"]
    return Trajectory(model=model, times=times, mats=mats, scales=scales,
                      derived=derived, meta=meta)


def parabolic_rescale(traj: Trajectory, lam: float) -> Trajectory:
    """The flow symmetry g~(t) = lam^2 g(t / lam^2), rederived consistently."""
    if lam <= 0:
        raise ValueError(f"rescaling factor must be positive, got {lam}")
    lam2 = lam * lam
    model = traj.model
    times = lam2 * traj.times
    packed = []
    for i in range(len(traj)):
        state = traj.state(i)
        scaled = geometry.scale_metric(state, lam2)
        packed.append(_pack(model, scaled))
    meta = dict(traj.meta)
    g0 = geometry.scale_metric(traj.state(0), lam2)
    meta["delta0"] = initial_delta0(model, g0, meta["cs0"])
    vol0 = geometry.volume(model, g0)
    meta["vol0"] = vol0
    meta["rm_n2_0"] = geometry.rm_norm(model, g0) * vol0 ** (2.0 / model.dim)
    meta["T0"] = horizon_T0(meta["gamma"], vol0, meta["cs0"], model.dim)
    meta["t_reached"] = lam2 * meta.get("t_reached", float(traj.times[-1]))
    meta["t_end_requested"] = lam2 * meta.get("t_end_requested", float(traj.times[-1]))
    meta["record_every"] = lam2 * meta.get("record_every", 0.0)
    meta["max_rm"] = meta.get("max_rm", math.inf) / lam2
    meta["rescaled_by"] = lam * meta.get("rescaled_by", 1.0)
    return _assemble(model, times, packed, meta)


# ---------------------------------------------------------------------------
# CSV persistence (mandated schema)


def csv_columns(n: int) -> list[str]:
    cols = ["t"]
    cols += [f"g_{i}_{j}" for i in range(n) for j in range(i, n)]
    cols += list(DERIVED_KEYS)
    return cols


def _fmt(x: float) -> str:
    return repr(float(x))


def write_trajectory_csv(traj: Trajectory, path: str | Path) -> None:
    n = traj.model.dim
    iu = _tri_indices(n)
    buf = io.StringIO()
    buf.write(",".join(csv_columns(n)) + "\n")
    for i in range(len(traj)):
        vals = [traj.times[i], *traj.mats[i][iu],
                *(traj.derived[k][i] for k in DERIVED_KEYS)]
        buf.write(",".join(_fmt(v) for v in vals) + "\n")
    Path(path).write_text(buf.getvalue())


def read_trajectory_csv(model: ModelGeometry, path: str | Path,
                        cs0: float = 1.0, c_n: float = 1.0,
                        gamma: float = 1.0) -> Trajectory:
    """Load a trajectory; schema violations raise TrajectorySchemaError."""
    n = model.dim
    text = Path(path).read_text().splitlines()
    if not text:
        raise TrajectorySchemaError("empty trajectory file")
    header = text[0].split(",")
    expected = csv_columns(n)
    for i, col in enumerate(expected):
        if i >= len(header) or header[i] != col:
            got = header[i] if i < len(header) else "<missing>"
            raise TrajectorySchemaError(
                f"column {i} should be {col!r}, got {got!r}")
    if len(header) > len(expected):
        raise TrajectorySchemaError(f"unexpected extra column {header[len(expected)]!r}")
    rows = []
    for ln, line in enumerate(text[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != len(expected):
            raise TrajectorySchemaError(f"line {ln}: expected {len(expected)} fields, "
                                        f"got {len(parts)}")
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise TrajectorySchemaError(f"line {ln}: {exc}") from None
    if not rows:
        raise TrajectorySchemaError("trajectory has no states")
    data = np.array(rows)
    times = data[:, 0]
    if times[0] != 0.0:
        raise TrajectorySchemaError("column 't' must start at 0")
    if np.any(np.diff(times) <= 0):
        raise TrajectorySchemaError("column 't' must be strictly increasing")
    ntri = n * (n + 1) // 2
    iu = _tri_indices(n)
    mats = np.empty((len(rows), n, n))
    for i in range(len(rows)):
        m = np.zeros((n, n))
        m[iu] = data[i, 1:1 + ntri]
        mats[i] = m + np.triu(m, 1).T
    derived = {k: data[:, 1 + ntri + j].copy() for j, k in enumerate(DERIVED_KEYS)}
    scales = None
    if model.kind != LIE_GROUP_QUOTIENT:
        starts = [sl.start for sl in model.factor_slices()]
        scales = mats[:, starts, starts]
    eigs = np.empty((len(rows), n))
    for i in range(len(rows)):
        state = MetricState(time=float(times[i]), matrix=mats[i]) if scales is None \
            else MetricState(time=float(times[i]), scales=tuple(scales[i]))
        curv = geometry.curvature(model, state, plane_samples=0)
        eigs[i] = np.linalg.eigvalsh(curv.ric)
    derived["ric_eigs"] = eigs
    g0 = MetricState(time=0.0, matrix=mats[0]) if scales is None else \
        MetricState(time=0.0, scales=tuple(scales[0]))
    vol0 = geometry.volume(model, g0)
    meta = {
        "model": model.describe(),
        "gamma": gamma,
        "cs0": cs0,
        "c_n": c_n,
        "delta0": initial_delta0(model, g0, cs0),
        "vol0": vol0,
        "rm_n2_0": geometry.rm_norm(model, g0) * vol0 ** (2.0 / n),
        "T0": horizon_T0(gamma, vol0, cs0, n),
        "t_reached": float(times[-1]),
        "termination": "loaded-from-csv",
        "source": str(path),
    }
    return Trajectory(model=model, times=times, mats=mats, scales=scales,
                      derived=derived, meta=meta)


def validate_trajectory(traj: Trajectory, tol: float = 1e-10) -> float:
    """Largest relative mismatch between stored and recomputed derived values."""
    worst = 0.0
    for i in range(len(traj)):
        row = derived_row(traj.model, traj.state(i), float(traj.times[i]),
                          traj.meta["cs0"], traj.meta["c_n"], traj.meta["delta0"])
        for k in DERIVED_KEYS:
            ref = row[k]
            got = float(traj.derived[k][i])
            diff = abs(got - ref) / max(1.0, abs(ref))
            worst = max(worst, diff)
    if worst > tol:
        raise ValueError(f"derived quantities deviate from recomputation by {worst:.3e}")
    return worst
