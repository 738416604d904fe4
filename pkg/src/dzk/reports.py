"""Result containers for estimate checks: ratio tables and log-log slope fits."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CASE_IDS",
    "EstimateCase",
    "RatioReport",
    "SlopeFit",
    "fit_slope",
    "safe_ratio",
]

CASE_IDS = (
    "unitarity",
    "decay",
    "strichartz",
    "smoothing-hom",
    "smoothing-inhom-L2",
    "smoothing-inhom-Linf",
    "maximal",
    "wave-maximal-cos",
    "wave-maximal-sin2",
    "wave-maximal-sin1",
    "kernel-envelope",
    "leibniz-commutator",
    "bk-bound",
    "counterexample",
)

# below this the right-hand side counts as zero
ZERO = 1e-300


@dataclass(frozen=True)
class EstimateCase:
    id: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.id not in CASE_IDS:
            raise ValueError(f"unknown case id {self.id!r}")
        if self.id == "strichartz":
            q, p = self.params.get("q"), self.params.get("p")
            if p is not None and q is not None:
                check_admissible(q, p)
        if self.id == "maximal" and "s" in self.params and not self.params["s"] > 1.5:
            raise ValueError("maximal estimate needs s > 3/2")

    def param_json(self) -> str:
        return json.dumps(self.params, sort_keys=True)


def check_admissible(q: float, p: float, tol: float = 1e-12) -> None:
    """Reject pairs off the line ``2/q = 1 - 2/p`` or with p outside [2, inf)."""
    q, p = float(q), float(p)
    if not (2 <= p < np.inf):
        raise ValueError(f"inadmissible pair (q={q}, p={p}): p must lie in [2, inf)")
    if abs(2.0 / q - (1.0 - 2.0 / p)) > tol:
        raise ValueError(f"inadmissible pair (q={q}, p={p}): 2/q != 1 - 2/p")


def safe_ratio(lhs: float, rhs: float) -> tuple[float, bool]:
    """``(lhs / rhs, degenerate)``; 0/0 is flagged degenerate with ratio 0."""
    if abs(rhs) <= ZERO:
        if abs(lhs) <= ZERO:
            return 0.0, True
        return float("inf"), False
    return float(lhs / rhs), False


@dataclass
class RatioReport:
    case: str
    params: dict
    family: str
    input_ids: list = field(default_factory=list)
    lhs: list = field(default_factory=list)
    rhs: list = field(default_factory=list)
    ratios: list = field(default_factory=list)
    degenerate: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    def add(self, input_id, lhs: float, rhs: float) -> float:
        r, deg = safe_ratio(lhs, rhs)
        self.input_ids.append(input_id)
        self.lhs.append(float(lhs))
        self.rhs.append(float(rhs))
        self.ratios.append(r)
        self.degenerate.append(deg)
        return r

    def _live(self) -> np.ndarray:
        return np.array([r for r, d in zip(self.ratios, self.degenerate) if not d], dtype=float)

    @property
    def all_degenerate(self) -> bool:
        return bool(self.degenerate) and all(self.degenerate)

    @property
    def max_ratio(self) -> float:
        live = self._live()
        return float(live.max()) if live.size else float("nan")

    @property
    def median_ratio(self) -> float:
        live = self._live()
        return float(np.median(live)) if live.size else float("nan")

    @property
    def spread(self) -> float:
        """max / median over the non-degenerate inputs."""
        return self.max_ratio / self.median_ratio

    def rows(self) -> list:
        pj = json.dumps(self.params, sort_keys=True)
        out = []
        for i, l, r, q, d in zip(self.input_ids, self.lhs, self.rhs, self.ratios, self.degenerate):
            out.append((self.case, str(i), pj, repr(l), repr(r), "degenerate" if d else repr(q)))
        return out


@dataclass
class SlopeFit:
    label: str
    abscissae: np.ndarray
    ordinates: np.ndarray
    slope: float
    intercept: float
    residual: float
    params: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    def rows(self) -> list:
        return [(repr(float(a)), repr(float(o))) for a, o in zip(self.abscissae, self.ordinates)]


def fit_slope(abscissae, ordinates, label: str = "", params: dict | None = None) -> SlopeFit:
    """Least-squares line through at least three points; residual is the RMS misfit."""
    a = np.asarray(abscissae, dtype=float)
    o = np.asarray(ordinates, dtype=float)
    if a.size < 3 or a.size != o.size:
        raise ValueError("a slope fit needs at least three (abscissa, ordinate) pairs")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(o))):
        raise ValueError("non-finite points in slope fit")
    slope, intercept = np.polyfit(a, o, 1)
    resid = float(np.sqrt(np.mean((o - (slope * a + intercept)) ** 2)))
    return SlopeFit(label, a, o, float(slope), float(intercept), resid, dict(params or {}))
