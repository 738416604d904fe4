"""
Experiment configuration, orchestration and report files.

Configuration is line-oriented UTF-8 text, one ``section.key = value`` per
line; ``#`` starts a comment. Every key has a default (see ``DEFAULTS``), so
an empty text is a valid configuration.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import os
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .families import KINDS, InputFamily
from .field import Grid3, ScalarField, make_grid, write_field
from .reports import CASE_IDS, EstimateCase, RatioReport, SlopeFit, check_admissible

__all__ = [
    "DEFAULTS",
    "ConfigError",
    "ExperimentConfig",
    "ReportRecord",
    "parse_config",
    "run",
    "run_case",
    "run_solve",
    "emit_reports",
]

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


def _float(text: str) -> float:
    t = text.strip().lower()
    if t in ("inf", "infinity"):
        return float("inf")
    return float(Fraction(t)) if "/" in t else float(t)


def _floats(text: str) -> tuple:
    return tuple(_float(v) for v in text.split(",") if v.strip())


def _ints(text: str) -> tuple:
    return tuple(int(v) for v in text.split(",") if v.strip())


def _words(text: str) -> tuple:
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(text)


# key: (parser, default text)
DEFAULTS = {
    "grid.nx": (int, "64"),
    "grid.ny": (int, "64"),
    "grid.nz": (int, "64"),
    "grid.lx": (_float, "24"),
    "grid.ly": (_float, "24"),
    "grid.lz": (_float, "24"),
    "time.T": (_float, "1.0"),
    "time.nt": (int, "17"),
    "estimate.cases": (_words, ",".join(CASE_IDS)),
    "estimate.p": (_float, "4"),
    "estimate.q": (str, "auto"),
    "estimate.s": (_float, "2"),
    "estimate.t": (_float, "1.0"),
    "estimate.axis": (str, "x"),
    "estimate.decay_times": (_floats, "0.05,0.0707,0.1,0.1414,0.2,0.2828,0.4,0.5657,0.8"),
    "estimate.decay_n": (int, "1024"),
    "estimate.decay_box": (_float, "64"),
    "estimate.decay_width": (_float, "0.15"),
    "estimate.decay_threshold": (_float, "0.01"),
    "estimate.rescale": (_floats, "1,2,4"),
    "estimate.kernel_level": (int, "2"),
    "estimate.kernel_T": (_float, "1.0"),
    "estimate.bk_levels": (_ints, "1,2,3,4,5"),
    "estimate.bk_n": (int, "176"),
    "estimate.counterexample_levels": (_ints, "2,3,4,5"),
    "estimate.counterexample_n": (int, "128"),
    "estimate.delta": (_float, "0.1"),
    "estimate.rho": (_float, "0.5"),
    "estimate.rho1": (_float, "0.25"),
    "estimate.rho2": (_float, "0.25"),
    "estimate.p1": (_float, "4"),
    "estimate.p2": (_float, "4"),
    "estimate.q1": (_float, "4"),
    "estimate.q2": (_float, "4"),
    "family.kind": (str, "random-bandlimited"),
    "family.count": (int, "10"),
    "family.seed": (str, "run"),
    "family.scales": (_floats, "1"),
    "family.real": (_bool, "false"),
    "solver.T": (_float, "0.1"),
    "solver.nt": (int, "17"),
    "solver.tol": (_float, "1e-8"),
    "solver.max_iters": (int, "30"),
    "solver.e_amplitude": (_float, "0.5"),
    "solver.e_width": (_float, "1.0"),
    "solver.e_kick": (_float, "0.3"),
    "solver.n0_amplitude": (_float, "0.1"),
    "solver.n1_amplitude": (_float, "0.1"),
    "output.dir": (str, ""),
    "run.seed": (int, "0"),
    "run.epsilon": (_float, "0.05"),
}

ALIASES = {"estimate.case": "estimate.cases"}


@dataclass
class ExperimentConfig:
    values: dict
    explicit: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    @property
    def seed(self) -> int:
        return self.values["run.seed"]

    @property
    def epsilon(self) -> float:
        return self.values["run.epsilon"]

    @property
    def out(self) -> Path:
        d = self.values["output.dir"] or os.environ.get("DZK_OUT", "") or "dzk-out"
        return Path(d)

    def grid(self) -> Grid3:
        v = self.values
        return make_grid(v["grid.nx"], v["grid.ny"], v["grid.nz"], v["grid.lx"], v["grid.ly"], v["grid.lz"])

    @property
    def cases(self) -> list:
        return [EstimateCase(c, self.case_params(c)) for c in self.values["estimate.cases"]]

    @property
    def strichartz_pair(self) -> tuple:
        p = self.values["estimate.p"]
        q = self.values["estimate.q"]
        q = (float("inf") if p == 2 else 2.0 / (1.0 - 2.0 / p)) if q == "auto" else _float(q)
        check_admissible(q, p)
        return q, p

    def family(self, **override) -> InputFamily:
        v = self.values
        seed = self.seed if v["family.seed"] == "run" else int(v["family.seed"])
        kw = dict(kind=v["family.kind"], count=v["family.count"], seed=seed, scales=v["family.scales"],
                  params={"real": v["family.real"]})
        kw.update(override)
        return InputFamily(**kw)

    def case_params(self, case: str) -> dict:
        v = self.values
        T, nt = v["time.T"], v["time.nt"]
        if case == "unitarity":
            return {"t": v["estimate.t"]}
        if case == "decay":
            return {"p": v["estimate.p"], "width": v["estimate.decay_width"]}
        if case == "strichartz":
            q, p = self.strichartz_pair
            return {"q": q, "p": p, "T": T, "nt": nt}
        if case.startswith("smoothing") or case.startswith("wave-maximal"):
            return {"T": T, "nt": nt, "axis": v["estimate.axis"]}
        if case == "maximal":
            return {"s": v["estimate.s"], "T": T, "nt": nt, "axis": v["estimate.axis"]}
        if case == "kernel-envelope":
            return {"k": v["estimate.kernel_level"], "T": v["estimate.kernel_T"]}
        if case == "leibniz-commutator":
            return {k: v[f"estimate.{k}"] for k in ("rho", "rho1", "rho2", "p1", "p2", "q1", "q2")}
        if case == "bk-bound":
            return {"s": v["estimate.s"], "k_list": list(v["estimate.bk_levels"])}
        if case == "counterexample":
            return {"s": v["estimate.s"], "k_list": list(v["estimate.counterexample_levels"]),
                    "delta": v["estimate.delta"]}
        return {}

    def echo(self) -> str:
        lines = []
        for key, (_, default) in DEFAULTS.items():
            lines.append(f"{key} = {self.explicit.get(key, default)}")
        return "\n".join(lines) + "\n"


def parse_config(text: str) -> ExperimentConfig:
    """Parse ``section.key = value`` lines; absent keys take their defaults.

    Raises :class:`ConfigError` on unknown keys, malformed values or invalid
    case ids, and on grids violating the grid preconditions.
    """
    explicit = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'section.key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = ALIASES.get(key, key)
        if key not in DEFAULTS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        explicit[key] = value
    values = {}
    for key, (parse, default) in DEFAULTS.items():
        text_value = explicit.get(key, default)
        try:
            values[key] = parse(text_value)
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"malformed value for {key}: {text_value!r}") from None
    cfg = ExperimentConfig(values, explicit)
    for c in values["estimate.cases"]:
        if c not in CASE_IDS:
            raise ConfigError(f"invalid case id {c!r}")
    if values["family.kind"] not in KINDS:
        raise ConfigError(f"unknown family kind {values['family.kind']!r}")
    if values["estimate.axis"] not in ("x", "y"):
        raise ConfigError("estimate.axis must be x or y")
    try:
        cfg.grid()
        if "strichartz" in values["estimate.cases"]:
            cfg.strichartz_pair
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


@dataclass
class ReportRecord:
    case_id: str
    status: str
    metrics: dict = field(default_factory=dict)
    paths: list = field(default_factory=list)
    message: str = ""
    report: object = None
    fits: list = field(default_factory=list)


def _finite(x) -> bool:
    return bool(np.isfinite(x))


def _ratio_record(case: str, rep: RatioReport, extra_ok: bool = True, **metrics) -> ReportRecord:
    if rep.all_degenerate:
        return ReportRecord(case, "degenerate", {"max_ratio": None}, report=rep)
    m = {"max_ratio": rep.max_ratio, "median_ratio": rep.median_ratio, **metrics}
    ok = _finite(rep.max_ratio) and extra_ok
    return ReportRecord(case, "pass" if ok else "fail", m, report=rep)


def _slope_record(case: str, fit: SlopeFit, ok: bool, extra_fits=(), **metrics) -> ReportRecord:
    m = {"slope": fit.slope, "residual": fit.residual, **metrics}
    return ReportRecord(case, "pass" if ok else "fail", m, fits=[fit, *extra_fits])


def run_case(case: EstimateCase, cfg: ExperimentConfig) -> ReportRecord:
    """Execute one case and judge it against its target."""
    from . import estimates as est
    from .kernel import kernel_envelope, kernel_tail_fit
    from .sharpness import counterexample_growth

    v = cfg.values
    cid, p = case.id, case.params
    grid = cfg.grid()
    fam = cfg.family()
    if cid == "unitarity":
        rep = est.check_unitarity(fam, grid, p["t"])
        dev = max((abs(r - 1) for r, d in zip(rep.ratios, rep.degenerate) if not d), default=0.0)
        return _ratio_record(cid, rep, dev <= 1e-12, max_deviation=dev)
    if cid == "decay":
        n, box = v["estimate.decay_n"], v["estimate.decay_box"]
        dgrid = make_grid(n, n, 4, box, box, 4.0)
        dfam = InputFamily("gaussian", scales=(v["estimate.decay_width"],), params={"z_periodic": True})
        fit = est.check_decay(p["p"], dfam, dgrid, v["estimate.decay_times"], v["estimate.decay_threshold"])
        target = fit.extras["expected_slope"]
        if target == 0:
            ok = abs(fit.slope) <= 1e-10
        else:
            tol = 0.02 if p["p"] == float("inf") else 0.05
            ok = abs(fit.slope - target) <= tol * abs(target)
        if p["p"] == float("inf"):
            ok = ok and fit.extras["constant"] <= 1.05 / (4 * np.pi)
        return _slope_record(cid, fit, ok, expected=target, constant=fit.extras["constant"],
                             boundary_share=fit.extras["boundary_share"])
    if cid == "strichartz":
        if fam.kind == "rescaled":
            fam = cfg.family(scales=v["estimate.rescale"])
        rep = est.check_strichartz(p["q"], p["p"], fam, grid, p["T"], p["nt"])
        ok = rep.spread < 5
        metrics = {"spread": rep.spread}
        fits = []
        if "slope" in rep.extras:
            ok = ok and abs(rep.extras["slope"]) <= 0.1
            metrics["rescale_slope"] = rep.extras["slope"]
            fits.append(rep.extras.pop("fit"))
        r = _ratio_record(cid, rep, ok, **metrics)
        r.fits = fits
        return r
    if cid.startswith("smoothing-"):
        rep = est.check_smoothing(cid.split("-", 1)[1], fam, grid, p["T"], p["nt"], p["axis"])
        return _ratio_record(cid, rep)
    if cid == "maximal":
        rep = est.check_maximal(p["s"], fam, grid, p["T"], p["nt"], p["axis"])
        return _ratio_record(cid, rep)
    if cid.startswith("wave-maximal-"):
        variant = {"cos": "cos", "sin2": "sin-H2", "sin1": "sin-H1"}[cid[len("wave-maximal-"):]]
        rep = est.check_wave_maximal(variant, fam, grid, p["T"], p["nt"], p["axis"])
        return _ratio_record(cid, rep)
    if cid == "kernel-envelope":
        k, T = p["k"], p["T"]
        fit_rep = kernel_envelope(k, T, np.geomspace(0.25, 100.0, 13), np.linspace(0.0, T, 5))
        check = kernel_envelope(k, T, np.geomspace(0.3, 90.0, 17), np.linspace(T / 8, T, 6))
        c_fit = fit_rep.extras["C_fit"]
        tail = kernel_tail_fit(k)
        envelope_ok = check.max_ratio <= 1.25 * c_fit
        tail_ok = abs(tail.slope + 2.0) <= 0.2
        r = _ratio_record(cid, fit_rep, envelope_ok and tail_ok, C_fit=c_fit,
                          validation_max_ratio=check.max_ratio, tail_slope=tail.slope,
                          H_integral=fit_rep.extras["H_integral"])
        r.fits = [tail]
        return r
    if cid == "leibniz-commutator":
        rep = est.check_leibniz_commutator(p["rho"], p["rho1"], p["rho2"], p["p1"], p["p2"], p["q1"], p["q2"],
                                           fam, grid, axis=v["estimate.axis"])
        return _ratio_record(cid, rep)
    if cid == "bk-bound":
        n = v["estimate.bk_n"]
        side = 2 * np.pi * n / 132
        bgrid = make_grid(n, n, n, side, side, side)
        fit = est.check_bk_bound(p["s"], p["k_list"], fam, bgrid)
        return _slope_record(cid, fit, abs(fit.slope + p["s"]) <= 0.2, expected=-p["s"])
    if cid == "counterexample":
        n = v["estimate.counterexample_n"]
        cgrid = make_grid(n, n, n, np.pi * n / 128, np.pi * n / 128, np.pi * n / 128)
        fit = counterexample_growth(p["s"], p["k_list"], cgrid, p["delta"])
        ratio, r0 = fit.extras["ratio_fit"], fit.extras["ratio_h0_fit"]
        ok = abs(fit.slope - 2.5) <= 0.3 and abs(r0.slope - 1.0) <= 0.3
        if p["s"] > 1.5:
            ok = ok and ratio.slope <= 0.15
        return _slope_record(cid, fit, ok, [ratio, r0], ratio_slope=ratio.slope, ratio_h0_slope=r0.slope)
    raise ConfigError(f"invalid case id {cid!r}")


def run(cfg: ExperimentConfig, write: bool = True) -> list:
    """Run the configured cases in order; errors become ``fail`` records."""
    records = []
    for case in cfg.cases:
        log.info("running %s", case.id)
        try:
            rec = run_case(case, cfg)
        except Exception as exc:  # noqa: BLE001 - reported, not swallowed
            rec = ReportRecord(case.id, "fail", message=f"{type(exc).__name__}: {exc}")
        rec.metrics.setdefault("epsilon", cfg.epsilon)
        rec.metrics.setdefault("params", case.params)
        records.append(rec)
    if write:
        emit_reports(records, cfg.out, cfg)
    return records


def _free_path(path: Path) -> Path:
    """``path`` if unused, else the first unused ``stem.vN.ext`` (N from 2)."""
    if not path.exists():
        return path
    n = 2
    while True:
        cand = path.with_name(f"{path.stem}.v{n}{path.suffix}")
        if not cand.exists():
            return cand
        n += 1


def _write_text(path: Path, text: str) -> Path:
    path = _free_path(path)
    with open(path, "x", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _slug(text: str) -> str:
    return "".join(c if c.isalnum() or c in "-_" else "-" for c in text).strip("-")


def emit_reports(records: list, out_dir, cfg: ExperimentConfig | None = None) -> list:
    """Write per-case CSVs, slope-fit data files, ``summary.csv`` and the config echo.

    Existing files are never overwritten; a versioned suffix is chosen instead.
    Returns the written paths.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create report directory {out}: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise OSError(f"report directory {out} is not writable")
    written = []
    for rec in records:
        if isinstance(rec.report, RatioReport):
            text = _csv_text(("case_id", "input_id", "param_json", "lhs", "rhs", "ratio"), rec.report.rows())
            p = _write_text(out / f"{rec.case_id}.csv", text)
            rec.paths.append(str(p))
            written.append(p)
        for fit in rec.fits:
            text = _csv_text(("abscissa", "ordinate"), fit.rows())
            text += f"# slope={fit.slope!r} residual={fit.residual!r}\n"
            p = _write_text(out / f"{rec.case_id}.{_slug(fit.label)}.slope.csv", text)
            rec.paths.append(str(p))
            written.append(p)
    rows = [(r.case_id, r.status, json.dumps(r.metrics, sort_keys=True),
             ";".join(Path(x).name for x in r.paths), r.message) for r in records]
    written.append(_write_text(out / "summary.csv",
                               _csv_text(("case_id", "status", "metrics_json", "files", "message"), rows)))
    if cfg is not None:
        written.append(_write_text(out / "config.txt", cfg.echo()))
    return written


def solver_data(cfg: ExperimentConfig):
    """Gaussian initial data on the configured grid."""
    from .solver import InitialData

    v = cfg.values
    grid = cfg.grid()
    w = v["solver.e_width"]

    def gauss(x, y, z, shift=0.0):
        return np.exp(-((x - shift) ** 2 + y**2 + z**2) / (2 * w**2))

    E0 = ScalarField.from_function(grid, lambda x, y, z: v["solver.e_amplitude"] * gauss(x, y, z)
                                   * np.exp(1j * v["solver.e_kick"] * x))
    n0 = ScalarField.from_function(grid, lambda x, y, z: v["solver.n0_amplitude"] * gauss(x, y, z))
    n1 = ScalarField.from_function(grid, lambda x, y, z: v["solver.n1_amplitude"] * gauss(x, y, z, 0.5 * w))
    return InitialData(E0, n0, n1)


def run_solve(cfg: ExperimentConfig) -> ReportRecord:
    """Picard solve of the configured data; writes a manifest and dumps of E(T) and n(T)."""
    from .norms import sobolev_norm
    from .solver import SolverConfig, solve_picard

    v = cfg.values
    scfg = SolverConfig(T=v["solver.T"], nt=v["solver.nt"], picard_tol=v["solver.tol"],
                        max_iters=v["solver.max_iters"], epsilon=cfg.epsilon)
    data = solver_data(cfg)
    bundle = solve_picard(data, scfg)
    d = bundle.diagnostics
    nT = bundle.n.frame(-1)
    metrics = {
        "iterations": d.iterations, "converged": d.converged, "residual": d.residual,
        "mass_drift": d.mass_drift, "boundary_mass": d.boundary_mass, "achieved_T": d.achieved_T,
        "halvings": d.halvings, "n_T_H2": sobolev_norm(ScalarField(nT.grid, nT.values.real), 2).value,
    }
    out = cfg.out
    out.mkdir(parents=True, exist_ok=True)
    e_path = _free_path(out / "E_T.dzk")
    write_field(e_path, bundle.E.frame(-1))
    n_path = _free_path(out / "n_T.dzk")
    write_field(n_path, nT)
    lines = ["# solve manifest", "data: gaussian E0 with phase kick, gaussian n0 and n1", ""]
    lines.append("config:")
    lines.extend("  " + ln for ln in cfg.echo().splitlines() if ln.startswith(("grid.", "solver.", "run.")))
    lines.append("")
    lines.append("iterations:")
    for m, diff in enumerate(d.differences, start=1):
        ratio = d.ratios[m - 2] if m >= 2 and m - 2 < len(d.ratios) else None
        lines.append(f"  {m}: difference={diff!r} ratio={ratio!r}")
    lines.append("")
    lines.extend(f"{k}: {val!r}" for k, val in metrics.items())
    m_path = _write_text(out / "manifest.txt", "\n".join(lines) + "\n")
    ok = d.converged and d.residual <= 2 * scfg.picard_tol
    return ReportRecord("solve", "pass" if ok else "fail", metrics, [str(m_path), str(e_path), str(n_path)])
