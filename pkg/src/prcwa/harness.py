"""Configuration layer and convergence harness: load problem descriptions,
run (h, M) sweeps against a designated reference solution, fit log-log
slopes, and emit CSV records."""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .analysis import rel_l2_error
from .problem import (GratingDomain, GratingProblem, IncidentWave, LamellarLayer,
                      LamellarStack, Stack, TriangleOnStrip, build_slice_mesh,
                      uniform_profile)
from .reference import planar_reference_solution
from .stitcher import dense_solve, solve_grating


class ConfigError(ValueError):
    pass


class HarnessError(RuntimeError):
    pass


CSV_HEADER = "h_nm,M,rel_l2_error,wall_time_s"
PLATEAU_REL_TOL = 0.2


@dataclass(frozen=True)
class ConvergenceRecord:
    h: float
    M: int
    rel_l2_error: float
    wall_time: float


@dataclass(frozen=True)
class SweepConfig:
    problem: GratingProblem
    m_list: tuple[int, ...]
    h_list: tuple[float, ...]          # sorted coarse-to-fine (descending)
    reference_policy: str              # self | dense | planar
    m_ref: int | None
    h_ref: float | None
    csv_path: str | None

    def __post_init__(self):
        if self.reference_policy not in ("self", "dense", "planar"):
            raise ConfigError(f"unknown reference policy {self.reference_policy!r}")
        if self.reference_policy == "self":
            if self.m_ref is None or self.h_ref is None:
                raise ConfigError("self-converged reference needs M_ref and h_ref_nm")
            if self.m_ref < max(self.m_list):
                raise ConfigError("M_ref must be >= every swept M")
            if self.h_ref > min(self.h_list):
                raise ConfigError("h_ref_nm must be <= every swept h")


def _complex(value, path: str) -> complex:
    if (not isinstance(value, (list, tuple)) or len(value) != 2
            or not all(isinstance(v, (int, float)) for v in value)):
        raise ConfigError(f"{path}: complex values are two-element [re, im] arrays")
    return complex(value[0], value[1])


def _require(d: dict, path: str, required: tuple[str, ...],
             optional: tuple[str, ...] = ()) -> None:
    if not isinstance(d, dict):
        raise ConfigError(f"{path}: expected an object")
    for key in d:
        if key not in required and key not in optional:
            raise ConfigError(f"{path}.{key}: unknown key")
    for key in required:
        if key not in d:
            raise ConfigError(f"{path}.{key}: missing required key")


def _build_profile(p: dict, domain: GratingDomain):
    kind = p.get("type")
    H = domain.half_height
    common = ("type", "period_nm", "domain_height_nm", "eps_plus", "eps_minus")
    if kind == "homogeneous":
        _require(p, "problem", common[:3] + ("eps",), common[3:])
        return uniform_profile(domain.period, _complex(p["eps"], "problem.eps"), H)
    if kind == "stack":
        _require(p, "problem", common[:3] + ("layers",), common[3:])
        layers = []
        total = 0.0
        for i, entry in enumerate(p["layers"]):
            _require(entry, f"problem.layers[{i}]", ("eps", "thickness_nm"))
            layers.append((_complex(entry["eps"], f"problem.layers[{i}].eps"),
                           float(entry["thickness_nm"])))
            total += float(entry["thickness_nm"])
        if abs(total - 2 * H) > 1e-9 * H:
            raise ConfigError("problem.layers: stack must span the whole cell height")
        return Stack(period=domain.period, base=-H, layers=tuple(layers))
    if kind == "lamellar":
        _require(p, "problem", common[:3] + ("layers",),
                 common[3:] + ("base_nm", "fill"))
        layers = []
        for i, entry in enumerate(p["layers"]):
            _require(entry, f"problem.layers[{i}]", ("thickness_nm", "intervals"))
            ivals = tuple(
                (float(a), float(b), _complex(e, f"problem.layers[{i}].intervals"))
                for a, b, e in entry["intervals"])
            layers.append(LamellarLayer(thickness=float(entry["thickness_nm"]),
                                        intervals=ivals))
        total = sum(l.thickness for l in layers)
        base = float(p.get("base_nm", -total / 2.0))
        fill = _complex(p["fill"], "problem.fill") if "fill" in p else domain.eps_plus
        return LamellarStack(period=domain.period, base=base, layers=tuple(layers),
                             fill=fill)
    if kind == "triangle_on_strip":
        _require(p, "problem",
                 common[:3] + ("base_width_nm", "height_nm", "strip_thickness_nm",
                               "eps_inclusion", "eps_ambient"),
                 common[3:] + ("apex_offset_nm",))
        return TriangleOnStrip(
            period=domain.period,
            base_width=float(p["base_width_nm"]),
            height=float(p["height_nm"]),
            strip_thickness=float(p["strip_thickness_nm"]),
            eps_inclusion=_complex(p["eps_inclusion"], "problem.eps_inclusion"),
            eps_ambient=_complex(p["eps_ambient"], "problem.eps_ambient"),
            apex_offset=float(p.get("apex_offset_nm", 0.0)))
    raise ConfigError(f"problem.type: unknown profile type {kind!r}")


def parse_config(doc: dict) -> SweepConfig:
    """Validate a config document (strict schema) and build the problem."""
    _require(doc, "config", ("problem", "incident", "sweep"),
             ("reference", "output"))
    p = doc["problem"]
    if not isinstance(p, dict) or "type" not in p:
        raise ConfigError("problem.type: missing required key")
    if "period_nm" not in p or "domain_height_nm" not in p:
        raise ConfigError("problem: period_nm and domain_height_nm are required")
    domain = GratingDomain(
        period=float(p["period_nm"]),
        half_height=float(p["domain_height_nm"]) / 2.0,
        eps_plus=_complex(p["eps_plus"], "problem.eps_plus") if "eps_plus" in p else 1.0,
        eps_minus=_complex(p["eps_minus"], "problem.eps_minus") if "eps_minus" in p else 1.0)
    profile = _build_profile(p, domain)

    inc = doc["incident"]
    _require(inc, "incident", ("wavelength_nm",), ("theta_deg",))
    incident = IncidentWave(wavelength=float(inc["wavelength_nm"]),
                            theta=math.radians(float(inc.get("theta_deg", 0.0))))
    problem = GratingProblem(domain=domain, incident=incident, profile=profile)

    sw = doc["sweep"]
    _require(sw, "sweep", ("M", "h_nm"))
    m_list = tuple(sorted(int(m) for m in sw["M"]))
    h_list = tuple(sorted((float(h) for h in sw["h_nm"]), reverse=True))
    if not m_list or not h_list:
        raise ConfigError("sweep.M and sweep.h_nm must be non-empty")

    ref = doc.get("reference", {"policy": "dense"})
    _require(ref, "reference", ("policy",), ("M_ref", "h_ref_nm"))
    out = doc.get("output", {})
    _require(out, "output", (), ("csv",))
    return SweepConfig(
        problem=problem, m_list=m_list, h_list=h_list,
        reference_policy=str(ref["policy"]),
        m_ref=int(ref["M_ref"]) if "M_ref" in ref else None,
        h_ref=float(ref["h_ref_nm"]) if "h_ref_nm" in ref else None,
        csv_path=out.get("csv"))


def load_config(path) -> SweepConfig:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return parse_config(doc)


def serialize_config(config: SweepConfig) -> dict:
    """Canonical config document; parse_config(serialize_config(c)) == c."""
    problem = config.problem
    domain = problem.domain
    profile = problem.profile
    p: dict = {"period_nm": domain.period, "domain_height_nm": 2 * domain.half_height,
               "eps_plus": [complex(domain.eps_plus).real, complex(domain.eps_plus).imag],
               "eps_minus": [complex(domain.eps_minus).real, complex(domain.eps_minus).imag]}
    if isinstance(profile, TriangleOnStrip):
        p.update(type="triangle_on_strip", base_width_nm=profile.base_width,
                 height_nm=profile.height, strip_thickness_nm=profile.strip_thickness,
                 apex_offset_nm=profile.apex_offset,
                 eps_inclusion=[profile.eps_inclusion.real, profile.eps_inclusion.imag],
                 eps_ambient=[profile.eps_ambient.real, profile.eps_ambient.imag])
    elif isinstance(profile, LamellarStack):
        p.update(type="lamellar", base_nm=profile.base,
                 fill=[complex(profile.fill).real, complex(profile.fill).imag],
                 layers=[{"thickness_nm": l.thickness,
                          "intervals": [[a, b, [complex(e).real, complex(e).imag]]
                                        for a, b, e in l.intervals]}
                         for l in profile.layers])
    elif isinstance(profile, Stack):
        if len(profile.layers) == 1 and profile.fill == profile.layers[0][0]:
            p.update(type="homogeneous",
                     eps=[complex(profile.layers[0][0]).real,
                          complex(profile.layers[0][0]).imag])
        else:
            p.update(type="stack",
                     layers=[{"eps": [complex(e).real, complex(e).imag],
                              "thickness_nm": t} for e, t in profile.layers])
    else:
        raise ConfigError("sampled profiles have no config representation")
    doc = {"problem": p,
           "incident": {"wavelength_nm": problem.incident.wavelength,
                        "theta_deg": math.degrees(problem.incident.theta)},
           "sweep": {"M": list(config.m_list), "h_nm": list(config.h_list)},
           "reference": {"policy": config.reference_policy}}
    if config.m_ref is not None:
        doc["reference"]["M_ref"] = config.m_ref
    if config.h_ref is not None:
        doc["reference"]["h_ref_nm"] = config.h_ref
    if config.csv_path is not None:
        doc["output"] = {"csv": config.csv_path}
    return doc


# ---------------------------------------------------------------------------
# Sweep execution
# ---------------------------------------------------------------------------

def build_reference(config: SweepConfig):
    """Reference solution for self/planar policies (dense is per-point)."""
    problem = config.problem
    if config.reference_policy == "self":
        mesh = build_slice_mesh(problem.domain, target_h=config.h_ref)
        return solve_grating(problem, config.m_ref, mesh)
    if config.reference_policy == "planar":
        return planar_reference_solution(problem, M=config.m_ref or 0)
    return None


def run_sweep(config: SweepConfig, threads: int = 1,
              log=None) -> list[ConvergenceRecord]:
    """One record per (h, M) pair, in configured order.

    The reference is solved once up front (self/planar policies); the dense
    oracle policy re-solves the oracle at each point's own (h, M). Point
    failures are logged and recorded as NaN; the sweep continues.
    """
    log = log or (lambda msg: None)
    problem = config.problem
    reference = build_reference(config)

    def run_point(point):
        h, m = point
        mesh = build_slice_mesh(problem.domain, target_h=h)
        start = time.perf_counter()
        sol = solve_grating(problem, m, mesh)
        wall = time.perf_counter() - start
        ref = reference if reference is not None else dense_solve(problem, m, mesh)
        err = rel_l2_error(sol, ref)
        return ConvergenceRecord(h=h, M=m, rel_l2_error=err, wall_time=wall)

    points = [(h, m) for h in config.h_list for m in config.m_list]
    records: list[ConvergenceRecord] = []
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(run_point, pt) for pt in points]
            for pt, fut in zip(points, futures):
                try:
                    records.append(fut.result())
                except Exception as exc:
                    log(f"sweep point h={pt[0]} M={pt[1]} failed: {exc}")
                    records.append(ConvergenceRecord(pt[0], pt[1], math.nan, math.nan))
    else:
        for pt in points:
            try:
                records.append(run_point(pt))
            except Exception as exc:
                log(f"sweep point h={pt[0]} M={pt[1]} failed: {exc}")
                records.append(ConvergenceRecord(pt[0], pt[1], math.nan, math.nan))
    return records


def write_records_csv(records, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(CSV_HEADER + "\n")
        for rec in records:
            fh.write(f"{rec.h:.17g},{rec.M},{rec.rel_l2_error:.17g},"
                     f"{rec.wall_time:.17g}\n")


def read_records_csv(path) -> list[ConvergenceRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise HarnessError(f"unexpected CSV header {header!r}")
        for line in fh:
            h, m, err, wall = line.strip().split(",")
            records.append(ConvergenceRecord(float(h), int(m), float(err), float(wall)))
    return records


# ---------------------------------------------------------------------------
# Slope fitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FitResult:
    slope: float
    r_squared: float
    points_used: int


def fit_slope(records, axis: str, plateau_filter: bool = True) -> FitResult:
    """Least-squares slope of log(error) against log(h) or log(M).

    Points are ordered coarse-to-fine first. The plateau filter drops a
    trailing run of at least two points whose errors agree with the final
    one to better than 20% relative -- the signature of saturation against
    the reference -- and leaves clean power-law data untouched.
    """
    if axis not in ("h", "M"):
        raise HarnessError(f"axis must be 'h' or 'M', got {axis!r}")
    usable = [r for r in records
              if math.isfinite(r.rel_l2_error) and r.rel_l2_error > 0]
    if axis == "h":
        usable.sort(key=lambda r: -r.h)
        xs = np.array([r.h for r in usable])
    else:
        usable.sort(key=lambda r: r.M)
        xs = np.array([r.M for r in usable], dtype=float)
    errs = np.array([r.rel_l2_error for r in usable])

    if plateau_filter and errs.size >= 2:
        final = errs[-1]
        run = 0
        for e in errs[::-1]:
            if abs(e - final) < PLATEAU_REL_TOL * abs(final):
                run += 1
            else:
                break
        if run >= 2:
            xs, errs = xs[:-run], errs[:-run]

    if errs.size < 3:
        raise HarnessError(f"need at least 3 usable points, have {errs.size}")
    lx, le = np.log(xs), np.log(errs)
    slope, intercept = np.polyfit(lx, le, 1)
    fitted = slope * lx + intercept
    ss_res = float(np.sum((le - fitted) ** 2))
    ss_tot = float(np.sum((le - np.mean(le)) ** 2))
    r_sq = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return FitResult(slope=float(slope), r_squared=r_sq, points_used=int(errs.size))
