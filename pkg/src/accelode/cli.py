"""Command-line driver.

    accelode constants [--kappa K ...]
    accelode phase-portrait [--config FILE] [overrides]
    accelode contour --shape circle|levelset [...]
    accelode verify {continuous,discrete,equivalence,geometry,all}

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import geometry, verification
from .dynamics import DampingSchedule, PhasePoint, coefficients
from .integrators import Status, StepperConfig, simulate
from .objectives import Objective, make_objective

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
OUT_ENV = "ACCELODE_OUT"
PROP3_RTOL = 1e-3


class UsageError(Exception):
    pass


def fmt(x) -> str:
    """Shortest round-trip text for floats; lowercase booleans."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path: Path | None, header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


# --- configuration --------------------------------------------------------

@dataclass
class ExperimentConfig:
    objective: str = "piecewise"
    objective_params: dict = field(default_factory=lambda: {"kappa": 5.0})
    kappa: float | None = None
    mode: str = "strongly-convex"
    step_sizes: list[float] = field(default_factory=lambda: [0.1, 0.5, 1.0, 1.2])
    q_min: float = -2.0
    q_max: float = 5.0
    q_step: float = 0.2
    p0: float = 0.0
    steps: int = 200
    output_dir: str = "out"

    def validate(self) -> None:
        if not self.q_min < self.q_max:
            raise UsageError("q_min must be smaller than q_max")
        if not self.q_step > 0:
            raise UsageError("q_step must be positive")
        if self.steps < 1:
            raise UsageError("steps must be >= 1")
        if not self.step_sizes or any(not s > 0 for s in self.step_sizes):
            raise UsageError("step sizes must be positive")

    def initial_grid(self) -> list[float]:
        n = int(math.floor((self.q_max - self.q_min) / self.q_step + 1e-9))
        return [round(self.q_min + i * self.q_step, 12) for i in range(n + 1)]

    def build_objective(self) -> Objective:
        try:
            return make_objective(self.objective, **self.objective_params)
        except (TypeError, ValueError) as exc:
            raise UsageError(str(exc)) from None

    def build_schedule(self, obj: Objective) -> DampingSchedule:
        if self.mode == "non-strongly-convex":
            return DampingSchedule.non_strongly_convex()
        if self.mode != "strongly-convex":
            raise UsageError(f"unknown mode {self.mode!r}")
        kappa = self.kappa if self.kappa is not None else obj.kappa
        if not math.isfinite(kappa):
            raise UsageError("objective has no finite kappa; pass --kappa")
        return DampingSchedule.strongly_convex(kappa)


def _floats(text: str) -> list[float]:
    return [float(x) for x in str(text).replace(";", ",").split(",") if x.strip()]


def read_config(path: str) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def apply_settings(cfg: ExperimentConfig, settings: dict) -> ExperimentConfig:
    for key, value in settings.items():
        if value is None:
            continue
        if key == "objective":
            cfg.objective = str(value)
        elif key == "objective_kappa":
            cfg.objective_params = {"kappa": float(value)}
        elif key == "diag":
            cfg.objective_params = {"diag": _floats(value)}
        elif key == "kappa":
            cfg.kappa = float(value)
        elif key == "mode":
            cfg.mode = str(value)
        elif key == "step_sizes":
            cfg.step_sizes = _floats(value) if isinstance(value, str) else [float(v) for v in value]
        elif key in ("q_min", "q_max", "q_step", "p0"):
            setattr(cfg, key, float(value))
        elif key == "steps":
            cfg.steps = int(value)
        elif key == "output_dir":
            cfg.output_dir = str(value)
        else:
            raise UsageError(f"unknown config key {key!r}")
    return cfg


def resolve_output_dir(flag: str | None, configured: str) -> Path:
    """``--output-dir`` beats ``$ACCELODE_OUT``, which beats the config file."""
    return Path(flag or os.environ.get(OUT_ENV) or configured)


# --- constants ------------------------------------------------------------

def cmd_constants(kappas: list[float]) -> list[tuple[float, float, float, float]]:
    rows = []
    for k in kappas:
        if not k >= 1:
            raise UsageError(f"kappa must be >= 1, got {k}")
        d, b = coefficients(DampingSchedule.strongly_convex(k))
        rows.append((float(k), 2 * d, b, 2 * d + b))
    return rows


# --- phase portrait -------------------------------------------------------

def _ts_label(ts: float) -> str:
    return f"{ts:g}".replace(".", "p")


def cmd_phase_portrait(cfg: ExperimentConfig, out_dir: Path) -> list[dict]:
    """Simulate the ``(q0, p0)`` grid for every step size; write CSV + SVG.

    Returns the summary rows.
    """
    cfg.validate()
    obj = cfg.build_objective()
    if obj.dim != 1:
        raise UsageError("phase portraits need a one-dimensional objective")
    sched = cfg.build_schedule(obj)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = []
    for ts in cfg.step_sizes:
        stepper = StepperConfig(ts)
        rows, trajectories = [], []
        for tid, q0 in enumerate(cfg.initial_grid()):
            rec = simulate(obj, sched, PhasePoint([q0], [cfg.p0]), cfg.steps, stepper)
            pts = []
            for k, (z, t) in enumerate(zip(rec.points, rec.times)):
                _, beta = coefficients(sched, t)
                y = float(z.q[0] + beta * z.p[0])
                band = 1.0 <= y < 2.0
                rows.append((tid, k, float(z.q[0]), float(z.p[0]), band))
                pts.append((float(z.q[0]), float(z.p[0]), band))
            trajectories.append((rec.status, pts))
            summary.append({
                "step_size": ts, "trajectory_id": tid, "q0": q0, "status": rec.status.value,
                "steps_to_convergence": rec.steps if rec.status is Status.CONVERGED else -1,
                "steps_taken": rec.steps,
            })
        label = _ts_label(ts)
        write_csv(out_dir / f"portrait_Ts{label}.csv", ["trajectory_id", "k", "q", "p", "in_middle_band"], rows)
        (out_dir / f"portrait_Ts{label}.svg").write_text(render_svg(trajectories, f"Ts = {ts:g}"))
    write_csv(out_dir / "summary.csv", list(summary[0]), [list(r.values()) for r in summary])
    return summary


def render_svg(trajectories, title: str, width: int = 640, height: int = 480) -> str:
    """Polylines for trajectories; band points as red crosses, others as dots."""
    finite = [(q, p) for status, pts in trajectories if status is not Status.DIVERGED
              for q, p, _ in pts if math.isfinite(q) and math.isfinite(p)]
    if not finite:
        finite = [(q, p) for _, pts in trajectories for q, p, _ in pts[:1]]
    qs, ps = zip(*finite)
    q_lo, q_hi, p_lo, p_hi = min(qs), max(qs), min(ps), max(ps)
    q_pad = 0.05 * (q_hi - q_lo or 1.0)
    p_pad = 0.05 * (p_hi - p_lo or 1.0)
    q_lo, q_hi, p_lo, p_hi = q_lo - q_pad, q_hi + q_pad, p_lo - p_pad, p_hi + p_pad
    margin = 40

    def sx(q):
        return margin + (q - q_lo) / (q_hi - q_lo) * (width - 2 * margin)

    def sy(p):
        return height - margin - (p - p_lo) / (p_hi - p_lo) * (height - 2 * margin)

    def inside(q, p):
        return q_lo <= q <= q_hi and p_lo <= p <= p_hi

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-family="sans-serif" '
        f'font-size="14">{title}</text>',
        f'<line x1="{margin}" y1="{sy(0):.2f}" x2="{width - margin}" y2="{sy(0):.2f}" stroke="#bbb"/>'
        if p_lo <= 0 <= p_hi else "",
        f'<line x1="{sx(0):.2f}" y1="{margin}" x2="{sx(0):.2f}" y2="{height - margin}" stroke="#bbb"/>'
        if q_lo <= 0 <= q_hi else "",
        f'<text x="{width - margin}" y="{height - 10}" font-family="sans-serif" font-size="12">q</text>',
        f'<text x="10" y="{margin}" font-family="sans-serif" font-size="12">p</text>',
    ]
    for _, pts in trajectories:
        seg = [(q, p) for q, p, _ in pts if math.isfinite(q) and math.isfinite(p) and inside(q, p)]
        if len(seg) > 1:
            coords = " ".join(f"{sx(q):.2f},{sy(p):.2f}" for q, p in seg)
            out.append(f'<polyline points="{coords}" fill="none" stroke="#1f4e99" stroke-width="0.7"/>')
        for q, p, band in pts:
            if not (math.isfinite(q) and math.isfinite(p) and inside(q, p)):
                continue
            x, y = sx(q), sy(p)
            if band:
                out.append(f'<path d="M{x - 3:.2f},{y - 3:.2f}L{x + 3:.2f},{y + 3:.2f}'
                           f'M{x - 3:.2f},{y + 3:.2f}L{x + 3:.2f},{y - 3:.2f}" stroke="red"/>')
            else:
                out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="1.2" fill="#1f4e99"/>')
    out.append("</svg>")
    return "\n".join(s for s in out if s) + "\n"


# --- contour --------------------------------------------------------------

CONTOUR_HEADER = ["k", "area", "line_integral", "region_integral", "max_radius", "R_k_bound"]


def cmd_contour(obj: Objective, sched: DampingSchedule, shape: str, step_size: float, steps: int,
                radius: float = 1.0, energy: float = 1.0, vertices: int = 2000,
                zero_damping: bool = False):
    """Evolve a circle or level-set contour; return ``(rows, failures, notes)``.

    Row ``k`` holds the area of contour ``k``, the two predicted changes
    ``A_{k+1} - A_k`` (line and region integral), the largest vertex radius
    and, for origin-centred circles with ``Ts < 1``, the radius bound.
    ``zero_damping`` sets ``d = beta = 0``; the map is then area preserving.
    """
    if obj.dim != 1:
        raise UsageError("contours need a one-dimensional objective")
    if shape == "circle":
        c = geometry.circle_contour((0.0, 0.0), radius, vertices)
    elif shape == "levelset":
        c = geometry.level_set_contour(obj, energy, vertices)
    else:
        raise UsageError(f"unknown shape {shape!r}")
    cfg = StepperConfig(step_size)
    coeffs = (0.0, 0.0) if zero_damping else None
    d, beta = coeffs or coefficients(sched)
    with_bound = (shape == "circle" and 0 < step_size < 1 and not sched.time_varying
                  and not zero_damping)
    factor = 1.0 - step_size * (2 * d + beta / sched.kappa) if with_bound else math.nan

    rows, failures, notes = [], [], []
    v = c.vertices
    for k in range(steps + 1):
        area = geometry._shoelace(v)
        max_r = float(np.max(np.hypot(v[:, 0], v[:, 1])))
        bound = radius * factor ** (k / 2.0) if with_bound else math.nan
        if with_bound and max_r < bound * (1 - 1e-4):
            failures.append(f"k={k}: max radius {max_r:.6g} below bound {bound:.6g}")
        if k == steps:
            rows.append((k, area, math.nan, math.nan, max_r, bound))
            break
        lhs, line, region, img = geometry.contraction_step(obj, sched, v, k * step_size, cfg,
                                                            coeffs=coeffs)
        rows.append((k, area, line, region, max_r, bound))
        if abs(area) >= geometry.DEGENERATE_AREA:
            tol = PROP3_RTOL * abs(area)
            if abs(lhs - line) > tol or abs(lhs - region) > tol:
                failures.append(f"k={k}: area change {lhs:.6g} vs line {line:.6g} / region {region:.6g}")
        v = img
    if shape == "levelset" and not sched.time_varying and not zero_damping:
        cont, disc = geometry.one_step_areas(obj, sched, energy, step_size, m=vertices)
        a0 = geometry.signed_area(c)
        notes.append(f"one-step areas: continuous {cont:.10g}, discrete {disc:.10g}, "
                     f"margin {(cont - disc) / a0:.3e} A0")
        if cont < disc - 1e-4 * a0:
            failures.append("continuous area below discrete area")
    return rows, failures, notes


# --- argument parsing -----------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="accelode", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constants", help="tabulate 2d, beta and 2d+beta over kappa")
    p.add_argument("--kappa", type=float, nargs="+",
                   default=[float(k) for k in np.logspace(0, 6, 25)])
    p.add_argument("--out", help="CSV file (default: stdout)")

    p = sub.add_parser("phase-portrait", help="simulate the (q0, 0) grid for several step sizes")
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--objective")
    p.add_argument("--objective-kappa", type=float, help="kappa parameter of the kinked objective")
    p.add_argument("--diag", help="comma-separated Hessian diagonal for the quadratic")
    p.add_argument("--kappa", type=float, help="schedule kappa (default: objective kappa)")
    p.add_argument("--mode", choices=["strongly-convex", "non-strongly-convex"])
    p.add_argument("--step-sizes", help="comma-separated step sizes")
    p.add_argument("--q-min", type=float)
    p.add_argument("--q-max", type=float)
    p.add_argument("--q-step", type=float)
    p.add_argument("--p0", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--output-dir")

    p = sub.add_parser("contour", help="evolve a phase-plane contour and check area identities")
    p.add_argument("--objective", default="piecewise")
    p.add_argument("--objective-kappa", type=float)
    p.add_argument("--diag")
    p.add_argument("--kappa", type=float)
    p.add_argument("--shape", choices=["circle", "levelset"], default="circle")
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--energy", type=float, default=1.0)
    p.add_argument("--vertices", type=int, default=2000)
    p.add_argument("--step-size", type=float, default=0.5)
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--zero-damping", action="store_true", help="set d = beta = 0")
    p.add_argument("--out", help="CSV file (default: stdout)")

    p = sub.add_parser("verify", help="run verification suites and print a JSON report")
    p.add_argument("suite", choices=[*verification.SUITES, "all"])
    p.add_argument("--out", help="also write the JSON report here")
    return parser


def _objective_from_args(args) -> Objective:
    cfg = ExperimentConfig()
    settings = {"objective": args.objective, "objective_kappa": args.objective_kappa, "diag": args.diag}
    if args.objective and args.objective != "piecewise" and args.objective_kappa is None:
        cfg.objective_params = {}
    apply_settings(cfg, settings)
    return cfg.build_objective()


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except UsageError as exc:
        print(f"accelode: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"accelode: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _dispatch(args) -> int:
    if args.command == "constants":
        rows = cmd_constants(args.kappa)
        _emit(write_csv(None, ["kappa", "2d", "beta", "2d+beta"], rows), args.out)
        return EXIT_OK

    if args.command == "phase-portrait":
        cfg = ExperimentConfig()
        if args.config:
            apply_settings(cfg, read_config(args.config))
        overrides = {k: getattr(args, k) for k in
                     ("objective", "objective_kappa", "diag", "kappa", "mode", "step_sizes",
                      "q_min", "q_max", "q_step", "p0", "steps")}
        apply_settings(cfg, overrides)
        out_dir = resolve_output_dir(args.output_dir, cfg.output_dir)
        summary = cmd_phase_portrait(cfg, out_dir)
        counts = {}
        for r in summary:
            key = (r["step_size"], r["status"])
            counts[key] = counts.get(key, 0) + 1
        for (ts, status), n in sorted(counts.items()):
            print(f"Ts={ts:g}: {n} {status}")
        print(f"wrote {out_dir}")
        return EXIT_OK

    if args.command == "contour":
        obj = _objective_from_args(args)
        kappa = args.kappa if args.kappa is not None else obj.kappa
        if not math.isfinite(kappa):
            raise UsageError("objective has no finite kappa; pass --kappa")
        sched = DampingSchedule.strongly_convex(kappa)
        rows, failures, notes = cmd_contour(obj, sched, args.shape, args.step_size, args.steps,
                                            args.radius, args.energy, args.vertices,
                                            args.zero_damping)
        _emit(write_csv(None, CONTOUR_HEADER, rows), args.out)
        for line in notes:
            print(line, file=sys.stderr)
        for line in failures:
            print(f"FAIL {line}", file=sys.stderr)
        return EXIT_FAIL if failures else EXIT_OK

    if args.command == "verify":
        results = verification.run_suite(args.suite)
        ok = verification.suite_passed(results)
        report = {"suite": args.suite, "passed": ok, "checks": [r.to_dict() for r in results]}
        text = json.dumps(report, indent=2, default=float) + "\n"
        sys.stdout.write(text)
        if args.out:
            Path(args.out).write_text(text)
        return EXIT_OK if ok else EXIT_FAIL

    raise UsageError(f"unknown command {args.command!r}")  # pragma: no cover


if __name__ == "__main__":
    sys.exit(main())
