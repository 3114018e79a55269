"""Command-line runner for forward solves, Taylor residual sweeps, error tables and UQ studies.

Experiments are described by INI files (see ``configs/``). Every run writes
CSV tables plus a JSON sidecar holding the full configuration and the
library version.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

import argparse
import configparser
import csv
import io
import json
import logging
import math
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import __version__, scatter, shapecalc, uq
from .bie import SingularMatrixError
from .geometry import SelfIntersectionError, VelocityField, make_circle, make_ellipse

log = logging.getLogger("shapetaylor")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class ConfigError(ValueError):
    pass


def parse_number(text):
    """Float from ``"3"``, ``"pi"``, ``"2pi"``, ``"2*pi"`` or ``"pi/2"``."""
    t = text.strip().replace(" ", "")
    m = re.fullmatch(r"([-+]?[0-9.eE+-]*?)\*?pi(?:/([0-9.]+))?", t)
    if m:
        coef = m.group(1)
        val = math.pi * (float(coef) if coef not in ("", "+", "-") else (-1.0 if coef == "-" else 1.0))
        return val / float(m.group(2)) if m.group(2) else val
    return float(t)


def parse_list(text):
    return [parse_number(tok) for tok in text.split(",") if tok.strip()]


def parse_points(text):
    pts = []
    for chunk in text.split(";"):
        if chunk.strip():
            xy = parse_list(chunk)
            if len(xy) != 2:
                raise ConfigError(f"point {chunk!r} must have two coordinates")
            pts.append(xy)
    return np.array(pts, dtype=float)


_FACTOR = re.compile(r"(sin|cos)\(\s*([0-9.]+)\s*t\s*(?:([+-])\s*([0-9.]+|pi))?\s*\)")


def parse_velocity(text):
    """Velocity amplitude from terms ``coef [sin(p t + phi)] [cos(q t + phi)]`` joined by ``;``.

    ``t`` is the native curve parameter (``s / r`` on a circle).
    """
    terms = []
    for raw in text.split(";"):
        raw = raw.strip()
        if not raw:
            continue
        m = re.match(r"([-+]?[0-9.]+(?:[eE][-+]?[0-9]+)?)", raw)
        if not m:
            raise ConfigError(f"velocity term {raw!r} must start with a coefficient")
        coef = float(m.group(1))
        rest = raw[m.end():].replace("*", " ").strip()
        factors = []
        pos = 0
        for fm in _FACTOR.finditer(rest):
            if rest[pos:fm.start()].strip():
                raise ConfigError(f"cannot parse {rest[pos:fm.start()]!r} in velocity term {raw!r}")
            phase = 0.0
            if fm.group(4):
                phase = parse_number(fm.group(4)) * (1.0 if fm.group(3) == "+" else -1.0)
            factors.append((fm.group(1), float(fm.group(2)), phase))
            pos = fm.end()
        if rest[pos:].strip():
            raise ConfigError(f"cannot parse {rest[pos:]!r} in velocity term {raw!r}")
        terms.append((coef, factors))
    if not terms:
        raise ConfigError("velocity expression is empty")

    def func(t):
        out = np.zeros_like(t)
        for coef, factors in terms:
            val = np.full_like(t, coef)
            for name, freq, phase in factors:
                val = val * (np.sin if name == "sin" else np.cos)(freq * t + phase)
            out = out + val
        return out

    return func


@dataclass
class ExperimentConfig:
    """Flat experiment description mirroring the INI sections."""

    # geometry
    shape: str = "circle"
    radius: float = 2.0
    a: float = 3.0
    b: float = 2.0
    n_nodes: int = 400
    # problem
    bc: str = "sound_hard"
    lam: float = 0.0
    alpha: float = 1.0
    alpha_in: float = 1.0
    alpha_ex: float = 1.0
    # incident
    incident: str = "plane"
    wavenumbers: str = "3"
    direction: str = "1, 1"
    source: str = "3, 4"
    # perturbation
    velocity: str = "0.4 sin(2t) cos(3t)"
    eps: str = "0.05, 0.1, 0.15, 0.2, 0.25, 0.3"
    orders: str = "0, 1, 2"
    formula: str = "corrected"
    # observation
    obs_radius: float = 5.0
    obs_count: int = 64
    obs_points: str = ""
    # uq
    uq_modes: int = 5
    uq_eps: str = "0.01, 0.02, 0.03"
    uq_samples: int = 3000
    uq_seed: int = 2024
    uq_moments: str = "1, 2, 4, 7"
    # grid dump for solve --grid
    grid_half_width: float = 6.0

    SECTIONS = {
        "geometry": ("shape", "radius", "a", "b", "n_nodes"),
        "problem": ("bc", "lam", "alpha", "alpha_in", "alpha_ex"),
        "incident": ("incident", "wavenumbers", "direction", "source"),
        "perturbation": ("velocity", "eps", "orders", "formula"),
        "observation": ("obs_radius", "obs_count", "obs_points", "grid_half_width"),
        "uq": ("uq_modes", "uq_eps", "uq_samples", "uq_seed", "uq_moments"),
    }

    @classmethod
    def from_ini(cls, text) -> "ExperimentConfig":
        parser = configparser.ConfigParser(interpolation=None)
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from None
        kwargs = {}
        types = {f.name: f.type for f in fields(cls)}
        for section in parser.sections():
            if section not in cls.SECTIONS:
                raise ConfigError(f"unknown section [{section}]")
            for key, value in parser.items(section):
                if key not in cls.SECTIONS[section]:
                    raise ConfigError(f"unknown key {section}.{key}")
                typ = types[key]
                try:
                    if typ in (int, "int"):
                        kwargs[key] = int(value)
                    elif typ in (float, "float"):
                        kwargs[key] = parse_number(value)
                    else:
                        kwargs[key] = value.strip()
                except ValueError:
                    raise ConfigError(f"{section}.{key}: cannot parse {value!r}") from None
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    def to_ini(self) -> str:
        parser = configparser.ConfigParser(interpolation=None)
        for section, keys in self.SECTIONS.items():
            parser[section] = {key: str(getattr(self, key)) for key in keys}
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self):
        def fail(path, msg):
            raise ConfigError(f"{path}: {msg}")

        if self.shape not in ("circle", "ellipse"):
            fail("geometry.shape", "must be circle or ellipse")
        if self.n_nodes < 8 or self.n_nodes % 2:
            fail("geometry.n_nodes", "must be even and >= 8")
        if self.bc not in scatter.BOUNDARY_CONDITIONS:
            fail("problem.bc", f"must be one of {scatter.BOUNDARY_CONDITIONS}")
        if self.incident not in ("plane", "point_source"):
            fail("incident.incident", "must be plane or point_source")
        if any(k <= 0 for k in self.k_list):
            fail("incident.wavenumbers", "must be positive")
        if self.formula not in shapecalc.FORMULAS:
            fail("perturbation.formula", f"must be one of {shapecalc.FORMULAS}")
        if self.formula == "uncorrected" and self.bc != "sound_hard":
            fail("perturbation.formula", "the uncorrected variant applies to sound_hard only")
        limit = shapecalc.MAX_ORDER[self.bc]
        if any(n < 0 or n > limit for n in self.order_list):
            fail("perturbation.orders", f"must lie in [0, {limit}] for {self.bc}")
        for key in ("alpha", "alpha_in", "alpha_ex"):
            if getattr(self, key) <= 0:
                fail(f"problem.{key}", "must be positive")
        parse_velocity(self.velocity)
        self.observation_points()

    @property
    def k_list(self):
        return parse_list(self.wavenumbers)

    @property
    def eps_list(self):
        return parse_list(self.eps)

    @property
    def order_list(self):
        return [int(x) for x in parse_list(self.orders)]

    def make_curve(self):
        if self.shape == "circle":
            return make_circle(self.radius, self.n_nodes)
        return make_ellipse(self.a, self.b, self.n_nodes)

    def make_field(self, k):
        if self.incident == "plane":
            return scatter.IncidentField.plane(k, parse_list(self.direction))
        return scatter.IncidentField.point_source(k, parse_list(self.source))

    def make_medium(self):
        return scatter.Medium(self.bc, alpha=self.alpha, lam=self.lam,
                              alpha_in=self.alpha_in, alpha_ex=self.alpha_ex)

    def observation_points(self):
        if self.obs_points.strip():
            return parse_points(self.obs_points)
        if self.obs_count < 1 or self.obs_radius <= 0:
            raise ConfigError("observation: need obs_points or a positive ring radius and count")
        return shapecalc.observation_ring(self.obs_radius, self.obs_count)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _write_sidecar(out_dir, name, cfg, command, extra=None):
    meta = {"command": command, "version": __version__, "config": cfg.to_dict(),
            "config_ini": cfg.to_ini()}
    if extra:
        meta.update(extra)
    with open(os.path.join(out_dir, name + ".json"), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)


def _map(func, items, threads):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(func, items))
    return [func(x) for x in items]


def run_solve(cfg: ExperimentConfig, grid=0):
    """Scattered and total field at observation points (and optionally on a grid)."""
    curve = cfg.make_curve()
    pts = cfg.observation_points()
    rows, grid_rows = [], []
    for k in cfg.k_list:
        sol = scatter.solve(curve, cfg.make_field(k), cfg.make_medium())
        inside = curve.contains(pts)
        u = sol.eval(pts, inside)
        tot = sol.eval_total(pts, inside)
        for p, a, b in zip(pts, u, tot):
            rows.append((k, p[0], p[1], a.real, a.imag, b.real, b.imag))
        if grid:
            h = cfg.grid_half_width
            xs = np.linspace(-h, h, grid)
            gx, gy = np.meshgrid(xs, xs)
            gp = np.column_stack([gx.ravel(), gy.ravel()])
            keep = curve.distance(gp) >= 2.0 * curve.node_spacing
            vals = np.full(len(gp), np.nan + 1j * np.nan)
            vals[keep] = sol.eval_total(gp[keep])
            for p, v in zip(gp, vals):
                grid_rows.append((k, p[0], p[1], v.real, v.imag))
    return rows, grid_rows


def run_residual_sweep(cfg: ExperimentConfig, threads=1):
    """Rows ``(k, eps, N, residual)`` for every wavenumber, magnitude and order."""
    curve = cfg.make_curve()
    v = VelocityField.from_function(curve, parse_velocity(cfg.velocity))
    pts = cfg.observation_points()
    max_n = max(cfg.order_list)
    rows = []
    for k in cfg.k_list:
        fwd = scatter.solve(curve, cfg.make_field(k), cfg.make_medium())
        stack = shapecalc.build_stack(fwd, v, max_n, formula=cfg.formula)
        eps_list = cfg.eps_list
        perturbed = _map(lambda e: shapecalc.perturbed_solution(stack, e) if e else None, eps_list, threads)
        for eps, per in zip(eps_list, perturbed):
            for n in cfg.order_list:
                res = shapecalc.residual(stack, eps, pts, n, perturbed=per) if eps else 0.0
                rows.append((k, eps, n, res))
    return rows


def run_error_table(cfg: ExperimentConfig, threads=1):
    """Rows ``(k, eps, N, x, y, rel_error)`` at each observation point."""
    curve = cfg.make_curve()
    v = VelocityField.from_function(curve, parse_velocity(cfg.velocity))
    pts = cfg.observation_points()
    inside = curve.contains(pts)
    max_n = max(cfg.order_list)
    rows = []
    for k in cfg.k_list:
        fwd = scatter.solve(curve, cfg.make_field(k), cfg.make_medium())
        stack = shapecalc.build_stack(fwd, v, max_n, formula=cfg.formula)
        eps_list = cfg.eps_list
        perturbed = _map(lambda e: shapecalc.perturbed_solution(stack, e), eps_list, threads)
        for eps, per in zip(eps_list, perturbed):
            exact = per.eval(pts, inside)
            for n in cfg.order_list:
                approx = shapecalc.taylor_eval(stack, eps, pts, n, inside=inside)
                rel = np.abs(exact - approx) / np.abs(exact)
                for p, r in zip(pts, rel):
                    rows.append((k, eps, n, p[0], p[1], r))
    return rows


def run_uq(cfg: ExperimentConfig, threads=1, seed=None):
    """Monte Carlo moments and Taylor estimators for each UQ magnitude.

    Returns ``(value_rows, residual_rows)``; the same random coefficients
    are reused for every magnitude.
    """
    curve = cfg.make_curve()
    basis = uq.fourier_basis(curve, cfg.uq_modes)
    pts = cfg.observation_points()
    seed = cfg.uq_seed if seed is None else seed
    moments = [int(n) for n in parse_list(cfg.uq_moments)]
    medium = cfg.make_medium()
    value_rows, res_rows = [], []
    for k in cfg.k_list:
        field = cfg.make_field(k)
        fwd = scatter.solve(curve, field, medium)
        stack = shapecalc.build_stack(fwd, basis, 2)
        for eps in parse_list(cfg.uq_eps):
            pert = uq.RandomPerturbation(curve, basis, eps)
            samples = uq.sample_fields(pert, field, medium, pts, cfg.uq_samples, seed, threads)
            for n in moments:
                ref = uq.sample_moment(samples, n)
                for p, val in zip(pts, ref.values):
                    value_rows.append((k, eps, n, "monte_carlo", "", p[0], p[1], val.real, val.imag))
                for order in (0, 1, 2):
                    est = uq.estimator(stack, n, order, eps, pts)
                    for p, val in zip(pts, est.values):
                        value_rows.append((k, eps, n, "estimator", order, p[0], p[1], val.real, val.imag))
                    res_rows.append((k, eps, n, order, uq.estimation_residual(ref, est), samples.failures))
    return value_rows, res_rows


def build_parser():
    parser = argparse.ArgumentParser(prog="shapetaylor", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (("solve", "forward solve at observation points"),
                           ("residual-sweep", "Taylor residual versus perturbation magnitude"),
                           ("error-table", "relative Taylor error at observation points"),
                           ("uq", "moment estimators against Monte Carlo")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True, help="INI experiment file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the UQ seed")
        p.add_argument("--threads", type=int, default=1, help="worker threads for independent jobs")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "solve":
            p.add_argument("--grid", type=int, default=0, help="also dump the total field on an NxN grid")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        with open(args.config) as fh:
            cfg = ExperimentConfig.from_ini(fh.read())
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        os.makedirs(args.out, exist_ok=True)
    except (OSError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    stem = args.command.replace("-", "_")
    try:
        if args.command == "solve":
            rows, grid_rows = run_solve(cfg, args.grid)
            _write_csv(os.path.join(args.out, "solve.csv"),
                       ["k", "x", "y", "re_u", "im_u", "re_total", "im_total"], rows)
            if args.grid:
                _write_csv(os.path.join(args.out, "grid.csv"),
                           ["k", "x", "y", "re_total", "im_total"], grid_rows)
        elif args.command == "residual-sweep":
            rows = run_residual_sweep(cfg, args.threads)
            _write_csv(os.path.join(args.out, "residual_sweep.csv"), ["k", "eps", "N", "residual"], rows)
        elif args.command == "error-table":
            rows = run_error_table(cfg, args.threads)
            _write_csv(os.path.join(args.out, "error_table.csv"),
                       ["k", "eps", "N", "x", "y", "rel_error"], rows)
        else:
            value_rows, res_rows = run_uq(cfg, args.threads, args.seed)
            _write_csv(os.path.join(args.out, "uq_values.csv"),
                       ["k", "eps", "n", "method", "N", "x", "y", "re", "im"], value_rows)
            _write_csv(os.path.join(args.out, "uq_residuals.csv"),
                       ["k", "eps", "n", "N", "residual", "failures"], res_rows)
    except (ConfigError, ValueError) as exc:
        if isinstance(exc, SelfIntersectionError):
            print(f"numerical failure: {exc}", file=sys.stderr)
            return EXIT_NUMERICAL
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (np.linalg.LinAlgError, SingularMatrixError, uq.MonteCarloFailure, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    seed = args.seed if args.seed is not None else cfg.uq_seed
    _write_sidecar(args.out, stem, cfg, args.command, {"seed": seed, "threads": args.threads})
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
