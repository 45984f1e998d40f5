"""Command-line front end.

    apollonian pack --preset ford --min-radius 1e-3 --format svg --out ford.svg
    apollonian dim --preset symmetric-unit --depth 6 --powers 100
    apollonian cf --digits exclude:5

Settings come from an optional JSON file (--config) and are overridden by flags.
Reports are JSON checked against the schemas shipped in apollonian/schemas.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import dataclass, fields
from importlib import resources

import jsonschema
import numpy as np

from . import content, numth, packing, renewal, thermo
from .errors import ApollonianError, ConfigError
from .moebius import INF

SUBCOMMANDS = ("pack", "dim", "content", "count", "constant", "cf", "lueroth", "renewal")


@dataclass
class RunConfig:
    command: str = "dim"
    preset: str = "symmetric-unit"
    triple: str | None = None
    min_radius: float | None = None
    depth: int = 6
    powers: int = 100
    degree: int = 12
    tol: float = 1e-6
    eps_grid: str | None = None
    eps: float | None = None
    samples: int = 10 ** 6
    cap: int = packing.DEFAULT_CAP
    seed: int = 0
    threads: int = 1
    out: str | None = None
    format: str = "json"
    digits: str | None = None
    s: float | None = None
    ratios: str = "0.5,0.3333333333333333"
    t_max: float = 60.0
    f_family: str = "indicator"
    lattice: bool | None = None

    def validate(self):
        if self.command not in SUBCOMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        for name in ("depth", "powers", "degree", "tol", "samples", "threads", "t_max", "cap"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or isinstance(v, bool) or v <= 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("min_radius", "eps", "s"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")
        if self.format not in ("json", "csv", "svg"):
            raise ConfigError("format must be json, csv or svg")
        if self.format == "svg" and self.command != "pack":
            raise ConfigError("svg output is only available for pack")
        if self.triple is None and self.preset not in packing.PRESETS:
            raise ConfigError(f"unknown preset {self.preset!r}; choose from {sorted(packing.PRESETS)}")
        return self

    def system(self):
        if self.triple:
            try:
                vals = [float(x) for x in self.triple.split(",")]
            except ValueError:
                raise ConfigError("--triple takes comma separated numbers")
            return packing.build_system(packing.triple_from_list(vals), "triple")
        return packing.preset_system(self.preset)


def load_config(args) -> RunConfig:
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}")
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        data = {k.replace("-", "_"): v for k, v in data.items()}
        known = {f.name for f in fields(RunConfig)}
        bad = sorted(set(data) - known)
        if bad:
            raise ConfigError(f"unknown config keys {bad}")
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            data[f.name] = v
    data["command"] = args.command
    return RunConfig(**data).validate()


# ---------------------------------------------------------------------------
# JSON helpers


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.bool_):
        return bool(x)
    if x is INF:
        return "inf"
    return x


def load_schema(name):
    text = resources.files("apollonian").joinpath("schemas").joinpath(f"{name}.json").read_text()
    return json.loads(text)


def validate_report(name, report):
    jsonschema.validate(report, load_schema(name))


# ---------------------------------------------------------------------------
# subcommands


def _circle_json(C):
    if C.is_line:
        return {"curvature": 0.0, "normal": _plain(C.curvature_center), "offset": float(C.offset)}
    return {"curvature": float(C.curvature), "center": _plain(C.center), "radius": float(C.radius)}


def _system_json(system):
    return {"name": system.name, "triple": [_circle_json(C) for C in system.triple.circles],
            "C4": _circle_json(system.C4)}


def cmd_pack(cfg: RunConfig):
    system = cfg.system()
    eps = cfg.min_radius if cfg.min_radius is not None else system.C4.radius / 100
    pk = packing.generate_packing(system, min_radius=eps, cap=cfg.cap)
    rep = {"command": "pack", "system": _system_json(system), "min_radius": eps, "count": len(pk),
           "circles": pk.to_json()}
    return rep, {"svg": lambda: render_svg(system, pk)}


def cmd_dim(cfg: RunConfig):
    system = cfg.system()
    spec = thermo.apollonian_spec(system, K=cfg.powers, m=cfg.depth, degree=cfg.degree)
    t0 = time.perf_counter()
    lo, hi, op = thermo.bowen_dimension(spec, tol=cfg.tol, m=cfg.depth, K=cfg.powers, return_op=True)
    D = thermo.pressure_root(spec, op, (lo - 1e-4, hi + 1e-4))
    la, lb = thermo.lyapunov_exponent(spec, D, op=op, both=True)
    ed = thermo.eigen_data(spec, D, op=op)
    print(f"dim: {time.perf_counter() - t0:.1f} s", file=sys.stderr)
    rep = {"command": "dim", "system": system.name, "m": cfg.depth, "K": cfg.powers, "degree": cfg.degree,
           "D_bracket": [lo, hi], "D": D, "width": hi - lo,
           "lyapunov": {"pressure_derivative": la, "measure_average": lb, "difference": abs(la - lb)},
           "eigenvalue": ed.eigenvalue, "eigenfunction_lower_bound": ed.R, "gamma": ed.gamma}
    return rep, {}


def _report(cfg, system=None):
    system = system or cfg.system()
    return content.content_report(system, K=cfg.powers, degree=cfg.degree, m=cfg.depth)


def _content_json(rep: content.ContentReport):
    D = rep.D
    out = rep.to_json()
    out["identities"] = {
        "C0f_over_C1f": rep.C0f / rep.C1f, "expected_C0f_over_C1f": (1 - D) / math.pi,
        "C1f_over_M": rep.C1f / rep.M, "expected_C1f_over_M": 0.5 * (2 - D)}
    return out


def cmd_content(cfg: RunConfig):
    system = cfg.system()
    rep = _report(cfg, system)
    eps = cfg.eps if cfg.eps is not None else system.C4.radius * 2.0 ** -10
    pk = packing.generate_packing(system, min_radius=eps, keep_words=False)
    exact = content.exact_epsilon_volume(system, eps, pk)
    mc = content.direct_epsilon_volume(system, eps, cfg.samples, cfg.seed, pk, threads=cfg.threads)
    scale = eps ** (rep.D - 2)
    out = {"command": "content", **_content_json(rep),
           "oracle": {"eps": eps, "exact_scaled": exact * scale, "mc_scaled": mc.estimate * scale,
                      "mc_stderr_scaled": mc.stderr * scale, "samples": cfg.samples, "seed": cfg.seed,
                      "rel_error_exact": abs(exact * scale / rep.M - 1),
                      "rel_error_mc": abs(mc.estimate * scale / rep.M - 1)}}
    return out, {}


def _eps_grid(cfg, system):
    if cfg.eps_grid:
        try:
            return [float(x) for x in cfg.eps_grid.split(",")]
        except ValueError:
            raise ConfigError("--eps-grid takes comma separated numbers")
    return list(system.C4.radius * 2.0 ** -np.arange(4, 14))


def cmd_count(cfg: RunConfig):
    system = cfg.system()
    rep = _report(cfg, system)
    grid = _eps_grid(cfg, system)
    rows = content.epsilon_table(system, rep.D, grid)
    last = [r[2] for r in rows[-3:]]
    out = {"command": "count", "system": system.name, "D": rep.D, "minus_C0f": -rep.C0f, "M": rep.M,
           "rows": [{"eps": e, "count": n, "scaled_count": c, "scaled_volume": v} for e, n, c, v in rows],
           "spread_last3": (max(last) - min(last)) / np.mean(last),
           "rel_error_count": abs(last[-1] / -rep.C0f - 1)}
    return out, {"csv": lambda: _csv(["eps", "count", "scaled_count", "scaled_volume"],
                                     [[r["eps"], r["count"], r["scaled_count"], r["scaled_volume"]]
                                      for r in out["rows"]])}


def cmd_constant(cfg: RunConfig):
    rep = _report(cfg)
    out = {"command": "constant", **content.apollonian_constant_bound(rep)}
    return out, {}


def cmd_cf(cfg: RunConfig):
    digits = numth.DigitSet.parse(cfg.digits or "exclude:5")
    res = numth.cf_content(digits)
    out = {"command": "cf", **res.to_json()}
    if cfg.eps is not None:
        out["oracle"] = {"eps": cfg.eps, "scaled_length": numth.cf_direct(digits, res.D, cfg.eps)}
    return out, {}


def cmd_lueroth(cfg: RunConfig):
    if cfg.digits is None or cfg.digits == "lattice":
        digits, s = numth.lattice_preset()
    else:
        digits = numth.DigitSet.parse(cfg.digits)
        s = cfg.s if cfg.s is not None else 2.0
    res = numth.lueroth_content(digits, s)
    out = {"command": "lueroth", **res.to_json()}
    return out, {}


def cmd_renewal(cfg: RunConfig):
    try:
        ratios = [float(x) for x in cfg.ratios.split(",")]
    except ValueError:
        raise ConfigError("--ratios takes comma separated numbers")
    if any(not 0 < r < 1 for r in ratios):
        raise ConfigError("ratios must lie in (0, 1)")
    prob = renewal.RenewalProblem(ratios, f=cfg.f_family)
    grid = np.linspace(cfg.t_max / 2, cfg.t_max, 200)
    rep = renewal.verify_asymptotics(prob, grid, lattice=cfg.lattice)
    out = {"command": "renewal", "ratios": ratios, "f": cfg.f_family, **rep.to_json()}
    return out, {"csv": rep.to_csv}


COMMANDS = {"pack": cmd_pack, "dim": cmd_dim, "content": cmd_content, "count": cmd_count,
            "constant": cmd_constant, "cf": cmd_cf, "lueroth": cmd_lueroth, "renewal": cmd_renewal}


# ---------------------------------------------------------------------------
# output


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _clip_line(C, lo, hi):
    """Endpoints of a line clipped to the box [lo, hi] (Liang-Barsky)."""
    p = C.point_at(0.0)
    d = complex(C.point_at(1.0)) - complex(p)
    p = complex(p)
    t0, t1 = -np.inf, np.inf
    for pc, dc, a, b in ((p.real, d.real, lo.real, hi.real), (p.imag, d.imag, lo.imag, hi.imag)):
        if abs(dc) < 1e-15:
            if not a <= pc <= b:
                return None
            continue
        ta, tb = sorted(((a - pc) / dc, (b - pc) / dc))
        t0, t1 = max(t0, ta), min(t1, tb)
    if t0 > t1:
        return None
    return p + t0 * d, p + t1 * d


def render_svg(system, pk):
    """Stroke-only SVG of the packing; the view box is the square around the dual circle."""
    K0 = system.K[0]
    c, r = K0.center, K0.radius
    lo, hi = complex(c.real - r, c.imag - r), complex(c.real + r, c.imag + r)
    w = hi.real - lo.real
    sw = w / 1500
    f = lambda x: f"{x:.9g}"
    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{f(lo.real)} {f(-hi.imag)} {f(w)} {f(w)}">',
             f'<g fill="none" stroke="black" stroke-width="{f(sw)}">']
    for C in system.triple.circles:
        if C.is_line:
            seg = _clip_line(C, lo, hi)
            if seg:
                a, b = seg
                lines.append(f'<line x1="{f(a.real)}" y1="{f(-a.imag)}" x2="{f(b.real)}" y2="{f(-b.imag)}"/>')
        else:
            cc, rr = C.center, C.radius
            # full circle as a two-arc path, so that <circle> elements are exactly the packing circles
            lines.append(f'<path d="M {f(cc.real - rr)} {f(-cc.imag)} a {f(rr)} {f(rr)} 0 1 0 {f(2 * rr)} 0 '
                         f'a {f(rr)} {f(rr)} 0 1 0 {f(-2 * rr)} 0"/>')
    for z, rr in zip(pk.center, pk.radius):
        lines.append(f'<circle cx="{f(z.real)}" cy="{f(-z.imag)}" r="{f(rr)}"/>')
    lines += ["</g>", "</svg>"]
    return "\n".join(lines) + "\n"


def emit(cfg: RunConfig, report, extras, stream=None):
    report = _plain(report)
    validate_report(cfg.command, report)
    if cfg.format == "json":
        text = json.dumps(report, indent=1, sort_keys=True) + "\n"
    elif cfg.format in extras:
        text = extras[cfg.format]()
    else:
        raise ConfigError(f"{cfg.format} output is not available for {cfg.command}")
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        (stream or sys.stdout).write(text)
    return report


def error_object(exc):
    code = getattr(exc, "exit_code", 1)
    return {"error": {"type": type(exc).__name__, "message": str(exc), "exit_code": code}}


def build_parser():
    p = argparse.ArgumentParser(prog="apollonian", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=SUBCOMMANDS)
    p.add_argument("--config", help="JSON file of settings; flags override it")
    p.add_argument("--preset", choices=sorted(packing.PRESETS))
    p.add_argument("--triple", help='"k1,k2,k3" curvatures, or curvatures followed by the three centres')
    p.add_argument("--min-radius", type=float, dest="min_radius")
    p.add_argument("--depth", type=int, help="cylinder depth m")
    p.add_argument("--powers", type=int, help="power truncation K")
    p.add_argument("--degree", type=int, help="Chebyshev degree of the transfer operator")
    p.add_argument("--tol", type=float)
    p.add_argument("--eps-grid", dest="eps_grid", help="comma separated radii for count")
    p.add_argument("--eps", type=float, help="radius for the content oracle")
    p.add_argument("--samples", type=int, help="Monte-Carlo samples for content")
    p.add_argument("--cap", type=int, help="circle budget for pack")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--out")
    p.add_argument("--format", choices=("json", "csv", "svg"))
    p.add_argument("--digits", help="'1,2', 'exclude:5', 'odd', 'even', 'all' (lueroth: 'lattice')")
    p.add_argument("--s", type=float, help="Lueroth exponent")
    p.add_argument("--ratios", help="renewal contraction ratios")
    p.add_argument("--t-max", type=float, dest="t_max")
    p.add_argument("--f-family", dest="f_family", choices=sorted(renewal.F_FAMILIES))
    p.add_argument("--lattice", action=argparse.BooleanOptionalAction, default=None)
    return p


def run(argv=None, stream=None):
    """Run one subcommand; returns (exit_code, report or error object)."""
    stream = stream or sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return (2 if exc.code else 0), None
    try:
        cfg = load_config(args)
        report, extras = COMMANDS[cfg.command](cfg)
        return 0, emit(cfg, report, extras, stream)
    except (ApollonianError, jsonschema.ValidationError) as exc:
        err = error_object(exc)
        stream.write(json.dumps(err, sort_keys=True) + "\n")
        return err["error"]["exit_code"], err


def main(argv=None):
    code, _ = run(argv)
    sys.exit(code)


if __name__ == "__main__":
    main()
