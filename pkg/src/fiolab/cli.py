"""Command-line driver: ``fiolab run <command> [flags]``.

Exit codes: 0 success, 1 a check failed, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .grid import GridError, GridSpec, SampledFunction, sample
from .smooth import interval_bump

COMMANDS = (
    "sharpness",
    "vdc",
    "dilation",
    "gabor-decay",
    "equivalence",
    "orthogonality",
    "partition-check",
    "conjugation",
)

SHARPNESS_COLUMNS = ("n", "fl_in", "fl_out", "mp_in", "mp_out", "ratio")
SHARPNESS_META = ("fitted_exponent", "theory_exponent", "residual", "grid", "p", "m")


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    d: int = 1
    N: Optional[int] = None
    L: Optional[float] = None
    p: Optional[float] = None
    m: float = 0.0
    n_list: Optional[list] = None
    lambda_list: Optional[list] = None
    j_list: Optional[list] = None
    J_max: Optional[int] = None
    K_max: Optional[int] = None
    output_path: Optional[str] = None
    format: str = "csv"
    seed: Optional[int] = None
    norm_method: str = "decomp"
    expect_min: Optional[float] = None
    expect_max: Optional[float] = None


@dataclass
class Report:
    command: str
    columns: list
    rows: list
    metadata: dict = field(default_factory=dict)

    def rounded(self) -> "Report":
        return Report(
            self.command,
            list(self.columns),
            [[_round(v) for v in r] for r in self.rows],
            {k: _round(v) for k, v in self.metadata.items()},
        )

    def __eq__(self, other):
        if not isinstance(other, Report):
            return NotImplemented
        return (
            self.command == other.command
            and list(self.columns) == list(other.columns)
            and len(self.rows) == len(other.rows)
            and all(_same_row(a, b) for a, b in zip(self.rows, other.rows))
            and list(self.metadata) == list(other.metadata)
            and all(_same(self.metadata[k], other.metadata[k]) for k in self.metadata)
        )


def _round(v):
    if isinstance(v, str):
        return v
    v = float(v)
    return v if not math.isfinite(v) else float(f"{v:.12g}")


def _same(a, b):
    if isinstance(a, str) or isinstance(b, str):
        return a == b
    return (math.isnan(a) and math.isnan(b)) or a == b


def _same_row(a, b):
    return len(a) == len(b) and all(_same(x, y) for x, y in zip(a, b))


# -- serialization -------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.12g}"


def _parse(s: str):
    try:
        return float(s)
    except ValueError:
        return s


def _json_value(v):
    if isinstance(v, str):
        return v
    v = _round(v)
    if math.isnan(v):
        return None
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def _from_json(v):
    if v is None:
        return float("nan")
    if v in ("inf", "-inf"):
        return float(v)
    return float(v) if isinstance(v, (int, float)) else v


def render_report(result: Report, fmt: str = "csv") -> str:
    if not result.rows:
        raise ConfigError("report has no rows; nothing written")
    if fmt == "json":
        doc = {
            "command": result.command,
            "columns": list(result.columns),
            "rows": [[_json_value(v) for v in r] for r in result.rows],
            "metadata": {k: _json_value(v) for k, v in result.metadata.items()},
        }
        return json.dumps(doc, indent=2) + "\n"
    if fmt != "csv":
        raise ConfigError(f"unknown format {fmt!r}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(result.columns)
    for r in result.rows:
        w.writerow([_fmt(v) for v in r])
    for k, v in result.metadata.items():
        w.writerow([k, _fmt(v)])
    return buf.getvalue()


def write_report(result: Report, path: str, fmt: str = "csv") -> None:
    text = render_report(result, fmt)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc}") from exc


def parse_report(text: str, command: str = "", fmt: str = "csv") -> Report:
    if fmt == "json":
        doc = json.loads(text)
        return Report(
            doc["command"],
            doc["columns"],
            [[_from_json(v) for v in r] for r in doc["rows"]],
            {k: _from_json(v) for k, v in doc["metadata"].items()},
        )
    lines = list(csv.reader(io.StringIO(text)))
    columns = lines[0]
    rows, meta = [], {}
    for line in lines[1:]:
        # metadata rows are key,value pairs; data rows span every column (never two)
        if len(line) == 2 and len(columns) != 2:
            meta[line[0]] = _parse(line[1])
        else:
            rows.append([_parse(v) for v in line])
    return Report(command, columns, rows, meta)


def read_report(path: str, command: str = "", fmt: str = "csv") -> Report:
    with open(path, encoding="utf-8") as fh:
        return parse_report(fh.read(), command, fmt)


# -- list parsing ----------------------------------------------------------------

def parse_list(text) -> list:
    """``"1,2,3"``; ``"a,...,z"`` (unit steps); ``"a,b,...,z"`` (geometric when ``b/a`` is an integer >= 2 and reaches ``z``, else arithmetic).

    The unicode ellipsis is accepted in place of ``...``.
    """
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    parts = [s.strip() for s in str(text).replace("…", "...").split(",") if s.strip()]
    if "..." not in parts:
        return [_num(s) for s in parts]
    i = parts.index("...")
    if i == 0 or i != len(parts) - 2:
        raise ConfigError(f"malformed list {text!r}")
    head = [_num(s) for s in parts[:i]]
    end = _num(parts[-1])
    if len(head) == 1:
        step = 1.0 if end >= head[0] else -1.0
        return _arith(head[0], step, end)
    a, b = head[0], head[1]
    if a > 0 and b / a >= 2 and float(b / a).is_integer():
        r = b / a
        k = math.log(end / a, r) if end > 0 else -1
        if k >= 0 and abs(k - round(k)) < 1e-9:
            return [a * r ** i for i in range(int(round(k)) + 1)]
    return _arith(a, b - a, end)


def _arith(a, step, end):
    if step == 0:
        raise ConfigError("zero step in list")
    n = int(math.floor((end - a) / step + 1e-9))
    if n < 0:
        raise ConfigError("list end is not reachable")
    return [a + step * i for i in range(n + 1)]


def _num(s: str) -> float:
    s = s.strip()
    try:
        if "/" in s:
            num, den = s.split("/")
            return float(num) / float(den)
        return float(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"not a number: {s!r}") from exc


# -- commands ---------------------------------------------------------------------

def _grid(cfg: RunConfig, N: int, L: float) -> GridSpec:
    N = cfg.N if cfg.N is not None else N
    L = cfg.L if cfg.L is not None else L
    try:
        return GridSpec(cfg.d, int(N), float(L))
    except GridError as exc:
        raise ConfigError(str(exc)) from exc


def _grid_str(g: GridSpec) -> str:
    return f"d={g.d};N={g.N};L={g.L:g}"


def _cmd_sharpness(cfg: RunConfig):
    from . import sharpness as sh

    if cfg.p is None:
        raise ConfigError("sharpness needs p")
    if cfg.d == 1:
        grid = _grid(cfg, 2 ** 14, 2.0)
        n_list = cfg.n_list or [8, 16, 32, 64, 128, 256, 512]
    else:
        grid = _grid(cfg, 256, 1.5)
        n_list = cfg.n_list or [4, 8, 16]
    fam = sh.default_family(tuple(n_list), cfg.d)
    method = None if cfg.norm_method == "none" else cfg.norm_method
    res = sh.sharpness_experiment(cfg.p, cfg.m, fam, sh.default_diffeo(), grid, method)
    rows = [[n, fi, fo, mi, mo, fo / fi] for n, fi, fo, mi, mo in res.rows]
    meta = {
        "fitted_exponent": res.fitted_exponent,
        "theory_exponent": res.theory_exponent,
        "residual": res.fit_residual,
        "grid": _grid_str(grid),
        "p": float(cfg.p),
        "m": float(cfg.m),
    }
    failures = []
    if cfg.expect_min is not None and res.fitted_exponent < cfg.expect_min:
        failures.append(f"fitted_exponent {res.fitted_exponent:.4f} < expected minimum {cfg.expect_min}")
    if cfg.expect_max is not None and res.fitted_exponent > cfg.expect_max:
        failures.append(f"fitted_exponent {res.fitted_exponent:.4f} > expected maximum {cfg.expect_max}")
    return Report("sharpness", list(SHARPNESS_COLUMNS), rows, meta), failures


def _cmd_vdc(cfg: RunConfig):
    from .sharpness import QuadratureError, default_diffeo, diffeo_vdc, vdc_check

    lams = cfg.lambda_list or [10.0, 100.0, 1000.0, 10000.0]
    failures = []
    try:
        fres = vdc_check(lambda t: 0.5 * t * t, (-1.0, 1.0), 2, lams)
        dv = diffeo_vdc(default_diffeo(), lams)
    except QuadratureError as exc:
        return None, [f"quadrature stability: {exc}"]
    rows = [[lam, f, v] for lam, f, v in zip(lams, fres["per_lambda"], dv["per_lambda"])]
    meta = {
        "fresnel_limit": math.sqrt(2 * math.pi),
        "diffeo_sup": dv["sup_scaled"],
        "refinement_change": max(fres["refinement_change"], dv["refinement_change"]),
    }
    if dv["sup_scaled"] > 10:
        failures.append(f"van der Corput constant {dv['sup_scaled']:.3f} > 10")
    return Report("vdc", ["lambda", "fresnel_scaled", "diffeo_scaled"], rows, meta), failures


def _cmd_dilation(cfg: RunConfig):
    from .decomp import DilationIndices, dilate
    from .norms import mp_norm
    from .sharpness import fit_exponent

    grid = _grid(cfg, 2 ** 14, 32.0)
    lams = cfg.lambda_list or [0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0]
    ps = [cfg.p] if cfg.p is not None else [1.0, 2.0, math.inf]
    d = grid.d
    f = sample(lambda t: np.exp(-np.pi * (t * t if d == 1 else np.sum(t * t, axis=-1))), grid)
    rows, meta, failures = [], {}, []
    for p in ps:
        base = mp_norm(f, p).value
        ratios = [(lam, mp_norm(dilate(f, lam), p).value / base) for lam in lams]
        rows += [[p, lam, r] for lam, r in ratios]
        ind = DilationIndices.of(p)
        tag = "inf" if math.isinf(p) else f"{p:g}"
        up = [(l, r) for l, r in ratios if l >= 1]
        down = [(l, r) for l, r in ratios if l <= 1]
        if len(up) >= 3:
            s = fit_exponent(up)["slope"]
            meta[f"slope_up_p{tag}"] = s
            if s > d * ind.mu1 + 0.1:
                failures.append(f"p={tag}: lambda>=1 slope {s:.4f} exceeds d*mu1+0.1 = {d * ind.mu1 + 0.1:.4f}")
        if len(down) >= 3:
            s = fit_exponent(down)["slope"]
            meta[f"slope_down_p{tag}"] = s
            if s < d * ind.mu2 - 0.1:
                failures.append(f"p={tag}: lambda<=1 slope {s:.4f} below d*mu2-0.1 = {d * ind.mu2 - 0.1:.4f}")
        if p == 2:
            err = max(abs(r - l ** (-d / 2)) / l ** (-d / 2) for l, r in ratios)
            if err > 1e-4:
                failures.append(f"p=2 dilation scaling off by {err:.2e}")
    meta["grid"] = _grid_str(grid)
    return Report("dilation", ["p", "lambda", "ratio"], rows, meta), failures


def gabor_setup(grid: GridSpec):
    """Windows and operators used by the Gabor-matrix experiment."""
    from .fio import FioOperator, linear_phase, product_symbol
    from .sharpness import default_diffeo, test_operator
    from .stft import bump_window

    eps = 4.0
    gamma = bump_window(grid, eps / 4)
    g = bump_window(grid, eps / 4, "frequency")
    one = lambda x: np.ones(np.shape(x))
    ops = {
        "linear": FioOperator(linear_phase(1), product_symbol(one, one, 0.0), grid),
        "T_phi": test_operator(default_diffeo(), 0.0, grid),
    }
    return eps, g, gamma, ops


def _cmd_gabor(cfg: RunConfig):
    from .fio import gabor_matrix

    grid = _grid(cfg, 1024, 8.0)
    if grid.d != 1:
        raise ConfigError("gabor-decay runs in d=1")
    eps, g, gamma, ops = gabor_setup(grid)
    ys = np.arange(-2.0, 4.0)
    oms = np.arange(-8.0, 9.0)
    rows, failures = [], []
    for name, T in ops.items():
        M = gabor_matrix(T, g, gamma, ys, oms, 1.0, 1.0)
        E = np.abs(M.entries)
        outside = float("nan")
        if T.symbol.x_support_radius is not None:
            c, R = T.symbol.x_center, T.symbol.x_support_radius
            far = np.abs(M.ys_out - c) > R + eps / 2
            outside = float(E[:, :, far, :].max() / M.peak) if far.any() else 0.0
            if outside > 1e-8:
                failures.append(f"{name}: entries outside the symbol neighbourhood at {outside:.2e} of peak")
        if not M.decay_order >= 4:
            failures.append(f"{name}: decay order {M.decay_order:.3f} < 4")
        rows.append([name, M.decay_order, M.residual, float(M.n_fit), outside])
    meta = {"grid": _grid_str(grid)}
    return Report("gabor-decay", ["operator", "decay_order", "residual", "n_fit", "outside_ratio"], rows, meta), failures


def random_family(grid: GridSpec, count: int, seed: int) -> list:
    """Random smooth functions supported in ``(0, 1)`` (modulated sub-interval bumps)."""
    rng = np.random.default_rng(seed)
    t = grid.axis("time")
    out = []
    for _ in range(count):
        a = rng.uniform(0.0, 0.4)
        b = rng.uniform(0.6, 1.0)
        n = rng.uniform(-16, 16)
        v = interval_bump(t, a, b) * np.exp(2j * np.pi * n * t)
        out.append(SampledFunction(grid, v))
    return out


def _cmd_equivalence(cfg: RunConfig):
    from .norms import equivalence_report, fl_norm, mp_norm
    from .sharpness import default_family, make_fn

    grid = _grid(cfg, 2048, 4.0)
    if grid.d != 1:
        raise ConfigError("equivalence runs in d=1")
    n_list = cfg.n_list or list(range(1, 33))
    p = cfg.p if cfg.p is not None else 1.0
    fam = default_family(tuple(n_list))
    fns = [make_fn(fam, n, grid) for n in n_list]
    labels = list(n_list)
    if cfg.seed is not None:
        extra = random_family(grid, 8, cfg.seed)
        fns += extra
        labels += [float("nan")] * len(extra)
    rep = equivalence_report(fns, p)
    rows = [[lab, fl_norm(f, p).value, mp_norm(f, p).value, r] for lab, f, r in zip(labels, fns, rep.ratios)]
    failures = []
    if p == 2:
        dev = max(abs(r - rep.ratios[0]) for r in rep.ratios)
        if dev > 1e-4:
            failures.append(f"p=2 ratios deviate from a constant by {dev:.2e}")
    elif rep.spread > 10:
        failures.append(f"ratio spread {rep.spread:.3f} > 10")
    meta = {"min": rep.min, "max": rep.max, "spread": rep.spread, "grid": _grid_str(grid), "p": float(p)}
    return Report("equivalence", ["n", "fl", "mp", "ratio"], rows, meta), failures


def orthogonality_operator(grid: GridSpec, m: float = -0.5):
    from .decomp import highpassed
    from .sharpness import default_diffeo, test_operator

    return highpassed(test_operator(default_diffeo(), m, grid))


def _cmd_orthogonality(cfg: RunConfig):
    from .decomp import almost_orthogonality, shell_packets

    grid = _grid(cfg, 4096, 4.0)
    J = cfg.J_max or 6
    K = cfg.K_max or 8
    T = orthogonality_operator(grid)
    r = almost_orthogonality(T, shell_packets(grid, range(1, J + 1)), K, J)
    A = r["matrix"]
    rows = [[float(j + 1), float(k), A[j, k]] for j in range(A.shape[0]) for k in range(A.shape[1])]
    failures = []
    if r["band_width"] > 2:
        failures.append(f"band width {r['band_width']} > 2")
    meta = {"band_width": float(r["band_width"]), "off_band_max": r["off_band_max"], "grid": _grid_str(grid)}
    return Report("orthogonality", ["j", "k", "entry"], rows, meta), failures


def _cmd_partition(cfg: RunConfig):
    from .decomp import lp_system

    grid = _grid(cfg, 4096, 2.0)
    J = cfg.J_max or 8
    try:
        lp = lp_system(J, grid)
    except GridError as exc:
        raise ConfigError(str(exc)) from exc
    dev = lp.partition_deviation()
    full = lp.full_partition_deviation()
    failures = []
    if max(dev, full) > 1e-12:
        failures.append(f"partition of unity deviates by {max(dev, full):.2e}")
    rows = [[float(J), dev, full]]
    return Report("partition-check", ["J_max", "deviation", "full_deviation"], rows, {"grid": _grid_str(grid)}), failures


def _cmd_conjugation(cfg: RunConfig):
    from .decomp import LPSystem, conjugation_residual, shell_packets

    grid = _grid(cfg, 4096, 4.0)
    js = [int(j) for j in (cfg.j_list or [2, 4, 6])]
    T = orthogonality_operator(grid)
    lp = LPSystem(max(max(js), 1), grid)
    rows, failures = [], []
    for j in js:
        u = shell_packets(grid, [j])
        res = conjugation_residual(T, j, u, lp)
        rows.append([float(j), 2.0 ** (j / 2), res])
        tol = 1e-6 if j % 2 == 0 else 1e-4
        if res > tol:
            failures.append(f"j={j}: conjugation residual {res:.2e} > {tol:g}")
    return Report("conjugation", ["j", "lambda", "residual"], rows, {"grid": _grid_str(grid)}), failures


_HANDLERS = {
    "sharpness": _cmd_sharpness,
    "vdc": _cmd_vdc,
    "dilation": _cmd_dilation,
    "gabor-decay": _cmd_gabor,
    "equivalence": _cmd_equivalence,
    "orthogonality": _cmd_orthogonality,
    "partition-check": _cmd_partition,
    "conjugation": _cmd_conjugation,
}


def run(cfg: RunConfig):
    """Execute a config; returns ``(report or None, exit_code, messages)``."""
    if cfg.command not in _HANDLERS:
        return None, 2, [f"unknown command {cfg.command!r}; choose from {', '.join(COMMANDS)}"]
    if cfg.N is not None and (cfg.N < 2 or cfg.N & (cfg.N - 1)):
        return None, 2, [f"N must be a power of two, got {cfg.N}"]
    if cfg.d not in (1, 2):
        return None, 2, [f"d must be 1 or 2, got {cfg.d}"]
    try:
        report, failures = _HANDLERS[cfg.command](cfg)
    except ConfigError as exc:
        return None, 2, [str(exc)]
    except (GridError, ValueError) as exc:
        return None, 2, [f"invalid configuration: {exc}"]
    return report, (1 if failures else 0), failures


# -- argument handling ------------------------------------------------------------

_KEYS = {
    "d": ("d", int),
    "N": ("N", int),
    "L": ("L", _num),
    "p": ("p", _num),
    "m": ("m", _num),
    "n": ("n_list", parse_list),
    "lambda": ("lambda_list", parse_list),
    "j": ("j_list", parse_list),
    "Jmax": ("J_max", int),
    "Kmax": ("K_max", int),
    "output": ("output_path", str),
    "format": ("format", str),
    "seed": ("seed", int),
    "norm_method": ("norm_method", str),
    "expect_min": ("expect_min", _num),
    "expect_max": ("expect_max", _num),
}


def read_config_file(path: str) -> dict:
    """``key=value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for raw in lines:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line without '=': {raw.strip()!r}")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fiolab", description="Numerical experiments for Fourier integral operators on modulation spaces.")
    sub = ap.add_subparsers(dest="action")
    r = sub.add_parser("run", help="run one experiment")
    r.add_argument("command", help="one of: " + ", ".join(COMMANDS))
    r.add_argument("--config", help="key=value file; flags override its entries")
    S = argparse.SUPPRESS
    r.add_argument("--d", default=S)
    r.add_argument("--N", default=S)
    r.add_argument("--L", default=S)
    r.add_argument("--p", default=S)
    r.add_argument("--m", default=S)
    r.add_argument("--n", default=S, help="list, e.g. 8,16,...,512")
    r.add_argument("--lambda", dest="lambda", default=S)
    r.add_argument("--j", default=S)
    r.add_argument("--Jmax", default=S)
    r.add_argument("--Kmax", default=S)
    r.add_argument("--output", default=S)
    r.add_argument("--format", default=S, choices=("csv", "json"))
    r.add_argument("--seed", default=S)
    r.add_argument("--norm-method", dest="norm_method", default=S, choices=("decomp", "stft", "none"))
    r.add_argument("--expect-min", dest="expect_min", default=S)
    r.add_argument("--expect-max", dest="expect_max", default=S)
    return ap


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    values = read_config_file(ns.config) if getattr(ns, "config", None) else {}
    values.pop("command", None)
    for k in _KEYS:
        if hasattr(ns, k):
            values[k] = getattr(ns, k)
    kwargs = {}
    for k, v in values.items():
        if k not in _KEYS:
            raise ConfigError(f"unknown setting {k!r}")
        name, conv = _KEYS[k]
        kwargs[name] = conv(v)
    if kwargs.get("format", "csv") not in ("csv", "json"):
        raise ConfigError(f"unknown format {kwargs['format']!r}")
    return RunConfig(command=ns.command, **kwargs)


def main(argv=None) -> int:
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    if ns.action != "run":
        ap.print_usage(sys.stderr)
        return 2
    if ns.command not in COMMANDS:
        print(f"unknown command {ns.command!r}", file=sys.stderr)
        ap.print_usage(sys.stderr)
        return 2
    try:
        cfg = config_from_args(ns)
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    report, code, messages = run(cfg)
    for msg in messages:
        print(("FAILED: " if code == 1 else "error: ") + msg, file=sys.stderr)
    if report is None:
        return code if code else 2
    try:
        if cfg.output_path:
            write_report(report, cfg.output_path, cfg.format)
        else:
            sys.stdout.write(render_report(report, cfg.format))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return code


if __name__ == "__main__":
    sys.exit(main())
