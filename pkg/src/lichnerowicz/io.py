"""Config files, coefficient specs, CSV field dumps and reports.

Config, mesh and coefficient files are YAML.  Parse and schema errors are
reported as ``path:line: message``.

Mesh description::

    kind: radial            # interval | radial | rectangle
    n: 2000
    r0: 1.0
    R: 20.0
    m: 3
    warp: identity          # identity | constant | sinh | cosh | exp | [[r, value], ...]
    boundary_scheme: balance

``interval`` takes ``length``, ``n``, ``left``, ``right`` (boundary classes);
``rectangle`` takes ``lx``, ``ly``, ``nx``, ``ny`` and ``sides`` mapping
``left/right/bottom/top`` to a class.

Coefficient file::

    a: {profile: inverse_square, scale: -1.0}
    b: {bump: {base: 1.0, amplitude: -3.0, center: 2.0, half_width: 0.25}}
    c: 1.0
    sigma: 5
    tau: -7
    g: [[1.0, 0.5], [-1.0, 3.0]]

A coefficient is a number, ``{constant: x}``, ``{profile: name, ...}`` with
``name`` in ``constant | inverse_square | power | exponential`` evaluated at
the node radius, ``{bump: ...}``, or ``{table: [v_0, ..., v_{n-1}]}``.
"""
from __future__ import annotations

import csv
import io
import math
import os
import re
import tempfile
from pathlib import Path
from typing import Any, Callable

import numpy as np
import yaml

from .errors import InvalidArgument
from .fields import Exponents, PowerSum, ProblemSpec
from .mesh import DiscreteDomain, build_interval_mesh, build_radial_mesh, build_rectangle_mesh

REPORT_VERSION = "lichnerowicz-report/1"


class ConfigError(InvalidArgument):
    """Invalid config file; the message carries ``path:line``."""


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    """Write through a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# YAML with line numbers


class Located(dict):
    """Mapping that remembers the 1-based line of each key."""

    source: str = "<config>"
    line: int = 0
    key_lines: dict


class _LineLoader(yaml.SafeLoader):
    pass


def _construct_mapping(loader: _LineLoader, node: yaml.MappingNode) -> Located:
    loader.flatten_mapping(node)
    out = Located()
    out.source = loader.name
    out.line = node.start_mark.line + 1
    out.key_lines = {}
    for k_node, v_node in node.value:
        key = loader.construct_object(k_node, deep=True)
        out[key] = loader.construct_object(v_node, deep=True)
        out.key_lines[key] = k_node.start_mark.line + 1
    return out


_LineLoader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)


def _where(mapping: Any, key: Any = None) -> str:
    if isinstance(mapping, Located):
        line = mapping.key_lines.get(key, mapping.line) if key is not None else mapping.line
        return f"{mapping.source}:{line}"
    return "<config>"


def config_error(mapping: Any, key: Any, message: str) -> ConfigError:
    where = _where(mapping, key)
    return ConfigError(f"{where}: {message}", location=where)


def load_yaml_text(text: str, source: str = "<config>") -> Any:
    loader = _LineLoader(text)
    loader.name = source
    try:
        return loader.get_single_data()
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line = mark.line + 1 if mark is not None else 0
        raise ConfigError(f"{source}:{line}: {exc.problem or exc}", location=f"{source}:{line}") from None
    finally:
        loader.dispose()


def load_yaml(path: str | os.PathLike) -> Any:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read file ({exc.strerror})", location=str(path)) from None
    return load_yaml_text(text, str(path))


def _require_mapping(obj: Any, what: str, parent: Any = None, key: Any = None) -> dict:
    if not isinstance(obj, dict):
        raise config_error(parent, key, f"{what} must be a mapping")
    return obj


def _number(mapping: dict, key: str, default: Any = None, kind: Callable = float,
            positive: bool = False) -> Any:
    if key not in mapping:
        if default is None:
            raise config_error(mapping, None, f"missing key {key!r}")
        return default
    val = mapping[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise config_error(mapping, key, f"{key!r} must be a number")
    if kind is int and int(val) != val:
        raise config_error(mapping, key, f"{key!r} must be an integer")
    val = kind(val)
    if not math.isfinite(val) or (positive and not val > 0):
        raise config_error(mapping, key, f"{key!r} must be {'positive' if positive else 'finite'}")
    return val


def _check_keys(mapping: dict, allowed: set[str]) -> None:
    for key in mapping:
        if key not in allowed:
            raise config_error(mapping, key, f"unknown key {key!r}; expected one of {sorted(allowed)}")


# ---------------------------------------------------------------------------
# meshes


_WARPS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "identity": lambda r: r,
    "constant": lambda r: np.ones_like(r),
    "sinh": np.sinh,
    "cosh": np.cosh,
    "exp": np.exp,
}


def _warp(mapping: dict) -> Callable[[np.ndarray], np.ndarray]:
    spec = mapping.get("warp", "identity")
    if isinstance(spec, str):
        if spec not in _WARPS:
            raise config_error(mapping, "warp", f"unknown warp {spec!r}; expected one of {sorted(_WARPS)}")
        return _WARPS[spec]
    try:
        table = np.asarray(spec, dtype=float)
    except (TypeError, ValueError):
        table = None
    if table is None or table.ndim != 2 or table.shape[1] != 2 or table.shape[0] < 2:
        raise config_error(mapping, "warp", "warp table must be a list of [r, value] pairs")
    if np.any(np.diff(table[:, 0]) <= 0):
        raise config_error(mapping, "warp", "warp table radii must increase")
    r_tab, w_tab = table[:, 0].copy(), table[:, 1].copy()
    return lambda r: np.interp(r, r_tab, w_tab)


def _named_key(mapping, message: str):
    # first config key that the builder message names as a word
    words = set(re.findall(r"[A-Za-z_][A-Za-z0-9_]*", message))
    for key in mapping:
        if key != "kind" and key in words:
            return key
    return None


def mesh_from_dict(mapping: dict) -> DiscreteDomain:
    mapping = _require_mapping(mapping, "mesh")
    kind = mapping.get("kind")
    scheme = mapping.get("boundary_scheme", "balance")
    try:
        if kind == "interval":
            _check_keys(mapping, {"kind", "length", "n", "left", "right", "boundary_scheme"})
            return build_interval_mesh(_number(mapping, "length", 1.0, positive=True),
                                       _number(mapping, "n", kind=int), mapping.get("left", "boundary0"),
                                       mapping.get("right", "boundary1"), scheme)
        if kind == "radial":
            _check_keys(mapping, {"kind", "n", "r0", "R", "m", "warp", "boundary_scheme"})
            return build_radial_mesh(_number(mapping, "r0"), _number(mapping, "R"), _number(mapping, "n", kind=int),
                                     _warp(mapping), _number(mapping, "m", 3, kind=int), scheme)
        if kind == "rectangle":
            _check_keys(mapping, {"kind", "lx", "ly", "nx", "ny", "sides", "boundary_scheme"})
            sides = mapping.get("sides")
            if sides is not None:
                _require_mapping(sides, "sides", mapping, "sides")
            return build_rectangle_mesh(_number(mapping, "lx", 1.0, positive=True),
                                        _number(mapping, "ly", 1.0, positive=True),
                                        _number(mapping, "nx", kind=int), _number(mapping, "ny", kind=int),
                                        dict(sides) if sides is not None else None, scheme)
    except ConfigError:
        raise
    except InvalidArgument as exc:
        raise config_error(mapping, _named_key(mapping, exc.message), f"invalid mesh: {exc.message}") from None
    raise config_error(mapping, "kind", f"unknown mesh kind {kind!r}; expected interval, radial or rectangle")


# ---------------------------------------------------------------------------
# coefficients


def _profile(spec: dict, r: np.ndarray) -> np.ndarray:
    name = spec.get("profile")
    scale = _number(spec, "scale", 1.0)
    if name == "constant":
        _check_keys(spec, {"profile", "scale"})
        return np.full_like(r, scale)
    if name == "inverse_square":
        _check_keys(spec, {"profile", "scale"})
        if np.any(r <= 0):
            raise config_error(spec, "profile", "inverse_square needs positive node radii")
        return scale / r**2
    if name == "power":
        _check_keys(spec, {"profile", "scale", "power"})
        p = _number(spec, "power")
        if p < 0 and np.any(r <= 0):
            raise config_error(spec, "profile", "negative power needs positive node radii")
        return scale * r**p
    if name == "exponential":
        _check_keys(spec, {"profile", "scale", "length"})
        return scale * np.exp(-r / _number(spec, "length", 1.0, positive=True))
    raise config_error(spec, "profile", f"unknown profile {name!r}")


def coefficient_field(spec: Any, domain: DiscreteDomain, parent: Any = None, key: Any = None) -> np.ndarray:
    """Evaluate a coefficient spec at every node."""
    n = domain.n
    if isinstance(spec, bool):
        raise config_error(parent, key, "coefficient must be a number or a mapping")
    if isinstance(spec, (int, float)):
        return np.full(n, float(spec))
    spec = _require_mapping(spec, "coefficient", parent, key)
    if len(spec) == 0:
        raise config_error(parent, key, "empty coefficient spec")
    if "constant" in spec:
        _check_keys(spec, {"constant"})
        return np.full(n, _number(spec, "constant"))
    if "profile" in spec:
        return _profile(spec, domain.radius)
    if "bump" in spec:
        _check_keys(spec, {"bump"})
        bump = _require_mapping(spec["bump"], "bump", spec, "bump")
        _check_keys(bump, {"base", "amplitude", "center", "half_width"})
        r = domain.radius
        inside = np.abs(r - _number(bump, "center")) <= _number(bump, "half_width", positive=True)
        return _number(bump, "base", 1.0) + _number(bump, "amplitude") * inside
    if "table" in spec:
        _check_keys(spec, {"table"})
        try:
            vals = np.asarray(spec["table"], dtype=float)
        except (TypeError, ValueError):
            raise config_error(spec, "table", "table entries must be numbers") from None
        if vals.shape != (n,):
            raise config_error(spec, "table", f"table has {vals.size} entries, mesh has {n} nodes")
        if not np.all(np.isfinite(vals)):
            raise config_error(spec, "table", "table entries must be finite")
        return vals
    raise config_error(spec, next(iter(spec)), f"unknown coefficient form {next(iter(spec))!r}")


def problem_from_dict(mapping: dict, domain: DiscreteDomain) -> ProblemSpec:
    mapping = _require_mapping(mapping, "coefficients")
    _check_keys(mapping, {"a", "b", "c", "sigma", "tau", "g"})
    fields = {}
    for name, default in (("a", 0.0), ("b", 1.0), ("c", 1.0)):
        fields[name] = coefficient_field(mapping.get(name, default), domain, mapping, name)
    g_spec = mapping.get("g", [])
    if not isinstance(g_spec, list):
        raise config_error(mapping, "g", "g must be a list of [coefficient, exponent] pairs")
    terms = []
    for item in g_spec:
        if not isinstance(item, list) or len(item) != 2 or isinstance(item[1], bool) \
                or not isinstance(item[1], (int, float)):
            raise config_error(mapping, "g", "each g term must be [coefficient, exponent]")
        terms.append((coefficient_field(item[0], domain, mapping, "g"), float(item[1])))
    try:
        exps = Exponents(_number(mapping, "sigma"), _number(mapping, "tau"))
        g = PowerSum.from_terms(terms, domain.n) if terms else None
        return ProblemSpec(domain, fields["a"], fields["b"], fields["c"], exps, g)
    except ConfigError:
        raise
    except InvalidArgument as exc:
        raise config_error(mapping, None, exc.message) from None


def _plain_array(x: np.ndarray) -> list[float]:
    return [float(v) for v in np.asarray(x, dtype=float) + 0.0]


def problem_to_dict(spec: ProblemSpec) -> dict:
    """Coefficient dump with every field as a per-node table."""
    if not isinstance(spec.g, PowerSum):
        raise InvalidArgument("only power-sum boundary nonlinearities can be dumped")
    return {"a": {"table": _plain_array(spec.a)}, "b": {"table": _plain_array(spec.b)},
            "c": {"table": _plain_array(spec.c)}, "sigma": float(spec.sigma), "tau": float(spec.tau),
            "g": [[{"table": _plain_array(c)}, float(q)] for c, q in spec.g.terms]}


# ---------------------------------------------------------------------------
# run config


class RunConfig:
    """Parsed run config: mesh, problem and solver options."""

    SOLVER_KEYS = {"tol", "max_iter", "theta", "exhaustion", "exhaustion_policy", "cutoff", "mode",
                   "residual_threshold", "check_hypotheses", "override"}

    def __init__(self, raw: dict, base_dir: Path) -> None:
        _check_keys(raw, {"mesh", "coefficients", "solver", "eigen", "version"})
        self.raw = raw
        self.base_dir = base_dir
        self.mesh_raw = self._section(raw, "mesh")
        self.coef_raw = self._section(raw, "coefficients", required=False)
        solver = raw.get("solver") or {}
        _require_mapping(solver, "solver", raw, "solver")
        _check_keys(solver, self.SOLVER_KEYS)
        self.solver = solver
        self.tol = _number(solver, "tol", 1e-8, positive=True)
        self.max_iter = _number(solver, "max_iter", 20000, kind=int, positive=True)
        theta = solver.get("theta", "auto")
        if theta != "auto":
            if isinstance(theta, bool) or not isinstance(theta, (int, float)) or not 0 < theta <= 1:
                raise config_error(solver, "theta", "theta must be 'auto' or a number in (0, 1]")
            theta = float(theta)
        self.theta = theta
        self.exhaustion = _number(solver, "exhaustion", 1, kind=int, positive=True)
        self.exhaustion_policy = solver.get("exhaustion_policy", "radius")
        self.cutoff = solver.get("cutoff", "linear")
        if self.cutoff not in ("linear", "smooth"):
            raise config_error(solver, "cutoff", "cutoff must be 'linear' or 'smooth'")
        self.mode = solver.get("mode", "sequential")
        if self.mode not in ("sequential", "independent"):
            raise config_error(solver, "mode", "mode must be 'sequential' or 'independent'")
        self.residual_threshold = _number(solver, "residual_threshold", 10 * self.tol, positive=True)
        self.check_hypotheses = bool(solver.get("check_hypotheses", True))
        override = solver.get("override", [])
        if not isinstance(override, list) or not all(isinstance(o, str) for o in override):
            raise config_error(solver, "override", "override must be a list of hypothesis names")
        self.override = tuple(override)
        self.eigen = raw.get("eigen") or {}
        _require_mapping(self.eigen, "eigen", raw, "eigen")
        _check_keys(self.eigen, {"kind", "region", "a"})

    def _section(self, raw: dict, key: str, required: bool = True):
        if key not in raw:
            if required:
                raise config_error(raw, None, f"missing section {key!r}")
            return None
        val = raw[key]
        if isinstance(val, str):
            path = Path(val)
            if not path.is_absolute():
                path = self.base_dir / path
            return _require_mapping(load_yaml(path), key, raw, key)
        return _require_mapping(val, key, raw, key)

    def domain(self) -> DiscreteDomain:
        return mesh_from_dict(self.mesh_raw)

    def problem(self, domain: DiscreteDomain) -> ProblemSpec:
        if self.coef_raw is None:
            raise config_error(self.raw, None, "missing section 'coefficients'")
        return problem_from_dict(self.coef_raw, domain)


def load_config(path: str | os.PathLike) -> RunConfig:
    path = Path(path)
    raw = load_yaml(path)
    return RunConfig(_require_mapping(raw, "config"), path.parent)


# ---------------------------------------------------------------------------
# CSV and reports


def _coord_columns(domain: DiscreteDomain) -> tuple[list[str], np.ndarray]:
    if domain.coords is None:
        return [], np.zeros((domain.n, 0))
    c = np.asarray(domain.coords, dtype=float)
    if c.ndim == 1:
        c = c[:, None]
    names = ["x", "y", "z"][: c.shape[1]] if c.shape[1] <= 3 else [f"x{i}" for i in range(c.shape[1])]
    return names, c


def field_csv(domain: DiscreteDomain, columns: dict[str, np.ndarray]) -> str:
    """CSV text with ``node``, coordinates, then the named value columns."""
    names, coords = _coord_columns(domain)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["node", *names, *columns])
    cols = [np.asarray(v, dtype=float) for v in columns.values()]
    for i in range(domain.n):
        w.writerow([i, *(repr(float(x)) for x in coords[i]), *(repr(float(c[i])) for c in cols)])
    return buf.getvalue()


def write_field_csv(path, domain: DiscreteDomain, columns: dict[str, np.ndarray]) -> None:
    atomic_write_text(path, field_csv(domain, columns))


def read_field_csv(path, column: str = "value") -> np.ndarray:
    """Read one value column of a field CSV, ordered by node id."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read file ({exc.strerror})", location=str(path)) from None
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or "node" not in rows[0]:
        raise ConfigError(f"{path}:1: missing header with a 'node' column", location=f"{path}:1")
    header = rows[0]
    col = column if column in header else header[-1]
    ni, vi = header.index("node"), header.index(col)
    nodes, vals = [], []
    for line, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        try:
            nodes.append(int(row[ni]))
            vals.append(float(row[vi]))
        except (ValueError, IndexError):
            raise ConfigError(f"{path}:{line}: malformed row", location=f"{path}:{line}") from None
    nodes_a = np.asarray(nodes)
    if nodes_a.size and not np.array_equal(np.sort(nodes_a), np.arange(nodes_a.size)):
        raise ConfigError(f"{path}: node ids must be 0..n-1", location=str(path))
    out = np.empty(nodes_a.size)
    out[nodes_a] = vals
    return out


def gaps_csv(gaps: list[tuple[float, float]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["iteration", "gap_lower", "gap_upper"])
    for k, (lo, hi) in enumerate(gaps, start=1):
        w.writerow([k, repr(float(lo)), repr(float(hi))])
    return buf.getvalue()


def jsonable(obj: Any) -> Any:
    """Plain Python data: numpy scalars and arrays converted, non-finite floats as strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def render_report(command: str, body: dict) -> str:
    """Versioned header line followed by sorted-key YAML."""
    data = {"command": command, **jsonable(body)}
    return f"# {REPORT_VERSION}\n" + yaml.safe_dump(data, sort_keys=True, default_flow_style=False, width=100)


def dump_yaml(data: Any) -> str:
    return yaml.safe_dump(jsonable(data), sort_keys=True, default_flow_style=None, width=100)
