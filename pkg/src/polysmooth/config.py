"""Experiment configuration files.

Grammar (one setting per line, ``#`` starts a comment)::

    line       := key "=" value
    key        := name ("." name)*
    value      := expression | text

Numeric settings accept arithmetic expressions over decimal literals, the
constant ``pi``, the operators ``+ - * / **``, list literals ``[a, b]`` and
``[[a, b], [c, d]]``, and the helpers ``diag(a, b, ...)`` and ``eye(n)``::

    model = vdp
    vdp.frequency = 1.85 * pi / 2
    process_noise = 1e-3 * eye(3)
    initial_covariance = diag(10, 10, 0.5)
    strategies = gi, ckf, ukf, ekf

A generic polynomial model uses ``model = polynomial`` and one line per
component, ``f1 = ...``, ``f2 = ...``, ``h1 = ...``, written in the text
format of :func:`polysmooth.polynomial.parse_polynomial`.
"""

import ast
import dataclasses
import operator
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import ConfigError, PolysmoothError
from .models import StateSpaceModel, vdp_model
from .polynomial import PolynomialMap, format_polynomial, parse_polynomial
from .strategies import STRATEGIES

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_CONSTANTS = {"pi": np.pi}


def _diag(*values):
    return np.diag(np.array(values, dtype=float))


def _eye(n):
    if int(n) != n or n < 1:
        raise ConfigError(f"eye() needs a positive integer, got {n}")
    return np.eye(int(n))


_FUNCTIONS = {"diag": _diag, "eye": _eye}


def _eval(node):
    if isinstance(node, ast.Expression):
        return _eval(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return node.value
    if isinstance(node, ast.Name) and node.id in _CONSTANTS:
        return _CONSTANTS[node.id]
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _eval(node.operand)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval(node.left), _eval(node.right))
    if isinstance(node, ast.List):
        return np.array([_eval(e) for e in node.elts], dtype=float)
    if (
        isinstance(node, ast.Call)
        and isinstance(node.func, ast.Name)
        and node.func.id in _FUNCTIONS
        and not node.keywords
    ):
        return _FUNCTIONS[node.func.id](*[_eval(a) for a in node.args])
    raise ConfigError(f"unsupported expression element: {ast.dump(node)}")


def evaluate_expression(text):
    """Evaluate a numeric config expression to a float or ndarray."""
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {text!r}: {exc.msg}") from None
    value = _eval(tree)
    return np.asarray(value, dtype=float) if isinstance(value, np.ndarray) else float(value)


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Either the Van der Pol shorthand or an explicit polynomial model."""

    kind: str
    process_noise: np.ndarray
    measurement_noise: np.ndarray
    amplitude: float = 100.0
    frequency: float = 1.85 * np.pi / 2
    dt: float = 0.01
    transition: tuple = ()
    measurement: tuple = ()

    def build(self):
        try:
            if self.kind == "vdp":
                return vdp_model(
                    self.amplitude, self.frequency, self.dt, self.process_noise, self.measurement_noise
                )
            n = len(self.transition)
            f = PolynomialMap([parse_polynomial(t, n) for t in self.transition], arity=n)
            h = PolynomialMap([parse_polynomial(t, n) for t in self.measurement], arity=n)
            return StateSpaceModel(f, h, self.process_noise, self.measurement_noise)
        except (PolysmoothError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid model: {exc}") from exc


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    model: ModelSpec
    steps: int
    runs: int
    seed: int
    true_initial_state: np.ndarray
    initial_mean: np.ndarray
    initial_covariance: np.ndarray
    strategies: tuple = ("gi", "ckf", "ukf", "ekf")
    kappa: float = -1.0
    output: str = "results"

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def validate(self):
        """Check invariants; returns the built model."""
        if self.runs < 1:
            raise ConfigError(f"runs must be >= 1, got {self.runs}")
        if self.steps < 1:
            raise ConfigError(f"steps must be >= 1, got {self.steps}")
        unknown = [s for s in self.strategies if s not in STRATEGIES]
        if unknown:
            raise ConfigError(f"unknown strategies {unknown}; choose from {list(STRATEGIES)}")
        model = self.model.build()
        n = model.state_dim
        for name in ("true_initial_state", "initial_mean"):
            v = getattr(self, name)
            if v.shape != (n,):
                raise ConfigError(f"{name} must have length {n}, got shape {v.shape}")
        P0 = self.initial_covariance
        if P0.shape != (n, n):
            raise ConfigError(f"initial_covariance must be {n}x{n}, got {P0.shape}")
        if not np.allclose(P0, P0.T) or np.linalg.eigvalsh(P0).min() < 0:
            raise ConfigError("initial_covariance must be symmetric positive semi-definite")
        if "ukf" in self.strategies and n + self.kappa <= 0:
            raise ConfigError(f"ukf.kappa={self.kappa} needs n + kappa > 0 for n={n}")
        return model

    def strategy_options(self, name):
        return {"kappa": self.kappa} if name == "ukf" else {}


_COMPONENT_KEY = re.compile(r"^([fh])([0-9]+)$")
_NUMERIC = {
    "vdp.amplitude",
    "vdp.frequency",
    "vdp.dt",
    "process_noise",
    "measurement_noise",
    "steps",
    "runs",
    "seed",
    "true_initial_state",
    "initial_mean",
    "initial_covariance",
    "ukf.kappa",
}
_TEXT = {"model", "strategies", "output"}
_REQUIRED = {
    "model",
    "process_noise",
    "measurement_noise",
    "steps",
    "runs",
    "seed",
    "true_initial_state",
    "initial_mean",
    "initial_covariance",
}


def _as_int(value, key):
    if np.ndim(value) != 0 or float(value) != int(value):
        raise ConfigError(f"{key} must be an integer, got {value}")
    return int(value)


def parse_config(text, source="<config>"):
    raw, components = {}, {"f": {}, "h": {}}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        m = _COMPONENT_KEY.match(key)
        if m:
            components[m.group(1)][int(m.group(2))] = value
            continue
        if key not in _NUMERIC and key not in _TEXT:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            raw[key] = evaluate_expression(value) if key in _NUMERIC else value
        except ConfigError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}") from None
    missing = sorted(_REQUIRED - raw.keys())
    if missing:
        raise ConfigError(f"{source}: missing keys {', '.join(missing)}")

    kind = raw["model"]
    if kind not in ("vdp", "polynomial"):
        raise ConfigError(f"{source}: model must be 'vdp' or 'polynomial', got {kind!r}")

    def ordered(d, letter):
        idx = sorted(d)
        if idx != list(range(1, len(idx) + 1)):
            raise ConfigError(f"{source}: {letter}-components must be numbered 1..k, got {idx}")
        return tuple(d[i] for i in idx)

    spec_kw = dict(
        kind=kind,
        process_noise=np.atleast_2d(raw["process_noise"]),
        measurement_noise=np.atleast_2d(raw["measurement_noise"]),
    )
    if kind == "vdp":
        if components["f"] or components["h"]:
            raise ConfigError(f"{source}: f/h components are not used with model = vdp")
        for k in ("amplitude", "frequency", "dt"):
            if f"vdp.{k}" in raw:
                spec_kw[k] = float(raw[f"vdp.{k}"])
    else:
        spec_kw["transition"] = ordered(components["f"], "f")
        spec_kw["measurement"] = ordered(components["h"], "h")
        if not spec_kw["transition"] or not spec_kw["measurement"]:
            raise ConfigError(f"{source}: polynomial model needs f1.. and h1.. lines")

    strategies = raw.get("strategies", "gi, ckf, ukf, ekf")
    return ExperimentConfig(
        model=ModelSpec(**spec_kw),
        steps=_as_int(raw["steps"], "steps"),
        runs=_as_int(raw["runs"], "runs"),
        seed=_as_int(raw["seed"], "seed"),
        true_initial_state=np.atleast_1d(raw["true_initial_state"]),
        initial_mean=np.atleast_1d(raw["initial_mean"]),
        initial_covariance=np.atleast_2d(raw["initial_covariance"]),
        strategies=parse_strategies(strategies),
        kappa=float(raw.get("ukf.kappa", -1.0)),
        output=raw.get("output", "results"),
    )


def parse_strategies(text):
    return tuple(s.strip() for s in text.split(",") if s.strip())


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, source=str(path))


def _fmt(value):
    a = np.asarray(value, dtype=float)
    if a.ndim == 0:
        return repr(float(a))
    if a.ndim == 1:
        return "[" + ", ".join(repr(float(v)) for v in a) + "]"
    return "[" + ", ".join(_fmt(row) for row in a) + "]"


def format_config(config):
    """Render a config in the file format; ``parse_config`` reads it back unchanged."""
    spec = config.model
    lines = [f"model = {spec.kind}"]
    if spec.kind == "vdp":
        lines += [
            f"vdp.amplitude = {_fmt(spec.amplitude)}",
            f"vdp.frequency = {_fmt(spec.frequency)}",
            f"vdp.dt = {_fmt(spec.dt)}",
        ]
    else:
        n = len(spec.transition)
        lines += [f"f{i} = {format_polynomial(parse_polynomial(t, n))}" for i, t in enumerate(spec.transition, 1)]
        lines += [f"h{i} = {format_polynomial(parse_polynomial(t, n))}" for i, t in enumerate(spec.measurement, 1)]
    lines += [
        f"process_noise = {_fmt(spec.process_noise)}",
        f"measurement_noise = {_fmt(spec.measurement_noise)}",
        f"steps = {config.steps}",
        f"runs = {config.runs}",
        f"seed = {config.seed}",
        f"true_initial_state = {_fmt(config.true_initial_state)}",
        f"initial_mean = {_fmt(config.initial_mean)}",
        f"initial_covariance = {_fmt(config.initial_covariance)}",
        f"strategies = {', '.join(config.strategies)}",
        f"ukf.kappa = {_fmt(config.kappa)}",
        f"output = {config.output}",
    ]
    return "\n".join(lines) + "\n"
