"""Run specifications: JSON schema, defaults, parsing and object building."""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass

from jsonschema import Draft202012Validator

from .discrete import IterationConfig, lambda_seq_from_dict
from .errors import InputError
from .model import ProblemInstance, schedule_from_dict
from .ode import IntegratorConfig

__all__ = ["SCHEMA", "MODES", "SpecError", "RunSpec", "parse_spec", "load_spec"]

MODES = ["check", "solve-ode", "solve-iter", "solve-banach", "solve-he", "certify", "reproduce"]

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_vector = {"type": "array", "items": _num, "minItems": 1}
_points = {"type": "array", "items": _vector, "minItems": 1}


def _variants(variants):
    """Object schema discriminated on ``kind`` with per-variant properties."""
    rules = []
    for kind, (props, required) in variants.items():
        rules.append(
            {
                "if": {"properties": {"kind": {"const": kind}}, "required": ["kind"]},
                "then": {
                    "properties": {"kind": True, **props},
                    "required": ["kind", *required],
                    "additionalProperties": False,
                },
            }
        )
    return {
        "type": "object",
        "properties": {"kind": {"enum": list(variants)}},
        "required": ["kind"],
        "allOf": rules,
    }


_set = _variants(
    {
        "ball": ({"center": _vector, "radius": _pos}, ["center", "radius"]),
        "box": ({"lower": _vector, "upper": _vector}, ["lower", "upper"]),
        "interval": ({"lower": _num, "upper": _num}, ["lower", "upper"]),
        "halfspace": ({"normal": _vector, "offset": _num}, ["normal", "offset"]),
        "simplex": ({"dim": {"type": "integer", "minimum": 1}, "scale": _pos}, ["dim"]),
    }
)

_declared = {"L": _nonneg, "beta": _nonneg}
_mapping = _variants(
    {
        "affine": ({"matrix": {"type": "array", "items": _vector, "minItems": 1}, "shift": _vector, **_declared}, ["matrix"]),
        "scaled_identity": ({"factor": _num, "dim": {"type": "integer", "minimum": 1}, **_declared}, ["factor"]),
        "componentwise": (
            {
                "functions": {"anyOf": [{"type": "string"}, {"type": "array", "items": {"type": "string"}, "minItems": 1}]},
                "dim": {"type": "integer", "minimum": 1},
                **_declared,
            },
            ["functions"],
        ),
    }
)

_moving = _variants(
    {
        "translation": ({"shift_map": _mapping, "base": _set}, ["shift_map", "base"]),
        "constant": ({"base": _set}, ["base"]),
    }
)

_schedule = _variants(
    {
        "constant": ({"gain": _pos}, ["gain"]),
        "polynomial": ({"a": _pos, "b": _nonneg, "p": _nonneg}, ["a"]),
    }
)

_lambda_seq = _variants(
    {
        "constant": ({"value": _pos}, ["value"]),
        "cyclic": ({"values": {"type": "array", "items": _pos, "minItems": 1}}, ["values"]),
        "uniform": ({"A": _pos, "B": _pos, "seed": {"type": "integer", "minimum": 0}}, ["A", "B", "seed"]),
    }
)


def _obj(props, required=()):
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


SCHEMA = _obj(
    {
        "name": {"type": "string"},
        "problem": _obj(
            {"dim": {"type": "integer", "minimum": 1}, "mapping": _mapping, "moving_set": _moving, "alpha": _pos},
            ["dim", "mapping", "moving_set", "alpha"],
        ),
        "solver": _obj(
            {
                "mode": {"enum": MODES},
                "schedule": _schedule,
                "lambda_seq": _lambda_seq,
                "bounds": _obj({"A": _pos, "B": _pos}, ["A", "B"]),
                "integrator": _obj(
                    {
                        "method": {"enum": ["rk4", "euler"]},
                        "base_step": _pos,
                        "t0": _nonneg,
                        "t_end": _pos,
                        "record_every": {"type": "integer", "minimum": 1},
                        "stiffness_cap": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                        "divergence_radius": _pos,
                    }
                ),
                "iteration": _obj({"h": _pos, "tol": _nonneg, "max_iter": {"type": "integer", "minimum": 1}}),
                "x0": _points,
                "x_star": _vector,
                "points": _points,
                "grid": _obj({"lower": _vector, "upper": _vector, "resolution": _pos}, ["lower", "upper"]),
                "seed": {"type": "integer", "minimum": 0},
                "tol": _nonneg,
                "samples": {"type": "integer", "minimum": 16},
            },
            ["mode"],
        ),
        "output": _obj(
            {
                "formats": {"type": "array", "items": {"enum": ["csv", "json", "svg"]}, "uniqueItems": True},
                "plot": _obj({"kind": {"enum": ["state", "residual"]}}),
            }
        ),
    },
    ["problem", "solver"],
)

_VALIDATOR = Draft202012Validator(SCHEMA)

_SOLVER_DEFAULTS = {
    "schedule": {"kind": "constant", "gain": 1.0},
    "integrator": {
        "method": "rk4",
        "base_step": 1e-3,
        "t0": 0.0,
        "t_end": 10.0,
        "record_every": 1,
        "stiffness_cap": 0.5,
        "divergence_radius": 1e6,
    },
    "iteration": {"h": 1.0, "tol": 1e-8, "max_iter": 1000},
    "seed": 0,
    "tol": 1e-8,
    "samples": 64,
}
_OUTPUT_DEFAULTS = {"formats": ["csv", "json", "svg"], "plot": {"kind": "state"}}


class SpecError(InputError):
    """Spec rejected; ``errors`` is a list of ``(path, message)`` pairs."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"{p}: {m}" for p, m in self.errors))


def _path(err):
    return "/" + "/".join(str(p) for p in err.absolute_path)


def _merge(defaults, given):
    out = copy.deepcopy(defaults)
    for k, v in given.items():
        # tagged unions replace the default wholesale
        if isinstance(v, dict) and isinstance(out.get(k), dict) and "kind" not in v:
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass
class RunSpec:
    """Validated run specification with defaults filled in."""

    name: str
    problem: dict
    solver: dict
    output: dict

    @property
    def mode(self):
        return self.solver["mode"]

    def to_dict(self):
        return {"name": self.name, "problem": copy.deepcopy(self.problem), "solver": copy.deepcopy(self.solver), "output": copy.deepcopy(self.output)}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def build_problem(self):
        return ProblemInstance.from_dict(self.problem)

    def build_schedule(self):
        return schedule_from_dict(self.solver["schedule"])

    def build_integrator(self):
        return IntegratorConfig(**self.solver["integrator"])

    def build_iteration(self):
        if "lambda_seq" not in self.solver:
            raise SpecError([("/solver/lambda_seq", "required for iterative modes")])
        it = self.solver["iteration"]
        return IterationConfig(lambda_seq_from_dict(self.solver["lambda_seq"]), it["h"], it["tol"], it["max_iter"])


def parse_spec(text) -> RunSpec:
    """Parse and validate a JSON run spec.

    Raises :class:`SpecError` listing every offending path; malformed JSON is
    reported with its line and column.
    """
    if isinstance(text, (bytes, bytearray)):
        text = text.decode("utf-8")
    if isinstance(text, str):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecError([(f"line {exc.lineno} column {exc.colno}", exc.msg)]) from None
    else:
        doc = copy.deepcopy(text)
    errors = sorted(((_path(e), e.message) for e in _VALIDATOR.iter_errors(doc)), key=lambda pe: pe[0])
    if errors:
        raise SpecError(errors)
    spec = RunSpec(
        name=doc.get("name", "run"),
        problem=doc["problem"],
        solver=_merge(_SOLVER_DEFAULTS, doc["solver"]),
        output=_merge(_OUTPUT_DEFAULTS, doc.get("output", {})),
    )
    problems = []
    try:
        problem = spec.build_problem()
    except (InputError, KeyError, TypeError) as exc:
        raise SpecError([("/problem", str(exc))]) from None
    try:
        spec.build_schedule()
        spec.build_integrator()
    except InputError as exc:
        problems.append(("/solver", str(exc)))
    if "lambda_seq" in spec.solver:
        try:
            spec.build_iteration()
        except InputError as exc:
            problems.append(("/solver/lambda_seq", str(exc)))
    b = spec.solver.get("bounds")
    if b is not None and not b["A"] < b["B"]:
        problems.append(("/solver/bounds", "need A < B"))
    for key in ("x0", "points"):
        for i, pt in enumerate(spec.solver.get(key, [])):
            if len(pt) != problem.dim:
                problems.append((f"/solver/{key}/{i}", f"expected {problem.dim} coordinates"))
    if "x_star" in spec.solver and len(spec.solver["x_star"]) != problem.dim:
        problems.append(("/solver/x_star", f"expected {problem.dim} coordinates"))
    if problems:
        raise SpecError(problems)
    return spec


def load_spec(path) -> RunSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_spec(fh.read())
