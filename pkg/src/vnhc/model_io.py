"""Model file format: JSON with all expressions as DSL strings.

Schema (unknown keys are errors):

    {
      "coordinates": ["x", "y", "theta"],
      "parameters": {"m": 1.0, "I": 1.0},
      "metric": [["m", "0", "0"], ...],
      "potential": "0",
      "external_force": ["...", "...", "0"],
      "inputs": [["sin(theta)", "-cos(theta)", "1"]],
      "constraint": {"mu": [[...]], "Z": [...]}
    }

"potential", "external_force" and "parameters" are optional.  The
constraint block takes either "Z" directly or a vector field "X" (n DSL
strings), in which case Z = -S X is formed symbolically at load time.
"""

from __future__ import annotations

import json

from . import expr as ex
from .constraint import AffineConstraint, check_compatible
from .geometry import MechanicalModel, ModelError

_TOP_KEYS = {
    "coordinates", "parameters", "metric", "potential",
    "external_force", "inputs", "constraint",
}
_CON_KEYS = {"mu", "Z", "X"}


class ModelFileError(ValueError):
    """Malformed model file (syntax, schema, or expression errors)."""


def _parse_field(text, where: str) -> ex.Expr:
    if not isinstance(text, (str, int, float)):
        raise ModelFileError(f"{where}: expected a DSL string, got {type(text).__name__}")
    try:
        return ex.as_expr(text)
    except ex.ParseError as err:
        raise ModelFileError(f"{where}: {err}") from err


def load_model_dict(data: dict) -> tuple[MechanicalModel, AffineConstraint]:
    if not isinstance(data, dict):
        raise ModelFileError("model file must contain a JSON object")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ModelFileError(f"unknown keys {sorted(unknown)}")
    for key in ("coordinates", "metric", "inputs", "constraint"):
        if key not in data:
            raise ModelFileError(f"missing required key {key!r}")

    coords = data["coordinates"]
    if not isinstance(coords, list) or not all(isinstance(c, str) for c in coords):
        raise ModelFileError("coordinates must be a list of names")
    params = data.get("parameters", {})
    if not isinstance(params, dict):
        raise ModelFileError("parameters must be a name -> number map")

    def parse_grid(rows, where):
        if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
            raise ModelFileError(f"{where} must be a list of rows")
        return [
            [_parse_field(e, f"{where}[{i}][{j}]") for j, e in enumerate(row)]
            for i, row in enumerate(rows)
        ]

    metric = parse_grid(data["metric"], "metric")
    inputs = parse_grid(data["inputs"], "inputs")
    potential = _parse_field(data.get("potential", "0"), "potential")
    force_raw = data.get("external_force")
    force = (
        [_parse_field(e, f"external_force[{i}]") for i, e in enumerate(force_raw)]
        if force_raw is not None
        else None
    )

    cdata = data["constraint"]
    if not isinstance(cdata, dict):
        raise ModelFileError("constraint must be an object")
    unknown = set(cdata) - _CON_KEYS
    if unknown:
        raise ModelFileError(f"constraint: unknown keys {sorted(unknown)}")
    if "mu" not in cdata:
        raise ModelFileError("constraint: missing key 'mu'")
    mu = parse_grid(cdata["mu"], "constraint.mu")
    if ("Z" in cdata) == ("X" in cdata):
        raise ModelFileError("constraint: give exactly one of 'Z' or 'X'")
    if "Z" in cdata:
        Z = [_parse_field(e, f"constraint.Z[{b}]") for b, e in enumerate(cdata["Z"])]
    else:
        X = [_parse_field(e, f"constraint.X[{i}]") for i, e in enumerate(cdata["X"])]
        if len(X) != len(coords):
            raise ModelFileError("constraint.X must have one entry per coordinate")
        Z = []
        for row in mu:
            z = ex.ZERO
            for mu_i, x_i in zip(row, X):
                z = z - mu_i * x_i
            Z.append(z)

    try:
        model = MechanicalModel(
            coordinates=coords,
            metric=metric,
            potential=potential,
            external_force=force,
            input_coframe=inputs,
            parameters=params,
        )
        con = AffineConstraint(
            model_coordinates=coords, mu=mu, Z=Z, parameters=params
        )
        check_compatible(model, con)
    except ModelError as err:
        raise ModelFileError(str(err)) from err
    return model, con


def load_model(path) -> tuple[MechanicalModel, AffineConstraint]:
    with open(path, "r", encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as err:
            raise ModelFileError(f"{path}: invalid JSON: {err}") from err
    return load_model_dict(data)


def model_to_dict(model: MechanicalModel, con: AffineConstraint) -> dict:
    return {
        "coordinates": list(model.coordinates),
        "parameters": dict(model.parameters),
        "metric": [[ex.to_string(g) for g in row] for row in model.metric],
        "potential": ex.to_string(model.potential),
        "external_force": [ex.to_string(f) for f in model.external_force],
        "inputs": [[ex.to_string(f) for f in row] for row in model.input_coframe],
        "constraint": {
            "mu": [[ex.to_string(e) for e in row] for row in con.mu],
            "Z": [ex.to_string(z) for z in con.Z],
        },
    }


def save_model(path, model: MechanicalModel, con: AffineConstraint):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(model_to_dict(model, con), f, indent=2)
        f.write("\n")
