from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping, Sequence, Union

from ._enums import EquationKind, HillSign
from .base import HillDelay, HillTerm, LinearGaussian, NodeSpec, NoiseRegime, OdeRate, StructuralEquation
from .const import GRAPH_SPEC_VERSION
from .exceptions import DomainError, GraphSpecError

FilePath = Union[str, Path]
Edge = tuple[int, int]


def eval_hill(x: float, sign: HillSign, beta: float, k: float, n: float) -> float:
    """Evaluate a hill regulation term.

    Args:
        x (float): Regulator level, must be non-negative.
        sign (HillSign): Activation gives beta*x^n/(k^n+x^n), repression gives beta*k^n/(k^n+x^n).
        beta (float): Maximal output.
        k (float): Half-saturation threshold.
        n (float): Hill exponent.

    Returns:
        float: A value in [0, beta].

    Raises:
        DomainError: If `x < 0`.
    """
    if x < 0:
        raise DomainError
    xn = x**n
    kn = k**n
    if HillSign(sign) is HillSign.activation:
        return beta * xn / (kn + xn)
    return beta * kn / (kn + xn)


def equation_to_dict(equation: StructuralEquation) -> dict[str, Any]:
    if isinstance(equation, LinearGaussian):
        return {"kind": equation.kind.value, "weights": list(equation.weights), "noise_sd": equation.noise_sd}
    if isinstance(equation, HillDelay):
        return {
            "kind": equation.kind.value,
            "terms": [
                {"sign": term.sign.value, "beta": term.beta, "k": term.k, "n": term.n, "delay": term.delay}
                for term in equation.terms
            ],
            "noise_sd": equation.noise_sd,
        }
    return {"kind": equation.kind.value, "rate": equation.rate, "params": dict(equation.params), "h": equation.h}


def equation_from_dict(data: Mapping[str, Any]) -> StructuralEquation:
    try:
        kind = EquationKind(data["kind"])
        if kind is EquationKind.linear_gaussian:
            return LinearGaussian(weights=tuple(data.get("weights", ())), noise_sd=float(data.get("noise_sd", 0.1)))
        if kind is EquationKind.hill_delay:
            terms = tuple(HillTerm(**term) for term in data.get("terms", ()))
            return HillDelay(terms=terms, noise_sd=float(data.get("noise_sd", 0.1)))
        return OdeRate(rate=data["rate"], params=data.get("params", {}), h=float(data.get("h", 1.0)))
    except (KeyError, TypeError, ValueError) as e:
        raise GraphSpecError(f"malformed equation {dict(data)!r}: {e}") from e


def node_to_dict(spec: NodeSpec) -> dict[str, Any]:
    return {
        "id": spec.id,
        "name": spec.name,
        "role": spec.role.value,
        "init": spec.init_value,
        "bounds": list(spec.bounds),
        "equation": equation_to_dict(spec.equation),
    }


def node_from_dict(data: Mapping[str, Any]) -> NodeSpec:
    try:
        return NodeSpec(
            id=int(data["id"]),
            role=data["role"],
            equation=equation_from_dict(data["equation"]),
            init_value=float(data.get("init", 0.0)),
            bounds=tuple(data.get("bounds", (-1.0, 1.0))),  # type: ignore[arg-type]
            name=str(data.get("name", "")),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise GraphSpecError(f"malformed node {dict(data)!r}: {e}") from e


def noise_to_dict(regime: NoiseRegime) -> dict[str, Any]:
    return {"kind": regime.kind.value, "trigger_prob": regime.trigger_prob, "magnitude_factor": regime.magnitude_factor}


def noise_from_dict(data: Mapping[str, Any]) -> NoiseRegime:
    return NoiseRegime(**data)


def graph_spec_to_dict(specs: Sequence[NodeSpec], edges: Sequence[Edge]) -> dict[str, Any]:
    return {
        "version": GRAPH_SPEC_VERSION,
        "nodes": [node_to_dict(spec) for spec in specs],
        "edges": [[int(u), int(v)] for u, v in edges],
    }


def graph_spec_from_dict(data: Mapping[str, Any]) -> tuple[list[NodeSpec], list[Edge]]:
    if "nodes" not in data or "edges" not in data:
        raise GraphSpecError("graph spec needs 'nodes' and 'edges'")
    specs = [node_from_dict(node) for node in data["nodes"]]
    edges = [(int(u), int(v)) for u, v in data["edges"]]
    return specs, edges


def read_json(file_path: FilePath) -> dict[str, Any]:
    with open(file_path, "r", encoding="utf-8") as f:
        data = json.load(f)
    if not isinstance(data, dict):
        raise GraphSpecError(f"{file_path}: top-level JSON value must be an object")
    return data


def write_json(file_path: FilePath, data: Mapping[str, Any]) -> None:
    with open(file_path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2)
        f.write("\n")
