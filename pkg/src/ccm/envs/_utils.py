from __future__ import annotations

import json
import pathlib
from dataclasses import replace
from typing import Any, Mapping, Optional, Union

from ccm.graph import HillDelay, LinearGaussian, NodeSpec, OdeRate, get_rate
from ccm.graph._utils import graph_spec_from_dict, noise_from_dict
from ccm.utils import sha256_hex

from ._enums import ScenarioName
from .base import IndividualParams, MealSchedule, Scenario
from .const import DIGESTS_FILE_NAME
from .exceptions import FixtureDigestError, UnknownScenarioError


def fixtures_dir() -> pathlib.Path:
    return pathlib.Path(__file__).resolve().parent / "fixtures"


def scenario_name(name: Union[str, ScenarioName]) -> ScenarioName:
    """Resolve a scenario name.

    Raises:
        UnknownScenarioError: If no scenario has that name.
    """
    try:
        return ScenarioName(name)
    except ValueError:
        known = ", ".join(member.value for member in ScenarioName)
        raise UnknownScenarioError(f"unknown scenario '{name}', expected one of: {known}") from None


def fixture_path(name: Union[str, ScenarioName]) -> pathlib.Path:
    return fixtures_dir() / f"{scenario_name(name).value}.json"


def recorded_digests() -> dict[str, str]:
    with open(fixtures_dir() / DIGESTS_FILE_NAME, "r", encoding="utf-8") as f:
        return dict(json.load(f))


def verify_fixture(name: str) -> str:
    """Hash a fixture file and compare it with its recorded digest.

    Returns:
        str: The SHA-256 hex digest of the file.

    Raises:
        FixtureDigestError: If the digest is missing or differs.
    """
    path = fixture_path(name)
    digest = sha256_hex(path.read_bytes())
    expected = recorded_digests().get(name)
    if expected != digest:
        raise FixtureDigestError(f"{path.name}: digest {digest[:12]} does not match the recorded {str(expected)[:12]}")
    return digest


def read_fixture(name: str) -> tuple[dict[str, Any], str]:
    digest = verify_fixture(name)
    with open(fixture_path(name), "r", encoding="utf-8") as f:
        return json.load(f), digest


def scenario_from_dict(name: str, data: Mapping[str, Any], digest: str = "") -> Scenario:
    specs, edges = graph_spec_from_dict(data)
    goal = data["goal"]
    meals = data.get("meals")
    individual = data.get("individual")
    return Scenario(
        name=name,
        specs=tuple(specs),
        edges=tuple(edges),
        goal_center=tuple(goal["center"]),
        goal_half_width=float(goal["half_width"]),
        noise=noise_from_dict(data.get("noise", {})),
        episode_len=int(data["episode_len"]),
        individual=IndividualParams.from_dict(individual) if individual else None,
        meals=MealSchedule(**meals) if meals else None,
        metrics=tuple(data.get("metrics", ("reward",))),
        digest=digest,
    )


def override_noise_sd(spec: NodeSpec, noise_sd: Optional[float]) -> NodeSpec:
    if noise_sd is None or not isinstance(spec.equation, (LinearGaussian, HillDelay)):
        return spec
    return replace(spec, equation=replace(spec.equation, noise_sd=float(noise_sd)))


def with_individual(spec: NodeSpec, individual: IndividualParams) -> NodeSpec:
    """Fill an ODE node's parameters from the individual (only the keys its rate declares)."""
    if not isinstance(spec.equation, OdeRate):
        return spec
    wanted = get_rate(spec.equation.rate).params
    params = dict(spec.equation.params)
    params.update({key: individual.params[key] for key in wanted if key in individual.params})
    return replace(spec, equation=replace(spec.equation, params=params))
