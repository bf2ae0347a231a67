from enum import Enum


class ScenarioName(str, Enum):
    """
    Names of the scenario fixtures shipped with the package.
    """

    env1 = "env1"
    env2 = "env2"
    env3 = "env3"
    fork_join = "fork_join"
    glucose = "glucose"


class PatientGroup(str, Enum):
    adolescent = "adolescent"
    adult = "adult"
    child = "child"
