"""Power-minimizing scheduling and brightness control for indoor VLC networks."""

__version__ = "0.1.0"

from .scenario import (  # noqa: F401
    Scenario,
    ScenarioError,
    build_candidate_links,
    default_config,
    load_scenario,
    scenario_from_dict,
)
