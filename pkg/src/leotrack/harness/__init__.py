"""Scenario configuration, Monte Carlo experiments, metrics and the CLI."""

from .config import ScenarioConfig, config_from_mapping, dump_config, load_config
from .io import emit_ci_orbits, emit_results, read_results, write_gnuplot
from .metrics import MetricSeries, angular_error
from .montecarlo import draw_pass, perturb_direction, run_montecarlo, setup_run, simulate_run

__all__ = [name for name in dir() if not name.startswith("_")]
