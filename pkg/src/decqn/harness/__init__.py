from decqn.harness.reports import probe_report, scaling_report
from decqn.harness.runner import OccupancyTable, evaluate, run_experiment, run_seed

__all__ = ["OccupancyTable", "evaluate", "probe_report", "run_experiment", "run_seed", "scaling_report"]
