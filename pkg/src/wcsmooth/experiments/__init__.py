"""Synthetic benchmarks and the experiment runner."""
from .datasets import (PiecewiseQuadratic, RegressionDataset, design_scaling, gen_piecewise_quadratic,
                       gen_regression, initial_point, read_dataset, smallest_eigenvalue, write_dataset)
from .runner import (BUDGET_FACTOR, PWQ_ETA, SWEEP_COLUMNS, TAU_ABS, check_compatible, converging_set, dataset_eta, default_eta,
                     default_budget, default_smoother, experiment_config, gap_closure, run_experiment, stepsize_sweep,
                     stop_threshold, sweep_csv)
