"""Benchmark problems: the crawling problem and quad-rotor path planning."""
from .crawling import Z_INIT, brute_force_example1, example1_problem
from .quadrotor import (
    QuadRotorParams,
    discretize_dynamics,
    example2_problem,
    initial_guess,
    reintegrate,
)
