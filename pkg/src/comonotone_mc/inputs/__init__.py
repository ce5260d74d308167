"""Inputs package"""
from .experiment_config import ExperimentConfig, load_experiment
from .registry import build_process, build_functional, build_measure, build_convex, list_registry
