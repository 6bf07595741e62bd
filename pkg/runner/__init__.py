"""
EnQSP Experiment Runner

Seeded experiment orchestration: JSON configs, experiment kinds, asynchronous
trial scheduling and deterministic CSV / JSON reports.
"""

__version__ = "0.1.0"
