"""Closed-loop causality-debugging workbench for end-to-end driving planners.

Subpackages:
    sim        deterministic 2D world, rasterization, infractions, metrics
    data       expert driver, route generation, dataset collection/filtration
    autodiff   reverse-mode tape engine (float64, NaN-trapping)
    model      prompt-token planner with BEV memory bank and ego-query decoder
    causality  ablation, interventions, token gradients, attention, activation maps
    control    waypoint PID, closed-loop harness, benchmarks
    service    HTTP debugging sessions
"""

__version__ = "0.1.0"
