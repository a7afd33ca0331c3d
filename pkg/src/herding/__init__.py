"""Herding of repulsive evaders by a few herders with implicit control and dynamic assignment."""

from .assignment import Assignment, assign, selected_state
from .clustering import Clustering, clustering_cost, kmeans
from .controller import ControllerConfig, Reference, check_stability, h_value, herder_velocity_update
from .dynamics import EvaderModel, Variant, WorldState, evader_velocity, herd_velocity, jacobian_u, jacobian_x, saturate
from .geometry import Hull, centroid, convex_hull, point_in_hull
from .metrics import Classification, MetricReport, classify, evaluate, l_mu, l_sigma
from .simulator import RunLog, SimConfig, initialize, reference_at, run, step

__all__ = [
    "Assignment", "assign", "selected_state",
    "Clustering", "clustering_cost", "kmeans",
    "ControllerConfig", "Reference", "check_stability", "h_value", "herder_velocity_update",
    "EvaderModel", "Variant", "WorldState", "evader_velocity", "herd_velocity", "jacobian_u", "jacobian_x", "saturate",
    "Hull", "centroid", "convex_hull", "point_in_hull",
    "Classification", "MetricReport", "classify", "evaluate", "l_mu", "l_sigma",
    "RunLog", "SimConfig", "initialize", "reference_at", "run", "step",
]
