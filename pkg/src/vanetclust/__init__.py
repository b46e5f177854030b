"""Clustered vehicular network simulation on multi-street roads."""

__version__ = "0.1.0"

from .clustering import (Cluster, ClusterStructure, KMeansResult, check_feasibility,
                         elect_gateway, kmeans_1d, kmeans_1d_exact, optimize_cluster_count)
from .connectivity import (AnalyticParams, ConnectivityReport, connectivity_report, mc_connectivity,
                           noncluster_connection_probability, road_connection_probability,
                           system_connection_probability, vehicle_connection_probability)
from .experiments import SweepRow, SweepSpec, emit_table, sweep_connection_probability, sweep_optimized_k
from .scenario import (RoadScenario, Street, Vehicle, VehicleSet, load_scenario, place_vehicles,
                       truncate_placement)
