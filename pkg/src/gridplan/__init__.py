"""gridplan: cost-aware, kinematically feasible grid path planning.

Three planners over uint8 costmaps -- a cost-aware 2D grid A*, a Hybrid-A*
over continuous SE(2) states, and a state-lattice planner driven by
generated minimal control sets -- plus a differential obstacle-distance
heuristic cache, a gradient path smoother, and a benchmark harness.
"""

from .costmap import (COST_MAX, FREE, LETHAL, UNKNOWN, Circle, Costmap,
                      MapError, Polygon, collision_check, generate_random_map,
                      inflate, load_map, save_map)
from .curves import (MotionPrimitive, TrajectorySolution, closed_form_d_min,
                     discrete_curvature_ok, dubins_path, generate_trajectory,
                     hybrid_primitives, reeds_shepp_path, sample_segments)
from .heuristics import ObstacleHeuristicCache
from .lattice import (ControlSet, ControlSetError,
                      generate_minimal_control_set, load_control_set,
                      save_control_set)
from .planner import (GoalInCollision, Path, PlannerConfig, PlannerError,
                      PlannerInvariantError, StartInCollision, plan,
                      save_path_csv, smooth, smoothness_objective,
                      traversal_cost)
from .pose import PoseSE2
from .render import render, render_ppm, render_svg
from .search import (IterationLimit, NoPathExists, SearchError, SearchLimits,
                     TimeLimit)

__version__ = "0.1.0"

__all__ = [
    "COST_MAX", "FREE", "LETHAL", "UNKNOWN", "Circle", "Costmap", "MapError",
    "Polygon", "collision_check", "generate_random_map", "inflate",
    "load_map", "save_map",
    "MotionPrimitive", "TrajectorySolution", "closed_form_d_min",
    "discrete_curvature_ok", "dubins_path", "generate_trajectory",
    "hybrid_primitives", "reeds_shepp_path", "sample_segments",
    "ObstacleHeuristicCache",
    "ControlSet", "ControlSetError", "generate_minimal_control_set",
    "load_control_set", "save_control_set",
    "GoalInCollision", "Path", "PlannerConfig", "PlannerError",
    "PlannerInvariantError", "StartInCollision", "plan", "save_path_csv",
    "smooth", "smoothness_objective", "traversal_cost",
    "PoseSE2",
    "render", "render_ppm", "render_svg",
    "IterationLimit", "NoPathExists", "SearchError", "SearchLimits",
    "TimeLimit",
    "__version__",
]
