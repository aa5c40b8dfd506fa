"""Active sense-and-avoid for a flying robot with a rotatable stereo head.

Library layout:

* :mod:`asaa.geometry` angle and vector helpers
* :mod:`asaa.sud` per-direction observation freshness (SUD)
* :mod:`asaa.head_planner` multi-objective camera heading selection
* :mod:`asaa.tracker` Kalman multi-object tracker for moving obstacles
* :mod:`asaa.static_map` egocentric occupancy grid and distance field
* :mod:`asaa.flight_planner` sampled goal candidates, quintic primitives, clearance checks
* :mod:`asaa.timesync` stamp-corrected lookup of pose and head angle
* :mod:`asaa.sim` kinematic test bench and scenarios
* :mod:`asaa.runner` batch experiments and the ``asaa`` command
"""

__version__ = "0.1.0"
