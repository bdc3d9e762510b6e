"""Collision avoidance pipeline for small UAVs: detection, tracking, threat
assessment, maneuver command, health management and runtime monitors, with a
deterministic scenario simulator."""

__version__ = "0.1.0"
