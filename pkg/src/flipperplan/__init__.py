"""Whole-body flipper morphology planning for a four-flipper tracked robot."""

from .config_gen import (EPS_CONTACT, check_morphology, get_flipper_angles, get_pose_candidates,
                         resolve_flippers, rotate_to_contact)
from .errors import (ContactError, DeadEndError, MapFormatError, NoContactError, OutOfMapError,
                     ParamsError, PlannerError, PunctureError)
from .follower import Disturbance, FollowerSettings, TrackingReport, follow, read_report, write_report
from .inflation import InflatedMap, inflate
from .path_search import PlanPath, SearchSettings, export_path, import_path, plan, start_morphology
from .robot import Morphology, RobotParams, Skeleton, forward_kinematics, pitch_compensation
from .terrain import ElevationMap, ObstacleSpec, flat_map, generate_obstacle, load_map, save_map

__version__ = "0.1.0"

__all__ = [
    "EPS_CONTACT", "check_morphology", "get_flipper_angles", "get_pose_candidates",
    "resolve_flippers", "rotate_to_contact",
    "ContactError", "DeadEndError", "MapFormatError", "NoContactError", "OutOfMapError",
    "ParamsError", "PlannerError", "PunctureError",
    "Disturbance", "FollowerSettings", "TrackingReport", "follow", "read_report", "write_report",
    "InflatedMap", "inflate",
    "PlanPath", "SearchSettings", "export_path", "import_path", "plan", "start_morphology",
    "Morphology", "RobotParams", "Skeleton", "forward_kinematics", "pitch_compensation",
    "ElevationMap", "ObstacleSpec", "flat_map", "generate_obstacle", "load_map", "save_map",
]
