"""Exact zone graphs of planar B-reps and guided sketch-extrude-Boolean search."""
from .brep import BRep, parse_brep, find_face_loops, point_in_solid
from .errors import ValidationError, ZoneGraphError
from .metrics import compute_iou, relative_rank
from .proposals import BoolType, Canvas, Extrusion, apply_extrusion, generate_proposals
from .search import SearchConfig, SearchResult, Status, search
from .zones import ZoneGraph, build_zone_graph, zone_graph_from_brep

__version__ = "0.1.0"
