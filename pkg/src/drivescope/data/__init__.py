from .routes import RouteSpec, generate_routes, route_from_lanes, load_route, save_route
from .episode import EpisodeRecord, Frame, read_episode, write_episode
from .labels import label_waypoints
from .filtering import filter_dataset, FiltrationReport

__all__ = [
    "RouteSpec", "generate_routes", "route_from_lanes", "load_route", "save_route",
    "EpisodeRecord", "Frame", "read_episode", "write_episode",
    "label_waypoints", "filter_dataset", "FiltrationReport",
]
