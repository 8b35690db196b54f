"""Reachability summaries, LAR rasters and tensor files for GPS trajectories."""

from ._reach import (
    FormatError,
    InvalidCoordinate,
    NotFound,
    ParameterError,
    ReachabilityMap,
    ReachError,
    gaussian_weight,
    haversine_m,
    inverse_index,
    latlon_to_tile,
    load_rsum,
    preprocess_tdrive,
    rasterize,
    read_node_index,
    read_rten,
    row_major_index,
    summarize,
    tile_centroid,
    write_remb,
)

__all__ = [
    "FormatError",
    "InvalidCoordinate",
    "NotFound",
    "ParameterError",
    "ReachabilityMap",
    "ReachError",
    "gaussian_weight",
    "haversine_m",
    "inverse_index",
    "latlon_to_tile",
    "load_rsum",
    "preprocess_tdrive",
    "rasterize",
    "read_node_index",
    "read_rten",
    "row_major_index",
    "summarize",
    "tile_centroid",
    "write_remb",
]
