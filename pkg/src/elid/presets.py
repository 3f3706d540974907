"""Read-only sensor and road presets."""

from types import MappingProxyType

from .model import LidarSpec

VELARRAY = LidarSpec(
    name="velarray",
    hfov=120.0,
    vfov=35.0,
    max_range=200.0,
    output_rate=100e6,
    rotating=False,
)

# The OS-1 vFoV and range are not published alongside the mounting results;
# 31.6 deg and 117.2 m are back-solved from an elevation of 36.75 m and a
# coverage of 222.5 m on a 20.8 m road.
OS1 = LidarSpec(
    name="os1",
    hfov=360.0,
    vfov=31.6,
    max_range=117.2,
    output_rate=100e6,
    rotating=True,
)

LIDAR_PRESETS = MappingProxyType({"velarray": VELARRAY, "os1": OS1})

# length is not part of the cross-section preset; 1 km is the default corridor
ROAD_PRESETS = MappingProxyType({
    "table1_road": MappingProxyType(
        {"length": 1000.0, "lanes": 4, "lane_width": 3.7, "safety_margin": 3.0}
    ),
})
