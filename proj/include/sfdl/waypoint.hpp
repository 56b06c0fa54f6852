#pragma once

namespace sfdl {

// A planar position in meters.
struct Waypoint {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Waypoint&, const Waypoint&) = default;
};

}  // namespace sfdl
