#include "evrp/types.hpp"

#include <algorithm>

namespace evrp {

bool operator==(const SensorGeometry& a, const SensorGeometry& b) {
    return a.width == b.width && a.height == b.height;
}

bool operator==(const Event& a, const Event& b) {
    return a.t == b.t && a.x == b.x && a.y == b.y && a.p == b.p;
}

bool operator==(const BBox& a, const BBox& b) {
    return a.x_min == b.x_min && a.y_min == b.y_min && a.x_max == b.x_max &&
           a.y_max == b.y_max;
}

double bbox_area(const BBox& b) {
    return (b.x_max - b.x_min) * (b.y_max - b.y_min);
}

double iou(const BBox& a, const BBox& b) {
    const double ix = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
    const double iy = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
    if (ix <= 0.0 || iy <= 0.0) return 0.0;
    const double inter = ix * iy;
    const double uni = bbox_area(a) + bbox_area(b) - inter;
    if (uni <= 0.0) return 0.0;
    return inter / uni;
}

}  // namespace evrp
