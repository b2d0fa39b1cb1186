#pragma once

#include <cstdint>
#include <vector>

namespace evrp {

struct SensorGeometry {
    int width = 640;
    int height = 480;

    bool contains(int x, int y) const noexcept {
        return x >= 0 && x < width && y >= 0 && y < height;
    }
};

bool operator==(const SensorGeometry& a, const SensorGeometry& b);

// One sensor event: microsecond timestamp, pixel location, 1-bit polarity
// (1 = intensity increase, 0 = decrease).
struct Event {
    std::uint64_t t = 0;
    std::uint16_t x = 0;
    std::uint16_t y = 0;
    std::uint8_t p = 0;
};

bool operator==(const Event& a, const Event& b);

// A timestamped bundle of events, one per message cadence slot.
// Events are sorted by non-decreasing t.
struct EventMessage {
    std::uint64_t index = 0;
    std::vector<Event> events;
};

// A decimated accumulation of consecutive messages; the pipeline's unit of
// work. t_start/t_end cover the full message window, including events of
// decimated messages.
struct EventChunk {
    std::uint64_t chunk_index = 0;
    std::uint64_t t_start = 0;
    std::uint64_t t_end = 0;
    std::vector<Event> events;
};

// Axis-aligned box in continuous pixel coordinates, COCO-style:
// area = (x_max - x_min) * (y_max - y_min).
struct BBox {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;
};

bool operator==(const BBox& a, const BBox& b);

double bbox_area(const BBox& b);

// Intersection over union; 0 when the union has zero area.
double iou(const BBox& a, const BBox& b);

}  // namespace evrp
