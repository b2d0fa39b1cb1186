#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "evrp/eval.hpp"
#include "evrp/ingest.hpp"
#include "evrp/types.hpp"

namespace evrp {

enum class ShapeKind { kRectangle, kDisc };
enum class TrajectoryKind { kLinear, kCircular };

struct Trajectory {
    TrajectoryKind kind = TrajectoryKind::kLinear;
    // linear: anchor = start + velocity * t
    double start_x = 0.0;
    double start_y = 0.0;
    double velocity_x = 0.0;
    double velocity_y = 0.0;
    // circular: anchor = center + radius * (cos(w t), sin(w t))
    double center_x = 0.0;
    double center_y = 0.0;
    double radius = 0.0;
    double angular_rate = 0.0;

    // Anchor position at time t: a rectangle's top-left corner, a disc's
    // center.
    std::pair<double, double> position(double t_s) const;
};

struct MovingShape {
    ShapeKind kind = ShapeKind::kRectangle;
    double width = 0.0;   // rectangle
    double height = 0.0;  // rectangle
    double radius = 0.0;  // disc
    double intensity = 2.0;
    Trajectory trajectory;

    BBox aabb(double t_s) const;
};

// A synthetic scene: shapes of constant intensity over a background of 1.0,
// sampled by the idealized contrast-threshold camera model.
struct SceneSpec {
    std::string name = "scene";
    SensorGeometry geometry;
    double duration_s = 1.0;
    double message_rate_hz = 30.0;
    std::vector<MovingShape> shapes;
    double contrast_threshold = 0.2;
    double noise_rate_hz_per_pixel = 0.0;
    double substep_s = 0.001;
    std::uint64_t seed = 0;
};

void validate(const SceneSpec& spec);

SceneSpec parse_scene_json(const std::string& text);

// Exact shape boxes at time t_s, clipped to the sensor; shapes fully outside
// are omitted. Throws std::out_of_range outside [0, duration_s].
std::vector<BBox> ground_truth_boxes(const SceneSpec& spec, double t_s);

struct SimulationResult {
    StreamHeader header;
    std::vector<EventMessage> messages;
    GroundTruthSet ground_truth;
};

// Runs the contrast-threshold model over [0, duration): per pixel, one event
// per whole contrast step between the current log intensity and the stepped
// reference, plus uniform-polarity Poisson noise, bucketed into fixed-cadence
// messages. Ground truth holds each shape's box at every default chunk
// window's midpoint. Deterministic for a given spec and seed.
SimulationResult simulate(const SceneSpec& spec);

}  // namespace evrp
