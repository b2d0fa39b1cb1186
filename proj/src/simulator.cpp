#include "evrp/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "evrp/errors.hpp"
#include "evrp/rng.hpp"

namespace evrp {

std::pair<double, double> Trajectory::position(double t_s) const {
    if (kind == TrajectoryKind::kLinear)
        return {start_x + velocity_x * t_s, start_y + velocity_y * t_s};
    const double a = angular_rate * t_s;
    return {center_x + radius * std::cos(a), center_y + radius * std::sin(a)};
}

BBox MovingShape::aabb(double t_s) const {
    const auto [px, py] = trajectory.position(t_s);
    if (kind == ShapeKind::kRectangle)
        return BBox{px, py, px + width, py + height};
    return BBox{px - radius, py - radius, px + radius, py + radius};
}

void validate(const SceneSpec& spec) {
    if (spec.geometry.width < 1 || spec.geometry.height < 1)
        throw ConfigError("scene geometry must be at least 1x1");
    if (spec.duration_s <= 0.0) throw ConfigError("duration_s must be positive");
    if (spec.message_rate_hz <= 0.0)
        throw ConfigError("message_rate_hz must be positive");
    if (spec.contrast_threshold <= 0.0)
        throw ConfigError("contrast_threshold must be positive");
    if (spec.noise_rate_hz_per_pixel < 0.0)
        throw ConfigError("noise_rate_hz_per_pixel must be non-negative");
    if (spec.substep_s <= 0.0) throw ConfigError("substep_s must be positive");
    if (spec.substep_s > 1.0 / spec.message_rate_hz + 1e-12)
        throw ConfigError("substep_s must not exceed the message period");
    for (std::size_t i = 0; i < spec.shapes.size(); ++i) {
        const MovingShape& s = spec.shapes[i];
        if (s.kind == ShapeKind::kRectangle) {
            if (s.width <= 0.0 || s.height <= 0.0)
                throw ConfigError("shape " + std::to_string(i) +
                                  ": rectangle sides must be positive");
        } else if (s.radius <= 0.0) {
            throw ConfigError("shape " + std::to_string(i) +
                              ": disc radius must be positive");
        }
        if (s.intensity <= 0.0)
            throw ConfigError("shape " + std::to_string(i) +
                              ": intensity must be positive");
        if (s.intensity == 1.0)
            throw ConfigError("shape " + std::to_string(i) +
                              ": intensity 1.0 matches the background and "
                              "emits no events");
        const BBox b = s.aabb(0.0);
        if (b.x_min < 0.0 || b.y_min < 0.0 ||
            b.x_max > static_cast<double>(spec.geometry.width) ||
            b.y_max > static_cast<double>(spec.geometry.height))
            throw ConfigError("shape " + std::to_string(i) +
                              " does not fit inside the sensor at t=0");
    }
}

namespace {

double coverage_rectangle(const MovingShape& s, double ax, double ay, int px,
                          int py) {
    const double x0 = static_cast<double>(px);
    const double y0 = static_cast<double>(py);
    // Fully inside / outside shortcuts; the boundary shell gets supersampled.
    if (x0 >= ax && x0 + 1.0 <= ax + s.width && y0 >= ay &&
        y0 + 1.0 <= ay + s.height)
        return 1.0;
    if (x0 + 1.0 <= ax || x0 >= ax + s.width || y0 + 1.0 <= ay ||
        y0 >= ay + s.height)
        return 0.0;
    int hits = 0;
    for (int i = 0; i < 4; ++i) {
        const double sx = x0 + (i + 0.5) * 0.25;
        if (sx < ax || sx > ax + s.width) continue;
        for (int j = 0; j < 4; ++j) {
            const double sy = y0 + (j + 0.5) * 0.25;
            if (sy >= ay && sy <= ay + s.height) ++hits;
        }
    }
    return hits / 16.0;
}

double coverage_disc(const MovingShape& s, double cx, double cy, int px,
                     int py) {
    const double mx = px + 0.5;
    const double my = py + 0.5;
    const double d = std::hypot(mx - cx, my - cy);
    if (d <= s.radius - 0.75) return 1.0;
    if (d >= s.radius + 0.75) return 0.0;
    const double r_sq = s.radius * s.radius;
    int hits = 0;
    for (int i = 0; i < 4; ++i) {
        const double sx = px + (i + 0.5) * 0.25;
        for (int j = 0; j < 4; ++j) {
            const double sy = py + (j + 0.5) * 0.25;
            const double dx = sx - cx;
            const double dy = sy - cy;
            if (dx * dx + dy * dy <= r_sq) ++hits;
        }
    }
    return hits / 16.0;
}

struct ShapeState {
    const MovingShape* shape;
    double ax;  // anchor at the current sample time
    double ay;
};

double composite_intensity(const std::vector<ShapeState>& states, int px,
                           int py) {
    double intensity = 1.0;
    for (const ShapeState& st : states) {
        double c;
        if (st.shape->kind == ShapeKind::kRectangle)
            c = coverage_rectangle(*st.shape, st.ax, st.ay, px, py);
        else
            c = coverage_disc(*st.shape, st.ax, st.ay, px, py);
        if (c > 0.0) intensity += c * (st.shape->intensity - intensity);
    }
    return intensity;
}

struct PixelRect {
    int x0, y0, x1, y1;  // inclusive
    bool empty() const { return x0 > x1 || y0 > y1; }
};

PixelRect dirty_rect(const BBox& a, const BBox& b, const SensorGeometry& g) {
    const int x0 = static_cast<int>(std::floor(std::min(a.x_min, b.x_min))) - 2;
    const int y0 = static_cast<int>(std::floor(std::min(a.y_min, b.y_min))) - 2;
    const int x1 = static_cast<int>(std::ceil(std::max(a.x_max, b.x_max))) + 2;
    const int y1 = static_cast<int>(std::ceil(std::max(a.y_max, b.y_max))) + 2;
    return {std::max(x0, 0), std::max(y0, 0), std::min(x1, g.width - 1),
            std::min(y1, g.height - 1)};
}

}  // namespace

std::vector<BBox> ground_truth_boxes(const SceneSpec& spec, double t_s) {
    if (t_s < 0.0 || t_s > spec.duration_s)
        throw std::out_of_range("ground truth time " + std::to_string(t_s) +
                                " outside [0, " +
                                std::to_string(spec.duration_s) + "]");
    std::vector<BBox> boxes;
    for (const MovingShape& s : spec.shapes) {
        BBox b = s.aabb(t_s);
        b.x_min = std::max(b.x_min, 0.0);
        b.y_min = std::max(b.y_min, 0.0);
        b.x_max = std::min(b.x_max, static_cast<double>(spec.geometry.width));
        b.y_max = std::min(b.y_max, static_cast<double>(spec.geometry.height));
        if (b.x_min < b.x_max && b.y_min < b.y_max) boxes.push_back(b);
    }
    return boxes;
}

SimulationResult simulate(const SceneSpec& spec) {
    validate(spec);

    SimulationResult out;
    out.header.format_version = 1;
    out.header.geometry = spec.geometry;
    out.header.message_rate_hz = spec.message_rate_hz;

    const std::uint64_t n_messages = static_cast<std::uint64_t>(
        std::ceil(spec.duration_s * spec.message_rate_hz - 1e-9));
    std::vector<std::uint64_t> starts(n_messages + 1);
    for (std::uint64_t m = 0; m <= n_messages; ++m)
        starts[m] = message_start_us(m, spec.message_rate_hz);

    out.messages.resize(n_messages);
    for (std::uint64_t m = 0; m < n_messages; ++m) out.messages[m].index = m;

    const int w = spec.geometry.width;
    const int h = spec.geometry.height;
    const std::size_t n_pixels = static_cast<std::size_t>(w) * h;
    const double contrast = spec.contrast_threshold;

    std::vector<double> log_ref(n_pixels, 0.0);
    std::vector<double> cur_intensity(n_pixels, 1.0);
    std::vector<std::uint32_t> stamp(n_pixels, 0);

    std::vector<ShapeState> states(spec.shapes.size());
    auto refresh_states = [&](double t_s) {
        for (std::size_t i = 0; i < spec.shapes.size(); ++i) {
            const auto [ax, ay] = spec.shapes[i].trajectory.position(t_s);
            states[i] = {&spec.shapes[i], ax, ay};
        }
    };

    // Reference state at t=0: no events until something changes.
    refresh_states(0.0);
    for (const MovingShape& s : spec.shapes) {
        const BBox b0 = s.aabb(0.0);
        const PixelRect r = dirty_rect(b0, b0, spec.geometry);
        if (r.empty()) continue;
        for (int py = r.y0; py <= r.y1; ++py) {
            for (int px = r.x0; px <= r.x1; ++px) {
                const std::size_t idx = static_cast<std::size_t>(py) * w + px;
                const double intensity = composite_intensity(states, px, py);
                cur_intensity[idx] = intensity;
                log_ref[idx] = std::log(intensity);
            }
        }
    }

    const std::uint64_t end_us = starts[n_messages];
    std::uint64_t cur_msg = 0;
    double t_prev = 0.0;
    for (std::uint64_t k = 1;; ++k) {
        const double t_s = static_cast<double>(k) * spec.substep_s;
        if (t_s >= spec.duration_s - 1e-12) break;
        const std::uint64_t t_us =
            static_cast<std::uint64_t>(std::llround(t_s * 1e6));
        if (t_us >= end_us) break;
        while (cur_msg + 1 < n_messages && t_us >= starts[cur_msg + 1])
            ++cur_msg;

        refresh_states(t_s);
        auto& events = out.messages[cur_msg].events;
        const std::uint32_t mark = static_cast<std::uint32_t>(k);
        for (std::size_t si = 0; si < spec.shapes.size(); ++si) {
            const MovingShape& s = spec.shapes[si];
            const PixelRect r =
                dirty_rect(s.aabb(t_prev), s.aabb(t_s), spec.geometry);
            if (r.empty()) continue;
            for (int py = r.y0; py <= r.y1; ++py) {
                for (int px = r.x0; px <= r.x1; ++px) {
                    const std::size_t idx =
                        static_cast<std::size_t>(py) * w + px;
                    if (stamp[idx] == mark) continue;
                    stamp[idx] = mark;
                    const double intensity =
                        composite_intensity(states, px, py);
                    if (intensity == cur_intensity[idx]) continue;
                    cur_intensity[idx] = intensity;
                    const double diff = std::log(intensity) - log_ref[idx];
                    const double mag = std::fabs(diff);
                    if (mag + 1e-12 < contrast) continue;
                    const int crossings =
                        static_cast<int>(std::floor(mag / contrast + 1e-9));
                    if (crossings < 1) continue;
                    const std::uint8_t polarity = diff > 0.0 ? 1 : 0;
                    Event ev;
                    ev.t = t_us;
                    ev.x = static_cast<std::uint16_t>(px);
                    ev.y = static_cast<std::uint16_t>(py);
                    ev.p = polarity;
                    for (int c = 0; c < crossings; ++c) events.push_back(ev);
                    log_ref[idx] +=
                        (diff > 0.0 ? 1.0 : -1.0) * crossings * contrast;
                }
            }
        }
        t_prev = t_s;
    }

    if (spec.noise_rate_hz_per_pixel > 0.0) {
        Rng rng(spec.seed);
        const std::uint64_t duration_us = std::min(
            end_us, static_cast<std::uint64_t>(
                        std::llround(spec.duration_s * 1e6)));
        for (std::uint64_t m = 0; m < n_messages; ++m) {
            const std::uint64_t lo = starts[m];
            const std::uint64_t hi = std::min(starts[m + 1], duration_us);
            if (hi <= lo) continue;
            const double mean = spec.noise_rate_hz_per_pixel *
                                static_cast<double>(n_pixels) *
                                static_cast<double>(hi - lo) * 1e-6;
            const std::uint64_t count = rng.next_poisson(mean);
            auto& events = out.messages[m].events;
            events.reserve(events.size() + count);
            for (std::uint64_t i = 0; i < count; ++i) {
                Event ev;
                ev.x = static_cast<std::uint16_t>(
                    rng.next_below(static_cast<std::uint64_t>(w)));
                ev.y = static_cast<std::uint16_t>(
                    rng.next_below(static_cast<std::uint64_t>(h)));
                ev.t = lo + rng.next_below(hi - lo);
                ev.p = rng.next_bit() ? 1 : 0;
                events.push_back(ev);
            }
        }
    }

    for (auto& msg : out.messages) {
        std::stable_sort(
            msg.events.begin(), msg.events.end(),
            [](const Event& a, const Event& b) { return a.t < b.t; });
    }

    out.ground_truth.video_name = spec.name;
    out.ground_truth.geometry = spec.geometry;
    const ChunkingConfig default_chunking;
    const std::uint64_t n_chunks =
        n_messages / static_cast<std::uint64_t>(default_chunking.messages_per_chunk);
    for (std::uint64_t k = 0; k < n_chunks; ++k) {
        GroundTruthFrame frame;
        frame.chunk_index = k;
        const double t_mid = std::min(
            chunk_window_midpoint_s(k, default_chunking, spec.message_rate_hz),
            spec.duration_s);
        frame.boxes = ground_truth_boxes(spec, t_mid);
        out.ground_truth.frames.push_back(std::move(frame));
    }
    return out;
}

SceneSpec parse_scene_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("scene JSON: ") + e.what());
    }
    SceneSpec spec;
    try {
        spec.name = j.value("name", std::string("scene"));
        if (j.contains("geometry")) {
            spec.geometry.width = j["geometry"].at("width").get<int>();
            spec.geometry.height = j["geometry"].at("height").get<int>();
        }
        spec.duration_s = j.at("duration_s").get<double>();
        spec.message_rate_hz = j.value("message_rate_hz", 30.0);
        spec.contrast_threshold = j.value("contrast_threshold", 0.2);
        spec.noise_rate_hz_per_pixel = j.value("noise_rate_hz_per_pixel", 0.0);
        spec.substep_s = j.value("substep_s", 0.001);
        spec.seed = j.value("seed", static_cast<std::uint64_t>(0));
        for (const auto& js : j.value("shapes", nlohmann::json::array())) {
            MovingShape s;
            const std::string kind = js.at("kind").get<std::string>();
            if (kind == "rectangle") {
                s.kind = ShapeKind::kRectangle;
                s.width = js.at("width").get<double>();
                s.height = js.at("height").get<double>();
            } else if (kind == "disc") {
                s.kind = ShapeKind::kDisc;
                s.radius = js.at("radius").get<double>();
            } else {
                throw ConfigError("unknown shape kind '" + kind + "'");
            }
            s.intensity = js.at("intensity").get<double>();
            const auto& jt = js.at("trajectory");
            const std::string tkind = jt.at("kind").get<std::string>();
            if (tkind == "linear") {
                s.trajectory.kind = TrajectoryKind::kLinear;
                s.trajectory.start_x = jt.at("start")[0].get<double>();
                s.trajectory.start_y = jt.at("start")[1].get<double>();
                s.trajectory.velocity_x = jt.at("velocity")[0].get<double>();
                s.trajectory.velocity_y = jt.at("velocity")[1].get<double>();
            } else if (tkind == "circular") {
                s.trajectory.kind = TrajectoryKind::kCircular;
                s.trajectory.center_x = jt.at("center")[0].get<double>();
                s.trajectory.center_y = jt.at("center")[1].get<double>();
                s.trajectory.radius = jt.at("radius").get<double>();
                s.trajectory.angular_rate = jt.at("angular_rate").get<double>();
            } else {
                throw ConfigError("unknown trajectory kind '" + tkind + "'");
            }
            spec.shapes.push_back(s);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("scene JSON: ") + e.what());
    }
    validate(spec);
    return spec;
}

}  // namespace evrp
