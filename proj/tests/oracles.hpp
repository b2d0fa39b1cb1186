#pragma once

// Independent reference implementations used as test oracles. Everything here
// is deliberately written the slow, obvious way and must stay decoupled from
// the library code paths it checks.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "evrp/cluster.hpp"
#include "evrp/eval.hpp"
#include "evrp/rasterize.hpp"
#include "evrp/types.hpp"

namespace oracles {

// Area by counting sub-pixel cell centers inside the box.
inline double area_grid(const evrp::BBox& b, double step = 0.1) {
    if (b.x_max <= b.x_min || b.y_max <= b.y_min) return 0.0;
    long count = 0;
    for (double y = b.y_min + step / 2; y < b.y_max; y += step)
        for (double x = b.x_min + step / 2; x < b.x_max; x += step) ++count;
    return static_cast<double>(count) * step * step;
}

// IoU by counting cell centers over the union extent of both boxes.
inline double iou_grid(const evrp::BBox& a, const evrp::BBox& b,
                       double step = 0.1) {
    const double x0 = std::min(a.x_min, b.x_min);
    const double x1 = std::max(a.x_max, b.x_max);
    const double y0 = std::min(a.y_min, b.y_min);
    const double y1 = std::max(a.y_max, b.y_max);
    long inter = 0;
    long uni = 0;
    for (double y = y0 + step / 2; y < y1; y += step) {
        for (double x = x0 + step / 2; x < x1; x += step) {
            const bool in_a = x > a.x_min && x < a.x_max && y > a.y_min &&
                              y < a.y_max;
            const bool in_b = x > b.x_min && x < b.x_max && y > b.y_min &&
                              y < b.y_max;
            if (in_a && in_b) ++inter;
            if (in_a || in_b) ++uni;
        }
    }
    if (uni == 0) return 0.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

// O(n^2) DBSCAN with the same fixed (y, x) processing order and classical
// semantics as the grid-indexed implementation, but no spatial index at all.
inline evrp::DbscanResult dbscan_brute(const std::vector<evrp::Point2i>& points,
                                       const evrp::DbscanConfig& cfg) {
    constexpr int kUnclassified = -2;
    const std::size_t n = points.size();
    evrp::DbscanResult result;
    result.labels.assign(n, kUnclassified);

    const double eps_sq = cfg.eps * cfg.eps;
    auto neighbors_of = [&](int i) {
        std::vector<int> out;
        for (std::size_t j = 0; j < n; ++j) {
            const double dx = points[static_cast<std::size_t>(i)].x -
                              points[j].x;
            const double dy = points[static_cast<std::size_t>(i)].y -
                              points[j].y;
            if (dx * dx + dy * dy <= eps_sq) out.push_back(static_cast<int>(j));
        }
        return out;
    };

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (points[static_cast<std::size_t>(a)].y !=
            points[static_cast<std::size_t>(b)].y)
            return points[static_cast<std::size_t>(a)].y <
                   points[static_cast<std::size_t>(b)].y;
        return points[static_cast<std::size_t>(a)].x <
               points[static_cast<std::size_t>(b)].x;
    });

    int next_id = 0;
    for (int i : order) {
        if (result.labels[static_cast<std::size_t>(i)] != kUnclassified)
            continue;
        std::vector<int> seeds = neighbors_of(i);
        if (seeds.size() < static_cast<std::size_t>(cfg.min_pts)) {
            result.labels[static_cast<std::size_t>(i)] = evrp::kNoise;
            continue;
        }
        const int id = next_id++;
        result.labels[static_cast<std::size_t>(i)] = id;
        for (std::size_t head = 0; head < seeds.size(); ++head) {
            const int j = seeds[head];
            int& label = result.labels[static_cast<std::size_t>(j)];
            if (label == evrp::kNoise) label = id;
            if (label != kUnclassified) continue;
            label = id;
            const std::vector<int> more = neighbors_of(j);
            if (more.size() >= static_cast<std::size_t>(cfg.min_pts))
                seeds.insert(seeds.end(), more.begin(), more.end());
        }
    }
    result.cluster_count = next_id;
    return result;
}

// Erosion straight from the definition, one neighborhood at a time.
inline evrp::BinaryFrame erode_brute(const evrp::BinaryFrame& frame,
                                     const evrp::StructuringElement& se) {
    evrp::BinaryFrame out;
    out.geometry = frame.geometry;
    out.bits.assign(frame.bits.size(), 0);
    for (int y = 0; y < frame.geometry.height; ++y) {
        for (int x = 0; x < frame.geometry.width; ++x) {
            bool keep = true;
            for (int sy = 0; sy < se.height && keep; ++sy) {
                for (int sx = 0; sx < se.width && keep; ++sx) {
                    if (!se.mask[static_cast<std::size_t>(sy) * se.width + sx])
                        continue;
                    const int nx = x + sx - se.width / 2;
                    const int ny = y + sy - se.height / 2;
                    if (nx < 0 || nx >= frame.geometry.width || ny < 0 ||
                        ny >= frame.geometry.height || !frame.get(nx, ny))
                        keep = false;
                }
            }
            if (keep) out.bits[out.idx(x, y)] = 1;
        }
    }
    return out;
}

// Reference greedy matcher written directly from its definition: walk
// detections in score order, give each the best unmatched ground-truth box
// (ties to the lowest index), flag TP at or above the threshold.
struct RefMatch {
    std::vector<bool> tp;
    int fn = 0;
};

inline RefMatch match_reference(const std::vector<evrp::BBox>& dets_by_score,
                                const std::vector<evrp::BBox>& gts,
                                double threshold) {
    RefMatch result;
    std::vector<bool> used(gts.size(), false);
    for (const evrp::BBox& det : dets_by_score) {
        int best = -1;
        double best_iou = 0.0;
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (used[g]) continue;
            const double v = evrp::iou(det, gts[g]);
            if (v > best_iou) {
                best_iou = v;
                best = static_cast<int>(g);
            }
        }
        if (best >= 0 && best_iou >= threshold) {
            used[static_cast<std::size_t>(best)] = true;
            result.tp.push_back(true);
        } else {
            result.tp.push_back(false);
        }
    }
    for (bool u : used)
        if (!u) ++result.fn;
    return result;
}

}  // namespace oracles
