#include "evrp/cluster.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "evrp/errors.hpp"

namespace evrp {

void validate(const DbscanConfig& cfg) {
    if (cfg.eps <= 0.0) throw ConfigError("eps must be positive");
    if (cfg.min_pts < 1) throw ConfigError("min_pts must be >= 1");
    if (cfg.min_cluster_size < cfg.min_pts)
        throw ConfigError("min_cluster_size must be >= min_pts");
    if (cfg.score_norm <= 0.0) throw ConfigError("score_norm must be positive");
}

namespace {

constexpr int kUnclassified = -2;

std::uint64_t cell_key(int cx, int cy) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(cx)) << 32) |
           static_cast<std::uint32_t>(cy);
}

// Grid of eps-sided cells; any point within eps of a query lies in the 3x3
// cell block around it.
class NeighborGrid {
public:
    NeighborGrid(const std::vector<Point2i>& points, double eps)
        : points_(points), eps_(eps), eps_sq_(eps * eps) {
        cells_.reserve(points.size());
        for (std::size_t i = 0; i < points.size(); ++i) {
            cells_[cell_key(cell_of(points[i].x), cell_of(points[i].y))]
                .push_back(static_cast<int>(i));
        }
    }

    // Neighbor indices (query included), ascending.
    void query(int i, std::vector<int>& out) const {
        out.clear();
        const Point2i p = points_[static_cast<std::size_t>(i)];
        const int cx = cell_of(p.x);
        const int cy = cell_of(p.y);
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                const auto it = cells_.find(cell_key(cx + dx, cy + dy));
                if (it == cells_.end()) continue;
                for (int j : it->second) {
                    const Point2i q = points_[static_cast<std::size_t>(j)];
                    const double ddx = p.x - q.x;
                    const double ddy = p.y - q.y;
                    if (ddx * ddx + ddy * ddy <= eps_sq_) out.push_back(j);
                }
            }
        }
        std::sort(out.begin(), out.end());
    }

private:
    int cell_of(int v) const {
        return static_cast<int>(std::floor(static_cast<double>(v) / eps_));
    }

    const std::vector<Point2i>& points_;
    double eps_;
    double eps_sq_;
    std::unordered_map<std::uint64_t, std::vector<int>> cells_;
};

}  // namespace

DbscanResult dbscan(const std::vector<Point2i>& points, const DbscanConfig& cfg) {
    validate(cfg);
    const std::size_t n = points.size();
    DbscanResult result;
    result.labels.assign(n, kUnclassified);
    if (n == 0) return result;

    // Fixed processing order: lexicographic (y, x). Input order never matters.
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const Point2i& pa = points[static_cast<std::size_t>(a)];
        const Point2i& pb = points[static_cast<std::size_t>(b)];
        if (pa.y != pb.y) return pa.y < pb.y;
        return pa.x < pb.x;
    });

    NeighborGrid grid(points, cfg.eps);
    const std::size_t min_pts = static_cast<std::size_t>(cfg.min_pts);

    std::vector<int> neighbors;
    std::vector<int> expansion;
    int next_id = 0;
    for (int i : order) {
        auto& label = result.labels[static_cast<std::size_t>(i)];
        if (label != kUnclassified) continue;
        grid.query(i, neighbors);
        if (neighbors.size() < min_pts) {
            label = kNoise;
            continue;
        }

        const int cluster_id = next_id++;
        label = cluster_id;
        expansion.assign(neighbors.begin(), neighbors.end());
        for (std::size_t head = 0; head < expansion.size(); ++head) {
            const int j = expansion[head];
            auto& jl = result.labels[static_cast<std::size_t>(j)];
            if (jl == kNoise) jl = cluster_id;  // noise becomes a border point
            if (jl != kUnclassified) continue;
            jl = cluster_id;
            grid.query(j, neighbors);
            if (neighbors.size() >= min_pts)
                expansion.insert(expansion.end(), neighbors.begin(),
                                 neighbors.end());
        }
    }
    result.cluster_count = next_id;
    return result;
}

std::vector<Cluster> extract_clusters(const DbscanResult& labeling,
                                      const std::vector<Point2i>& points,
                                      const DbscanConfig& cfg) {
    validate(cfg);
    if (labeling.labels.size() != points.size())
        throw ValidationError("labeling does not match the point list");
    std::vector<Cluster> by_id(static_cast<std::size_t>(labeling.cluster_count));
    for (std::size_t i = 0; i < points.size(); ++i) {
        const int label = labeling.labels[i];
        if (label == kNoise) continue;
        by_id[static_cast<std::size_t>(label)].points.push_back(points[i]);
    }
    std::vector<Cluster> valid;
    for (auto& c : by_id) {
        if (c.points.size() >= static_cast<std::size_t>(cfg.min_cluster_size))
            valid.push_back(std::move(c));
    }
    return valid;
}

BBox cluster_bbox(const Cluster& c) {
    if (c.points.empty()) throw ValidationError("cluster has no points");
    int x_min = c.points.front().x;
    int x_max = x_min;
    int y_min = c.points.front().y;
    int y_max = y_min;
    for (const Point2i& p : c.points) {
        x_min = std::min(x_min, p.x);
        x_max = std::max(x_max, p.x);
        y_min = std::min(y_min, p.y);
        y_max = std::max(y_max, p.y);
    }
    return BBox{static_cast<double>(x_min), static_cast<double>(y_min),
                static_cast<double>(x_max + 1), static_cast<double>(y_max + 1)};
}

double score(const Cluster& c, const DbscanConfig& cfg) {
    if (c.points.empty()) throw ValidationError("cluster has no points");
    return std::min(1.0, static_cast<double>(c.points.size()) / cfg.score_norm);
}

ProposalSet propose(const EventChunk& chunk, const SensorGeometry& geometry,
                    const StructuringElement& se, const DbscanConfig& cfg,
                    int erosion_passes) {
    ProposalSet out;
    out.chunk_index = chunk.chunk_index;
    out.t_start = chunk.t_start;
    out.t_end = chunk.t_end;

    const PseudoFrame frame = build_frame(chunk, geometry);
    const BinaryFrame eroded = erode_n(binarize(frame), se, erosion_passes);

    std::vector<Point2i> points;
    for (int y = 0; y < geometry.height; ++y)
        for (int x = 0; x < geometry.width; ++x)
            if (eroded.bits[eroded.idx(x, y)]) points.push_back({x, y});

    const DbscanResult labeling = dbscan(points, cfg);
    for (const Cluster& c : extract_clusters(labeling, points, cfg))
        out.proposals.push_back({cluster_bbox(c), score(c, cfg)});

    std::stable_sort(out.proposals.begin(), out.proposals.end(),
                     [](const Proposal& a, const Proposal& b) {
                         if (a.score != b.score) return a.score > b.score;
                         if (a.box.x_min != b.box.x_min)
                             return a.box.x_min < b.box.x_min;
                         return a.box.y_min < b.box.y_min;
                     });
    return out;
}

std::vector<ProposalSet> propose_all(const std::vector<EventChunk>& chunks,
                                     const SensorGeometry& geometry,
                                     const StructuringElement& se,
                                     const DbscanConfig& cfg,
                                     int erosion_passes, int workers) {
    if (workers < 1) throw ConfigError("worker count must be >= 1");
    std::vector<ProposalSet> results(chunks.size());
    if (workers == 1 || chunks.size() <= 1) {
        for (std::size_t i = 0; i < chunks.size(); ++i)
            results[i] = propose(chunks[i], geometry, se, cfg, erosion_passes);
        return results;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= chunks.size()) return;
            try {
                results[i] =
                    propose(chunks[i], geometry, se, cfg, erosion_passes);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const int n_threads = std::min<int>(workers, static_cast<int>(chunks.size()));
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return results;
}

std::string to_jsonl_line(const ProposalSet& set) {
    nlohmann::ordered_json j;
    j["chunk_index"] = set.chunk_index;
    j["t_start_us"] = set.t_start;
    j["t_end_us"] = set.t_end;
    auto boxes = nlohmann::ordered_json::array();
    auto scores = nlohmann::ordered_json::array();
    for (const Proposal& p : set.proposals) {
        boxes.push_back({p.box.x_min, p.box.y_min, p.box.x_max, p.box.y_max});
        scores.push_back(p.score);
    }
    j["boxes"] = std::move(boxes);
    j["scores"] = std::move(scores);
    return j.dump();
}

std::string to_jsonl(const std::vector<ProposalSet>& sets) {
    std::string out;
    for (const ProposalSet& s : sets) {
        out += to_jsonl_line(s);
        out += '\n';
    }
    return out;
}

std::vector<ProposalSet> parse_proposal_jsonl(const std::string& text) {
    std::vector<ProposalSet> sets;
    std::istringstream is(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what(),
                             static_cast<long long>(line_no));
        }
        ProposalSet set;
        try {
            set.chunk_index = j.at("chunk_index").get<std::uint64_t>();
            set.t_start = j.at("t_start_us").get<std::uint64_t>();
            set.t_end = j.at("t_end_us").get<std::uint64_t>();
            const auto& boxes = j.at("boxes");
            const auto& scores = j.at("scores");
            if (boxes.size() != scores.size())
                throw ValidationError("line " + std::to_string(line_no) +
                                      ": boxes and scores differ in length");
            for (std::size_t i = 0; i < boxes.size(); ++i) {
                const auto& b = boxes[i];
                if (b.size() != 4)
                    throw ValidationError("line " + std::to_string(line_no) +
                                          ": box must have 4 coordinates");
                Proposal p;
                p.box = BBox{b[0].get<double>(), b[1].get<double>(),
                             b[2].get<double>(), b[3].get<double>()};
                p.score = scores[i].get<double>();
                if (p.box.x_min > p.box.x_max || p.box.y_min > p.box.y_max)
                    throw ValidationError("line " + std::to_string(line_no) +
                                          ": degenerate box ordering");
                if (!(p.score > 0.0) || p.score > 1.0)
                    throw ValidationError("line " + std::to_string(line_no) +
                                          ": score must be in (0,1]");
                set.proposals.push_back(p);
            }
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what(),
                             static_cast<long long>(line_no));
        }
        for (std::size_t i = 1; i < set.proposals.size(); ++i) {
            if (set.proposals[i].score > set.proposals[i - 1].score)
                throw ValidationError("line " + std::to_string(line_no) +
                                      ": proposals not sorted by score");
        }
        sets.push_back(std::move(set));
    }
    return sets;
}

}  // namespace evrp
