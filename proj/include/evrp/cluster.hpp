#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evrp/rasterize.hpp"
#include "evrp/types.hpp"

namespace evrp {

struct DbscanConfig {
    double eps = 5.0;
    int min_pts = 8;
    int min_cluster_size = 15;
    double score_norm = 100.0;
};

void validate(const DbscanConfig& cfg);

struct Point2i {
    int x = 0;
    int y = 0;
};

inline constexpr int kNoise = -1;

// Per-point labeling: kNoise or a cluster id assigned in discovery order.
struct DbscanResult {
    std::vector<int> labels;
    int cluster_count = 0;
};

// Classical DBSCAN over integer pixel coordinates with Euclidean distance
// (a core point has >= min_pts points within eps, itself included). Points
// are processed in lexicographic (y, x) order whatever order they arrive in,
// so the labeling is a pure function of the point set. Neighborhood lookups
// go through a grid of eps-sided cells; the O(n^2) scan lives in the test
// suite as the reference oracle.
DbscanResult dbscan(const std::vector<Point2i>& points, const DbscanConfig& cfg);

struct Cluster {
    std::vector<Point2i> points;

    std::size_t size() const { return points.size(); }
};

// Clusters passing the validity filter (size >= min_cluster_size), ordered by
// cluster id. Noise is dropped.
std::vector<Cluster> extract_clusters(const DbscanResult& labeling,
                                      const std::vector<Point2i>& points,
                                      const DbscanConfig& cfg);

// Tightest box around the cluster in the continuous convention: a single
// pixel becomes a unit-area box.
BBox cluster_bbox(const Cluster& c);

// Confidence from evidence strength: min(1, size / score_norm).
double score(const Cluster& c, const DbscanConfig& cfg);

struct Proposal {
    BBox box;
    double score = 0.0;
};

// Proposals for one chunk, sorted by descending score, ties by
// (x_min, y_min) ascending. This is the stream handed to the detector head in
// place of RPN output.
struct ProposalSet {
    std::uint64_t chunk_index = 0;
    std::uint64_t t_start = 0;
    std::uint64_t t_end = 0;
    std::vector<Proposal> proposals;
};

// Full per-chunk pipeline: rasterize, binarize, erode, cluster the surviving
// occupancy pixels, box and score each valid cluster.
ProposalSet propose(const EventChunk& chunk, const SensorGeometry& geometry,
                    const StructuringElement& se, const DbscanConfig& cfg,
                    int erosion_passes = 1);

// propose() over many chunks with an optional worker pool; output order and
// content are identical to sequential execution.
std::vector<ProposalSet> propose_all(const std::vector<EventChunk>& chunks,
                                     const SensorGeometry& geometry,
                                     const StructuringElement& se,
                                     const DbscanConfig& cfg,
                                     int erosion_passes = 1, int workers = 1);

// JSON Lines boundary format:
// {"chunk_index": n, "t_start_us": a, "t_end_us": b,
//  "boxes": [[x1,y1,x2,y2],...], "scores": [...]}
std::string to_jsonl_line(const ProposalSet& set);
std::string to_jsonl(const std::vector<ProposalSet>& sets);
std::vector<ProposalSet> parse_proposal_jsonl(const std::string& text);

}  // namespace evrp
