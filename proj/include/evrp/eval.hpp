#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evrp/cluster.hpp"
#include "evrp/types.hpp"

namespace evrp {

// Per-chunk reference boxes for one video.
struct GroundTruthFrame {
    std::uint64_t chunk_index = 0;
    std::vector<BBox> boxes;
};

struct GroundTruthSet {
    std::string video_name;
    SensorGeometry geometry;
    std::vector<GroundTruthFrame> frames;
};

void validate(const GroundTruthSet& gt);

struct EvalConfig {
    double iou_threshold = 0.75;
    int max_detections_per_chunk = 100;
};

void validate(const EvalConfig& cfg);

// One flag per retained proposal, in score order; proposals past the
// per-chunk detection cap are dropped before matching.
struct MatchResult {
    std::vector<bool> tp;
    int fn = 0;
};

// Greedy one-to-one matching in score order: each proposal takes the
// unmatched ground-truth box of highest IoU if that IoU reaches the
// threshold; IoU ties go to the lowest ground-truth index.
MatchResult match_detections(const ProposalSet& proposals,
                             const std::vector<BBox>& gt_boxes,
                             const EvalConfig& cfg);

// One pooled video-wide detection: score plus (chunk_index, order-in-chunk)
// tie-breakers and its TP/FP flag.
struct FlaggedDetection {
    double score = 0.0;
    std::uint64_t chunk_index = 0;
    std::uint32_t index_in_chunk = 0;
    bool tp = false;
};

// 101-point interpolated average precision at the single IoU threshold.
// total_gt == 0 degenerates to 1.0 with no detections and 0.0 otherwise.
double average_precision(std::vector<FlaggedDetection> detections,
                         std::size_t total_gt);

// Recall at the IoU threshold: matched ground truth over total ground truth.
double average_recall(const std::vector<FlaggedDetection>& detections,
                      std::size_t total_gt);

struct VideoEval {
    std::string name;
    double ap = 0.0;
    double ar = 0.0;
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    std::int64_t max_boxes_per_frame = 0;
};

struct EvalReport {
    std::vector<VideoEval> per_video;
    double map = 0.0;  // unweighted mean of per-video AP
    double mar = 0.0;  // unweighted mean of per-video AR
    double iou_threshold = 0.75;
    std::vector<std::string> warnings;
};

// Per-video AP/AR and their unweighted means. proposals[i] pairs with gts[i].
// Proposal chunks absent from the ground truth are skipped with a warning;
// videos with no ground-truth frames are excluded from the means.
EvalReport evaluate(const std::vector<std::vector<ProposalSet>>& proposals,
                    const std::vector<GroundTruthSet>& gts,
                    const EvalConfig& cfg);

GroundTruthSet parse_ground_truth_json(const std::string& text);
std::string to_json(const GroundTruthSet& gt);

std::string to_json(const EvalReport& report);
// Aligned table with video, IoU, #objects, AR, AP columns and a trailing
// mAP line.
std::string to_table(const EvalReport& report);

}  // namespace evrp
