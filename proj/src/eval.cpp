#include "evrp/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "evrp/errors.hpp"

namespace evrp {

void validate(const GroundTruthSet& gt) {
    if (gt.geometry.width < 1 || gt.geometry.height < 1)
        throw ValidationError("ground truth geometry must be at least 1x1");
    for (std::size_t i = 0; i < gt.frames.size(); ++i) {
        if (i > 0 && gt.frames[i].chunk_index <= gt.frames[i - 1].chunk_index)
            throw ValidationError("ground truth chunk indices must be strictly "
                                  "increasing (video '" + gt.video_name + "')");
        for (const BBox& b : gt.frames[i].boxes) {
            if (b.x_min > b.x_max || b.y_min > b.y_max)
                throw ValidationError("ground truth box with inverted corners");
            if (b.x_min < 0.0 || b.y_min < 0.0 ||
                b.x_max > static_cast<double>(gt.geometry.width) ||
                b.y_max > static_cast<double>(gt.geometry.height))
                throw ValidationError("ground truth box outside geometry");
        }
    }
}

void validate(const EvalConfig& cfg) {
    if (!(cfg.iou_threshold > 0.0) || cfg.iou_threshold > 1.0)
        throw ConfigError("iou_threshold must be in (0, 1]");
    if (cfg.max_detections_per_chunk < 1)
        throw ConfigError("max_detections_per_chunk must be >= 1");
}

MatchResult match_detections(const ProposalSet& proposals,
                             const std::vector<BBox>& gt_boxes,
                             const EvalConfig& cfg) {
    validate(cfg);
    const std::size_t retained =
        std::min(proposals.proposals.size(),
                 static_cast<std::size_t>(cfg.max_detections_per_chunk));

    MatchResult result;
    result.tp.assign(retained, false);
    std::vector<bool> gt_used(gt_boxes.size(), false);

    for (std::size_t d = 0; d < retained; ++d) {
        double best_iou = 0.0;
        std::size_t best_gt = gt_boxes.size();
        for (std::size_t g = 0; g < gt_boxes.size(); ++g) {
            if (gt_used[g]) continue;
            const double overlap = iou(proposals.proposals[d].box, gt_boxes[g]);
            if (overlap > best_iou) {  // ties keep the lowest gt index
                best_iou = overlap;
                best_gt = g;
            }
        }
        if (best_gt != gt_boxes.size() && best_iou >= cfg.iou_threshold) {
            result.tp[d] = true;
            gt_used[best_gt] = true;
        }
    }
    result.fn = static_cast<int>(
        std::count(gt_used.begin(), gt_used.end(), false));
    return result;
}

namespace {

void sort_detections(std::vector<FlaggedDetection>& dets) {
    std::sort(dets.begin(), dets.end(),
              [](const FlaggedDetection& a, const FlaggedDetection& b) {
                  if (a.score != b.score) return a.score > b.score;
                  if (a.chunk_index != b.chunk_index)
                      return a.chunk_index < b.chunk_index;
                  return a.index_in_chunk < b.index_in_chunk;
              });
}

}  // namespace

double average_precision(std::vector<FlaggedDetection> detections,
                         std::size_t total_gt) {
    if (total_gt == 0) return detections.empty() ? 1.0 : 0.0;
    if (detections.empty()) return 0.0;
    sort_detections(detections);

    const std::size_t n = detections.size();
    std::vector<double> precision(n);
    std::vector<double> recall(n);
    std::size_t tp = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (detections[i].tp) ++tp;
        precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
        recall[i] = static_cast<double>(tp) / static_cast<double>(total_gt);
    }
    // Monotone envelope: best precision achievable at or beyond each rank.
    for (std::size_t i = n - 1; i-- > 0;)
        precision[i] = std::max(precision[i], precision[i + 1]);

    double sum = 0.0;
    std::size_t i = 0;
    for (int j = 0; j <= 100; ++j) {
        const double r = static_cast<double>(j) / 100.0;
        while (i < n && recall[i] < r - 1e-9) ++i;
        if (i == n) break;  // recall level never attained
        sum += precision[i];
    }
    return sum / 101.0;
}

double average_recall(const std::vector<FlaggedDetection>& detections,
                      std::size_t total_gt) {
    if (total_gt == 0) return 1.0;
    std::size_t tp = 0;
    for (const auto& d : detections)
        if (d.tp) ++tp;
    return static_cast<double>(tp) / static_cast<double>(total_gt);
}

EvalReport evaluate(const std::vector<std::vector<ProposalSet>>& proposals,
                    const std::vector<GroundTruthSet>& gts,
                    const EvalConfig& cfg) {
    validate(cfg);
    if (proposals.size() != gts.size())
        throw ValidationError("proposal stream count (" +
                              std::to_string(proposals.size()) +
                              ") does not match ground truth count (" +
                              std::to_string(gts.size()) + ")");

    EvalReport report;
    report.iou_threshold = cfg.iou_threshold;

    for (std::size_t v = 0; v < gts.size(); ++v) {
        const GroundTruthSet& gt = gts[v];
        validate(gt);
        if (gt.frames.empty()) {
            report.warnings.push_back("video '" + gt.video_name +
                                      "' has no ground truth frames; excluded");
            continue;
        }

        std::unordered_map<std::uint64_t, const GroundTruthFrame*> frame_of;
        std::size_t total_gt = 0;
        std::int64_t max_boxes = 0;
        for (const auto& f : gt.frames) {
            frame_of[f.chunk_index] = &f;
            total_gt += f.boxes.size();
            max_boxes = std::max(max_boxes,
                                 static_cast<std::int64_t>(f.boxes.size()));
        }

        std::vector<FlaggedDetection> dets;
        std::unordered_set<std::uint64_t> seen_chunks;
        std::int64_t tp = 0;
        std::int64_t fp = 0;
        for (const ProposalSet& set : proposals[v]) {
            if (!seen_chunks.insert(set.chunk_index).second)
                throw ValidationError("video '" + gt.video_name +
                                      "' has duplicate proposals for chunk " +
                                      std::to_string(set.chunk_index));
            const auto it = frame_of.find(set.chunk_index);
            if (it == frame_of.end()) {
                report.warnings.push_back(
                    "video '" + gt.video_name + "': chunk " +
                    std::to_string(set.chunk_index) +
                    " has no ground truth; skipped");
                continue;
            }
            const MatchResult match = match_detections(set, it->second->boxes, cfg);
            for (std::size_t d = 0; d < match.tp.size(); ++d) {
                dets.push_back({set.proposals[d].score, set.chunk_index,
                                static_cast<std::uint32_t>(d), match.tp[d]});
                if (match.tp[d])
                    ++tp;
                else
                    ++fp;
            }
        }

        VideoEval ve;
        ve.name = gt.video_name;
        ve.ap = average_precision(dets, total_gt);
        ve.ar = average_recall(dets, total_gt);
        ve.tp = tp;
        ve.fp = fp;
        ve.fn = static_cast<std::int64_t>(total_gt) - tp;
        ve.max_boxes_per_frame = max_boxes;
        report.per_video.push_back(std::move(ve));
    }

    if (!report.per_video.empty()) {
        double ap_sum = 0.0;
        double ar_sum = 0.0;
        for (const auto& ve : report.per_video) {
            ap_sum += ve.ap;
            ar_sum += ve.ar;
        }
        report.map = ap_sum / static_cast<double>(report.per_video.size());
        report.mar = ar_sum / static_cast<double>(report.per_video.size());
    }
    return report;
}

GroundTruthSet parse_ground_truth_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("ground truth JSON: ") + e.what());
    }
    GroundTruthSet gt;
    try {
        gt.video_name = j.at("video_name").get<std::string>();
        gt.geometry.width = j.at("width").get<int>();
        gt.geometry.height = j.at("height").get<int>();
        for (const auto& f : j.at("frames")) {
            GroundTruthFrame frame;
            frame.chunk_index = f.at("chunk_index").get<std::uint64_t>();
            for (const auto& b : f.at("boxes")) {
                if (b.size() != 4)
                    throw ValidationError("ground truth box must have 4 values");
                frame.boxes.push_back(BBox{b[0].get<double>(), b[1].get<double>(),
                                           b[2].get<double>(),
                                           b[3].get<double>()});
            }
            gt.frames.push_back(std::move(frame));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("ground truth JSON: ") + e.what());
    }
    validate(gt);
    return gt;
}

std::string to_json(const GroundTruthSet& gt) {
    nlohmann::ordered_json j;
    j["video_name"] = gt.video_name;
    j["width"] = gt.geometry.width;
    j["height"] = gt.geometry.height;
    auto frames = nlohmann::ordered_json::array();
    for (const auto& f : gt.frames) {
        nlohmann::ordered_json jf;
        jf["chunk_index"] = f.chunk_index;
        auto boxes = nlohmann::ordered_json::array();
        for (const BBox& b : f.boxes)
            boxes.push_back({b.x_min, b.y_min, b.x_max, b.y_max});
        jf["boxes"] = std::move(boxes);
        frames.push_back(std::move(jf));
    }
    j["frames"] = std::move(frames);
    return j.dump(2) + "\n";
}

std::string to_json(const EvalReport& report) {
    nlohmann::ordered_json j;
    j["iou_threshold"] = report.iou_threshold;
    auto videos = nlohmann::ordered_json::array();
    for (const auto& ve : report.per_video) {
        nlohmann::ordered_json jv;
        jv["name"] = ve.name;
        jv["ap"] = ve.ap;
        jv["ar"] = ve.ar;
        jv["tp"] = ve.tp;
        jv["fp"] = ve.fp;
        jv["fn"] = ve.fn;
        jv["num_objects"] = ve.max_boxes_per_frame;
        videos.push_back(std::move(jv));
    }
    j["per_video"] = std::move(videos);
    j["map"] = report.map;
    j["mar"] = report.mar;
    j["warnings"] = report.warnings;
    return j.dump(2) + "\n";
}

std::string to_table(const EvalReport& report) {
    std::size_t name_width = 5;
    for (const auto& ve : report.per_video)
        name_width = std::max(name_width, ve.name.size());

    std::ostringstream os;
    os << std::left << std::setw(static_cast<int>(name_width + 2)) << "video"
       << std::setw(9) << "IoU" << std::setw(10) << "#objects" << std::setw(9)
       << "AR" << std::setw(9) << "AP" << '\n';
    for (const auto& ve : report.per_video) {
        std::ostringstream iou_col;
        iou_col << ">=" << std::fixed << std::setprecision(2)
                << report.iou_threshold;
        os << std::left << std::setw(static_cast<int>(name_width + 2)) << ve.name
           << std::setw(9) << iou_col.str() << std::setw(10)
           << ve.max_boxes_per_frame << std::setw(9) << std::fixed
           << std::setprecision(4) << ve.ar << std::setw(9) << ve.ap << '\n';
    }
    os << "mAP = " << std::fixed << std::setprecision(4) << report.map << '\n';
    os << "mAR = " << std::fixed << std::setprecision(4) << report.mar << '\n';
    return os.str();
}

}  // namespace evrp
