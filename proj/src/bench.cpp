#include "evrp/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "evrp/errors.hpp"
#include "evrp/rasterize.hpp"

namespace evrp {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_us(Clock::time_point from, Clock::time_point to) {
    return std::chrono::duration<double, std::micro>(to - from).count();
}

constexpr const char* kStageNames[] = {"build_frame", "binarize", "erode",
                                       "dbscan", "extract_bbox"};
constexpr std::size_t kStageCount = 5;

}  // namespace

StageStats summarize(const std::string& stage, std::vector<double> samples_us) {
    StageStats st;
    st.stage = stage;
    st.samples = samples_us.size();
    if (samples_us.empty()) return st;
    std::sort(samples_us.begin(), samples_us.end());
    const std::size_t n = samples_us.size();
    st.median_us = (n % 2 == 1)
                       ? samples_us[n / 2]
                       : 0.5 * (samples_us[n / 2 - 1] + samples_us[n / 2]);
    st.mean_us = std::accumulate(samples_us.begin(), samples_us.end(), 0.0) /
                 static_cast<double>(n);
    const std::size_t rank = static_cast<std::size_t>(
        std::ceil(0.95 * static_cast<double>(n)));
    st.p95_us = samples_us[std::max<std::size_t>(rank, 1) - 1];
    st.max_us = samples_us.back();
    return st;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

BenchReport run_bench(const StreamHeader& header,
                      const std::vector<EventMessage>& messages,
                      const PipelineConfig& cfg, std::uint64_t budget_us,
                      int repetitions) {
    if (repetitions < 4)
        throw ConfigError(
            "bench needs >= 4 repetitions (1 warm-up + >= 3 measured)");
    const std::vector<EventChunk> chunks =
        chunk_messages(messages, cfg.chunking, header.message_rate_hz);
    if (chunks.empty())
        throw ValidationError("stream yields no chunks to benchmark");

    std::vector<std::vector<double>> stage_samples(kStageCount);
    std::vector<double> total_samples;
    std::size_t total_events = 0;
    for (const auto& c : chunks) total_events += c.events.size();

    std::string instrumented_jsonl;
    for (int rep = 0; rep < repetitions; ++rep) {
        const bool measured = rep > 0;
        std::string rep_jsonl;
        for (const EventChunk& chunk : chunks) {
            const auto t0 = Clock::now();
            const PseudoFrame frame = build_frame(chunk, header.geometry);
            const auto t1 = Clock::now();
            const BinaryFrame binary = binarize(frame);
            const auto t2 = Clock::now();
            const BinaryFrame eroded =
                erode_n(binary, cfg.erosion_element, cfg.erosion_passes);
            const auto t3 = Clock::now();
            std::vector<Point2i> points;
            for (int y = 0; y < header.geometry.height; ++y)
                for (int x = 0; x < header.geometry.width; ++x)
                    if (eroded.bits[eroded.idx(x, y)]) points.push_back({x, y});
            const DbscanResult labeling = dbscan(points, cfg.dbscan);
            const auto t4 = Clock::now();
            ProposalSet set;
            set.chunk_index = chunk.chunk_index;
            set.t_start = chunk.t_start;
            set.t_end = chunk.t_end;
            for (const Cluster& c : extract_clusters(labeling, points, cfg.dbscan))
                set.proposals.push_back({cluster_bbox(c), score(c, cfg.dbscan)});
            std::stable_sort(set.proposals.begin(), set.proposals.end(),
                             [](const Proposal& a, const Proposal& b) {
                                 if (a.score != b.score) return a.score > b.score;
                                 if (a.box.x_min != b.box.x_min)
                                     return a.box.x_min < b.box.x_min;
                                 return a.box.y_min < b.box.y_min;
                             });
            const auto t5 = Clock::now();

            if (measured) {
                stage_samples[0].push_back(elapsed_us(t0, t1));
                stage_samples[1].push_back(elapsed_us(t1, t2));
                stage_samples[2].push_back(elapsed_us(t2, t3));
                stage_samples[3].push_back(elapsed_us(t3, t4));
                stage_samples[4].push_back(elapsed_us(t4, t5));
                total_samples.push_back(elapsed_us(t0, t5));
            }
            rep_jsonl += to_jsonl_line(set);
            rep_jsonl += '\n';
        }
        if (rep == 0) {
            instrumented_jsonl = rep_jsonl;
        } else if (rep_jsonl != instrumented_jsonl) {
            throw ValidationError("pipeline output changed between repetitions");
        }
    }

    BenchReport report;
    for (std::size_t s = 0; s < kStageCount; ++s)
        report.per_stage.push_back(
            summarize(kStageNames[s], std::move(stage_samples[s])));
    report.per_chunk_total = summarize("total", std::move(total_samples));
    report.budget_us = budget_us;
    report.pass =
        report.per_chunk_total.median_us <= static_cast<double>(budget_us);

    const double total_measured_us =
        report.per_chunk_total.mean_us *
        static_cast<double>(report.per_chunk_total.samples);
    report.events_per_second =
        total_measured_us > 0.0
            ? static_cast<double>(total_events) *
                  static_cast<double>(repetitions - 1) /
                  (total_measured_us * 1e-6)
            : 0.0;

    report.checksum = fnv1a64(instrumented_jsonl);
    report.reference_checksum = fnv1a64(
        to_jsonl(propose_all(chunks, header.geometry, cfg.erosion_element,
                             cfg.dbscan, cfg.erosion_passes)));
    return report;
}

std::string to_json(const BenchReport& report) {
    nlohmann::ordered_json j;
    j["budget_us"] = report.budget_us;
    j["pass"] = report.pass;
    j["events_per_second"] = report.events_per_second;
    auto stage_json = [](const StageStats& st) {
        nlohmann::ordered_json js;
        js["stage"] = st.stage;
        js["samples"] = st.samples;
        js["median_us"] = st.median_us;
        js["mean_us"] = st.mean_us;
        js["p95_us"] = st.p95_us;
        js["max_us"] = st.max_us;
        return js;
    };
    auto stages = nlohmann::ordered_json::array();
    for (const auto& st : report.per_stage) stages.push_back(stage_json(st));
    j["per_stage"] = std::move(stages);
    j["per_chunk_total"] = stage_json(report.per_chunk_total);
    std::ostringstream checksum;
    checksum << std::hex << std::setfill('0') << std::setw(16) << report.checksum;
    std::ostringstream ref;
    ref << std::hex << std::setfill('0') << std::setw(16)
        << report.reference_checksum;
    j["checksum"] = checksum.str();
    j["reference_checksum"] = ref.str();
    return j.dump(2) + "\n";
}

std::string to_table(const BenchReport& report) {
    std::ostringstream os;
    os << std::left << std::setw(14) << "stage" << std::right << std::setw(9)
       << "samples" << std::setw(12) << "median_us" << std::setw(12)
       << "mean_us" << std::setw(12) << "p95_us" << std::setw(12) << "max_us"
       << '\n';
    auto row = [&os](const StageStats& st) {
        os << std::left << std::setw(14) << st.stage << std::right
           << std::setw(9) << st.samples << std::fixed << std::setprecision(1)
           << std::setw(12) << st.median_us << std::setw(12) << st.mean_us
           << std::setw(12) << st.p95_us << std::setw(12) << st.max_us << '\n';
    };
    for (const auto& st : report.per_stage) row(st);
    row(report.per_chunk_total);
    os << "events_per_second = " << std::fixed << std::setprecision(0)
       << report.events_per_second << '\n';
    os << "budget_us = " << report.budget_us << ", median total = "
       << std::setprecision(1) << report.per_chunk_total.median_us << " -> "
       << (report.pass ? "PASS" : "FAIL") << '\n';
    return os.str();
}

}  // namespace evrp
