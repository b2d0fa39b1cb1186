#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "evrp/bench.hpp"
#include "evrp/cluster.hpp"
#include "evrp/errors.hpp"
#include "evrp/eval.hpp"
#include "evrp/ingest.hpp"
#include "evrp/rasterize.hpp"
#include "evrp/simulator.hpp"
#include "evrp/types.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInput = 2;
constexpr int kExitBudget = 3;

struct RunConfig {
    evrp::ChunkingConfig chunking;
    evrp::DbscanConfig dbscan;
    evrp::EvalConfig eval;
    int erosion_kernel = 3;
    int erosion_passes = 1;
    int workers = 1;
    std::uint64_t budget_us = 66667;
    int reps = 5;
};

std::string read_text_file(const std::string& path) {
    const auto bytes = evrp::read_file_bytes(path);
    return std::string(bytes.begin(), bytes.end());
}

RunConfig load_run_config(const std::string& path) {
    RunConfig cfg;
    if (path.empty()) return cfg;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw evrp::ConfigError("config file '" + path + "': " + e.what());
    }
    try {
        if (j.contains("chunking")) {
            const auto& c = j["chunking"];
            cfg.chunking.messages_per_chunk =
                c.value("messages_per_chunk", cfg.chunking.messages_per_chunk);
            cfg.chunking.keep_stride =
                c.value("keep_stride", cfg.chunking.keep_stride);
        }
        if (j.contains("dbscan")) {
            const auto& d = j["dbscan"];
            cfg.dbscan.eps = d.value("eps", cfg.dbscan.eps);
            cfg.dbscan.min_pts = d.value("min_pts", cfg.dbscan.min_pts);
            cfg.dbscan.min_cluster_size =
                d.value("min_cluster_size", cfg.dbscan.min_cluster_size);
            cfg.dbscan.score_norm = d.value("score_norm", cfg.dbscan.score_norm);
        }
        if (j.contains("eval")) {
            const auto& e = j["eval"];
            cfg.eval.iou_threshold =
                e.value("iou_threshold", cfg.eval.iou_threshold);
            cfg.eval.max_detections_per_chunk = e.value(
                "max_detections_per_chunk", cfg.eval.max_detections_per_chunk);
        }
        if (j.contains("erosion")) {
            const auto& e = j["erosion"];
            cfg.erosion_kernel = e.value("kernel_size", cfg.erosion_kernel);
            cfg.erosion_passes = e.value("passes", cfg.erosion_passes);
        }
        cfg.workers = j.value("workers", cfg.workers);
        cfg.budget_us = j.value("budget_us", cfg.budget_us);
        cfg.reps = j.value("reps", cfg.reps);
    } catch (const nlohmann::json::exception& e) {
        throw evrp::ConfigError("config file '" + path + "': " + e.what());
    }
    return cfg;
}

nlohmann::ordered_json config_json(const RunConfig& cfg) {
    nlohmann::ordered_json j;
    j["chunking"] = {{"messages_per_chunk", cfg.chunking.messages_per_chunk},
                     {"keep_stride", cfg.chunking.keep_stride}};
    j["dbscan"] = {{"eps", cfg.dbscan.eps},
                   {"min_pts", cfg.dbscan.min_pts},
                   {"min_cluster_size", cfg.dbscan.min_cluster_size},
                   {"score_norm", cfg.dbscan.score_norm}};
    j["eval"] = {{"iou_threshold", cfg.eval.iou_threshold},
                 {"max_detections_per_chunk", cfg.eval.max_detections_per_chunk}};
    j["erosion"] = {{"kernel_size", cfg.erosion_kernel},
                    {"passes", cfg.erosion_passes}};
    j["workers"] = cfg.workers;
    j["budget_us"] = cfg.budget_us;
    j["reps"] = cfg.reps;
    return j;
}

// Reproducibility: every command states the configuration it ran with.
void echo_config(const std::string& command, nlohmann::ordered_json j) {
    j["command"] = command;
    std::cerr << "config: " << j.dump() << '\n';
}

int cmd_simulate(const std::string& scene_path, const std::string& out_path,
                 const std::string& gt_out_path,
                 std::optional<std::uint64_t> seed) {
    evrp::SceneSpec spec = evrp::parse_scene_json(read_text_file(scene_path));
    if (seed) spec.seed = *seed;

    nlohmann::ordered_json echo;
    echo["scene"] = scene_path;
    echo["seed"] = spec.seed;
    echo["out"] = out_path;
    echo["gt_out"] = gt_out_path;
    echo_config("simulate", std::move(echo));

    const evrp::SimulationResult result = evrp::simulate(spec);
    evrp::write_file(out_path,
                     evrp::write_binary_stream(result.header, result.messages));
    evrp::write_file(gt_out_path, evrp::to_json(result.ground_truth));

    std::size_t total = 0;
    for (const auto& m : result.messages) total += m.events.size();
    std::cerr << "simulate: " << result.messages.size() << " messages, "
              << total << " events, " << result.ground_truth.frames.size()
              << " ground-truth chunks\n";
    return kExitOk;
}

int cmd_propose(const std::string& events_path, const std::string& out_path,
                const std::string& dump_dir, const RunConfig& cfg) {
    nlohmann::ordered_json echo = config_json(cfg);
    echo["in"] = events_path;
    echo["out"] = out_path;
    if (!dump_dir.empty()) echo["dump_frames"] = dump_dir;
    echo_config("propose", std::move(echo));

    const evrp::ParsedStream stream = evrp::read_stream_file(events_path);
    const std::vector<evrp::EventChunk> chunks = evrp::chunk_messages(
        stream.messages, cfg.chunking, stream.header.message_rate_hz);
    const evrp::StructuringElement se =
        evrp::StructuringElement::square(cfg.erosion_kernel);

    const std::vector<evrp::ProposalSet> sets =
        evrp::propose_all(chunks, stream.header.geometry, se, cfg.dbscan,
                          cfg.erosion_passes, cfg.workers);
    evrp::write_file(out_path, evrp::to_jsonl(sets));

    if (!dump_dir.empty()) {
        std::filesystem::create_directories(dump_dir);
        for (const auto& chunk : chunks) {
            char name[32];
            std::snprintf(name, sizeof(name), "chunk_%06llu.pgm",
                          static_cast<unsigned long long>(chunk.chunk_index));
            evrp::write_pgm(evrp::build_frame(chunk, stream.header.geometry),
                            (std::filesystem::path(dump_dir) / name).string());
        }
    }

    std::size_t total = 0;
    for (const auto& s : sets) total += s.proposals.size();
    std::cerr << "propose: " << chunks.size() << " chunks, " << total
              << " proposals\n";
    return kExitOk;
}

int cmd_eval(const std::vector<std::string>& proposal_paths,
             const std::vector<std::string>& gt_paths,
             const std::string& out_path, const RunConfig& cfg) {
    nlohmann::ordered_json echo = config_json(cfg);
    echo["proposals"] = proposal_paths;
    echo["gt"] = gt_paths;
    if (!out_path.empty()) echo["out"] = out_path;
    echo_config("eval", std::move(echo));

    if (proposal_paths.size() != gt_paths.size())
        throw evrp::ValidationError(
            "need one --gt per proposal file (got " +
            std::to_string(proposal_paths.size()) + " proposal files, " +
            std::to_string(gt_paths.size()) + " ground-truth files)");

    std::vector<std::vector<evrp::ProposalSet>> proposals;
    std::vector<evrp::GroundTruthSet> gts;
    for (std::size_t i = 0; i < proposal_paths.size(); ++i) {
        proposals.push_back(
            evrp::parse_proposal_jsonl(read_text_file(proposal_paths[i])));
        gts.push_back(evrp::parse_ground_truth_json(read_text_file(gt_paths[i])));
    }

    const evrp::EvalReport report = evrp::evaluate(proposals, gts, cfg.eval);
    for (const auto& warning : report.warnings)
        std::cerr << "warning: " << warning << '\n';
    std::cout << evrp::to_table(report);
    if (!out_path.empty()) evrp::write_file(out_path, evrp::to_json(report));
    return kExitOk;
}

int cmd_bench(const std::string& events_path, const std::string& out_path,
              bool strict, const RunConfig& cfg) {
    nlohmann::ordered_json echo = config_json(cfg);
    echo["in"] = events_path;
    echo["strict"] = strict;
    if (!out_path.empty()) echo["out"] = out_path;
    echo_config("bench", std::move(echo));

    const evrp::ParsedStream stream = evrp::read_stream_file(events_path);
    evrp::PipelineConfig pipeline;
    pipeline.chunking = cfg.chunking;
    pipeline.erosion_element = evrp::StructuringElement::square(cfg.erosion_kernel);
    pipeline.erosion_passes = cfg.erosion_passes;
    pipeline.dbscan = cfg.dbscan;

    const evrp::BenchReport report = evrp::run_bench(
        stream.header, stream.messages, pipeline, cfg.budget_us, cfg.reps);
    std::cout << evrp::to_table(report);
    if (!out_path.empty()) evrp::write_file(out_path, evrp::to_json(report));
    if (report.checksum != report.reference_checksum)
        throw evrp::ValidationError(
            "instrumented output diverged from the plain pipeline");
    if (strict && !report.pass) return kExitBudget;
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Event-stream region proposal toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed_flag = 0;
    std::string out_path;

    // simulate
    auto* simulate = app.add_subcommand(
        "simulate", "Generate a synthetic event stream with ground truth");
    std::string scene_path;
    std::string gt_out_path;
    simulate->add_option("scene", scene_path, "Scene spec JSON")->required();
    simulate->add_option("--config", config_path, "Pipeline config JSON");
    simulate->add_option("--seed", seed_flag, "Override the scene seed");
    simulate->add_option("--out", out_path, "Output EVR1 event file")
        ->required();
    simulate->add_option("--gt-out", gt_out_path, "Output ground-truth JSON")
        ->required();

    // propose
    auto* propose = app.add_subcommand(
        "propose", "Run the proposal pipeline over an event stream");
    std::string events_path;
    std::string dump_dir;
    int workers_flag = 0;
    propose->add_option("events", events_path, "Event stream (EVR1 or CSV)")
        ->required();
    propose->add_option("--config", config_path, "Pipeline config JSON");
    propose->add_option("--out", out_path, "Output proposal JSON Lines")
        ->required();
    propose->add_option("--dump-frames", dump_dir,
                        "Directory for per-chunk PGM dumps");
    propose->add_option("--workers", workers_flag, "Worker threads over chunks");

    // eval
    auto* eval = app.add_subcommand(
        "eval", "Score proposal files against ground truth");
    std::vector<std::string> proposal_paths;
    std::vector<std::string> gt_paths;
    double iou_flag = 0.0;
    eval->add_option("proposals", proposal_paths, "Proposal JSONL files")
        ->required();
    eval->add_option("--config", config_path, "Pipeline config JSON");
    eval->add_option("--gt", gt_paths, "Ground-truth JSON (one per proposal file)")
        ->required();
    eval->add_option("--iou", iou_flag, "IoU threshold override");
    eval->add_option("--out", out_path, "Write the report JSON here");

    // bench
    auto* bench = app.add_subcommand(
        "bench", "Measure per-stage pipeline latency against the budget");
    std::string bench_events;
    std::uint64_t budget_flag = 0;
    int reps_flag = 0;
    bool strict = false;
    bench->add_option("events", bench_events, "Event stream (EVR1 or CSV)")
        ->required();
    bench->add_option("--config", config_path, "Pipeline config JSON");
    bench->add_option("--budget-us", budget_flag, "Per-chunk budget override");
    bench->add_option("--reps", reps_flag, "Repetitions (first is warm-up)");
    bench->add_flag("--strict", strict, "Exit 3 when the budget is missed");
    bench->add_option("--out", out_path, "Write the report JSON here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        RunConfig cfg = load_run_config(config_path);
        if (*simulate) {
            std::optional<std::uint64_t> seed;
            if (simulate->count("--seed") > 0) seed = seed_flag;
            return cmd_simulate(scene_path, out_path, gt_out_path, seed);
        }
        if (*propose) {
            if (propose->count("--workers") > 0) cfg.workers = workers_flag;
            return cmd_propose(events_path, out_path, dump_dir, cfg);
        }
        if (*eval) {
            if (eval->count("--iou") > 0) cfg.eval.iou_threshold = iou_flag;
            return cmd_eval(proposal_paths, gt_paths, out_path, cfg);
        }
        if (*bench) {
            if (bench->count("--budget-us") > 0) cfg.budget_us = budget_flag;
            if (bench->count("--reps") > 0) cfg.reps = reps_flag;
            return cmd_bench(bench_events, out_path, strict, cfg);
        }
    } catch (const evrp::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const evrp::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const evrp::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::out_of_range& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
    return kExitUsage;
}
