#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evrp/cluster.hpp"
#include "evrp/ingest.hpp"

namespace evrp {

struct StageStats {
    std::string stage;
    std::size_t samples = 0;
    double median_us = 0.0;
    double mean_us = 0.0;
    double p95_us = 0.0;
    double max_us = 0.0;
};

StageStats summarize(const std::string& stage, std::vector<double> samples_us);

struct BenchReport {
    std::vector<StageStats> per_stage;
    StageStats per_chunk_total;
    double events_per_second = 0.0;
    std::uint64_t budget_us = 66667;  // one 15 fps processing frame
    bool pass = false;                // median per-chunk total within budget
    std::uint64_t checksum = 0;            // instrumented proposal stream
    std::uint64_t reference_checksum = 0;  // plain propose() over the same chunks
};

struct PipelineConfig {
    ChunkingConfig chunking;
    StructuringElement erosion_element = StructuringElement::square(3);
    int erosion_passes = 1;
    DbscanConfig dbscan;
};

// Times every pipeline stage per chunk over `repetitions` passes (the first
// pass is warm-up and discarded, so repetitions must leave at least 3
// measured passes). The instrumented proposal stream is checksummed against
// an uninstrumented run of the same chunks.
BenchReport run_bench(const StreamHeader& header,
                      const std::vector<EventMessage>& messages,
                      const PipelineConfig& cfg, std::uint64_t budget_us,
                      int repetitions);

std::uint64_t fnv1a64(const std::string& bytes);

std::string to_json(const BenchReport& report);
std::string to_table(const BenchReport& report);

}  // namespace evrp
