#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "evrp/types.hpp"

namespace evrp {

struct StreamHeader {
    int format_version = 1;
    SensorGeometry geometry;
    double message_rate_hz = 30.0;
};

bool operator==(const StreamHeader& a, const StreamHeader& b);

// Chunking per the 30 fps -> 15 fps pipeline: windows of `messages_per_chunk`
// messages, keeping local indices 0, keep_stride, 2*keep_stride, ...
struct ChunkingConfig {
    int messages_per_chunk = 10;
    int keep_stride = 2;
};

struct ParsedStream {
    StreamHeader header;
    std::vector<EventMessage> messages;
};

// Wall-clock start of message `m` at the given cadence, integer microseconds.
// Message m covers [message_start_us(m), message_start_us(m + 1)).
std::uint64_t message_start_us(std::uint64_t m, double message_rate_hz);

// Nominal [t_start, t_end] of chunk window `k`, spanning the full
// messages_per_chunk window regardless of decimation.
std::pair<std::uint64_t, std::uint64_t> chunk_window_us(
    std::uint64_t k, const ChunkingConfig& cfg, double message_rate_hz);

// Midpoint of chunk window `k` in seconds; the time ground-truth boxes are
// evaluated at.
double chunk_window_midpoint_s(std::uint64_t k, const ChunkingConfig& cfg,
                               double message_rate_hz);

// CSV stream: '#' key=value preamble, then a `msg,t_us,x,y,p` header row and
// integer data rows. Gaps in msg indices become empty messages so the CSV and
// binary readers agree on equivalent content.
ParsedStream parse_csv_stream(std::string_view text);

std::string write_csv_stream(const StreamHeader& header,
                             const std::vector<EventMessage>& messages);

// EVR1 binary stream, little-endian throughout.
// Header (13 bytes): magic "EVR1", version u8, width u16, height u16,
// rate_hz f32. Then message blocks: event_count u32 followed by packed
// 13-byte records (t u64, x u16, y u16, p u8); block order is the message
// index.
ParsedStream parse_binary_stream(const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> write_binary_stream(
    const StreamHeader& header, const std::vector<EventMessage>& messages);

// Groups messages into consecutive windows of cfg.messages_per_chunk (a
// trailing partial window is dropped), keeps every keep_stride-th message of
// each window starting at local index 0, and concatenates the retained events
// in time order. Window time bounds come from the message cadence and are
// widened if an event falls outside them.
std::vector<EventChunk> chunk_messages(const std::vector<EventMessage>& messages,
                                       const ChunkingConfig& cfg,
                                       double message_rate_hz);

ParsedStream read_stream_file(const std::string& path);
void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes);
void write_file(const std::string& path, const std::string& text);
std::vector<std::uint8_t> read_file_bytes(const std::string& path);

}  // namespace evrp
