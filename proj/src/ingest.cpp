#include "evrp/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "evrp/errors.hpp"

namespace evrp {

namespace {

void validate_chunking(const ChunkingConfig& cfg) {
    if (cfg.messages_per_chunk < 1)
        throw ConfigError("messages_per_chunk must be >= 1");
    if (cfg.keep_stride < 1 || cfg.keep_stride > cfg.messages_per_chunk)
        throw ConfigError("keep_stride must be in [1, messages_per_chunk]");
}

void validate_geometry(const SensorGeometry& g) {
    if (g.width < 1 || g.height < 1)
        throw ValidationError("sensor geometry must be at least 1x1");
    if (g.width > 0xffff || g.height > 0xffff)
        throw ValidationError("sensor geometry exceeds the 16-bit stream limit");
}

bool events_time_sorted(const std::vector<Event>& events) {
    return std::is_sorted(events.begin(), events.end(),
                          [](const Event& a, const Event& b) { return a.t < b.t; });
}

void sort_events_by_time(std::vector<Event>& events) {
    std::stable_sort(events.begin(), events.end(),
                     [](const Event& a, const Event& b) { return a.t < b.t; });
}

std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

std::uint64_t parse_u64_field(std::string_view field, std::size_t line_no,
                              const char* name) {
    std::uint64_t value = 0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || field.empty()) {
        throw ParseError("line " + std::to_string(line_no) + ": field '" +
                             name + "' is not a non-negative integer",
                         static_cast<long long>(line_no));
    }
    return value;
}

}  // namespace

bool operator==(const StreamHeader& a, const StreamHeader& b) {
    return a.format_version == b.format_version && a.geometry == b.geometry &&
           a.message_rate_hz == b.message_rate_hz;
}

std::uint64_t message_start_us(std::uint64_t m, double message_rate_hz) {
    return static_cast<std::uint64_t>(
        std::llround(static_cast<double>(m) * 1e6 / message_rate_hz));
}

std::pair<std::uint64_t, std::uint64_t> chunk_window_us(
    std::uint64_t k, const ChunkingConfig& cfg, double message_rate_hz) {
    const std::uint64_t mpc = static_cast<std::uint64_t>(cfg.messages_per_chunk);
    return {message_start_us(k * mpc, message_rate_hz),
            message_start_us((k + 1) * mpc, message_rate_hz)};
}

double chunk_window_midpoint_s(std::uint64_t k, const ChunkingConfig& cfg,
                               double message_rate_hz) {
    const auto [a, b] = chunk_window_us(k, cfg, message_rate_hz);
    return (static_cast<double>(a) + static_cast<double>(b)) * 0.5 * 1e-6;
}

ParsedStream parse_csv_stream(std::string_view text) {
    ParsedStream out;
    bool have_width = false;
    bool have_height = false;
    bool seen_column_header = false;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool have_prev_msg = false;
    std::uint64_t prev_msg = 0;

    while (pos <= text.size()) {
        if (pos == text.size() && line_no > 0) break;
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = strip_cr(text.substr(pos, eol - pos));
        pos = eol + 1;
        ++line_no;

        if (line.empty()) continue;

        if (line.front() == '#') {
            if (seen_column_header)
                throw ParseError("line " + std::to_string(line_no) +
                                     ": comment after the column header",
                                 static_cast<long long>(line_no));
            std::string_view body = line.substr(1);
            while (!body.empty() && body.front() == ' ') body.remove_prefix(1);
            const std::size_t eq = body.find('=');
            if (eq == std::string_view::npos) continue;
            std::string key(body.substr(0, eq));
            std::string value(body.substr(eq + 1));
            try {
                if (key == "width") {
                    out.header.geometry.width = std::stoi(value);
                    have_width = true;
                } else if (key == "height") {
                    out.header.geometry.height = std::stoi(value);
                    have_height = true;
                } else if (key == "rate_hz") {
                    out.header.message_rate_hz = std::stod(value);
                } else if (key == "version") {
                    out.header.format_version = std::stoi(value);
                }
            } catch (const std::exception&) {
                throw ParseError("line " + std::to_string(line_no) +
                                     ": bad preamble value for '" + key + "'",
                                 static_cast<long long>(line_no));
            }
            continue;
        }

        if (!seen_column_header) {
            if (line != "msg,t_us,x,y,p")
                throw ParseError("line " + std::to_string(line_no) +
                                     ": expected column header 'msg,t_us,x,y,p'",
                                 static_cast<long long>(line_no));
            seen_column_header = true;
            continue;
        }

        std::string_view fields[5];
        std::size_t start = 0;
        int n_fields = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                if (n_fields == 5)
                    throw ParseError("line " + std::to_string(line_no) +
                                         ": expected 5 fields",
                                     static_cast<long long>(line_no));
                fields[n_fields++] = line.substr(start, i - start);
                start = i + 1;
            }
        }
        if (n_fields != 5)
            throw ParseError("line " + std::to_string(line_no) +
                                 ": expected 5 fields, got " +
                                 std::to_string(n_fields),
                             static_cast<long long>(line_no));

        const std::uint64_t msg = parse_u64_field(fields[0], line_no, "msg");
        Event ev;
        ev.t = parse_u64_field(fields[1], line_no, "t_us");
        const std::uint64_t x = parse_u64_field(fields[2], line_no, "x");
        const std::uint64_t y = parse_u64_field(fields[3], line_no, "y");
        const std::uint64_t p = parse_u64_field(fields[4], line_no, "p");

        if (x >= static_cast<std::uint64_t>(out.header.geometry.width) ||
            y >= static_cast<std::uint64_t>(out.header.geometry.height))
            throw ValidationError(
                "line " + std::to_string(line_no) + ": event (" +
                std::to_string(x) + "," + std::to_string(y) +
                ") outside sensor geometry " +
                std::to_string(out.header.geometry.width) + "x" +
                std::to_string(out.header.geometry.height));
        if (p > 1)
            throw ValidationError("line " + std::to_string(line_no) +
                                  ": polarity must be 0 or 1");
        if (have_prev_msg && msg < prev_msg)
            throw ValidationError("line " + std::to_string(line_no) +
                                  ": msg index " + std::to_string(msg) +
                                  " is out of order (previous " +
                                  std::to_string(prev_msg) + ")");
        ev.x = static_cast<std::uint16_t>(x);
        ev.y = static_cast<std::uint16_t>(y);
        ev.p = static_cast<std::uint8_t>(p);

        // Gaps in msg indices become empty messages so the sequence stays
        // contiguous from zero, matching the binary format's implicit indices.
        while (out.messages.size() <= msg) {
            EventMessage m;
            m.index = out.messages.size();
            out.messages.push_back(std::move(m));
        }
        out.messages[msg].events.push_back(ev);
        prev_msg = msg;
        have_prev_msg = true;
    }

    if (!have_width || !have_height)
        throw ParseError("missing '# width=' or '# height=' preamble line");
    if (out.header.format_version != 1)
        throw ParseError("unsupported format version " +
                         std::to_string(out.header.format_version));
    if (out.header.message_rate_hz <= 0.0)
        throw ValidationError("rate_hz must be positive");
    validate_geometry(out.header.geometry);

    for (auto& m : out.messages) sort_events_by_time(m.events);
    return out;
}

std::string write_csv_stream(const StreamHeader& header,
                             const std::vector<EventMessage>& messages) {
    validate_geometry(header.geometry);
    std::ostringstream os;
    os << "# width=" << header.geometry.width << '\n';
    os << "# height=" << header.geometry.height << '\n';
    char rate[64];
    auto res = std::to_chars(rate, rate + sizeof(rate), header.message_rate_hz);
    os << "# rate_hz=" << std::string_view(rate, res.ptr - rate) << '\n';
    os << "# version=" << header.format_version << '\n';
    os << "msg,t_us,x,y,p\n";
    for (const auto& m : messages) {
        for (const auto& ev : m.events) {
            os << m.index << ',' << ev.t << ',' << ev.x << ',' << ev.y << ','
               << static_cast<int>(ev.p) << '\n';
        }
    }
    return os.str();
}

namespace {

constexpr std::size_t kHeaderBytes = 13;
constexpr std::size_t kRecordBytes = 13;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i)
        out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

std::uint16_t get_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) |
           (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint64_t get_u64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

}  // namespace

ParsedStream parse_binary_stream(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < kHeaderBytes)
        throw ParseError("truncated EVR1 header (need 13 bytes, have " +
                             std::to_string(bytes.size()) + ")",
                         static_cast<long long>(bytes.size()));
    if (std::memcmp(bytes.data(), "EVR1", 4) != 0)
        throw ParseError("bad magic, expected 'EVR1'", 0);
    ParsedStream out;
    out.header.format_version = bytes[4];
    if (out.header.format_version != 1)
        throw ParseError("unsupported EVR1 version " +
                             std::to_string(out.header.format_version),
                         4);
    out.header.geometry.width = get_u16(&bytes[5]);
    out.header.geometry.height = get_u16(&bytes[7]);
    float rate = 0.0f;
    std::memcpy(&rate, &bytes[9], 4);
    out.header.message_rate_hz = static_cast<double>(rate);
    if (out.header.message_rate_hz <= 0.0)
        throw ValidationError("rate_hz must be positive");
    validate_geometry(out.header.geometry);

    std::size_t cursor = kHeaderBytes;
    while (cursor < bytes.size()) {
        if (bytes.size() - cursor < 4)
            throw ParseError("truncated message block header at byte offset " +
                                 std::to_string(cursor),
                             static_cast<long long>(cursor));
        const std::uint32_t count = get_u32(&bytes[cursor]);
        cursor += 4;
        EventMessage msg;
        msg.index = out.messages.size();
        msg.events.reserve(count);
        for (std::uint32_t i = 0; i < count; ++i) {
            if (bytes.size() - cursor < kRecordBytes)
                throw ParseError("truncated event record at byte offset " +
                                     std::to_string(cursor),
                                 static_cast<long long>(cursor));
            Event ev;
            ev.t = get_u64(&bytes[cursor]);
            ev.x = get_u16(&bytes[cursor + 8]);
            ev.y = get_u16(&bytes[cursor + 10]);
            ev.p = bytes[cursor + 12];
            if (!out.header.geometry.contains(ev.x, ev.y))
                throw ValidationError(
                    "event at byte offset " + std::to_string(cursor) +
                    " outside sensor geometry");
            if (ev.p > 1)
                throw ValidationError("event at byte offset " +
                                      std::to_string(cursor) +
                                      " has polarity outside {0,1}");
            msg.events.push_back(ev);
            cursor += kRecordBytes;
        }
        sort_events_by_time(msg.events);
        out.messages.push_back(std::move(msg));
    }
    return out;
}

std::vector<std::uint8_t> write_binary_stream(
    const StreamHeader& header, const std::vector<EventMessage>& messages) {
    validate_geometry(header.geometry);
    if (header.format_version != 1)
        throw ValidationError("only EVR1 version 1 can be written");

    std::size_t total = 0;
    for (std::size_t i = 0; i < messages.size(); ++i) {
        const auto& m = messages[i];
        if (m.index != i)
            throw ValidationError(
                "message indices must be contiguous from 0; message at "
                "position " +
                std::to_string(i) + " has index " + std::to_string(m.index));
        if (!events_time_sorted(m.events))
            throw ValidationError("message " + std::to_string(i) +
                                  " events are not time-sorted");
        if (m.events.size() > std::numeric_limits<std::uint32_t>::max())
            throw ValidationError("message " + std::to_string(i) +
                                  " exceeds the u32 event-count limit");
        for (const auto& ev : m.events) {
            if (!header.geometry.contains(ev.x, ev.y))
                throw ValidationError(
                    "message " + std::to_string(i) + " event (" +
                    std::to_string(ev.x) + "," + std::to_string(ev.y) +
                    ") outside sensor geometry");
            if (ev.p > 1)
                throw ValidationError("message " + std::to_string(i) +
                                      " has polarity outside {0,1}");
        }
        total += m.events.size();
    }

    std::vector<std::uint8_t> out;
    out.reserve(kHeaderBytes + messages.size() * 4 + total * kRecordBytes);
    out.insert(out.end(), {'E', 'V', 'R', '1'});
    out.push_back(1);
    put_u16(out, static_cast<std::uint16_t>(header.geometry.width));
    put_u16(out, static_cast<std::uint16_t>(header.geometry.height));
    const float rate = static_cast<float>(header.message_rate_hz);
    std::uint8_t rate_bytes[4];
    std::memcpy(rate_bytes, &rate, 4);
    out.insert(out.end(), rate_bytes, rate_bytes + 4);

    for (const auto& m : messages) {
        put_u32(out, static_cast<std::uint32_t>(m.events.size()));
        for (const auto& ev : m.events) {
            put_u64(out, ev.t);
            put_u16(out, ev.x);
            put_u16(out, ev.y);
            out.push_back(ev.p);
        }
    }
    return out;
}

std::vector<EventChunk> chunk_messages(const std::vector<EventMessage>& messages,
                                       const ChunkingConfig& cfg,
                                       double message_rate_hz) {
    validate_chunking(cfg);
    if (message_rate_hz <= 0.0) throw ConfigError("message rate must be positive");

    const std::size_t mpc = static_cast<std::size_t>(cfg.messages_per_chunk);
    const std::size_t n_chunks = messages.size() / mpc;
    std::vector<EventChunk> chunks;
    chunks.reserve(n_chunks);

    for (std::size_t k = 0; k < n_chunks; ++k) {
        EventChunk chunk;
        chunk.chunk_index = k;
        const auto [t0, t1] = chunk_window_us(k, cfg, message_rate_hz);
        chunk.t_start = t0;
        chunk.t_end = t1;

        const std::size_t base = k * mpc;
        for (std::size_t local = 0; local < mpc;
             local += static_cast<std::size_t>(cfg.keep_stride)) {
            const auto& msg = messages[base + local];
            chunk.events.insert(chunk.events.end(), msg.events.begin(),
                                msg.events.end());
        }
        sort_events_by_time(chunk.events);

        // Bounds span the full window; widen if events of any window message
        // (retained or not) fall outside the nominal cadence-derived window.
        for (std::size_t local = 0; local < mpc; ++local) {
            for (const auto& ev : messages[base + local].events) {
                chunk.t_start = std::min(chunk.t_start, ev.t);
                chunk.t_end = std::max(chunk.t_end, ev.t);
            }
        }
        chunks.push_back(std::move(chunk));
    }
    return chunks;
}

ParsedStream read_stream_file(const std::string& path) {
    const std::vector<std::uint8_t> bytes = read_file_bytes(path);
    if (bytes.size() >= 4 && std::memcmp(bytes.data(), "EVR1", 4) == 0)
        return parse_binary_stream(bytes);
    return parse_csv_stream(
        std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw ValidationError("cannot open '" + path + "' for writing");
    os.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
    if (!os) throw ValidationError("failed writing '" + path + "'");
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw ValidationError("cannot open '" + path + "' for writing");
    os << text;
    if (!os) throw ValidationError("failed writing '" + path + "'");
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ParseError("cannot open '" + path + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

}  // namespace evrp
