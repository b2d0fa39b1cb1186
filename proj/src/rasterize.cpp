#include "evrp/rasterize.hpp"

#include <fstream>
#include <sstream>

#include "evrp/errors.hpp"
#include "evrp/ingest.hpp"

namespace evrp {

bool operator==(const BinaryFrame& a, const BinaryFrame& b) {
    return a.geometry == b.geometry && a.bits == b.bits;
}

StructuringElement StructuringElement::square(int side) {
    StructuringElement se;
    se.width = side;
    se.height = side;
    se.mask.assign(static_cast<std::size_t>(side) * side, 1);
    validate(se);
    return se;
}

void validate(const StructuringElement& se) {
    if (se.width < 1 || se.height < 1 || se.width % 2 == 0 || se.height % 2 == 0)
        throw ConfigError("structuring element sides must be odd and positive");
    if (se.mask.size() != static_cast<std::size_t>(se.width) * se.height)
        throw ConfigError("structuring element mask size mismatch");
    const std::size_t anchor =
        static_cast<std::size_t>(se.height / 2) * se.width + se.width / 2;
    if (se.mask[anchor] == 0)
        throw ConfigError("structuring element anchor cell must be set");
}

PseudoFrame build_frame(const EventChunk& chunk, const SensorGeometry& geometry) {
    PseudoFrame frame;
    frame.geometry = geometry;
    const std::size_t n =
        static_cast<std::size_t>(geometry.width) * geometry.height;
    frame.values.assign(n, 0);
    frame.occupied.assign(n, 0);
    for (const Event& ev : chunk.events) {
        if (!geometry.contains(ev.x, ev.y))
            throw ValidationError("event (" + std::to_string(ev.x) + "," +
                                  std::to_string(ev.y) +
                                  ") outside sensor geometry");
        const std::size_t i = frame.idx(ev.x, ev.y);
        frame.values[i] = static_cast<std::uint8_t>(ev.p * 254);
        frame.occupied[i] = 1;
    }
    return frame;
}

BinaryFrame binarize(const PseudoFrame& frame) {
    BinaryFrame out;
    out.geometry = frame.geometry;
    out.bits = frame.occupied;
    return out;
}

BinaryFrame erode(const BinaryFrame& frame, const StructuringElement& se) {
    validate(se);
    const int w = frame.geometry.width;
    const int h = frame.geometry.height;

    std::vector<std::pair<int, int>> offsets;
    offsets.reserve(se.mask.size());
    for (int sy = 0; sy < se.height; ++sy)
        for (int sx = 0; sx < se.width; ++sx)
            if (se.mask[static_cast<std::size_t>(sy) * se.width + sx])
                offsets.emplace_back(sx - se.width / 2, sy - se.height / 2);

    BinaryFrame out;
    out.geometry = frame.geometry;
    out.bits.assign(frame.bits.size(), 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!frame.bits[frame.idx(x, y)]) continue;
            bool keep = true;
            for (const auto& [dx, dy] : offsets) {
                const int nx = x + dx;
                const int ny = y + dy;
                if (nx < 0 || nx >= w || ny < 0 || ny >= h ||
                    !frame.bits[frame.idx(nx, ny)]) {
                    keep = false;
                    break;
                }
            }
            if (keep) out.bits[out.idx(x, y)] = 1;
        }
    }
    return out;
}

BinaryFrame erode_n(const BinaryFrame& frame, const StructuringElement& se,
                    int passes) {
    if (passes < 0) throw ConfigError("erosion pass count must be >= 0");
    BinaryFrame out = frame;
    for (int i = 0; i < passes; ++i) out = erode(out, se);
    return out;
}

std::string to_pgm(const PseudoFrame& frame) {
    std::ostringstream os;
    os << "P5\n" << frame.geometry.width << ' ' << frame.geometry.height
       << "\n255\n";
    os.write(reinterpret_cast<const char*>(frame.values.data()),
             static_cast<std::streamsize>(frame.values.size()));
    return os.str();
}

void write_pgm(const PseudoFrame& frame, const std::string& path) {
    write_file(path, to_pgm(frame));
}

}  // namespace evrp
