#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evrp/types.hpp"

namespace evrp {

// Last-event-wins rasterization of a chunk. `values` holds the visualization
// coding p*254 of the most recent event per pixel (so an OFF pixel reads 0);
// `occupied` is the polarity-blind channel the denoising and clustering
// stages run on.
struct PseudoFrame {
    SensorGeometry geometry;
    std::vector<std::uint8_t> values;
    std::vector<std::uint8_t> occupied;

    std::size_t idx(int x, int y) const {
        return static_cast<std::size_t>(y) * geometry.width +
               static_cast<std::size_t>(x);
    }
};

struct BinaryFrame {
    SensorGeometry geometry;
    std::vector<std::uint8_t> bits;

    std::size_t idx(int x, int y) const {
        return static_cast<std::size_t>(y) * geometry.width +
               static_cast<std::size_t>(x);
    }
    bool get(int x, int y) const { return bits[idx(x, y)] != 0; }
};

bool operator==(const BinaryFrame& a, const BinaryFrame& b);

// Odd-sided binary mask with the anchor at the center cell; the anchor must
// be set.
struct StructuringElement {
    int width = 3;
    int height = 3;
    std::vector<std::uint8_t> mask;  // height x width, row-major

    static StructuringElement square(int side);
};

void validate(const StructuringElement& se);

PseudoFrame build_frame(const EventChunk& chunk, const SensorGeometry& geometry);

BinaryFrame binarize(const PseudoFrame& frame);

// Keeps a pixel only if every set cell of the element, anchored there, lands
// on a set input pixel; out-of-bounds neighbourhood cells count as empty.
BinaryFrame erode(const BinaryFrame& frame, const StructuringElement& se);

BinaryFrame erode_n(const BinaryFrame& frame, const StructuringElement& se,
                    int passes);

// 8-bit binary PGM (P5) of the visualization coding: 254 where the latest
// event is ON, 0 otherwise.
std::string to_pgm(const PseudoFrame& frame);
void write_pgm(const PseudoFrame& frame, const std::string& path);

}  // namespace evrp
