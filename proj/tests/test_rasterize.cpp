#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>
#include <string>
#include <utility>

#include "evrp/errors.hpp"
#include "evrp/rasterize.hpp"
#include "evrp/rng.hpp"
#include "oracles.hpp"

using namespace evrp;

namespace {

BinaryFrame random_frame(Rng& rng, int w, int h, double density) {
    BinaryFrame f;
    f.geometry = {w, h};
    f.bits.assign(static_cast<std::size_t>(w) * h, 0);
    for (auto& b : f.bits)
        if (rng.next_double() < density) b = 1;
    return f;
}

bool subset_of(const BinaryFrame& a, const BinaryFrame& b) {
    for (std::size_t i = 0; i < a.bits.size(); ++i)
        if (a.bits[i] && !b.bits[i]) return false;
    return true;
}

}  // namespace

TEST_CASE("build_frame: empty chunk") {
    const PseudoFrame f = build_frame(EventChunk{}, {32, 32});
    for (auto v : f.values) CHECK(v == 0);
    for (auto o : f.occupied) CHECK(o == 0);
}

TEST_CASE("build_frame: recent events override the old ones") {
    EventChunk chunk;
    chunk.t_end = 10;
    chunk.events.push_back(Event{1, 3, 4, 1});
    chunk.events.push_back(Event{2, 3, 4, 0});
    const PseudoFrame f = build_frame(chunk, {32, 32});
    CHECK(f.occupied[f.idx(3, 4)] == 1);
    CHECK(f.values[f.idx(3, 4)] == 0);  // OFF coding is 0 * 254
    std::size_t occupied = 0;
    for (auto o : f.occupied) occupied += o;
    CHECK(occupied == 1);
}

TEST_CASE("build_frame: equal timestamps resolved by list position") {
    EventChunk chunk;
    chunk.events.push_back(Event{5, 2, 2, 0});
    chunk.events.push_back(Event{5, 2, 2, 1});
    const PseudoFrame f = build_frame(chunk, {8, 8});
    CHECK(f.values[f.idx(2, 2)] == 254);
}

TEST_CASE("build_frame: occupancy equals distinct coordinate count") {
    Rng rng(31);
    EventChunk chunk;
    std::set<std::pair<int, int>> coords;
    while (coords.size() < 1000) {
        const int x = static_cast<int>(rng.next_below(640));
        const int y = static_cast<int>(rng.next_below(480));
        if (coords.emplace(x, y).second)
            chunk.events.push_back(
                Event{coords.size(), static_cast<std::uint16_t>(x),
                      static_cast<std::uint16_t>(y),
                      rng.next_bit() ? std::uint8_t{1} : std::uint8_t{0}});
    }
    const PseudoFrame f = build_frame(chunk, {640, 480});
    std::size_t occupied = 0;
    for (auto o : f.occupied) occupied += o;
    CHECK(occupied == 1000);
}

TEST_CASE("build_frame: out-of-geometry event") {
    EventChunk chunk;
    chunk.events.push_back(Event{0, 32, 0, 1});
    CHECK_THROWS_AS(build_frame(chunk, {32, 32}), ValidationError);
}

TEST_CASE("binarize: polarity-blind occupancy") {
    EventChunk chunk;
    chunk.events.push_back(Event{1, 1, 1, 1});
    chunk.events.push_back(Event{2, 5, 5, 0});
    const BinaryFrame b = binarize(build_frame(chunk, {8, 8}));
    std::size_t ones = 0;
    for (auto v : b.bits) ones += v;
    CHECK(ones == 2);
    CHECK(b.get(1, 1));
    CHECK(b.get(5, 5));

    const BinaryFrame empty = binarize(build_frame(EventChunk{}, {8, 8}));
    for (auto v : empty.bits) CHECK(v == 0);
}

TEST_CASE("binarize: popcount equals occupied count on random frames") {
    Rng rng(12);
    EventChunk chunk;
    std::set<std::pair<int, int>> coords;
    for (int i = 0; i < 400; ++i) {
        const int x = static_cast<int>(rng.next_below(64));
        const int y = static_cast<int>(rng.next_below(48));
        coords.emplace(x, y);
        chunk.events.push_back(
            Event{static_cast<std::uint64_t>(i), static_cast<std::uint16_t>(x),
                  static_cast<std::uint16_t>(y),
                  rng.next_bit() ? std::uint8_t{1} : std::uint8_t{0}});
    }
    const BinaryFrame b = binarize(build_frame(chunk, {64, 48}));
    std::size_t ones = 0;
    for (auto v : b.bits) ones += v;
    CHECK(ones == coords.size());
}

TEST_CASE("erode: isolated pixel removed") {
    BinaryFrame f;
    f.geometry = {16, 16};
    f.bits.assign(256, 0);
    f.bits[f.idx(7, 7)] = 1;
    const BinaryFrame e = erode(f, StructuringElement::square(3));
    for (auto v : e.bits) CHECK(v == 0);
}

TEST_CASE("erode: solid 5x5 block leaves its 3x3 interior") {
    BinaryFrame f;
    f.geometry = {16, 16};
    f.bits.assign(256, 0);
    for (int y = 4; y < 9; ++y)
        for (int x = 4; x < 9; ++x) f.bits[f.idx(x, y)] = 1;
    const BinaryFrame e = erode(f, StructuringElement::square(3));
    CHECK(e == oracles::erode_brute(f, StructuringElement::square(3)));
    std::size_t ones = 0;
    for (auto v : e.bits) ones += v;
    CHECK(ones == 9);
    for (int y = 5; y < 8; ++y)
        for (int x = 5; x < 8; ++x) CHECK(e.get(x, y));
}

TEST_CASE("erode: all-ones frame keeps everything but the border") {
    BinaryFrame f;
    f.geometry = {640, 480};
    f.bits.assign(640 * 480, 1);
    const BinaryFrame e = erode(f, StructuringElement::square(3));
    CHECK(e == oracles::erode_brute(f, StructuringElement::square(3)));
    for (int x = 0; x < 640; ++x) {
        CHECK_FALSE(e.get(x, 0));
        CHECK_FALSE(e.get(x, 479));
    }
    for (int y = 0; y < 480; ++y) {
        CHECK_FALSE(e.get(0, y));
        CHECK_FALSE(e.get(639, y));
    }
    std::size_t ones = 0;
    for (auto v : e.bits) ones += v;
    CHECK(ones == static_cast<std::size_t>(638) * 478);
}

TEST_CASE("erode: properties on random frames") {
    Rng rng(99);
    const StructuringElement se = StructuringElement::square(3);
    for (int iter = 0; iter < 50; ++iter) {
        const BinaryFrame f = random_frame(rng, 48, 36, 0.4);
        const BinaryFrame e = erode(f, se);

        CHECK(e == oracles::erode_brute(f, se));
        CHECK(subset_of(e, f));  // anti-extensive

        // monotone: g = f with extra bits set
        BinaryFrame g = f;
        for (auto& b : g.bits)
            if (rng.next_double() < 0.1) b = 1;
        CHECK(subset_of(e, erode(g, se)));
    }
}

TEST_CASE("erode: translation equivariance away from borders") {
    Rng rng(7);
    BinaryFrame f = random_frame(rng, 40, 30, 0.5);
    // clear a margin so translation does not interact with borders
    for (int y = 0; y < 30; ++y)
        for (int x = 0; x < 40; ++x)
            if (x < 6 || x >= 34 || y < 6 || y >= 24) f.bits[f.idx(x, y)] = 0;

    BinaryFrame shifted;
    shifted.geometry = f.geometry;
    shifted.bits.assign(f.bits.size(), 0);
    for (int y = 0; y < 30; ++y)
        for (int x = 0; x < 40; ++x)
            if (f.get(x, y)) shifted.bits[shifted.idx(x + 3, y + 2)] = 1;

    const StructuringElement se = StructuringElement::square(3);
    const BinaryFrame eroded = erode(f, se);
    BinaryFrame eroded_then_shifted;
    eroded_then_shifted.geometry = eroded.geometry;
    eroded_then_shifted.bits.assign(eroded.bits.size(), 0);
    for (int y = 0; y < 30; ++y)
        for (int x = 0; x < 40; ++x)
            if (eroded.get(x, y))
                eroded_then_shifted.bits[eroded_then_shifted.idx(x + 3, y + 2)] =
                    1;
    CHECK(erode(shifted, se) == eroded_then_shifted);
}

TEST_CASE("structuring element validation") {
    CHECK_THROWS_AS(StructuringElement::square(4), ConfigError);
    StructuringElement se = StructuringElement::square(3);
    se.mask[4] = 0;  // clear the anchor
    CHECK_THROWS_AS(validate(se), ConfigError);
}

TEST_CASE("pgm dump matches the visualization coding") {
    EventChunk chunk;
    chunk.events.push_back(Event{1, 0, 0, 1});
    chunk.events.push_back(Event{2, 1, 0, 0});
    const PseudoFrame f = build_frame(chunk, {2, 2});
    const std::string pgm = to_pgm(f);
    const std::string expected_header = "P5\n2 2\n255\n";
    REQUIRE(pgm.size() == expected_header.size() + 4);
    CHECK(pgm.substr(0, expected_header.size()) == expected_header);
    CHECK(static_cast<unsigned char>(pgm[expected_header.size() + 0]) == 254);
    CHECK(static_cast<unsigned char>(pgm[expected_header.size() + 1]) == 0);
    CHECK(static_cast<unsigned char>(pgm[expected_header.size() + 2]) == 0);
    CHECK(static_cast<unsigned char>(pgm[expected_header.size() + 3]) == 0);
}
