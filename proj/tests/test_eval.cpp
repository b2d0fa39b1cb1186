#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <string>
#include <vector>

#include "evrp/errors.hpp"
#include "evrp/eval.hpp"
#include "evrp/rng.hpp"
#include "oracles.hpp"

using namespace evrp;

namespace {

ProposalSet make_set(std::uint64_t chunk, std::vector<Proposal> proposals) {
    ProposalSet set;
    set.chunk_index = chunk;
    set.proposals = std::move(proposals);
    std::stable_sort(set.proposals.begin(), set.proposals.end(),
                     [](const Proposal& a, const Proposal& b) {
                         return a.score > b.score;
                     });
    return set;
}

std::vector<FlaggedDetection> flags_to_detections(std::vector<bool> flags) {
    std::vector<FlaggedDetection> dets;
    double score = 1.0;
    for (bool f : flags) {
        dets.push_back({score, 0, static_cast<std::uint32_t>(dets.size()), f});
        score -= 0.01;  // strictly decreasing, order preserved
    }
    return dets;
}

BBox random_box(Rng& rng, double extent) {
    const double x0 = rng.next_double() * extent;
    const double y0 = rng.next_double() * extent;
    return BBox{x0, y0, x0 + 1.0 + rng.next_double() * extent / 2,
                y0 + 1.0 + rng.next_double() * extent / 2};
}

}  // namespace

TEST_CASE("match_detections: identity proposals all match") {
    const std::vector<BBox> gt = {{0, 0, 10, 10}, {30, 30, 50, 50}};
    const ProposalSet set =
        make_set(0, {{gt[0], 0.9}, {gt[1], 0.8}});
    const MatchResult m = match_detections(set, gt, EvalConfig{});
    REQUIRE(m.tp.size() == 2);
    CHECK(m.tp[0]);
    CHECK(m.tp[1]);
    CHECK(m.fn == 0);
}

TEST_CASE("match_detections: no proposals leaves all ground truth unmatched") {
    const std::vector<BBox> gt = {{0, 0, 1, 1}, {2, 2, 3, 3}, {5, 5, 6, 6}};
    const MatchResult m = match_detections(ProposalSet{}, gt, EvalConfig{});
    CHECK(m.tp.empty());
    CHECK(m.fn == 3);
}

TEST_CASE("match_detections: one gt consumed by the higher-scored proposal") {
    const BBox gt{0, 0, 10, 10};
    // iou 0.8 and 0.76 constructed by shaving the box; verified vs the
    // counting oracle below
    const BBox det1{0, 0, 10, 8};
    const BBox det2{0, 0, 10, 7.6};
    CHECK(iou(det1, gt) == doctest::Approx(0.8));
    CHECK(iou(det2, gt) == doctest::Approx(0.76));
    CHECK(oracles::iou_grid(det1, gt) == doctest::Approx(0.8).epsilon(1e-9));
    CHECK(oracles::iou_grid(det2, gt) == doctest::Approx(0.76).epsilon(1e-9));

    const ProposalSet set = make_set(0, {{det1, 0.9}, {det2, 0.8}});
    const MatchResult m = match_detections(set, {gt}, EvalConfig{});
    REQUIRE(m.tp.size() == 2);
    CHECK(m.tp[0]);
    CHECK_FALSE(m.tp[1]);
    CHECK(m.fn == 0);
}

TEST_CASE("match_detections: detection cap truncates lowest scores") {
    EvalConfig cfg;
    cfg.max_detections_per_chunk = 2;
    const BBox gt{0, 0, 10, 10};
    const ProposalSet set = make_set(
        0, {{BBox{100, 100, 101, 101}, 0.9}, {BBox{200, 200, 201, 201}, 0.8},
            {gt, 0.7}});
    const MatchResult m = match_detections(set, {gt}, cfg);
    REQUIRE(m.tp.size() == 2);  // the matching third proposal was dropped
    CHECK_FALSE(m.tp[0]);
    CHECK_FALSE(m.tp[1]);
    CHECK(m.fn == 1);
}

TEST_CASE("match_detections: agrees with the reference matcher") {
    Rng rng(404);
    EvalConfig cfg;
    for (int iter = 0; iter < 200; ++iter) {
        const std::size_t n_gt = rng.next_below(6);
        const std::size_t n_det = rng.next_below(6);
        std::vector<BBox> gt;
        for (std::size_t i = 0; i < n_gt; ++i) gt.push_back(random_box(rng, 20));
        std::vector<Proposal> proposals;
        for (std::size_t i = 0; i < n_det; ++i) {
            // half the detections are near-copies of some gt box
            if (!gt.empty() && rng.next_bit()) {
                BBox b = gt[rng.next_below(gt.size())];
                b.x_max += rng.next_double() * 2.0;
                proposals.push_back({b, rng.next_double()});
            } else {
                proposals.push_back({random_box(rng, 20), rng.next_double()});
            }
        }
        const ProposalSet set = make_set(0, std::move(proposals));
        const MatchResult mine = match_detections(set, gt, cfg);

        std::vector<BBox> dets_by_score;
        for (const auto& p : set.proposals) dets_by_score.push_back(p.box);
        const oracles::RefMatch ref =
            oracles::match_reference(dets_by_score, gt, cfg.iou_threshold);
        CHECK(mine.tp == ref.tp);
        CHECK(mine.fn == ref.fn);

        // one-to-one: TP count never exceeds ground truth count
        const std::size_t tp_count = static_cast<std::size_t>(
            std::count(mine.tp.begin(), mine.tp.end(), true));
        CHECK(tp_count + static_cast<std::size_t>(mine.fn) == n_gt);
    }
}

TEST_CASE("average_precision: perfect detector") {
    CHECK(average_precision(flags_to_detections({true, true, true}), 3) ==
          doctest::Approx(1.0));
}

TEST_CASE("average_precision: no detections") {
    CHECK(average_precision({}, 5) == doctest::Approx(0.0));
}

TEST_CASE("average_precision: empty ground truth") {
    CHECK(average_precision({}, 0) == doctest::Approx(1.0));
    CHECK(average_precision(flags_to_detections({false}), 0) ==
          doctest::Approx(0.0));
}

TEST_CASE("average_precision: hand-enumerated TP,FP,TP fixture") {
    // 2 gt, flags [TP, FP, TP]: 51 recall points see precision 1.0, the
    // remaining 50 see 2/3; mean over 101 points = 253/303
    const double expected = 253.0 / 303.0;
    const double got = average_precision(flags_to_detections({true, false, true}), 2);
    CHECK(std::fabs(got - expected) < 1e-9);
}

TEST_CASE("average_precision: score rescaling does not change the value") {
    Rng rng(9);
    for (int iter = 0; iter < 50; ++iter) {
        std::vector<FlaggedDetection> dets;
        const std::size_t n = 1 + rng.next_below(20);
        double score = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            score *= 0.9;
            dets.push_back({score, i / 3, static_cast<std::uint32_t>(i % 3),
                            rng.next_bit()});
        }
        const std::size_t total_gt = 1 + rng.next_below(10);
        const double base = average_precision(dets, total_gt);

        std::vector<FlaggedDetection> rescaled = dets;
        for (auto& d : rescaled) d.score = d.score * 0.123 + 5.0;  // monotone
        CHECK(average_precision(rescaled, total_gt) == doctest::Approx(base));
    }
}

TEST_CASE("average_precision: a top-scored FP never raises AP") {
    Rng rng(10);
    for (int iter = 0; iter < 50; ++iter) {
        std::vector<bool> flags;
        const std::size_t n = 1 + rng.next_below(12);
        for (std::size_t i = 0; i < n; ++i) flags.push_back(rng.next_bit());
        const std::size_t total_gt =
            1 + static_cast<std::size_t>(
                    std::count(flags.begin(), flags.end(), true));
        const double base = average_precision(flags_to_detections(flags), total_gt);

        std::vector<bool> with_fp = flags;
        with_fp.insert(with_fp.begin(), false);
        const double worse =
            average_precision(flags_to_detections(with_fp), total_gt);
        CHECK(worse <= base + 1e-12);
    }
}

TEST_CASE("average_recall") {
    CHECK(average_recall(flags_to_detections({true, true}), 2) ==
          doctest::Approx(1.0));
    CHECK(average_recall(flags_to_detections({true, false, true, false, true}),
                         10) == doctest::Approx(0.3));
    CHECK(average_recall(flags_to_detections({true, false, true}), 4) ==
          doctest::Approx(0.5));
    CHECK(average_recall({}, 0) == doctest::Approx(1.0));
}

TEST_CASE("evaluate: perfect proposals give ap=ar=map=1") {
    GroundTruthSet gt;
    gt.video_name = "perfect";
    gt.geometry = {100, 100};
    gt.frames.push_back({0, {{10, 10, 30, 30}}});
    gt.frames.push_back({1, {{40, 40, 60, 60}, {5, 70, 25, 90}}});

    std::vector<ProposalSet> proposals;
    proposals.push_back(make_set(0, {{BBox{10, 10, 30, 30}, 0.9}}));
    proposals.push_back(make_set(
        1, {{BBox{40, 40, 60, 60}, 0.8}, {BBox{5, 70, 25, 90}, 0.7}}));

    const EvalReport report = evaluate({proposals}, {gt}, EvalConfig{});
    REQUIRE(report.per_video.size() == 1);
    CHECK(report.per_video[0].ap == doctest::Approx(1.0));
    CHECK(report.per_video[0].ar == doctest::Approx(1.0));
    CHECK(report.per_video[0].tp == 3);
    CHECK(report.per_video[0].fp == 0);
    CHECK(report.per_video[0].fn == 0);
    CHECK(report.map == doctest::Approx(1.0));
    CHECK(report.mar == doctest::Approx(1.0));
}

TEST_CASE("evaluate: map is the unweighted mean of per-video ap") {
    GroundTruthSet gt_a;
    gt_a.video_name = "a";
    gt_a.geometry = {100, 100};
    gt_a.frames.push_back({0, {{10, 10, 30, 30}}});
    std::vector<ProposalSet> props_a;
    props_a.push_back(make_set(0, {{BBox{10, 10, 30, 30}, 0.9}}));

    // video b: FP scored above the TP -> ap = 0.5 (precision 1/2 at recall 1)
    GroundTruthSet gt_b;
    gt_b.video_name = "b";
    gt_b.geometry = {100, 100};
    gt_b.frames.push_back({0, {{10, 10, 30, 30}}});
    std::vector<ProposalSet> props_b;
    props_b.push_back(make_set(
        0, {{BBox{60, 60, 80, 80}, 0.95}, {BBox{10, 10, 30, 30}, 0.9}}));

    const EvalReport report =
        evaluate({props_a, props_b}, {gt_a, gt_b}, EvalConfig{});
    REQUIRE(report.per_video.size() == 2);
    CHECK(report.per_video[0].ap == doctest::Approx(1.0));
    CHECK(report.per_video[1].ap == doctest::Approx(0.5));
    CHECK(report.map == doctest::Approx(0.75));
}

TEST_CASE("evaluate: six-video report mirrors the table layout") {
    std::vector<GroundTruthSet> gts;
    std::vector<std::vector<ProposalSet>> proposals;
    const char* names[6] = {"hall_1", "hall_2", "hall_3",
                            "hall_4", "bottle", "car_1"};
    for (int v = 0; v < 6; ++v) {
        GroundTruthSet gt;
        gt.video_name = names[v];
        gt.geometry = {100, 100};
        gt.frames.push_back({0, {{10, 10, 30, 30}}});
        gts.push_back(gt);
        std::vector<ProposalSet> p;
        p.push_back(make_set(0, {{BBox{10, 10, 30, 30}, 0.9}}));
        proposals.push_back(p);
    }
    const EvalReport report = evaluate(proposals, gts, EvalConfig{});
    REQUIRE(report.per_video.size() == 6);

    const std::string table = to_table(report);
    for (const char* name : names)
        CHECK(table.find(name) != std::string::npos);
    CHECK(table.find("mAP = 1.0000") != std::string::npos);
    // one header + six video rows + mAP + mAR lines
    CHECK(std::count(table.begin(), table.end(), '\n') == 9);
}

TEST_CASE("evaluate: proposal chunks missing from gt are skipped with warning") {
    GroundTruthSet gt;
    gt.video_name = "partial";
    gt.geometry = {100, 100};
    gt.frames.push_back({0, {{10, 10, 30, 30}}});

    std::vector<ProposalSet> proposals;
    proposals.push_back(make_set(0, {{BBox{10, 10, 30, 30}, 0.9}}));
    proposals.push_back(make_set(7, {{BBox{10, 10, 30, 30}, 0.9}}));

    const EvalReport report = evaluate({proposals}, {gt}, EvalConfig{});
    REQUIRE(report.warnings.size() == 1);
    CHECK(report.warnings[0].find("chunk 7") != std::string::npos);
    CHECK(report.per_video[0].ap == doctest::Approx(1.0));
}

TEST_CASE("evaluate: video without gt frames is excluded from the means") {
    GroundTruthSet good;
    good.video_name = "good";
    good.geometry = {100, 100};
    good.frames.push_back({0, {{10, 10, 30, 30}}});
    GroundTruthSet empty;
    empty.video_name = "empty";
    empty.geometry = {100, 100};

    std::vector<ProposalSet> perfect;
    perfect.push_back(make_set(0, {{BBox{10, 10, 30, 30}, 0.9}}));

    const EvalReport report =
        evaluate({perfect, {}}, {good, empty}, EvalConfig{});
    REQUIRE(report.per_video.size() == 1);
    CHECK(report.map == doctest::Approx(1.0));
    REQUIRE(report.warnings.size() == 1);
    CHECK(report.warnings[0].find("empty") != std::string::npos);
}

TEST_CASE("ground truth json round-trip and validation") {
    GroundTruthSet gt;
    gt.video_name = "fixture";
    gt.geometry = {640, 480};
    gt.frames.push_back({0, {{1, 2, 3, 4}}});
    gt.frames.push_back({2, {{10, 10, 20, 20}, {30, 30, 44, 44}}});

    const GroundTruthSet parsed = parse_ground_truth_json(to_json(gt));
    CHECK(parsed.video_name == gt.video_name);
    CHECK(parsed.geometry == gt.geometry);
    REQUIRE(parsed.frames.size() == 2);
    CHECK(parsed.frames[1].boxes.size() == 2);
    CHECK(parsed.frames[1].boxes[1] == BBox{30, 30, 44, 44});

    SUBCASE("box outside geometry") {
        gt.frames[0].boxes[0] = BBox{600, 400, 700, 500};
        CHECK_THROWS_AS(parse_ground_truth_json(to_json(gt)), ValidationError);
    }
    SUBCASE("chunk indices must increase") {
        gt.frames[1].chunk_index = 0;
        CHECK_THROWS_AS(parse_ground_truth_json(to_json(gt)), ValidationError);
    }
}

TEST_CASE("eval config validation") {
    EvalConfig bad;
    bad.iou_threshold = 0.0;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad.iou_threshold = 1.5;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = EvalConfig{};
    bad.max_detections_per_chunk = 0;
    CHECK_THROWS_AS(validate(bad), ConfigError);
}
