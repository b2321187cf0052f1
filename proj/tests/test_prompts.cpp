#include "doctest.h"
#include "helpers.hpp"

#include "tgseg/visual_prompts.hpp"

using namespace tgseg;

namespace {

Point center(const oracle::Cell& c, int rows, int cols, int h, int w) {
    return {(c.col + 0.5) / cols * w, (c.row + 0.5) / rows * h};
}

void check_against_sort_oracle(const RealGrid& lattice, double t, int h, int w) {
    const PromptSet p = extract_points(lattice, t, h, w);
    const auto [pos, neg] = oracle::sort_points(lattice.data, lattice.rows, lattice.cols, t);
    REQUIRE(p.positives.size() == pos.size());
    REQUIRE(p.negatives.size() == neg.size());
    for (std::size_t i = 0; i < pos.size(); ++i) CHECK(p.positives[i] == center(pos[i], lattice.rows, lattice.cols, h, w));
    for (std::size_t i = 0; i < neg.size(); ++i) CHECK(p.negatives[i] == center(neg[i], lattice.rows, lattice.cols, h, w));
}

oracle::OBox to_obox(const Box& b) { return {b.x0, b.y0, b.x1, b.y1}; }

} // namespace

TEST_SUITE("prompts") {

TEST_CASE("single hot cell") {
    RealGrid g(4, 4, 0.0);
    g(2, 1) = 1.0;
    const PromptSet p = extract_points(g, 0.9, 64, 64);
    REQUIRE(p.positives.size() == 1);
    CHECK(p.positives[0] == Point{24.0, 40.0});
    REQUIRE(p.negatives.size() == 1);
    CHECK(p.negatives[0] == Point{8.0, 8.0});
}

TEST_CASE("all cells equal: every cell positive, negatives in row-major order") {
    const RealGrid g(3, 3, 1.0);
    const PromptSet p = extract_points(g, 0.9, 30, 30);
    CHECK(p.positives.size() == 9);
    REQUIRE(p.negatives.size() == 9);
    CHECK(p.negatives[0] == Point{5.0, 5.0});
    CHECK(p.negatives[1] == Point{15.0, 5.0});
}

TEST_CASE("nothing above threshold falls back to the argmax") {
    RealGrid g(2, 2, 0.1);
    g(1, 0) = 0.5;
    const PromptSet p = extract_points(g, 0.9, 10, 10);
    REQUIRE(p.positives.size() == 1);
    CHECK(p.positives[0] == Point{2.5, 7.5});
    CHECK(p.negatives.size() == 1);
}

TEST_CASE("random lattices agree with the sort oracle") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        check_against_sort_oracle(testing::random_grid(rng, 4, 4), 0.9, 64, 48);
        check_against_sort_oracle(testing::random_grid(rng, 8, 8), 0.8, 100, 100);
    }
}

TEST_CASE("positives dominate negatives and sizes match") {
    std::mt19937_64 rng(32);
    std::uniform_int_distribution<int> levels(0, 4);
    for (int trial = 0; trial < 50; ++trial) {
        RealGrid g(6, 6);
        for (auto& v : g.data) v = levels(rng) / 4.0;
        const PromptSet p = extract_points(g, 0.9, 60, 60);
        CHECK(p.positives.size() == p.negatives.size());
        auto value = [&](const Point& pt) { return g(static_cast<int>(pt.y / 10), static_cast<int>(pt.x / 10)); };
        double lowest_pos = 2, highest_neg = -1;
        for (const auto& pt : p.positives) lowest_pos = std::min(lowest_pos, value(pt));
        for (const auto& pt : p.negatives) highest_neg = std::max(highest_neg, value(pt));
        CHECK(lowest_pos >= highest_neg);
        for (const auto& pt : p.positives) CHECK((pt.x >= 0 && pt.x < 60 && pt.y >= 0 && pt.y < 60));
    }
}

TEST_CASE("points scale with the image") {
    std::mt19937_64 rng(33);
    const RealGrid g = testing::random_grid(rng, 5, 5);
    const PromptSet a = extract_points(g, 0.9, 50, 40), b = extract_points(g, 0.9, 150, 120);
    for (std::size_t i = 0; i < a.positives.size(); ++i) {
        CHECK(b.positives[i].x == doctest::Approx(3 * a.positives[i].x));
        CHECK(b.positives[i].y == doctest::Approx(3 * a.positives[i].y));
    }
}

TEST_CASE("threshold outside (0,1) is rejected") {
    CHECK_THROWS_AS(extract_points(RealGrid(2, 2, 0.0), 1.0, 4, 4), ContractViolation);
    CHECK_THROWS_AS(extract_points(RealGrid(2, 2, 0.0), 0.0, 4, 4), ContractViolation);
}

TEST_CASE("solid rectangle gives its tight box with IoU 1") {
    BinaryMask m(10, 12, 0);
    for (int r = 2; r < 6; ++r)
        for (int c = 3; c < 9; ++c) m(r, c) = 1;
    const auto b = max_iou_box(m);
    REQUIRE(b.has_value());
    CHECK(*b == Box{3, 2, 9, 6});
    CHECK(box_fill_iou(*b, m) == 1.0);
    CHECK_FALSE(max_iou_box(BinaryMask(5, 5, 0)).has_value());
}

TEST_CASE("larger of two far blobs wins") {
    BinaryMask m(30, 30, 0);
    for (int r = 20; r < 30; ++r)
        for (int c = 20; c < 30; ++c) m(r, c) = 1;
    for (int c = 0; c < 5; ++c) m(0, c) = 1;
    const auto b = max_iou_box(m);
    REQUIRE(b.has_value());
    CHECK(*b == Box{20, 20, 30, 30});
    oracle::OBox ob{};
    REQUIRE(oracle::best_box(m.data, 30, 30, ob));
    CHECK(to_obox(*b).x0 == ob.x0);
}

TEST_CASE("equal components: first in row-major order wins") {
    BinaryMask m(6, 6, 0);
    m(4, 1) = m(4, 2) = 1;
    m(1, 3) = m(1, 4) = 1;
    CHECK(*max_iou_box(m) == Box{3, 1, 5, 2});
}

TEST_CASE("max_iou_box matches exhaustive oracle on random masks") {
    std::mt19937_64 rng(34);
    std::uniform_int_distribution<int> side(1, 32);
    for (int trial = 0; trial < 60; ++trial) {
        const int rows = side(rng), cols = side(rng);
        const BinaryMask m = trial % 2 ? testing::random_blobs(rng, rows, cols) : testing::random_mask(rng, rows, cols, 0.3);
        oracle::OBox ob{};
        const bool any = oracle::best_box(m.data, rows, cols, ob);
        const auto b = max_iou_box(m);
        REQUIRE(any == b.has_value());
        if (!any) continue;
        CHECK(b->x0 == ob.x0);
        CHECK(b->y0 == ob.y0);
        CHECK(b->x1 == ob.x1);
        CHECK(b->y1 == ob.y1);
        // The chosen box touches the mask and is at least as good as every component box.
        bool touches = false;
        for (int r = b->y0; r < b->y1; ++r)
            for (int c = b->x0; c < b->x1; ++c) touches = touches || m(r, c);
        CHECK(touches);
        for (const auto& comp : connected_components(m)) CHECK(box_fill_iou(*b, m) >= box_fill_iou(comp.box, m));
    }
}

TEST_CASE("components are 4-connected") {
    BinaryMask m(3, 3, 0);
    m(0, 0) = m(1, 1) = m(2, 2) = 1;
    CHECK(connected_components(m).size() == 3);
    m(0, 1) = 1;
    const auto comps = connected_components(m);
    REQUIRE(comps.size() == 2);
    CHECK(comps[0].pixel_count == 3);
    CHECK(comps[0].box == Box{0, 0, 2, 2});
}

TEST_CASE("max_box is the union box") {
    std::mt19937_64 rng(35);
    for (int trial = 0; trial < 30; ++trial) {
        const BinaryMask m = testing::random_blobs(rng, 20, 24);
        int x0 = 99, y0 = 99, x1 = -1, y1 = -1;
        for (int r = 0; r < 20; ++r)
            for (int c = 0; c < 24; ++c)
                if (m(r, c)) {
                    x0 = std::min(x0, c);
                    y0 = std::min(y0, r);
                    x1 = std::max(x1, c + 1);
                    y1 = std::max(y1, r + 1);
                }
        const auto b = max_box(m);
        if (x1 < 0) {
            CHECK_FALSE(b.has_value());
            continue;
        }
        CHECK(*b == Box{x0, y0, x1, y1});
    }
}

TEST_CASE("assemble_prompts per post mode") {
    PromptSet pts;
    pts.positives = {{1, 1}};
    pts.negatives = {{5, 5}};
    BinaryMask prev(8, 8, 0);
    prev(1, 1) = prev(1, 2) = 1;
    prev(6, 6) = 1;

    CHECK_FALSE(assemble_prompts(pts, std::nullopt).box.has_value());
    const auto none = assemble_prompts(pts, prev, PostMode::none);
    CHECK_FALSE(none.box.has_value());
    CHECK_FALSE(none.mask.has_value());
    CHECK(*assemble_prompts(pts, prev, PostMode::max_iou_box).box == Box{1, 1, 3, 2});
    CHECK(*assemble_prompts(pts, prev, PostMode::max_box).box == Box{1, 1, 7, 7});
    const auto dense = assemble_prompts(pts, prev, PostMode::mask);
    CHECK_FALSE(dense.box.has_value());
    REQUIRE(dense.mask.has_value());
    CHECK(*dense.mask == prev);
    CHECK(assemble_prompts(pts, prev).positives.size() == 1);
}

TEST_CASE("post mode names") {
    for (auto m : {PostMode::none, PostMode::max_box, PostMode::mask, PostMode::max_iou_box})
        CHECK(parse_post_mode(to_string(m)) == m);
    CHECK(parse_post_mode("MaxIOUBox") == PostMode::max_iou_box);
    CHECK_THROWS_AS(parse_post_mode("biggest"), ContractViolation);
}

} // TEST_SUITE
