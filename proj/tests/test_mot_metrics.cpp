#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "serialtrack/mot_metrics.hpp"
#include "serialtrack/rng.hpp"
#include "test_helpers.hpp"

using namespace serialtrack;
using namespace serialtrack::testing;

namespace {

FrameSet single_track(int frames, int id, double drift = 0.0) {
    FrameSet fs;
    for (int f = 1; f <= frames; ++f)
        fs.add(f, FrameEntry(id, BBox(10 + drift * f, 10, 60 + drift * f, 60), 1.0));
    return fs;
}

// One ground-truth object over two frames; the hypothesis covers both frames
// but switches id between them.
void id_switch_fixture(FrameSet& gt, FrameSet& hyp) {
    gt = single_track(2, 1);
    hyp = FrameSet();
    hyp.add(1, FrameEntry(7, BBox(10, 10, 60, 60), 1.0));
    hyp.add(2, FrameEntry(8, BBox(10, 10, 60, 60), 1.0));
}

FrameSet random_frameset(RngStream& rng, int frames, int max_ids) {
    FrameSet fs(frames);
    for (int id = 1; id <= max_ids; ++id) {
        if (rng.next_double() < 0.2) continue;
        for (int f = 1; f <= frames; ++f) {
            if (rng.next_double() < 0.3) continue;
            const double x = 100.0 * id + rng.uniform(-30, 30);
            const double y = 50.0 + rng.uniform(-30, 30);
            fs.add(f, FrameEntry(id, BBox(x, y, x + 50, y + 50), 1.0));
        }
    }
    return fs;
}

}  // namespace

TEST_SUITE_BEGIN("mot_metrics");

TEST_CASE("hungarian basics") {
    const auto simple = hungarian({{1, 2}, {2, 1}});
    REQUIRE(simple.size() == 2);
    CHECK(simple[0] == std::pair<int, int>(0, 0));
    CHECK(simple[1] == std::pair<int, int>(1, 1));

    const auto one = hungarian({{42.0}});
    REQUIRE(one.size() == 1);
    CHECK(one[0] == std::pair<int, int>(0, 0));
}

TEST_CASE("hungarian equals permutation brute force") {
    RngStream rng(61);
    for (int trial = 0; trial < 50; ++trial) {
        const int rows = 2 + static_cast<int>(rng.next_below(5));
        const int cols = 2 + static_cast<int>(rng.next_below(5));
        std::vector<std::vector<double>> cost(rows, std::vector<double>(cols));
        for (auto& row : cost)
            for (double& v : row) v = static_cast<double>(rng.next_below(100));

        const auto assignment = hungarian(cost);
        REQUIRE(static_cast<int>(assignment.size()) == std::min(rows, cols));
        double total = 0.0;
        std::vector<char> row_used(rows, 0), col_used(cols, 0);
        for (const auto& [r, c] : assignment) {
            CHECK(!row_used[r]);
            CHECK(!col_used[c]);
            row_used[r] = col_used[c] = 1;
            total += cost[r][c];
        }
        CHECK(total == oracles::brute_force_assignment_cost(cost));
    }
}

TEST_CASE("clear_mot: perfect hypothesis") {
    const FrameSet gt = single_track(4, 1, 3.0);
    const ClearMetrics m = clear_mot(gt, gt, 0.5);
    CHECK(m.mota == doctest::Approx(100.0));
    CHECK(m.motp == doctest::Approx(100.0));
    CHECK(m.ids == 0);
    CHECK(m.fp == 0);
    CHECK(m.fn == 0);
    CHECK(m.mt == 1);
    CHECK(m.gt == 1);
    CHECK(m.rcll == doctest::Approx(100.0));
    CHECK(m.prcn == doctest::Approx(100.0));
}

TEST_CASE("clear_mot: the two-frame id switch") {
    FrameSet gt, hyp;
    id_switch_fixture(gt, hyp);
    const ClearMetrics m = clear_mot(gt, hyp, 0.5);
    CHECK(m.ids == 1);
    CHECK(m.fp == 0);
    CHECK(m.fn == 0);
    CHECK(m.mota == doctest::Approx(50.0));
    CHECK(m.motal == doctest::Approx(100.0 * (1.0 - std::log10(2.0) / 2.0)));
}

TEST_CASE("clear_mot: empty hypothesis") {
    const FrameSet gt = single_track(3, 1);
    const FrameSet hyp(3);
    const ClearMetrics m = clear_mot(gt, hyp, 0.5);
    CHECK(m.fn == 3);
    CHECK(m.fp == 0);
    CHECK(m.mota == doctest::Approx(0.0));
    CHECK(m.ml == 1);
    CHECK(m.mt == 0);
    CHECK(m.gt == 1);
}

TEST_CASE("clear_mot: frame mismatch") {
    CHECK_THROWS_AS(clear_mot(single_track(3, 1), single_track(2, 1), 0.5), FrameMismatch);
}

TEST_CASE("clear_mot counts fragmentations") {
    FrameSet gt = single_track(5, 1);
    FrameSet hyp;
    hyp.add(1, FrameEntry(9, BBox(10, 10, 60, 60), 1.0));
    hyp.add(2, FrameEntry(9, BBox(10, 10, 60, 60), 1.0));
    // frame 3 missed
    hyp.add(4, FrameEntry(9, BBox(10, 10, 60, 60), 1.0));
    hyp.add(5, FrameEntry(9, BBox(10, 10, 60, 60), 1.0));
    hyp.resize_frames(5);
    const ClearMetrics m = clear_mot(gt, hyp, 0.5);
    CHECK(m.fm == 1);
    CHECK(m.fn == 1);
    CHECK(m.ids == 0);  // same id reacquired
    CHECK(m.mt == 1);   // 4 of 5 frames covered
}

TEST_CASE("id_metrics: perfect and switch fixtures") {
    const FrameSet gt = single_track(4, 1);
    const IdMetrics perfect = id_metrics(gt, gt, 0.5);
    CHECK(perfect.idf1 == doctest::Approx(100.0));
    CHECK(perfect.idp == doctest::Approx(100.0));
    CHECK(perfect.idr == doctest::Approx(100.0));

    FrameSet g, h;
    id_switch_fixture(g, h);
    const IdMetrics m = id_metrics(g, h, 0.5);
    CHECK(m.idtp == 1);
    CHECK(m.idfp == 1);
    CHECK(m.idfn == 1);
    CHECK(m.idf1 == doctest::Approx(50.0));
}

TEST_CASE("id_metrics equals exhaustive bijection search") {
    RngStream rng(67);
    for (int trial = 0; trial < 40; ++trial) {
        const int frames = 1 + static_cast<int>(rng.next_below(5));
        const FrameSet gt = random_frameset(rng, frames, 4);
        const FrameSet hyp = random_frameset(rng, frames, 4);
        const IdMetrics fast = id_metrics(gt, hyp, 0.5);
        CHECK(fast.idtp == oracles::brute_force_idtp(gt, hyp, 0.5));
    }
}

TEST_CASE("metric invariants on random inputs") {
    RngStream rng(71);
    for (int trial = 0; trial < 20; ++trial) {
        const int frames = 2 + static_cast<int>(rng.next_below(4));
        const FrameSet gt = random_frameset(rng, frames, 5);
        FrameSet hyp = random_frameset(rng, frames, 5);
        const MotScore s = evaluate(gt, hyp, 0.5);

        CHECK(s.mt + s.pt + s.ml == s.gt);
        if (s.idp + s.idr > 0)
            CHECK(s.idf1 ==
                  doctest::Approx(2 * s.idp * s.idr / (s.idp + s.idr)).epsilon(1e-9));
        const double total = static_cast<double>(gt.total_entries());
        if (total > 0)
            CHECK(s.motal - s.mota ==
                  doctest::Approx(100.0 * (s.ids - std::log10(s.ids + 1.0)) / total)
                      .epsilon(1e-9));
        CHECK(s.motal >= s.mota - 1e-12);
        CHECK(s.motp >= 0.0);
        CHECK(s.motp <= 100.0);
    }
}

TEST_CASE("metrics ignore hypothesis label permutations") {
    RngStream rng(73);
    const FrameSet gt = random_frameset(rng, 4, 4);
    const FrameSet hyp = random_frameset(rng, 4, 4);

    FrameSet relabeled(4);
    for (int f = 1; f <= 4; ++f)
        for (const FrameEntry& e : hyp.frame(f))
            relabeled.add(f, FrameEntry(e.id + 1000, e.box, e.conf));

    const MotScore a = evaluate(gt, hyp, 0.5);
    const MotScore b = evaluate(gt, relabeled, 0.5);
    CHECK(a.idf1 == doctest::Approx(b.idf1));
    CHECK(a.mota == doctest::Approx(b.mota));
    CHECK(a.ids == b.ids);
    CHECK(a.fm == b.fm);
}

TEST_CASE("metrics invariant under a common translation and 90-degree turn") {
    RngStream rng(79);
    const FrameSet gt = random_frameset(rng, 4, 4);
    const FrameSet hyp = random_frameset(rng, 4, 4);

    auto moved = [](const FrameSet& fs) {
        FrameSet out(fs.frame_count());
        for (int f = 1; f <= fs.frame_count(); ++f)
            for (const FrameEntry& e : fs.frame(f)) {
                // rotate 90 degrees about the origin, then translate
                const BBox& b = e.box;
                out.add(f, FrameEntry(e.id,
                                      BBox(-b.y_max + 500, b.x_min - 200, -b.y_min + 500,
                                           b.x_max - 200),
                                      e.conf));
            }
        return out;
    };
    const MotScore a = evaluate(gt, hyp, 0.5);
    const MotScore b = evaluate(moved(gt), moved(hyp), 0.5);
    CHECK(a.idf1 == doctest::Approx(b.idf1));
    CHECK(a.mota == doctest::Approx(b.mota));
    CHECK(a.motp == doctest::Approx(b.motp));
    CHECK(a.fp == b.fp);
    CHECK(a.fn == b.fn);
}

TEST_CASE("parse_mot15 happy path and errors") {
    std::istringstream good("1,3,10.0,20.0,30.0,40.0,1,-1,-1,-1\n");
    const FrameSet fs = parse_mot15(good);
    REQUIRE(fs.frame_count() == 1);
    REQUIRE(fs.frame(1).size() == 1);
    CHECK(fs.frame(1)[0].id == 3);
    CHECK(fs.frame(1)[0].box.x_min == 10.0);
    CHECK(fs.frame(1)[0].box.y_min == 20.0);
    CHECK(fs.frame(1)[0].box.x_max == 40.0);
    CHECK(fs.frame(1)[0].box.y_max == 60.0);

    auto expect_line = [](const std::string& text, std::size_t line) {
        std::istringstream in(text);
        try {
            parse_mot15(in);
            FAIL_CHECK("expected a parse error for: " << text);
        } catch (const MalformedLine& e) {
            CHECK(e.line == line);
        }
    };
    expect_line("1,3,10,20,-5,40,1,-1,-1,-1\n", 1);                                // width <= 0
    expect_line("1,3,10,20,30,40,1,-1,-1\n", 1);                                   // 9 fields
    expect_line("1,3,10,twenty,30,40,1,-1,-1,-1\n", 1);                            // not a number
    expect_line("0,3,10,20,30,40,1,-1,-1,-1\n", 1);                                // frame < 1
    expect_line("1,1,0,0,5,5,1,-1,-1,-1\n2,1,0,0,5,5,1,-1,-1,-1\n"
                "2,1,9,9,5,5,1,-1,-1,-1\n",
                3);  // duplicate id in frame 2

    std::istringstream nonpositive("1,3,10,20,0,40,1,-1,-1,-1\n");
    CHECK_THROWS_AS(parse_mot15(nonpositive), NonPositiveSize);
}

TEST_CASE("mot15 write/parse round trip") {
    RngStream rng(83);
    FrameSet fs(6);
    for (int f = 1; f <= 6; ++f) {
        const int n = static_cast<int>(rng.next_below(6));
        for (int i = 0; i < n; ++i)
            fs.add(f, FrameEntry(static_cast<int>(rng.next_below(50)) + 1000 * i,
                                 random_box(rng, 500), rng.uniform(0, 1)));
    }
    std::ostringstream first;
    write_mot15(fs, first);
    std::istringstream back(first.str());
    const FrameSet parsed = parse_mot15(back);
    std::ostringstream second;
    write_mot15(parsed, second);
    CHECK(first.str() == second.str());
    CHECK(parsed.total_entries() == fs.total_entries());
}

TEST_CASE("score table layout") {
    MotScore s;
    s.idf1 = s.idp = s.idr = 98.3;
    s.rcll = s.prcn = 100.0;
    s.gt = 297;
    s.mt = 297;
    s.mota = 99.5;
    s.motp = 90.3;
    s.motal = 99.9;
    const std::string table = format_score_table(s);
    CHECK(table.find("IDF1") != std::string::npos);
    CHECK(table.find("MOTAL") != std::string::npos);
    CHECK(table.find("98.3") != std::string::npos);
    CHECK(table.find("297") != std::string::npos);
    // Column order pinned left to right.
    CHECK(table.find("IDF1") < table.find("IDP"));
    CHECK(table.find("Rcll") < table.find("Prcn"));
    CHECK(table.find("MOTA") < table.find("MOTP"));
    CHECK(table.find("MOTP") < table.find("MOTAL"));
}

TEST_SUITE_END();
