#include "serialtrack/cycle_qa.hpp"

#include "serialtrack/kernels.hpp"
#include "serialtrack/registration.hpp"

namespace serialtrack {

CycleTriplet::CycleTriplet(PairTransform f, PairTransform f1, PairTransform b)
    : f_t(std::move(f)), f_t1(std::move(f1)), b_t(std::move(b)) {
    if (f_t.target() != f_t1.source() || b_t.source() != f_t.source() ||
        b_t.target() != f_t1.target())
        throw InvalidPair("cycle triplet sections do not chain: f_t " +
                          std::to_string(f_t.source()) + "->" + std::to_string(f_t.target()) +
                          ", f_t1 " + std::to_string(f_t1.source()) + "->" +
                          std::to_string(f_t1.target()) + ", b_t " +
                          std::to_string(b_t.source()) + "->" + std::to_string(b_t.target()));
}

std::string to_string(SeriesClass c) {
    switch (c) {
        case SeriesClass::Good: return "Good";
        case SeriesClass::Acceptable: return "Acceptable";
        case SeriesClass::Bad: return "Bad";
    }
    return "Bad";
}

ConvexPolygon cycle_map_box(const CycleTriplet& tr, const BBox& b) {
    return kernels::cycle_polygon(b, tr.f_t, tr.f_t1, tr.b_t);
}

CycleReport fc_score(const std::vector<BBox>& boxes_t, const CycleTriplet& tr, double q) {
    CycleReport report;
    report.t = tr.t();
    if (boxes_t.empty()) {
        report.fc = 1;
        report.indeterminate = true;
        report.median_iou = 0.0;
        return report;
    }
    report.per_box_iou = kernels::cycle_box_ious_parallel(boxes_t, tr.f_t, tr.f_t1, tr.b_t);
    report.median_iou = median_lower(report.per_box_iou);
    report.fc = report.median_iou < q ? 1 : 0;
    return report;
}

double calibrate_q(const std::vector<BBox>& boxes, double shift_magnitude, int trials,
                   std::uint64_t seed) {
    if (boxes.empty()) throw DegenerateConfiguration("calibrate_q needs at least one box");
    if (trials < 1) throw DegenerateConfiguration("calibrate_q needs at least one trial");
    return median_lower(
        kernels::shifted_box_ious_parallel(boxes, shift_magnitude, trials, seed));
}

SeriesQuality classify_series(const std::vector<int>& fc_flags) {
    if (fc_flags.empty())
        throw DegenerateConfiguration("series classification needs at least one pair flag");
    SeriesQuality quality;
    quality.fc_flags = fc_flags;

    int run = 0;
    for (int flag : fc_flags) {
        if (flag != 0) {
            ++run;
        } else if (run > 0) {
            quality.failing_runs.push_back(run);
            run = 0;
        }
    }
    if (run > 0) quality.failing_runs.push_back(run);

    if (quality.failing_runs.empty()) {
        quality.cls = SeriesClass::Good;
    } else {
        bool bad = false;
        for (int len : quality.failing_runs) bad = bad || len >= 2;
        quality.cls = bad ? SeriesClass::Bad : SeriesClass::Acceptable;
    }
    return quality;
}

}  // namespace serialtrack
