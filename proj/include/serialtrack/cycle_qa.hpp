#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "serialtrack/transform.hpp"

namespace serialtrack {

// The three registrations forming one consistency loop: two forward hops and
// the interleave shortcut whose inverse closes the cycle.
struct CycleTriplet {
    PairTransform f_t;   // t   -> t+1
    PairTransform f_t1;  // t+1 -> t+2
    PairTransform b_t;   // t   -> t+2 (interleave)

    CycleTriplet(PairTransform f, PairTransform f1, PairTransform b);
    int t() const { return f_t.source(); }
};

struct CycleReport {
    int t = 0;
    double median_iou = 0.0;
    int fc = 0;  // 1 = failed cycle
    bool indeterminate = false;  // no boxes on section t, fc forced to 1
    std::vector<double> per_box_iou;
};

enum class SeriesClass { Good, Acceptable, Bad };

struct SeriesQuality {
    SeriesClass cls = SeriesClass::Good;
    std::vector<int> fc_flags;          // one per adjacent pair
    std::vector<int> failing_runs;      // lengths of maximal runs of 1s
};

std::string to_string(SeriesClass c);

// Box carried around the whole cycle (t -> t+1 -> t+2 -> t).
ConvexPolygon cycle_map_box(const CycleTriplet& tr, const BBox& b);

// Median cycle IoU over all boxes of section t, flagged against q. An empty
// section gives no evidence either way and is reported fc=1/indeterminate.
CycleReport fc_score(const std::vector<BBox>& boxes_t, const CycleTriplet& tr, double q);

// Median IoU between boxes and randomly shifted copies; the simulation that
// justifies the operating threshold (shift magnitude ~ object diameter).
double calibrate_q(const std::vector<BBox>& boxes, double shift_magnitude, int trials,
                   std::uint64_t seed);

// Good: no failures. Bad: two or more consecutive failed pairs (tracking
// cannot skip that far). Acceptable: only isolated failures.
SeriesQuality classify_series(const std::vector<int>& fc_flags);

}  // namespace serialtrack
