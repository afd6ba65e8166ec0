#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "serialtrack/geometry.hpp"

namespace serialtrack {

// One MOT15 row after parsing: boxes are kept in corner form internally.
struct FrameEntry {
    int id = -1;
    BBox box;
    double conf = 1.0;
    FrameEntry(int i, BBox b, double c) : id(i), box(std::move(b)), conf(c) {}
};

// Per-frame identified boxes, frames indexed from 1. Within one frame ids are
// unique (-1 detections excepted, they carry no identity).
class FrameSet {
public:
    FrameSet() = default;
    explicit FrameSet(int frame_count) : frames_(frame_count) {}

    int frame_count() const { return static_cast<int>(frames_.size()); }
    void resize_frames(int n);
    const std::vector<FrameEntry>& frame(int f) const { return frames_.at(f - 1); }
    void add(int frame, FrameEntry entry);  // grows the frame range as needed
    void sort_frames();                     // by id within each frame
    std::size_t total_entries() const;

private:
    std::vector<std::vector<FrameEntry>> frames_;
};

struct MotScore {
    double idf1 = 0, idp = 0, idr = 0;
    double rcll = 0, prcn = 0, far = 0;
    int gt = 0, mt = 0, pt = 0, ml = 0;
    int fp = 0, fn = 0, ids = 0, fm = 0;
    double mota = 0, motp = 0, motal = 0;
};

struct ClearMetrics {
    double rcll = 0, prcn = 0, far = 0;
    int gt = 0, mt = 0, pt = 0, ml = 0;
    int fp = 0, fn = 0, ids = 0, fm = 0;
    double mota = 0, motp = 0, motal = 0;
    int matches = 0;
    std::size_t gt_boxes = 0;
};

struct IdMetrics {
    double idf1 = 0, idp = 0, idr = 0;
    std::size_t idtp = 0, idfp = 0, idfn = 0;
};

// Optimal one-to-one assignment of min(rows, cols) pairs minimizing total
// cost; O(n^2 m) with potentials. Costs must be finite.
std::vector<std::pair<int, int>> hungarian(const std::vector<std::vector<double>>& cost);

// CLEAR-MOT accumulation: previous-frame correspondences persist while still
// above the IoU threshold, the remainder is matched per frame with the
// Hungarian algorithm on 1-IoU.
ClearMetrics clear_mot(const FrameSet& gt, const FrameSet& hyp, double match_iou = 0.5);

// Identity metrics from one global min-cost matching between ground-truth and
// hypothesis identities.
IdMetrics id_metrics(const FrameSet& gt, const FrameSet& hyp, double match_iou = 0.5);

MotScore evaluate(const FrameSet& gt, const FrameSet& hyp, double match_iou = 0.5);

// MOT-Challenge 2015 CSV: frame,id,bb_left,bb_top,bb_width,bb_height,conf,x,y,z
FrameSet parse_mot15(std::istream& in);
void write_mot15(const FrameSet& fs, std::ostream& out);
FrameSet parse_mot15_file(const std::string& path);
void write_mot15_file(const FrameSet& fs, const std::string& path);

std::string format_score_table(const MotScore& score);  // header + one value row

}  // namespace serialtrack
