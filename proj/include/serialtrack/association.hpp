#pragma once

#include <map>
#include <optional>
#include <variant>
#include <vector>

#include "serialtrack/mot_metrics.hpp"
#include "serialtrack/transform.hpp"

namespace serialtrack {

enum class ShapeMode { box, circle };

struct Detection {
    int section = 0;
    std::variant<BBox, Circle> shape;
    std::optional<double> score;
    std::optional<int> track_id;

    Detection(int sec, std::variant<BBox, Circle> sh, std::optional<double> sc = std::nullopt)
        : section(sec), shape(std::move(sh)), score(sc) {}

    BBox bounding_box() const;
    Circle inscribed_circle() const;  // inscribed in the box for box shapes
};

struct AffinityMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> values;  // row-major

    double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
};

// Detections grouped by global track id; within a track sections strictly
// increase.
using TrackSet = std::map<int, std::vector<Detection>>;

struct PairFlag {
    int fc = 0;
    bool indeterminate = false;  // empty section; no evidence of failure
    bool failed() const { return fc != 0 && !indeterminate; }
};

// IoU affinity with the later section's detections pulled back into the
// earlier section's space through tr's inverse.
AffinityMatrix pair_affinity(const std::vector<Detection>& dets_early,
                             const std::vector<Detection>& dets_late,
                             const PairTransform& tr, ShapeMode mode = ShapeMode::box);

// Largest-first greedy selection of pairs with IoU strictly above s; each row
// and column used at most once. Ties break on (row, col) order.
std::vector<std::pair<int, int>> greedy_match(const AffinityMatrix& aff, double s);

struct DpaOptions {
    double s_threshold = 0.1;
    ShapeMode shape_mode = ShapeMode::box;
    bool hungarian_linking = false;  // ablation: optimal instead of greedy
};

// Dual-path association over the whole stack. `adjacent` maps t to the
// transform t->t+1, `interleave` maps t to t->t+2; `fc` holds one flag per
// adjacent pair. Returns every detection with a track id assigned.
TrackSet dpa_track(const std::vector<std::vector<Detection>>& sections,
                   const std::map<int, PairTransform>& adjacent,
                   const std::map<int, PairTransform>& interleave,
                   const std::vector<PairFlag>& fc, const DpaOptions& options = {});

// MOT15 records (frame = section + 1), sorted by frame then id.
FrameSet tracks_to_mot(const TrackSet& ts);

}  // namespace serialtrack
