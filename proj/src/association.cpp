#include "serialtrack/association.hpp"

#include <algorithm>
#include <iostream>
#include <set>

#include "serialtrack/kernels.hpp"

namespace serialtrack {

BBox Detection::bounding_box() const {
    if (const BBox* b = std::get_if<BBox>(&shape)) return *b;
    return std::get<Circle>(shape).bounding_box();
}

Circle Detection::inscribed_circle() const {
    if (const Circle* c = std::get_if<Circle>(&shape)) return *c;
    const BBox& b = std::get<BBox>(shape);
    return {b.center(), 0.5 * std::min(b.width(), b.height())};
}

AffinityMatrix pair_affinity(const std::vector<Detection>& dets_early,
                             const std::vector<Detection>& dets_late,
                             const PairTransform& tr, ShapeMode mode) {
    AffinityMatrix aff;
    aff.rows = static_cast<int>(dets_early.size());
    aff.cols = static_cast<int>(dets_late.size());
    if (mode == ShapeMode::box) {
        std::vector<BBox> early, late;
        early.reserve(dets_early.size());
        late.reserve(dets_late.size());
        for (const Detection& d : dets_early) early.push_back(d.bounding_box());
        for (const Detection& d : dets_late) late.push_back(d.bounding_box());
        aff.values = kernels::affinity_boxes_parallel(early, late, tr);
    } else {
        std::vector<Circle> early, late;
        early.reserve(dets_early.size());
        late.reserve(dets_late.size());
        for (const Detection& d : dets_early) early.push_back(d.inscribed_circle());
        for (const Detection& d : dets_late) late.push_back(d.inscribed_circle());
        aff.values = kernels::affinity_circles_parallel(early, late, tr);
    }
    return aff;
}

std::vector<std::pair<int, int>> greedy_match(const AffinityMatrix& aff, double s) {
    struct Candidate {
        double value;
        int row, col;
    };
    std::vector<Candidate> candidates;
    for (int r = 0; r < aff.rows; ++r)
        for (int c = 0; c < aff.cols; ++c) {
            const double v = aff.at(r, c);
            if (v > s) candidates.push_back({v, r, c});
        }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.value != b.value) return a.value > b.value;
        if (a.row != b.row) return a.row < b.row;
        return a.col < b.col;
    });

    std::vector<char> row_used(aff.rows, 0), col_used(aff.cols, 0);
    std::vector<std::pair<int, int>> matches;
    for (const Candidate& c : candidates) {
        if (row_used[c.row] || col_used[c.col]) continue;
        row_used[c.row] = 1;
        col_used[c.col] = 1;
        matches.emplace_back(c.row, c.col);
    }
    return matches;
}

namespace {

// Hungarian linking restricted to pairs above the threshold (ablation path).
std::vector<std::pair<int, int>> optimal_match(const AffinityMatrix& aff, double s) {
    if (aff.rows == 0 || aff.cols == 0) return {};
    constexpr double kForbidden = 1e9;
    std::vector<std::vector<double>> cost(aff.rows, std::vector<double>(aff.cols));
    for (int r = 0; r < aff.rows; ++r)
        for (int c = 0; c < aff.cols; ++c)
            cost[r][c] = aff.at(r, c) > s ? 1.0 - aff.at(r, c) : kForbidden;
    std::vector<std::pair<int, int>> matches;
    for (const auto& [r, c] : hungarian(cost))
        if (cost[r][c] < kForbidden) matches.emplace_back(r, c);
    return matches;
}

class Tracker {
public:
    Tracker(const std::vector<std::vector<Detection>>& sections, const DpaOptions& options)
        : sections_(sections), options_(options) {
        assigned_.resize(sections.size());
        for (std::size_t t = 0; t < sections.size(); ++t)
            assigned_[t].assign(sections[t].size(), 0);
    }

    int fresh_id() { return next_id_++; }

    void assign(int t, int det_index, int id) {
        Detection det = sections_[t][det_index];
        det.track_id = id;
        tracks_[id].push_back(det);
        assigned_[t][det_index] = id;
        ids_on_section_[t].insert(id);
    }

    void fresh_ids_for_unassigned(int t) {
        for (std::size_t i = 0; i < sections_[t].size(); ++i)
            if (!assigned_[t][i]) assign(t, static_cast<int>(i), fresh_id());
    }

    bool id_on_section(int t, int id) const {
        const auto it = ids_on_section_.find(t);
        return it != ids_on_section_.end() && it->second.count(id) > 0;
    }

    // Link detections of section `late` from rows `row_dets` (subset of
    // section `early` given by row_index) through tr; only unassigned
    // detections of `late` are eligible columns.
    void link(int early, int late, const std::vector<int>& row_index,
              const PairTransform& tr) {
        std::vector<int> col_index;
        std::vector<Detection> rows, cols;
        for (int r : row_index) rows.push_back(sections_[early][r]);
        for (std::size_t c = 0; c < sections_[late].size(); ++c)
            if (!assigned_[late][c]) {
                col_index.push_back(static_cast<int>(c));
                cols.push_back(sections_[late][c]);
            }
        if (rows.empty() || cols.empty()) return;

        const AffinityMatrix aff = pair_affinity(rows, cols, tr, options_.shape_mode);
        const auto matches = options_.hungarian_linking
                                 ? optimal_match(aff, options_.s_threshold)
                                 : greedy_match(aff, options_.s_threshold);
        for (const auto& [r, c] : matches)
            assign(late, col_index[c], assigned_[early][row_index[r]]);
    }

    std::vector<int> all_rows(int t) const {
        std::vector<int> rows(sections_[t].size());
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<int>(i);
        return rows;
    }

    // Rows of section t whose track has not already reached section `late`.
    std::vector<int> rows_not_on(int t, int late) const {
        std::vector<int> rows;
        for (std::size_t i = 0; i < sections_[t].size(); ++i)
            if (assigned_[t][i] && !id_on_section(late, assigned_[t][i]))
                rows.push_back(static_cast<int>(i));
        return rows;
    }

    TrackSet take_tracks() {
        for (auto& [id, dets] : tracks_)
            std::sort(dets.begin(), dets.end(),
                      [](const Detection& a, const Detection& b) { return a.section < b.section; });
        return std::move(tracks_);
    }

private:
    const std::vector<std::vector<Detection>>& sections_;
    DpaOptions options_;
    std::vector<std::vector<int>> assigned_;  // 0 = unassigned
    std::map<int, std::set<int>> ids_on_section_;
    TrackSet tracks_;
    int next_id_ = 1;
};

const PairTransform& require_transform(const std::map<int, PairTransform>& transforms, int t,
                                        int offset) {
    const auto it = transforms.find(t);
    if (it == transforms.end())
        throw MissingTransform("no transform for pair " + std::to_string(t) + "->" +
                               std::to_string(t + offset));
    return it->second;
}

}  // namespace

TrackSet dpa_track(const std::vector<std::vector<Detection>>& sections,
                   const std::map<int, PairTransform>& adjacent,
                   const std::map<int, PairTransform>& interleave,
                   const std::vector<PairFlag>& fc, const DpaOptions& options) {
    const int t_count = static_cast<int>(sections.size());
    if (t_count == 0) return {};
    for (int t = 0; t < t_count; ++t)
        for (const Detection& d : sections[t])
            if (d.section != t)
                throw InconsistentStack("detection labeled section " +
                                        std::to_string(d.section) + " found in slot " +
                                        std::to_string(t));
    if (static_cast<int>(fc.size()) < t_count - 1)
        throw InconsistentStack("need one fc flag per adjacent pair: " +
                                std::to_string(t_count - 1) + " flags, got " +
                                std::to_string(fc.size()));

    Tracker tracker(sections, options);
    tracker.fresh_ids_for_unassigned(0);

    int t = 0;
    while (t + 1 < t_count) {
        if (!fc[t].failed()) {
            // First path: adjacent linking t -> t+1.
            tracker.link(t, t + 1, tracker.all_rows(t), require_transform(adjacent, t, 1));

            // Second path: recover t+1 leftovers from t-1 through the
            // interleave, unless that cycle itself is suspect.
            if (t >= 1) {
                const auto it = interleave.find(t - 1);
                if (it != interleave.end() && !fc[t - 1].failed()) {
                    tracker.link(t - 1, t + 1, tracker.rows_not_on(t - 1, t + 1), it->second);
                } else if (it == interleave.end()) {
                    std::clog << "dpa: second path skipped at pair (" << t << "," << t + 1
                              << "): no interleave transform " << t - 1 << "->" << t + 1
                              << "\n";
                }
            }

            tracker.fresh_ids_for_unassigned(t + 1);
            t += 1;
        } else if (t + 2 < t_count) {
            // Registration between t and t+1 is untrusted: skip over t+1 and
            // link t+2 directly from t. The skipped section still needs ids.
            tracker.fresh_ids_for_unassigned(t + 1);
            tracker.link(t, t + 2, tracker.all_rows(t), require_transform(interleave, t, 2));
            tracker.fresh_ids_for_unassigned(t + 2);
            t += 2;
        } else {
            // Failed last pair; nothing to skip to.
            tracker.fresh_ids_for_unassigned(t + 1);
            t += 1;
        }
    }
    return tracker.take_tracks();
}

FrameSet tracks_to_mot(const TrackSet& ts) {
    FrameSet fs;
    for (const auto& [id, dets] : ts) {
        for (const Detection& d : dets) {
            const BBox b = d.bounding_box();
            fs.add(d.section + 1, FrameEntry(id, b, d.score.value_or(1.0)));
        }
    }
    fs.sort_frames();
    return fs;
}

}  // namespace serialtrack
