#include "serialtrack/mot_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "serialtrack/errors.hpp"
#include "serialtrack/textio.hpp"

namespace serialtrack {

void FrameSet::resize_frames(int n) {
    if (n < frame_count())
        throw FrameMismatch("cannot shrink a frame set");
    frames_.resize(n);
}

void FrameSet::add(int frame, FrameEntry entry) {
    if (frame < 1) throw FrameMismatch("frames are indexed from 1");
    if (frame > frame_count()) frames_.resize(frame);
    frames_[frame - 1].push_back(std::move(entry));
}

void FrameSet::sort_frames() {
    for (auto& f : frames_)
        std::stable_sort(f.begin(), f.end(),
                         [](const FrameEntry& a, const FrameEntry& b) { return a.id < b.id; });
}

std::size_t FrameSet::total_entries() const {
    std::size_t n = 0;
    for (const auto& f : frames_) n += f.size();
    return n;
}

std::vector<std::pair<int, int>> hungarian(const std::vector<std::vector<double>>& cost) {
    const int rows = static_cast<int>(cost.size());
    if (rows == 0) return {};
    const int cols = static_cast<int>(cost[0].size());
    if (cols == 0) return {};

    const bool transposed = rows > cols;
    const int n = transposed ? cols : rows;
    const int m = transposed ? rows : cols;
    auto at = [&](int i, int j) { return transposed ? cost[j][i] : cost[i][j]; };

    const double kInf = 1e300;
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<int> p(m + 1, 0), way(m + 1, 0);

    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(m + 1, kInf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = kInf;
            int j1 = 0;
            for (int j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = at(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }

    std::vector<std::pair<int, int>> result;
    result.reserve(n);
    for (int j = 1; j <= m; ++j)
        if (p[j] != 0)
            result.emplace_back(transposed ? j - 1 : p[j] - 1, transposed ? p[j] - 1 : j - 1);
    std::sort(result.begin(), result.end());
    return result;
}

namespace {

struct GtTimeline {
    std::vector<char> matched;  // one slot per frame where the id is present
};

void check_same_range(const FrameSet& gt, const FrameSet& hyp) {
    if (gt.frame_count() != hyp.frame_count())
        throw FrameMismatch("ground truth has " + std::to_string(gt.frame_count()) +
                            " frames, hypothesis has " + std::to_string(hyp.frame_count()));
}

constexpr double kForbidden = 1e9;

}  // namespace

ClearMetrics clear_mot(const FrameSet& gt, const FrameSet& hyp, double match_iou) {
    check_same_range(gt, hyp);
    ClearMetrics out;
    out.gt_boxes = gt.total_entries();
    const int frames = gt.frame_count();

    std::map<int, int> correspondences;  // gt id -> hyp id, carried frame to frame
    std::map<int, int> last_match;       // gt id -> last hyp id ever matched
    std::map<int, GtTimeline> timelines;
    double iou_sum = 0.0;

    for (int f = 1; f <= frames; ++f) {
        const auto& g = gt.frame(f);
        const auto& h = hyp.frame(f);

        std::map<int, int> g_index, h_index;
        for (int i = 0; i < static_cast<int>(g.size()); ++i) g_index[g[i].id] = i;
        for (int i = 0; i < static_cast<int>(h.size()); ++i) h_index[h[i].id] = i;

        std::vector<char> g_used(g.size(), 0), h_used(h.size(), 0);
        std::vector<std::pair<int, int>> frame_matches;  // (gt idx, hyp idx)

        // Keep still-valid correspondences from the previous frame.
        for (const auto& [gid, hid] : correspondences) {
            const auto gi = g_index.find(gid);
            const auto hi = h_index.find(hid);
            if (gi == g_index.end() || hi == h_index.end()) continue;
            if (iou_box(g[gi->second].box, h[hi->second].box) >= match_iou) {
                frame_matches.emplace_back(gi->second, hi->second);
                g_used[gi->second] = 1;
                h_used[hi->second] = 1;
            }
        }

        // Hungarian over the remainder.
        std::vector<int> g_free, h_free;
        for (int i = 0; i < static_cast<int>(g.size()); ++i)
            if (!g_used[i]) g_free.push_back(i);
        for (int i = 0; i < static_cast<int>(h.size()); ++i)
            if (!h_used[i]) h_free.push_back(i);
        if (!g_free.empty() && !h_free.empty()) {
            std::vector<std::vector<double>> cost(g_free.size(),
                                                  std::vector<double>(h_free.size()));
            for (std::size_t a = 0; a < g_free.size(); ++a)
                for (std::size_t b = 0; b < h_free.size(); ++b) {
                    const double iou = iou_box(g[g_free[a]].box, h[h_free[b]].box);
                    cost[a][b] = iou >= match_iou ? 1.0 - iou : kForbidden;
                }
            for (const auto& [a, b] : hungarian(cost))
                if (cost[a][b] < kForbidden) {
                    frame_matches.emplace_back(g_free[a], h_free[b]);
                    g_used[g_free[a]] = 1;
                    h_used[h_free[b]] = 1;
                }
        }

        correspondences.clear();
        for (const auto& [gi, hi] : frame_matches) {
            const int gid = g[gi].id, hid = h[hi].id;
            correspondences[gid] = hid;
            const auto last = last_match.find(gid);
            if (last != last_match.end() && last->second != hid) ++out.ids;
            last_match[gid] = hid;
            iou_sum += iou_box(g[gi].box, h[hi].box);
            ++out.matches;
        }

        int matched_g = 0;
        for (char used : g_used) matched_g += used;
        out.fn += static_cast<int>(g.size()) - matched_g;
        int matched_h = 0;
        for (char used : h_used) matched_h += used;
        out.fp += static_cast<int>(h.size()) - matched_h;

        for (int i = 0; i < static_cast<int>(g.size()); ++i)
            timelines[g[i].id].matched.push_back(g_used[i]);
    }

    out.gt = static_cast<int>(timelines.size());
    for (const auto& [gid, tl] : timelines) {
        int covered = 0, segments = 0;
        bool in_segment = false;
        for (char m : tl.matched) {
            covered += m;
            if (m && !in_segment) ++segments;
            in_segment = m;
        }
        out.fm += std::max(0, segments - 1);
        const double coverage = static_cast<double>(covered) / tl.matched.size();
        if (coverage >= 0.8)
            ++out.mt;
        else if (coverage <= 0.2)
            ++out.ml;
        else
            ++out.pt;
    }

    const double total = static_cast<double>(out.gt_boxes);
    out.rcll = total > 0 ? 100.0 * out.matches / total : 0.0;
    out.prcn = out.matches + out.fp > 0 ? 100.0 * out.matches / (out.matches + out.fp) : 0.0;
    out.far = frames > 0 ? static_cast<double>(out.fp) / frames : 0.0;
    out.motp = out.matches > 0 ? 100.0 * iou_sum / out.matches : 0.0;
    out.mota = total > 0 ? 100.0 * (1.0 - (out.fp + out.fn + out.ids) / total) : 0.0;
    out.motal =
        total > 0 ? 100.0 * (1.0 - (out.fp + out.fn + std::log10(out.ids + 1.0)) / total) : 0.0;
    return out;
}

IdMetrics id_metrics(const FrameSet& gt, const FrameSet& hyp, double match_iou) {
    check_same_range(gt, hyp);

    // Per-identity presence and per-frame boxes.
    std::map<int, std::size_t> g_len, h_len;
    std::map<std::pair<int, int>, std::size_t> overlap;  // (gt id, hyp id) -> joint frames
    for (int f = 1; f <= gt.frame_count(); ++f) {
        for (const FrameEntry& e : gt.frame(f)) ++g_len[e.id];
        for (const FrameEntry& e : hyp.frame(f)) ++h_len[e.id];
        for (const FrameEntry& ge : gt.frame(f))
            for (const FrameEntry& he : hyp.frame(f))
                if (iou_box(ge.box, he.box) >= match_iou) ++overlap[{ge.id, he.id}];
    }

    std::vector<int> g_ids, h_ids;
    for (const auto& [id, len] : g_len) g_ids.push_back(id);
    for (const auto& [id, len] : h_len) h_ids.push_back(id);
    const std::size_t ng = g_ids.size(), nh = h_ids.size();
    const std::size_t total_gt = gt.total_entries(), total_hyp = hyp.total_entries();

    IdMetrics out;
    if (ng + nh > 0) {
        // Square matrix padded with per-identity dummies (all-FN / all-FP).
        const std::size_t dim = ng + nh;
        const double big = static_cast<double>(total_gt + total_hyp + 1);
        std::vector<std::vector<double>> cost(dim, std::vector<double>(dim, 0.0));
        for (std::size_t r = 0; r < dim; ++r)
            for (std::size_t c = 0; c < dim; ++c) {
                if (r < ng && c < nh) {
                    const auto it = overlap.find({g_ids[r], h_ids[c]});
                    const std::size_t joint = it == overlap.end() ? 0 : it->second;
                    cost[r][c] = static_cast<double>(g_len[g_ids[r]] + h_len[h_ids[c]]) -
                                 2.0 * static_cast<double>(joint);
                } else if (r < ng) {
                    cost[r][c] = (c - nh == r) ? static_cast<double>(g_len[g_ids[r]]) : big;
                } else if (c < nh) {
                    cost[r][c] = (r - ng == c) ? static_cast<double>(h_len[h_ids[c]]) : big;
                }
            }
        for (const auto& [r, c] : hungarian(cost)) {
            if (static_cast<std::size_t>(r) < ng && static_cast<std::size_t>(c) < nh) {
                const auto it = overlap.find({g_ids[r], h_ids[c]});
                if (it != overlap.end()) out.idtp += it->second;
            }
        }
    }

    out.idfn = total_gt - out.idtp;
    out.idfp = total_hyp - out.idtp;
    out.idp = out.idtp + out.idfp > 0
                  ? 100.0 * static_cast<double>(out.idtp) / (out.idtp + out.idfp)
                  : 0.0;
    out.idr = out.idtp + out.idfn > 0
                  ? 100.0 * static_cast<double>(out.idtp) / (out.idtp + out.idfn)
                  : 0.0;
    out.idf1 = total_gt + total_hyp > 0
                   ? 100.0 * 2.0 * static_cast<double>(out.idtp) / (total_gt + total_hyp)
                   : 0.0;
    return out;
}

MotScore evaluate(const FrameSet& gt, const FrameSet& hyp, double match_iou) {
    const ClearMetrics c = clear_mot(gt, hyp, match_iou);
    const IdMetrics id = id_metrics(gt, hyp, match_iou);
    MotScore s;
    s.idf1 = id.idf1;
    s.idp = id.idp;
    s.idr = id.idr;
    s.rcll = c.rcll;
    s.prcn = c.prcn;
    s.far = c.far;
    s.gt = c.gt;
    s.mt = c.mt;
    s.pt = c.pt;
    s.ml = c.ml;
    s.fp = c.fp;
    s.fn = c.fn;
    s.ids = c.ids;
    s.fm = c.fm;
    s.mota = c.mota;
    s.motp = c.motp;
    s.motal = c.motal;
    return s;
}

FrameSet parse_mot15(std::istream& in) {
    FrameSet fs;
    std::string line;
    std::size_t line_no = 0;
    std::map<std::pair<int, int>, std::size_t> seen;  // (frame, id) -> first line
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view sv = trim(line);
        if (sv.empty()) continue;

        const auto fields = split_csv(sv);
        if (fields.size() != 10)
            throw MalformedLine(line_no, "expected 10 comma-separated fields, got " +
                                             std::to_string(fields.size()));

        const auto frame = parse_int_field(fields[0]);
        const auto id = parse_int_field(fields[1]);
        if (!frame || *frame < 1) throw MalformedLine(line_no, "frame must be an integer >= 1");
        if (!id) throw MalformedLine(line_no, "id must be an integer");

        double nums[8];
        static const char* names[8] = {"bb_left", "bb_top",  "bb_width", "bb_height",
                                       "conf",    "x",      "y",        "z"};
        for (int i = 0; i < 8; ++i) {
            const auto v = parse_double_field(fields[i + 2]);
            if (!v) throw MalformedLine(line_no, std::string(names[i]) + " is not a number");
            nums[i] = *v;
        }
        for (int i = 0; i < 4; ++i)
            if (!std::isfinite(nums[i]))
                throw MalformedLine(line_no, std::string(names[i]) + " must be finite");
        if (nums[2] <= 0.0 || nums[3] <= 0.0)
            throw NonPositiveSize(line_no, "bb_width and bb_height must be positive");

        const int frame_i = static_cast<int>(*frame);
        const int id_i = static_cast<int>(*id);
        if (id_i != -1 && !seen.emplace(std::make_pair(frame_i, id_i), line_no).second)
            throw MalformedLine(line_no, "duplicate id " + std::to_string(id_i) +
                                             " in frame " + std::to_string(frame_i));

        fs.add(frame_i,
               FrameEntry(id_i, BBox(nums[0], nums[1], nums[0] + nums[2], nums[1] + nums[3]),
                          nums[4]));
    }
    return fs;
}

void write_mot15(const FrameSet& fs, std::ostream& out) {
    for (int f = 1; f <= fs.frame_count(); ++f) {
        for (const FrameEntry& e : fs.frame(f)) {
            out << f << ',' << e.id << ',' << format_double(e.box.x_min) << ','
                << format_double(e.box.y_min) << ',' << format_double(e.box.width()) << ','
                << format_double(e.box.height()) << ',' << format_double(e.conf)
                << ",-1,-1,-1\n";
        }
    }
}

FrameSet parse_mot15_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingInput("cannot open " + path);
    return parse_mot15(in);
}

void write_mot15_file(const FrameSet& fs, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw MissingInput("cannot open " + path + " for writing");
    write_mot15(fs, out);
    if (!out.flush()) throw MissingInput("failed writing " + path);
}

std::string format_score_table(const MotScore& s) {
    const char* headers[17] = {"IDF1", "IDP", "IDR", "Rcll", "Prcn", "FAR",  "GT", "MT", "PT",
                               "ML",   "FP",  "FN",  "IDs",  "FM",   "MOTA", "MOTP", "MOTAL"};
    char buf[32];
    std::vector<std::string> values;
    auto pct = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.1f", v);
        values.emplace_back(buf);
    };
    auto cnt = [&](int v) { values.emplace_back(std::to_string(v)); };
    pct(s.idf1);
    pct(s.idp);
    pct(s.idr);
    pct(s.rcll);
    pct(s.prcn);
    pct(s.far);
    cnt(s.gt);
    cnt(s.mt);
    cnt(s.pt);
    cnt(s.ml);
    cnt(s.fp);
    cnt(s.fn);
    cnt(s.ids);
    cnt(s.fm);
    pct(s.mota);
    pct(s.motp);
    pct(s.motal);

    std::ostringstream head, row;
    for (int i = 0; i < 17; ++i) {
        const std::size_t w = std::max(std::string(headers[i]).size(), values[i].size());
        head << (i ? "  " : "") << std::string(w - std::string(headers[i]).size(), ' ')
             << headers[i];
        row << (i ? "  " : "") << std::string(w - values[i].size(), ' ') << values[i];
    }
    return head.str() + "\n" + row.str() + "\n";
}

}  // namespace serialtrack
