#include "serialtrack/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "serialtrack/rng.hpp"

namespace serialtrack {

namespace {

constexpr double kTau = 6.283185307179586476925286766559;

// Stream channels, one per independent randomness source.
enum : std::uint64_t {
    kSizeChannel = 1,
    kPlaceChannel = 2,
    kJitterChannel = 3,
    kDeformChannel = 4,
    kDropoutChannel = 5,
    kFalsePosChannel = 6,
    kCorrChannel = 7,
    kCorruptChannel = 8,
};

struct SimObject {
    Point3D center;
    double radius_xy = 0;
    double radius_z = 0;
};

// Smooth low-frequency warp; gradients stay far below 1 so the map is
// invertible and a thin-plate spline can represent it well.
struct Deformation {
    double amp = 0;
    double wx1, wy1, wx2, wy2;
    double px1, py1, px2, py2;

    Deformation(double amplitude, double domain_w, double domain_h, RngStream& rng)
        : amp(amplitude),
          wx1(domain_w / 1.5), wy1(domain_h / 2.0), wx2(domain_w / 2.0), wy2(domain_h / 1.5),
          px1(rng.uniform(0, kTau)), py1(rng.uniform(0, kTau)), px2(rng.uniform(0, kTau)),
          py2(rng.uniform(0, kTau)) {}

    Point2D displacement(Point2D p) const {
        if (amp == 0.0) return {0, 0};
        return {amp * std::sin(kTau * p.x / wx1 + px1) * std::cos(kTau * p.y / wy1 + py1),
                amp * std::cos(kTau * p.x / wx2 + px2) * std::sin(kTau * p.y / wy2 + py2)};
    }

    Point2D apply(Point2D p) const { return p + displacement(p); }

    Point2D invert(Point2D q) const {
        Point2D x = q;
        for (int i = 0; i < 50; ++i) {
            const Point2D d = displacement(x);
            const Point2D next{q.x - d.x, q.y - d.y};
            if (std::abs(next.x - x.x) + std::abs(next.y - x.y) < 1e-12) return next;
            x = next;
        }
        return x;
    }
};

// World -> section-s coordinates: pose jitter then deformation.
struct SectionFrame {
    AffineTransform2D pose;
    AffineTransform2D pose_inverse;
    Deformation deform;

    SectionFrame(AffineTransform2D p, Deformation d)
        : pose(p), pose_inverse(invert_affine(p)), deform(std::move(d)) {}

    Point2D to_section(Point2D world) const { return deform.apply(pose(world)); }
    Point2D to_world(Point2D section) const { return pose_inverse(deform.invert(section)); }
};

AffineTransform2D jitter_pose(const SimConfig& cfg, RngStream& rng) {
    const double cx = cfg.domain_width / 2.0, cy = cfg.domain_height / 2.0;
    const double angle = rng.uniform(-cfg.rotation_jitter, cfg.rotation_jitter);
    const double scale = 1.0 + rng.uniform(-cfg.scale_jitter, cfg.scale_jitter);
    const double tx = rng.uniform(-cfg.translation_jitter, cfg.translation_jitter);
    const double ty = rng.uniform(-cfg.translation_jitter, cfg.translation_jitter);
    const AffineTransform2D about_center =
        AffineTransform2D::translation(cx, cy)
            .compose(AffineTransform2D::similarity(scale, angle, 0, 0))
            .compose(AffineTransform2D::translation(-cx, -cy));
    return AffineTransform2D::translation(tx, ty).compose(about_center);
}

std::vector<SimObject> place_objects(const SimConfig& cfg) {
    RngStream size_rng(cfg.seed, kSizeChannel);
    RngStream place_rng(cfg.seed, kPlaceChannel);
    const double depth = cfg.sections * cfg.section_thickness;

    std::vector<SimObject> objects;
    objects.reserve(cfg.objects);
    const long attempts_budget = 10000L * cfg.objects;
    long attempts = 0;
    for (int i = 0; i < cfg.objects; ++i) {
        // Clamp sizes into the configured band, never below the detectable
        // floor (an object thinner than that would produce empty tracks).
        const double floor = 2.0 * cfg.min_slice_radius + 4.0;
        const double lo = std::max(cfg.object_diameter_mean -
                                       cfg.diameter_clamp_sigmas * cfg.object_diameter_sigma,
                                   floor);
        const double hi = std::max(cfg.object_diameter_mean +
                                       cfg.diameter_clamp_sigmas * cfg.object_diameter_sigma,
                                   lo);
        const double diameter = std::clamp(
            size_rng.normal(cfg.object_diameter_mean, cfg.object_diameter_sigma), lo, hi);
        SimObject obj;
        obj.radius_xy = obj.radius_z = diameter / 2.0;

        const double margin = obj.radius_xy + cfg.translation_jitter + 10.0;
        bool placed = false;
        while (!placed) {
            if (++attempts > attempts_budget)
                throw InfeasiblePlacement("cannot place " + std::to_string(cfg.objects) +
                                          " non-overlapping objects in a " +
                                          std::to_string(cfg.domain_width) + "x" +
                                          std::to_string(cfg.domain_height) + " domain");
            obj.center.x = place_rng.uniform(margin, cfg.domain_width - margin);
            obj.center.y = place_rng.uniform(margin, cfg.domain_height - margin);
            obj.center.z = place_rng.uniform(0.0, depth);
            placed = true;
            for (const SimObject& other : objects) {
                const double dx = obj.center.x - other.center.x;
                const double dy = obj.center.y - other.center.y;
                const double min_dist = 1.15 * (obj.radius_xy + other.radius_xy);
                if (dx * dx + dy * dy < min_dist * min_dist) {
                    placed = false;
                    break;
                }
            }
        }
        objects.push_back(obj);
    }
    return objects;
}

// Exact residual of the pair map after its affine part, sampled on a grid
// over the target section's domain.
DisplacementField sample_true_field(const SectionFrame& src, const SectionFrame& dst,
                                    const AffineTransform2D& affine, const SimConfig& cfg) {
    const double pad = 100.0 + cfg.translation_jitter;
    const double spacing = 16.0;
    const GridSpec grid{{-pad, -pad}, spacing,
                        static_cast<int>((cfg.domain_width + 2 * pad) / spacing) + 2,
                        static_cast<int>((cfg.domain_height + 2 * pad) / spacing) + 2};
    const AffineTransform2D affine_inv = invert_affine(affine);
    const std::size_t n = static_cast<std::size_t>(grid.width) * grid.height;
    std::vector<double> dx(n), dy(n);
    for (int iy = 0; iy < grid.height; ++iy)
        for (int ix = 0; ix < grid.width; ++ix) {
            const Point2D q{grid.origin.x + grid.spacing * ix,
                            grid.origin.y + grid.spacing * iy};
            const Point2D p = affine_inv(q);                       // back to src space
            const Point2D truth = dst.to_section(src.to_world(p));  // exact pair map
            dx[iy * grid.width + ix] = truth.x - q.x;
            dy[iy * grid.width + ix] = truth.y - q.y;
        }
    return {grid.origin, grid.spacing, grid.width, grid.height, std::move(dx), std::move(dy)};
}

}  // namespace

void SimConfig::validate() const {
    if (sections < 1 || objects < 1)
        throw DegenerateConfiguration("sections and objects must be >= 1");
    if (dropout_rate < 0 || dropout_rate > 1 || false_positive_rate < 0 ||
        false_positive_rate > 1)
        throw DegenerateConfiguration("rates must lie in [0, 1]");
    if (object_diameter_mean <= 0 || section_thickness <= 0 || domain_width <= 0 ||
        domain_height <= 0 || min_slice_radius <= 0)
        throw DegenerateConfiguration("lengths must be positive");
    if (correspondences_per_pair < 8)
        throw DegenerateConfiguration("need at least 8 correspondences per pair");
    for (int m : missing_sections)
        if (m < 0 || m >= sections)
            throw DegenerateConfiguration("missing section " + std::to_string(m) +
                                          " outside the stack");
    for (const auto& [a, b] : failed_pairs) {
        if (b != a + 1)
            throw DegenerateConfiguration("failed pairs must be adjacent (t, t+1)");
        if (a < 0 || a > sections - 3)
            throw DegenerateConfiguration(
                "failed pair (" + std::to_string(a) + "," + std::to_string(b) +
                ") has no complete cycle; only pairs up to (T-3, T-2) can be flagged");
    }
}

std::optional<Circle> slice_ellipsoid(Point3D center, double radius_xy, double radius_z,
                                      double z) {
    if (radius_xy <= 0 || radius_z <= 0)
        throw DegenerateGeometry("ellipsoid radii must be positive");
    const double rel = (z - center.z) / radius_z;
    if (std::abs(rel) >= 1.0) return std::nullopt;
    const double r = radius_xy * std::sqrt(1.0 - rel * rel);
    if (r <= 0.0) return std::nullopt;
    return Circle({center.x, center.y}, r);
}

SimOutput generate(const SimConfig& cfg) {
    cfg.validate();
    SimOutput out;
    SimTruth& truth = out.truth;

    const std::vector<SimObject> objects = place_objects(cfg);
    for (const SimObject& o : objects)
        truth.objects.push_back({o.center, o.radius_xy, o.radius_z});

    std::vector<SectionFrame> frames;
    frames.reserve(cfg.sections);
    for (int s = 0; s < cfg.sections; ++s) {
        RngStream jitter_rng = RngStream::substream(cfg.seed, kJitterChannel, s);
        RngStream deform_rng = RngStream::substream(cfg.seed, kDeformChannel, s);
        frames.emplace_back(jitter_pose(cfg, jitter_rng),
                            Deformation(cfg.deformation_amplitude, cfg.domain_width,
                                        cfg.domain_height, deform_rng));
    }

    std::vector<char> missing(cfg.sections, 0);
    for (int m : cfg.missing_sections) {
        missing[m] = 1;
        truth.perturbation_log.push_back("section " + std::to_string(m) +
                                         ": all detections removed (missing tissue)");
    }

    // Ground-truth tracks and the clean detection copy.
    out.detections.resize(cfg.sections);
    for (int s = 0; s < cfg.sections; ++s) {
        if (missing[s]) continue;
        const double z = (s + 0.5) * cfg.section_thickness;
        for (std::size_t i = 0; i < objects.size(); ++i) {
            const auto slice =
                slice_ellipsoid(objects[i].center, objects[i].radius_xy, objects[i].radius_z, z);
            if (!slice || slice->radius < cfg.min_slice_radius) continue;

            const Point2D c = frames[s].to_section(slice->center);
            const double r = slice->radius * frames[s].pose.length_scale();
            Detection det(s, BBox(c.x - r, c.y - r, c.x + r, c.y + r), 1.0);
            det.track_id = static_cast<int>(i) + 1;
            truth.gt_tracks[static_cast<int>(i) + 1].push_back(det);
            out.detections[s].push_back(det);
        }
    }
    for (auto& dets : out.detections)
        for (Detection& d : dets) d.track_id.reset();  // ids live only in the truth

    // Detection noise: dropout on the copy, then clutter.
    if (cfg.dropout_rate > 0.0) {
        for (int s = 0; s < cfg.sections; ++s) {
            RngStream rng = RngStream::substream(cfg.seed, kDropoutChannel, s);
            std::vector<Detection> kept;
            for (std::size_t i = 0; i < out.detections[s].size(); ++i) {
                if (rng.next_double() < cfg.dropout_rate) {
                    truth.perturbation_log.push_back("section " + std::to_string(s) +
                                                     ": dropped detection " +
                                                     std::to_string(i));
                } else {
                    kept.push_back(out.detections[s][i]);
                }
            }
            out.detections[s] = std::move(kept);
        }
    }
    if (cfg.false_positive_rate > 0.0) {
        for (int s = 0; s < cfg.sections; ++s) {
            if (missing[s]) continue;
            RngStream rng = RngStream::substream(cfg.seed, kFalsePosChannel, s);
            const std::size_t base = out.detections[s].size();
            for (std::size_t i = 0; i < base; ++i) {
                if (rng.next_double() >= cfg.false_positive_rate) continue;
                const double r = rng.uniform(cfg.min_slice_radius, cfg.object_diameter_mean / 2);
                const double x = rng.uniform(r, cfg.domain_width - r);
                const double y = rng.uniform(r, cfg.domain_height - r);
                out.detections[s].emplace_back(s, BBox(x - r, y - r, x + r, y + r), 0.5);
                truth.perturbation_log.push_back("section " + std::to_string(s) +
                                                 ": false positive at (" + std::to_string(x) +
                                                 ", " + std::to_string(y) + ")");
            }
        }
    }

    // Registration failures: corrupt the one registration unique to the
    // pair's cycle so the flag lands exactly where configured. Cycle t owns
    // its interleave t->t+2 outright; for t = 0 the adjacent 0->1 is also
    // unique (there is no cycle -1), and corrupting it leaves the interleave
    // usable for skip-ahead tracking.
    std::map<std::pair<int, int>, AffineTransform2D> corruption;
    for (const auto& pair : cfg.failed_pairs) {
        const std::pair<int, int> target =
            pair.first == 0 ? std::make_pair(0, 1)
                            : std::make_pair(pair.first, pair.first + 2);
        RngStream rng = RngStream::substream(cfg.seed, kCorruptChannel, pair.first);
        const double angle = rng.uniform(0.0, kTau);
        const double magnitude = rng.uniform(400.0, 700.0);
        const double spin = rng.uniform(-0.3, 0.3);
        const AffineTransform2D offset =
            AffineTransform2D::translation(magnitude * std::cos(angle),
                                           magnitude * std::sin(angle))
                .compose(AffineTransform2D::rotation(spin));
        corruption[target] = offset;
        truth.corrupted_registrations[pair] = target;
        truth.perturbation_log.push_back(
            "pair (" + std::to_string(pair.first) + "," + std::to_string(pair.second) +
            "): corrupted registration " + std::to_string(target.first) + "->" +
            std::to_string(target.second) + " by " + std::to_string(magnitude) + " units");
    }

    // Correspondences and exact transforms for every adjacent and interleave
    // pair. Keypoints are shared world locations seen from both sections.
    for (int s = 0; s < cfg.sections; ++s) {
        for (int delta : {1, 2}) {
            const int t = s + delta;
            if (t >= cfg.sections) continue;
            const std::pair<int, int> key{s, t};

            RngStream rng = RngStream::substream(cfg.seed, kCorrChannel,
                                                 static_cast<std::uint64_t>(s) * 4 + delta);
            std::vector<Correspondence> corr;
            corr.reserve(cfg.correspondences_per_pair);
            const auto corrupt = corruption.find(key);
            for (int k = 0; k < cfg.correspondences_per_pair; ++k) {
                const Point2D w{rng.uniform(0.0, cfg.domain_width),
                                rng.uniform(0.0, cfg.domain_height)};
                Point2D dst = frames[t].to_section(w);
                if (corrupt != corruption.end()) dst = corrupt->second(dst);
                corr.push_back({frames[s].to_section(w), dst, 1.0});
            }
            truth.correspondences[key] = std::move(corr);

            const AffineTransform2D affine =
                frames[t].pose.compose(invert_affine(frames[s].pose));
            std::optional<DisplacementField> field;
            if (cfg.deformation_amplitude > 0.0)
                field = sample_true_field(frames[s], frames[t], affine, cfg);
            truth.true_transforms.emplace(
                key, build_pair_transform(s, t, affine, std::move(field), 0.5, 30));
        }
    }

    return out;
}

}  // namespace serialtrack
