#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "serialtrack/association.hpp"
#include "serialtrack/registration.hpp"

namespace serialtrack {

struct Point3D {
    double x = 0, y = 0, z = 0;
};

struct SimConfig {
    int sections = 12;
    int objects = 50;
    double object_diameter_mean = 87.0;
    double object_diameter_sigma = 17.0;
    double diameter_clamp_sigmas = 2.0;
    double section_thickness = 8.0;
    double domain_width = 2000.0;
    double domain_height = 2000.0;

    // Per-section pose jitter, uniform in +-range (scale in 1 +- range).
    double rotation_jitter = 0.02;
    double translation_jitter = 15.0;
    double scale_jitter = 0.01;
    double deformation_amplitude = 0.0;

    double dropout_rate = 0.0;
    double false_positive_rate = 0.0;
    std::vector<int> missing_sections;                // all detections removed
    std::vector<std::pair<int, int>> failed_pairs;    // adjacent pairs (t, t+1)

    std::uint64_t seed = 1;

    // Cross-sections thinner than this are below the detector floor and are
    // excluded from ground truth as well.
    double min_slice_radius = 15.0;
    int correspondences_per_pair = 128;

    void validate() const;  // throws on out-of-range values
};

struct SimObjectInfo {
    Point3D center;
    double radius_xy = 0;
    double radius_z = 0;
};

struct SimTruth {
    std::vector<SimObjectInfo> objects;  // track id = index + 1
    TrackSet gt_tracks;
    // Exact transforms per (source, target); field part present only when
    // deformation is enabled (sampled onto a grid).
    std::map<std::pair<int, int>, PairTransform> true_transforms;
    std::map<std::pair<int, int>, std::vector<Correspondence>> correspondences;
    // Pairs whose correspondence set was corrupted, keyed by the adjacent
    // pair they emulate; value is the (source, target) file actually touched.
    std::map<std::pair<int, int>, std::pair<int, int>> corrupted_registrations;
    std::vector<std::string> perturbation_log;
};

struct SimOutput {
    std::vector<std::vector<Detection>> detections;  // per section, noise applied
    SimTruth truth;
};

// Cross-section of an axially-symmetric ellipsoid with the plane at z;
// nothing at or beyond the pole (tangent excluded).
std::optional<Circle> slice_ellipsoid(Point3D center, double radius_xy, double radius_z,
                                      double z);

SimOutput generate(const SimConfig& cfg);

}  // namespace serialtrack
