#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "serialtrack/transform.hpp"

namespace serialtrack {

struct Correspondence {
    Point2D p_source;
    Point2D p_target;
    double weight = 1.0;
};

enum class AffineModel { full, similarity };

struct RansacParams {
    int max_iterations = 2000;
    double inlier_threshold = 10.0;
    double min_inlier_fraction = 0.3;
    std::uint64_t seed = 0;
    AffineModel model = AffineModel::full;
};

struct RansacResult {
    AffineTransform2D transform;
    std::vector<bool> inlier_mask;
    int inlier_count = 0;
};

// Weighted least-squares affine carrying source space into target space.
// Throws DegenerateConfiguration for < 3 correspondences or colinear sources.
AffineTransform2D fit_affine_lsq(const std::vector<Correspondence>& corr,
                                 AffineModel model = AffineModel::full);

// Robust variant: best-consensus model refit on its inliers; deterministic
// for a fixed seed. Throws NoConsensus when the best inlier fraction falls
// below params.min_inlier_fraction.
RansacResult fit_affine_ransac(const std::vector<Correspondence>& corr,
                               const RansacParams& params);

// Thin-plate-spline interpolation of the residuals (target - affine(source)),
// sampled onto the grid. lambda = 0 interpolates the control points exactly;
// larger values trade data fidelity for smoothness.
DisplacementField fit_tps(const std::vector<Correspondence>& corr,
                          const AffineTransform2D& affine, double lambda,
                          const GridSpec& grid);

PairTransform build_pair_transform(int source, int target, const AffineTransform2D& affine,
                                   std::optional<DisplacementField> field = std::nullopt,
                                   double invert_tol = 0.01, int invert_max_iter = 20);

struct RegistrationError {
    double median = 0.0;
    double mean = 0.0;
    std::vector<double> distances;
};

// Euclidean distance between mapped source landmarks and their targets.
RegistrationError registration_error(const PairTransform& t,
                                     const std::vector<Correspondence>& landmarks);

// Lower-middle element for even counts, so repeated runs agree bit-for-bit.
double median_lower(std::vector<double> values);

}  // namespace serialtrack
