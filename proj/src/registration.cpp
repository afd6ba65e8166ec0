#include "serialtrack/registration.hpp"

#include <omp.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "serialtrack/kernels.hpp"
#include "serialtrack/rng.hpp"

namespace serialtrack {

namespace {

void require_fittable(const std::vector<Correspondence>& corr) {
    if (corr.size() < 3)
        throw DegenerateConfiguration("affine fit needs at least 3 correspondences, got " +
                                      std::to_string(corr.size()));
}

// Colinearity check on the weighted source cloud: the smaller eigenvalue of
// the 2x2 scatter matrix vanishes when all points lie on one line.
bool sources_colinear(const std::vector<Correspondence>& corr) {
    double wsum = 0.0, mx = 0.0, my = 0.0;
    for (const Correspondence& c : corr) {
        wsum += c.weight;
        mx += c.weight * c.p_source.x;
        my += c.weight * c.p_source.y;
    }
    if (wsum <= 0.0) return true;
    mx /= wsum;
    my /= wsum;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const Correspondence& c : corr) {
        const double dx = c.p_source.x - mx, dy = c.p_source.y - my;
        sxx += c.weight * dx * dx;
        sxy += c.weight * dx * dy;
        syy += c.weight * dy * dy;
    }
    sxx /= wsum;
    sxy /= wsum;
    syy /= wsum;
    const double tr = sxx + syy;
    const double det = sxx * syy - sxy * sxy;
    const double disc = std::sqrt(std::max(tr * tr / 4.0 - det, 0.0));
    const double lmin = tr / 2.0 - disc;
    const double lmax = tr / 2.0 + disc;
    return lmax <= 0.0 || lmin <= 1e-12 * lmax;
}

AffineTransform2D fit_full_affine(const std::vector<Correspondence>& corr) {
    // Two independent 3-unknown problems sharing the weighted Gram matrix.
    Eigen::Matrix3d g = Eigen::Matrix3d::Zero();
    Eigen::Vector3d bx = Eigen::Vector3d::Zero();
    Eigen::Vector3d by = Eigen::Vector3d::Zero();
    for (const Correspondence& c : corr) {
        const Eigen::Vector3d v(c.p_source.x, c.p_source.y, 1.0);
        g += c.weight * v * v.transpose();
        bx += c.weight * c.p_target.x * v;
        by += c.weight * c.p_target.y * v;
    }
    const Eigen::FullPivLU<Eigen::Matrix3d> lu(g);
    if (!lu.isInvertible())
        throw DegenerateConfiguration("correspondences are colinear; affine fit is ambiguous");
    const Eigen::Vector3d rx = lu.solve(bx);
    const Eigen::Vector3d ry = lu.solve(by);
    return {rx[0], rx[1], rx[2], ry[0], ry[1], ry[2]};
}

AffineTransform2D fit_similarity(const std::vector<Correspondence>& corr) {
    // Closed-form weighted similarity (scale+rotation+translation).
    double wsum = 0.0;
    Point2D ms{0, 0}, mt{0, 0};
    for (const Correspondence& c : corr) {
        wsum += c.weight;
        ms.x += c.weight * c.p_source.x;
        ms.y += c.weight * c.p_source.y;
        mt.x += c.weight * c.p_target.x;
        mt.y += c.weight * c.p_target.y;
    }
    ms.x /= wsum;
    ms.y /= wsum;
    mt.x /= wsum;
    mt.y /= wsum;

    double sxx = 0.0, a = 0.0, b = 0.0;
    for (const Correspondence& c : corr) {
        const double ux = c.p_source.x - ms.x, uy = c.p_source.y - ms.y;
        const double vx = c.p_target.x - mt.x, vy = c.p_target.y - mt.y;
        sxx += c.weight * (ux * ux + uy * uy);
        a += c.weight * (ux * vx + uy * vy);
        b += c.weight * (ux * vy - uy * vx);
    }
    if (sxx <= 0.0) throw DegenerateConfiguration("similarity fit needs spread-out sources");
    const double ca = a / sxx, sb = b / sxx;
    return {ca, -sb, mt.x - ca * ms.x + sb * ms.y,
            sb, ca,  mt.y - sb * ms.x - ca * ms.y};
}

double residual_sq(const AffineTransform2D& t, const Correspondence& c) {
    const Point2D p = t(c.p_source);
    const double dx = p.x - c.p_target.x, dy = p.y - c.p_target.y;
    return dx * dx + dy * dy;
}

// Exact affine through a minimal 3-point sample; empty on degenerate samples.
std::optional<AffineTransform2D> fit_minimal(const std::vector<Correspondence>& corr, int i,
                                             int j, int k, AffineModel model) {
    const std::vector<Correspondence> sample = {corr[i], corr[j], corr[k]};
    if (sources_colinear(sample)) return std::nullopt;
    try {
        return model == AffineModel::full ? fit_full_affine(sample) : fit_similarity(sample);
    } catch (const DegenerateConfiguration&) {
        return std::nullopt;
    }
}

}  // namespace

double median_lower(std::vector<double> values) {
    if (values.empty()) throw DegenerateConfiguration("median of empty set");
    const std::size_t mid = (values.size() - 1) / 2;
    std::nth_element(values.begin(), values.begin() + mid, values.end());
    return values[mid];
}

AffineTransform2D fit_affine_lsq(const std::vector<Correspondence>& corr, AffineModel model) {
    require_fittable(corr);
    if (sources_colinear(corr))
        throw DegenerateConfiguration("correspondences are colinear; affine fit is ambiguous");
    return model == AffineModel::full ? fit_full_affine(corr) : fit_similarity(corr);
}

RansacResult fit_affine_ransac(const std::vector<Correspondence>& corr,
                               const RansacParams& params) {
    require_fittable(corr);
    const int n = static_cast<int>(corr.size());
    const double thr_sq = params.inlier_threshold * params.inlier_threshold;

    // Independent per-iteration streams; scores land in a plain array so the
    // winner selection below is identical no matter how iterations are
    // scheduled across threads.
    std::vector<int> counts(params.max_iterations, -1);
#pragma omp parallel for schedule(static)
    for (int iter = 0; iter < params.max_iterations; ++iter) {
        RngStream rng = RngStream::substream(params.seed, 0x52414e53ULL, iter);
        const int i = static_cast<int>(rng.next_below(n));
        int j = static_cast<int>(rng.next_below(n));
        int k = static_cast<int>(rng.next_below(n));
        if (i == j || j == k || i == k) continue;
        const auto model = fit_minimal(corr, i, j, k, params.model);
        if (!model) continue;
        int count = 0;
        for (const Correspondence& c : corr)
            if (residual_sq(*model, c) <= thr_sq) ++count;
        counts[iter] = count;
    }

    int best_iter = -1, best_count = -1;
    for (int iter = 0; iter < params.max_iterations; ++iter)
        if (counts[iter] > best_count) {
            best_count = counts[iter];
            best_iter = iter;
        }

    const double best_fraction = best_count <= 0 ? 0.0 : static_cast<double>(best_count) / n;
    if (best_iter < 0 || best_fraction < params.min_inlier_fraction)
        throw NoConsensus("RANSAC consensus " + std::to_string(best_fraction) +
                              " below required fraction " +
                              std::to_string(params.min_inlier_fraction),
                          best_fraction);

    // Re-derive the winning minimal model, collect its inliers, refit.
    RngStream rng = RngStream::substream(params.seed, 0x52414e53ULL, best_iter);
    const int i = static_cast<int>(rng.next_below(n));
    const int j = static_cast<int>(rng.next_below(n));
    const int k = static_cast<int>(rng.next_below(n));
    const auto minimal = fit_minimal(corr, i, j, k, params.model);

    std::vector<Correspondence> consensus;
    for (const Correspondence& c : corr)
        if (residual_sq(*minimal, c) <= thr_sq) consensus.push_back(c);

    const AffineTransform2D refit = fit_affine_lsq(consensus, params.model);

    RansacResult result;
    result.transform = refit;
    result.inlier_mask.resize(corr.size());
    for (std::size_t m = 0; m < corr.size(); ++m) {
        const bool in = residual_sq(refit, corr[m]) <= thr_sq;
        result.inlier_mask[m] = in;
        if (in) ++result.inlier_count;
    }
    if (static_cast<double>(result.inlier_count) / n < params.min_inlier_fraction)
        throw NoConsensus("refit lost consensus", static_cast<double>(result.inlier_count) / n);
    return result;
}

DisplacementField fit_tps(const std::vector<Correspondence>& corr,
                          const AffineTransform2D& affine, double lambda,
                          const GridSpec& grid) {
    require_fittable(corr);
    if (lambda < 0.0) throw DegenerateConfiguration("tps lambda must be >= 0");
    if (sources_colinear(corr))
        throw DegenerateConfiguration("tps control points are colinear");

    // Control points in the target space, values = leftover residuals.
    const std::size_t n = corr.size();
    std::vector<Point2D> centers(n);
    Eigen::VectorXd rx(n + 3), ry(n + 3);
    for (std::size_t i = 0; i < n; ++i) {
        centers[i] = affine(corr[i].p_source);
        rx[i] = corr[i].p_target.x - centers[i].x;
        ry[i] = corr[i].p_target.y - centers[i].y;
    }
    rx.tail<3>().setZero();
    ry.tail<3>().setZero();

    // The spline is solved and evaluated in a normalized frame (centered,
    // RMS radius 1); raw section coordinates make the kernel matrix too
    // badly scaled for a reliable solve.
    double mx = 0.0, my = 0.0;
    for (const Point2D& c : centers) {
        mx += c.x;
        my += c.y;
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double rms = 0.0;
    for (const Point2D& c : centers)
        rms += (c.x - mx) * (c.x - mx) + (c.y - my) * (c.y - my);
    rms = std::sqrt(rms / static_cast<double>(n));
    if (rms <= 0.0) throw DegenerateConfiguration("tps control points coincide");

    std::vector<Point2D> scaled(n);
    for (std::size_t i = 0; i < n; ++i)
        scaled[i] = {(centers[i].x - mx) / rms, (centers[i].y - my) / rms};

    Eigen::MatrixXd system(n + 3, n + 3);
    system.setZero();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            const double ddx = scaled[i].x - scaled[j].x;
            const double ddy = scaled[i].y - scaled[j].y;
            const double u = kernels::tps_kernel(ddx * ddx + ddy * ddy);
            system(i, j) = u;
            system(j, i) = u;
        }
        system(i, i) += lambda;
        system(i, n) = system(n, i) = 1.0;
        system(i, n + 1) = system(n + 1, i) = scaled[i].x;
        system(i, n + 2) = system(n + 2, i) = scaled[i].y;
    }

    const Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
    const Eigen::VectorXd wx = lu.solve(rx);
    const Eigen::VectorXd wy = lu.solve(ry);
    const double value_scale = 1.0 + std::max(rx.cwiseAbs().maxCoeff(), ry.cwiseAbs().maxCoeff());
    if (!wx.allFinite() || !wy.allFinite() ||
        (system * wx - rx).cwiseAbs().maxCoeff() > 1e-6 * value_scale ||
        (system * wy - ry).cwiseAbs().maxCoeff() > 1e-6 * value_scale)
        throw IllConditioned("tps solve did not reach working precision");

    const std::vector<double> weights_x(wx.data(), wx.data() + n + 3);
    const std::vector<double> weights_y(wy.data(), wy.data() + n + 3);
    const GridSpec scaled_grid{{(grid.origin.x - mx) / rms, (grid.origin.y - my) / rms},
                               grid.spacing / rms, grid.width, grid.height};
    auto [dx, dy] = kernels::tps_grid_sample_parallel(scaled, weights_x, weights_y, scaled_grid);
    return {grid.origin, grid.spacing, grid.width, grid.height, std::move(dx), std::move(dy)};
}

PairTransform build_pair_transform(int source, int target, const AffineTransform2D& affine,
                                   std::optional<DisplacementField> field, double invert_tol,
                                   int invert_max_iter) {
    const int delta = target - source;
    if (delta != 1 && delta != 2)
        throw InvalidPair("pair (" + std::to_string(source) + "," + std::to_string(target) +
                          "): only adjacent (+1) and interleave (+2) pairs exist");
    return {source, target, affine, std::move(field), invert_tol, invert_max_iter};
}

RegistrationError registration_error(const PairTransform& t,
                                     const std::vector<Correspondence>& landmarks) {
    if (landmarks.empty())
        throw DegenerateConfiguration("registration error needs at least one landmark");
    RegistrationError err;
    err.distances.reserve(landmarks.size());
    double sum = 0.0;
    for (const Correspondence& c : landmarks) {
        const Point2D mapped = t.map_point(c.p_source, MapDirection::forward);
        const double d = distance(mapped, c.p_target);
        err.distances.push_back(d);
        sum += d;
    }
    err.mean = sum / static_cast<double>(landmarks.size());
    err.median = median_lower(err.distances);
    return err;
}

}  // namespace serialtrack
