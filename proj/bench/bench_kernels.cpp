// Times every data-parallel kernel against its serial reference and checks
// that both produce identical results. Sizes are chosen so each serial pass
// takes a noticeable fraction of a second on one core.

#include <omp.h>

#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "serialtrack/kernels.hpp"
#include "serialtrack/rng.hpp"

using namespace serialtrack;

namespace {

struct Result {
    double serial_s = 0;
    double parallel_s = 0;
    bool identical = false;
};

double time_once(const std::function<void()>& fn) {
    const double start = omp_get_wtime();
    fn();
    return omp_get_wtime() - start;
}

std::vector<BBox> random_boxes(int count, RngStream& rng) {
    std::vector<BBox> boxes;
    boxes.reserve(count);
    for (int i = 0; i < count; ++i) {
        const double x = rng.uniform(0, 4000), y = rng.uniform(0, 4000);
        const double w = rng.uniform(40, 120), h = rng.uniform(40, 120);
        boxes.push_back({x, y, x + w, y + h});
    }
    return boxes;
}

void report(const char* name, const Result& r) {
    std::printf("%-22s %10.3f s %10.3f s %8.2fx   %s\n", name, r.serial_s, r.parallel_s,
                r.serial_s / r.parallel_s, r.identical ? "results match" : "MISMATCH");
}

}  // namespace

int main() {
    std::printf("threads: %d\n", omp_get_max_threads());
    std::printf("%-22s %12s %12s %9s\n", "kernel", "serial", "parallel", "speedup");

    RngStream rng(2025);

    {  // pair affinity, 700 x 700 boxes
        const std::vector<BBox> early = random_boxes(700, rng);
        const std::vector<BBox> late = random_boxes(700, rng);
        const PairTransform tr(0, 1, AffineTransform2D::similarity(1.02, 0.1, 15, -8));
        std::vector<double> a, b;
        Result r;
        r.serial_s = time_once([&] { a = kernels::affinity_boxes_serial(early, late, tr); });
        r.parallel_s =
            time_once([&] { b = kernels::affinity_boxes_parallel(early, late, tr); });
        r.identical = a == b;
        report("affinity (boxes)", r);
    }

    {  // cycle consistency, 60k boxes
        const std::vector<BBox> boxes = random_boxes(60000, rng);
        const PairTransform f_t(0, 1, AffineTransform2D::similarity(1.01, 0.04, 3, 2));
        const PairTransform f_t1(1, 2, AffineTransform2D::similarity(0.99, -0.03, -2, 5));
        const PairTransform b_t(0, 2, AffineTransform2D::similarity(1.0, 0.01, 1, 7));
        std::vector<double> a, b;
        Result r;
        r.serial_s =
            time_once([&] { a = kernels::cycle_box_ious_serial(boxes, f_t, f_t1, b_t); });
        r.parallel_s =
            time_once([&] { b = kernels::cycle_box_ious_parallel(boxes, f_t, f_t1, b_t); });
        r.identical = a == b;
        report("cycle iou", r);
    }

    {  // thin-plate sampling, 400 centers onto a 512 x 512 grid
        std::vector<Point2D> centers;
        std::vector<double> wx, wy;
        for (int i = 0; i < 400; ++i) {
            centers.push_back({rng.uniform(-2, 2), rng.uniform(-2, 2)});
            wx.push_back(rng.uniform(-0.2, 0.2));
            wy.push_back(rng.uniform(-0.2, 0.2));
        }
        for (int i = 0; i < 3; ++i) {
            wx.push_back(rng.uniform(-1, 1));
            wy.push_back(rng.uniform(-1, 1));
        }
        const GridSpec grid{{-2.5, -2.5}, 0.01, 512, 512};
        std::pair<std::vector<double>, std::vector<double>> a, b;
        Result r;
        r.serial_s =
            time_once([&] { a = kernels::tps_grid_sample_serial(centers, wx, wy, grid); });
        r.parallel_s =
            time_once([&] { b = kernels::tps_grid_sample_parallel(centers, wx, wy, grid); });
        r.identical = a == b;
        report("tps grid sample", r);
    }

    {  // field inversion, 768 x 768 grid
        const int n = 768;
        std::vector<double> dx(static_cast<std::size_t>(n) * n), dy(dx.size());
        for (int iy = 0; iy < n; ++iy)
            for (int ix = 0; ix < n; ++ix) {
                const double u = 6.283185307179586 * ix / (n - 1);
                const double v = 6.283185307179586 * iy / (n - 1);
                dx[static_cast<std::size_t>(iy) * n + ix] = 2.0 * std::sin(u) * std::sin(v);
                dy[static_cast<std::size_t>(iy) * n + ix] = 2.0 * std::sin(2 * u) * std::sin(v);
            }
        const DisplacementField field({0, 0}, 2.0, n, n, std::move(dx), std::move(dy));
        Result r;
        bool ok_a = true, ok_b = true;
        std::vector<double> a, b;
        r.serial_s = time_once([&] {
            try {
                a = kernels::invert_field_serial(field, 0.05, 30).dx();
            } catch (...) {
                ok_a = false;
            }
        });
        r.parallel_s = time_once([&] {
            try {
                b = kernels::invert_field_parallel(field, 0.05, 30).dx();
            } catch (...) {
                ok_b = false;
            }
        });
        r.identical = ok_a == ok_b && a == b;
        report("field inversion", r);
    }

    {  // threshold calibration trials, 3000 boxes x 200 trials
        const std::vector<BBox> boxes = random_boxes(3000, rng);
        std::vector<double> a, b;
        Result r;
        r.serial_s =
            time_once([&] { a = kernels::shifted_box_ious_serial(boxes, 70.0, 200, 7); });
        r.parallel_s =
            time_once([&] { b = kernels::shifted_box_ious_parallel(boxes, 70.0, 200, 7); });
        r.identical = a == b;
        report("shifted-box trials", r);
    }

    return 0;
}
