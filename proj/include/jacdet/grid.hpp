#pragma once

#include "jacdet/types.hpp"

#include <functional>
#include <vector>

namespace jacdet {

/// Uniform grid on [0,1] with `steps` RK4 intervals. Samplers and quadratures
/// live on the refined grid with 2*steps+1 nodes so that RK4 midpoints and
/// Simpson nodes coincide.
struct TimeGrid {
    int steps = 1024;

    int fine_count() const { return 2 * steps + 1; }
    double fine_h() const { return 0.5 / steps; }
    double fine_t(int i) const { return double(i) / (2.0 * steps); }
};

using MatFn = std::function<Mat(double)>;

/// Sample f on the fine grid.
inline std::vector<Mat> sample(const TimeGrid& g, const MatFn& f) {
    std::vector<Mat> out;
    out.reserve(g.fine_count());
    for (int i = 0; i < g.fine_count(); ++i) out.push_back(f(g.fine_t(i)));
    return out;
}

/// Cumulative Simpson quadrature on uniformly spaced values. Each interval
/// [x_i, x_{i+1}] is integrated from the parabola through three neighbouring
/// nodes, so prefix sums at even nodes reproduce composite Simpson exactly.
inline std::vector<Mat> cumulative_simpson(const std::vector<Mat>& f, double h) {
    const int n = int(f.size());
    std::vector<Mat> out(n);
    if (n == 0) return out;
    out[0] = Mat::Zero(f[0].rows(), f[0].cols());
    if (n == 1) return out;
    if (n == 2) {  // trapezoid fallback, never hit for fine grids
        out[1] = out[0] + 0.5 * h * (f[0] + f[1]);
        return out;
    }
    for (int i = 0; i + 1 < n; ++i) {
        Mat inc;
        if (i == 0) {
            inc = (h / 12.0) * (5.0 * f[0] + 8.0 * f[1] - f[2]);
        } else {
            inc = (h / 12.0) * (-f[i - 1] + 8.0 * f[i] + 5.0 * f[i + 1]);
        }
        out[i + 1] = out[i] + inc;
    }
    return out;
}

/// Full-interval Simpson integral.
inline Mat integrate_simpson(const std::vector<Mat>& f, double h) {
    return cumulative_simpson(f, h).back();
}

}  // namespace jacdet
