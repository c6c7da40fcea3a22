#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace jacdet {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Input/config errors (CLI exit code 1).
class InputError : public Error {
public:
    explicit InputError(const std::string& what) : Error(what) {}
};

/// Degenerate-metric errors after perturbation retries (CLI exit code 2).
class DegenerateMetricError : public Error {
public:
    explicit DegenerateMetricError(const std::string& what) : Error(what) {}
};

inline Mat symmetrize(const Mat& m) { return 0.5 * (m + m.transpose()); }

inline double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

/// Cholesky-based SPD test.
inline bool is_spd(const Mat& m, double sym_tol = 1e-10) {
    if (m.rows() != m.cols()) return false;
    if (max_abs(m - m.transpose()) > sym_tol * (1.0 + max_abs(m))) return false;
    Eigen::LLT<Mat> llt(m);
    return llt.info() == Eigen::Success;
}

}  // namespace jacdet
