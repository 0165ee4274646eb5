#include "matseg/matcore.hpp"

#include <algorithm>
#include <cmath>

namespace matseg {

void matrix_series::validate() const {
    if (values.size() < 2) throw validation_error("matrix_series: need T >= 2");
    const auto rows = values.front().rows();
    const auto cols = values.front().cols();
    if (rows < 1 || cols < 1) throw validation_error("matrix_series: need p >= 1 and q >= 1");
    for (const auto& v : values) {
        if (v.rows() != rows || v.cols() != cols)
            throw validation_error("matrix_series: inconsistent matrix dimensions");
        if (!v.allFinite()) throw validation_error("matrix_series: non-finite entry");
    }
}

matrix_series matrix_series::transposed() const {
    matrix_series out;
    out.label = label;
    out.values.reserve(values.size());
    for (const auto& v : values) out.values.push_back(v.transpose());
    return out;
}

std::pair<matrix_series, mat> center(const matrix_series& x) {
    if (x.values.empty()) throw validation_error("center: empty series");
    mat mean = mat::Zero(x.p(), x.q());
    for (const auto& v : x.values) mean += v;
    mean /= static_cast<double>(x.T());
    matrix_series out;
    out.label = x.label;
    out.values.reserve(x.values.size());
    for (const auto& v : x.values) out.values.push_back(v - mean);
    return {std::move(out), std::move(mean)};
}

sym_eig_result sym_eig(const mat& s) {
    if (s.rows() != s.cols()) throw validation_error("sym_eig: matrix not square");
    if (!s.allFinite()) throw validation_error("sym_eig: non-finite entry");
    const mat symm = 0.5 * (s + s.transpose());
    Eigen::SelfAdjointEigenSolver<mat> solver(symm);
    if (solver.info() != Eigen::Success) throw numeric_error("sym_eig: eigensolver failed");
    const Eigen::Index d = symm.rows();
    sym_eig_result r;
    r.eigenvalues = solver.eigenvalues().reverse();
    r.eigenvectors = solver.eigenvectors().rowwise().reverse();
    for (Eigen::Index j = 0; j < d; ++j) {
        Eigen::Index imax = 0;
        double best = -1.0;
        for (Eigen::Index i = 0; i < d; ++i) {
            const double a = std::abs(r.eigenvectors(i, j));
            if (a > best) {
                best = a;
                imax = i;
            }
        }
        if (r.eigenvectors(imax, j) < 0.0) r.eigenvectors.col(j) *= -1.0;
    }
    return r;
}

double default_eig_floor(const mat& s) {
    const double d = static_cast<double>(s.rows());
    return std::max(1e-10 * std::max(s.trace() / d, 0.0), 1e-30);
}

mat inv_sqrt(const mat& s, double floor_value) {
    if (!(floor_value > 0.0)) throw validation_error("inv_sqrt: floor must be positive");
    const sym_eig_result eig = sym_eig(s);
    if ((eig.eigenvalues.array() < -10.0 * floor_value).any())
        throw numeric_error("inv_sqrt: matrix not positive semidefinite");
    const vec lam = eig.eigenvalues.array().max(floor_value).rsqrt();
    return eig.eigenvectors * lam.asDiagonal() * eig.eigenvectors.transpose();
}

mat inv_sqrt(const mat& s) { return inv_sqrt(s, default_eig_floor(s)); }

mat sqrt_sym(const mat& s) {
    const sym_eig_result eig = sym_eig(s);
    if ((eig.eigenvalues.array() < -10.0 * default_eig_floor(s)).any())
        throw numeric_error("sqrt_sym: matrix not positive semidefinite");
    const vec lam = eig.eigenvalues.array().max(0.0).sqrt();
    return eig.eigenvectors * lam.asDiagonal() * eig.eigenvectors.transpose();
}

}  // namespace matseg
