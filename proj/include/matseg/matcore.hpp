#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace matseg {

using mat = Eigen::MatrixXd;
using vec = Eigen::VectorXd;

// error taxonomy; the CLI maps these to exit codes 2 / 3 / 4
struct validation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ordered sequence of T real p x q matrices
struct matrix_series {
    std::vector<mat> values;
    std::string label;

    matrix_series() = default;
    explicit matrix_series(std::vector<mat> v, std::string lbl = "")
        : values(std::move(v)), label(std::move(lbl)) {}

    int T() const { return static_cast<int>(values.size()); }
    int p() const { return values.empty() ? 0 : static_cast<int>(values.front().rows()); }
    int q() const { return values.empty() ? 0 : static_cast<int>(values.front().cols()); }

    // T >= 2, p,q >= 1, uniform dimensions, all entries finite
    void validate() const;
    matrix_series transposed() const;
};

struct sym_eig_result {
    vec eigenvalues;   // descending
    mat eigenvectors;  // orthonormal columns aligned with eigenvalues
};

// subtract the elementwise sample mean; returns (centered series, mean)
std::pair<matrix_series, mat> center(const matrix_series& x);

// dense symmetric eigendecomposition with descending eigenvalues and a
// deterministic sign rule: the largest-magnitude component of each
// eigenvector is positive, ties broken by lowest index
sym_eig_result sym_eig(const mat& s);

// default eigenvalue floor 1e-10 * trace(S)/d, clamped away from zero
double default_eig_floor(const mat& s);

// V diag(max(lambda, floor))^{-1/2} V^T; throws numeric_error when S has an
// eigenvalue below -10*floor (not positive semidefinite)
mat inv_sqrt(const mat& s, double floor_value);
mat inv_sqrt(const mat& s);

// V diag(max(lambda, 0))^{1/2} V^T
mat sqrt_sym(const mat& s);

}  // namespace matseg
