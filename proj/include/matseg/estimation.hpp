#pragma once

#include "matseg/matcore.hpp"

namespace matseg::estimation {

// Columns estimates the column transform from X_t as-is; Rows applies the
// same construction to the transposed matrices
enum class mode { columns, rows };

const char* mode_name(mode m);

// optional monotone map applied to the eigenvalues of each V V^T summand
struct eig_transform {
    enum class kind { identity, log1p, power };
    kind k = kind::identity;
    double alpha = 1.0;  // exponent for kind::power

    static eig_transform identity() { return {}; }
    static eig_transform make_log1p() { return {kind::log1p, 1.0}; }
    static eig_transform make_power(double a);

    bool is_identity() const { return k == kind::identity; }
    double apply(double lambda) const;
};

enum class w_path { optimized, naive };

struct w_estimate_result {
    mode m = mode::columns;
    mat w;                // d x d symmetric PSD accumulation (d = q for Columns, p for Rows)
    int tau0 = 0;
    mat sigma;            // matching covariance before inversion (kept for reconstruction)
    mat sigma_inv_sqrt;
    sym_eig_result eig;   // eigendecomposition of w
    vec eigengaps;        // d-1 nonnegative consecutive gaps
};

// (sigma1, sigma2) = ((Tp)^-1 sum X^T X, (Tq)^-1 sum X X^T); X must be centered
std::pair<mat, mat> covariance_pair(const matrix_series& x);

// lag-tau cross-moment block between row i and row j (0-based; Rows mode uses
// columns of X).  Negative tau is summed directly and satisfies the exact
// identity lagged_block(-tau, i, j) == lagged_block(tau, j, i)^T.
mat lagged_block(const matrix_series& x, mode m, int tau, int i, int j);

// d^-2 sum over lags -tau0..tau0 and all index pairs of f(V V^T) where
// V = M * lagged_block * M and M is the inverse square root of the matching
// covariance.  The optimized path batches all blocks of one lag into a single
// stacked product; the naive path is the quadruple-loop reference.
w_estimate_result w_estimate(const matrix_series& x, mode m, int tau0 = 5,
                             const eig_transform& f = {}, w_path path = w_path::optimized);

// both modes at once: (columns result, rows result)
std::pair<w_estimate_result, w_estimate_result> estimate_transforms(const matrix_series& x, int tau0 = 5,
                                                                    const eig_transform& f = {});

}  // namespace matseg::estimation
