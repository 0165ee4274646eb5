#pragma once

#include "matseg/segmentation.hpp"

namespace matseg::transform {

// estimated column/row transforms with cached square-root factors
struct transform_pair {
    mat a_star;  // q x q orthonormal columns
    mat b_star;  // p x p orthonormal columns
    mat sigma1_inv_sqrt, sigma2_inv_sqrt;
    mat sigma1_sqrt, sigma2_sqrt;
    std::vector<std::vector<int>> col_groups, row_groups;  // 0-based index lists

    static transform_pair identity(int p, int q);
};

// U_t = b*^T Sigma2^{-1/2} X_t Sigma1^{-1/2} a*
mat to_latent_one(const mat& x, const transform_pair& tp);
matrix_series to_latent(const matrix_series& x, const transform_pair& tp);

// X_t = Sigma2^{1/2} b* U_t a*^T Sigma1^{1/2}
mat from_latent_one(const mat& u, const transform_pair& tp);
matrix_series from_latent(const matrix_series& u, const transform_pair& tp);

// simulation-only targets built from the generator's (A, B, U) and the
// centered observed series; approximately orthogonal for large T
std::pair<mat, mat> proxy_targets(const mat& a, const mat& b, const matrix_series& u,
                                  const matrix_series& x_centered);

// assign estimated eigenvector columns to ground-truth blocks by maximizing
// the projection onto each block's column space
struct reference_result {
    std::vector<std::vector<int>> groups;  // sorted by smallest member
    std::vector<int> assignment;           // column -> truth block index
};
reference_result reference_partition(const mat& vecs, const mat& target,
                                     const std::vector<std::vector<int>>& truth_groups);

struct pipeline_config {
    int tau0 = 5;
    estimation::eig_transform f{};
    int tau1 = 15;
    double c_r = 0.75;
    bool prewhiten = true;
    segmentation::selector sel{};
    double rho_floor = 0.05;
};

struct pipeline_fit {
    mat mean;
    estimation::w_estimate_result col_w, row_w;
    segmentation::segmentation_result col_seg, row_seg;
    transform_pair tp;
};

// center, estimate both W matrices, segment both modes, assemble the pair
pipeline_fit fit_pipeline(const matrix_series& x, const pipeline_config& cfg);

}  // namespace matseg::transform
