#include "matseg/transform.hpp"

#include <algorithm>
#include <numeric>

namespace matseg::transform {

transform_pair transform_pair::identity(int p, int q) {
    transform_pair tp;
    tp.a_star = mat::Identity(q, q);
    tp.b_star = mat::Identity(p, p);
    tp.sigma1_inv_sqrt = mat::Identity(q, q);
    tp.sigma2_inv_sqrt = mat::Identity(p, p);
    tp.sigma1_sqrt = mat::Identity(q, q);
    tp.sigma2_sqrt = mat::Identity(p, p);
    tp.col_groups.resize(static_cast<size_t>(q));
    for (int j = 0; j < q; ++j) tp.col_groups[static_cast<size_t>(j)] = {j};
    tp.row_groups.resize(static_cast<size_t>(p));
    for (int i = 0; i < p; ++i) tp.row_groups[static_cast<size_t>(i)] = {i};
    return tp;
}

mat to_latent_one(const mat& x, const transform_pair& tp) {
    if (x.rows() != tp.b_star.rows() || x.cols() != tp.a_star.rows())
        throw validation_error("to_latent: dimension mismatch");
    return tp.b_star.transpose() * tp.sigma2_inv_sqrt * x * tp.sigma1_inv_sqrt * tp.a_star;
}

matrix_series to_latent(const matrix_series& x, const transform_pair& tp) {
    const mat left = tp.b_star.transpose() * tp.sigma2_inv_sqrt;
    const mat right = tp.sigma1_inv_sqrt * tp.a_star;
    if (x.p() != static_cast<int>(left.cols()) || x.q() != static_cast<int>(right.rows()))
        throw validation_error("to_latent: dimension mismatch");
    matrix_series out;
    out.label = x.label;
    out.values.reserve(x.values.size());
    for (const auto& v : x.values) out.values.push_back(left * v * right);
    return out;
}

mat from_latent_one(const mat& u, const transform_pair& tp) {
    if (u.rows() != tp.b_star.cols() || u.cols() != tp.a_star.cols())
        throw validation_error("from_latent: dimension mismatch");
    return tp.sigma2_sqrt * tp.b_star * u * tp.a_star.transpose() * tp.sigma1_sqrt;
}

matrix_series from_latent(const matrix_series& u, const transform_pair& tp) {
    const mat left = tp.sigma2_sqrt * tp.b_star;
    const mat right = tp.a_star.transpose() * tp.sigma1_sqrt;
    if (u.p() != static_cast<int>(left.cols()) || u.q() != static_cast<int>(right.rows()))
        throw validation_error("from_latent: dimension mismatch");
    matrix_series out;
    out.label = u.label;
    out.values.reserve(u.values.size());
    for (const auto& v : u.values) out.values.push_back(left * v * right);
    return out;
}

std::pair<mat, mat> proxy_targets(const mat& a, const mat& b, const matrix_series& u,
                                  const matrix_series& x_centered) {
    const int T = u.T(), p = u.p(), q = u.q();
    if (a.rows() != q || a.cols() != q || b.rows() != p || b.cols() != p)
        throw validation_error("proxy_targets: dimension mismatch");
    mat s1u = mat::Zero(q, q), s2u = mat::Zero(p, p);
    for (int t = 0; t < T; ++t) {
        const mat bu = b * u.values[t];
        s1u.noalias() += bu.transpose() * bu;
        const mat ua = u.values[t] * a.transpose();
        s2u.noalias() += ua * ua.transpose();
    }
    s1u /= static_cast<double>(T) * p;
    s2u /= static_cast<double>(T) * q;
    auto [s1x, s2x] = estimation::covariance_pair(x_centered);
    return {inv_sqrt(s1x) * a * sqrt_sym(s1u), inv_sqrt(s2x) * b * sqrt_sym(s2u)};
}

reference_result reference_partition(const mat& vecs, const mat& target,
                                     const std::vector<std::vector<int>>& truth_groups) {
    const Eigen::Index d = vecs.cols();
    std::vector<mat> proj;
    proj.reserve(truth_groups.size());
    for (const auto& g : truth_groups) {
        mat block(target.rows(), static_cast<Eigen::Index>(g.size()));
        for (size_t c = 0; c < g.size(); ++c) block.col(static_cast<Eigen::Index>(c)) = target.col(g[c]);
        proj.push_back(block * block.completeOrthogonalDecomposition().pseudoInverse());
    }
    reference_result res;
    res.assignment.resize(static_cast<size_t>(d), 0);
    for (Eigen::Index k = 0; k < d; ++k) {
        const vec v = vecs.col(k);
        double best = -std::numeric_limits<double>::infinity();
        int arg = 0;
        for (size_t j = 0; j < proj.size(); ++j) {
            const double s = v.dot(proj[j] * v);
            if (s > best) {
                best = s;
                arg = static_cast<int>(j);
            }
        }
        res.assignment[static_cast<size_t>(k)] = arg;
    }
    std::vector<std::vector<int>> by_block(truth_groups.size());
    for (Eigen::Index k = 0; k < d; ++k)
        by_block[static_cast<size_t>(res.assignment[static_cast<size_t>(k)])].push_back(static_cast<int>(k));
    for (auto& g : by_block)
        if (!g.empty()) res.groups.push_back(std::move(g));
    std::sort(res.groups.begin(), res.groups.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return res;
}

pipeline_fit fit_pipeline(const matrix_series& x, const pipeline_config& cfg) {
    auto [xc, mean] = center(x);
    pipeline_fit f;
    f.mean = std::move(mean);
    f.col_w = estimation::w_estimate(xc, estimation::mode::columns, cfg.tau0, cfg.f);
    f.row_w = estimation::w_estimate(xc, estimation::mode::rows, cfg.tau0, cfg.f);
    f.col_seg = segmentation::segment(xc, f.col_w, cfg.tau1, cfg.c_r, cfg.prewhiten, cfg.sel, cfg.rho_floor);
    f.row_seg = segmentation::segment(xc, f.row_w, cfg.tau1, cfg.c_r, cfg.prewhiten, cfg.sel, cfg.rho_floor);
    f.tp.a_star = f.col_w.eig.eigenvectors;
    f.tp.b_star = f.row_w.eig.eigenvectors;
    f.tp.sigma1_inv_sqrt = f.col_w.sigma_inv_sqrt;
    f.tp.sigma2_inv_sqrt = f.row_w.sigma_inv_sqrt;
    f.tp.sigma1_sqrt = sqrt_sym(f.col_w.sigma);
    f.tp.sigma2_sqrt = sqrt_sym(f.row_w.sigma);
    f.tp.col_groups = f.col_seg.groups;
    f.tp.row_groups = f.row_seg.groups;
    return f;
}

}  // namespace matseg::transform
