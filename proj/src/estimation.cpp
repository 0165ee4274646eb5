#include "matseg/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace matseg::estimation {

const char* mode_name(mode m) { return m == mode::columns ? "columns" : "rows"; }

eig_transform eig_transform::make_power(double a) {
    if (!(a > 0.0)) throw validation_error("eig_transform: power exponent must be positive");
    return {kind::power, a};
}

double eig_transform::apply(double lambda) const {
    const double x = std::max(lambda, 0.0);
    switch (k) {
        case kind::identity: return x;
        case kind::log1p: return std::log1p(x);
        case kind::power: return std::pow(x, alpha);
    }
    return x;
}

std::pair<mat, mat> covariance_pair(const matrix_series& x) {
    const int T = x.T(), p = x.p(), q = x.q();
    if (T < 2) throw data_error("covariance_pair: need T >= 2");
    mat s1 = mat::Zero(q, q), s2 = mat::Zero(p, p);
    for (int t = 0; t < T; ++t) {
        s1.noalias() += x.values[t].transpose() * x.values[t];
        s2.noalias() += x.values[t] * x.values[t].transpose();
    }
    s1 /= static_cast<double>(T) * p;
    s2 /= static_cast<double>(T) * q;
    return {std::move(s1), std::move(s2)};
}

mat lagged_block(const matrix_series& x, mode m, int tau, int i, int j) {
    matrix_series tmp;
    const matrix_series* src = &x;
    if (m == mode::rows) {
        tmp = x.transposed();
        src = &tmp;
    }
    const int T = src->T(), p = src->p(), q = src->q();
    if (std::abs(tau) >= T) throw validation_error("lagged_block: need |tau| < T");
    if (i < 0 || i >= p || j < 0 || j >= p) throw validation_error("lagged_block: index out of range");
    mat acc = mat::Zero(q, q);
    const int lo = std::max(0, -tau), hi = std::min(T, T - tau);
    for (int t = lo; t < hi; ++t)
        acc.noalias() += src->values[t + tau].row(i).transpose() * src->values[t].row(j);
    return acc / static_cast<double>(T - std::abs(tau));
}

namespace {

// f(G G^T) for a square block G; identity handled by the callers directly
mat f_of_outer(const mat& g, const eig_transform& f) {
    const sym_eig_result eig = sym_eig(g * g.transpose());
    vec lam(eig.eigenvalues.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i) lam[i] = f.apply(eig.eigenvalues[i]);
    return eig.eigenvectors * lam.asDiagonal() * eig.eigenvectors.transpose();
}

// batched accumulation: Y_t = X_t M, lag-tau blocks read out of one stacked
// product; per-row partial sums combined in fixed index order so the result
// does not depend on the OpenMP schedule
mat w_accumulate_optimized(const matrix_series& x, const mat& minv, int tau0, const eig_transform& f) {
    const int T = x.T(), p = x.p(), q = x.q();
    mat yf(T, p * q);
    for (int t = 0; t < T; ++t) {
        const mat y = x.values[t] * minv;
        for (int i = 0; i < p; ++i) yf.block(t, i * q, 1, q) = y.row(i);
    }
    mat w = mat::Zero(q, q);
    std::vector<mat> partial(static_cast<size_t>(p));
    for (int tau = 0; tau <= tau0; ++tau) {
        const int n = T - tau;
        const mat s = (yf.bottomRows(n).transpose() * yf.topRows(n)) / static_cast<double>(n);
#pragma omp parallel for schedule(static)
        for (int i = 0; i < p; ++i) {
            mat acc = mat::Zero(q, q);
            for (int j = 0; j < p; ++j) {
                const auto g = s.block(i * q, j * q, q, q);
                if (f.is_identity()) {
                    acc.noalias() += g * g.transpose();
                    if (tau > 0) acc.noalias() += g.transpose() * g;
                } else {
                    acc += f_of_outer(g, f);
                    if (tau > 0) acc += f_of_outer(g.transpose(), f);
                }
            }
            partial[static_cast<size_t>(i)] = std::move(acc);
        }
        for (int i = 0; i < p; ++i) w += partial[static_cast<size_t>(i)];
    }
    return w / (static_cast<double>(p) * p);
}

// quadruple-loop reference, summing the printed lag range -tau0..tau0
mat w_accumulate_naive(const matrix_series& x, const mat& minv, int tau0, const eig_transform& f) {
    const int p = x.p(), q = x.q();
    mat w = mat::Zero(q, q);
    for (int tau = -tau0; tau <= tau0; ++tau)
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < p; ++j) {
                const mat v = minv * lagged_block(x, mode::columns, tau, i, j) * minv;
                if (f.is_identity())
                    w.noalias() += v * v.transpose();
                else
                    w += f_of_outer(v, f);
            }
    return w / (static_cast<double>(p) * p);
}

}  // namespace

w_estimate_result w_estimate(const matrix_series& x, mode m, int tau0, const eig_transform& f, w_path path) {
    const matrix_series work = (m == mode::rows) ? x.transposed() : x;
    const int T = work.T();
    if (tau0 < 0 || tau0 >= T) throw validation_error("w_estimate: need 0 <= tau0 < T");
    auto [s1, s2] = covariance_pair(work);
    (void)s2;
    mat minv = inv_sqrt(s1);
    w_estimate_result r;
    r.m = m;
    r.tau0 = tau0;
    r.w = (path == w_path::optimized) ? w_accumulate_optimized(work, minv, tau0, f)
                                      : w_accumulate_naive(work, minv, tau0, f);
    r.sigma = std::move(s1);
    r.sigma_inv_sqrt = std::move(minv);
    r.eig = sym_eig(r.w);
    const Eigen::Index d = r.eig.eigenvalues.size();
    r.eigengaps = vec(std::max<Eigen::Index>(d - 1, 0));
    for (Eigen::Index i = 0; i + 1 < d; ++i)
        r.eigengaps[i] = std::max(r.eig.eigenvalues[i] - r.eig.eigenvalues[i + 1], 0.0);
    return r;
}

std::pair<w_estimate_result, w_estimate_result> estimate_transforms(const matrix_series& x, int tau0,
                                                                    const eig_transform& f) {
    return {w_estimate(x, mode::columns, tau0, f), w_estimate(x, mode::rows, tau0, f)};
}

}  // namespace matseg::estimation
