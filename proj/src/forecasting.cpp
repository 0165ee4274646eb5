#include "matseg/forecasting.hpp"

#include <Eigen/QR>

#include <cmath>
#include <limits>

namespace matseg::forecasting {

namespace {

mat gather(const mat& x, const std::vector<int>& rows, const std::vector<int>& cols) {
    mat out(static_cast<int>(rows.size()), static_cast<int>(cols.size()));
    for (int i = 0; i < out.rows(); ++i)
        for (int j = 0; j < out.cols(); ++j) out(i, j) = x(rows[i], cols[j]);
    return out;
}

vec vec_row_major(const mat& x) {
    vec z(x.size());
    for (int i = 0; i < x.rows(); ++i)
        for (int j = 0; j < x.cols(); ++j) z(i * x.cols() + j) = x(i, j);
    return z;
}

mat unvec_row_major(const vec& z, int rows, int cols) {
    mat x(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) x(i, j) = z(i * cols + j);
    return x;
}

mat pinv(const mat& s) { return s.completeOrthogonalDecomposition().pseudoInverse(); }

}  // namespace

const char* model_kind_name(model_kind k) {
    switch (k) {
        case model_kind::ar1: return "ar1";
        case model_kind::var1: return "var1";
        default: return "mar1";
    }
}

model_kind model_for_block(int rows, int cols) {
    if (rows == 1 && cols == 1) return model_kind::ar1;
    if (rows == 1 || cols == 1) return model_kind::var1;
    return model_kind::mar1;
}

block_model fit_ar1(const std::vector<double>& z) {
    if (z.size() < 3) throw data_error("fit_ar1: need at least 3 observations");
    const int n = static_cast<int>(z.size());
    double mean = 0.0;
    for (double v : z) mean += v;
    mean /= n;
    double num = 0.0, den = 0.0;
    for (int t = 1; t < n; ++t) {
        num += (z[t] - mean) * (z[t - 1] - mean);
        den += (z[t - 1] - mean) * (z[t - 1] - mean);
    }
    block_model m;
    m.kind = model_kind::ar1;
    m.rows = m.cols = 1;
    m.intercept = mat::Constant(1, 1, mean);
    if (den < 1e-300) {
        m.phi = 0.0;
        m.warning = true;
    } else {
        m.phi = num / den;
        if (m.phi > 0.999) m.phi = 0.999;
        if (m.phi < -0.999) m.phi = -0.999;
    }
    return m;
}

block_model fit_var1(const mat& series) {
    const int n = static_cast<int>(series.rows());
    const int d = static_cast<int>(series.cols());
    if (d < 1) throw validation_error("fit_var1: empty state");
    if (n < d + 2) throw data_error("fit_var1: need at least d + 2 observations");
    if (d == 1) {
        std::vector<double> z(series.data(), series.data() + n);
        block_model m = fit_ar1(z);
        m.kind = model_kind::var1;
        m.coeff = mat::Constant(1, 1, m.phi);
        return m;
    }
    vec mean = series.colwise().mean();
    mat zc = series.rowwise() - mean.transpose();
    mat xp = zc.topRows(n - 1);   // predictors z_{t-1}
    mat yr = zc.bottomRows(n - 1);
    mat gram = xp.transpose() * xp;
    Eigen::SelfAdjointEigenSolver<mat> es(gram);
    const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
    block_model m;
    if (lo <= 0.0 || hi / lo > 1e12) {
        gram.diagonal().array() += 1e-8 * std::max(gram.trace(), 1e-12) / d;
        m.warning = true;
    }
    m.kind = model_kind::var1;
    m.rows = d;
    m.cols = 1;
    m.coeff = gram.ldlt().solve(xp.transpose() * yr).transpose();
    m.intercept = mean;
    return m;
}

block_model fit_mar1(const matrix_series& u) {
    u.validate();
    const int n = u.T(), p = u.p(), q = u.q();
    if (p < 2 || q < 2) throw validation_error("fit_mar1: both block dimensions must exceed 1");
    if (n < p + q + 2) throw data_error("fit_mar1: need at least rows + cols + 2 observations");
    mat mean = mat::Zero(p, q);
    for (const mat& v : u.values) mean += v;
    mean /= n;
    std::vector<mat> c(u.values.begin(), u.values.end());
    for (mat& v : c) v -= mean;

    block_model m;
    m.kind = model_kind::mar1;
    m.rows = p;
    m.cols = q;
    m.intercept = mean;
    mat p1 = mat::Identity(p, p), p2 = mat::Identity(q, q);
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 100; ++it) {
        mat g = mat::Zero(p, p), h = mat::Zero(p, p);
        for (int t = 1; t < n; ++t) {
            mat w = c[t - 1] * p2.transpose();
            g += c[t] * w.transpose();
            h += w * w.transpose();
        }
        p1 = g * pinv(h);
        mat g2 = mat::Zero(q, q), h2 = mat::Zero(q, q);
        for (int t = 1; t < n; ++t) {
            mat w = p1 * c[t - 1];
            g2 += c[t].transpose() * w;
            h2 += w.transpose() * w;
        }
        p2 = g2 * pinv(h2);
        double obj = 0.0;
        for (int t = 1; t < n; ++t) obj += (c[t] - p1 * c[t - 1] * p2.transpose()).squaredNorm();
        m.objective_trace.push_back(obj);
        if (std::isfinite(prev)) {
            if (obj > prev + 1e-9 * std::max(prev, 1.0))
                throw numeric_error("fit_mar1: objective increased during alternation");
            if (prev - obj <= 1e-8 * std::max(prev, 1e-12)) {
                prev = obj;
                break;
            }
        }
        prev = obj;
        if (it == 99) {
            m.converged = false;
            m.warning = true;
        }
    }
    const double nrm = p1.norm();
    if (nrm >= 1e-300) {  // fix the scale indeterminacy of the pair
        const double s = std::sqrt(static_cast<double>(p)) / nrm;
        p1 *= s;
        p2 /= s;
    } else {
        m.warning = true;
    }
    m.phi1 = p1;
    m.phi2 = p2;
    return m;
}

block_model fit_block(const matrix_series& block) {
    block.validate();
    const int n = block.T(), p = block.p(), q = block.q();
    switch (model_for_block(p, q)) {
        case model_kind::ar1: {
            std::vector<double> z(n);
            for (int t = 0; t < n; ++t) z[t] = block.values[t](0, 0);
            return fit_ar1(z);
        }
        case model_kind::var1: {
            mat series(n, p * q);
            for (int t = 0; t < n; ++t) series.row(t) = vec_row_major(block.values[t]).transpose();
            block_model m = fit_var1(series);
            mat mean = unvec_row_major(m.intercept.col(0), p, q);
            m.rows = p;
            m.cols = q;
            m.intercept = mean;
            return m;
        }
        default: return fit_mar1(block);
    }
}

mat forecast_block(const block_model& m, const mat& last, int h) {
    if (h < 1) throw validation_error("forecast_block: horizon must be >= 1");
    if (last.rows() != m.rows || last.cols() != m.cols)
        throw validation_error("forecast_block: state shape does not match model");
    mat x = last - m.intercept;
    switch (m.kind) {
        case model_kind::ar1:
            for (int s = 0; s < h; ++s) x *= m.phi;
            break;
        case model_kind::var1: {
            vec z = vec_row_major(x);
            for (int s = 0; s < h; ++s) z = m.coeff * z;
            x = unvec_row_major(z, m.rows, m.cols);
            break;
        }
        default:
            for (int s = 0; s < h; ++s) x = m.phi1 * x * m.phi2.transpose();
            break;
    }
    return x + m.intercept;
}

mat forecast_matrix(const matrix_series& u, const std::vector<std::vector<int>>& row_groups,
                    const std::vector<std::vector<int>>& col_groups, int h) {
    u.validate();
    const int n = u.T(), p = u.p(), q = u.q();
    for (const auto& g : row_groups) {
        if (g.empty()) throw validation_error("forecast_matrix: empty row group");
        for (int i : g)
            if (i < 0 || i >= p) throw validation_error("forecast_matrix: row index out of range");
    }
    for (const auto& g : col_groups) {
        if (g.empty()) throw validation_error("forecast_matrix: empty column group");
        for (int j : g)
            if (j < 0 || j >= q) throw validation_error("forecast_matrix: column index out of range");
    }
    mat out = mat::Zero(p, q);
    for (const auto& rg : row_groups) {
        for (const auto& cg : col_groups) {
            matrix_series block;
            block.values.reserve(n);
            for (int t = 0; t < n; ++t) block.values.push_back(gather(u.values[t], rg, cg));
            block_model m = fit_block(block);
            mat pred = forecast_block(m, block.values.back(), h);
            for (int i = 0; i < static_cast<int>(rg.size()); ++i)
                for (int j = 0; j < static_cast<int>(cg.size()); ++j)
                    out(rg[i], cg[j]) = pred(i, j);
        }
    }
    return out;
}

namespace {

matrix_series head_series(const matrix_series& x, int n) {
    matrix_series out;
    out.values.assign(x.values.begin(), x.values.begin() + n);
    out.label = x.label;
    return out;
}

// transform + grouping used for one rolling window
struct window_plan {
    transform::transform_pair tp;
    mat mean;
};

window_plan plan_seg(const matrix_series& window, const transform::pipeline_config& cfg) {
    transform::pipeline_fit fit = transform::fit_pipeline(window, cfg);
    return {fit.tp, fit.mean};
}

window_plan plan_o1(const matrix_series& window, const transform::pipeline_config& cfg,
                    const oracle_info& truth) {
    auto [xc, mean] = center(window);
    auto col_w = estimation::w_estimate(xc, estimation::mode::columns, cfg.tau0, cfg.f);
    auto row_w = estimation::w_estimate(xc, estimation::mode::rows, cfg.tau0, cfg.f);
    matrix_series uw = head_series(*truth.u, window.T());
    auto [a_star, b_star] = transform::proxy_targets(truth.a, truth.b, uw, xc);
    window_plan w;
    w.mean = mean;
    w.tp.a_star = col_w.eig.eigenvectors;
    w.tp.b_star = row_w.eig.eigenvectors;
    w.tp.sigma1_inv_sqrt = col_w.sigma_inv_sqrt;
    w.tp.sigma2_inv_sqrt = row_w.sigma_inv_sqrt;
    w.tp.sigma1_sqrt = sqrt_sym(col_w.sigma);
    w.tp.sigma2_sqrt = sqrt_sym(row_w.sigma);
    w.tp.col_groups = transform::reference_partition(col_w.eig.eigenvectors, a_star, truth.col_groups).groups;
    w.tp.row_groups = transform::reference_partition(row_w.eig.eigenvectors, b_star, truth.row_groups).groups;
    return w;
}

window_plan plan_o2(const matrix_series& window, const oracle_info& truth) {
    auto [xc, mean] = center(window);
    auto [s1x, s2x] = estimation::covariance_pair(xc);
    matrix_series uw = head_series(*truth.u, window.T());
    auto [a_star, b_star] = transform::proxy_targets(truth.a, truth.b, uw, xc);
    window_plan w;
    w.mean = mean;
    w.tp.a_star = a_star;
    w.tp.b_star = b_star;
    w.tp.sigma1_inv_sqrt = inv_sqrt(s1x);
    w.tp.sigma2_inv_sqrt = inv_sqrt(s2x);
    w.tp.sigma1_sqrt = sqrt_sym(s1x);
    w.tp.sigma2_sqrt = sqrt_sym(s2x);
    w.tp.col_groups = truth.col_groups;
    w.tp.row_groups = truth.row_groups;
    return w;
}

mat forecast_with_plan(const matrix_series& window, const window_plan& plan, int h) {
    matrix_series xc = window;
    for (mat& v : xc.values) v -= plan.mean;
    matrix_series un = transform::to_latent(xc, plan.tp);
    mat uhat = forecast_matrix(un, plan.tp.row_groups, plan.tp.col_groups, h);
    return transform::from_latent_one(uhat, plan.tp) + plan.mean;
}

struct error_tracker {
    int p = 0, q = 0;
    mat sumsq;
    std::vector<double> per_step;
    void init(int pr, int qc) {
        p = pr;
        q = qc;
        sumsq = mat::Zero(p, q);
    }
    void add(const mat& err) {
        sumsq += err.cwiseProduct(err);
        per_step.push_back(err.squaredNorm() / (p * q));
    }
    void finish(forecast_report& rep) const {
        const int steps = static_cast<int>(per_step.size());
        rep.per_step_mse = per_step;
        rep.per_cell_errors = (sumsq / steps).cwiseSqrt();
        // derived from per_cell_errors so the report identity holds bitwise
        rep.mse = rep.per_cell_errors.array().square().mean();
    }
};

void check_rolling_args(const matrix_series& x, int holdout, int h,
                        const matrix_series* cond_mean_truth) {
    x.validate();
    if (h < 1) throw validation_error("rolling forecast: horizon must be >= 1");
    if (holdout < h) throw validation_error("rolling forecast: holdout must be >= horizon");
    if (x.T() - holdout < 2) throw validation_error("rolling forecast: training window too short");
    if (cond_mean_truth != nullptr) {
        if (h != 1)
            throw validation_error("rolling forecast: conditional-mean truth requires horizon 1");
        if (static_cast<int>(cond_mean_truth->values.size()) != holdout)
            throw validation_error("rolling forecast: conditional-mean truth length mismatch");
        for (const mat& v : cond_mean_truth->values)
            if (v.rows() != x.p() || v.cols() != x.q())
                throw validation_error("rolling forecast: conditional-mean truth shape mismatch");
    }
}

}  // namespace

forecast_report rolling_backtest(const matrix_series& x, int holdout, int h, scheme_kind scheme,
                                 const transform::pipeline_config& cfg,
                                 const matrix_series* cond_mean_truth, oracle_kind oracle,
                                 const oracle_info* truth) {
    check_rolling_args(x, holdout, h, cond_mean_truth);
    const int t0 = x.T() - holdout;
    const int steps = holdout - h + 1;
    if (oracle != oracle_kind::none) {
        if (truth == nullptr || truth->u == nullptr)
            throw validation_error("rolling forecast: oracle requires ground-truth info");
        if (static_cast<int>(truth->u->values.size()) < t0 + steps - 1)
            throw validation_error("rolling forecast: oracle latent series too short");
    }

    forecast_report rep;
    rep.horizon = h;
    rep.scheme = scheme == scheme_kind::refit_each_step ? "refit" : "fixed";
    rep.truth_kind = cond_mean_truth != nullptr ? "conditional-mean" : "realized";
    rep.method = oracle == oracle_kind::none ? "seg" : (oracle == oracle_kind::o1 ? "o1" : "o2");
    error_tracker errs;
    errs.init(x.p(), x.q());

    window_plan fixed_plan;
    if (scheme == scheme_kind::fixed_transform && oracle == oracle_kind::none)
        fixed_plan = plan_seg(head_series(x, t0), cfg);

    for (int i = 0; i < steps; ++i) {
        matrix_series window = head_series(x, t0 + i);
        window_plan plan;
        if (oracle == oracle_kind::o1)
            plan = plan_o1(window, cfg, *truth);
        else if (oracle == oracle_kind::o2)
            plan = plan_o2(window, *truth);
        else if (scheme == scheme_kind::refit_each_step)
            plan = plan_seg(window, cfg);
        else
            plan = fixed_plan;
        mat xhat = forecast_with_plan(window, plan, h);
        rep.predictions.push_back(xhat);
        const mat& target =
            cond_mean_truth != nullptr ? cond_mean_truth->values[i] : x.values[t0 + i + h - 1];
        errs.add(xhat - target);
    }
    errs.finish(rep);
    return rep;
}

const char* baseline_kind_name(baseline_kind k) {
    switch (k) {
        case baseline_kind::mar1_direct: return "mar1_direct";
        case baseline_kind::var1_stacked: return "var1_stacked";
        default: return "ar1_per_cell";
    }
}

forecast_report baseline_forecasts(const matrix_series& x, int holdout, int h, baseline_kind kind,
                                   const matrix_series* cond_mean_truth) {
    check_rolling_args(x, holdout, h, cond_mean_truth);
    const int t0 = x.T() - holdout;
    const int steps = holdout - h + 1;
    const int p = x.p(), q = x.q();

    forecast_report rep;
    rep.horizon = h;
    rep.scheme = "refit";
    rep.truth_kind = cond_mean_truth != nullptr ? "conditional-mean" : "realized";
    rep.method = baseline_kind_name(kind);
    error_tracker errs;
    errs.init(p, q);

    for (int i = 0; i < steps; ++i) {
        matrix_series window = head_series(x, t0 + i);
        const int n = window.T();
        mat xhat(p, q);
        switch (kind) {
            case baseline_kind::mar1_direct: {
                block_model m = fit_block(window);
                xhat = forecast_block(m, window.values.back(), h);
                break;
            }
            case baseline_kind::var1_stacked: {
                mat series(n, p * q);
                for (int t = 0; t < n; ++t)
                    series.row(t) = vec_row_major(window.values[t]).transpose();
                block_model m = fit_var1(series);
                mat mean = unvec_row_major(m.intercept.col(0), p, q);
                m.rows = p;
                m.cols = q;
                m.intercept = mean;
                xhat = forecast_block(m, window.values.back(), h);
                break;
            }
            default: {
                for (int r = 0; r < p; ++r) {
                    for (int c = 0; c < q; ++c) {
                        std::vector<double> z(n);
                        for (int t = 0; t < n; ++t) z[t] = window.values[t](r, c);
                        block_model m = fit_ar1(z);
                        mat last = mat::Constant(1, 1, z.back());
                        xhat(r, c) = forecast_block(m, last, h)(0, 0);
                    }
                }
                break;
            }
        }
        rep.predictions.push_back(xhat);
        const mat& target =
            cond_mean_truth != nullptr ? cond_mean_truth->values[i] : x.values[t0 + i + h - 1];
        errs.add(xhat - target);
    }
    errs.finish(rep);
    return rep;
}

}  // namespace matseg::forecasting
