#include "matseg/simgen.hpp"

#include "matseg/segmentation.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#ifdef _OPENMP
#include <omp.h>
#endif

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace matseg::simgen {

namespace {
constexpr std::uint64_t golden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}
}  // namespace

std::uint64_t rng_stream::next_u64() {
    state_ += golden;
    return mix64(state_);
}

double rng_stream::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double rng_stream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double rng_stream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

double rng_stream::two_sided(double lo, double hi) {
    const double u = uniform(lo, hi);
    return uniform() < 0.5 ? u : -u;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t k) {
    return mix64(master + (k + 1) * golden);
}

std::vector<double> gen_arma12_with(rng_stream& rng, int n, double b, double a1, double a2) {
    if (n < 1) throw validation_error("gen_arma12: length must be >= 1");
    const int total = n + burn_in;
    std::vector<double> eps(total + 2);
    for (double& e : eps) e = rng.normal();
    std::vector<double> z(n);
    double prev = 0.0;
    for (int t = 0; t < total; ++t) {
        const double cur = b * prev + eps[t + 2] + a1 * eps[t + 1] + a2 * eps[t];
        if (t >= burn_in) z[t - burn_in] = cur;
        prev = cur;
    }
    return z;
}

std::vector<double> gen_arma12(rng_stream& rng, int n) {
    const double b = rng.two_sided(0.5, 0.98);
    const double a1 = rng.two_sided(0.3, 0.98);
    const double a2 = rng.two_sided(0.3, 0.98);
    return gen_arma12_with(rng, n, b, a1, a2);
}

mat rand_matrix_cond(rng_stream& rng, int n, double cap) {
    if (n < 1) throw validation_error("rand_matrix_cond: dimension must be >= 1");
    while (true) {
        mat m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
        Eigen::JacobiSVD<mat> svd(m);
        const double lo = svd.singularValues().minCoeff();
        if (lo > 0.0 && svd.singularValues().maxCoeff() / lo < cap) return m;
    }
}

mat rand_orthogonal(rng_stream& rng, int n) {
    mat m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = rng.normal();
    Eigen::HouseholderQR<mat> qr(m);
    mat q = qr.householderQ() * mat::Identity(n, n);
    mat r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < n; ++j)
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    return q;
}

mat latent_block::step(const mat& last) const {
    switch (kind) {
        case forecasting::model_kind::mar1: return lambda * (p1 * last * p2.transpose());
        case forecasting::model_kind::var1: {
            const int r = static_cast<int>(rows.size()), c = static_cast<int>(cols.size());
            vec z(r * c);
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < c; ++j) z(i * c + j) = last(i, j);
            z = coeff * z;
            mat out(r, c);
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < c; ++j) out(i, j) = z(i * c + j);
            return out;
        }
        default: return phi * last;
    }
}

mat sim_truth::latent_one_step(const mat& u_last) const {
    mat out = mat::Zero(u_last.rows(), u_last.cols());
    for (const latent_block& blk : blocks) {
        mat sub(static_cast<int>(blk.rows.size()), static_cast<int>(blk.cols.size()));
        for (int i = 0; i < sub.rows(); ++i)
            for (int j = 0; j < sub.cols(); ++j) sub(i, j) = u_last(blk.rows[i], blk.cols[j]);
        mat nxt = blk.step(sub);
        for (int i = 0; i < sub.rows(); ++i)
            for (int j = 0; j < sub.cols(); ++j) out(blk.rows[i], blk.cols[j]) = nxt(i, j);
    }
    return out;
}

mat sim_truth::cond_mean_of(const mat& u_last) const {
    return b * latent_one_step(u_last) * a.transpose();
}

namespace {

std::vector<std::vector<int>> singleton_groups(int d) {
    std::vector<std::vector<int>> g(d);
    for (int i = 0; i < d; ++i) g[i] = {i};
    return g;
}

matrix_series mix_series(const matrix_series& u, const mat& b, const mat& a) {
    matrix_series x;
    x.values.reserve(u.values.size());
    for (const mat& v : u.values) x.values.push_back(b * v * a.transpose());
    return x;
}

}  // namespace

sim_truth gen_example1(rng_stream& rng, int T, int p, int q) {
    if (T < 2 || p < 1 || q < 1) throw validation_error("gen_example1: bad dimensions");
    sim_truth s;
    s.u.values.assign(T, mat(p, q));
    for (int i = 0; i < p; ++i) {
        for (int k = 0; k < q; ++k) {
            std::vector<double> z = gen_arma12(rng, T);
            for (int t = 0; t < T; ++t) s.u.values[t](i, k) = z[t];
        }
    }
    s.a = rand_matrix_cond(rng, q);
    s.b = rand_matrix_cond(rng, p);
    s.x = mix_series(s.u, s.b, s.a);
    s.col_groups = singleton_groups(q);
    s.row_groups = singleton_groups(p);
    return s;
}

sim_truth gen_example2(rng_stream& rng, int T, int p, int q) {
    if (T < 2 || p < 1) throw validation_error("gen_example2: bad dimensions");
    if (q < 5) throw validation_error("gen_example2: q must be >= 5");
    // base column-vector series of length T + 2; shifted copies build the
    // dependent column blocks {0,1,2} and {3,4}
    std::vector<std::vector<std::vector<double>>> base(p);
    for (int i = 0; i < p; ++i) {
        base[i].resize(q);
        for (int c = 0; c < q; ++c) base[i][c] = gen_arma12(rng, T + 2);
    }
    sim_truth s;
    s.u.values.assign(T, mat(p, q));
    for (int t = 0; t < T; ++t) {
        for (int i = 0; i < p; ++i) {
            s.u.values[t](i, 0) = base[i][0][t];
            s.u.values[t](i, 1) = base[i][0][t + 1];
            s.u.values[t](i, 2) = base[i][0][t + 2];
            s.u.values[t](i, 3) = base[i][3][t];
            s.u.values[t](i, 4) = base[i][3][t + 1];
            for (int c = 5; c < q; ++c) s.u.values[t](i, c) = base[i][c][t];
        }
    }
    s.a = rand_matrix_cond(rng, q);
    s.b = mat::Identity(p, p);
    s.x = mix_series(s.u, s.b, s.a);
    s.col_groups = {{0, 1, 2}, {3, 4}};
    for (int c = 5; c < q; ++c) s.col_groups.push_back({c});
    s.row_groups = singleton_groups(p);
    return s;
}

namespace {

std::vector<std::vector<int>> example3_groups(int d) {
    std::vector<std::vector<int>> g = {{0, 1, 2}, {3, 4}};
    for (int k = 5; k < d; ++k) g.push_back({k});
    return g;
}

}  // namespace

sim_truth gen_example3(rng_stream& rng, int T, int p, int q, int holdout) {
    if (T < 2 || holdout < 0) throw validation_error("gen_example3: bad dimensions");
    if (p < 6 || q < 6) throw validation_error("gen_example3: p and q must be >= 6");
    const int n = T + holdout;
    sim_truth s;
    s.row_groups = example3_groups(p);
    s.col_groups = example3_groups(q);
    s.u.values.assign(n, mat::Zero(p, q));
    const std::map<std::pair<int, int>, double> lam_grid = {
        {{0, 0}, 0.81}, {{0, 1}, 0.64}, {{1, 0}, 0.25}, {{1, 1}, 0.25}};
    for (int bi = 0; bi < static_cast<int>(s.row_groups.size()); ++bi) {
        for (int bj = 0; bj < static_cast<int>(s.col_groups.size()); ++bj) {
            const auto& rows = s.row_groups[bi];
            const auto& cols = s.col_groups[bj];
            const int r = static_cast<int>(rows.size()), c = static_cast<int>(cols.size());
            latent_block blk;
            blk.rows = rows;
            blk.cols = cols;
            if (r > 1 && c > 1) {
                blk.kind = forecasting::model_kind::mar1;
                blk.lambda = lam_grid.at({bi, bj});
                blk.p1 = rand_orthogonal(rng, r);
                blk.p2 = rand_orthogonal(rng, c);
                mat cur = mat::Zero(r, c);
                for (int t = -burn_in; t < n; ++t) {
                    mat e(r, c);
                    for (int i = 0; i < r; ++i)
                        for (int j = 0; j < c; ++j) e(i, j) = rng.normal();
                    cur = blk.lambda * (blk.p1 * cur * blk.p2.transpose()) + e;
                    if (t >= 0)
                        for (int i = 0; i < r; ++i)
                            for (int j = 0; j < c; ++j) s.u.values[t](rows[i], cols[j]) = cur(i, j);
                }
            } else if (r * c > 1) {
                blk.kind = forecasting::model_kind::var1;
                const int d = r * c;
                mat phi(d, d);
                for (int i = 0; i < d; ++i)
                    for (int j = 0; j < d; ++j) phi(i, j) = rng.uniform();
                Eigen::JacobiSVD<mat> svd(phi);
                phi *= rng.uniform(0.1, 0.3) / svd.singularValues()(0);
                blk.coeff = phi;
                vec cur = vec::Zero(d);
                for (int t = -burn_in; t < n; ++t) {
                    vec e(d);
                    for (int i = 0; i < d; ++i) e(i) = rng.normal();
                    cur = phi * cur + e;
                    if (t >= 0)
                        for (int i = 0; i < r; ++i)
                            for (int j = 0; j < c; ++j)
                                s.u.values[t](rows[i], cols[j]) = cur(i * c + j);
                }
            } else {
                blk.kind = forecasting::model_kind::ar1;
                blk.phi = rng.uniform(0.1, 0.3);
                double cur = 0.0;
                for (int t = -burn_in; t < n; ++t) {
                    cur = blk.phi * cur + rng.normal();
                    if (t >= 0) s.u.values[t](rows[0], cols[0]) = cur;
                }
            }
            s.blocks.push_back(std::move(blk));
        }
    }
    s.a = rand_matrix_cond(rng, q);
    s.b = rand_matrix_cond(rng, p);
    s.x = mix_series(s.u, s.b, s.a);
    for (int i = 0; i < holdout; ++i)
        s.cond_mean.values.push_back(s.cond_mean_of(s.u.values[T + i - 1]));
    return s;
}

double metric_D(const mat& a_hat, const mat& a_star, bool* degenerate) {
    if (a_hat.rows() != a_hat.cols() || a_hat.rows() != a_star.rows() ||
        a_star.rows() != a_star.cols())
        throw validation_error("metric_D: inputs must be square with equal dimensions");
    const int q = static_cast<int>(a_hat.cols());
    if (degenerate != nullptr) *degenerate = false;
    const mat d = a_hat.transpose() * a_star;
    if (q == 1) {  // the normalizer vanishes; any nonzero 1x1 alignment is exact
        if (std::abs(d(0, 0)) >= 1e-300) return 0.0;
        if (degenerate != nullptr) *degenerate = true;
        return 1.0;
    }
    double tot = 0.0;
    for (int j = 0; j < q; ++j) {
        const double cmax = d.col(j).cwiseAbs().maxCoeff();
        const double rmax = d.row(j).cwiseAbs().maxCoeff();
        if (cmax < 1e-300 || rmax < 1e-300) {
            if (degenerate != nullptr) *degenerate = true;
            return 1.0;
        }
        tot += 1.0 / cmax + 1.0 / rmax - 2.0;
    }
    const double v = tot / (2.0 * q * (std::sqrt(static_cast<double>(q)) - 1.0));
    return std::clamp(v, 0.0, 1.0);
}

double metric_D1(const std::vector<mat>& hat_bases, const std::vector<mat>& truth_bases) {
    if (hat_bases.size() != truth_bases.size() || hat_bases.empty())
        throw validation_error("metric_D1: incomparable segmentations");
    double tot = 0.0;
    for (std::size_t j = 0; j < hat_bases.size(); ++j) {
        const mat& ah = hat_bases[j];
        const mat& at = truth_bases[j];
        if (ah.rows() != at.rows() || ah.cols() != at.cols())
            throw validation_error("metric_D1: incomparable segmentations");
        const int k = static_cast<int>(at.cols());
        Eigen::HouseholderQR<mat> qh(ah), qt(at);
        mat quh = qh.householderQ() * mat::Identity(ah.rows(), k);
        mat qut = qt.householderQ() * mat::Identity(at.rows(), k);
        const double tr = (qut * qut.transpose() * quh * quh.transpose()).trace();
        tot += std::clamp(1.0 - tr / k, 0.0, 1.0);
    }
    return tot / static_cast<double>(hat_bases.size());
}

const char* partition_class_name(partition_class c) {
    switch (c) {
        case partition_class::correct: return "correct";
        case partition_class::merging: return "merging";
        case partition_class::splitting: return "splitting";
        default: return "other";
    }
}

namespace {

std::vector<std::vector<int>> canon(std::vector<std::vector<int>> g) {
    for (auto& v : g) std::sort(v.begin(), v.end());
    std::sort(g.begin(), g.end());
    return g;
}

}  // namespace

partition_class classify_segmentation(const std::vector<std::vector<int>>& found,
                                      const std::vector<std::vector<int>>& truth) {
    const auto cf = canon(found);
    const auto ct = canon(truth);
    if (cf == ct) return partition_class::correct;
    const int nt = static_cast<int>(ct.size());
    if (static_cast<int>(cf.size()) == nt - 1) {
        for (int i = 0; i < nt; ++i) {
            for (int j = i + 1; j < nt; ++j) {
                std::vector<std::vector<int>> merged;
                std::vector<int> u = ct[i];
                u.insert(u.end(), ct[j].begin(), ct[j].end());
                merged.push_back(std::move(u));
                for (int k = 0; k < nt; ++k)
                    if (k != i && k != j) merged.push_back(ct[k]);
                if (canon(merged) == cf) return partition_class::merging;
            }
        }
    }
    if (static_cast<int>(cf.size()) == nt + 1) {
        // symmetric statement: truth is a pairwise merge of found
        const int nf = static_cast<int>(cf.size());
        for (int i = 0; i < nf; ++i) {
            for (int j = i + 1; j < nf; ++j) {
                std::vector<std::vector<int>> merged;
                std::vector<int> u = cf[i];
                u.insert(u.end(), cf[j].begin(), cf[j].end());
                merged.push_back(std::move(u));
                for (int k = 0; k < nf; ++k)
                    if (k != i && k != j) merged.push_back(cf[k]);
                if (canon(merged) == ct) return partition_class::splitting;
            }
        }
    }
    return partition_class::other;
}

namespace {

metric_summary summarize(const std::vector<double>& vals) {
    metric_summary s;
    double sum = 0.0;
    for (double v : vals)
        if (std::isfinite(v)) {
            sum += v;
            ++s.n;
        }
    if (s.n == 0) return s;
    s.mean = sum / s.n;
    double ss = 0.0;
    for (double v : vals)
        if (std::isfinite(v)) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / s.n);
    return s;
}

constexpr double nan_slot = std::numeric_limits<double>::quiet_NaN();

void validate_config(const replication_config& cfg) {
    if (cfg.example < 1 || cfg.example > 3)
        throw validation_error("run_replications: example must be 1, 2 or 3");
    if (cfg.reps < 1) throw validation_error("run_replications: reps must be >= 1");
    if (cfg.T < 2) throw validation_error("run_replications: T must be >= 2");
    if (cfg.example == 2 && cfg.q < 5)
        throw validation_error("run_replications: example 2 needs q >= 5");
    if (cfg.example == 3 && (cfg.p < 6 || cfg.q < 6))
        throw validation_error("run_replications: example 3 needs p, q >= 6");
    if (cfg.example == 3 && cfg.holdout < 1)
        throw validation_error("run_replications: example 3 needs holdout >= 1");
}

}  // namespace

replication_report run_replications(const replication_config& cfg) {
    validate_config(cfg);
    const auto t_start = std::chrono::steady_clock::now();
    replication_report rep;
    rep.config = cfg;
    rep.rep_seeds.resize(cfg.reps);
    for (int r = 0; r < cfg.reps; ++r) rep.rep_seeds[r] = derive_seed(cfg.seed, r);

    const int n = cfg.reps;
    std::vector<int> failed(n, 0);

    if (cfg.example == 1) {
        std::vector<double> d_a(n, nan_slot), d_b(n, nan_slot);
#pragma omp parallel for schedule(dynamic)
        for (int r = 0; r < n; ++r) {
            try {
                rng_stream rng(rep.rep_seeds[r]);
                sim_truth s = gen_example1(rng, cfg.T, cfg.p, cfg.q);
                auto [xc, mean] = center(s.x);
                auto col_w = estimation::w_estimate(xc, estimation::mode::columns,
                                                    cfg.pipeline.tau0, cfg.pipeline.f);
                auto row_w = estimation::w_estimate(xc, estimation::mode::rows, cfg.pipeline.tau0,
                                                    cfg.pipeline.f);
                auto [a_star, b_star] = transform::proxy_targets(s.a, s.b, s.u, xc);
                d_a[r] = metric_D(col_w.eig.eigenvectors, a_star);
                d_b[r] = metric_D(row_w.eig.eigenvectors, b_star);
            } catch (const std::exception&) {
                failed[r] = 1;
            }
        }
        rep.metrics["d_a"] = summarize(d_a);
        rep.metrics["d_b"] = summarize(d_b);
    } else if (cfg.example == 2) {
        std::vector<int> cls(n, -1), badref(n, 0);
        std::vector<double> d1(n, nan_slot);
#pragma omp parallel for schedule(dynamic)
        for (int r = 0; r < n; ++r) {
            try {
                rng_stream rng(rep.rep_seeds[r]);
                sim_truth s = gen_example2(rng, cfg.T, cfg.p, cfg.q);
                auto [xc, mean] = center(s.x);
                auto col_w = estimation::w_estimate(xc, estimation::mode::columns,
                                                    cfg.pipeline.tau0, cfg.pipeline.f);
                auto [a_star, b_star] = transform::proxy_targets(s.a, s.b, s.u, xc);
                (void)b_star;
                auto ref = transform::reference_partition(col_w.eig.eigenvectors, a_star,
                                                          s.col_groups);
                auto ref_sizes = [](const std::vector<std::vector<int>>& g) {
                    std::vector<int> v;
                    for (const auto& e : g) v.push_back(static_cast<int>(e.size()));
                    std::sort(v.begin(), v.end());
                    return v;
                };
                if (ref_sizes(ref.groups) != ref_sizes(s.col_groups)) badref[r] = 1;
                auto seg = segmentation::segment(xc, col_w, cfg.pipeline.tau1, cfg.pipeline.c_r,
                                                 cfg.pipeline.prewhiten, cfg.pipeline.sel,
                                                 cfg.pipeline.rho_floor);
                const partition_class c = classify_segmentation(seg.groups, ref.groups);
                cls[r] = static_cast<int>(c);
                if (c == partition_class::correct && badref[r] == 0) {
                    std::vector<mat> hat, truth;
                    bool comparable = true;
                    for (const auto& g : ref.groups) {
                        const int j = ref.assignment[g[0]];
                        if (g.size() != s.col_groups[j].size()) comparable = false;
                        mat ah(cfg.q, static_cast<int>(g.size()));
                        for (std::size_t c2 = 0; c2 < g.size(); ++c2)
                            ah.col(static_cast<int>(c2)) = col_w.eig.eigenvectors.col(g[c2]);
                        mat at(cfg.q, static_cast<int>(s.col_groups[j].size()));
                        for (std::size_t c2 = 0; c2 < s.col_groups[j].size(); ++c2)
                            at.col(static_cast<int>(c2)) = a_star.col(s.col_groups[j][c2]);
                        hat.push_back(std::move(ah));
                        truth.push_back(std::move(at));
                    }
                    if (comparable) d1[r] = metric_D1(hat, truth);
                }
            } catch (const std::exception&) {
                failed[r] = 1;
            }
        }
        int counts[4] = {0, 0, 0, 0};
        int nbad = 0, nok = 0;
        for (int r = 0; r < n; ++r) {
            if (failed[r] || cls[r] < 0) continue;
            ++nok;
            ++counts[cls[r]];
            nbad += badref[r];
        }
        const double den = nok > 0 ? static_cast<double>(nok) : 1.0;
        rep.rates["correct"] = counts[0] / den;
        rep.rates["merging"] = counts[1] / den;
        rep.rates["splitting"] = counts[2] / den;
        rep.rates["other"] = counts[3] / den;
        rep.rates["badref"] = nbad / den;
        rep.metrics["d1"] = summarize(d1);
    } else {
        const char* names[5] = {"seg", "o1", "o2", "var", "mar"};
        std::vector<std::vector<double>> mses(5, std::vector<double>(n, nan_slot));
#pragma omp parallel for schedule(dynamic)
        for (int r = 0; r < n; ++r) {
            try {
                rng_stream rng(rep.rep_seeds[r]);
                sim_truth s = gen_example3(rng, cfg.T, cfg.p, cfg.q, cfg.holdout);
                forecasting::oracle_info oracle;
                oracle.a = s.a;
                oracle.b = s.b;
                oracle.u = &s.u;
                oracle.col_groups = s.col_groups;
                oracle.row_groups = s.row_groups;
                using forecasting::oracle_kind;
                using forecasting::scheme_kind;
                mses[0][r] = forecasting::rolling_backtest(s.x, cfg.holdout, 1,
                                                           scheme_kind::refit_each_step,
                                                           cfg.pipeline, &s.cond_mean)
                                 .mse;
                mses[1][r] = forecasting::rolling_backtest(
                                 s.x, cfg.holdout, 1, scheme_kind::refit_each_step, cfg.pipeline,
                                 &s.cond_mean, oracle_kind::o1, &oracle)
                                 .mse;
                mses[2][r] = forecasting::rolling_backtest(
                                 s.x, cfg.holdout, 1, scheme_kind::refit_each_step, cfg.pipeline,
                                 &s.cond_mean, oracle_kind::o2, &oracle)
                                 .mse;
                mses[3][r] = forecasting::baseline_forecasts(
                                 s.x, cfg.holdout, 1, forecasting::baseline_kind::var1_stacked,
                                 &s.cond_mean)
                                 .mse;
                mses[4][r] = forecasting::baseline_forecasts(
                                 s.x, cfg.holdout, 1, forecasting::baseline_kind::mar1_direct,
                                 &s.cond_mean)
                                 .mse;
            } catch (const std::exception&) {
                failed[r] = 1;
            }
        }
        for (int m = 0; m < 5; ++m) {
            rep.metrics[std::string("mse_") + names[m]] = summarize(mses[m]);
            std::vector<double> rmse(n, nan_slot);
            for (int r = 0; r < n; ++r)
                if (std::isfinite(mses[m][r])) rmse[r] = std::sqrt(mses[m][r]);
            rep.metrics[std::string("rmse_") + names[m]] = summarize(rmse);
        }
    }

    for (int r = 0; r < n; ++r) rep.failures += failed[r];
    rep.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return rep;
}

}  // namespace matseg::simgen
