#include "matseg/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace matseg::segmentation {

double correlation_table::at(int k, int l) const {
    if (k > l) std::swap(k, l);
    auto it = rho.find({k, l});
    if (it == rho.end()) throw validation_error("correlation_table: pair out of range");
    return it->second;
}

std::vector<std::pair<std::pair<int, int>, double>> correlation_table::sorted_pairs() const {
    std::vector<std::pair<std::pair<int, int>, double>> out(rho.begin(), rho.end());
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return out;
}

selector selector::threshold(double rho0) {
    if (!(rho0 > 0.0 && rho0 < 1.0)) throw validation_error("selector: need 0 < rho0 < 1");
    selector s;
    s.k = kind::threshold;
    s.rho0 = rho0;
    return s;
}

matrix_series transformed_columns(const matrix_series& x, const w_estimate_result& w) {
    const matrix_series src = (w.m == mode::rows) ? x.transposed() : x;
    const mat map = w.sigma_inv_sqrt * w.eig.eigenvectors;
    if (src.q() != static_cast<int>(map.rows()))
        throw validation_error("transformed_columns: dimension mismatch");
    matrix_series z;
    z.label = src.label;
    z.values.reserve(src.values.size());
    for (const auto& v : src.values) z.values.push_back(v * map);
    return z;
}

prewhiten_result prewhiten(const std::vector<double>& z, int max_order) {
    const int T = static_cast<int>(z.size());
    if (max_order < 0) throw validation_error("prewhiten: max_order must be >= 0");
    if (T <= 2 * max_order + 2) throw validation_error("prewhiten: series too short for max_order");
    Eigen::Map<const vec> zm(z.data(), T);
    vec zc = zm.array() - zm.mean();
    const double v0 = zc.squaredNorm() / T;
    if (v0 <= 1e-14) return {z, 0, true};  // degenerate: unchanged

    double best_aic = T * std::log(v0);
    int best_k = 0;
    vec best_res = zc;
    for (int k = 1; k <= max_order; ++k) {
        const int n = T - k;
        mat X(n, k);
        for (int j = 0; j < k; ++j) X.col(j) = zc.segment(k - j - 1, n);
        const vec y = zc.tail(n);
        const vec beta = X.colPivHouseholderQr().solve(y);
        const vec r = y - X * beta;
        const double s2 = std::max(r.squaredNorm() / n, 1e-300);
        const double aic = T * std::log(s2) + 2.0 * k;
        if (aic < best_aic) {
            best_aic = aic;
            best_k = k;
            best_res = r;
        }
    }
    return {std::vector<double>(best_res.data(), best_res.data() + best_res.size()), best_k, false};
}

double max_cross_corr(const matrix_series& z, int k, int l, int tau1, bool* all_skipped) {
    const int T = z.T(), p = z.p(), q = z.q();
    if (k < 0 || l < 0 || k >= l || l >= q) throw validation_error("max_cross_corr: need 0 <= k < l < q");
    if (tau1 < 0 || 2 * tau1 >= T) throw validation_error("max_cross_corr: need tau1 < T/2");
    if (all_skipped) *all_skipped = false;

    auto standardized = [&](int col) {
        std::vector<std::pair<vec, bool>> out(static_cast<size_t>(p));
        for (int i = 0; i < p; ++i) {
            vec s(T);
            for (int t = 0; t < T; ++t) s[t] = z.values[t](i, col);
            const double mu = s.mean();
            s.array() -= mu;
            const double v = s.squaredNorm() / T;
            if (v > 1e-14)
                out[static_cast<size_t>(i)] = {s / std::sqrt(v), true};
            else
                out[static_cast<size_t>(i)] = {vec::Zero(T), false};
        }
        return out;
    };
    const auto a = standardized(k), b = standardized(l);

    double best = 0.0;
    bool any = false;
    for (int i = 0; i < p; ++i) {
        if (!a[static_cast<size_t>(i)].second) continue;
        for (int j = 0; j < p; ++j) {
            if (!b[static_cast<size_t>(j)].second) continue;
            any = true;
            const vec& ai = a[static_cast<size_t>(i)].first;
            const vec& bj = b[static_cast<size_t>(j)].first;
            for (int tau = 0; tau <= tau1; ++tau) {
                const int m = T - tau;
                const double c1 = ai.tail(m).dot(bj.head(m)) / m;  // a leads b by tau
                const double c2 = bj.tail(m).dot(ai.head(m)) / m;  // b leads a by tau
                best = std::max({best, std::abs(c1), std::abs(c2)});
            }
        }
    }
    if (!any) {
        if (all_skipped) *all_skipped = true;
        return 0.0;
    }
    return std::min(best, 1.0);
}

correlation_table corr_table(const matrix_series& z, int tau1, bool prewhiten_flag) {
    const int T = z.T(), p = z.p(), q = z.q();
    if (tau1 < 0) throw validation_error("corr_table: tau1 must be >= 0");
    correlation_table out;
    out.d = q;
    out.tau1 = tau1;
    out.prewhitened = prewhiten_flag;
    if (q < 2) return out;

    // one scalar series per (row, column) cell, optionally prewhitened
    const int nser = p * q;
    std::vector<std::vector<double>> resid(static_cast<size_t>(nser));
#pragma omp parallel for schedule(static)
    for (int idx = 0; idx < nser; ++idx) {
        const int i = idx / q, k = idx % q;
        std::vector<double> s(static_cast<size_t>(T));
        for (int t = 0; t < T; ++t) s[static_cast<size_t>(t)] = z.values[t](i, k);
        resid[static_cast<size_t>(idx)] = prewhiten_flag ? prewhiten(s).z : std::move(s);
    }
    size_t minlen = resid.front().size();
    for (const auto& r : resid) minlen = std::min(minlen, r.size());
    const int n = static_cast<int>(minlen);
    if (tau1 >= n) throw validation_error("corr_table: series too short for tau1");

    // right-align to the common length and standardize each row
    mat A = mat::Zero(nser, n);
    std::vector<char> ok(static_cast<size_t>(nser), 0);
    for (int idx = 0; idx < nser; ++idx) {
        const auto& r = resid[static_cast<size_t>(idx)];
        Eigen::Map<const vec> rr(r.data() + (r.size() - minlen), n);
        const double mu = rr.mean();
        const double v = (rr.array() - mu).matrix().squaredNorm() / n;
        if (v > 1e-14) {
            A.row(idx) = (rr.array() - mu) / std::sqrt(v);
            ok[static_cast<size_t>(idx)] = 1;
        }
    }

    // best[a][b] = max over lags (both signs) of |corr(row a, row b)|
    mat best = mat::Zero(nser, nser);
    for (int tau = 0; tau <= tau1; ++tau) {
        const int m = n - tau;
        const mat c = (A.rightCols(m) * A.leftCols(m).transpose()) / static_cast<double>(m);
        best = best.cwiseMax(c.cwiseAbs()).cwiseMax(c.transpose().cwiseAbs());
    }

    for (int k = 0; k < q; ++k)
        for (int l = k + 1; l < q; ++l) {
            double val = -1.0;
            for (int i = 0; i < p; ++i) {
                if (!ok[static_cast<size_t>(i * q + k)]) continue;
                for (int j = 0; j < p; ++j) {
                    if (!ok[static_cast<size_t>(j * q + l)]) continue;
                    val = std::max(val, best(i * q + k, j * q + l));
                }
            }
            if (val < 0.0) {
                out.warning = true;
                val = 0.0;
            }
            out.rho[{k, l}] = std::min(val, 1.0);
        }
    return out;
}

int ratio_select(const std::vector<double>& rho_sorted, double c_r, std::vector<double>* ratios_out) {
    if (rho_sorted.empty()) throw validation_error("ratio_select: empty input");
    const int q0 = static_cast<int>(rho_sorted.size());
    if (ratios_out) {
        ratios_out->clear();
        for (int j = 1; j < q0; ++j)
            ratios_out->push_back(rho_sorted[static_cast<size_t>(j - 1)] /
                                  std::max(rho_sorted[static_cast<size_t>(j)], 1e-12));
    }
    const int jmax = std::min(static_cast<int>(std::floor(c_r * q0)), q0 - 1);
    if (jmax < 1) return 0;
    int best_j = 1;
    double best = -1.0;
    for (int j = 1; j <= jmax; ++j) {
        const double r = rho_sorted[static_cast<size_t>(j - 1)] /
                         std::max(rho_sorted[static_cast<size_t>(j)], 1e-12);
        if (r > best + 1e-15) {  // strict improvement keeps the smallest j on ties
            best = r;
            best_j = j;
        }
    }
    return best_j;
}

std::vector<edge> threshold_select(const correlation_table& table, double rho0) {
    if (!(rho0 > 0.0 && rho0 < 1.0)) throw validation_error("threshold_select: need 0 < rho0 < 1");
    std::vector<edge> out;
    for (const auto& [pair, value] : table.rho)
        if (value >= rho0) out.push_back({pair.first, pair.second, value});
    return out;
}

grouping group_columns(int d, const std::vector<edge>& edges) {
    if (d < 0) throw validation_error("group_columns: d must be >= 0");
    std::vector<int> parent(static_cast<size_t>(d));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int a) {
        while (parent[static_cast<size_t>(a)] != a) {
            parent[static_cast<size_t>(a)] = parent[static_cast<size_t>(parent[static_cast<size_t>(a)])];
            a = parent[static_cast<size_t>(a)];
        }
        return a;
    };
    for (const auto& e : edges) {
        if (e.k < 0 || e.k >= d || e.l < 0 || e.l >= d)
            throw validation_error("group_columns: edge endpoint out of range");
        const int ra = find(e.k), rb = find(e.l);
        if (ra != rb) parent[static_cast<size_t>(std::max(ra, rb))] = std::min(ra, rb);
    }
    grouping g;
    std::map<int, std::vector<int>> by_root;
    for (int i = 0; i < d; ++i) by_root[find(i)].push_back(i);
    for (auto& [root, members] : by_root) g.groups.push_back(std::move(members));
    for (const auto& grp : g.groups)
        for (int i : grp) g.permutation.push_back(i);
    return g;
}

segmentation_result segment(const matrix_series& x, const w_estimate_result& w, int tau1, double c_r,
                            bool prewhiten_flag, selector sel, double rho_floor) {
    const matrix_series z = transformed_columns(x, w);
    const int d = z.q();
    segmentation_result res;
    res.m = w.m;
    if (d < 2) {
        res.groups = {std::vector<int>(static_cast<size_t>(d))};
        std::iota(res.groups[0].begin(), res.groups[0].end(), 0);
        res.permutation = res.groups[0];
        res.n_groups = d > 0 ? 1 : 0;
        res.table.d = d;
        res.table.tau1 = tau1;
        res.table.prewhitened = prewhiten_flag;
        return res;
    }
    res.table = corr_table(z, tau1, prewhiten_flag);
    const auto pairs = res.table.sorted_pairs();
    std::vector<double> vals;
    vals.reserve(pairs.size());
    for (const auto& pv : pairs) vals.push_back(pv.second);

    if (sel.k == selector::kind::ratio) {
        int r = ratio_select(vals, c_r, &res.ratios);
        if (r > 0 && vals[static_cast<size_t>(r - 1)] < rho_floor) {
            r = 0;
            res.floor_triggered = true;
        }
        res.r_hat = r;
        for (int i = 0; i < r; ++i)
            res.edges.push_back({pairs[static_cast<size_t>(i)].first.first,
                                 pairs[static_cast<size_t>(i)].first.second,
                                 pairs[static_cast<size_t>(i)].second});
    } else {
        res.edges = threshold_select(res.table, sel.rho0);
        res.r_hat = static_cast<int>(res.edges.size());
        ratio_select(vals, c_r, &res.ratios);  // diagnostics only
    }
    grouping g = group_columns(d, res.edges);
    res.groups = std::move(g.groups);
    res.permutation = std::move(g.permutation);
    res.n_groups = static_cast<int>(res.groups.size());
    return res;
}

}  // namespace matseg::segmentation
