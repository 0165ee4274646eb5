#pragma once

#include "matseg/estimation.hpp"

#include <map>

namespace matseg::segmentation {

using estimation::mode;
using estimation::w_estimate_result;

struct correlation_table {
    int d = 0;     // number of candidate columns
    int tau1 = 0;  // lag window
    bool prewhitened = false;
    bool warning = false;  // some pair had every (i, j) combination skipped
    std::map<std::pair<int, int>, double> rho;  // unordered pair (k < l), 0-based

    double at(int k, int l) const;
    // pairs ordered by value descending, then by pair key ascending
    std::vector<std::pair<std::pair<int, int>, double>> sorted_pairs() const;
};

struct edge {
    int k = 0, l = 0;
    double rho = 0.0;
};

struct selector {
    enum class kind { ratio, threshold };
    kind k = kind::ratio;
    double rho0 = 0.5;

    static selector ratio() { return {}; }
    static selector threshold(double rho0);
};

struct grouping {
    std::vector<std::vector<int>> groups;  // sorted by smallest member, ascending inside
    std::vector<int> permutation;          // groups laid out contiguously
};

struct segmentation_result {
    mode m = mode::columns;
    std::vector<int> permutation;
    std::vector<std::vector<int>> groups;
    int r_hat = 0;
    std::vector<edge> edges;
    int n_groups = 0;
    std::vector<double> ratios;  // rho_(j) / rho_(j+1) for j = 1..q0-1
    correlation_table table;
    bool floor_triggered = false;  // ratio argmax discarded at the absolute rho floor
};

struct prewhiten_result {
    std::vector<double> z;
    int order = 0;
    bool warning = false;  // degenerate input returned unchanged
};

// Z_t = X_t * Sigma^{-1/2} * Gamma (Rows mode applies the same map to X_t^T)
matrix_series transformed_columns(const matrix_series& x, const w_estimate_result& w);

// AR(k) residuals, k = 0..max_order chosen by AIC = T log(sigma^2) + 2k;
// order 0 returns the centered series, degenerate input returns unchanged
prewhiten_result prewhiten(const std::vector<double>& z, int max_order = 5);

// max over component rows and |tau| <= tau1 of the absolute sample
// cross-correlation between columns k and l (0-based, k < l)
double max_cross_corr(const matrix_series& z, int k, int l, int tau1, bool* all_skipped = nullptr);

// full table; prewhitened residuals are right-aligned to the shortest common
// length before any moment is computed
correlation_table corr_table(const matrix_series& z, int tau1, bool prewhiten_flag);

// argmax over j <= floor(c_r * q0) of rho_(j)/rho_(j+1), smallest j on ties
int ratio_select(const std::vector<double>& rho_sorted, double c_r = 0.75,
                 std::vector<double>* ratios_out = nullptr);

std::vector<edge> threshold_select(const correlation_table& table, double rho0);

// connected components via union-find; groups sorted by smallest member
grouping group_columns(int d, const std::vector<edge>& edges);

segmentation_result segment(const matrix_series& x, const w_estimate_result& w, int tau1 = 15,
                            double c_r = 0.75, bool prewhiten_flag = true, selector sel = {},
                            double rho_floor = 0.05);

}  // namespace matseg::segmentation
