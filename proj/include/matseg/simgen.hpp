#pragma once

#include "matseg/forecasting.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>

namespace matseg::simgen {

inline constexpr int burn_in = 200;

// splitmix64 counter RNG with a hand-rolled Box-Muller normal so that streams
// are bit-reproducible across platforms and standard-library versions
class rng_stream {
public:
    explicit rng_stream(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next_u64();
    double uniform();  // [0, 1)
    double uniform(double lo, double hi);
    double normal();
    double two_sided(double lo, double hi);  // magnitude U(lo, hi), random sign

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// independent per-replication stream seeds from one master seed
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t k);

// z_t = b z_{t-1} + eps_t + a1 eps_{t-1} + a2 eps_{t-2}, burn-in discarded
std::vector<double> gen_arma12_with(rng_stream& rng, int n, double b, double a1, double a2);
// coefficients b ~ +-U(0.5, 0.98), a1, a2 ~ +-U(0.3, 0.98)
std::vector<double> gen_arma12(rng_stream& rng, int n);

// n x n U(-1,1) entries, redrawn until condition number < cap
mat rand_matrix_cond(rng_stream& rng, int n, double cap = 1e8);
// QR of a Gaussian matrix with the R-diagonal sign fix
mat rand_orthogonal(rng_stream& rng, int n);

// exact latent dynamics of one generated block
struct latent_block {
    std::vector<int> rows, cols;
    forecasting::model_kind kind = forecasting::model_kind::ar1;
    double lambda = 0.0;  // mar
    mat p1, p2;           // mar orthogonal factors
    mat coeff;            // var
    double phi = 0.0;     // ar
    mat step(const mat& last) const;  // one-step conditional mean of the block
};

struct sim_truth {
    matrix_series x;  // observed series (length T + holdout for design 3)
    matrix_series u;  // latent series, same length
    mat a, b;
    std::vector<std::vector<int>> col_groups, row_groups;
    std::vector<latent_block> blocks;  // empty when dynamics are not block-structured
    matrix_series cond_mean;           // holdout-step conditional means (design 3)
    std::uint64_t seed = 0;

    mat latent_one_step(const mat& u_last) const;  // blockwise conditional mean
    mat cond_mean_of(const mat& u_last) const;     // B f(U) A^T
};

// independent ARMA(1,2) latent entries, dense mixing; all groups singletons
sim_truth gen_example1(rng_stream& rng, int T, int p, int q);
// column-only mixing with lagged-copy column blocks {0,1,2}, {3,4}; B = I
sim_truth gen_example2(rng_stream& rng, int T, int p, int q);
// blockwise MAR/VAR/AR latent dynamics; holdout extra steps with exact
// conditional means
sim_truth gen_example3(rng_stream& rng, int T, int p, int q, int holdout = 0);

// D(a_hat, a_star) in [0,1]; zero column/row in the product caps at 1 with a
// warning
double metric_D(const mat& a_hat, const mat& a_star, bool* degenerate = nullptr);
// D1 over matched block bases (thin-QR orthonormalized projectors)
double metric_D1(const std::vector<mat>& hat_bases, const std::vector<mat>& truth_bases);

enum class partition_class { correct, merging, splitting, other };
const char* partition_class_name(partition_class c);
partition_class classify_segmentation(const std::vector<std::vector<int>>& found,
                                      const std::vector<std::vector<int>>& truth);

struct replication_config {
    int example = 1;  // 1 | 2 | 3
    int T = 1000;
    int p = 4, q = 4;
    int reps = 200;
    std::uint64_t seed = 1234;
    int holdout = 10;  // design 3 forecasting steps
    transform::pipeline_config pipeline;
};

struct metric_summary {
    double mean = 0.0, sd = 0.0;  // population sd
    int n = 0;
};

struct replication_report {
    replication_config config;
    std::map<std::string, metric_summary> metrics;
    std::map<std::string, double> rates;  // design 2 classification frequencies
    std::vector<std::uint64_t> rep_seeds;
    int failures = 0;
    double seconds = 0.0;
};

// Monte-Carlo driver; parallel over replications, aggregation order fixed
replication_report run_replications(const replication_config& cfg);

}  // namespace matseg::simgen
