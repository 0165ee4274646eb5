#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "matseg/simgen.hpp"

#include <cmath>
#include <numeric>

using namespace matseg;
using namespace matseg::simgen;

namespace {

double mean_of(const std::vector<double>& z) {
    return std::accumulate(z.begin(), z.end(), 0.0) / static_cast<double>(z.size());
}

double autocorr(const std::vector<double>& z, int lag) {
    const double m = mean_of(z);
    double num = 0.0, den = 0.0;
    const int n = static_cast<int>(z.size());
    for (int t = 0; t < n; ++t) {
        den += (z[t] - m) * (z[t] - m);
        if (t >= lag) num += (z[t] - m) * (z[t - lag] - m);
    }
    return num / den;
}

double corr(const std::vector<double>& a, const std::vector<double>& b) {
    const double ma = mean_of(a), mb = mean_of(b);
    double num = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) {
        num += (a[t] - ma) * (b[t] - mb);
        va += (a[t] - ma) * (a[t] - ma);
        vb += (b[t] - mb) * (b[t] - mb);
    }
    return num / std::sqrt(va * vb);
}

}  // namespace

TEST_CASE("rng_stream determinism and range") {
    rng_stream a(99), b(99);
    for (int i = 0; i < 1000; ++i) {
        const double u = a.uniform();
        CHECK(u == b.uniform());
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    rng_stream c(1);
    double acc = 0.0, acc2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double g = c.normal();
        acc += g;
        acc2 += g * g;
    }
    CHECK(std::abs(acc / n) < 0.01);
    CHECK(acc2 / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("two_sided magnitudes land in the band with both signs") {
    rng_stream rng(3);
    int neg = 0;
    for (int i = 0; i < 2000; ++i) {
        const double v = rng.two_sided(0.3, 0.98);
        CHECK(std::abs(v) >= 0.3);
        CHECK(std::abs(v) <= 0.98);
        if (v < 0) ++neg;
    }
    CHECK(neg > 800);
    CHECK(neg < 1200);
}

TEST_CASE("derive_seed spreads and is deterministic") {
    CHECK(derive_seed(42, 0) == derive_seed(42, 0));
    CHECK(derive_seed(42, 0) != derive_seed(42, 1));
    CHECK(derive_seed(42, 0) != derive_seed(43, 0));
}

TEST_CASE("gen_arma12 determinism and forced-coefficient autocorrelation") {
    rng_stream a(5), b(5);
    const auto z1 = gen_arma12(a, 300);
    const auto z2 = gen_arma12(b, 300);
    REQUIRE(z1.size() == 300);
    for (std::size_t i = 0; i < z1.size(); ++i) CHECK(z1[i] == z2[i]);

    rng_stream c(17);
    const auto ar = gen_arma12_with(c, 10000, 0.9, 0.0, 0.0);
    CHECK(std::abs(autocorr(ar, 1) - 0.9) < 0.03);
}

TEST_CASE("gen_arma12_with matches the analytic ARMA(1,2) variance") {
    const double b = 0.7, a1 = 0.5, a2 = 0.4;
    rng_stream rng(29);
    const auto z = gen_arma12_with(rng, 100000, b, a1, a2);
    // psi weights: psi0=1, psi1=b+a1, psi2=b*psi1+a2, psi_k=b*psi_{k-1}
    const double psi1 = b + a1, psi2 = b * psi1 + a2;
    const double var =
        1.0 + psi1 * psi1 + psi2 * psi2 / (1.0 - b * b) * 1.0;  // tail sums psi2^2 b^{2k}
    double acc = 0.0;
    const double m = mean_of(z);
    for (double v : z) acc += (v - m) * (v - m);
    const double sample_var = acc / static_cast<double>(z.size());
    CHECK(sample_var == doctest::Approx(var).epsilon(0.05));
}

TEST_CASE("rand_matrix_cond produces well-conditioned square matrices") {
    rng_stream rng(7);
    const mat m = rand_matrix_cond(rng, 5);
    const Eigen::JacobiSVD<mat> svd(m);
    CHECK(svd.singularValues()(0) / svd.singularValues()(4) < 1e8);
    CHECK(m.cwiseAbs().maxCoeff() <= 1.0);
}

TEST_CASE("rand_orthogonal is orthogonal and deterministic") {
    rng_stream rng(11);
    const mat q = rand_orthogonal(rng, 6);
    CHECK((q.transpose() * q - mat::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-12);
    rng_stream rng2(11);
    const mat q2 = rand_orthogonal(rng2, 6);
    CHECK((q - q2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gen_example1 reproducibility and shape") {
    rng_stream a(303), b(303);
    const auto t1 = gen_example1(a, 100, 3, 4);
    const auto t2 = gen_example1(b, 100, 3, 4);
    CHECK(t1.x.T() == 100);
    CHECK(t1.x.p() == 3);
    CHECK(t1.x.q() == 4);
    for (int t = 0; t < 100; ++t)
        CHECK((t1.x.values[t] - t2.x.values[t]).cwiseAbs().maxCoeff() == 0.0);
    CHECK(t1.col_groups.size() == 4);  // singletons
    CHECK(t1.row_groups.size() == 3);
    // X = B U A^T reproducible from parts exactly
    for (int t = 0; t < 100; ++t)
        CHECK((t1.x.values[t] - t1.b * t1.u.values[t] * t1.a.transpose())
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
}

TEST_CASE("gen_example2 exact lagged copies and null tail columns") {
    rng_stream rng(404);
    const auto truth = gen_example2(rng, 5000, 3, 6);
    REQUIRE(truth.col_groups.size() == 3);
    CHECK(truth.col_groups[0] == std::vector<int>{0, 1, 2});
    CHECK(truth.col_groups[1] == std::vector<int>{3, 4});
    CHECK((truth.b - mat::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);

    // U_{t,2} = U_{t+1,1} and U_{t,3} = U_{t+2,1} by construction
    const int T = truth.u.T();
    std::vector<double> c0(T - 2), c1(T - 2), c2(T - 2), c3(T - 2), c4(T - 2);
    for (int t = 0; t < T - 2; ++t) {
        c0[t] = truth.u.values[t](0, 0);
        c1[t] = truth.u.values[t](0, 1);
        c2[t] = truth.u.values[t](0, 2);
        c3[t] = truth.u.values[t](0, 3);
        c4[t] = truth.u.values[t](0, 4);
    }
    std::vector<double> c0_lead1(T - 2), c0_lead2(T - 2), c3_lead1(T - 2);
    for (int t = 0; t < T - 2; ++t) {
        c0_lead1[t] = truth.u.values[t + 1](0, 0);
        c0_lead2[t] = truth.u.values[t + 2](0, 0);
        c3_lead1[t] = truth.u.values[t + 1](0, 3);
    }
    CHECK(corr(c1, c0_lead1) == doctest::Approx(1.0));
    CHECK(corr(c2, c0_lead2) == doctest::Approx(1.0));
    CHECK(corr(c4, c3_lead1) == doctest::Approx(1.0));

    // trailing columns mutually near-uncorrelated
    std::vector<double> c5(T), c5b(T);
    for (int t = 0; t < T; ++t) {
        c5[t] = truth.u.values[t](0, 5);
        c5b[t] = truth.u.values[t](1, 5);
    }
    CHECK(std::abs(corr(c5, c5b)) < 0.2);
    CHECK_THROWS_AS(gen_example2(rng, 100, 3, 4), validation_error);
}

TEST_CASE("gen_example3 block dynamics match the declared conditional mean") {
    rng_stream rng(505);
    const auto truth = gen_example3(rng, 300, 6, 6, 5);
    CHECK(truth.x.T() == 305);
    CHECK(truth.cond_mean.T() == 5);
    REQUIRE(!truth.blocks.empty());

    // the (rows 0-2, cols 0-2) block is MAR with lambda = 0.81
    const auto& blk = truth.blocks.front();
    CHECK(blk.kind == forecasting::model_kind::mar1);
    CHECK(blk.lambda == doctest::Approx(0.81));
    CHECK((blk.p1.transpose() * blk.p1 - mat::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);

    // declared cond_mean equals B f(U_last) A^T recomputed by hand
    for (int i = 0; i < 5; ++i) {
        const mat& u_last = truth.u.values[300 + i - 1];
        const mat mu = truth.cond_mean_of(u_last);
        CHECK((truth.cond_mean.values[i] - mu).cwiseAbs().maxCoeff() == 0.0);
    }

    // blockwise one-step map agrees with latent_one_step
    const mat& ul = truth.u.values[299];
    const mat stepped = truth.latent_one_step(ul);
    mat manual = mat::Zero(6, 6);
    for (const auto& b : truth.blocks) {
        mat sub(b.rows.size(), b.cols.size());
        for (std::size_t r = 0; r < b.rows.size(); ++r)
            for (std::size_t c = 0; c < b.cols.size(); ++c) sub(r, c) = ul(b.rows[r], b.cols[c]);
        const mat out = b.step(sub);
        for (std::size_t r = 0; r < b.rows.size(); ++r)
            for (std::size_t c = 0; c < b.cols.size(); ++c) manual(b.rows[r], b.cols[c]) = out(r, c);
    }
    CHECK((stepped - manual).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(gen_example3(rng, 100, 4, 6), validation_error);
}

TEST_CASE("gen_example3 burn-in leaves the series stationary") {
    rng_stream rng(606);
    const auto truth = gen_example3(rng, 4000, 6, 6);
    // compare first-half and second-half variances of the strongest block cell
    double v1 = 0.0, v2 = 0.0;
    for (int t = 0; t < 2000; ++t) v1 += truth.u.values[t](0, 0) * truth.u.values[t](0, 0);
    for (int t = 2000; t < 4000; ++t) v2 += truth.u.values[t](0, 0) * truth.u.values[t](0, 0);
    CHECK(v1 / v2 > 0.8);
    CHECK(v1 / v2 < 1.25);
}

TEST_CASE("metric_D permutation cases and bounds") {
    rng_stream rng(808);
    const mat q = rand_orthogonal(rng, 4);
    CHECK(metric_D(q, q) == doctest::Approx(0.0).epsilon(1e-12));

    // signed column permutation: swap two columns, flip a sign
    mat perm = q;
    perm.col(0) = q.col(2);
    perm.col(2) = -q.col(0);
    CHECK(metric_D(perm, q) == doctest::Approx(0.0).epsilon(1e-12));

    // Hadamard case: every |entry| of the product is exactly 1/2 = 1/sqrt(4)
    mat h(4, 4);
    h << 1, 1, 1, 1, 1, -1, 1, -1, 1, 1, -1, -1, 1, -1, -1, 1;
    const mat a_hat = 0.5 * h;  // orthonormal
    CHECK(metric_D(a_hat, mat::Identity(4, 4)) == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(metric_D(mat::Identity(3, 3), mat::Identity(4, 4)), validation_error);
    bool degenerate = false;
    const double capped = metric_D(mat::Zero(3, 3), mat::Identity(3, 3), &degenerate);
    CHECK(capped == 1.0);
    CHECK(degenerate);
}

TEST_CASE("metric_D1 projector identities") {
    rng_stream rng(909);
    const mat q = rand_orthogonal(rng, 5);
    std::vector<mat> truth = {q.leftCols(3), q.rightCols(2)};
    CHECK(metric_D1(truth, truth) == doctest::Approx(0.0).epsilon(1e-12));

    // within-block rotation leaves the projectors unchanged
    const mat r = rand_orthogonal(rng, 3);
    std::vector<mat> rotated = {q.leftCols(3) * r, q.rightCols(2)};
    CHECK(metric_D1(rotated, truth) == doctest::Approx(0.0).epsilon(1e-12));

    // fully orthogonal-complement bases score 1 (disjoint spans in both groups)
    const mat q6 = rand_orthogonal(rng, 6);
    std::vector<mat> compl2 = {q6.rightCols(3), q6.leftCols(3)};
    std::vector<mat> truth2 = {q6.leftCols(3), q6.rightCols(3)};
    CHECK(metric_D1(compl2, truth2) == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<mat> wrong = {q.leftCols(2), q.rightCols(2)};
    CHECK_THROWS_AS(metric_D1(wrong, truth), validation_error);
    CHECK_THROWS_AS(metric_D1({q.leftCols(3)}, truth), validation_error);
}

TEST_CASE("classify_segmentation truth table") {
    const std::vector<std::vector<int>> truth = {{0, 1, 2}, {3, 4}, {5}};
    using pc = partition_class;
    CHECK(classify_segmentation({{0, 1, 2}, {3, 4}, {5}}, truth) == pc::correct);
    CHECK(classify_segmentation({{5}, {3, 4}, {0, 1, 2}}, truth) == pc::correct);
    CHECK(classify_segmentation({{0, 1, 2, 3, 4}, {5}}, truth) == pc::merging);
    CHECK(classify_segmentation({{0, 1, 2, 5}, {3, 4}}, truth) == pc::merging);
    CHECK(classify_segmentation({{0, 1}, {2}, {3, 4}, {5}}, truth) == pc::splitting);
    CHECK(classify_segmentation({{0}, {1, 2}, {3, 4}, {5}}, truth) == pc::splitting);
    CHECK(classify_segmentation({{0, 1, 2, 3, 4, 5}}, truth) == pc::other);
    CHECK(classify_segmentation({{0, 1, 3}, {2, 4}, {5}}, truth) == pc::other);
    CHECK(classify_segmentation({{0, 1}, {2, 3, 4}, {5}}, truth) == pc::other);
}

TEST_CASE("run_replications single-rep report and determinism") {
    replication_config cfg;
    cfg.example = 1;
    cfg.T = 200;
    cfg.p = cfg.q = 3;
    cfg.reps = 1;
    cfg.seed = 71;
    const auto rep = run_replications(cfg);
    CHECK(rep.failures == 0);
    REQUIRE(rep.rep_seeds.size() == 1);
    CHECK(rep.rep_seeds[0] == derive_seed(71, 0));
    CHECK(rep.metrics.at("d_a").n == 1);
    CHECK(rep.metrics.at("d_a").sd == 0.0);

    const auto rep2 = run_replications(cfg);
    CHECK(rep.metrics.at("d_a").mean == rep2.metrics.at("d_a").mean);
    CHECK(rep.metrics.at("d_b").mean == rep2.metrics.at("d_b").mean);
}

TEST_CASE("run_replications example-2 rates sum to one") {
    replication_config cfg;
    cfg.example = 2;
    cfg.T = 300;
    cfg.p = 3;
    cfg.q = 6;
    cfg.reps = 25;
    cfg.seed = 404;
    const auto rep = run_replications(cfg);
    const double sum = rep.rates.at("correct") + rep.rates.at("merging") +
                       rep.rates.at("splitting") + rep.rates.at("other");
    CHECK(sum == doctest::Approx(1.0));
    CHECK(rep.failures == 0);
}

TEST_CASE("run_replications validates its configuration") {
    replication_config cfg;
    cfg.example = 4;
    CHECK_THROWS_AS(run_replications(cfg), validation_error);
    cfg.example = 2;
    cfg.q = 4;
    CHECK_THROWS_AS(run_replications(cfg), validation_error);
    cfg.example = 3;
    cfg.q = 6;
    cfg.p = 5;
    CHECK_THROWS_AS(run_replications(cfg), validation_error);
}
