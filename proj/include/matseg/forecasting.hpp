#pragma once

#include "matseg/transform.hpp"

namespace matseg::forecasting {

enum class model_kind { ar1, var1, mar1 };

const char* model_kind_name(model_kind k);

// per-block dynamic model; AR(1) for 1x1 blocks, VAR(1) when exactly one
// dimension is 1, MAR(1) when both exceed 1
struct block_model {
    model_kind kind = model_kind::ar1;
    int rows = 1, cols = 1;
    double phi = 0.0;  // ar1
    mat coeff;         // var1: d x d over the row-major vectorized block
    mat phi1, phi2;    // mar1, scaled so ||phi1||_F = sqrt(rows)
    mat intercept;     // rows x cols block mean
    bool warning = false;
    bool converged = true;                // mar1 ALS flag
    std::vector<double> objective_trace;  // mar1 ALS objective per iteration
};

model_kind model_for_block(int rows, int cols);

// phi = sum z_t z_{t-1} / sum z_{t-1}^2 after centering, |phi| clamped to 0.999
block_model fit_ar1(const std::vector<double>& z);

// least-squares VAR(1) on the rows of a T x d matrix; ridge 1e-8 * trace is
// added only when the Gram matrix is near singular.  d = 1 collapses to fit_ar1.
block_model fit_var1(const mat& series);

// alternating least squares for U_t = phi1 U_{t-1} phi2^T + E_t
block_model fit_mar1(const matrix_series& u);

// dispatch on block shape
block_model fit_block(const matrix_series& block);

// apply the fitted one-step map h times to the centered block, re-add the mean
mat forecast_block(const block_model& m, const mat& last, int h);

// forecast every (row group x column group) block of the latent series
mat forecast_matrix(const matrix_series& u, const std::vector<std::vector<int>>& row_groups,
                    const std::vector<std::vector<int>>& col_groups, int h = 1);

enum class scheme_kind { refit_each_step, fixed_transform };
enum class oracle_kind { none, o1, o2 };

// ground-truth handles for the oracle baselines (simulation only)
struct oracle_info {
    mat a, b;                          // generator mixing matrices
    const matrix_series* u = nullptr;  // latent series covering the full sample
    std::vector<std::vector<int>> col_groups, row_groups;
};

struct forecast_report {
    int horizon = 1;
    std::vector<mat> predictions;
    double mse = 0.0;
    mat per_cell_errors;  // per-cell root mean squared error
    std::vector<double> per_step_mse;
    std::string scheme;      // "refit" | "fixed"
    std::string truth_kind;  // "realized" | "conditional-mean"
    std::string method;
};

// rolling-origin forecasts over the last `holdout` observations.  refit
// re-estimates the transform and segmentation on every window; fixed reuses
// the training-window transform and refits only the block models.  When
// cond_mean_truth is given (h = 1, simulation) errors are measured against it
// instead of the realized values.  The oracle variants re-estimate per window
// exactly like refit but substitute ground-truth blocks (o1) or ground-truth
// transforms and true blocks (o2).
forecast_report rolling_backtest(const matrix_series& x, int holdout, int h, scheme_kind scheme,
                                 const transform::pipeline_config& cfg,
                                 const matrix_series* cond_mean_truth = nullptr,
                                 oracle_kind oracle = oracle_kind::none,
                                 const oracle_info* truth = nullptr);

enum class baseline_kind { mar1_direct, var1_stacked, ar1_per_cell };

const char* baseline_kind_name(baseline_kind k);

// same rolling protocol without the transform
forecast_report baseline_forecasts(const matrix_series& x, int holdout, int h, baseline_kind kind,
                                   const matrix_series* cond_mean_truth = nullptr);

}  // namespace matseg::forecasting
