#pragma once

#include "matseg/segmentation.hpp"
#include "matseg/simgen.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>

namespace matseg::io {

inline constexpr const char* schema_version = "matseg/1";

// fully resolved run parameters; echoed into every output document
struct run_config {
    std::string design = "example1";
    int T = 1000;
    int p = 4, q = 4;
    std::uint64_t seed = 1234;
    int reps = 200;
    int holdout = 10;
    int horizon = 1;
    std::string scheme = "fixed";            // refit | fixed
    int tau0 = 5;
    int tau1 = 15;
    double c_r = 0.75;
    double rho_floor = 0.05;
    bool prewhiten = true;
    std::string selector = "ratio";          // ratio | threshold:<rho0>
    std::string eig_transform = "identity";  // identity | log1p | power:<alpha>
    std::string input, output;

    segmentation::selector make_selector() const;
    estimation::eig_transform make_eig_transform() const;
    transform::pipeline_config pipeline() const;
};

nlohmann::json config_to_json(const run_config& cfg);
// accepts any subset of the config keys; unknown keys are rejected
void apply_json_overrides(run_config& cfg, const nlohmann::json& overrides);

// {"schema": ..., "config": ...} skeleton for output documents
nlohmann::json report_skeleton(const run_config& cfg);

nlohmann::json mat_to_json(const mat& m);  // row-major {rows, cols, data}
mat mat_from_json(const nlohmann::json& j);
nlohmann::json groups_to_json(const std::vector<std::vector<int>>& groups);  // 1-based

nlohmann::json to_json(const estimation::w_estimate_result& w);
nlohmann::json to_json(const segmentation::segmentation_result& seg);
nlohmann::json to_json(const transform::transform_pair& tp);
transform::transform_pair transform_pair_from_json(const nlohmann::json& j);
nlohmann::json to_json(const forecasting::forecast_report& rep);
nlohmann::json to_json(const simgen::replication_report& rep);  // timing excluded

// long-format CSV "t,row,col,value" with 1-based indices, any row order on
// read, every cell required exactly once
matrix_series read_series_csv(const std::string& path);
void write_series_csv(const std::string& path, const matrix_series& x);

// per-metric summary lines mirroring the simulation tables
std::string replication_csv(const simgen::replication_report& rep);
// per-step and weekly-block mean squared error tables
std::string forecast_steps_csv(const forecasting::forecast_report& rep);
std::string forecast_weekly_csv(const forecasting::forecast_report& rep, int block = 7);
// predictions in the long CSV format, one block per step
std::string predictions_csv(const forecasting::forecast_report& rep);

void write_json_file(const std::string& path, const nlohmann::json& doc);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace matseg::io
