#include "matseg/io.hpp"

#include <CLI11.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <iostream>

namespace {

using namespace matseg;
using nlohmann::json;

std::string sidecar(const std::string& path, const std::string& tag) {
    const std::string ext = ".csv";
    if (path.size() > ext.size() && path.compare(path.size() - ext.size(), ext.size(), ext) == 0)
        return path.substr(0, path.size() - ext.size()) + tag;
    const std::string jext = ".json";
    if (path.size() > jext.size() &&
        path.compare(path.size() - jext.size(), jext.size(), jext) == 0)
        return path.substr(0, path.size() - jext.size()) + tag;
    return path + tag;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw validation_error(path + ": " + e.what());
    }
}

void require_output(const io::run_config& cfg) {
    if (cfg.output.empty()) throw validation_error("--output is required");
}

void require_input(const io::run_config& cfg) {
    if (cfg.input.empty()) throw validation_error("--input is required");
}

simgen::sim_truth make_design(const io::run_config& cfg) {
    simgen::rng_stream rng(cfg.seed);
    simgen::sim_truth s;
    if (cfg.design == "example1") s = simgen::gen_example1(rng, cfg.T, cfg.p, cfg.q);
    else if (cfg.design == "example2") s = simgen::gen_example2(rng, cfg.T, cfg.p, cfg.q);
    else if (cfg.design == "example3")
        s = simgen::gen_example3(rng, cfg.T, cfg.p, cfg.q, cfg.holdout);
    else throw validation_error("unknown design '" + cfg.design + "'");
    s.seed = cfg.seed;
    return s;
}

void cmd_simulate(const io::run_config& cfg, const std::string& truth_path,
                  const std::string& latent_path) {
    require_output(cfg);
    simgen::sim_truth s = make_design(cfg);
    io::write_series_csv(cfg.output, s.x);
    std::cout << "wrote " << cfg.output << " (T=" << s.x.T() << ", p=" << s.x.p()
              << ", q=" << s.x.q() << ")\n";
    if (cfg.design == "example3") {
        const std::string path = sidecar(cfg.output, ".cond_mean.csv");
        io::write_series_csv(path, s.cond_mean);
        std::cout << "wrote " << path << "\n";
    }
    if (!latent_path.empty()) {
        io::write_series_csv(latent_path, s.u);
        std::cout << "wrote " << latent_path << "\n";
    }
    if (!truth_path.empty()) {
        json doc = io::report_skeleton(cfg);
        doc["truth"] = json{{"a", io::mat_to_json(s.a)},
                            {"b", io::mat_to_json(s.b)},
                            {"col_groups", io::groups_to_json(s.col_groups)},
                            {"row_groups", io::groups_to_json(s.row_groups)},
                            {"seed", s.seed}};
        io::write_json_file(truth_path, doc);
        std::cout << "wrote " << truth_path << "\n";
    }
}

void cmd_segment(const io::run_config& cfg) {
    require_input(cfg);
    require_output(cfg);
    matrix_series x = io::read_series_csv(cfg.input);
    transform::pipeline_fit fit = transform::fit_pipeline(x, cfg.pipeline());
    json doc = io::report_skeleton(cfg);
    doc["mean"] = io::mat_to_json(fit.mean);
    doc["columns"] = json{{"w", io::to_json(fit.col_w)}, {"segmentation", io::to_json(fit.col_seg)}};
    doc["rows"] = json{{"w", io::to_json(fit.row_w)}, {"segmentation", io::to_json(fit.row_seg)}};
    doc["transform"] = io::to_json(fit.tp);
    io::write_json_file(cfg.output, doc);
    std::cout << "wrote " << cfg.output << " (col groups=" << fit.col_seg.n_groups
              << ", row groups=" << fit.row_seg.n_groups << ")\n";
}

void cmd_transform(const io::run_config& cfg, const std::string& save_path,
                   const std::string& load_path) {
    require_input(cfg);
    require_output(cfg);
    matrix_series x = io::read_series_csv(cfg.input);
    auto [xc, mean] = center(x);
    (void)mean;
    transform::transform_pair tp;
    if (!load_path.empty()) {
        tp = io::transform_pair_from_json(read_json_file(load_path).at("transform"));
    } else {
        transform::pipeline_fit fit = transform::fit_pipeline(x, cfg.pipeline());
        tp = fit.tp;
        if (!save_path.empty()) {
            json doc = io::report_skeleton(cfg);
            doc["transform"] = io::to_json(tp);
            io::write_json_file(save_path, doc);
            std::cout << "wrote " << save_path << "\n";
        }
    }
    matrix_series u = transform::to_latent(xc, tp);
    u.label = "latent";
    io::write_series_csv(cfg.output, u);
    std::cout << "wrote " << cfg.output << "\n";
}

void cmd_forecast(const io::run_config& cfg, const std::vector<std::string>& baselines) {
    require_input(cfg);
    require_output(cfg);
    matrix_series x = io::read_series_csv(cfg.input);
    if (cfg.holdout >= x.T())
        throw validation_error("holdout must be smaller than the series length");
    const auto scheme = cfg.scheme == "refit" ? forecasting::scheme_kind::refit_each_step
                                              : forecasting::scheme_kind::fixed_transform;
    forecasting::forecast_report rep =
        forecasting::rolling_backtest(x, cfg.holdout, cfg.horizon, scheme, cfg.pipeline());
    json doc = io::report_skeleton(cfg);
    doc["forecast"] = io::to_json(rep);
    json jb = json::array();
    for (const std::string& name : baselines) {
        forecasting::baseline_kind kind;
        if (name == "mar1_direct") kind = forecasting::baseline_kind::mar1_direct;
        else if (name == "var1_stacked") kind = forecasting::baseline_kind::var1_stacked;
        else if (name == "ar1_per_cell") kind = forecasting::baseline_kind::ar1_per_cell;
        else throw validation_error("unknown baseline '" + name + "'");
        jb.push_back(io::to_json(
            forecasting::baseline_forecasts(x, cfg.holdout, cfg.horizon, kind)));
    }
    doc["baselines"] = std::move(jb);
    io::write_json_file(cfg.output, doc);
    io::write_text_file(sidecar(cfg.output, ".steps.csv"), io::forecast_steps_csv(rep));
    io::write_text_file(sidecar(cfg.output, ".weekly.csv"), io::forecast_weekly_csv(rep));
    io::write_text_file(sidecar(cfg.output, ".predictions.csv"), io::predictions_csv(rep));
    std::cout << "wrote " << cfg.output << " (mse=" << rep.mse << ")\n";
}

void apply_bench_cell(io::run_config& cfg, const std::string& cell) {
    for (std::size_t start = 0; start < cell.size();) {
        std::size_t stop = cell.find(',', start);
        if (stop == std::string::npos) stop = cell.size();
        const std::string token = cell.substr(start, stop - start);
        start = stop + 1;
        if (token.empty()) throw validation_error("bench cell: empty token");
        std::size_t i = 0;
        while (i < token.size()) {
            const char key = token[i++];
            std::size_t j = i;
            while (j < token.size() && std::isdigit(static_cast<unsigned char>(token[j]))) ++j;
            if (j == i)
                throw validation_error("bench cell: expected digits after '" +
                                       std::string(1, key) + "' in '" + token + "'");
            const int value = std::stoi(token.substr(i, j - i));
            i = j;
            switch (key) {
                case 'T': cfg.T = value; break;
                case 'p': cfg.p = value; break;
                case 'q': cfg.q = value; break;
                case 'M': cfg.holdout = value; break;
                default:
                    throw validation_error("bench cell: unknown key '" + std::string(1, key) +
                                           "' (use T, p, q, M)");
            }
        }
    }
}

void cmd_bench(io::run_config& cfg, int table, const std::string& cell) {
    require_output(cfg);
    switch (table) {
        case 1:
            cfg.design = "example1";
            cfg.T = 1000;
            cfg.p = 4;
            cfg.q = 4;
            break;
        case 2:
            cfg.design = "example2";
            cfg.T = 1000;
            cfg.p = 3;
            cfg.q = 6;
            break;
        case 3:
            cfg.design = "example3";
            cfg.T = 500;
            cfg.p = 6;
            cfg.q = 6;
            cfg.holdout = 10;
            break;
        default: throw validation_error("bench table must be 1, 2 or 3");
    }
    if (!cell.empty()) apply_bench_cell(cfg, cell);

    simgen::replication_config rc;
    rc.example = table;
    rc.T = cfg.T;
    rc.p = cfg.p;
    rc.q = cfg.q;
    rc.reps = cfg.reps;
    rc.seed = cfg.seed;
    rc.holdout = cfg.holdout;
    rc.pipeline = cfg.pipeline();
    simgen::replication_report rep = simgen::run_replications(rc);

    json doc = io::report_skeleton(cfg);
    doc["report"] = io::to_json(rep);
    io::write_json_file(cfg.output, doc);
    io::write_text_file(sidecar(cfg.output, ".csv"), io::replication_csv(rep));
    std::cout << "table " << table << " (" << cfg.design << ", p=" << cfg.p << ", q=" << cfg.q
              << ", T=" << cfg.T << ", reps=" << rc.reps << ") in " << rep.seconds << " s\n";
    for (const auto& [name, m] : rep.metrics)
        std::cout << "  " << name << ": mean=" << m.mean << " sd=" << m.sd << " n=" << m.n
                  << "\n";
    for (const auto& [name, v] : rep.rates) std::cout << "  rate " << name << ": " << v << "\n";
    if (rep.failures > 0) std::cout << "  failures: " << rep.failures << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bilinear decorrelation, segmentation and forecasting for matrix time series"};
    app.require_subcommand(1);
    app.fallthrough();

    io::run_config cfg;
    int threads = 0;
    if (const char* env = std::getenv("MATSEG_THREADS")) threads = std::atoi(env);
    std::string config_path, truth_path, latent_path, save_tp, load_tp, cell;
    std::vector<std::string> baselines;
    int table = 0;

    app.add_option("--threads", threads, "cap worker threads (outputs are unaffected)");
    app.add_option("--config", config_path, "JSON file whose keys override the flags");

    auto add_pipeline = [&](CLI::App* c) {
        c->add_option("--tau0", cfg.tau0, "lag window for the W accumulation");
        c->add_option("--tau1", cfg.tau1, "lag window for cross-correlations");
        c->add_option("--c-r", cfg.c_r, "ratio-selector search fraction");
        c->add_option("--rho-floor", cfg.rho_floor, "absolute correlation floor for edges");
        c->add_flag("--prewhiten,!--no-prewhiten", cfg.prewhiten, "AR-prewhiten before rho");
        c->add_option("--selector", cfg.selector, "ratio | threshold:<rho0>");
        c->add_option("--eig-transform", cfg.eig_transform, "identity | log1p | power:<alpha>");
    };

    CLI::App* sim = app.add_subcommand("simulate", "generate a simulation design as CSV");
    sim->add_option("--design", cfg.design, "example1 | example2 | example3")
        ->check(CLI::IsMember({"example1", "example2", "example3"}));
    sim->add_option("--T", cfg.T, "series length");
    sim->add_option("--p", cfg.p, "rows");
    sim->add_option("--q", cfg.q, "columns");
    sim->add_option("--seed", cfg.seed, "generator seed");
    sim->add_option("--holdout", cfg.holdout, "extra steps with conditional means (example3)");
    sim->add_option("--output", cfg.output, "observed-series CSV path");
    sim->add_option("--truth", truth_path, "also write ground-truth JSON here");
    sim->add_option("--latent", latent_path, "also write the latent series CSV here");

    CLI::App* seg = app.add_subcommand("segment", "estimate transforms and segment both modes");
    seg->add_option("--input", cfg.input, "observed-series CSV");
    seg->add_option("--output", cfg.output, "report JSON path");
    add_pipeline(seg);

    CLI::App* tra = app.add_subcommand("transform", "map a series to its latent coordinates");
    tra->add_option("--input", cfg.input, "observed-series CSV");
    tra->add_option("--output", cfg.output, "latent-series CSV path");
    tra->add_option("--save-transform", save_tp, "write the fitted transform JSON here");
    tra->add_option("--load-transform", load_tp, "apply a previously saved transform");
    add_pipeline(tra);

    CLI::App* fore = app.add_subcommand("forecast", "rolling-origin backtest on a CSV series");
    fore->add_option("--input", cfg.input, "observed-series CSV");
    fore->add_option("--output", cfg.output, "report JSON path (sidecar CSVs derived)");
    fore->add_option("--holdout", cfg.holdout, "rolling evaluation steps");
    fore->add_option("--horizon", cfg.horizon, "forecast horizon");
    fore->add_option("--scheme", cfg.scheme, "refit | fixed")
        ->check(CLI::IsMember({"refit", "fixed"}));
    fore->add_option("--baselines", baselines,
                     "mar1_direct | var1_stacked | ar1_per_cell (repeatable)");
    add_pipeline(fore);

    CLI::App* ben = app.add_subcommand("bench", "replicate a simulation table cell");
    ben->add_option("--table", table, "simulation table (1, 2 or 3)")->required();
    ben->add_option("--cell", cell, "override dims, e.g. \"q4p4,T1000\"");
    ben->add_option("--reps", cfg.reps, "replications");
    ben->add_option("--seed", cfg.seed, "master seed");
    ben->add_option("--output", cfg.output, "report JSON path (summary CSV derived)");
    add_pipeline(ben);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (!config_path.empty())
            io::apply_json_overrides(cfg, read_json_file(config_path));
#ifdef _OPENMP
        if (threads > 0) omp_set_num_threads(threads);
#endif
        if (sim->parsed()) cmd_simulate(cfg, truth_path, latent_path);
        else if (seg->parsed()) cmd_segment(cfg);
        else if (tra->parsed()) cmd_transform(cfg, save_tp, load_tp);
        else if (fore->parsed()) cmd_forecast(cfg, baselines);
        else if (ben->parsed()) cmd_bench(cfg, table, cell);
    } catch (const validation_error& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const data_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
