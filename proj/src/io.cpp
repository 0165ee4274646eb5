#include "matseg/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace matseg::io {

using nlohmann::json;

segmentation::selector run_config::make_selector() const {
    if (selector == "ratio") return segmentation::selector::ratio();
    const std::string prefix = "threshold:";
    if (selector.rfind(prefix, 0) == 0) {
        const std::string arg = selector.substr(prefix.size());
        double rho0 = 0.0;
        auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), rho0);
        if (ec != std::errc{} || ptr != arg.data() + arg.size())
            throw validation_error("selector: cannot parse threshold value '" + arg + "'");
        return segmentation::selector::threshold(rho0);
    }
    throw validation_error("selector must be 'ratio' or 'threshold:<rho0>', got '" + selector +
                           "'");
}

estimation::eig_transform run_config::make_eig_transform() const {
    if (eig_transform == "identity") return estimation::eig_transform::identity();
    if (eig_transform == "log1p") return estimation::eig_transform::make_log1p();
    const std::string prefix = "power:";
    if (eig_transform.rfind(prefix, 0) == 0) {
        const std::string arg = eig_transform.substr(prefix.size());
        double alpha = 0.0;
        auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), alpha);
        if (ec != std::errc{} || ptr != arg.data() + arg.size())
            throw validation_error("eig_transform: cannot parse power exponent '" + arg + "'");
        return estimation::eig_transform::make_power(alpha);
    }
    throw validation_error(
        "eig_transform must be 'identity', 'log1p' or 'power:<alpha>', got '" + eig_transform +
        "'");
}

transform::pipeline_config run_config::pipeline() const {
    transform::pipeline_config cfg;
    cfg.tau0 = tau0;
    cfg.f = make_eig_transform();
    cfg.tau1 = tau1;
    cfg.c_r = c_r;
    cfg.prewhiten = prewhiten;
    cfg.sel = make_selector();
    cfg.rho_floor = rho_floor;
    return cfg;
}

json config_to_json(const run_config& cfg) {
    return json{{"design", cfg.design},
                {"T", cfg.T},
                {"p", cfg.p},
                {"q", cfg.q},
                {"seed", cfg.seed},
                {"reps", cfg.reps},
                {"holdout", cfg.holdout},
                {"horizon", cfg.horizon},
                {"scheme", cfg.scheme},
                {"tau0", cfg.tau0},
                {"tau1", cfg.tau1},
                {"c_r", cfg.c_r},
                {"rho_floor", cfg.rho_floor},
                {"prewhiten", cfg.prewhiten},
                {"selector", cfg.selector},
                {"eig_transform", cfg.eig_transform},
                {"input", cfg.input},
                {"output", cfg.output}};
}

void apply_json_overrides(run_config& cfg, const json& overrides) {
    if (!overrides.is_object()) throw validation_error("config overrides must be a JSON object");
    for (const auto& [key, val] : overrides.items()) {
        try {
            if (key == "design") cfg.design = val.get<std::string>();
            else if (key == "T") cfg.T = val.get<int>();
            else if (key == "p") cfg.p = val.get<int>();
            else if (key == "q") cfg.q = val.get<int>();
            else if (key == "seed") cfg.seed = val.get<std::uint64_t>();
            else if (key == "reps") cfg.reps = val.get<int>();
            else if (key == "holdout") cfg.holdout = val.get<int>();
            else if (key == "horizon") cfg.horizon = val.get<int>();
            else if (key == "scheme") cfg.scheme = val.get<std::string>();
            else if (key == "tau0") cfg.tau0 = val.get<int>();
            else if (key == "tau1") cfg.tau1 = val.get<int>();
            else if (key == "c_r") cfg.c_r = val.get<double>();
            else if (key == "rho_floor") cfg.rho_floor = val.get<double>();
            else if (key == "prewhiten") cfg.prewhiten = val.get<bool>();
            else if (key == "selector") cfg.selector = val.get<std::string>();
            else if (key == "eig_transform") cfg.eig_transform = val.get<std::string>();
            else if (key == "input") cfg.input = val.get<std::string>();
            else if (key == "output") cfg.output = val.get<std::string>();
            else throw validation_error("unknown config key '" + key + "'");
        } catch (const json::exception& e) {
            throw validation_error("config key '" + key + "': " + e.what());
        }
    }
}

json report_skeleton(const run_config& cfg) {
    return json{{"schema", schema_version}, {"config", config_to_json(cfg)}};
}

json mat_to_json(const mat& m) {
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(m.size()));
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

mat mat_from_json(const json& j) {
    if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data"))
        throw data_error("matrix JSON must have rows, cols and data");
    const int rows = j.at("rows").get<int>();
    const int cols = j.at("cols").get<int>();
    const auto data = j.at("data").get<std::vector<double>>();
    if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows) * cols)
        throw data_error("matrix JSON data length does not match rows*cols");
    mat m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j2 = 0; j2 < cols; ++j2) m(i, j2) = data[static_cast<std::size_t>(i) * cols + j2];
    return m;
}

json groups_to_json(const std::vector<std::vector<int>>& groups) {
    json out = json::array();
    for (const auto& g : groups) {
        json jg = json::array();
        for (int i : g) jg.push_back(i + 1);
        out.push_back(std::move(jg));
    }
    return out;
}

json to_json(const estimation::w_estimate_result& w) {
    std::vector<double> lam(w.eig.eigenvalues.data(),
                            w.eig.eigenvalues.data() + w.eig.eigenvalues.size());
    std::vector<double> gaps(w.eigengaps.data(), w.eigengaps.data() + w.eigengaps.size());
    return json{{"mode", estimation::mode_name(w.m)},
                {"tau0", w.tau0},
                {"w", mat_to_json(w.w)},
                {"eigenvalues", lam},
                {"eigenvectors", mat_to_json(w.eig.eigenvectors)},
                {"eigengaps", gaps},
                {"sigma", mat_to_json(w.sigma)},
                {"sigma_inv_sqrt", mat_to_json(w.sigma_inv_sqrt)}};
}

json to_json(const segmentation::segmentation_result& seg) {
    json edges = json::array();
    for (const auto& e : seg.edges)
        edges.push_back(json{{"k", e.k + 1}, {"l", e.l + 1}, {"rho", e.rho}});
    json rho = json::array();
    for (const auto& [pair, value] : seg.table.rho)
        rho.push_back(json{{"k", pair.first + 1}, {"l", pair.second + 1}, {"rho", value}});
    std::vector<int> perm;
    for (int i : seg.permutation) perm.push_back(i + 1);
    return json{{"mode", estimation::mode_name(seg.m)},
                {"r_hat", seg.r_hat},
                {"n_groups", seg.n_groups},
                {"groups", groups_to_json(seg.groups)},
                {"permutation", perm},
                {"edges", edges},
                {"rho", rho},
                {"ratios", seg.ratios},
                {"tau1", seg.table.tau1},
                {"prewhitened", seg.table.prewhitened},
                {"floor_triggered", seg.floor_triggered},
                {"warning", seg.table.warning}};
}

json to_json(const transform::transform_pair& tp) {
    return json{{"a_star", mat_to_json(tp.a_star)},
                {"b_star", mat_to_json(tp.b_star)},
                {"sigma1_inv_sqrt", mat_to_json(tp.sigma1_inv_sqrt)},
                {"sigma2_inv_sqrt", mat_to_json(tp.sigma2_inv_sqrt)},
                {"sigma1_sqrt", mat_to_json(tp.sigma1_sqrt)},
                {"sigma2_sqrt", mat_to_json(tp.sigma2_sqrt)},
                {"col_groups", groups_to_json(tp.col_groups)},
                {"row_groups", groups_to_json(tp.row_groups)}};
}

namespace {

std::vector<std::vector<int>> groups_from_json(const json& j) {
    std::vector<std::vector<int>> groups;
    if (!j.is_array()) throw data_error("groups JSON must be an array of arrays");
    for (const auto& jg : j) {
        std::vector<int> g;
        for (const auto& v : jg) {
            const int i = v.get<int>();
            if (i < 1) throw data_error("group indices are 1-based");
            g.push_back(i - 1);
        }
        groups.push_back(std::move(g));
    }
    return groups;
}

}  // namespace

transform::transform_pair transform_pair_from_json(const json& j) {
    transform::transform_pair tp;
    try {
        tp.a_star = mat_from_json(j.at("a_star"));
        tp.b_star = mat_from_json(j.at("b_star"));
        tp.sigma1_inv_sqrt = mat_from_json(j.at("sigma1_inv_sqrt"));
        tp.sigma2_inv_sqrt = mat_from_json(j.at("sigma2_inv_sqrt"));
        tp.sigma1_sqrt = mat_from_json(j.at("sigma1_sqrt"));
        tp.sigma2_sqrt = mat_from_json(j.at("sigma2_sqrt"));
        tp.col_groups = groups_from_json(j.at("col_groups"));
        tp.row_groups = groups_from_json(j.at("row_groups"));
    } catch (const json::exception& e) {
        throw data_error(std::string("transform JSON: ") + e.what());
    }
    return tp;
}

json to_json(const forecasting::forecast_report& rep) {
    json preds = json::array();
    for (const mat& m : rep.predictions) preds.push_back(mat_to_json(m));
    return json{{"horizon", rep.horizon},
                {"scheme", rep.scheme},
                {"truth_kind", rep.truth_kind},
                {"method", rep.method},
                {"mse", rep.mse},
                {"per_step_mse", rep.per_step_mse},
                {"per_cell_errors", mat_to_json(rep.per_cell_errors)},
                {"predictions", std::move(preds)}};
}

json to_json(const simgen::replication_report& rep) {
    json metrics = json::object();
    for (const auto& [name, m] : rep.metrics)
        metrics[name] = json{{"mean", m.mean}, {"sd", m.sd}, {"n", m.n}};
    json rates = json::object();
    for (const auto& [name, v] : rep.rates) rates[name] = v;
    return json{{"example", rep.config.example},
                {"T", rep.config.T},
                {"p", rep.config.p},
                {"q", rep.config.q},
                {"reps", rep.config.reps},
                {"holdout", rep.config.holdout},
                {"seed", rep.config.seed},
                {"failures", rep.failures},
                {"metrics", std::move(metrics)},
                {"rates", std::move(rates)},
                {"rep_seeds", rep.rep_seeds}};
}

namespace {

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

matrix_series read_series_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw data_error(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "t,row,col,value")
        throw data_error(path + ": header must be 't,row,col,value', got '" + line + "'");

    struct cell {
        int t, r, c;
        double v;
    };
    std::vector<cell> cells;
    int max_t = 0, max_r = 0, max_c = 0;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const char* ptr = line.data();
        const char* end = line.data() + line.size();
        auto fail = [&](const std::string& what) {
            throw data_error(path + ":" + std::to_string(lineno) + ": " + what);
        };
        auto parse_int = [&](int& out) {
            auto [next, ec] = std::from_chars(ptr, end, out);
            if (ec != std::errc{} || next == end || *next != ',') fail("malformed row");
            ptr = next + 1;
        };
        cell c{};
        parse_int(c.t);
        parse_int(c.r);
        parse_int(c.c);
        auto [next, ec] = std::from_chars(ptr, end, c.v);
        if (ec != std::errc{} || next != end) fail("malformed value");
        if (c.t < 1 || c.r < 1 || c.c < 1) fail("indices must be >= 1");
        max_t = std::max(max_t, c.t);
        max_r = std::max(max_r, c.r);
        max_c = std::max(max_c, c.c);
        cells.push_back(c);
    }
    if (max_t < 2) throw data_error(path + ": need at least 2 time points");
    const std::size_t total =
        static_cast<std::size_t>(max_t) * static_cast<std::size_t>(max_r) * max_c;
    if (cells.size() > total) throw data_error(path + ": duplicate cells");
    std::vector<char> seen(total, 0);
    matrix_series x;
    x.values.assign(max_t, mat::Zero(max_r, max_c));
    for (const cell& c : cells) {
        const std::size_t idx = (static_cast<std::size_t>(c.t - 1) * max_r + (c.r - 1)) * max_c +
                                (c.c - 1);
        if (seen[idx])
            throw data_error(path + ": duplicate cell (" + std::to_string(c.t) + "," +
                             std::to_string(c.r) + "," + std::to_string(c.c) + ")");
        seen[idx] = 1;
        if (!std::isfinite(c.v)) throw data_error(path + ": non-finite value");
        x.values[c.t - 1](c.r - 1, c.c - 1) = c.v;
    }
    if (cells.size() != total)
        throw data_error(path + ": missing cells (" + std::to_string(total - cells.size()) +
                         " of " + std::to_string(total) + ")");
    x.validate();
    return x;
}

void write_series_csv(const std::string& path, const matrix_series& x) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write '" + path + "'");
    out << "t,row,col,value\n";
    for (std::size_t t = 0; t < x.values.size(); ++t) {
        const mat& m = x.values[t];
        for (int i = 0; i < m.rows(); ++i)
            for (int j = 0; j < m.cols(); ++j)
                out << (t + 1) << ',' << (i + 1) << ',' << (j + 1) << ','
                    << format_value(m(i, j)) << '\n';
    }
    if (!out) throw data_error("write failed for '" + path + "'");
}

std::string replication_csv(const simgen::replication_report& rep) {
    std::ostringstream out;
    out << "metric,mean,sd,n\n";
    for (const auto& [name, m] : rep.metrics)
        out << name << ',' << format_value(m.mean) << ',' << format_value(m.sd) << ',' << m.n
            << '\n';
    for (const auto& [name, v] : rep.rates)
        out << "rate_" << name << ',' << format_value(v) << ",0," << (rep.config.reps - rep.failures)
            << '\n';
    return out.str();
}

std::string forecast_steps_csv(const forecasting::forecast_report& rep) {
    std::ostringstream out;
    out << "step,mse\n";
    for (std::size_t i = 0; i < rep.per_step_mse.size(); ++i)
        out << (i + 1) << ',' << format_value(rep.per_step_mse[i]) << '\n';
    return out.str();
}

std::string forecast_weekly_csv(const forecasting::forecast_report& rep, int block) {
    if (block < 1) throw validation_error("weekly block length must be >= 1");
    std::ostringstream out;
    out << "week,mean_mse\n";
    const auto& steps = rep.per_step_mse;
    for (std::size_t start = 0, week = 1; start < steps.size(); start += block, ++week) {
        const std::size_t stop = std::min(steps.size(), start + block);
        double sum = 0.0;
        for (std::size_t i = start; i < stop; ++i) sum += steps[i];
        out << week << ',' << format_value(sum / static_cast<double>(stop - start)) << '\n';
    }
    return out.str();
}

std::string predictions_csv(const forecasting::forecast_report& rep) {
    std::ostringstream out;
    out << "step,row,col,value\n";
    for (std::size_t s = 0; s < rep.predictions.size(); ++s) {
        const mat& m = rep.predictions[s];
        for (int i = 0; i < m.rows(); ++i)
            for (int j = 0; j < m.cols(); ++j)
                out << (s + 1) << ',' << (i + 1) << ',' << (j + 1) << ','
                    << format_value(m(i, j)) << '\n';
    }
    return out.str();
}

void write_json_file(const std::string& path, const json& doc) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write '" + path + "'");
    out << doc.dump(2) << '\n';
    if (!out) throw data_error("write failed for '" + path + "'");
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write '" + path + "'");
    out << text;
    if (!out) throw data_error("write failed for '" + path + "'");
}

}  // namespace matseg::io
