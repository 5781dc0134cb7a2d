// Copyright 2026 The rpres Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rpres/parallel.hpp"
#include "rpres/partition.hpp"
#include "rpres/pipeline.hpp"
#include "rpres/reconstruct.hpp"
#include "rpres/sde.hpp"
#include "rpres/spectral.hpp"
#include "rpres/transfer.hpp"

namespace {

using json = nlohmann::ordered_json;

// Thrown from subcommands to tag errors with the stage that raised them.
struct Tagged : std::runtime_error {
    Tagged(std::string s, const std::string& what) : std::runtime_error(what), stage(std::move(s)) {}
    std::string stage;
};

template <class Fn>
auto in_stage(const char* stage, Fn&& fn) {
    try {
        return fn();
    } catch (const rpres::StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw Tagged(stage, e.what());
    }
}

rpres::ParamMap parse_params(const std::vector<std::string>& items) {
    rpres::ParamMap out;
    for (const auto& item : items) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw rpres::ArgumentError("--param expects key=value, got '" + item + "'");
        std::size_t used = 0;
        const std::string value = item.substr(eq + 1);
        const double v = std::stod(value, &used);
        if (used != value.size()) throw rpres::ArgumentError("bad number in --param '" + item + "'");
        out[item.substr(0, eq)] = v;
    }
    return out;
}

rpres::EigenMethod parse_method(const std::string& s) {
    if (s == "auto") return rpres::EigenMethod::Auto;
    if (s == "dense") return rpres::EigenMethod::Dense;
    if (s == "iterative") return rpres::EigenMethod::Iterative;
    throw rpres::ArgumentError("--method must be auto, dense or iterative");
}

std::size_t lag_steps_for(double lag_time, double sample_dt) {
    const double r = lag_time / sample_dt;
    const double n = std::round(r);
    if (n < 1.0 || std::abs(r - n) > 1e-9 * r) {
        throw rpres::ArgumentError("lag time is not a positive integer multiple of the sample spacing");
    }
    return static_cast<std::size_t>(n);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw rpres::IoError("cannot open " + path.string() + " for writing");
    out << text << '\n';
}

// Named numeric columns of a CSV with a header row.
std::map<std::string, std::vector<double>> read_columns(const std::filesystem::path& path,
                                                        std::vector<std::string>& order) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw rpres::IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw rpres::IoError(path.string() + ": missing header");
    std::vector<std::string> names;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) names.push_back(cell);
    }
    std::map<std::string, std::vector<double>> cols;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t i = 0;
        while (std::getline(ss, cell, ',')) {
            if (i >= names.size()) break;
            cols[names[i++]].push_back(std::stod(cell));
        }
        if (i != names.size()) {
            throw rpres::IoError(path.string() + ": wrong field count on line " + std::to_string(lineno));
        }
    }
    order = names;
    return cols;
}

std::vector<std::size_t> parse_cells(const std::vector<std::size_t>& cells, std::size_t dim) {
    if (cells.size() == 1 && dim > 1) return std::vector<std::size_t>(dim, cells[0]);
    return cells;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ruelle-Pollicott resonances from SDE trajectories"};
    app.require_subcommand(1);
    unsigned threads = 0;
    app.add_option("--threads", threads, "Worker cap (default: RPRES_THREADS or all cores)");

    // simulate
    auto* sim = app.add_subcommand("simulate", "Euler-Maruyama trajectory to CSV");
    std::string model_name = "ou1d";
    std::vector<std::string> params;
    double dt = 1e-3, total_time = 1.0, transient_time = 0.0;
    std::size_t stride = 1;
    std::uint64_t seed = 1;
    std::vector<double> x0;
    std::string sim_out = "trajectory.csv";
    sim->add_option("--model", model_name, "Built-in model name")->capture_default_str();
    sim->add_option("--param", params, "Parameter override key=value (repeatable)");
    sim->add_option("--dt", dt, "Time step")->capture_default_str();
    sim->add_option("--total-time", total_time, "Recorded time span")->capture_default_str();
    sim->add_option("--transient-time", transient_time, "Discarded initial time")->capture_default_str();
    sim->add_option("--stride", stride, "Keep every stride-th step")->capture_default_str();
    sim->add_option("--seed", seed, "RNG seed")->capture_default_str();
    sim->add_option("--x0", x0, "Initial state")->delimiter(',');
    sim->add_option("-o,--out", sim_out, "Output CSV")->capture_default_str();

    // estimate
    auto* est = app.add_subcommand("estimate", "Transition matrix from a trajectory CSV");
    std::string est_in, est_out = "transition";
    std::vector<std::size_t> components;
    std::vector<double> lows, highs;
    std::vector<std::size_t> cells;
    double lag_time = 0.0;
    std::size_t min_count = 1;
    est->add_option("-i,--input", est_in, "Trajectory CSV")->required();
    est->add_option("--components", components, "Observed columns (0-based, default all)")->delimiter(',');
    est->add_option("--lows", lows, "Domain lower corner")->delimiter(',')->required();
    est->add_option("--highs", highs, "Domain upper corner")->delimiter(',')->required();
    est->add_option("--cells", cells, "Cells per dimension")->delimiter(',')->required();
    est->add_option("--lag-time", lag_time, "Lag tau")->required();
    est->add_option("--min-count", min_count, "Prune source boxes with fewer transitions")->capture_default_str();
    est->add_option("-o,--out", est_out, "Output prefix")->capture_default_str();

    // spectrum
    auto* spc = app.add_subcommand("spectrum", "Leading resonances of a stored transition matrix");
    std::string tm_prefix = "transition", spc_out = "resonances.json", method = "auto";
    std::size_t k = 10;
    spc->add_option("-t,--transition", tm_prefix, "Transition prefix")->capture_default_str();
    spc->add_option("-k", k, "Number of eigenpairs")->capture_default_str();
    spc->add_option("--method", method, "auto, dense or iterative")->capture_default_str();
    spc->add_option("-o,--out", spc_out, "Output JSON")->capture_default_str();

    // reconstruct
    auto* rec = app.add_subcommand("reconstruct", "ACF/PSD reconstruction against sample estimates");
    std::string rec_in, rec_dir = ".";
    std::size_t component = 0, segment = 4096;
    double max_lag_time = 1.0, overlap = 0.5, max_freq = 0.0;
    rec->add_option("-t,--transition", tm_prefix, "Transition prefix")->capture_default_str();
    rec->add_option("-i,--input", rec_in, "Trajectory CSV the matrix was estimated from")->required();
    rec->add_option("--components", components, "Observed columns used for the estimate")->delimiter(',');
    rec->add_option("--component", component, "Index into the observed columns")->capture_default_str();
    rec->add_option("-k", k, "Number of eigenpairs")->capture_default_str();
    rec->add_option("--method", method, "auto, dense or iterative")->capture_default_str();
    rec->add_option("--max-lag-time", max_lag_time, "ACF horizon")->capture_default_str();
    rec->add_option("--segment", segment, "Welch segment length")->capture_default_str();
    rec->add_option("--overlap", overlap, "Welch overlap")->capture_default_str();
    rec->add_option("--max-frequency", max_freq, "PSD comparison limit (angular; 0 = auto)");
    rec->add_option("-o,--out-dir", rec_dir, "Output directory")->capture_default_str();

    // reproduce
    auto* rep = app.add_subcommand("reproduce", "Run a built-in case end to end");
    std::string case_name, scale = "desk", rep_dir;
    rep->add_option("case", case_name, "case1, case2, case3 or ou")
        ->required()
        ->check(CLI::IsMember(rpres::preset_names()));
    rep->add_option("--scale", scale, "desk or paper")->check(CLI::IsMember({"desk", "paper"}))->capture_default_str();
    rep->add_option("-o,--out-dir", rep_dir, "Output directory (default rpres-<case>)");
    std::uint64_t rep_seed = 0;
    auto* seed_opt = rep->add_option("--seed", rep_seed, "Override the simulation seed");

    // run
    auto* runc = app.add_subcommand("run", "Run a pipeline described by a JSON config");
    std::string config_path;
    runc->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);

    // compare
    auto* cmp = app.add_subcommand("compare", "Error metrics between reconstructed and sample columns");
    std::string cmp_in, cmp_ref;
    cmp->add_option("input", cmp_in, "CSV with a reconstructed column")->required()->check(CLI::ExistingFile);
    cmp->add_option("--reference", cmp_ref, "CSV holding the sample column (default: same file)");

    CLI11_PARSE(app, argc, argv);
    if (threads > 0) rpres::set_default_thread_count(threads);

    try {
        if (sim->parsed()) {
            const rpres::SdeModel model =
                in_stage("config", [&] { return rpres::builtin_model(model_name, parse_params(params)); });
            rpres::SimulationConfig cfg;
            in_stage("config", [&] {
                cfg.dt = dt;
                cfg.n_steps = static_cast<std::size_t>(std::llround(total_time / dt));
                cfg.transient_steps = static_cast<std::size_t>(std::llround(transient_time / dt));
                cfg.stride = stride;
                cfg.seed = seed;
                cfg.x0 = x0.empty() ? std::vector<double>(model.dim_state(), 0.0) : x0;
                cfg.validate();
                return 0;
            });
            const auto series = in_stage("simulate", [&] { return rpres::euler_maruyama(model, cfg); });
            in_stage("write", [&] { rpres::write_csv(series, std::filesystem::path(sim_out)); return 0; });
            std::cout << "wrote " << series.size() << " samples to " << sim_out << '\n';
        } else if (est->parsed()) {
            const auto full = in_stage("read", [&] { return rpres::read_series_csv(std::filesystem::path(est_in)); });
            const auto observed = in_stage("observe", [&] {
                if (components.empty()) {
                    for (std::size_t c = 0; c < full.dim(); ++c) components.push_back(c);
                }
                return rpres::observe(full, components);
            });
            const auto tm = in_stage("estimate", [&] {
                rpres::GridPartition partition(lows, highs, parse_cells(cells, lows.size()));
                rpres::EstimateOptions opts;
                opts.min_count = min_count;
                return rpres::estimate_transition(observed, partition,
                                                  lag_steps_for(lag_time, observed.sample_dt()), opts);
            });
            in_stage("write", [&] { rpres::export_transition(tm, est_out); return 0; });
            std::cout << "active boxes: " << tm.size()
                      << ", dropped pair fraction: " << tm.dropped_pair_fraction() << '\n';
        } else if (spc->parsed()) {
            const auto tm = in_stage("read", [&] { return rpres::import_transition(tm_prefix); });
            const auto spec = in_stage("eigensolve", [&] {
                rpres::SpectralOptions opts;
                opts.method = parse_method(method);
                return rpres::leading_eigenpairs(tm, std::min(k, tm.size()), opts);
            });
            const auto rs = in_stage("eigensolve", [&] { return rpres::resonances(spec, tm.lag_time()); });
            in_stage("write", [&] { write_file(spc_out, rpres::to_json(rs)); return 0; });
            for (const auto& r : rs.items) {
                std::cout << r.k << ' ' << r.lambda.real() << ' ' << r.lambda.imag() << '\n';
            }
        } else if (rec->parsed()) {
            const auto tm = in_stage("read", [&] { return rpres::import_transition(tm_prefix); });
            const auto full = in_stage("read", [&] { return rpres::read_series_csv(std::filesystem::path(rec_in)); });
            const auto observed = in_stage("observe", [&] {
                if (components.empty()) {
                    for (std::size_t c = 0; c < full.dim(); ++c) components.push_back(c);
                }
                return rpres::observe(full, components);
            });
            const auto spec = in_stage("eigensolve", [&] {
                rpres::SpectralOptions opts;
                opts.method = parse_method(method);
                return rpres::leading_eigenpairs(tm, std::min(k, tm.size()), opts);
            });
            const auto cmpres = in_stage("reconstruct", [&] {
                return rpres::compare_reconstruction(tm, spec, observed, component, max_lag_time,
                                                     segment, overlap, max_freq);
            });
            in_stage("write", [&] {
                std::filesystem::create_directories(rec_dir);
                const std::filesystem::path dir(rec_dir);
                rpres::write_csv(cmpres.acf, dir / "acf.csv");
                rpres::write_csv(cmpres.psd, dir / "psd.csv");
                json m;
                m["acf"] = json::parse(rpres::metrics_json(cmpres.acf));
                m["psd"] = json::parse(rpres::metrics_json(cmpres.psd));
                write_file(dir / "metrics.json", m.dump(2));
                return 0;
            });
            std::cout << "acf normalized rmse: " << cmpres.acf.metrics->normalized_rmse
                      << ", psd normalized rmse: " << cmpres.psd.metrics->normalized_rmse << '\n';
        } else if (rep->parsed() || runc->parsed()) {
            rpres::PipelineConfig cfg = in_stage("config", [&] {
                if (runc->parsed()) return rpres::PipelineConfig::load(config_path);
                auto c = rpres::preset(case_name, scale);
                if (!rep_dir.empty()) c.output_dir = rep_dir;
                if (seed_opt->count() > 0) c.seed = rep_seed;
                return c;
            });
            if (threads > 0) cfg.threads = threads;
            const auto result = rpres::run_pipeline(cfg);
            std::cout << "resonances (Re, Im):\n";
            for (const auto& r : result.resonances.items) {
                std::cout << "  " << r.k << ": " << r.lambda.real() << ' ' << r.lambda.imag() << '\n';
            }
            std::cout << "acf normalized rmse: " << result.acf.metrics->normalized_rmse << '\n'
                      << "psd normalized rmse: " << result.psd.metrics->normalized_rmse << '\n'
                      << "artifacts in " << cfg.output_dir.string() << '\n';
        } else if (cmp->parsed()) {
            const auto metrics = in_stage("compare", [&] {
                std::vector<std::string> order_a, order_b;
                auto a = read_columns(cmp_in, order_a);
                auto b = cmp_ref.empty() ? a : read_columns(cmp_ref, order_b);
                if (!a.count("reconstructed")) throw rpres::ArgumentError(cmp_in + ": no 'reconstructed' column");
                if (!b.count("sample")) throw rpres::ArgumentError("reference has no 'sample' column");
                if (!cmp_ref.empty() && a.count("abscissa") && b.count("abscissa") &&
                    a["abscissa"] != b["abscissa"]) {
                    throw rpres::ArgumentError("abscissas differ between the two files");
                }
                return rpres::compare(a["reconstructed"], b["sample"]);
            });
            json m{{"rmse", metrics.rmse},
                   {"normalized_rmse", std::isfinite(metrics.normalized_rmse) ? json(metrics.normalized_rmse) : json(nullptr)},
                   {"max_abs_error", metrics.max_abs_error}};
            std::cout << m.dump(2) << '\n';
        }
    } catch (const rpres::StageError& e) {
        std::cerr << "rpres: error " << e.what() << '\n';
        return 1;
    } catch (const Tagged& e) {
        std::cerr << "rpres: error [" << e.stage << "] " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "rpres: error [internal] " << e.what() << '\n';
        return 1;
    }
    return 0;
}
