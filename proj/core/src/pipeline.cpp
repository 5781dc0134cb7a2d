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


#include "rpres/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>

#include "csv_util.hpp"
#include "json_io.hpp"
#include "rpres/partition.hpp"
#include "rpres/transfer.hpp"

namespace rpres {

namespace {

using detail::json;

std::size_t whole_steps(double time, double dt, const char* what) {
    const double r = time / dt;
    const double n = std::round(r);
    if (std::abs(r - n) > 1e-9 * std::max(1.0, r)) {
        throw ArgumentError(std::string(what) + " is not a whole number of time steps");
    }
    return static_cast<std::size_t>(n);
}

void check_keys(const json& j, const std::string& section, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ArgumentError("config: '" + section + "' must be an object");
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || item.key() == a;
        if (!ok) throw ArgumentError("config: unknown key '" + item.key() + "' in '" + section + "'");
    }
}

template <class T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

const char* method_name(EigenMethod m) {
    switch (m) {
        case EigenMethod::Dense: return "dense";
        case EigenMethod::Iterative: return "iterative";
        default: return "auto";
    }
}

EigenMethod method_from(const std::string& s) {
    if (s == "auto") return EigenMethod::Auto;
    if (s == "dense") return EigenMethod::Dense;
    if (s == "iterative") return EigenMethod::Iterative;
    throw ArgumentError("config: eigensolver.method must be auto, dense or iterative");
}

json config_json(const PipelineConfig& c, bool with_run_keys) {
    json params = json::object();
    for (const auto& [k, v] : c.params) params[k] = v;
    json j;
    j["model"] = {{"name", c.model}, {"params", params}};
    j["simulation"] = {{"dt", c.dt},         {"total_time", c.total_time},
                       {"transient_time", c.transient_time}, {"stride", c.stride},
                       {"seed", c.seed},     {"x0", c.x0}};
    j["observation"] = {{"components", c.components}};
    j["partition"] = {{"lows", c.lows}, {"highs", c.highs}, {"cells", c.cells}};
    j["estimation"] = {{"lag_time", c.lag_time}, {"min_count", c.min_count}};
    j["eigensolver"] = {{"k", c.k},
                        {"method", method_name(c.eigensolver.method)},
                        {"dense_threshold", c.eigensolver.dense_threshold},
                        {"subspace", c.eigensolver.subspace},
                        {"tolerance", c.eigensolver.tolerance},
                        {"max_restarts", c.eigensolver.max_restarts},
                        {"seed", c.eigensolver.seed},
                        {"residual_tolerance", c.eigensolver.residual_tolerance}};
    j["observables"] = {{"component", c.observable}};
    j["reconstruction"] = {{"max_lag_time", c.max_lag_time},
                           {"psd_segment_len", c.psd_segment_len},
                           {"psd_overlap", c.psd_overlap},
                           {"psd_max_frequency", c.psd_max_frequency}};
    j["conditional"] = {{"enabled", c.conditional},
                        {"extra_components", c.extra_components},
                        {"min_count", c.conditional_min_count},
                        {"simulate_reduced", c.simulate_reduced},
                        {"exit_policy", c.reduced_exit_policy}};
    if (with_run_keys) {
        j["output_dir"] = c.output_dir.generic_string();
        j["write_trajectory"] = c.write_trajectory;
        j["threads"] = c.threads;
    } else {
        j["write_trajectory"] = c.write_trajectory;
    }
    return j;
}

}  // namespace

std::size_t PipelineConfig::n_steps() const { return whole_steps(total_time, dt, "total_time"); }

std::size_t PipelineConfig::transient_steps() const {
    return whole_steps(transient_time, dt, "transient_time");
}

std::size_t PipelineConfig::lag_steps() const {
    const double r = lag_time / sample_dt();
    const double n = std::round(r);
    if (n < 1.0 || std::abs(r - n) > 1e-9 * r) {
        throw ArgumentError("lag_time " + detail::format_double(lag_time) +
                            " is not a positive integer multiple of sample_dt " +
                            detail::format_double(sample_dt()));
    }
    return static_cast<std::size_t>(n);
}

void PipelineConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ArgumentError("config: dt must be > 0");
    if (!(total_time > 0.0)) throw ArgumentError("config: total_time must be > 0");
    if (transient_time < 0.0) throw ArgumentError("config: transient_time must be >= 0");
    if (stride == 0) throw ArgumentError("config: stride must be >= 1");
    if (n_steps() < stride) throw ArgumentError("config: total_time shorter than one stride");
    (void)transient_steps();
    const SdeModel m = builtin_model(model, params);
    if (!x0.empty() && x0.size() != m.dim_state()) {
        throw ArgumentError("config: x0 must have " + std::to_string(m.dim_state()) + " entries");
    }
    if (components.empty()) throw ArgumentError("config: observation.components is empty");
    for (std::size_t c : components) {
        if (c >= m.dim_state()) throw ArgumentError("config: observation component out of range");
    }
    if (lows.size() != components.size()) {
        throw ArgumentError("config: partition dimension must equal the number of observed components");
    }
    GridPartition(lows, highs, cells);
    (void)lag_steps();
    if (k == 0) throw ArgumentError("config: eigensolver.k must be >= 1");
    if (observable >= components.size()) throw ArgumentError("config: observables.component out of range");
    if (!(max_lag_time >= 0.0)) throw ArgumentError("config: max_lag_time must be >= 0");
    if (psd_segment_len < 2) throw ArgumentError("config: psd_segment_len must be >= 2");
    if (!(psd_overlap >= 0.0 && psd_overlap < 1.0)) throw ArgumentError("config: psd_overlap must be in [0, 1)");
    for (std::size_t c : extra_components) {
        if (c >= m.dim_state()) throw ArgumentError("config: conditional extra component out of range");
    }
    if (reduced_exit_policy != "stop" && reduced_exit_policy != "reflect") {
        throw ArgumentError("config: conditional.exit_policy must be stop or reflect");
    }
}

PipelineConfig PipelineConfig::from_json(std::string_view text) {
    const json j = detail::parse_json(text);
    PipelineConfig c;
    try {
        check_keys(j, "config", {"model", "simulation", "observation", "partition", "estimation",
                                 "eigensolver", "observables", "reconstruction", "conditional",
                                 "output_dir", "write_trajectory", "threads"});
        if (j.contains("model")) {
            const json& m = j.at("model");
            check_keys(m, "model", {"name", "params"});
            read(m, "name", c.model);
            if (m.contains("params")) {
                for (const auto& item : m.at("params").items()) c.params[item.key()] = item.value().get<double>();
            }
        }
        if (j.contains("simulation")) {
            const json& s = j.at("simulation");
            check_keys(s, "simulation", {"dt", "total_time", "transient_time", "stride", "seed", "x0"});
            read(s, "dt", c.dt);
            read(s, "total_time", c.total_time);
            read(s, "transient_time", c.transient_time);
            read(s, "stride", c.stride);
            read(s, "seed", c.seed);
            read(s, "x0", c.x0);
        }
        if (j.contains("observation")) {
            check_keys(j.at("observation"), "observation", {"components"});
            read(j.at("observation"), "components", c.components);
        }
        if (j.contains("partition")) {
            const json& p = j.at("partition");
            check_keys(p, "partition", {"lows", "highs", "cells", "dim"});
            read(p, "lows", c.lows);
            read(p, "highs", c.highs);
            read(p, "cells", c.cells);
        }
        if (j.contains("estimation")) {
            check_keys(j.at("estimation"), "estimation", {"lag_time", "min_count"});
            read(j.at("estimation"), "lag_time", c.lag_time);
            read(j.at("estimation"), "min_count", c.min_count);
        }
        if (j.contains("eigensolver")) {
            const json& e = j.at("eigensolver");
            check_keys(e, "eigensolver", {"k", "method", "dense_threshold", "subspace", "tolerance",
                                          "max_restarts", "seed", "residual_tolerance"});
            read(e, "k", c.k);
            if (e.contains("method")) c.eigensolver.method = method_from(e.at("method").get<std::string>());
            read(e, "dense_threshold", c.eigensolver.dense_threshold);
            read(e, "subspace", c.eigensolver.subspace);
            read(e, "tolerance", c.eigensolver.tolerance);
            read(e, "max_restarts", c.eigensolver.max_restarts);
            read(e, "seed", c.eigensolver.seed);
            read(e, "residual_tolerance", c.eigensolver.residual_tolerance);
        }
        if (j.contains("observables")) {
            check_keys(j.at("observables"), "observables", {"component"});
            read(j.at("observables"), "component", c.observable);
        }
        if (j.contains("reconstruction")) {
            const json& r = j.at("reconstruction");
            check_keys(r, "reconstruction", {"max_lag_time", "psd_segment_len", "psd_overlap", "psd_max_frequency"});
            read(r, "max_lag_time", c.max_lag_time);
            read(r, "psd_segment_len", c.psd_segment_len);
            read(r, "psd_overlap", c.psd_overlap);
            read(r, "psd_max_frequency", c.psd_max_frequency);
        }
        if (j.contains("conditional")) {
            const json& r = j.at("conditional");
            check_keys(r, "conditional", {"enabled", "extra_components", "min_count", "simulate_reduced", "exit_policy"});
            read(r, "enabled", c.conditional);
            read(r, "extra_components", c.extra_components);
            read(r, "min_count", c.conditional_min_count);
            read(r, "simulate_reduced", c.simulate_reduced);
            read(r, "exit_policy", c.reduced_exit_policy);
        }
        if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
        read(j, "write_trajectory", c.write_trajectory);
        read(j, "threads", c.threads);
    } catch (const json::exception& e) {
        throw ArgumentError(std::string("config: ") + e.what());
    }
    return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json(text);
}

std::string PipelineConfig::to_json() const { return config_json(*this, true).dump(2); }

std::string PipelineConfig::hash() const {
    const std::string text = config_json(*this, false).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::vector<std::string> preset_names() { return {"case1", "case2", "case3", "ou"}; }

PipelineConfig preset(const std::string& name, const std::string& scale) {
    if (scale != "desk" && scale != "paper") throw ArgumentError("scale must be desk or paper");
    const bool paper = scale == "paper";
    PipelineConfig c;
    if (name == "ou") {
        c.model = "ou1d";
        c.params = {{"a", 1.0}, {"s", std::numbers::sqrt2}};
        c.dt = 1e-3;
        c.total_time = 5e3;
        c.stride = 1;
        c.x0 = {0.0};
        c.components = {0};
        c.lows = {-4.0};
        c.highs = {4.0};
        c.cells = {64};
        c.lag_time = 0.2;
        c.k = 6;
        c.max_lag_time = 3.0;
        c.psd_segment_len = 16384;
        c.output_dir = "rpres-ou";
        return c;
    }
    c.model = "slowfast3d";
    if (name == "case1") {
        c.params = {{"lambda", 1e-3}, {"f", 100.0}, {"gamma", 0.056}, {"eps", 1e-2}, {"sigma", 0.55}};
        c.lag_time = 1e-3;
    } else if (name == "case2") {
        c.params = {{"lambda", 1e-3}, {"f", 10.0}, {"gamma", 1.0}, {"eps", 1e-2}, {"sigma", 0.2}};
        c.lag_time = 1e-2;
    } else if (name == "case3") {
        c.params = {{"lambda", 1e-3}, {"f", 10.0}, {"gamma", 1.0}, {"eps", 10.0}, {"sigma", 0.3}};
        c.lag_time = 1e-2;
        c.simulate_reduced = true;
        c.reduced_exit_policy = "reflect";
    } else {
        throw ArgumentError("unknown preset '" + name + "'");
    }
    c.x0 = {0.5, 0.0, 0.25};
    c.components = {0, 1};
    c.lows = {-6.0, -6.0};
    c.highs = {6.0, 6.0};
    c.k = 20;
    c.observable = 0;
    c.max_lag_time = 100.0 * c.lag_time;
    c.psd_segment_len = 16384;
    c.conditional = true;
    c.extra_components = {2};
    c.conditional_min_count = 100;
    if (paper) {
        c.dt = 1e-5;
        c.total_time = 8e4;
        c.transient_time = 1e3;
        c.stride = static_cast<std::size_t>(std::llround(c.lag_time / c.dt));
        c.cells = {300, 300};
    } else {
        c.dt = 1e-4;
        c.total_time = 4e3;
        c.transient_time = 1e2;
        c.stride = 10;
        c.cells = {100, 100};
    }
    c.output_dir = "rpres-" + name;
    return c;
}

ComparisonResult compare_reconstruction(const TransitionMatrix& tm, const SpectralData& spec,
                                        const TimeSeries& observed, std::size_t observable,
                                        double max_lag_time, std::size_t psd_segment_len,
                                        double psd_overlap, double psd_max_frequency) {
    const double tau = tm.lag_time();
    const ResonanceSet rs = resonances(spec, tau);
    const Observable f = coordinate_observable(tm, observable);
    const std::vector<cplx> w = weights(spec, tm.measure(), f, f);

    const auto n_lags = static_cast<std::size_t>(std::floor(max_lag_time / tau + 1e-9));
    std::vector<std::size_t> lag_steps;
    std::vector<double> lags;
    for (std::size_t i = 0; i <= n_lags; ++i) {
        if (i * tm.lag_steps() >= observed.size()) break;
        lag_steps.push_back(i * tm.lag_steps());
        lags.push_back(static_cast<double>(i) * tau);
    }
    ComparisonResult out;
    out.acf = reconstruct_correlation(rs, w, lags);
    out.acf.sample = sample_acf_at(observed, observable, lag_steps).sample;
    out.acf.metrics = compare(out.acf.reconstructed, *out.acf.sample);

    const std::size_t seg = std::min(psd_segment_len, observed.size());
    ReconstructionResult welch = sample_psd(observed, observable, seg, psd_overlap, {.angular = true});
    const double welch_nyquist = std::numbers::pi / observed.sample_dt();
    const double limit = psd_max_frequency > 0.0 ? psd_max_frequency : std::min(rs.nyquist(), welch_nyquist);
    std::vector<double> freqs, sample;
    // The DC bin is not doubled by the one-sided convention and is biased by
    // mean removal, so the comparison starts at the first positive bin.
    for (std::size_t i = 1; i < welch.abscissa.size(); ++i) {
        if (welch.abscissa[i] > limit) break;
        freqs.push_back(welch.abscissa[i]);
        sample.push_back((*welch.sample)[i]);
    }
    out.psd = reconstruct_psd_one_sided(rs, w, freqs);
    out.psd.sample = std::move(sample);
    out.psd.metrics = compare(out.psd.reconstructed, *out.psd.sample);
    return out;
}

namespace {

class Run {
public:
    explicit Run(std::filesystem::path dir) : dir_(std::move(dir)) {}

    template <class Fn>
    auto stage(const char* name, Fn&& fn) {
        try {
            return fn();
        } catch (const StageError&) {
            throw;
        } catch (const std::exception& e) {
            fail(name, e.what());
            throw StageError(name, e.what());
        }
    }

    const std::filesystem::path& dir() const { return dir_; }
    std::filesystem::path file(const std::string& name) {
        artifacts_.push_back(name);
        return dir_ / name;
    }
    const std::vector<std::string>& artifacts() const { return artifacts_; }

private:
    void fail(const char* stage, const char* what) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        std::ofstream out(dir_ / ".failed", std::ios::binary);
        out << "stage: " << stage << "\nerror: " << what << '\n';
    }

    std::filesystem::path dir_;
    std::vector<std::string> artifacts_;
};

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text << '\n';
}

json metrics_object(const ReconstructionResult& r) { return json::parse(metrics_json(r)); }

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config) {
    Run run(config.output_dir);
    run.stage("config", [&] {
        config.validate();
        std::filesystem::create_directories(run.dir());
        std::filesystem::remove(run.dir() / ".failed");
        write_text(run.file("config.json"), config.to_json());
        return 0;
    });

    const SdeModel model = builtin_model(config.model, config.params);
    const TimeSeries full = run.stage("simulate", [&] {
        SimulationConfig sim;
        sim.dt = config.dt;
        sim.n_steps = config.n_steps();
        sim.transient_steps = config.transient_steps();
        sim.stride = config.stride;
        sim.seed = config.seed;
        sim.x0 = config.x0.empty() ? std::vector<double>(model.dim_state(), 0.0) : config.x0;
        TimeSeries series = euler_maruyama(model, sim);
        if (config.write_trajectory) write_csv(series, run.file("trajectory.csv"));
        return series;
    });

    const TimeSeries observed = run.stage("observe", [&] { return observe(full, config.components); });
    const GridPartition partition(config.lows, config.highs, config.cells);

    const TransitionMatrix tm = run.stage("estimate", [&] {
        EstimateOptions opts;
        opts.min_count = config.min_count;
        opts.threads = config.threads;
        TransitionMatrix t = estimate_transition(observed, partition, config.lag_steps(), opts);
        export_transition(t, run.dir() / "transition");
        run.file("transition.json");
        run.file("transition_counts.csv");
        run.file("transition_measure.csv");
        return t;
    });

    const SpectralData spec = run.stage("eigensolve", [&] {
        const std::size_t k = std::min(config.k, tm.size());
        return leading_eigenpairs(tm, k, config.eigensolver);
    });

    PipelineResult result;
    result.eigen_method = spec.method;
    result.active_boxes = tm.size();
    result.dropped_pair_fraction = tm.dropped_pair_fraction();
    result.resonances = run.stage("eigensolve", [&] {
        ResonanceSet rs = resonances(spec, tm.lag_time());
        write_text(run.file("resonances.json"), to_json(rs));
        return rs;
    });

    run.stage("reconstruct", [&] {
        ComparisonResult cmp = compare_reconstruction(
            tm, spec, observed, config.observable, config.max_lag_time, config.psd_segment_len,
            config.psd_overlap, config.psd_max_frequency);
        result.acf = std::move(cmp.acf);
        result.psd = std::move(cmp.psd);
        write_csv(result.acf, run.file("acf.csv"));
        write_csv(result.psd, run.file("psd.csv"));
        json metrics;
        metrics["acf"] = metrics_object(result.acf);
        metrics["psd"] = metrics_object(result.psd);
        metrics["spectral_gap"] = result.resonances.gap ? json(*result.resonances.gap) : json(nullptr);
        detail::write_json_file(run.file("metrics.json"), metrics);
        return 0;
    });

    if (config.conditional) {
        run.stage("conditional", [&] {
            ConditionalOptions opts;
            opts.min_count = config.conditional_min_count;
            opts.extra_components = config.extra_components;
            opts.threads = config.threads;
            ConditionalField field =
                estimate_conditional_field(full, model, partition, config.components, opts);
            std::vector<std::string> labels;
            for (std::size_t c : config.extra_components) labels.push_back(model.labels()[c]);
            write_csv(field, run.file("conditional.csv"), labels);

            if (config.simulate_reduced) {
                std::size_t start = 0;
                for (std::size_t b = 1; b < partition.size(); ++b) {
                    if (field.count(b) > field.count(start)) start = b;
                }
                SimulationConfig sim;
                sim.dt = config.dt;
                sim.n_steps = config.n_steps();
                sim.transient_steps = config.transient_steps();
                sim.stride = config.stride;
                sim.seed = config.seed ^ 0x9e3779b97f4a7c15ULL;
                sim.x0 = partition.center(start);
                const ExitPolicy policy =
                    config.reduced_exit_policy == "reflect" ? ExitPolicy::Reflect : ExitPolicy::Stop;
                ReducedSimulation red = simulate_reduced(field, sim, policy);
                EstimateOptions eopts;
                eopts.min_count = config.min_count;
                eopts.threads = config.threads;
                const TransitionMatrix rtm =
                    estimate_transition(red.series, partition, config.lag_steps(), eopts);
                const SpectralData rspec =
                    leading_eigenpairs(rtm, std::min(config.k, rtm.size()), config.eigensolver);
                ReducedDiagnostic diag{resonances(rspec, rtm.lag_time()), red.clipped_boxes,
                                       red.reflections};
                write_text(run.file("reduced_resonances.json"), to_json(diag.resonances));
                result.reduced = std::move(diag);
            }
            result.conditional = std::move(field);
            return 0;
        });
    }

    run.stage("manifest", [&] {
        json m;
        m["config_hash"] = config.hash();
        m["seed"] = config.seed;
        m["config"] = json::parse(config.to_json());
        m["sample_dt"] = config.sample_dt();
        m["lag_steps"] = tm.lag_steps();
        m["samples"] = observed.size();
        m["active_boxes"] = tm.size();
        m["dropped_pair_fraction"] = tm.dropped_pair_fraction();
        m["eigen_method"] = spec.method;
        m["eigen_residuals"] = spec.residuals;
        if (result.conditional) m["conditional_usable_boxes"] = result.conditional->usable_count();
        if (result.reduced) {
            m["reduced_clipped_boxes"] = result.reduced->clipped_boxes;
            m["reduced_reflections"] = result.reduced->reflections;
        }
        auto artifacts = run.artifacts();
        artifacts.push_back("manifest.json");
        m["artifacts"] = artifacts;
        detail::write_json_file(run.dir() / "manifest.json", m);
        return 0;
    });
    return result;
}

}  // namespace rpres
