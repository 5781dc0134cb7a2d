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


#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rpres/conditional.hpp"
#include "rpres/error.hpp"
#include "rpres/reconstruct.hpp"
#include "rpres/sde.hpp"
#include "rpres/spectral.hpp"

namespace rpres {

/// Error raised by run_pipeline, tagged with the failing stage.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what)
        : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

/// Run description. Times are in model units, frequencies angular.
struct PipelineConfig {
    std::string model = "ou1d";
    ParamMap params;

    double dt = 1e-3;
    double total_time = 1.0;
    double transient_time = 0.0;
    std::size_t stride = 1;
    std::uint64_t seed = 1;
    std::vector<double> x0;

    std::vector<std::size_t> components{0};

    std::vector<double> lows{-1.0};
    std::vector<double> highs{1.0};
    std::vector<std::size_t> cells{10};

    double lag_time = 1e-3;
    std::size_t min_count = 1;

    std::size_t k = 10;
    SpectralOptions eigensolver;

    /// Index into `components` of the coordinate whose ACF/PSD is compared.
    std::size_t observable = 0;

    /// ACF compared at multiples of lag_time up to this time.
    double max_lag_time = 1.0;
    std::size_t psd_segment_len = 4096;
    double psd_overlap = 0.5;
    /// Upper end of the PSD comparison; 0 means min(pi / tau, Welch Nyquist).
    double psd_max_frequency = 0.0;

    bool conditional = false;
    std::vector<std::size_t> extra_components;
    std::size_t conditional_min_count = 100;
    bool simulate_reduced = false;
    /// "stop" or "reflect".
    std::string reduced_exit_policy = "stop";

    std::filesystem::path output_dir = "rpres-run";
    bool write_trajectory = false;
    unsigned threads = 0;

    std::size_t n_steps() const;
    std::size_t transient_steps() const;
    double sample_dt() const { return dt * static_cast<double>(stride); }
    /// Exact lag in samples; throws ArgumentError unless tau / sample_dt is an integer.
    std::size_t lag_steps() const;

    /// Checks indices, sizes and lag snapping.
    void validate() const;

    static PipelineConfig from_json(std::string_view text);
    static PipelineConfig load(const std::filesystem::path& path);
    std::string to_json() const;
    /// FNV-1a of the canonical JSON without output_dir and threads.
    std::string hash() const;
};

/// Built-in runs: "case1", "case2", "case3" (slow-fast system) and "ou" (1D
/// OU), at scale "desk" or "paper".
PipelineConfig preset(const std::string& name, const std::string& scale = "desk");
std::vector<std::string> preset_names();

struct ReducedDiagnostic {
    ResonanceSet resonances;
    std::size_t clipped_boxes = 0;
    std::size_t reflections = 0;
};

struct PipelineResult {
    ResonanceSet resonances;
    std::string eigen_method;
    std::size_t active_boxes = 0;
    double dropped_pair_fraction = 0.0;
    ReconstructionResult acf;
    ReconstructionResult psd;
    std::optional<ConditionalField> conditional;
    std::optional<ReducedDiagnostic> reduced;
};

/// simulate -> observe -> estimate -> eigensolve -> reconstruct -> compare
/// [-> conditional], writing artifacts to config.output_dir. On failure a
/// `.failed` marker naming the stage is left and StageError is thrown.
PipelineResult run_pipeline(const PipelineConfig& config);

/// ACF and PSD comparison for an already estimated operator. `observed` is
/// the observed series the operator was estimated from.
struct ComparisonResult {
    ReconstructionResult acf;
    ReconstructionResult psd;
};
ComparisonResult compare_reconstruction(const TransitionMatrix& tm, const SpectralData& spec,
                                        const TimeSeries& observed, std::size_t observable,
                                        double max_lag_time, std::size_t psd_segment_len,
                                        double psd_overlap, double psd_max_frequency = 0.0);

}  // namespace rpres
