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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rpres/sde.hpp"
#include "rpres/spectral.hpp"
#include "rpres/transfer.hpp"

namespace rpres {

/// Observable sampled on the active boxes of a transition matrix.
struct Observable {
    std::vector<double> values;
    bool centered = false;
};

/// Subtracts the m-weighted mean so that sum_j m_j f_j = 0.
Observable center_observable(Observable f, std::span<const double> measure);

/// Coordinate `component` of the box centers, centered against the measure.
Observable coordinate_observable(const TransitionMatrix& tm, std::size_t component);

/// Per-box average of `values[n]` over the samples of `observed` that fall in
/// each active box, centered against the measure. Boxes without samples get 0
/// before centering.
Observable empirical_observable(const TransitionMatrix& tm, const TimeSeries& observed,
                                std::span<const double> values);

struct Metrics {
    double rmse = 0.0;
    double normalized_rmse = 0.0;
    double max_abs_error = 0.0;
};

struct ReconstructionResult {
    std::vector<double> abscissa;
    /// Reconstructed values (empty for direct sample estimates).
    std::vector<double> reconstructed;
    /// Direct sample estimate on the same abscissa, when available.
    std::optional<std::vector<double>> sample;
    std::vector<cplx> weights;
    std::optional<Metrics> metrics;
    /// max |Im| / sum |w_k| left after summing the complex terms.
    double imag_residue = 0.0;
    /// Resonance positions (1-based) left out of a PSD because their weight
    /// is zero and their width vanishes.
    std::vector<std::size_t> excluded;
    /// "time", "angular" or "ordinary".
    std::string abscissa_units = "time";
};

/// w_k = (sum_j m_j f_j psi_kj) (phi_k^T g). The zeta = 1 weight is set to 0.
std::vector<cplx> weights(const SpectralData& spec, std::span<const double> measure,
                          const Observable& f, const Observable& g);

/// C(t) = sum_k w_k exp(lambda_k t), real part. Throws NonRealResult when the
/// imaginary residue exceeds `imag_tolerance` (relative to sum |w_k|).
ReconstructionResult reconstruct_correlation(const ResonanceSet& rs, std::span<const cplx> w,
                                             std::span<const double> lags,
                                             double imag_tolerance = 1e-8);

/// Lorentzian superposition
///   S(f) = -(1/pi) sum_k w_k Re(lambda_k) / ((f - Im lambda_k)^2 + Re(lambda_k)^2)
/// with f in the same angular units as Im lambda. The real part is returned;
/// it integrates over the real line to sum_k Re w_k.
ReconstructionResult reconstruct_psd(const ResonanceSet& rs, std::span<const cplx> w,
                                     std::span<const double> freqs);

/// S(f) + S(-f) for f >= 0: the one-sided form comparable to sample_psd.
ReconstructionResult reconstruct_psd_one_sided(const ResonanceSet& rs, std::span<const cplx> w,
                                               std::span<const double> freqs);

/// Mean-removed lag covariance (1/(N-l)) sum_n (y_n - mean)(y_{n+l} - mean)
/// for l = 0..max_lag_steps. Result in `sample`.
ReconstructionResult sample_acf(const TimeSeries& series, std::size_t column,
                                std::size_t max_lag_steps);
/// Same estimator at selected lags only.
ReconstructionResult sample_acf_at(const TimeSeries& series, std::size_t column,
                                   std::span<const std::size_t> lag_steps);

struct PsdOptions {
    /// Report frequencies in rad per unit time (density divided by 2 pi).
    bool angular = false;
};

/// Welch estimate: Hann-windowed, mean-removed segments, one-sided density
/// whose integral over f >= 0 approximates the variance. Result in `sample`.
ReconstructionResult sample_psd(const TimeSeries& series, std::size_t column,
                                std::size_t segment_len, double overlap,
                                const PsdOptions& options = {});

/// rmse, rmse / (population) standard deviation of `sample`, max |error|.
Metrics compare(std::span<const double> recon, std::span<const double> sample);

double trapezoid(std::span<const double> x, std::span<const double> y);

/// CSV `abscissa,reconstructed[,sample]` (missing columns are omitted).
void write_csv(const ReconstructionResult& r, const std::filesystem::path& path);
/// Metrics, units and imaginary residue as JSON.
std::string metrics_json(const ReconstructionResult& r);

}  // namespace rpres
