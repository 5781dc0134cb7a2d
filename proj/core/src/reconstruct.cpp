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

#include "rpres/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <numbers>
#include <numeric>

#include <fftw3.h>

#include "csv_util.hpp"
#include "json_io.hpp"
#include "rpres/error.hpp"

namespace rpres {

namespace {

double weighted_mean(std::span<const double> values, std::span<const double> measure) {
    double s = 0.0;
    for (std::size_t j = 0; j < values.size(); ++j) s += measure[j] * values[j];
    return s;
}

void require_centered(const Observable& f, std::span<const double> measure, const char* name) {
    if (!f.centered) throw ArgumentError(std::string("observable ") + name + " is not centered");
    double scale = 0.0;
    for (std::size_t j = 0; j < f.values.size(); ++j) scale += measure[j] * std::abs(f.values[j]);
    if (std::abs(weighted_mean(f.values, measure)) > 1e-10 * std::max(1.0, scale)) {
        throw ArgumentError(std::string("observable ") + name +
                            " has nonzero mean under the measure");
    }
}

struct FftwPlanDeleter {
    void operator()(fftw_plan_s* p) const { fftw_destroy_plan(p); }
};
using FftwPlan = std::unique_ptr<fftw_plan_s, FftwPlanDeleter>;

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};
template <class T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <class T>
FftwBuffer<T> fftw_buffer(std::size_t n) {
    auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
    if (!p) throw std::bad_alloc();
    return FftwBuffer<T>(p);
}

}  // namespace

Observable center_observable(Observable f, std::span<const double> measure) {
    if (f.values.size() != measure.size()) {
        throw ArgumentError("observable length does not match the measure");
    }
    const double mean = weighted_mean(f.values, measure);
    for (double& v : f.values) v -= mean;
    f.centered = true;
    return f;
}

Observable coordinate_observable(const TransitionMatrix& tm, std::size_t component) {
    if (!tm.partition()) throw ArgumentError("transition matrix carries no partition");
    if (component >= tm.partition()->dim()) throw ArgumentError("component out of range");
    Observable f;
    f.values.reserve(tm.size());
    for (std::size_t box : tm.active_boxes()) {
        f.values.push_back(tm.partition()->center(box)[component]);
    }
    return center_observable(std::move(f), tm.measure());
}

Observable empirical_observable(const TransitionMatrix& tm, const TimeSeries& observed,
                                std::span<const double> values) {
    if (!tm.partition()) throw ArgumentError("transition matrix carries no partition");
    if (observed.dim() != tm.partition()->dim()) {
        throw ArgumentError("observed series dimension does not match the partition");
    }
    if (values.size() != observed.size()) {
        throw ArgumentError("one observable value per sample is required");
    }
    std::vector<double> sum(tm.size(), 0.0), count(tm.size(), 0.0);
    for (std::size_t n = 0; n < observed.size(); ++n) {
        const std::size_t box = tm.partition()->locate_unchecked(observed.row(n).data());
        if (box == tm.partition()->size()) continue;
        if (auto c = tm.compact_index(box)) {
            sum[*c] += values[n];
            count[*c] += 1.0;
        }
    }
    Observable f;
    f.values.resize(tm.size());
    for (std::size_t j = 0; j < tm.size(); ++j) f.values[j] = count[j] > 0 ? sum[j] / count[j] : 0.0;
    return center_observable(std::move(f), tm.measure());
}

std::vector<cplx> weights(const SpectralData& spec, std::span<const double> measure,
                          const Observable& f, const Observable& g) {
    const auto n = static_cast<std::size_t>(spec.right.rows());
    if (measure.size() != n || f.values.size() != n || g.values.size() != n) {
        throw ArgumentError("weights: measure and observables must match the box count");
    }
    require_centered(f, measure, "f");
    require_centered(g, measure, "g");
    Eigen::VectorXd mf(n), gv(n);
    for (std::size_t j = 0; j < n; ++j) {
        mf[static_cast<Eigen::Index>(j)] = measure[j] * f.values[j];
        gv[static_cast<Eigen::Index>(j)] = g.values[j];
    }
    const Eigen::VectorXcd fpsi = spec.right.transpose() * mf.cast<cplx>();
    const Eigen::VectorXcd phig = spec.left.transpose() * gv.cast<cplx>();
    std::vector<cplx> w(spec.k());
    for (std::size_t k = 0; k < spec.k(); ++k) {
        w[k] = fpsi[static_cast<Eigen::Index>(k)] * phig[static_cast<Eigen::Index>(k)];
    }
    if (!w.empty() && std::abs(spec.zetas[0] - 1.0) <= 1e-6) w[0] = 0.0;
    return w;
}

ReconstructionResult reconstruct_correlation(const ResonanceSet& rs, std::span<const cplx> w,
                                             std::span<const double> lags,
                                             double imag_tolerance) {
    if (w.size() != rs.items.size()) {
        throw ArgumentError("weights and resonances are not index-aligned (" +
                            std::to_string(w.size()) + " vs " + std::to_string(rs.items.size()) +
                            ")");
    }
    double scale = 0.0;
    for (const cplx& wk : w) scale += std::abs(wk);
    ReconstructionResult r;
    r.abscissa.assign(lags.begin(), lags.end());
    r.weights.assign(w.begin(), w.end());
    r.reconstructed.resize(lags.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < lags.size(); ++i) {
        const double t = lags[i];
        if (!(t >= 0.0) || !std::isfinite(t)) throw ArgumentError("lags must be finite and >= 0");
        cplx sum = 0.0;
        for (std::size_t k = 0; k < w.size(); ++k) {
            if (w[k] != 0.0) sum += w[k] * std::exp(rs.items[k].lambda * t);
        }
        r.reconstructed[i] = sum.real();
        worst = std::max(worst, std::abs(sum.imag()));
    }
    r.imag_residue = scale > 0.0 ? worst / scale : 0.0;
    if (r.imag_residue > imag_tolerance) {
        throw NonRealResult("reconstructed correlation has relative imaginary residue " +
                            detail::format_double(r.imag_residue) +
                            " (incomplete conjugate pairs or off-grid lags of an aliased mode)");
    }
    return r;
}

ReconstructionResult reconstruct_psd(const ResonanceSet& rs, std::span<const cplx> w,
                                     std::span<const double> freqs) {
    if (w.size() != rs.items.size()) {
        throw ArgumentError("weights and resonances are not index-aligned");
    }
    ReconstructionResult r;
    r.abscissa.assign(freqs.begin(), freqs.end());
    r.weights.assign(w.begin(), w.end());
    r.abscissa_units = "angular";
    const double width_floor = 1e-12 / rs.lag_time;
    std::vector<std::size_t> active;
    double scale = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        const double re = rs.items[k].lambda.real();
        if (re >= -width_floor) {
            if (w[k] != 0.0) {
                throw SingularLorentzian("resonance " + std::to_string(rs.items[k].k) +
                                         " has zero width but nonzero weight");
            }
            r.excluded.push_back(rs.items[k].k);
            continue;
        }
        if (w[k] == 0.0) continue;
        active.push_back(k);
        scale += std::abs(w[k]) / (std::numbers::pi * -re);
    }
    r.reconstructed.resize(freqs.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        const double f = freqs[i];
        cplx sum = 0.0;
        for (std::size_t k : active) {
            const double re = rs.items[k].lambda.real();
            const double d = f - rs.items[k].lambda.imag();
            sum += w[k] * (-re / (d * d + re * re));
        }
        sum /= std::numbers::pi;
        r.reconstructed[i] = sum.real();
        worst = std::max(worst, std::abs(sum.imag()));
    }
    r.imag_residue = scale > 0.0 ? worst / scale : 0.0;
    return r;
}

ReconstructionResult reconstruct_psd_one_sided(const ResonanceSet& rs, std::span<const cplx> w,
                                               std::span<const double> freqs) {
    std::vector<double> neg(freqs.size());
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        if (freqs[i] < 0.0) throw ArgumentError("one-sided PSD needs frequencies >= 0");
        neg[i] = -freqs[i];
    }
    ReconstructionResult pos = reconstruct_psd(rs, w, freqs);
    const ReconstructionResult mirror = reconstruct_psd(rs, w, neg);
    for (std::size_t i = 0; i < freqs.size(); ++i) pos.reconstructed[i] += mirror.reconstructed[i];
    return pos;
}

namespace {

std::vector<double> demeaned_column(const TimeSeries& series, std::size_t column) {
    std::vector<double> y = series.column(column);
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    for (double& v : y) v -= mean;
    return y;
}

double lag_product(const std::vector<double>& y, std::size_t lag) {
    const std::size_t n = y.size() - lag;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += y[i] * y[i + lag];
    return s / static_cast<double>(n);
}

}  // namespace

ReconstructionResult sample_acf_at(const TimeSeries& series, std::size_t column,
                                   std::span<const std::size_t> lag_steps) {
    if (column >= series.dim()) throw ArgumentError("sample_acf: column out of range");
    for (std::size_t l : lag_steps) {
        if (l >= series.size()) {
            throw ArgumentError("sample_acf: lag " + std::to_string(l) +
                                " must be smaller than the series length");
        }
    }
    const std::vector<double> y = demeaned_column(series, column);
    ReconstructionResult r;
    std::vector<double> values;
    for (std::size_t l : lag_steps) {
        r.abscissa.push_back(static_cast<double>(l) * series.sample_dt());
        values.push_back(lag_product(y, l));
    }
    r.sample = std::move(values);
    return r;
}

ReconstructionResult sample_acf(const TimeSeries& series, std::size_t column,
                                std::size_t max_lag_steps) {
    if (column >= series.dim()) throw ArgumentError("sample_acf: column out of range");
    const std::size_t n = series.size();
    if (max_lag_steps >= n) {
        throw ArgumentError("sample_acf: max_lag_steps must be smaller than the series length");
    }
    // Direct summation is cheaper than an FFT for short lag ranges.
    if (static_cast<double>(n) * static_cast<double>(max_lag_steps + 1) <= 5e7) {
        std::vector<std::size_t> lags(max_lag_steps + 1);
        std::iota(lags.begin(), lags.end(), std::size_t{0});
        return sample_acf_at(series, column, lags);
    }

    const std::vector<double> y = demeaned_column(series, column);
    std::size_t nfft = 1;
    while (nfft < n + max_lag_steps + 1) nfft <<= 1;
    const std::size_t nc = nfft / 2 + 1;
    auto in = fftw_buffer<double>(nfft);
    auto spec = fftw_buffer<fftw_complex>(nc);
    FftwPlan forward(fftw_plan_dft_r2c_1d(static_cast<int>(nfft), in.get(), spec.get(),
                                          FFTW_ESTIMATE));
    FftwPlan backward(fftw_plan_dft_c2r_1d(static_cast<int>(nfft), spec.get(), in.get(),
                                           FFTW_ESTIMATE));
    std::copy(y.begin(), y.end(), in.get());
    std::fill(in.get() + n, in.get() + nfft, 0.0);
    fftw_execute(forward.get());
    for (std::size_t k = 0; k < nc; ++k) {
        spec[k][0] = spec[k][0] * spec[k][0] + spec[k][1] * spec[k][1];
        spec[k][1] = 0.0;
    }
    fftw_execute(backward.get());

    ReconstructionResult r;
    std::vector<double> values(max_lag_steps + 1);
    for (std::size_t l = 0; l <= max_lag_steps; ++l) {
        r.abscissa.push_back(static_cast<double>(l) * series.sample_dt());
        values[l] = in[l] / static_cast<double>(nfft) / static_cast<double>(n - l);
    }
    r.sample = std::move(values);
    return r;
}

ReconstructionResult sample_psd(const TimeSeries& series, std::size_t column,
                                std::size_t segment_len, double overlap,
                                const PsdOptions& options) {
    if (column >= series.dim()) throw ArgumentError("sample_psd: column out of range");
    if (segment_len < 2 || segment_len > series.size()) {
        throw ArgumentError("sample_psd: segment_len must be in [2, N]");
    }
    if (!(overlap >= 0.0 && overlap < 1.0)) throw ArgumentError("sample_psd: overlap must be in [0, 1)");
    const std::size_t step = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(static_cast<double>(segment_len) * (1.0 - overlap))));

    const std::vector<double> y = demeaned_column(series, column);
    const std::size_t L = segment_len;
    const std::size_t nc = L / 2 + 1;
    std::vector<double> window(L);
    double window_power = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
        window[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                          static_cast<double>(L)));
        window_power += window[i] * window[i];
    }

    auto in = fftw_buffer<double>(L);
    auto out = fftw_buffer<fftw_complex>(nc);
    FftwPlan plan(fftw_plan_dft_r2c_1d(static_cast<int>(L), in.get(), out.get(), FFTW_ESTIMATE));
    std::vector<double> acc(nc, 0.0);
    std::size_t segments = 0;
    for (std::size_t start = 0; start + L <= y.size(); start += step) {
        for (std::size_t i = 0; i < L; ++i) in[i] = y[start + i] * window[i];
        fftw_execute(plan.get());
        for (std::size_t k = 0; k < nc; ++k) acc[k] += out[k][0] * out[k][0] + out[k][1] * out[k][1];
        ++segments;
    }

    const double fs = 1.0 / series.sample_dt();
    const double scale = 1.0 / (fs * window_power * static_cast<double>(segments));
    ReconstructionResult r;
    std::vector<double> values(nc);
    for (std::size_t k = 0; k < nc; ++k) {
        double p = acc[k] * scale;
        const bool nyquist = (L % 2 == 0) && k == L / 2;
        if (k != 0 && !nyquist) p *= 2.0;
        double f = static_cast<double>(k) * fs / static_cast<double>(L);
        if (options.angular) {
            f *= 2.0 * std::numbers::pi;
            p /= 2.0 * std::numbers::pi;
        }
        r.abscissa.push_back(f);
        values[k] = p;
    }
    r.sample = std::move(values);
    r.abscissa_units = options.angular ? "angular" : "ordinary";
    return r;
}

Metrics compare(std::span<const double> recon, std::span<const double> sample) {
    if (recon.size() != sample.size()) {
        throw ArgumentError("compare: length mismatch (" + std::to_string(recon.size()) + " vs " +
                            std::to_string(sample.size()) + ")");
    }
    if (sample.empty()) throw ArgumentError("compare: empty input");
    const auto n = static_cast<double>(sample.size());
    Metrics m;
    double sq = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double e = recon[i] - sample[i];
        sq += e * e;
        m.max_abs_error = std::max(m.max_abs_error, std::abs(e));
    }
    m.rmse = std::sqrt(sq / n);
    const double mean = std::accumulate(sample.begin(), sample.end(), 0.0) / n;
    double var = 0.0;
    for (double s : sample) var += (s - mean) * (s - mean);
    const double sd = std::sqrt(var / n);
    if (sd > 0.0) {
        m.normalized_rmse = m.rmse / sd;
    } else {
        m.normalized_rmse = m.rmse == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return m;
}

double trapezoid(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ArgumentError("trapezoid: length mismatch");
    double s = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    return s;
}

void write_csv(const ReconstructionResult& r, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    const bool has_recon = !r.reconstructed.empty();
    const bool has_sample = r.sample.has_value();
    out << "abscissa";
    if (has_recon) out << ",reconstructed";
    if (has_sample) out << ",sample";
    out << '\n';
    std::string line;
    for (std::size_t i = 0; i < r.abscissa.size(); ++i) {
        line.clear();
        detail::append_double(line, r.abscissa[i]);
        if (has_recon) {
            line.push_back(',');
            detail::append_double(line, r.reconstructed[i]);
        }
        if (has_sample) {
            line.push_back(',');
            detail::append_double(line, (*r.sample)[i]);
        }
        line.push_back('\n');
        out << line;
    }
}

std::string metrics_json(const ReconstructionResult& r) {
    detail::json j;
    if (r.metrics) {
        j["rmse"] = r.metrics->rmse;
        j["normalized_rmse"] = std::isfinite(r.metrics->normalized_rmse)
                                   ? detail::json(r.metrics->normalized_rmse)
                                   : detail::json(nullptr);
        j["max_abs_error"] = r.metrics->max_abs_error;
    }
    j["abscissa_units"] = r.abscissa_units;
    j["frequency_units"] = r.abscissa_units == "time" ? "angular" : r.abscissa_units;
    j["imag_residue"] = r.imag_residue;
    j["excluded_resonances"] = r.excluded;
    j["points"] = r.abscissa.size();
    return j.dump(2);
}

}  // namespace rpres
