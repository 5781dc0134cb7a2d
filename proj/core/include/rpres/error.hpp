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
#include <stdexcept>
#include <string>
#include <vector>

namespace rpres {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad argument: dimension mismatch, index out of range, invalid config.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Euler-Maruyama produced a non-finite state.
class SimulationDiverged : public Error {
public:
    SimulationDiverged(std::size_t step, const std::string& what)
        : Error(what), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

class SeriesTooShort : public Error {
public:
    using Error::Error;
};

/// No usable transition pairs landed inside the domain.
class EmptyEstimate : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, std::vector<double> residuals = {})
        : Error(what), residuals_(std::move(residuals)) {}
    const std::vector<double>& residuals() const noexcept { return residuals_; }

private:
    std::vector<double> residuals_;
};

/// A cluster of (nearly) equal eigenvalues could not be biorthonormalized.
class DegeneracyError : public Error {
public:
    DegeneracyError(const std::string& what, std::vector<std::size_t> cluster)
        : Error(what), cluster_(std::move(cluster)) {}
    const std::vector<std::size_t>& cluster() const noexcept { return cluster_; }

private:
    std::vector<std::size_t> cluster_;
};

/// zeta = 0 has no logarithm.
class LogSingularity : public Error {
public:
    using Error::Error;
};

class InsufficientSpectrum : public Error {
public:
    using Error::Error;
};

/// Lorentzian with zero width and nonzero weight.
class SingularLorentzian : public Error {
public:
    using Error::Error;
};

/// Reconstruction left an imaginary residue above tolerance.
class NonRealResult : public Error {
public:
    using Error::Error;
};

class InsufficientData : public Error {
public:
    using Error::Error;
};

/// A reduced simulation left the usable part of the domain.
class DomainExit : public Error {
public:
    DomainExit(std::size_t step, const std::string& what) : Error(what), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace rpres
