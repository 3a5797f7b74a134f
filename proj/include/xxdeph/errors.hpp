#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace xxdeph {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid parameters or configuration; nothing was computed.
class ConfigError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class StepSizeError : public NumericalError {
public:
    StepSizeError(const std::string& what, double t) : NumericalError(what), time(t) {}
    double time;
};

class SingularInputError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// sin(alpha) or sin(alpha L) vanishes; the caller may perturb s.
class DegenerateAngleError : public NumericalError {
public:
    DegenerateAngleError(const std::string& what, std::complex<double> s_)
        : NumericalError(what), s(s_) {}
    std::complex<double> s;
};

class ContourCollisionError : public NumericalError {
public:
    ContourCollisionError(const std::string& what, std::complex<double> s_)
        : NumericalError(what), s(s_) {}
    std::complex<double> s;
};

class QuadratureError : public NumericalError {
public:
    QuadratureError(const std::string& what, double a_, double b_, double err)
        : NumericalError(what), a(a_), b(b_), error_estimate(err) {}
    double a, b, error_estimate;
};

class MarginalRegimeError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class StructureError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// Failures collected over momentum modes: (n, message) pairs.
class ModeFailureError : public NumericalError {
public:
    explicit ModeFailureError(std::vector<std::pair<int, std::string>> f)
        : NumericalError(summarize(f)), failures(std::move(f)) {}
    std::vector<std::pair<int, std::string>> failures;

private:
    static std::string summarize(const std::vector<std::pair<int, std::string>>& f) {
        std::string s = std::to_string(f.size()) + " mode(s) failed:";
        for (std::size_t i = 0; i < f.size() && i < 8; ++i)
            s += " [n=" + std::to_string(f[i].first) + "] " + f[i].second + ";";
        if (f.size() > 8) s += " ...";
        return s;
    }
};

} // namespace xxdeph
