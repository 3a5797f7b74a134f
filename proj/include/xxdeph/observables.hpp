#pragma once

#include "xxdeph/model.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace xxdeph {

// m_x = -Re C_xx. Throws StructureError if |Im C_xx| > tol.
std::vector<double> magnetization_profile(const CorrelationMatrix& C, double tol = 1e-10);

// j_x = 4J Im C_{x+1,x} (periodic), the current on bond (x, x+1).
// Throws StructureError if |Re C_{x+1,x}| > tol.
std::vector<double> current_profile(const CorrelationMatrix& C, double J, double tol = 1e-10);

// First site of the right half: ceil((L-1)/2).
int right_half_start(int L);

// M = sum_{x >= ceil((L-1)/2)} m_x + L/2.
double transferred_magnetization(const std::vector<double>& m, int L);

// Same from density weights w (see mode_sum): the right-half sum is a geometric series per mode,
// so this is O(L) and needs no profile.
double transferred_magnetization_modes(const std::vector<cplx>& w, int L);

struct SeriesMeta {
    int L = 0;
    double J = 1.0;
    double gamma = 0.0;
    std::string tag;
    std::map<std::string, std::string> extra;
};

struct TransportSeries {
    std::vector<double> times;
    std::vector<double> M;
    std::vector<double> beta;  // NaN where undefined
    std::vector<char> valid;   // beta defined (M > 0 on the stencil)
    SeriesMeta meta;

    void check() const; // ConfigError unless times strictly increase and sizes agree
    void write_csv(std::ostream& out) const; // "t,M,beta"
    std::string to_json() const;
};

struct LogDerivativeOptions {
    int smooth_half_window = 0; // > 0: local quadratic fit over 2k+1 points
};

// beta = d log M / d log t; central differences inside, one-sided at the ends.
// Points whose stencil touches M <= 0 are flagged invalid (beta = NaN).
TransportSeries log_derivative(TransportSeries s, const LogDerivativeOptions& opt = {});

// Log-spaced grid with the given points per decade, both ends included.
std::vector<double> log_time_grid(double t0, double t1, int per_decade = 24);

struct Profile {
    double t = 0.0;
    std::vector<double> x;
    std::vector<double> value;
};

enum class DiffusionMethod {
    spread,       // value is a single-peak density; sigma^2 = 2Dt
    wall_gradient // value is a wall magnetization; -dm/dx / 2 is the spreading density
};

struct DiffusionFit {
    double D = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    std::vector<double> variances;
};

// Linear regression of the spatial variance against t. Warns when R^2 < 0.99.
DiffusionFit fit_diffusion(const std::vector<Profile>& profiles,
                           DiffusionMethod method = DiffusionMethod::spread);
double profile_variance(const std::vector<double>& x, const std::vector<double>& rho);

struct PowerLawFit {
    double exponent = 0.0;
    double std_error = 0.0;
    double prefactor = 0.0;
    int points = 0;
};

// Least squares of log y on log t. ConfigError with fewer than 5 points or y <= 0.
PowerLawFit fit_powerlaw(const std::vector<double>& t, const std::vector<double>& y);

} // namespace xxdeph
