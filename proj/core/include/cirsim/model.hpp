#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace cirsim {

/**
 * Cox-Ingersoll-Ross model
 *
 *   dX = kappa (lambda - X) dt + sigma sqrt(X) dW,   X(0) = x0 > 0
 *
 * together with its Lamperti transform Y = sqrt(X),
 *
 *   dY = (alpha / Y + beta Y) dt + gamma dW,         Y(0) = sqrt(x0)
 *
 * where alpha = (4 kappa lambda - sigma^2) / 8, beta = -kappa / 2 and
 * gamma = sigma / 2. Both views are stored so that X-space and Y-space
 * schemes read the same immutable value.
 */
struct CirModel {
    double kappa;
    double lambda;
    double sigma;
    double x0;

    double alpha;
    double beta;
    double gamma;
    double y0;
    // Dimensionless regime parameter sigma^2 / (2 kappa lambda).
    double a;

    // kappa lambda > 2 sigma^2, i.e. a < 1/4.
    [[nodiscard]] bool no_retake_condition() const noexcept { return kappa * lambda > 2.0 * sigma * sigma; }
    // 2 kappa lambda >= sigma^2, i.e. a <= 1.
    [[nodiscard]] bool feller() const noexcept { return 2.0 * kappa * lambda >= sigma * sigma; }
};

// Throws ParameterError unless all inputs are finite and strictly positive.
CirModel make_model(double kappa, double lambda, double sigma, double x0);

// Model with sigma chosen so that sigma^2 / (2 kappa lambda) = a.
CirModel make_model_from_a(double kappa, double lambda, double a, double x0);

// Transformed drift f(y) = alpha / y + beta y. Throws DomainError at y = 0.
double drift(const CirModel& model, double y);

// Exact conditional moments of X(t) given X(0) = x0.
double exact_mean(const CirModel& model, double t);
double exact_variance(const CirModel& model, double t);

// Parses a plain-text `key=value` file. Blank lines and lines starting with
// '#' are skipped; whitespace around keys and values is trimmed.
std::map<std::string, std::string> read_key_value_file(const std::filesystem::path& path);

// Reads kappa, lambda, sigma and x0 from a key=value file. Unknown keys are
// rejected so that typos do not silently fall back to defaults.
CirModel read_model_config(const std::filesystem::path& path);

}  // namespace cirsim
