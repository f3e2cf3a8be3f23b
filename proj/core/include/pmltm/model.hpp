#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace pmltm {

// ---------------------------------------------------------------------------
// Logistic helpers
// ---------------------------------------------------------------------------

inline double sigmoid(double t) noexcept {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

/// log(sigmoid(t)) without overflow.
inline double logSigmoid(double t) noexcept {
    return t >= 0.0 ? -std::log1p(std::exp(-t)) : t - std::log1p(std::exp(t));
}

/// Curvature coefficient of the quadratic logistic bound,
/// (1/2 - sigmoid(xi)) / (2 xi). Always in [-1/8, 0); the series is used
/// near zero where the ratio is 0/0.
inline double boundCurvature(double xi) noexcept {
    const double a = std::abs(xi);
    if (a < 1e-4) return -0.125 + a * a / 96.0;
    return -std::tanh(0.5 * a) / (4.0 * a);
}

// ---------------------------------------------------------------------------
// Model quantities
// ---------------------------------------------------------------------------

struct Hyperparameters {
    int components = 1;          ///< G
    int dimensions = 1;          ///< D
    double shape = 1.0;          ///< gamma shape s
    double rate = 0.5;           ///< gamma rate r
    int maxIter = 500;
    double aitkenTol = 0.01;
    double xiMax = 20.0;
    double zeroTol = 1e-4;
    int restarts = 5;
    std::uint64_t seed = 1;

    /// Throws InvalidArgument naming the first offending field.
    void validate() const;
};

/// eta (G), alpha (G x M), slopes (G matrices of M x D), lambda (G x M).
struct ModelParameters {
    Eigen::VectorXd eta;
    Eigen::MatrixXd alpha;
    std::vector<Eigen::MatrixXd> W;
    Eigen::MatrixXd lambda;

    int components() const noexcept { return static_cast<int>(eta.size()); }
    int items() const noexcept { return static_cast<int>(alpha.cols()); }
    int dimensions() const noexcept {
        return W.empty() ? 0 : static_cast<int>(W.front().cols());
    }

    static ModelParameters zeros(int G, int M, int D);

    /// Simplex, positivity and finiteness checks; throws InvalidArgument.
    void validate() const;
};

/// Per-observation variational quantities for every component.
///
/// Expansion points are stored M x n, latent means D x n and covariances
/// (D*D) x n per component, so the values of one observation are contiguous.
struct VariationalState {
    Eigen::MatrixXd z;                   ///< n x G responsibilities
    std::vector<Eigen::MatrixXd> xi;     ///< per component, M x n
    std::vector<Eigen::MatrixXd> mu;     ///< per component, D x n
    std::vector<Eigen::MatrixXd> sigma;  ///< per component, (D*D) x n

    static VariationalState uniform(std::size_t n, int G, int M, int D);

    std::size_t observations() const noexcept { return static_cast<std::size_t>(z.rows()); }

    Eigen::Map<const Eigen::VectorXd> mean(int g, std::size_t i) const;
    Eigen::Map<Eigen::VectorXd> mean(int g, std::size_t i);
    Eigen::Map<const Eigen::MatrixXd> covariance(int g, std::size_t i) const;
    Eigen::Map<Eigen::MatrixXd> covariance(int g, std::size_t i);
};

struct FitResult {
    ModelParameters params;
    VariationalState state;
    std::vector<double> trace;          ///< objective after every cycle, trace[0] at the start
    std::vector<double> aitkenTrace;    ///< asymptotic estimates, NaN where undefined
    bool converged = false;
    int iterations = 0;
    std::optional<double> quadLogLik;
    std::optional<double> bic;
    long effectiveDF = 0;
    std::vector<int> labels;
    std::vector<std::string> warnings;
    int monotoneViolations = 0;
    int restart = 0;
    std::uint64_t seed = 0;

    double finalBound() const { return trace.empty() ? -std::numeric_limits<double>::infinity() : trace.back(); }
};

// ---------------------------------------------------------------------------
// Pure functions of the model
// ---------------------------------------------------------------------------

/// P(x = 1 | y) = 1 / (1 + exp(-(alpha + w'y))).
double responseProbability(double alpha, const Eigen::Ref<const Eigen::VectorXd>& w,
                           const Eigen::Ref<const Eigen::VectorXd>& y);

/// Marginal gamma-Laplace penalty (s + D) log(1 + |w|_1 / r), constant dropped.
double gammaLaplacePenalty(const Eigen::Ref<const Eigen::VectorXd>& w, double s, double r);

/// Derivative of the penalty with respect to |w|_1: (s + D) / (r + |w|_1).
double gammaLaplacePenaltySlope(const Eigen::Ref<const Eigen::VectorXd>& w, double s, double r);

/// Rows rescaled as w / sqrt(1 + |w|^2), interpretable as correlations.
Eigen::MatrixXd standardizedLoadings(const Eigen::Ref<const Eigen::MatrixXd>& W);

/// Positive-response probability of the median member: sigmoid(alpha).
double medianResponseProbability(double alpha);

/// (G - 1) + G M + G [M D - D (D - 1) / 2].
long freeParameterCount(long G, long M, long D);

/// Free parameters counting only slopes with |w| > zeroTol, floored at the
/// slope-free count.
long effectiveDF(const ModelParameters& params, double zeroTol);

/// argmax of each responsibility row; ties go to the lowest index.
std::vector<int> hardLabels(const Eigen::Ref<const Eigen::MatrixXd>& z);

}  // namespace pmltm
