#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pmltm/binary_matrix.hpp"
#include "pmltm/model.hpp"

namespace pmltm::vem {

/// Row-major dense byte copy of a BinaryMatrix; the VEM inner loops read
/// every (i, m) cell so they work on this rather than the sparse rows.
/// Implicitly constructible so the operations below accept a BinaryMatrix.
struct DenseBinary {
    std::size_t n = 0;
    std::size_t M = 0;
    std::vector<std::uint8_t> bytes;

    DenseBinary() = default;
    DenseBinary(const BinaryMatrix& matrix);  // NOLINT(google-explicit-constructor)

    const std::uint8_t* row(std::size_t i) const { return bytes.data() + i * M; }
    double operator()(std::size_t i, std::size_t m) const { return bytes[i * M + m]; }
};

enum class InitStrategy { RandomResponsibilities, KMeansSeeded };

struct FitConfig {
    Hyperparameters hyper;
    InitStrategy initStrategy = InitStrategy::RandomResponsibilities;
    /// Relative tolerance for flagging a decrease of the objective.
    double objectiveGuardTol = 1e-8;
    /// When false the slope penalty is switched off (lambda treated as 0).
    bool penalize = true;
    int threads = 1;

    void validate() const;
};

struct BoundPieces {
    Eigen::MatrixXd perObsComponent;  ///< n x G values of L(xi_ig)
    double total = 0.0;
};

/// Keeps the last three objective values and the running Aitken estimate.
class AitkenTracker {
public:
    void push(double value);

    std::size_t size() const noexcept { return count_; }
    /// Most recent values, oldest first. Only the last min(size, 3) are valid.
    const double* values() const noexcept { return values_; }
    /// Latest acceleration a; empty when the step denominator is too small.
    std::optional<double> acceleration() const noexcept { return acceleration_; }
    /// Latest and previous asymptotic estimates; empty when undefined.
    std::optional<double> estimate() const noexcept { return estimate_; }
    std::optional<double> previousEstimate() const noexcept { return previousEstimate_; }

private:
    double values_[3] = {0.0, 0.0, 0.0};
    std::size_t count_ = 0;
    std::optional<double> acceleration_;
    std::optional<double> estimate_;
    std::optional<double> previousEstimate_;
};

/// True when two consecutive asymptotic estimates differ by less than tol,
/// or when the last raw step is below 1e-10.
bool aitkenConverged(const AitkenTracker& tracker, double tol);

struct Initialization {
    ModelParameters params;
    VariationalState state;
};

Initialization initialize(const DenseBinary& data, const FitConfig& config, std::uint64_t seed);

/// z_ig proportional to eta_g exp(L_ig), normalised by log-sum-exp.
Eigen::MatrixXd veStepResponsibilities(const ModelParameters& params, const BoundPieces& bound);

struct LatentMoments {
    std::vector<Eigen::MatrixXd> mu;     ///< per component, D x n
    std::vector<Eigen::MatrixXd> sigma;  ///< per component, (D*D) x n
};

LatentMoments veStepLatentMoments(const DenseBinary& data, const ModelParameters& params,
                                  const VariationalState& state, int threads = 1);

/// lambda_mg = (s + D) / (|w_mg|_1 + r).
Eigen::MatrixXd veStepRates(const ModelParameters& params, double s, double r);

/// Optimal expansion points for the current latent moments, clamped to
/// [1e-8, xiMax].
std::vector<Eigen::MatrixXd> mStepXi(const ModelParameters& params, const VariationalState& state,
                                     double xiMax, int threads = 1);

struct SlopeUpdateOptions {
    double zeroTol = 1e-4;
    bool penalize = true;
};

struct SlopesAndIntercepts {
    std::vector<Eigen::MatrixXd> W;
    Eigen::MatrixXd alpha;
};

/// Maximises, for every (m, g), the quadratic surrogate built from the
/// logistic bound and the square-root majorisation of the weighted L1 term.
/// Uses the current W (in params) for the majoriser; coordinates with
/// |w| < zeroTol are returned as exactly 0.
SlopesAndIntercepts mStepWeightsIntercepts(const DenseBinary& data, const VariationalState& state,
                                           const ModelParameters& params,
                                           const Eigen::MatrixXd& lambda,
                                           const SlopeUpdateOptions& options, int threads = 1);

struct MixingUpdate {
    Eigen::VectorXd eta;
    std::vector<std::string> warnings;
};

/// eta_g = (n_g - 1/2) / (n - G/2); empty components are clamped to 1e-6.
MixingUpdate mStepMixingProportions(const Eigen::Ref<const Eigen::MatrixXd>& z);

struct ObjectiveTerms {
    double shape = 1.0;
    double rate = 0.5;
    bool penalize = true;
};

/// Per-(i, g) bounds L(xi_ig) at the stored xi and the total objective
/// sum_ig z_ig (log eta_g + L_ig - log z_ig) + Dirichlet(1/2) log prior
/// - sum_mg penalty(w_mg).
BoundPieces evaluateBound(const DenseBinary& data, const ModelParameters& params,
                          const VariationalState& state, const ObjectiveTerms& terms,
                          int threads = 1);

/// Runs `config.hyper.restarts` fits and keeps the one with the highest
/// final objective (ties: fewer iterations). quadLogLik and bic are left
/// empty; see selection::fitAndScore.
FitResult fit(const BinaryMatrix& data, const FitConfig& config);

/// A single restart from an explicit seed.
FitResult fitOnce(const DenseBinary& data, const FitConfig& config, std::uint64_t seed);

/// Seed of restart k derived from a base seed.
std::uint64_t restartSeed(std::uint64_t base, std::uint64_t k);

}  // namespace pmltm::vem
