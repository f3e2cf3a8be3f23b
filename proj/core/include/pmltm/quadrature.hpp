#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "pmltm/binary_matrix.hpp"
#include "pmltm/model.hpp"

namespace pmltm::quadrature {

/// Gauss-Hermite rule for the standard normal density, expanded as a
/// tensor product over D dimensions (D <= 4).
class QuadratureRule {
public:
    static constexpr int kMaxTensorDimension = 4;

    QuadratureRule(int nodesPerDim, int dimension);

    int nodesPerDim() const noexcept { return nodesPerDim_; }
    int dimension() const noexcept { return dimension_; }

    /// One-dimensional abscissas and weights; weights sum to 1.
    const Eigen::VectorXd& nodes() const noexcept { return nodes_; }
    const Eigen::VectorXd& weights() const noexcept { return weights_; }

    /// Tensor grid: D x Q points and log weights.
    const Eigen::MatrixXd& points() const noexcept { return points_; }
    const Eigen::VectorXd& logWeights() const noexcept { return logWeights_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(points_.cols()); }

private:
    int nodesPerDim_;
    int dimension_;
    Eigen::VectorXd nodes_;
    Eigen::VectorXd weights_;
    Eigen::MatrixXd points_;
    Eigen::VectorXd logWeights_;
};

/// log p(x_i | theta_g) for every observation and component (n x G).
Eigen::MatrixXd componentLogDensities(const BinaryMatrix& data, const ModelParameters& params,
                                      const QuadratureRule& rule, int threads = 1);

/// sum_i log sum_g eta_g p(x_i | theta_g) with the inner integral by quadrature.
double ghLogLikelihood(const BinaryMatrix& data, const ModelParameters& params,
                       const QuadratureRule& rule, int threads = 1);

/// G x 2^M table of pattern probabilities; bit m of the column index is x_m.
/// Throws InvalidArgument for M > 12.
Eigen::MatrixXd enumerationOracle(const ModelParameters& params, const QuadratureRule& rule);

/// Log-likelihood of the data implied by an enumeration table.
double enumerationLogLikelihood(const BinaryMatrix& data, const ModelParameters& params,
                                const Eigen::MatrixXd& table);

/// -2 l + k log n.
double bic(double logLikelihood, double freeParameters, double n);

/// Fills fit.quadLogLik and fit.bic (k = effective degrees of freedom).
/// Throws Unsupported when D exceeds the tensor-rule cap.
double ghBIC(const BinaryMatrix& data, FitResult& fit, const QuadratureRule& rule,
             double zeroTol = 1e-4, int threads = 1);

}  // namespace pmltm::quadrature
