#include "pmltm/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "pmltm/error.hpp"
#include "pmltm/parallel.hpp"

namespace pmltm::quadrature {
namespace {

double logSumExp(const Eigen::Ref<const Eigen::ArrayXd>& a) {
    const double mx = a.maxCoeff();
    if (!std::isfinite(mx)) return mx;
    return mx + std::log((a - mx).exp().sum());
}

// Linear predictors alpha_m + w_m' y_q for every node (Q x M) and the
// all-zero-pattern log density per node.
struct NodeTables {
    Eigen::MatrixXd linear;     // Q x M
    Eigen::VectorXd baseLog;    // Q: sum_m log(1 - sigmoid(linear))
};

NodeTables nodeTables(const ModelParameters& params, int g, const QuadratureRule& rule) {
    const auto& Wg = params.W[static_cast<std::size_t>(g)];
    NodeTables t;
    t.linear = rule.points().transpose() * Wg.transpose();  // Q x M
    t.linear.rowwise() += params.alpha.row(g);
    t.baseLog.resize(t.linear.rows());
    for (Eigen::Index q = 0; q < t.linear.rows(); ++q) {
        double s = 0.0;
        for (Eigen::Index m = 0; m < t.linear.cols(); ++m) s += logSigmoid(-t.linear(q, m));
        t.baseLog[q] = s;
    }
    return t;
}

void checkCompatible(const ModelParameters& params, const QuadratureRule& rule) {
    if (params.dimensions() != rule.dimension())
        throw InvalidArgument("quadrature rule dimension " + std::to_string(rule.dimension()) +
                              " does not match the model dimension " + std::to_string(params.dimensions()));
}

}  // namespace

QuadratureRule::QuadratureRule(int nodesPerDim, int dimension)
    : nodesPerDim_(nodesPerDim), dimension_(dimension) {
    if (nodesPerDim < 1) throw InvalidArgument("quadrature needs at least one node per dimension");
    if (dimension < 1) throw InvalidArgument("quadrature dimension must be >= 1");
    if (dimension > kMaxTensorDimension)
        throw Unsupported("Gauss-Hermite tensor rule is limited to D <= " + std::to_string(kMaxTensorDimension) +
                          " (requested D = " + std::to_string(dimension) + ")");

    // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite
    // polynomials: zero diagonal, off-diagonal sqrt(k).
    const int q = nodesPerDim;
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(q, q);
    for (int k = 1; k < q; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(static_cast<double>(k));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(J);
    nodes_ = eig.eigenvalues();
    weights_ = eig.eigenvectors().row(0).transpose().array().square();
    // Symmetrise: the rule is exactly symmetric about 0.
    for (int k = 0; k < q / 2; ++k) {
        const double x = 0.5 * (nodes_[q - 1 - k] - nodes_[k]);
        nodes_[k] = -x;
        nodes_[q - 1 - k] = x;
        const double w = 0.5 * (weights_[k] + weights_[q - 1 - k]);
        weights_[k] = weights_[q - 1 - k] = w;
    }
    if (q % 2 == 1) nodes_[q / 2] = 0.0;
    weights_ /= weights_.sum();

    Eigen::Index total = 1;
    for (int d = 0; d < dimension; ++d) total *= q;
    points_.resize(dimension, total);
    logWeights_.resize(total);
    const Eigen::VectorXd logW = weights_.array().log();
    for (Eigen::Index k = 0; k < total; ++k) {
        Eigen::Index rest = k;
        double lw = 0.0;
        for (int d = 0; d < dimension; ++d) {
            const Eigen::Index idx = rest % q;
            rest /= q;
            points_(d, k) = nodes_[idx];
            lw += logW[idx];
        }
        logWeights_[k] = lw;
    }
}

Eigen::MatrixXd componentLogDensities(const BinaryMatrix& data, const ModelParameters& params,
                                      const QuadratureRule& rule, int threads) {
    checkCompatible(params, rule);
    if (static_cast<std::size_t>(params.items()) != data.cols())
        throw InvalidArgument("parameters and data disagree on the item count");
    const int G = params.components();
    const auto n = static_cast<Eigen::Index>(data.rows());
    Eigen::MatrixXd out(n, G);
    for (int g = 0; g < G; ++g) {
        const auto tables = nodeTables(params, g, rule);
        parallelFor(data.rows(), threads, [&](std::size_t begin, std::size_t end) {
            Eigen::ArrayXd acc(tables.baseLog.size());
            for (std::size_t i = begin; i < end; ++i) {
                acc = tables.baseLog.array() + rule.logWeights().array();
                for (const auto m : data.row(i)) acc += tables.linear.col(static_cast<Eigen::Index>(m)).array();
                out(static_cast<Eigen::Index>(i), g) = logSumExp(acc);
            }
        });
    }
    return out;
}

double ghLogLikelihood(const BinaryMatrix& data, const ModelParameters& params, const QuadratureRule& rule,
                       int threads) {
    const auto logDens = componentLogDensities(data, params, rule, threads);
    const Eigen::ArrayXd logEta = params.eta.array().log();
    double total = 0.0;
    for (Eigen::Index i = 0; i < logDens.rows(); ++i)
        total += logSumExp(logDens.row(i).transpose().array() + logEta);
    return total;
}

Eigen::MatrixXd enumerationOracle(const ModelParameters& params, const QuadratureRule& rule) {
    checkCompatible(params, rule);
    const int M = params.items();
    if (M > 12) throw InvalidArgument("enumeration oracle supports at most 12 items (got " + std::to_string(M) + ")");
    const int G = params.components();
    const Eigen::Index patterns = Eigen::Index{1} << M;
    Eigen::MatrixXd table = Eigen::MatrixXd::Zero(G, patterns);
    Eigen::VectorXd prob(M);
    for (int g = 0; g < G; ++g) {
        const auto& Wg = params.W[static_cast<std::size_t>(g)];
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const auto qq = static_cast<Eigen::Index>(q);
            const double weight = std::exp(rule.logWeights()[qq]);
            for (int m = 0; m < M; ++m)
                prob[m] = responseProbability(params.alpha(g, m), Wg.row(m).transpose(), rule.points().col(qq));
            for (Eigen::Index p = 0; p < patterns; ++p) {
                double v = weight;
                for (int m = 0; m < M; ++m) v *= ((p >> m) & 1) ? prob[m] : 1.0 - prob[m];
                table(g, p) += v;
            }
        }
    }
    return table;
}

double enumerationLogLikelihood(const BinaryMatrix& data, const ModelParameters& params,
                                const Eigen::MatrixXd& table) {
    if (static_cast<std::size_t>(params.items()) != data.cols())
        throw InvalidArgument("parameters and data disagree on the item count");
    double total = 0.0;
    for (std::size_t i = 0; i < data.rows(); ++i) {
        Eigen::Index pattern = 0;
        for (const auto m : data.row(i)) pattern |= Eigen::Index{1} << m;
        total += std::log(params.eta.dot(table.col(pattern)));
    }
    return total;
}

double bic(double logLikelihood, double freeParameters, double n) {
    return -2.0 * logLikelihood + freeParameters * std::log(n);
}

double ghBIC(const BinaryMatrix& data, FitResult& fit, const QuadratureRule& rule, double zeroTol, int threads) {
    const double l = ghLogLikelihood(data, fit.params, rule, threads);
    fit.effectiveDF = effectiveDF(fit.params, zeroTol);
    fit.quadLogLik = l;
    fit.bic = bic(l, static_cast<double>(fit.effectiveDF), static_cast<double>(data.rows()));
    return *fit.bic;
}

}  // namespace pmltm::quadrature
