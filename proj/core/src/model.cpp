#include "pmltm/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pmltm/error.hpp"

namespace pmltm {
namespace {

bool allFinite(const Eigen::Ref<const Eigen::MatrixXd>& m) { return m.allFinite(); }

}  // namespace

void Hyperparameters::validate() const {
    if (components < 1) throw InvalidArgument("components must be >= 1");
    if (dimensions < 1) throw InvalidArgument("dimensions must be >= 1");
    if (!(shape > 0.0) || !std::isfinite(shape)) throw InvalidArgument("gamma shape must be > 0");
    if (!(rate > 0.0) || !std::isfinite(rate)) throw InvalidArgument("gamma rate must be > 0");
    if (maxIter < 1) throw InvalidArgument("maxIter must be >= 1");
    if (!(aitkenTol > 0.0)) throw InvalidArgument("aitkenTol must be > 0");
    if (!(xiMax > 0.0)) throw InvalidArgument("xiMax must be > 0");
    if (!(zeroTol > 0.0)) throw InvalidArgument("zeroTol must be > 0");
    if (restarts < 1) throw InvalidArgument("restarts must be >= 1");
}

ModelParameters ModelParameters::zeros(int G, int M, int D) {
    ModelParameters p;
    p.eta = Eigen::VectorXd::Constant(G, 1.0 / G);
    p.alpha = Eigen::MatrixXd::Zero(G, M);
    p.W.assign(static_cast<std::size_t>(G), Eigen::MatrixXd::Zero(M, D));
    p.lambda = Eigen::MatrixXd::Ones(G, M);
    return p;
}

void ModelParameters::validate() const {
    const auto G = eta.size();
    if (G < 1) throw InvalidArgument("parameters need at least one component");
    if (alpha.rows() != G || lambda.rows() != G || static_cast<Eigen::Index>(W.size()) != G)
        throw InvalidArgument("parameter blocks disagree on the component count");
    const auto M = alpha.cols();
    if (lambda.cols() != M) throw InvalidArgument("lambda must be G x M");
    for (const auto& Wg : W) {
        if (Wg.rows() != M || Wg.cols() != W.front().cols())
            throw InvalidArgument("every slope matrix must be M x D");
        if (!allFinite(Wg)) throw InvalidArgument("slopes must be finite");
    }
    if (!allFinite(eta) || !allFinite(alpha) || !allFinite(lambda))
        throw InvalidArgument("parameters must be finite");
    if ((eta.array() <= 0.0).any()) throw InvalidArgument("mixing proportions must be > 0");
    if (std::abs(eta.sum() - 1.0) > 1e-10) throw InvalidArgument("mixing proportions must sum to 1");
    if ((lambda.array() <= 0.0).any()) throw InvalidArgument("rates must be > 0");
}

VariationalState VariationalState::uniform(std::size_t n, int G, int M, int D) {
    const auto nn = static_cast<Eigen::Index>(n);
    VariationalState s;
    s.z = Eigen::MatrixXd::Constant(nn, G, 1.0 / G);
    s.xi.assign(static_cast<std::size_t>(G), Eigen::MatrixXd::Ones(M, nn));
    s.mu.assign(static_cast<std::size_t>(G), Eigen::MatrixXd::Zero(D, nn));
    Eigen::MatrixXd eye(D * D, nn);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(D, D);
    for (Eigen::Index i = 0; i < nn; ++i) eye.col(i) = Eigen::Map<const Eigen::VectorXd>(I.data(), D * D);
    s.sigma.assign(static_cast<std::size_t>(G), eye);
    return s;
}

Eigen::Map<const Eigen::VectorXd> VariationalState::mean(int g, std::size_t i) const {
    const auto& m = mu[static_cast<std::size_t>(g)];
    return {m.data() + static_cast<Eigen::Index>(i) * m.rows(), m.rows()};
}

Eigen::Map<Eigen::VectorXd> VariationalState::mean(int g, std::size_t i) {
    auto& m = mu[static_cast<std::size_t>(g)];
    return {m.data() + static_cast<Eigen::Index>(i) * m.rows(), m.rows()};
}

Eigen::Map<const Eigen::MatrixXd> VariationalState::covariance(int g, std::size_t i) const {
    const auto& s = sigma[static_cast<std::size_t>(g)];
    const auto D = mu[static_cast<std::size_t>(g)].rows();
    return {s.data() + static_cast<Eigen::Index>(i) * s.rows(), D, D};
}

Eigen::Map<Eigen::MatrixXd> VariationalState::covariance(int g, std::size_t i) {
    auto& s = sigma[static_cast<std::size_t>(g)];
    const auto D = mu[static_cast<std::size_t>(g)].rows();
    return {s.data() + static_cast<Eigen::Index>(i) * s.rows(), D, D};
}

double responseProbability(double alpha, const Eigen::Ref<const Eigen::VectorXd>& w,
                           const Eigen::Ref<const Eigen::VectorXd>& y) {
    if (w.size() != y.size()) throw InvalidArgument("responseProbability: w and y differ in length");
    if (!std::isfinite(alpha) || !w.allFinite() || !y.allFinite())
        throw InvalidArgument("responseProbability: non-finite input");
    return sigmoid(alpha + w.dot(y));
}

double gammaLaplacePenalty(const Eigen::Ref<const Eigen::VectorXd>& w, double s, double r) {
    if (!(s > 0.0) || !(r > 0.0)) throw InvalidArgument("gamma shape and rate must be > 0");
    const double D = static_cast<double>(w.size());
    return (s + D) * std::log1p(w.lpNorm<1>() / r);
}

double gammaLaplacePenaltySlope(const Eigen::Ref<const Eigen::VectorXd>& w, double s, double r) {
    if (!(s > 0.0) || !(r > 0.0)) throw InvalidArgument("gamma shape and rate must be > 0");
    const double D = static_cast<double>(w.size());
    return (s + D) / (r + w.lpNorm<1>());
}

Eigen::MatrixXd standardizedLoadings(const Eigen::Ref<const Eigen::MatrixXd>& W) {
    Eigen::MatrixXd out(W.rows(), W.cols());
    for (Eigen::Index m = 0; m < W.rows(); ++m)
        out.row(m) = W.row(m) / std::sqrt(1.0 + W.row(m).squaredNorm());
    return out;
}

double medianResponseProbability(double alpha) { return sigmoid(alpha); }

long freeParameterCount(long G, long M, long D) {
    if (G < 1 || M < 1 || D < 1) throw InvalidArgument("freeParameterCount: G, M, D must be >= 1");
    return (G - 1) + G * M + G * (M * D - D * (D - 1) / 2);
}

long effectiveDF(const ModelParameters& params, double zeroTol) {
    const long G = params.components();
    const long M = params.items();
    const long D = params.dimensions();
    long nonzero = 0;
    for (const auto& Wg : params.W) nonzero += (Wg.array().abs() > zeroTol).count();
    const long base = (G - 1) + G * M;
    const long df = base + nonzero - G * D * (D - 1) / 2;
    return std::max(df, base);
}

std::vector<int> hardLabels(const Eigen::Ref<const Eigen::MatrixXd>& z) {
    std::vector<int> labels(static_cast<std::size_t>(z.rows()), 0);
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        int best = 0;
        for (Eigen::Index g = 1; g < z.cols(); ++g)
            if (z(i, g) > z(i, best)) best = static_cast<int>(g);
        labels[static_cast<std::size_t>(i)] = best;
    }
    return labels;
}

}  // namespace pmltm
