#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "pmltm/binary_matrix.hpp"
#include "pmltm/model.hpp"

namespace testing {

inline pmltm::BinaryMatrix randomBinary(std::size_t n, std::size_t M, double p, std::mt19937_64& rng) {
    std::bernoulli_distribution coin(p);
    std::vector<std::pair<std::size_t, std::size_t>> entries;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t m = 0; m < M; ++m)
            if (coin(rng)) entries.emplace_back(i, m);
    return pmltm::BinaryMatrix::fromEntries(n, M, std::move(entries));
}

inline pmltm::ModelParameters randomParams(int G, int M, int D, std::mt19937_64& rng, double scale = 1.5) {
    std::uniform_real_distribution<double> u(-scale, scale);
    auto p = pmltm::ModelParameters::zeros(G, M, D);
    for (int g = 0; g < G; ++g) {
        for (int m = 0; m < M; ++m) {
            p.alpha(g, m) = u(rng);
            for (int d = 0; d < D; ++d) p.W[static_cast<std::size_t>(g)](m, d) = u(rng);
        }
    }
    std::uniform_real_distribution<double> w(0.2, 1.0);
    for (int g = 0; g < G; ++g) p.eta[g] = w(rng);
    p.eta /= p.eta.sum();
    p.lambda.setOnes();
    return p;
}

/// Every binary pattern of length M, one per row.
inline pmltm::BinaryMatrix allPatterns(int M) {
    std::vector<std::pair<std::size_t, std::size_t>> entries;
    const std::size_t count = std::size_t{1} << M;
    for (std::size_t p = 0; p < count; ++p)
        for (int m = 0; m < M; ++m)
            if ((p >> m) & 1) entries.emplace_back(p, static_cast<std::size_t>(m));
    return pmltm::BinaryMatrix::fromEntries(count, static_cast<std::size_t>(M), std::move(entries));
}

/// Plain Nelder-Mead minimiser; a generic optimiser that knows nothing of
/// the structure of the objective.
inline Eigen::VectorXd nelderMead(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x0,
                                  double step, double ftol = 1e-15, int maxIter = 200000) {
    const auto k = x0.size();
    std::vector<Eigen::VectorXd> simplex(static_cast<std::size_t>(k + 1), x0);
    for (Eigen::Index j = 0; j < k; ++j) simplex[static_cast<std::size_t>(j + 1)][j] += step;
    std::vector<double> values(simplex.size());
    for (std::size_t j = 0; j < simplex.size(); ++j) values[j] = f(simplex[j]);
    std::vector<std::size_t> order(simplex.size());
    for (int it = 0; it < maxIter; ++it) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
        const auto best = order.front(), worst = order.back(), second = order[order.size() - 2];
        if (std::abs(values[worst] - values[best]) <= ftol * (1.0 + std::abs(values[best]))) {
            double spread = 0.0;
            for (const auto& s : simplex) spread = std::max(spread, (s - simplex[best]).cwiseAbs().maxCoeff());
            if (spread < 1e-10) break;
        }
        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(k);
        for (std::size_t j = 0; j < simplex.size(); ++j)
            if (j != worst) centroid += simplex[j];
        centroid /= static_cast<double>(k);
        const Eigen::VectorXd reflected = centroid + (centroid - simplex[worst]);
        const double fr = f(reflected);
        if (fr < values[best]) {
            const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - simplex[worst]);
            const double fe = f(expanded);
            if (fe < fr) {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
        } else if (fr < values[second]) {
            simplex[worst] = reflected;
            values[worst] = fr;
        } else {
            const Eigen::VectorXd contracted = centroid + 0.5 * (simplex[worst] - centroid);
            const double fc = f(contracted);
            if (fc < values[worst]) {
                simplex[worst] = contracted;
                values[worst] = fc;
            } else {
                for (std::size_t j = 0; j < simplex.size(); ++j) {
                    if (j == best) continue;
                    simplex[j] = simplex[best] + 0.5 * (simplex[j] - simplex[best]);
                    values[j] = f(simplex[j]);
                }
            }
        }
    }
    const auto best = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
    return simplex[best];
}

}  // namespace testing
