#include "pmltm/vem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <Eigen/Cholesky>

#include "pmltm/error.hpp"
#include "pmltm/parallel.hpp"

namespace pmltm::vem {
namespace {

constexpr double kXiFloor = 1e-8;
constexpr double kRidge = 1e-8;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Gaussian posterior of the latent trait for one (i, g) under the quadratic
// logistic bound, plus the bound L itself.
class ComponentPosterior {
public:
    explicit ComponentPosterior(Eigen::Index D)
        : precision_(D, D), rhs_(D), llt_(D), identity_(Eigen::MatrixXd::Identity(D, D)) {}

    /// x: M bytes; xi: M expansion points; alpha: M intercepts; W: M x D.
    double compute(const std::uint8_t* x, const double* xi, const Eigen::VectorXd& alpha,
                   const Eigen::MatrixXd& W, Eigen::Ref<Eigen::VectorXd> mu,
                   Eigen::Ref<Eigen::MatrixXd> sigma) {
        const Eigen::Index M = W.rows();
        const Eigen::Index D = W.cols();
        precision_.setIdentity();
        rhs_.setZero();
        double constant = 0.0;
        for (Eigen::Index m = 0; m < M; ++m) {
            const double e = xi[m];
            const double B = boundCurvature(e);
            const double a = alpha[m];
            const double centred = static_cast<double>(x[m]) - 0.5;
            constant += logSigmoid(e) - 0.5 * e - B * e * e + centred * a + B * a * a;
            const double coef = centred + 2.0 * B * a;
            for (Eigen::Index d = 0; d < D; ++d) {
                const double wd = W(m, d);
                if (wd == 0.0) continue;
                rhs_[d] += coef * wd;
                const double s = -2.0 * B * wd;
                for (Eigen::Index k = 0; k <= d; ++k) precision_(d, k) += s * W(m, k);
            }
        }
        for (Eigen::Index d = 0; d < D; ++d)
            for (Eigen::Index k = 0; k < d; ++k) precision_(k, d) = precision_(d, k);

        llt_.compute(precision_);
        if (llt_.info() != Eigen::Success)
            throw NumericalFailure("latent precision matrix is not positive definite");
        double logDetPrecision = 0.0;
        const auto& L = llt_.matrixLLT();
        for (Eigen::Index d = 0; d < D; ++d) logDetPrecision += 2.0 * std::log(L(d, d));

        mu = rhs_;
        llt_.solveInPlace(mu);
        sigma = identity_;
        llt_.solveInPlace(sigma);
        return constant - 0.5 * logDetPrecision + 0.5 * rhs_.dot(mu);
    }

private:
    Eigen::MatrixXd precision_;
    Eigen::VectorXd rhs_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    Eigen::MatrixXd identity_;
};

struct PassOutput {
    LatentMoments moments;
    Eigen::MatrixXd bounds;  // n x G
};

// One sweep over (i, g) giving latent moments and per-pair bounds at the
// stored xi.
PassOutput posteriorPass(const DenseBinary& data, const ModelParameters& params,
                         const std::vector<Eigen::MatrixXd>& xi, int threads) {
    const auto n = static_cast<Eigen::Index>(data.n);
    const int G = params.components();
    const Eigen::Index D = params.dimensions();
    if (static_cast<std::size_t>(params.items()) != data.M)
        throw InvalidArgument("parameters and data disagree on the item count");

    PassOutput out;
    out.bounds.resize(n, G);
    out.moments.mu.assign(static_cast<std::size_t>(G), Eigen::MatrixXd(D, n));
    out.moments.sigma.assign(static_cast<std::size_t>(G), Eigen::MatrixXd(D * D, n));

    std::vector<Eigen::VectorXd> alphaRows(static_cast<std::size_t>(G));
    for (int g = 0; g < G; ++g) alphaRows[static_cast<std::size_t>(g)] = params.alpha.row(g).transpose();

    parallelFor(data.n, threads, [&](std::size_t begin, std::size_t end) {
        ComponentPosterior post(D);
        for (std::size_t i = begin; i < end; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            for (int g = 0; g < G; ++g) {
                const auto gg = static_cast<std::size_t>(g);
                auto& mu = out.moments.mu[gg];
                auto& sg = out.moments.sigma[gg];
                Eigen::Map<Eigen::VectorXd> muI(mu.data() + ii * D, D);
                Eigen::Map<Eigen::MatrixXd> sigmaI(sg.data() + ii * D * D, D, D);
                out.bounds(ii, g) = post.compute(data.row(i), xi[gg].col(ii).data(), alphaRows[gg],
                                                 params.W[gg], muI, sigmaI);
            }
        }
    });
    return out;
}

double objectiveTotal(const ModelParameters& params, const Eigen::MatrixXd& z,
                      const Eigen::MatrixXd& bounds, const ObjectiveTerms& terms) {
    const int G = params.components();
    double total = 0.0;
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        for (int g = 0; g < G; ++g) {
            const double zig = z(i, g);
            if (zig <= 0.0) continue;
            total += zig * (std::log(params.eta[g]) + bounds(i, g) - std::log(zig));
        }
    }
    // Dirichlet(1/2, ..., 1/2) prior on the mixing proportions.
    for (int g = 0; g < G; ++g) total -= 0.5 * std::log(params.eta[g]);
    if (terms.penalize) {
        for (int g = 0; g < G; ++g) {
            const auto& Wg = params.W[static_cast<std::size_t>(g)];
            for (Eigen::Index m = 0; m < Wg.rows(); ++m)
                total -= gammaLaplacePenalty(Wg.row(m).transpose(), terms.shape, terms.rate);
        }
    }
    return total;
}

Eigen::MatrixXd kmeansResponsibilities(const DenseBinary& data, int G, std::mt19937_64& rng) {
    const auto n = static_cast<Eigen::Index>(data.n);
    const auto M = static_cast<Eigen::Index>(data.M);
    Eigen::MatrixXd X(n, M);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index m = 0; m < M; ++m) X(i, m) = data(static_cast<std::size_t>(i), static_cast<std::size_t>(m));

    // k-means++ seeding
    Eigen::MatrixXd centres(G, M);
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    centres.row(0) = X.row(pick(rng));
    Eigen::VectorXd dist2 = (X.rowwise() - centres.row(0)).rowwise().squaredNorm();
    for (int k = 1; k < G; ++k) {
        const double total = dist2.sum();
        Eigen::Index chosen = pick(rng);
        if (total > 0.0) {
            std::uniform_real_distribution<double> u(0.0, total);
            double target = u(rng);
            for (Eigen::Index i = 0; i < n; ++i) {
                target -= dist2[i];
                if (target <= 0.0) {
                    chosen = i;
                    break;
                }
            }
        }
        centres.row(k) = X.row(chosen);
        dist2 = dist2.cwiseMin((X.rowwise() - centres.row(k)).rowwise().squaredNorm());
    }

    std::vector<int> assign(static_cast<std::size_t>(n), 0);
    for (int iter = 0; iter < 50; ++iter) {
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::Index best = 0;
            (centres.rowwise() - X.row(i)).rowwise().squaredNorm().minCoeff(&best);
            if (assign[static_cast<std::size_t>(i)] != static_cast<int>(best)) {
                assign[static_cast<std::size_t>(i)] = static_cast<int>(best);
                changed = true;
            }
        }
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(G, M);
        Eigen::VectorXd counts = Eigen::VectorXd::Zero(G);
        for (Eigen::Index i = 0; i < n; ++i) {
            sums.row(assign[static_cast<std::size_t>(i)]) += X.row(i);
            counts[assign[static_cast<std::size_t>(i)]] += 1.0;
        }
        for (int k = 0; k < G; ++k)
            if (counts[k] > 0) centres.row(k) = sums.row(k) / counts[k];
        if (!changed && iter > 0) break;
    }

    Eigen::MatrixXd z = Eigen::MatrixXd::Constant(n, G, 0.1 / G);
    for (Eigen::Index i = 0; i < n; ++i) z(i, assign[static_cast<std::size_t>(i)]) += 0.9;
    return z;
}

}  // namespace

// ---------------------------------------------------------------------------

DenseBinary::DenseBinary(const BinaryMatrix& matrix)
    : n(matrix.rows()), M(matrix.cols()), bytes(matrix.toDenseBytes()) {}

void FitConfig::validate() const {
    hyper.validate();
    if (!(objectiveGuardTol >= 0.0)) throw InvalidArgument("objectiveGuardTol must be >= 0");
}

void AitkenTracker::push(double value) {
    if (count_ < 3) {
        values_[count_] = value;
        ++count_;
    } else {
        values_[0] = values_[1];
        values_[1] = values_[2];
        values_[2] = value;
    }
    if (count_ < 3) return;

    previousEstimate_ = estimate_;
    const double step = values_[2] - values_[1];
    const double previousStep = values_[1] - values_[0];
    if (std::abs(previousStep) <= 1e-12) {
        acceleration_.reset();
        estimate_.reset();
        return;
    }
    acceleration_ = step / previousStep;
    if (*acceleration_ >= 1.0) {
        estimate_.reset();
        return;
    }
    estimate_ = values_[1] + step / (1.0 - *acceleration_);
}

bool aitkenConverged(const AitkenTracker& tracker, double tol) {
    const auto k = tracker.size();
    if (k >= 2) {
        const double* v = tracker.values();
        const std::size_t last = std::min<std::size_t>(k, 3) - 1;
        // Plateau at rounding level: the acceleration estimate is meaningless here.
        if (std::abs(v[last] - v[last - 1]) <= 1e-14 * std::max(1.0, std::abs(v[last]))) return true;
    }
    const auto est = tracker.estimate();
    const auto prev = tracker.previousEstimate();
    return est && prev && std::abs(*est - *prev) < tol;
}

std::uint64_t restartSeed(std::uint64_t base, std::uint64_t k) {
    return splitmix64(base ^ splitmix64(k + 0x51ED2701ULL));
}

Initialization initialize(const DenseBinary& data, const FitConfig& config, std::uint64_t seed) {
    config.validate();
    const auto& h = config.hyper;
    if (data.n == 0 || data.M == 0) throw InvalidArgument("cannot fit an empty matrix");
    if (static_cast<std::size_t>(h.components) > data.n)
        throw InvalidArgument("more components (" + std::to_string(h.components) + ") than observations (" +
                              std::to_string(data.n) + ")");

    const int G = h.components;
    const int D = h.dimensions;
    const auto M = static_cast<Eigen::Index>(data.M);
    const auto n = static_cast<Eigen::Index>(data.n);
    std::mt19937_64 rng(seed);

    Initialization init;
    auto& p = init.params;
    p = ModelParameters::zeros(G, static_cast<int>(M), D);

    // Slopes are drawn first so they do not depend on n.
    std::uniform_real_distribution<double> slope(-0.5, 0.5);
    for (int g = 0; g < G; ++g)
        for (Eigen::Index m = 0; m < M; ++m)
            for (int d = 0; d < D; ++d) p.W[static_cast<std::size_t>(g)](m, d) = slope(rng);

    std::vector<double> ones(static_cast<std::size_t>(M), 0.0);
    for (std::size_t i = 0; i < data.n; ++i)
        for (std::size_t m = 0; m < data.M; ++m) ones[m] += data(i, m);
    for (Eigen::Index m = 0; m < M; ++m) {
        const double mean = ones[static_cast<std::size_t>(m)] / static_cast<double>(n);
        double logit = std::log(mean) - std::log1p(-mean);
        if (std::isnan(logit)) logit = 0.0;
        p.alpha.col(m).setConstant(std::clamp(logit, -4.0, 4.0));
    }
    p.lambda.setConstant((h.shape + D) / h.rate);

    auto& s = init.state;
    s = VariationalState::uniform(data.n, G, static_cast<int>(M), D);
    if (G > 1) {
        if (config.initStrategy == InitStrategy::KMeansSeeded) {
            s.z = kmeansResponsibilities(data, G, rng);
        } else {
            std::exponential_distribution<double> expo(1.0);
            for (Eigen::Index i = 0; i < n; ++i) {
                for (int g = 0; g < G; ++g) s.z(i, g) = expo(rng);
                s.z.row(i) /= s.z.row(i).sum();
            }
        }
    }
    p.eta = s.z.colwise().mean().transpose();
    p.eta /= p.eta.sum();

    auto moments = veStepLatentMoments(data, p, s, config.threads);
    s.mu = std::move(moments.mu);
    s.sigma = std::move(moments.sigma);
    return init;
}

Eigen::MatrixXd veStepResponsibilities(const ModelParameters& params, const BoundPieces& bound) {
    const auto& L = bound.perObsComponent;
    const int G = params.components();
    if (L.cols() != G) throw InvalidArgument("bound pieces do not match the component count");
    Eigen::MatrixXd z(L.rows(), G);
    Eigen::VectorXd logEta = params.eta.array().log();
    for (Eigen::Index i = 0; i < L.rows(); ++i) {
        Eigen::RowVectorXd a = L.row(i) + logEta.transpose();
        const double mx = a.maxCoeff();
        if (!std::isfinite(mx))
            throw NumericalFailure("every component bound is -inf or non-finite for observation " +
                                   std::to_string(i));
        a = (a.array() - mx).exp();
        z.row(i) = a / a.sum();
    }
    return z;
}

LatentMoments veStepLatentMoments(const DenseBinary& data, const ModelParameters& params,
                                  const VariationalState& state, int threads) {
    return posteriorPass(data, params, state.xi, threads).moments;
}

Eigen::MatrixXd veStepRates(const ModelParameters& params, double s, double r) {
    if (!(s > 0.0) || !(r > 0.0)) throw InvalidArgument("gamma shape and rate must be > 0");
    const int G = params.components();
    const Eigen::Index M = params.items();
    const double D = params.dimensions();
    Eigen::MatrixXd lambda(G, M);
    for (int g = 0; g < G; ++g) {
        const auto& Wg = params.W[static_cast<std::size_t>(g)];
        for (Eigen::Index m = 0; m < M; ++m) lambda(g, m) = (s + D) / (Wg.row(m).lpNorm<1>() + r);
    }
    return lambda;
}

std::vector<Eigen::MatrixXd> mStepXi(const ModelParameters& params, const VariationalState& state,
                                     double xiMax, int threads) {
    const int G = params.components();
    const Eigen::Index M = params.items();
    const auto n = state.observations();
    std::vector<Eigen::MatrixXd> xi(static_cast<std::size_t>(G), Eigen::MatrixXd(M, static_cast<Eigen::Index>(n)));
    parallelFor(n, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            for (int g = 0; g < G; ++g) {
                const auto& Wg = params.W[static_cast<std::size_t>(g)];
                const auto mu = state.mean(g, i);
                const auto sigma = state.covariance(g, i);
                for (Eigen::Index m = 0; m < M; ++m) {
                    const auto w = Wg.row(m).transpose();
                    const double linear = params.alpha(g, m) + w.dot(mu);
                    const double sq = w.dot(sigma * w) + linear * linear;
                    const double v = std::sqrt(std::max(sq, 0.0));
                    xi[static_cast<std::size_t>(g)](m, static_cast<Eigen::Index>(i)) =
                        std::clamp(v, kXiFloor, xiMax);
                }
            }
        }
    });
    return xi;
}

SlopesAndIntercepts mStepWeightsIntercepts(const DenseBinary& data, const VariationalState& state,
                                           const ModelParameters& params, const Eigen::MatrixXd& lambda,
                                           const SlopeUpdateOptions& options, int threads) {
    const int G = params.components();
    const Eigen::Index M = params.items();
    const Eigen::Index D = params.dimensions();
    const auto n = data.n;
    if (state.observations() != n) throw InvalidArgument("state and data disagree on n");
    if (lambda.rows() != G || lambda.cols() != M) throw InvalidArgument("lambda must be G x M");

    SlopesAndIntercepts out{params.W, params.alpha};

    for (int g = 0; g < G; ++g) {
        const auto gg = static_cast<std::size_t>(g);
        const auto& xi = state.xi[gg];
        // Per-item sufficient statistics of the surrogate, accumulated over
        // observations in index order.
        parallelFor(static_cast<std::size_t>(M), threads, [&](std::size_t mBegin, std::size_t mEnd) {
            const auto width = static_cast<Eigen::Index>(mEnd - mBegin);
            Eigen::VectorXd a = Eigen::VectorXd::Zero(width);
            Eigen::VectorXd c0 = Eigen::VectorXd::Zero(width);
            Eigen::MatrixXd v = Eigen::MatrixXd::Zero(D, width);
            Eigen::MatrixXd c = Eigen::MatrixXd::Zero(D, width);
            Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(D * D, width);
            Eigen::MatrixXd second(D, D);
            for (std::size_t i = 0; i < n; ++i) {
                const double zi = state.z(static_cast<Eigen::Index>(i), g);
                if (zi == 0.0) continue;
                const auto mu = state.mean(g, i);
                second = state.covariance(g, i);
                second.noalias() += mu * mu.transpose();
                const Eigen::Map<const Eigen::VectorXd> secondFlat(second.data(), D * D);
                const std::uint8_t* x = data.row(i);
                const double* xiCol = xi.data() + static_cast<Eigen::Index>(i) * M;
                for (Eigen::Index k = 0; k < width; ++k) {
                    const auto m = static_cast<Eigen::Index>(mBegin) + k;
                    const double zB = zi * boundCurvature(xiCol[m]);
                    const double zc = zi * (static_cast<double>(x[m]) - 0.5);
                    a[k] += zB;
                    c0[k] += zc;
                    v.col(k).noalias() += zB * mu;
                    c.col(k).noalias() += zc * mu;
                    Q.col(k).noalias() += zB * secondFlat;
                }
            }

            Eigen::MatrixXd H(D, D), A(D, D);
            Eigen::VectorXd b(D), upsilon(D), w(D);
            Eigen::LLT<Eigen::MatrixXd> llt(D);
            for (Eigen::Index k = 0; k < width; ++k) {
                const auto m = static_cast<Eigen::Index>(mBegin) + k;
                if (!(a[k] < -1e-300)) continue;  // no responsibility mass: keep previous values
                const Eigen::Map<const Eigen::MatrixXd> Qk(Q.col(k).data(), D, D);
                H = 2.0 * Qk - (2.0 / a[k]) * v.col(k) * v.col(k).transpose();
                b = -c.col(k) + (c0[k] / a[k]) * v.col(k);

                Eigen::VectorXd rhs(D);
                if (options.penalize) {
                    for (Eigen::Index d = 0; d < D; ++d) {
                        const double prev = std::abs(params.W[gg](m, d));
                        upsilon[d] = prev < options.zeroTol ? 0.0 : std::sqrt(prev);
                    }
                    A = -(upsilon.asDiagonal() * H * upsilon.asDiagonal());
                    A.diagonal().array() += lambda(g, m);
                    rhs = -(upsilon.array() * b.array()).matrix();
                } else {
                    A = -H;
                    rhs = -b;
                }

                llt.compute(A);
                if (llt.info() != Eigen::Success) {
                    A.diagonal().array() += kRidge;
                    llt.compute(A);
                    if (llt.info() != Eigen::Success) {
                        std::ostringstream msg;
                        msg << "slope update system is singular for item " << m << ", component " << g;
                        throw NumericalFailure(msg.str());
                    }
                }
                w = llt.solve(rhs);
                if (options.penalize) w.array() *= upsilon.array();
                for (Eigen::Index d = 0; d < D; ++d)
                    if (w[d] == 0.0) w[d] = 0.0;  // normalise -0
                out.W[gg].row(m) = w.transpose();
                out.alpha(g, m) = -(c0[k] + 2.0 * v.col(k).dot(w)) / (2.0 * a[k]);
            }
        });
    }
    return out;
}

MixingUpdate mStepMixingProportions(const Eigen::Ref<const Eigen::MatrixXd>& z) {
    const auto n = static_cast<double>(z.rows());
    const auto G = static_cast<double>(z.cols());
    if (!(n > G / 2.0)) throw InvalidArgument("mixing update needs n > G/2");
    MixingUpdate out;
    out.eta.resize(z.cols());
    for (Eigen::Index g = 0; g < z.cols(); ++g) {
        const double ng = z.col(g).sum();
        double raw = (ng - 0.5) / (n - G / 2.0);
        if (ng <= 0.5) {
            raw = 1e-6;
            out.warnings.push_back("component " + std::to_string(g) + " is empty (n_g = " +
                                   std::to_string(ng) + "); mixing proportion clamped");
        }
        out.eta[g] = raw;
    }
    out.eta /= out.eta.sum();
    return out;
}

BoundPieces evaluateBound(const DenseBinary& data, const ModelParameters& params,
                          const VariationalState& state, const ObjectiveTerms& terms, int threads) {
    auto pass = posteriorPass(data, params, state.xi, threads);
    BoundPieces out;
    out.perObsComponent = std::move(pass.bounds);
    out.total = objectiveTotal(params, state.z, out.perObsComponent, terms);
    if (!std::isfinite(out.total)) throw NumericalFailure("objective is not finite");
    return out;
}

FitResult fitOnce(const DenseBinary& data, const FitConfig& config, std::uint64_t seed) {
    const auto& h = config.hyper;
    const ObjectiveTerms terms{h.shape, h.rate, config.penalize};
    const SlopeUpdateOptions slopeOptions{h.zeroTol, config.penalize};

    auto init = initialize(data, config, seed);
    FitResult result;
    result.seed = seed;
    auto& params = init.params;
    auto& state = init.state;

    auto evaluate = [&](int iteration) {
        PassOutput pass;
        try {
            pass = posteriorPass(data, params, state.xi, config.threads);
        } catch (const NumericalFailure& e) {
            throw NumericalFailure(std::string(e.what()) + " (iteration " + std::to_string(iteration) + ")");
        }
        state.mu = std::move(pass.moments.mu);
        state.sigma = std::move(pass.moments.sigma);
        BoundPieces bound;
        bound.perObsComponent = std::move(pass.bounds);
        bound.total = objectiveTotal(params, state.z, bound.perObsComponent, terms);
        if (!std::isfinite(bound.total))
            throw NumericalFailure("objective is not finite at iteration " + std::to_string(iteration));
        return bound;
    };

    BoundPieces bound = evaluate(0);
    AitkenTracker tracker;
    tracker.push(bound.total);
    result.trace.push_back(bound.total);
    result.aitkenTrace.push_back(std::numeric_limits<double>::quiet_NaN());

    for (int t = 1; t <= h.maxIter; ++t) {
        // VE-step. The first cycle keeps the initial responsibilities.
        if (t > 1) state.z = veStepResponsibilities(params, bound);
        params.lambda = veStepRates(params, h.shape, h.rate);

        // M-steps.
        state.xi = mStepXi(params, state, h.xiMax, config.threads);
        auto slopes = mStepWeightsIntercepts(data, state, params, params.lambda, slopeOptions, config.threads);
        params.W = std::move(slopes.W);
        params.alpha = std::move(slopes.alpha);
        auto mixing = mStepMixingProportions(state.z);
        params.eta = std::move(mixing.eta);
        for (auto& w : mixing.warnings)
            result.warnings.push_back("iteration " + std::to_string(t) + ": " + std::move(w));

        const double previous = bound.total;
        bound = evaluate(t);
        if (bound.total < previous - config.objectiveGuardTol * std::abs(previous)) {
            ++result.monotoneViolations;
            std::ostringstream msg;
            msg.precision(17);
            msg << "iteration " << t << ": objective decreased from " << previous << " to " << bound.total;
            result.warnings.push_back(msg.str());
        }
        tracker.push(bound.total);
        result.trace.push_back(bound.total);
        result.aitkenTrace.push_back(tracker.estimate().value_or(std::numeric_limits<double>::quiet_NaN()));
        result.iterations = t;
        if (aitkenConverged(tracker, h.aitkenTol)) {
            result.converged = true;
            break;
        }
    }

    // Final responsibilities at the returned parameters.
    state.z = veStepResponsibilities(params, bound);
    result.labels = hardLabels(state.z);
    result.effectiveDF = effectiveDF(params, h.zeroTol);
    result.params = std::move(params);
    result.state = std::move(state);
    return result;
}

FitResult fit(const BinaryMatrix& data, const FitConfig& config) {
    config.validate();
    const DenseBinary dense(data);
    std::optional<FitResult> best;
    std::vector<std::string> failures;
    for (int k = 0; k < config.hyper.restarts; ++k) {
        const auto seed = restartSeed(config.hyper.seed, static_cast<std::uint64_t>(k));
        try {
            FitResult candidate = fitOnce(dense, config, seed);
            candidate.restart = k;
            const bool better = !best || candidate.finalBound() > best->finalBound() ||
                                (candidate.finalBound() == best->finalBound() &&
                                 candidate.iterations < best->iterations);
            if (better) best = std::move(candidate);
        } catch (const NumericalFailure& e) {
            failures.push_back("restart " + std::to_string(k) + ": " + e.what());
        }
    }
    if (!best) {
        std::string msg = "all " + std::to_string(config.hyper.restarts) + " restarts failed";
        for (const auto& f : failures) msg += "; " + f;
        throw FitFailure(msg);
    }
    for (auto& f : failures) best->warnings.push_back(std::move(f));
    return std::move(*best);
}

}  // namespace pmltm::vem
