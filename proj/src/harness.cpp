#include "spikegam/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "spikegam/distributions.hpp"
#include "spikegam/errors.hpp"

namespace spikegam {

namespace {

using Clock = std::chrono::steady_clock;

const double kInvSqrtFactorial[6] = {1.0, 1.0, 0.70710678118654752440, 0.40824829046386301637,
                                     0.20412414523193150818, 0.09128709291752768547};

}  // namespace

void SyntheticSpec::validate() const {
    if (n < 2) throw InvalidParameter("synthetic sample size must be at least 2");
    if (d_zero < 0 || d_lin < 0 || d_nonlin < 0) throw InvalidParameter("effect counts must be non-negative");
    if (response == ResponseType::Gaussian && !(sigma_eps > 0.0))
        throw InvalidParameter("sigma_eps must be positive for Gaussian responses");
    if (!(linear_scale >= 0.0) || !(nonlinear_scale >= 0.0)) throw InvalidParameter("effect scales must be >= 0");
}

double hermite(int k, double x) {
    switch (k) {
        case 0: return 1.0;
        case 1: return x;
        case 2: return x * x - 1.0;
        case 3: return x * (x * x - 3.0);
        case 4: { const double x2 = x * x; return x2 * (x2 - 6.0) + 3.0; }
        case 5: { const double x2 = x * x; return x * (x2 * (x2 - 10.0) + 15.0); }
        default: throw InvalidParameter("Hermite degree must lie in 0..5");
    }
}

Eigen::VectorXd SyntheticTruth::eval(const Eigen::MatrixXd& x) const {
    const std::size_t d = labels.size();
    if (static_cast<std::size_t>(x.cols()) != d) throw InvalidInput("predictor matrix has the wrong width");
    Eigen::VectorXd f = Eigen::VectorXd::Constant(x.rows(), intercept);
    for (std::size_t j = 0; j < d; ++j) {
        if (labels[j] == EffectType::Linear) f += linear[j] * x.col(j);
        if (labels[j] == EffectType::Nonlinear)
            for (Eigen::Index i = 0; i < x.rows(); ++i) {
                double v = 0.0;
                for (int k = 0; k <= 5; ++k) v += quintic[j][k] * hermite(k, x(i, j));
                f[i] += v;
            }
    }
    return f;
}

SyntheticData gen_synthetic(const SyntheticSpec& spec, RngStream& rng) {
    spec.validate();
    const int d = spec.d();
    SyntheticData out;
    SyntheticTruth& t = out.truth;
    t.intercept = spec.intercept;
    t.labels.assign(spec.d_zero, EffectType::Zero);
    t.labels.insert(t.labels.end(), spec.d_lin, EffectType::Linear);
    t.labels.insert(t.labels.end(), spec.d_nonlin, EffectType::Nonlinear);
    t.linear.assign(d, 0.0);
    t.quintic.assign(d, {});
    for (int j = 0; j < d; ++j) {
        if (t.labels[j] == EffectType::Linear) t.linear[j] = spec.linear_scale * rng.normal();
        if (t.labels[j] == EffectType::Nonlinear) {
            // Orthonormal Hermite coordinates, rescaled to the requested sd.
            std::array<double, 6> a{};
            double norm2 = 0.0;
            for (int k = 1; k <= 5; ++k) {
                a[k] = rng.normal();
                norm2 += a[k] * a[k];
            }
            const double scale = spec.nonlinear_scale / std::sqrt(norm2);
            for (int k = 1; k <= 5; ++k) t.quintic[j][k] = scale * a[k] * kInvSqrtFactorial[k];
        }
    }

    out.x.resize(spec.n, d);
    for (int j = 0; j < d; ++j)
        for (int i = 0; i < spec.n; ++i) out.x(i, j) = rng.normal();
    const Eigen::VectorXd f = t.eval(out.x);

    RawDataset& raw = out.data;
    raw.y.resize(spec.n);
    for (int i = 0; i < spec.n; ++i)
        raw.y[i] = spec.response == ResponseType::Gaussian ? f[i] + spec.sigma_eps * rng.normal()
                                                           : (rng.uniform() < norm_cdf(f[i]) ? 1.0 : 0.0);
    raw.x_nonlinear.resize(d);
    for (int j = 0; j < d; ++j) {
        raw.x_nonlinear[j].assign(out.x.col(j).data(), out.x.col(j).data() + spec.n);
        raw.nonlinear_names.push_back("x" + std::to_string(j + 1));
    }
    return out;
}

double misclassification_rate(const std::vector<EffectType>& truth, const std::vector<EffectType>& estimated) {
    if (truth.size() != estimated.size()) throw InvalidInput("label vectors have different lengths");
    if (truth.empty()) return 0.0;
    std::size_t wrong = 0;
    for (std::size_t j = 0; j < truth.size(); ++j) wrong += truth[j] != estimated[j];
    return static_cast<double>(wrong) / static_cast<double>(truth.size());
}

std::vector<EffectType> types_in_input_order(const SelectionResult& result, const PreparedData& data) {
    if (result.predictors.size() != data.source.size()) throw InvalidInput("selection does not match the data");
    std::size_t n_linear = 0;
    for (const ColumnSource& s : data.source) n_linear += !s.nonlinear;
    std::vector<EffectType> out(data.source.size(), EffectType::Zero);
    for (const PredictorDecision& dec : result.predictors) {
        const ColumnSource& s = data.source[dec.column];
        out[s.nonlinear ? n_linear + s.index : s.index] = dec.type;
    }
    return out;
}

double misclassification_rate(const std::vector<EffectType>& truth, const SelectionResult& result,
                              const PreparedData& data) {
    return misclassification_rate(truth, types_in_input_order(result, data));
}

CoefficientMeans coefficient_means(const GibbsSamples& fit) {
    if (fit.n_kept() < 1) throw InvalidInput("empty chain");
    return {fit.beta0.mean(), fit.beta.colwise().mean().transpose(), fit.u.colwise().mean().transpose()};
}

CoefficientMeans coefficient_means(const QParams& fit) { return {fit.mu_beta0, fit.mean_beta(), fit.mean_u()}; }

Eigen::VectorXd predict(const PreparedData& data, const CoefficientMeans& means, const Eigen::MatrixXd& x_linear,
                        const Eigen::MatrixXd& x_nonlinear) {
    const Eigen::Index m = x_linear.cols() > 0 ? x_linear.rows() : x_nonlinear.rows();
    if (means.beta.size() != data.d() || means.u.size() != data.total_basis())
        throw InvalidInput("coefficients do not match the data");
    Eigen::MatrixXd x(m, data.d());
    for (Eigen::Index c = 0; c < data.d(); ++c) {
        const ColumnSource& s = data.source[c];
        const Eigen::MatrixXd& src = s.nonlinear ? x_nonlinear : x_linear;
        if (static_cast<Eigen::Index>(s.index) >= src.cols() || src.rows() != m)
            throw InvalidInput("new predictor matrix does not match the training columns");
        x.col(c) = src.col(s.index).unaryExpr([&](double v) { return data.x_scale[c].forward(v); });
    }
    Eigen::VectorXd eta = Eigen::VectorXd::Constant(m, means.beta0);
    eta.noalias() += x * means.beta;
    for (int b = 0; b < data.num_blocks(); ++b) {
        const Eigen::VectorXd col = x.col(data.block_column(b));
        const Eigen::MatrixXd z = evaluate_clamped(std::span<const double>(col.data(), col.size()), data.bases[b]);
        eta.noalias() += z * means.u.segment(data.block_start(b), data.block_size(b));
    }
    if (data.response == ResponseType::Gaussian)
        eta = eta.unaryExpr([&](double v) { return data.y_scale.inverse(v); });
    return eta;
}

double relative_test_error(const Regression& f_hat, const SyntheticTruth& truth, double sigma_eps, int d,
                           int n_draws, RngStream& rng) {
    if (n_draws < 10000) throw InvalidParameter("relative test error needs at least 10^4 draws");
    if (!(sigma_eps > 0.0)) throw InvalidParameter("sigma_eps must be positive");
    Eigen::MatrixXd x(n_draws, d);
    for (int j = 0; j < d; ++j)
        for (int i = 0; i < n_draws; ++i) x(i, j) = rng.normal();
    const Eigen::VectorXd err = truth.eval(x) - f_hat(x);
    const double s2 = sigma_eps * sigma_eps;
    return (err.squaredNorm() / n_draws + s2) / s2;
}

double loglog_slope(const std::vector<double>& n, const std::vector<double>& t) {
    if (n.size() != t.size() || n.size() < 2) throw InvalidInput("slope needs at least two matched points");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n.size(); ++i) {
        if (!(n[i] > 0.0) || !(t[i] > 0.0)) throw InvalidInput("slope needs positive values");
        mx += std::log(n[i]);
        my += std::log(t[i]);
    }
    mx /= n.size();
    my /= n.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < n.size(); ++i) {
        const double dx = std::log(n[i]) - mx;
        sxy += dx * (std::log(t[i]) - my);
        sxx += dx * dx;
    }
    if (!(sxx > 0.0)) throw InvalidInput("slope needs at least two distinct sample sizes");
    return sxy / sxx;
}

ReplicationRecord run_replication(const SimulationCell& cell, std::uint64_t master_seed, int replication) {
    const std::uint64_t base = 3 * static_cast<std::uint64_t>(replication);
    RngStream data_rng(master_seed, base), chain_rng(master_seed, base + 1), test_rng(master_seed, base + 2);
    SyntheticSpec spec = cell.spec;
    const SyntheticData sim = gen_synthetic(spec, data_rng);
    const PreparedData data = prepare(sim.data, spec.response, {.num_basis = cell.num_basis});

    ReplicationRecord rec;
    rec.replication = replication;
    InclusionProbabilities p;
    CoefficientMeans means;
    const auto started = Clock::now();
    if (cell.method == FitMethod::Mcmc) {
        const GibbsSamples fit = run_gibbs(data, cell.hyper, cell.gibbs, chain_rng);
        rec.seconds = std::chrono::duration<double>(Clock::now() - started).count();
        p = posterior_inclusion_means(fit);
        means = coefficient_means(fit);
    } else {
        const MfvbResult fit = run_mfvb(data, cell.hyper, cell.mfvb);
        rec.seconds = std::chrono::duration<double>(Clock::now() - started).count();
        rec.converged = fit.converged;
        rec.cycles = fit.cycles;
        p = variational_inclusion_means(fit.q);
        means = coefficient_means(fit.q);
    }
    for (double tau : cell.taus) {
        SelectionResult res;
        res.tau = tau;
        res.predictors = select_effects(data, p, tau);
        rec.misclassification.push_back(misclassification_rate(sim.truth.labels, res, data));
    }
    if (cell.test_draws > 0 && spec.response == ResponseType::Gaussian) {
        const Regression f_hat = [&](const Eigen::MatrixXd& x) { return predict(data, means, {}, x); };
        rec.relative_test_error =
            relative_test_error(f_hat, sim.truth, spec.sigma_eps, spec.d(), cell.test_draws, test_rng);
    }
    return rec;
}

std::vector<ReplicationRecord> run_cell(const SimulationCell& cell, std::uint64_t master_seed, int replications,
                                        int workers) {
    if (replications < 0) throw InvalidParameter("replication count must be non-negative");
    std::vector<ReplicationRecord> out(replications);
    workers = std::max(1, std::min(workers, replications));
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (int r = next++; r < replications; r = next++) {
            try {
                out[r] = run_replication(cell, master_seed, r);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

double median(std::vector<double> values) {
    if (values.empty()) throw InvalidInput("median of an empty sample");
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + mid, values.end());
    const double hi = values[mid];
    if (values.size() % 2 == 1) return hi;
    return 0.5 * (hi + *std::max_element(values.begin(), values.begin() + mid));
}

}  // namespace spikegam
