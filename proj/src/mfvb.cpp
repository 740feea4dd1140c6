#include "spikegam/mfvb.hpp"

#include <boost/math/special_functions/digamma.hpp>

#include <chrono>
#include <cmath>
#include <string>

#include "spikegam/distributions.hpp"
#include "spikegam/errors.hpp"

namespace spikegam {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kLog2Pi = 1.83787706640934548356;
constexpr double kLogPi = 1.14472988584940017414;
constexpr double kLog2 = 0.69314718055994530942;

// x log y with the convention 0 log 0 = 0.
double xlogy(double x, double y) { return x == 0.0 ? 0.0 : x * std::log(y); }


// E_q(log x) under Inverse-Gamma(kappa, lambda).
double expected_log(const InvGammaQ& g) { return std::log(g.lambda) - boost::math::digamma(g.kappa); }

// -E_q log q for q = Inverse-Gamma(kappa, lambda).
double inv_gamma_entropy(const InvGammaQ& g) {
    return -g.kappa * std::log(g.lambda) + std::lgamma(g.kappa) + (g.kappa + 1.0) * expected_log(g) +
           g.lambda * (g.kappa / g.lambda);
}

// E_q log p(sigma2 | a) with sigma2 | a ~ Inverse-Gamma(1/2, 1/a), excluding
// the E log sigma2 and E(1/sigma2) factors handled by the caller.
double half_cauchy_pair(const InvGammaQ& sigma2, const InvGammaQ& a, double s) {
    const double recip_s2 = sigma2.kappa / sigma2.lambda;
    const double recip_a = a.kappa / a.lambda;
    // log p(sigma2 | a) = 1/2 log(1/a) - lgamma(1/2) - 3/2 log sigma2 - 1/(a sigma2)
    const double cond = -0.5 * expected_log(a) - 0.5 * kLogPi - 1.5 * expected_log(sigma2) - recip_a * recip_s2;
    // log p(a) = 1/2 log(1/s^2) - lgamma(1/2) - 3/2 log a - 1/(s^2 a)
    const double prior = -std::log(s) - 0.5 * kLogPi - 1.5 * expected_log(a) - recip_a / (s * s);
    return cond + prior + inv_gamma_entropy(sigma2) + inv_gamma_entropy(a);
}

void require_finite(const Eigen::VectorXd& v, const char* what, int cycle) {
    if (!v.allFinite()) throw NumericalFailure(std::string("non-finite ") + what + " in MFVB cycle", cycle);
}

void require_finite(double v, const char* what, int cycle) {
    if (!std::isfinite(v)) throw NumericalFailure(std::string("non-finite ") + what + " in MFVB cycle", cycle);
}

void check_shapes(const QParams& q, const PreparedData& data) {
    const Eigen::Index d = data.d();
    const int nb = data.num_blocks();
    const Eigen::Index tk = data.total_basis();
    if (q.response != data.response) throw InvalidInput("q-parameters and data have different response types");
    if (q.mu_gamma_beta.size() != d || q.mu_beta_tilde.size() != d || q.mu_b_beta.size() != d ||
        q.sigma_beta_tilde.rows() != d || q.sigma_beta_tilde.cols() != d)
        throw InvalidInput("q-parameters do not match the number of linear coefficients");
    if (q.num_blocks() != nb || q.mu_b_u.size() != nb || static_cast<int>(q.sigma2_u.size()) != nb ||
        static_cast<int>(q.a_u.size()) != nb || q.mu_u_tilde.size() != tk || q.sigma2_u_tilde.size() != tk ||
        q.block_index != data.block_index)
        throw InvalidInput("q-parameters do not match the spline blocks");
    if (data.response == ResponseType::Bernoulli && (q.mu_c.size() != data.n || q.c_location.size() != data.n))
        throw InvalidInput("q-parameters do not match the number of observations");
}

Eigen::VectorXd linear_predictor_mean(const QParams& q, const PreparedData& data) {
    Eigen::VectorXd eta = Eigen::VectorXd::Constant(data.n, q.mu_beta0);
    if (data.d() > 0) eta.noalias() += data.X * q.mean_beta();
    if (data.total_basis() > 0) eta.noalias() += data.Z * q.mean_u();
    return eta;
}

double elbo_given_mean(const QParams& q, const PreparedData& data, const Hyperparameters& hyper,
                       const Eigen::VectorXd& eta_bar) {
    const Eigen::Index d = data.d();
    const int nb = data.num_blocks();
    double total = 0.0;

    // Intercept.
    const double sb0_2 = hyper.sigma_beta0 * hyper.sigma_beta0;
    total += -0.5 * std::log(sb0_2) - 0.5 * (q.mu_beta0 * q.mu_beta0 + q.sigma2_beta0) / sb0_2 + 0.5 +
             0.5 * std::log(q.sigma2_beta0);

    // Linear spike indicators.
    for (Eigen::Index j = 0; j < d; ++j) {
        const double p = q.mu_gamma_beta[j];
        total += xlogy(p, hyper.rho_beta) + xlogy(1.0 - p, 1.0 - hyper.rho_beta) - bernoulli_xlogx(p);
    }

    // beta_tilde | b, sigma2_beta and its Gaussian q-density. The E log b_j
    // contributions of this prior, of p(b_j) and of the Inverse-Gaussian
    // entropy cancel exactly, so they are left out here and below.
    const double recip_sb = q.sigma2_beta.kappa / q.sigma2_beta.lambda;
    if (d > 0) {
        Eigen::LLT<Eigen::MatrixXd> llt(q.sigma_beta_tilde);
        if (llt.info() != Eigen::Success) throw NumericalFailure("q covariance of beta_tilde is not positive definite");
        const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
        const Eigen::VectorXd second = q.mu_beta_tilde.array().square() + q.sigma_beta_tilde.diagonal().array();
        total += -0.5 * d * kLog2Pi - 0.5 * d * expected_log(q.sigma2_beta) -
                 0.5 * recip_sb * q.mu_b_beta.dot(second) + 0.5 * d * (1.0 + kLog2Pi) + 0.5 * log_det;
        // b_j ~ Inverse-Gamma(1, 1/2); q(b_j) Inverse-Gaussian(mu, 1) with
        // E(1/b_j) = 1/mu + 1.
        for (Eigen::Index j = 0; j < d; ++j) {
            const double recip_b = 1.0 / q.mu_b_beta[j] + 1.0;
            total += -kLog2 - 0.5 * recip_b + 0.5 * kLog2Pi + 0.5;
        }
    }
    total += half_cauchy_pair(q.sigma2_beta, q.a_beta, hyper.s_beta);

    // Spline blocks.
    for (int j = 0; j < nb; ++j) {
        const Eigen::Index s = q.block_index[j];
        const Eigen::Index k = q.block_index[j + 1] - s;
        const double p = q.mu_gamma_u[j];
        total += xlogy(p, hyper.rho_u) + xlogy(1.0 - p, 1.0 - hyper.rho_u) - bernoulli_xlogx(p);

        const auto mu = q.mu_u_tilde.segment(s, k);
        const auto var = q.sigma2_u_tilde.segment(s, k);
        const double second = mu.squaredNorm() + var.sum();
        const InvGammaQ& sig = q.sigma2_u[j];
        const double recip_su = sig.kappa / sig.lambda;
        total += -0.5 * k * kLog2Pi - 0.5 * k * expected_log(sig) - 0.5 * recip_su * q.mu_b_u[j] * second +
                 0.5 * k * (1.0 + kLog2Pi) + 0.5 * var.array().log().sum();
        // b_uj ~ Inverse-Gamma((K+1)/2, 1/2).
        const double kb = 0.5 * (k + 1.0);
        total += -kb * kLog2 - std::lgamma(kb) - 0.5 * (1.0 / q.mu_b_u[j] + 1.0) + 0.5 * kLog2Pi + 0.5;
        total += half_cauchy_pair(sig, q.a_u[j], hyper.s_u);
    }

    // Response.
    const double tr_var = trace_var_eta(q, data);
    if (data.response == ResponseType::Gaussian) {
        const double n = static_cast<double>(data.n);
        const double recip_se = q.sigma2_eps.kappa / q.sigma2_eps.lambda;
        const double sq = (data.y - eta_bar).squaredNorm() + tr_var;
        total += -0.5 * n * kLog2Pi - 0.5 * n * expected_log(q.sigma2_eps) - 0.5 * recip_se * sq;
        total += half_cauchy_pair(q.sigma2_eps, q.a_eps, hyper.s_eps);
    } else {
        // E log p(c | eta) - E log q(c) for q(c_i) = N(m_i, 1) truncated to
        // the observed side; p(y | c) is 1 on the support of q.
        double sum = 0.0;
        for (Eigen::Index i = 0; i < data.n; ++i) {
            const double sgn = 2.0 * data.y[i] - 1.0;
            const double m = q.c_location[i];
            sum += log_norm_cdf(sgn * m) - 0.5 * (m - eta_bar[i]) * (2.0 * q.mu_c[i] - m - eta_bar[i]);
        }
        total += sum - 0.5 * tr_var;
    }
    return total;
}

}  // namespace

double bernoulli_xlogx(double p) { return xlogy(p, p) + xlogy(1.0 - p, 1.0 - p); }

Eigen::VectorXd QParams::mean_u() const {
    Eigen::VectorXd out(mu_u_tilde.size());
    for (int j = 0; j < num_blocks(); ++j) {
        const Eigen::Index s = block_index[j], k = block_index[j + 1] - s;
        out.segment(s, k) = mu_gamma_u[j] * mu_u_tilde.segment(s, k);
    }
    return out;
}

double trace_var_eta(const QParams& q, const PreparedData& data) {
    const Eigen::Index d = data.d();
    double total = static_cast<double>(data.n) * q.sigma2_beta0;
    if (d > 0) {
        const Eigen::VectorXd& g = q.mu_gamma_beta;
        Eigen::MatrixXd omega = g * g.transpose();
        omega.diagonal().array() += g.array() * (1.0 - g.array());
        const Eigen::MatrixXd second = q.sigma_beta_tilde + q.mu_beta_tilde * q.mu_beta_tilde.transpose();
        const Eigen::VectorXd mb = q.mean_beta();
        total += (data.XTX.array() * omega.array() * second.array()).sum() - mb.dot(data.XTX * mb);
    }
    for (int j = 0; j < data.num_blocks(); ++j) {
        const Eigen::Index s = q.block_index[j], k = q.block_index[j + 1] - s;
        const double p = q.mu_gamma_u[j];
        const auto w = data.ZTZ.diagonal().segment(s, k);
        const auto mu = q.mu_u_tilde.segment(s, k);
        const auto var = q.sigma2_u_tilde.segment(s, k);
        total += p * (w.array() * (var.array() + (1.0 - p) * mu.array().square())).sum();
    }
    return total;
}

double compute_elbo(const QParams& q, const PreparedData& data, const Hyperparameters& hyper) {
    hyper.validate();
    check_shapes(q, data);
    return elbo_given_mean(q, data, hyper, linear_predictor_mean(q, data));
}

InclusionProbabilities variational_inclusion_means(const QParams& q) { return {q.mu_gamma_beta, q.mu_gamma_u}; }

QParams initial_qparams(const PreparedData& data) {
    const Eigen::Index d = data.d();
    const int nb = data.num_blocks();
    const Eigen::Index tk = data.total_basis();
    const double n = static_cast<double>(data.n);
    QParams q;
    q.response = data.response;
    q.block_index = data.block_index;
    q.mu_gamma_beta = Eigen::VectorXd::Constant(d, 0.5);
    q.omega_gamma_beta = Eigen::MatrixXd::Constant(d, d, 0.25);
    q.omega_gamma_beta.diagonal().setConstant(0.5);
    q.mu_beta_tilde = Eigen::VectorXd::Zero(d);
    q.sigma_beta_tilde = Eigen::MatrixXd::Identity(d, d);
    q.mu_b_beta = Eigen::VectorXd::Ones(d);
    q.sigma2_beta = {0.5 * (d + 1.0), 0.5 * (d + 1.0), 1.0};
    q.a_beta = {1.0, 1.0, 1.0};
    q.mu_u_tilde = Eigen::VectorXd::Zero(tk);
    q.sigma2_u_tilde = Eigen::VectorXd::Ones(tk);
    q.mu_gamma_u = Eigen::VectorXd::Constant(nb, 0.5);
    q.mu_b_u = Eigen::VectorXd::Ones(nb);
    for (int j = 0; j < nb; ++j) {
        const double kappa = 0.5 * (data.block_size(j) + 1.0);
        q.sigma2_u.push_back({kappa, kappa, 1.0});
        q.a_u.push_back({1.0, 1.0, 1.0});
    }
    q.mu_recip_sigma2_eps = 1.0;
    if (data.response == ResponseType::Gaussian) {
        q.sigma2_eps = {0.5 * (n + 1.0), 0.5 * (n + 1.0), 1.0};
        q.a_eps = {1.0, 1.0, 1.0};
    } else {
        q.mu_c = Eigen::VectorXd::Zero(data.n);
        q.c_location = Eigen::VectorXd::Zero(data.n);
    }
    return q;
}

MfvbResult run_mfvb(const PreparedData& data, const Hyperparameters& hyper, const MfvbOptions& options) {
    hyper.validate();
    if (!(options.tol > 0.0)) throw InvalidParameter("tolerance must be positive");
    if (options.max_cycles < 1) throw InvalidParameter("max_cycles must be at least 1");
    const auto started = Clock::now();
    const bool binary = data.response == ResponseType::Bernoulli;
    const Eigen::Index n = data.n;
    const Eigen::Index d = data.d();
    const int nb = data.num_blocks();

    const double logit_rho_beta = logit(hyper.rho_beta);
    const double logit_rho_u = logit(hyper.rho_u);
    const double inv_sigma2_beta0 = 1.0 / (hyper.sigma_beta0 * hyper.sigma_beta0);
    const double inv_s2_beta = 1.0 / (hyper.s_beta * hyper.s_beta);
    const double inv_s2_eps = 1.0 / (hyper.s_eps * hyper.s_eps);
    const double inv_s2_u = 1.0 / (hyper.s_u * hyper.s_u);

    MfvbResult result;
    QParams& q = result.q;
    q = initial_qparams(data);

    double yT1_adj = 0.0;
    Eigen::VectorXd XTy_adj = data.XTy;
    Eigen::VectorXd ZTy_adj = data.ZTy;
    const Eigen::VectorXd w_z = data.ZTZ.diagonal();
    Eigen::VectorXd mu_u = q.mean_u();

    auto omega16 = [&](int j, const Eigen::VectorXd& zx_mb) {
        const Eigen::Index s = data.block_index[j], k = data.block_index[j + 1] - s;
        return Eigen::VectorXd(ZTy_adj.segment(s, k) - zx_mb.segment(s, k) - data.ZTZ.middleRows(s, k) * mu_u +
                               data.ZTZ.block(s, s, k, k) * mu_u.segment(s, k));
    };
    auto refresh_block = [&](int j) {
        const Eigen::Index s = data.block_index[j], k = data.block_index[j + 1] - s;
        mu_u.segment(s, k) = q.mu_gamma_u[j] * q.mu_u_tilde.segment(s, k);
    };

    for (int cycle = 1; cycle <= options.max_cycles; ++cycle) {
        const double m_eps = q.mu_recip_sigma2_eps;

        // Intercept.
        q.sigma2_beta0 = 1.0 / (static_cast<double>(n) * m_eps + inv_sigma2_beta0);
        q.mu_beta0 = q.sigma2_beta0 * m_eps * yT1_adj;

        if (d > 0) {
            // Linear coefficients.
            const Eigen::VectorXd& g = q.mu_gamma_beta;
            q.omega_gamma_beta = g * g.transpose();
            q.omega_gamma_beta.diagonal().array() += g.array() * (1.0 - g.array());
            Eigen::MatrixXd precision = m_eps * q.omega_gamma_beta.cwiseProduct(data.XTX);
            precision.diagonal() += q.sigma2_beta.mu_recip * q.mu_b_beta;
            Eigen::LLT<Eigen::MatrixXd> llt(precision);
            if (llt.info() != Eigen::Success)
                throw NumericalFailure("precision of beta_tilde is not positive definite", cycle);
            Eigen::MatrixXd sigma = llt.solve(Eigen::MatrixXd::Identity(d, d));
            q.sigma_beta_tilde = 0.5 * (sigma + sigma.transpose());
            const Eigen::VectorXd omega13 = XTy_adj - data.ZTX.transpose() * mu_u;
            q.mu_beta_tilde = m_eps * q.sigma_beta_tilde * g.cwiseProduct(omega13);

            const Eigen::VectorXd omega14 =
                q.mu_beta_tilde.array().square() + q.sigma_beta_tilde.diagonal().array();
            q.mu_b_beta = (q.sigma2_beta.mu_recip * omega14).array().rsqrt();
            q.sigma2_beta.set_lambda(q.a_beta.mu_recip + 0.5 * q.mu_b_beta.dot(omega14));
            q.a_beta.set_lambda(q.sigma2_beta.mu_recip + inv_s2_beta);

            // Linear spike indicators, one at a time.
            const Eigen::VectorXd zx_mu = data.ZTX.transpose() * mu_u;
            const Eigen::MatrixXd& sig = q.sigma_beta_tilde;
            const Eigen::VectorXd& mu = q.mu_beta_tilde;
            for (Eigen::Index j = 0; j < d; ++j) {
                double cross = 0.0;
                for (Eigen::Index k = 0; k < d; ++k) {
                    if (k == j) continue;
                    cross += data.XTX(j, k) * q.mu_gamma_beta[k] * (sig(j, k) + mu[j] * mu[k]);
                }
                const double omega15 = mu[j] * (XTy_adj[j] - zx_mu[j]) - cross;
                const double arg = logit_rho_beta - 0.5 * m_eps * ((mu[j] * mu[j] + sig(j, j)) * data.XTX(j, j) -
                                                                   2.0 * omega15);
                q.mu_gamma_beta[j] = expit(arg);
            }
        } else {
            q.sigma2_beta.set_lambda(q.a_beta.mu_recip);
            q.a_beta.set_lambda(q.sigma2_beta.mu_recip + inv_s2_beta);
        }

        if (nb > 0) {
            const Eigen::VectorXd zx_mb = data.ZTX * q.mean_beta();
            // Spline coefficients, block by block.
            for (int j = 0; j < nb; ++j) {
                const Eigen::Index s = data.block_index[j], k = data.block_index[j + 1] - s;
                const Eigen::VectorXd omega = omega16(j, zx_mb);
                const double gu = q.mu_gamma_u[j];
                const double prior = q.sigma2_u[j].mu_recip * q.mu_b_u[j];
                q.sigma2_u_tilde.segment(s, k) = (m_eps * gu * w_z.segment(s, k).array() + prior).inverse();
                q.mu_u_tilde.segment(s, k) = m_eps * gu * omega.cwiseProduct(q.sigma2_u_tilde.segment(s, k));
                refresh_block(j);
            }
            // Block scales.
            for (int j = 0; j < nb; ++j) {
                const Eigen::Index s = data.block_index[j], k = data.block_index[j + 1] - s;
                const double omega17 = q.mu_u_tilde.segment(s, k).squaredNorm() + q.sigma2_u_tilde.segment(s, k).sum();
                q.mu_b_u[j] = 1.0 / std::sqrt(q.sigma2_u[j].mu_recip * omega17);
                q.sigma2_u[j].set_lambda(q.a_u[j].mu_recip + 0.5 * q.mu_b_u[j] * omega17);
                q.a_u[j].set_lambda(q.sigma2_u[j].mu_recip + inv_s2_u);
            }
            // Spline spike indicators.
            for (int j = 0; j < nb; ++j) {
                const Eigen::Index s = data.block_index[j], k = data.block_index[j + 1] - s;
                const Eigen::VectorXd omega18 = omega16(j, zx_mb);
                const auto mu = q.mu_u_tilde.segment(s, k);
                const double omega19 =
                    w_z.segment(s, k).dot((mu.array().square() + q.sigma2_u_tilde.segment(s, k).array()).matrix()) -
                    2.0 * mu.dot(omega18);
                q.mu_gamma_u[j] = expit(logit_rho_u - 0.5 * m_eps * omega19);
                refresh_block(j);
            }
        }

        // Response step.
        Eigen::VectorXd omega20 = Eigen::VectorXd::Constant(n, q.mu_beta0);
        if (d > 0) omega20.noalias() += data.X * q.mean_beta();
        if (nb > 0) omega20.noalias() += data.Z * mu_u;
        require_finite(omega20, "linear predictor", cycle);
        if (!binary) {
            const double lambda = q.a_eps.mu_recip + 0.5 * (data.y - omega20).squaredNorm() +
                                  0.5 * trace_var_eta(q, data);
            q.sigma2_eps.set_lambda(lambda);
            q.mu_recip_sigma2_eps = q.sigma2_eps.mu_recip;
            q.a_eps.set_lambda(q.mu_recip_sigma2_eps + inv_s2_eps);
        } else {
            q.mu_recip_sigma2_eps = 1.0;
            const Eigen::VectorXd sgn = 2.0 * data.y.array() - 1.0;
            q.c_location = omega20;
            q.mu_c = omega20 + sgn.cwiseProduct(zeta_prime(sgn.cwiseProduct(omega20)));
            require_finite(q.mu_c, "latent mean", cycle);
            yT1_adj = q.mu_c.sum();
            XTy_adj = data.X.transpose() * q.mu_c;
            ZTy_adj = data.Z.transpose() * q.mu_c;
        }

        require_finite(q.mu_beta_tilde, "beta_tilde mean", cycle);
        require_finite(q.mu_u_tilde, "u_tilde mean", cycle);
        require_finite(q.mu_b_beta, "b_beta mean", cycle);
        require_finite(q.mu_b_u, "b_u mean", cycle);
        const double elbo = elbo_given_mean(q, data, hyper, omega20);
        require_finite(elbo, "lower bound", cycle);

        result.cycles = cycle;
        if (!result.trace.values.empty()) {
            const double prev = result.trace.values.back();
            const double scale = 1.0 + std::fabs(elbo);
            if ((prev - elbo) / scale > options.decrease_slack)
                throw ConsistencyError("lower bound decreased from " + std::to_string(prev) + " to " +
                                       std::to_string(elbo) + " in cycle " + std::to_string(cycle));
            const double rel = std::fabs(elbo - prev) / scale;
            result.trace.values.push_back(elbo);
            result.trace.relative_change.push_back(rel);
            if (rel < options.tol) {
                result.converged = true;
                break;
            }
        } else {
            result.trace.values.push_back(elbo);
        }
    }
    result.seconds = std::chrono::duration<double>(Clock::now() - started).count();
    return result;
}

}  // namespace spikegam
