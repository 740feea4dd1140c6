#include "spikegam/gibbs.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "spikegam/distributions.hpp"
#include "spikegam/errors.hpp"

namespace spikegam {

namespace {

using Clock = std::chrono::steady_clock;

// Cap on inverse-Gaussian means when a coefficient is numerically zero.
constexpr double kMaxInvGaussMean = 1e12;

double inv_gauss_mean(double scale, double magnitude) {
    if (!(magnitude > 0.0)) return kMaxInvGaussMean;
    return std::min(scale / magnitude, kMaxInvGaussMean);
}

void require_finite(double v, const char* what, long sweep) {
    if (!std::isfinite(v)) throw NumericalFailure(std::string("non-finite ") + what + " in Gibbs sweep", sweep);
}

void require_finite(const Eigen::VectorXd& v, const char* what, long sweep) {
    if (!v.allFinite()) throw NumericalFailure(std::string("non-finite ") + what + " in Gibbs sweep", sweep);
}

// gamma_u(j) * u_tilde over each block.
Eigen::VectorXd gated_blocks(const PreparedData& data, const Eigen::VectorXd& gamma_u, const Eigen::VectorXd& u_tilde) {
    Eigen::VectorXd out(u_tilde.size());
    for (int j = 0; j < data.num_blocks(); ++j) {
        const Eigen::Index s = data.block_index[j], k = data.block_index[j + 1] - s;
        out.segment(s, k) = gamma_u[j] * u_tilde.segment(s, k);
    }
    return out;
}

}  // namespace

Eigen::VectorXd draw_mvn_via_eigen(const Eigen::MatrixXd& omega, const Eigen::VectorXd& rhs, double scale,
                                   RngStream& rng) {
    if (omega.rows() != omega.cols() || omega.rows() != rhs.size())
        throw InvalidParameter("draw_mvn_via_eigen: dimension mismatch");
    if (!(scale > 0.0)) throw InvalidParameter("draw_mvn_via_eigen: scale must be positive");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(omega);
    if (eig.info() != Eigen::Success) throw NumericalFailure("eigendecomposition of the precision matrix failed");
    const Eigen::VectorXd& d = eig.eigenvalues();
    if (!(d.minCoeff() > 0.0) || !d.allFinite())
        throw NumericalFailure("precision matrix is not positive definite (smallest eigenvalue " +
                               std::to_string(d.minCoeff()) + ")");
    const Eigen::MatrixXd& u = eig.eigenvectors();
    const Eigen::VectorXd z = sample_std_normal_vec(rhs.size(), rng);
    const Eigen::VectorXd inner = (u.transpose() * z).cwiseQuotient(d.cwiseSqrt()) +
                                  (u.transpose() * rhs).cwiseQuotient(d * scale);
    return u * inner;
}

GibbsSamples run_gibbs(const PreparedData& data, const Hyperparameters& hyper, const GibbsOptions& options,
                       RngStream& rng) {
    hyper.validate();
    if (options.n_warm < 1 || options.n_kept < 1) throw InvalidParameter("N_warm and N_kept must be at least 1");
    const auto started = Clock::now();
    const bool binary = data.response == ResponseType::Bernoulli;
    const Eigen::Index n = data.n;
    const Eigen::Index d = data.d();
    const int nb = data.num_blocks();
    const Eigen::Index total_k = data.total_basis();
    const int n_total = options.n_warm + options.n_kept;

    const double logit_rho_beta = logit(hyper.rho_beta);
    const double logit_rho_u = logit(hyper.rho_u);
    const double inv_sigma2_beta0 = 1.0 / (hyper.sigma_beta0 * hyper.sigma_beta0);
    const double inv_s2_beta = 1.0 / (hyper.s_beta * hyper.s_beta);
    const double inv_s2_eps = 1.0 / (hyper.s_eps * hyper.s_eps);
    const double inv_s2_u = 1.0 / (hyper.s_u * hyper.s_u);

    // Initial values.
    GibbsState st;
    st.gamma_beta = Eigen::VectorXd::Constant(d, 0.5);
    st.beta_tilde = Eigen::VectorXd::Zero(d);
    st.b_beta = Eigen::VectorXd::Ones(d);
    st.gamma_u = Eigen::VectorXd::Constant(nb, 0.5);
    st.u_tilde = Eigen::VectorXd::Zero(total_k);
    st.b_u = Eigen::VectorXd::Ones(nb);
    st.sigma2_u = Eigen::VectorXd::Ones(nb);
    st.a_u = Eigen::VectorXd::Ones(nb);
    if (binary) st.c = Eigen::VectorXd::Zero(n);

    double yT1_adj = 0.0;
    Eigen::VectorXd XTy_adj = data.XTy;
    Eigen::VectorXd ZTy_adj = data.ZTy;
    const Eigen::VectorXd w_z = data.ZTZ.diagonal();
    const Eigen::VectorXd xtx_diag = data.XTX.diagonal();

    GibbsSamples out;
    out.response = data.response;
    out.block_index = data.block_index;
    const int nk = options.n_kept;
    out.beta0.resize(nk);
    out.gamma_beta.resize(nk, d);
    out.beta_tilde.resize(nk, d);
    out.beta.resize(nk, d);
    out.b_beta.resize(nk, d);
    out.sigma2_beta.resize(nk);
    out.a_beta.resize(nk);
    out.gamma_u.resize(nk, nb);
    out.u_tilde.resize(nk, total_k);
    out.u.resize(nk, total_k);
    out.b_u.resize(nk, nb);
    out.sigma2_u.resize(nk, nb);
    out.a_u.resize(nk, nb);
    if (!binary) {
        out.sigma2_eps.resize(nk);
        out.a_eps.resize(nk);
    }
    if (binary && options.keep_c) out.c.resize(nk, n);

    Eigen::VectorXd beta_curr(d), u_curr(total_k), u_tilde_curr(total_k), gamma_u_curr(nb);
    Eigen::VectorXd omega10(n);
    Eigen::MatrixXd omega(d, d);
    double response_seconds = 0.0;

    for (int g = 1; g <= n_total; ++g) {
        const double sigma2_eps = st.sigma2_eps;

        // Intercept.
        const double omega1 = yT1_adj;
        const double omega2 = n / sigma2_eps + inv_sigma2_beta0;
        st.beta0 = omega1 / (sigma2_eps * omega2) + rng.normal() / std::sqrt(omega2);

        // Joint draw of the slab coefficients of the linear terms.
        omega = (st.gamma_beta * st.gamma_beta.transpose()).cwiseProduct(data.XTX) / sigma2_eps;
        omega.diagonal() += st.b_beta / st.sigma2_beta;
        u_curr = gated_blocks(data, st.gamma_u, st.u_tilde);
        const Eigen::VectorXd omega3 = XTy_adj - data.ZTX.transpose() * u_curr;
        try {
            st.beta_tilde = draw_mvn_via_eigen(omega, st.gamma_beta.cwiseProduct(omega3), sigma2_eps, rng);
        } catch (const NumericalFailure& e) {
            throw NumericalFailure(std::string(e.what()) + " while drawing beta_tilde", g);
        }
        require_finite(st.beta_tilde, "beta_tilde", g);

        // Laplace-scale auxiliaries and their variance hierarchy.
        const double sigma_beta = std::sqrt(st.sigma2_beta);
        for (Eigen::Index j = 0; j < d; ++j)
            st.b_beta[j] = sample_inverse_gaussian(inv_gauss_mean(sigma_beta, std::abs(st.beta_tilde[j])), 1.0, rng);
        const double quad_beta = st.beta_tilde.cwiseAbs2().dot(st.b_beta);
        st.sigma2_beta = sample_inverse_gamma(0.5 * static_cast<double>(d + 1), 1.0 / st.a_beta + 0.5 * quad_beta, rng);
        st.a_beta = sample_inverse_gamma(1.0, 1.0 / st.sigma2_beta + inv_s2_beta, rng);
        require_finite(st.sigma2_beta, "sigma2_beta", g);

        // Linear inclusion indicators, one coordinate at a time. The staging
        // vector is refreshed after each draw so later coordinates condition
        // on the indicators already drawn in this sweep.
        beta_curr = st.gamma_beta.cwiseProduct(st.beta_tilde);
        for (Eigen::Index j = 0; j < d; ++j) {
            const double omega4 = XTy_adj[j] - data.XTX.col(j).dot(beta_curr) + xtx_diag[j] * beta_curr[j] -
                                  data.ZTX.col(j).dot(u_curr);
            const double bt = st.beta_tilde[j];
            const double omega5 = logit_rho_beta - 0.5 * (bt * bt * xtx_diag[j] - 2.0 * bt * omega4) / sigma2_eps;
            st.gamma_beta[j] = sample_bernoulli(expit(omega5), rng);
            beta_curr[j] = st.gamma_beta[j] * bt;
        }

        // Spline coefficient blocks.
        u_tilde_curr = st.u_tilde;
        for (int j = 0; j < nb; ++j) {
            const Eigen::Index s = data.block_index[j], k = data.block_index[j + 1] - s;
            const Eigen::VectorXd gated = gated_blocks(data, st.gamma_u, u_tilde_curr);
            const Eigen::VectorXd omega6 = ZTy_adj.segment(s, k) - data.ZTX.middleRows(s, k) * beta_curr -
                                           data.ZTZ.middleRows(s, k) * gated +
                                           data.ZTZ.block(s, s, k, k) * gated.segment(s, k);
            const Eigen::VectorXd omega7 =
                (st.gamma_u[j] / sigma2_eps) * w_z.segment(s, k).array() + st.b_u[j] / st.sigma2_u[j];
            const Eigen::VectorXd z = sample_std_normal_vec(k, rng);
            u_tilde_curr.segment(s, k) =
                z.cwiseQuotient(omega7.cwiseSqrt()) + (st.gamma_u[j] / sigma2_eps) * omega6.cwiseQuotient(omega7);
        }
        st.u_tilde = u_tilde_curr;
        require_finite(st.u_tilde, "u_tilde", g);

        for (int j = 0; j < nb; ++j) {
            const Eigen::Index s = data.block_index[j], k = data.block_index[j + 1] - s;
            const double norm2 = st.u_tilde.segment(s, k).squaredNorm();
            st.b_u[j] = sample_inverse_gaussian(inv_gauss_mean(std::sqrt(st.sigma2_u[j]), std::sqrt(norm2)), 1.0, rng);
            st.sigma2_u[j] = sample_inverse_gamma(0.5 * static_cast<double>(k + 1),
                                                  1.0 / st.a_u[j] + 0.5 * norm2 * st.b_u[j], rng);
            st.a_u[j] = sample_inverse_gamma(1.0, 1.0 / st.sigma2_u[j] + inv_s2_u, rng);
        }
        require_finite(st.sigma2_u, "sigma2_u", g);

        // Spline inclusion indicators.
        gamma_u_curr = st.gamma_u;
        for (int j = 0; j < nb; ++j) {
            const Eigen::Index s = data.block_index[j], k = data.block_index[j + 1] - s;
            const Eigen::VectorXd gated = gated_blocks(data, gamma_u_curr, st.u_tilde);
            const Eigen::VectorXd omega8 = ZTy_adj.segment(s, k) - data.ZTX.middleRows(s, k) * beta_curr -
                                           data.ZTZ.middleRows(s, k) * gated +
                                           data.ZTZ.block(s, s, k, k) * gated.segment(s, k);
            const auto uj = st.u_tilde.segment(s, k);
            const double omega9 =
                logit_rho_u - 0.5 * (w_z.segment(s, k).dot(uj.cwiseAbs2()) - 2.0 * uj.dot(omega8)) / sigma2_eps;
            gamma_u_curr[j] = sample_bernoulli(expit(omega9), rng);
        }
        st.gamma_u = gamma_u_curr;

        // Response step: the only part that touches the n rows.
        const auto response_start = Clock::now();
        u_curr = gated_blocks(data, st.gamma_u, st.u_tilde);
        omega10.setConstant(st.beta0);
        omega10.noalias() += data.X * beta_curr;
        if (total_k > 0) omega10.noalias() += data.Z * u_curr;
        if (!binary) {
            const double rss = (data.y - omega10).squaredNorm();
            st.sigma2_eps = sample_inverse_gamma(0.5 * static_cast<double>(n + 1), 1.0 / st.a_eps + 0.5 * rss, rng);
            st.a_eps = sample_inverse_gamma(1.0, 1.0 / st.sigma2_eps + inv_s2_eps, rng);
            require_finite(st.sigma2_eps, "sigma2_eps", g);
        } else {
            st.sigma2_eps = 1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const double sign = 2.0 * data.y[i] - 1.0;
                st.c[i] = sign * sample_truncated_normal_plus(sign * omega10[i], rng);
            }
            yT1_adj = st.c.sum();
            XTy_adj.noalias() = data.X.transpose() * st.c;
            if (total_k > 0) ZTy_adj.noalias() = data.Z.transpose() * st.c;
        }
        response_seconds += std::chrono::duration<double>(Clock::now() - response_start).count();
        require_finite(st.beta0, "beta0", g);

        if (g > options.n_warm) {
            const int r = g - options.n_warm - 1;
            out.beta0[r] = st.beta0;
            for (Eigen::Index j = 0; j < d; ++j) out.gamma_beta(r, j) = static_cast<int>(st.gamma_beta[j]);
            out.beta_tilde.row(r) = st.beta_tilde.transpose();
            out.beta.row(r) = beta_curr.transpose();
            out.b_beta.row(r) = st.b_beta.transpose();
            out.sigma2_beta[r] = st.sigma2_beta;
            out.a_beta[r] = st.a_beta;
            for (int j = 0; j < nb; ++j) out.gamma_u(r, j) = static_cast<int>(st.gamma_u[j]);
            out.u_tilde.row(r) = st.u_tilde.transpose();
            out.u.row(r) = u_curr.transpose();
            out.b_u.row(r) = st.b_u.transpose();
            out.sigma2_u.row(r) = st.sigma2_u.transpose();
            out.a_u.row(r) = st.a_u.transpose();
            if (!binary) {
                out.sigma2_eps[r] = st.sigma2_eps;
                out.a_eps[r] = st.a_eps;
            }
            if (out.c.size() > 0) out.c.row(r) = st.c.transpose();
        }
    }
    out.last = std::move(st);
    out.timing.total_seconds = std::chrono::duration<double>(Clock::now() - started).count();
    out.timing.response_seconds = response_seconds;
    return out;
}

InclusionProbabilities posterior_inclusion_means(const GibbsSamples& samples) {
    if (samples.n_kept() < 1) throw InvalidInput("empty chain");
    InclusionProbabilities p;
    p.beta = samples.gamma_beta.cast<double>().colwise().mean().transpose();
    p.u = samples.gamma_u.cast<double>().colwise().mean().transpose();
    return p;
}

}  // namespace spikegam
