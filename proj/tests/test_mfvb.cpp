#include "doctest.h"

#include <cmath>

#include "spikegam/distributions.hpp"
#include "spikegam/errors.hpp"
#include "spikegam/gibbs.hpp"
#include "spikegam/mfvb.hpp"
#include "elbo_oracle.hpp"
#include "test_support.hpp"

using namespace spikegam;
using namespace spikegam::testing;

TEST_CASE("initial values") {
    RngStream rng(10);
    const PreparedData data = prepare(random_gam(rng, 100, 2, 3, false), ResponseType::Gaussian, {.num_basis = 8});
    const QParams q = initial_qparams(data);
    const InclusionProbabilities p = variational_inclusion_means(q);
    CHECK((p.beta.array() == 0.5).all());
    CHECK((p.u.array() == 0.5).all());
    CHECK(q.sigma2_eps.kappa == doctest::Approx(50.5));
    CHECK(q.sigma2_beta.kappa == doctest::Approx(3.0));
    CHECK(q.sigma2_u[0].kappa == doctest::Approx(4.5));
    CHECK(q.a_u[0].kappa == 1.0);
}

TEST_CASE("Bernoulli x log x terms") {
    CHECK(bernoulli_xlogx(0.5) == doctest::Approx(-0.6931471805599453));
    CHECK(bernoulli_xlogx(0.0) == 0.0);
    CHECK(bernoulli_xlogx(1.0) == 0.0);
}

TEST_CASE("lower bound agrees with the simplified form on random q-parameters") {
    RngStream rng(11);
    for (int rep = 0; rep < 50; ++rep) {
        const bool binary = rep % 2 == 1;
        const PreparedData data =
            prepare(random_gam(rng, 80 + rep, 1 + rep % 3, 1 + rep % 4, binary),
                    binary ? ResponseType::Bernoulli : ResponseType::Gaussian, {.num_basis = 5 + rep % 6});
        Hyperparameters h;
        h.rho_beta = 0.2 + 0.6 * rng.uniform();
        h.rho_u = 0.2 + 0.6 * rng.uniform();
        h.s_beta = 1.0 + 10 * rng.uniform();
        h.s_u = 1.0 + 10 * rng.uniform();
        h.s_eps = 1.0 + 10 * rng.uniform();
        h.sigma_beta0 = 1.0 + 10 * rng.uniform();
        const QParams q = random_qparams(data, rng);
        const double a = compute_elbo(q, data, h);
        const double b = simplified_elbo(q, data, h);
        CAPTURE(rep);
        CHECK(rel_diff(a, b) < 1e-8);
    }
}

TEST_CASE("coordinate ascent on a Gaussian instance") {
    RngStream rng(12);
    const PreparedData data = prepare(random_gam(rng, 200, 2, 3, false), ResponseType::Gaussian, {.num_basis = 10});
    const Hyperparameters h;
    const MfvbResult fit = run_mfvb(data, h);
    CHECK(fit.converged);
    CHECK(fit.cycles < 500);
    CHECK(non_decreasing(fit.trace));
    CHECK(fit.trace.values.size() == static_cast<std::size_t>(fit.cycles));
    CHECK(fit.trace.relative_change.back() < 1e-8);
    const double final_elbo = compute_elbo(fit.q, data, h);
    CHECK(rel_diff(final_elbo, fit.trace.values.back()) < 1e-12);
    CHECK(rel_diff(final_elbo, simplified_elbo(fit.q, data, h)) < 1e-8);
    CHECK(fit.q.sigma2_eps.kappa == 0.5 * (200 + 1));
    CHECK(fit.q.sigma2_beta.kappa == 0.5 * (data.d() + 1));
    for (int j = 0; j < data.num_blocks(); ++j) CHECK(fit.q.sigma2_u[j].kappa == 0.5 * (data.block_size(j) + 1));
    CHECK((fit.q.mu_gamma_beta.array() >= 0.0).all());
    CHECK((fit.q.mu_gamma_beta.array() <= 1.0).all());
    CHECK((fit.q.sigma2_u_tilde.array() > 0.0).all());
    CHECK((fit.q.sigma_beta_tilde - fit.q.sigma_beta_tilde.transpose()).norm() == 0.0);
}

TEST_CASE("coordinate ascent on a binary instance") {
    RngStream rng(13);
    const PreparedData data = prepare(random_gam(rng, 300, 1, 3, true), ResponseType::Bernoulli, {.num_basis = 8});
    const Hyperparameters h;
    const MfvbResult fit = run_mfvb(data, h);
    CHECK(fit.converged);
    CHECK(non_decreasing(fit.trace));
    CHECK(fit.q.mu_recip_sigma2_eps == 1.0);
    CHECK(rel_diff(compute_elbo(fit.q, data, h), simplified_elbo(fit.q, data, h)) < 1e-8);
    for (Eigen::Index i = 0; i < data.n; ++i) {
        const double diff = fit.q.mu_c[i] - fit.q.c_location[i];
        CHECK((data.y[i] > 0.5 ? diff > 0.0 : diff < 0.0));
    }
}

TEST_CASE("monotone over random instances") {
    RngStream rng(14);
    for (int rep = 0; rep < 10; ++rep) {
        const bool binary = rep % 2 == 0;
        const PreparedData data = prepare(random_gam(rng, 60 + 40 * rep, rep % 3, 1 + rep % 5, binary),
                                          binary ? ResponseType::Bernoulli : ResponseType::Gaussian,
                                          {.num_basis = 4 + 3 * (rep % 4)});
        // Switched-off components approach their prior scale slowly, so some
        // instances need more than the default 500 cycles.
        const MfvbResult fit = run_mfvb(data, Hyperparameters{}, {.tol = 1e-8, .max_cycles = 5000});
        CAPTURE(rep);
        CHECK(fit.converged);
        CHECK(non_decreasing(fit.trace));
    }
}

TEST_CASE("rho_beta = 0 switches off linear effects") {
    RngStream rng(15);
    const PreparedData data = prepare(small_gam(rng, 150, false), ResponseType::Gaussian, {.num_basis = 8});
    Hyperparameters h;
    h.rho_beta = 0.0;
    MfvbOptions opts;
    for (int cycles : {1, 2, 5}) {
        opts.max_cycles = cycles;
        const MfvbResult fit = run_mfvb(data, h, opts);
        CHECK((fit.q.mu_gamma_beta.array() == 0.0).all());
        CHECK((fit.q.mean_beta().array() == 0.0).all());
    }
    opts.max_cycles = 500;
    const MfvbResult fit = run_mfvb(data, h, opts);
    CHECK(std::isfinite(fit.trace.values.back()));
    CHECK((variational_inclusion_means(fit.q).beta.array() == 0.0).all());
}

TEST_CASE("deterministic and reports non-convergence") {
    RngStream rng(16);
    const PreparedData data = prepare(small_gam(rng, 200, true), ResponseType::Bernoulli, {.num_basis = 8});
    const MfvbResult a = run_mfvb(data, Hyperparameters{});
    const MfvbResult b = run_mfvb(data, Hyperparameters{});
    CHECK(a.trace.values == b.trace.values);
    CHECK(a.q.mu_beta_tilde == b.q.mu_beta_tilde);
    CHECK(a.q.mu_u_tilde == b.q.mu_u_tilde);
    CHECK(a.q.mu_gamma_u == b.q.mu_gamma_u);

    const MfvbResult short_run = run_mfvb(data, Hyperparameters{}, {.tol = 1e-8, .max_cycles = 2});
    CHECK_FALSE(short_run.converged);
    CHECK(short_run.cycles == 2);
    CHECK_THROWS_AS(run_mfvb(data, Hyperparameters{}, {.tol = 0.0}), InvalidParameter);
    CHECK_THROWS_AS(run_mfvb(data, Hyperparameters{}, {.tol = 1e-8, .max_cycles = 0}), InvalidParameter);
}

TEST_CASE("selects the same strong effects as the sampler") {
    RngStream rng(17);
    const PreparedData data = prepare(small_gam(rng, 300, false), ResponseType::Gaussian, {.num_basis = 10});
    const MfvbResult fit = run_mfvb(data, Hyperparameters{});
    const InclusionProbabilities p = variational_inclusion_means(fit.q);
    // Columns: x_lin, x1, x2, x3; blocks: x1, x2, x3.
    CHECK(p.beta[0] > 0.9);
    CHECK(p.beta[2] > 0.9);
    CHECK(p.u[0] > 0.9);
    CHECK(p.u[2] < 0.1);
    RngStream chain(18);
    const GibbsSamples s = run_gibbs(data, Hyperparameters{}, {.n_warm = 500, .n_kept = 500}, chain);
    const InclusionProbabilities pm = posterior_inclusion_means(s);
    CHECK(pm.beta[0] > 0.9);
    CHECK(pm.u[0] > 0.9);
}
