#include "doctest.h"

#include <cmath>

#include "spikegam/errors.hpp"
#include "spikegam/gibbs.hpp"
#include "test_support.hpp"

using namespace spikegam;
using spikegam::testing::batch_means_se;
using spikegam::testing::small_gam;


TEST_CASE("draw_mvn_via_eigen identity case") {
    RngStream rng(1);
    const int reps = 100000;
    Eigen::MatrixXd draws(reps, 3);
    for (int r = 0; r < reps; ++r)
        draws.row(r) = draw_mvn_via_eigen(Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Zero(3), 1.0, rng);
    const Eigen::RowVectorXd mean = draws.colwise().mean();
    for (int j = 0; j < 3; ++j) {
        CHECK(std::abs(mean[j]) < 3.0 / std::sqrt(double(reps)));
        const double var = (draws.col(j).array() - mean[j]).square().sum() / (reps - 1);
        CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / reps));
    }
}

TEST_CASE("draw_mvn_via_eigen moments") {
    RngStream rng(2);
    const int reps = 100000;
    Eigen::MatrixXd omega(2, 2);
    omega << 4, 0, 0, 1;
    Eigen::VectorXd rhs(2);
    rhs << 8, 1;
    Eigen::MatrixXd draws(reps, 2);
    for (int r = 0; r < reps; ++r) draws.row(r) = draw_mvn_via_eigen(omega, rhs, 1.0, rng);
    const Eigen::RowVectorXd mean = draws.colwise().mean();
    CHECK(std::abs(mean[0] - 2.0) < 3.0 * std::sqrt(0.25 / reps));
    CHECK(std::abs(mean[1] - 1.0) < 3.0 * std::sqrt(1.0 / reps));
    const Eigen::MatrixXd centred = draws.rowwise() - mean;
    const Eigen::MatrixXd cov = centred.transpose() * centred / (reps - 1);
    CHECK(std::abs(cov(0, 0) - 0.25) < 3.0 * 0.25 * std::sqrt(2.0 / reps));
    CHECK(std::abs(cov(1, 1) - 1.0) < 3.0 * std::sqrt(2.0 / reps));

    // Correlated case: sample covariance approaches Omega^{-1} entrywise.
    Eigen::MatrixXd corr(2, 2);
    corr << 2.0, 0.8, 0.8, 1.0;
    const Eigen::MatrixXd target = corr.inverse();
    for (int r = 0; r < reps; ++r) draws.row(r) = draw_mvn_via_eigen(corr, Eigen::VectorXd::Zero(2), 1.0, rng);
    const Eigen::RowVectorXd m2 = draws.colwise().mean();
    const Eigen::MatrixXd c2 = (draws.rowwise() - m2).transpose() * (draws.rowwise() - m2) / (reps - 1);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            const double se = std::sqrt((target(a, a) * target(b, b) + target(a, b) * target(a, b)) / reps);
            CHECK(std::abs(c2(a, b) - target(a, b)) < 3.0 * se);
        }

    Eigen::MatrixXd bad(2, 2);
    bad << 1, 2, 2, 1;
    CHECK_THROWS_AS(draw_mvn_via_eigen(bad, Eigen::VectorXd::Zero(2), 1.0, rng), NumericalFailure);
}

TEST_CASE("conjugate sub-model matches quadrature oracle") {
    const PreparedData data = prepare(spikegam::testing::conjugate_dataset(), ResponseType::Gaussian);
    Hyperparameters hyper;
    hyper.rho_beta = 1.0;
    RngStream rng(3);
    const GibbsSamples s = run_gibbs(data, hyper, {.n_warm = 1000, .n_kept = 20000}, rng);
    using O = spikegam::testing::ConjugateOracle;
    const Eigen::VectorXd beta = s.beta.col(0);
    const Eigen::VectorXd s2 = s.sigma2_eps;
    const Eigen::VectorXd beta_sq = (beta.array() - O::mean_beta).square();
    const Eigen::VectorXd s2_sq = (s2.array() - O::mean_sigma2).square();
    CHECK(std::abs(beta.mean() - O::mean_beta) < 3.0 * batch_means_se(beta));
    CHECK(std::abs(s2.mean() - O::mean_sigma2) < 3.0 * batch_means_se(s2));
    CHECK(std::abs(beta_sq.mean() - O::var_beta) < 3.0 * batch_means_se(beta_sq));
    CHECK(std::abs(s2_sq.mean() - O::var_sigma2) < 3.0 * batch_means_se(s2_sq));
    CHECK((s.gamma_beta.array() == 1).all());
}

TEST_CASE("rho extremes pin the indicators") {
    RngStream data_rng(4);
    const PreparedData data = prepare(small_gam(data_rng, 150, false), ResponseType::Gaussian, {.num_basis = 8});
    Hyperparameters hyper;
    hyper.rho_beta = 0.0;
    hyper.rho_u = 1.0;
    RngStream rng(5);
    const GibbsSamples s = run_gibbs(data, hyper, {.n_warm = 50, .n_kept = 100}, rng);
    CHECK((s.gamma_beta.array() == 0).all());
    CHECK((s.beta.array() == 0.0).all());
    CHECK((s.gamma_u.array() == 1).all());
    const InclusionProbabilities p = posterior_inclusion_means(s);
    CHECK(p.beta.isZero(0.0));
    CHECK((p.u.array() == 1.0).all());
}

TEST_CASE("chains are consistent, positive and reproducible") {
    RngStream data_rng(6);
    const PreparedData data = prepare(small_gam(data_rng, 200, false), ResponseType::Gaussian, {.num_basis = 8});
    RngStream a(7), b(7);
    const GibbsSamples s = run_gibbs(data, {}, {.n_warm = 100, .n_kept = 300}, a);
    const GibbsSamples t = run_gibbs(data, {}, {.n_warm = 100, .n_kept = 300}, b);
    CHECK((s.beta.array() == t.beta.array()).all());
    CHECK((s.u_tilde.array() == t.u_tilde.array()).all());
    CHECK((s.sigma2_eps.array() == t.sigma2_eps.array()).all());

    CHECK(s.n_kept() == 300);
    CHECK(s.beta.rows() == 300);
    CHECK(s.u.rows() == 300);
    CHECK((s.b_beta.array() > 0).all());
    CHECK((s.sigma2_beta.array() > 0).all());
    CHECK((s.a_beta.array() > 0).all());
    CHECK((s.b_u.array() > 0).all());
    CHECK((s.sigma2_u.array() > 0).all());
    CHECK((s.a_u.array() > 0).all());
    CHECK((s.sigma2_eps.array() > 0).all());
    CHECK((s.a_eps.array() > 0).all());
    CHECK(((s.gamma_beta.array() == 0) || (s.gamma_beta.array() == 1)).all());
    CHECK(((s.gamma_u.array() == 0) || (s.gamma_u.array() == 1)).all());
    CHECK((s.beta.array() == s.gamma_beta.cast<double>().array() * s.beta_tilde.array()).all());
    for (int j = 0; j < data.num_blocks(); ++j) {
        const Eigen::Index st = data.block_index[j], k = data.block_index[j + 1] - st;
        for (Eigen::Index r = 0; r < s.n_kept(); ++r)
            REQUIRE((s.u.row(r).segment(st, k).array() == s.gamma_u(r, j) * s.u_tilde.row(r).segment(st, k).array()).all());
    }
    // Exact zeros whenever the indicator is off.
    for (Eigen::Index r = 0; r < s.n_kept(); ++r)
        for (Eigen::Index j = 0; j < data.d(); ++j)
            if (s.gamma_beta(r, j) == 0) REQUIRE(s.beta(r, j) == 0.0);

    // The strong signals should be included.
    const InclusionProbabilities p = posterior_inclusion_means(s);
    CHECK(p.beta[0] > 0.9);
    CHECK(p.u[0] > 0.9);
    CHECK(p.beta[2] > 0.9);
    CHECK(p.beta[3] < 0.5);
    CHECK(p.u[2] < 0.5);
}

TEST_CASE("binary chains respect the Albert-Chib signs") {
    RngStream data_rng(8);
    const PreparedData data = prepare(small_gam(data_rng, 200, true), ResponseType::Bernoulli, {.num_basis = 6});
    RngStream rng(9);
    const GibbsSamples s = run_gibbs(data, {}, {.n_warm = 100, .n_kept = 200, .keep_c = true}, rng);
    REQUIRE(s.c.rows() == 200);
    REQUIRE(s.c.cols() == data.n);
    for (Eigen::Index r = 0; r < s.c.rows(); ++r)
        for (Eigen::Index i = 0; i < data.n; ++i) REQUIRE((2.0 * data.y[i] - 1.0) * s.c(r, i) >= 0.0);
    CHECK(s.sigma2_eps.size() == 0);
    CHECK(s.a_eps.size() == 0);
    CHECK(s.last.sigma2_eps == 1.0);
}

TEST_CASE("inclusion means of hand-built chains") {
    GibbsSamples s;
    s.beta0 = Eigen::VectorXd::Zero(4);
    s.gamma_beta.resize(4, 2);
    s.gamma_beta << 1, 1, 0, 1, 1, 1, 0, 1;
    s.gamma_u = Eigen::MatrixXi::Ones(4, 1);
    const InclusionProbabilities p = posterior_inclusion_means(s);
    CHECK(p.beta[0] == 0.5);
    CHECK(p.beta[1] == 1.0);
    CHECK(p.u[0] == 1.0);
    GibbsSamples empty;
    CHECK_THROWS_AS(posterior_inclusion_means(empty), InvalidInput);
}

TEST_CASE("sweep cost outside the response step does not grow with n") {
    RngStream data_rng(10);
    const PreparedData small = prepare(small_gam(data_rng, 1000, false), ResponseType::Gaussian, {.num_basis = 10});
    const PreparedData large = prepare(small_gam(data_rng, 10000, false), ResponseType::Gaussian, {.num_basis = 10});
    RngStream a(11), b(12);
    const GibbsSamples s = run_gibbs(small, {}, {.n_warm = 200, .n_kept = 200}, a);
    const GibbsSamples t = run_gibbs(large, {}, {.n_warm = 200, .n_kept = 200}, b);
    const double other_small = s.timing.total_seconds - s.timing.response_seconds;
    const double other_large = t.timing.total_seconds - t.timing.response_seconds;
    CHECK(other_large <= 15.0 * other_small);
}

TEST_CASE("argument validation") {
    const PreparedData data = prepare(spikegam::testing::conjugate_dataset(), ResponseType::Gaussian);
    RngStream rng(13);
    CHECK_THROWS_AS(run_gibbs(data, {}, {.n_warm = 0, .n_kept = 10}, rng), InvalidParameter);
    Hyperparameters bad;
    bad.s_u = -1.0;
    CHECK_THROWS_AS(run_gibbs(data, bad, {}, rng), InvalidParameter);
}
