#include "doctest.h"

#include <cmath>

#include "spikegam/distributions.hpp"
#include "spikegam/errors.hpp"
#include "spikegam/selection.hpp"
#include "test_support.hpp"

using namespace spikegam;
using spikegam::testing::small_gam;

namespace {

// Direct transcription of the decision rules.
EffectType rule_oracle(double pb, double pu, bool has_u, double tau) {
    if (!has_u) return pb > 1 - tau ? EffectType::Linear : EffectType::Zero;
    if (std::max(pb, pu) <= 1 - tau) return EffectType::Zero;
    if (pb > 1 - tau && pu <= 1 - tau) return EffectType::Linear;
    return EffectType::Nonlinear;
}

int rank(EffectType t) { return t == EffectType::Zero ? 0 : 1; }

// A chain of the right shape with every draw set to zero.
GibbsSamples blank_chain(const PreparedData& data, int nk) {
    GibbsSamples s;
    s.response = data.response;
    s.block_index = data.block_index;
    s.beta0 = Eigen::VectorXd::Zero(nk);
    s.gamma_beta = Eigen::MatrixXi::Zero(nk, data.d());
    s.beta = Eigen::MatrixXd::Zero(nk, data.d());
    s.beta_tilde = s.beta;
    s.gamma_u = Eigen::MatrixXi::Zero(nk, data.num_blocks());
    s.u = Eigen::MatrixXd::Zero(nk, data.total_basis());
    s.u_tilde = s.u;
    return s;
}

}  // namespace

TEST_CASE("classification examples") {
    CHECK(classify(0.6, 0.3, 0.5) == EffectType::Linear);
    CHECK(classify(0.4, 0.3, 0.5) == EffectType::Zero);
    CHECK(classify(0.2, 0.95, 0.1) == EffectType::Nonlinear);
    CHECK(classify(0.95, std::nullopt, 0.1) == EffectType::Linear);
    CHECK(classify(0.9, std::nullopt, 0.1) == EffectType::Zero);
    CHECK_THROWS_AS(classify(0.5, 0.5, 0.0), InvalidParameter);
    CHECK_THROWS_AS(classify(0.5, 0.5, 1.0), InvalidParameter);
    CHECK_THROWS_AS(classify(1.5, 0.5, 0.5), InvalidParameter);
}

TEST_CASE("classification truth table") {
    const double taus[] = {0.1, 0.3, 0.5, 0.7, 0.9};
    for (int a = 0; a <= 20; ++a)
        for (int b = 0; b <= 20; ++b) {
            const double pb = 0.05 * a, pu = 0.05 * b;
            for (double tau : taus) {
                CHECK(classify(pb, pu, tau) == rule_oracle(pb, pu, true, tau));
                CHECK(classify(pb, std::nullopt, tau) == rule_oracle(pb, 0, false, tau));
            }
            // Smaller tau never selects a predictor that a larger tau leaves out.
            for (int t = 1; t < 5; ++t)
                CHECK(rank(classify(pb, pu, taus[t - 1])) <= rank(classify(pb, pu, taus[t])));
        }
}

TEST_CASE("quantiles") {
    CHECK(sample_quantile({3, 1, 2}, 0.5) == 2.0);
    CHECK(sample_quantile({1, 2, 3, 4}, 0.5) == doctest::Approx(2.5));
    CHECK(sample_quantile({5}, 0.975) == 5.0);
    CHECK_THROWS_AS(sample_quantile({}, 0.5), InvalidInput);
}

TEST_CASE("linear summaries from a chain") {
    RngStream rng(30);
    const PreparedData data = prepare(small_gam(rng, 100, false), ResponseType::Gaussian, {.num_basis = 6});
    GibbsSamples s = blank_chain(data, 1000);
    const double f0 = data.y_scale.sd / data.x_scale[0].sd;
    s.beta.col(0).setConstant(0.7 / f0);
    for (int t = 0; t < 1000; ++t) s.beta(t, 1) = t < 400 ? 0.0 : 1.0 + 0.001 * t;
    const auto table = summarize_linear(s, data, {0, 1});
    CHECK(table[0].mean == doctest::Approx(0.7));
    CHECK(table[0].lower == doctest::Approx(0.7));
    CHECK(table[0].upper == doctest::Approx(0.7));
    CHECK(table[1].lower == 0.0);
    CHECK(table[1].upper > 0.0);
    CHECK_THROWS_AS(summarize_linear(s, data, {data.d()}), InvalidIndex);
    CHECK_THROWS_AS(summarize_linear(blank_chain(data, 0), data, {0}), InvalidInput);
}

TEST_CASE("variational linear summaries") {
    RngStream rng(31);
    const PreparedData data = prepare(small_gam(rng, 100, true), ResponseType::Bernoulli, {.num_basis = 6});
    QParams q = initial_qparams(data);
    q.mu_gamma_beta[0] = 0.8;
    q.mu_beta_tilde[0] = 2.0;
    q.sigma_beta_tilde(0, 0) = 0.09;
    const auto table = summarize_linear(q, data, {0});
    const double f = 1.0 / data.x_scale[0].sd;
    const double sd = std::sqrt(0.8 * (0.09 + 0.2 * 4.0));
    CHECK(table[0].mean == doctest::Approx(1.6 * f));
    CHECK(table[0].upper - table[0].mean == doctest::Approx(1.959963984540054 * sd * f));
    CHECK(table[0].mean - table[0].lower == doctest::Approx(1.959963984540054 * sd * f));
}

TEST_CASE("pre-standardized data and back-transform agree") {
    RngStream rng(32);
    RawDataset raw = small_gam(rng, 200, false);
    for (auto& v : raw.y) v = 1.0 + 2.0 * v;
    for (auto& v : raw.x_linear[0]) v = 5.0 + 3.0 * v;
    const PreparedData a = prepare(raw, ResponseType::Gaussian, {.num_basis = 8});

    RawDataset pre = raw;
    auto restandardize = [](std::vector<double>& v) {
        const Standardized s = standardize(v);
        v.assign(s.values.data(), s.values.data() + s.values.size());
    };
    restandardize(pre.y);
    restandardize(pre.x_linear[0]);
    const PreparedData b = prepare(pre, ResponseType::Gaussian, {.num_basis = 8});
    CHECK(b.x_scale[0].sd == doctest::Approx(1.0));
    CHECK(b.y_scale.sd == doctest::Approx(1.0));

    RngStream ra(33), rb(33);
    const GibbsSamples fa = run_gibbs(a, Hyperparameters{}, {.n_warm = 300, .n_kept = 1000}, ra);
    const GibbsSamples fb = run_gibbs(b, Hyperparameters{}, {.n_warm = 300, .n_kept = 1000}, rb);
    const double orig = summarize_linear(fa, a, {0})[0].mean;
    const double unit = summarize_linear(fb, b, {0})[0].mean;
    CHECK(unit == doctest::Approx(fb.beta.col(0).mean()).epsilon(1e-9));
    const double manual = unit * a.y_scale.sd / a.x_scale[0].sd;
    CHECK(orig == doctest::Approx(manual).epsilon(0.02));
    CHECK(orig == doctest::Approx(0.8 * 2.0 / 3.0).epsilon(0.05));
}

TEST_CASE("curve slice reproduces a known line") {
    RngStream rng(34);
    const int n = 300;
    RawDataset raw;
    raw.y.resize(n);
    raw.x_nonlinear.assign(2, std::vector<double>(n));
    for (int i = 0; i < n; ++i) {
        raw.x_nonlinear[0][i] = 10.0 + 2.0 * rng.normal();
        raw.x_nonlinear[1][i] = rng.normal();
        raw.y[i] = 2.0 + 1.5 * raw.x_nonlinear[0][i] + std::sin(2.0 * raw.x_nonlinear[1][i]) + 0.05 * rng.normal();
    }
    const PreparedData data = prepare(raw, ResponseType::Gaussian, {.num_basis = 10});
    RngStream chain(35);
    const GibbsSamples fit = run_gibbs(data, Hyperparameters{}, {.n_warm = 500, .n_kept = 500}, chain);
    const SelectionResult res = summarize(fit, data, SelectionConfig::defaults(FitMethod::Mcmc));
    REQUIRE(res.predictors[0].type == EffectType::Linear);
    REQUIRE(res.predictors[1].type == EffectType::Nonlinear);
    REQUIRE(res.curves.size() == 1);

    std::vector<double> x1 = raw.x_nonlinear[1];
    std::nth_element(x1.begin(), x1.begin() + n / 2, x1.end());
    const double offset = std::sin(2.0 * 0.5 * (x1[n / 2] + *std::max_element(x1.begin(), x1.begin() + n / 2)));
    Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(5, 7.0, 13.0);
    const CurveSlice c = curve_slice(fit, data, 0, res.predictors, grid);
    for (int g = 0; g < 5; ++g) {
        CHECK(c.estimate[g] == doctest::Approx(2.0 + 1.5 * grid[g] + offset).epsilon(0.01));
        CHECK(c.lower[g] <= c.estimate[g]);
        CHECK(c.upper[g] >= c.estimate[g]);
    }
    // The second block's default grid spans its training range.
    const CurveSlice d = res.curves[0];
    CHECK(d.grid.size() == 101);
    CHECK(d.grid[0] == doctest::Approx(*std::min_element(raw.x_nonlinear[1].begin(), raw.x_nonlinear[1].end())));
    CHECK_THROWS_AS(curve_slice(fit, data, 0, res.predictors, Eigen::VectorXd::Constant(1, 100.0)), OutOfRange);
    CHECK_THROWS_AS(curve_slice(fit, data, 2, res.predictors), InvalidIndex);

    const MfvbResult vb = run_mfvb(data, Hyperparameters{});
    const CurveSlice v = curve_slice(vb.q, data, 0, res.predictors, grid);
    for (int g = 0; g < 5; ++g) {
        CHECK(v.estimate[g] == doctest::Approx(2.0 + 1.5 * grid[g] + offset).epsilon(0.01));
        CHECK(v.lower[g] < v.estimate[g]);
        CHECK(v.upper[g] > v.estimate[g]);
    }
}

TEST_CASE("binary slices lie in [0,1] and decisions obey the rules") {
    RngStream rng(36);
    const PreparedData data = prepare(small_gam(rng, 300, true), ResponseType::Bernoulli, {.num_basis = 8});
    RngStream chain(37);
    const GibbsSamples fit = run_gibbs(data, Hyperparameters{}, {.n_warm = 300, .n_kept = 300}, chain);
    const MfvbResult vb = run_mfvb(data, Hyperparameters{}, {.tol = 1e-8, .max_cycles = 5000});
    for (const SelectionResult& res : {summarize(fit, data, SelectionConfig::defaults(FitMethod::Mcmc)),
                                       summarize(vb.q, data, SelectionConfig::defaults(FitMethod::Mfvb))}) {
        std::vector<PredictorDecision> all = res.predictors;
        for (int b = 0; b < data.num_blocks(); ++b) {
            const CurveSlice c = res.method == FitMethod::Mcmc ? curve_slice(fit, data, b, all)
                                                               : curve_slice(vb.q, data, b, all);
            CHECK((c.lower.array() >= 0.0).all());
            CHECK((c.upper.array() <= 1.0).all());
            CHECK((c.estimate.array() >= c.lower.array()).all());
            CHECK((c.estimate.array() <= c.upper.array()).all());
        }
        const double cut = 1.0 - res.tau;
        for (const PredictorDecision& d : res.predictors) {
            if (d.type == EffectType::Nonlinear) CHECK(*d.p_u > cut);
            if (d.type == EffectType::Linear) CHECK((d.p_beta > cut && (!d.p_u || *d.p_u <= cut)));
        }
        CHECK(res.predictors[0].type != EffectType::Zero);
    }
}

TEST_CASE("band endpoints stabilize with longer chains") {
    RngStream rng(38);
    const PreparedData data = prepare(small_gam(rng, 120, false), ResponseType::Gaussian, {.num_basis = 6});
    const PredictorDecision keep{data.names[1], 1, 0, EffectType::Nonlinear, 1.0, 1.0};
    auto spread = [&](int nk) {
        Eigen::VectorXd ends(6);
        for (int r = 0; r < 6; ++r) {
            RngStream chain(100 + r);
            const GibbsSamples fit = run_gibbs(data, Hyperparameters{}, {.n_warm = 200, .n_kept = nk}, chain);
            ends[r] = curve_slice(fit, data, 0, {keep}, Eigen::VectorXd::Zero(1)).upper[0];
        }
        return std::sqrt((ends.array() - ends.mean()).square().sum() / 5.0);
    };
    CHECK(spread(1600) < spread(100));
}

TEST_CASE("selection overlap") {
    SelectionResult a, b;
    a.predictors.resize(3);
    b.predictors.resize(3);
    a.predictors[0].type = EffectType::Linear;
    b.predictors[0].type = EffectType::Nonlinear;
    a.predictors[1].type = EffectType::Zero;
    b.predictors[1].type = EffectType::Zero;
    a.predictors[2].type = EffectType::Linear;
    b.predictors[2].type = EffectType::Linear;
    const SelectionOverlap o = compare_selections(a, b);
    CHECK(o.same_type == 2);
    CHECK(o.selected_both == 2);
    CHECK(o.selected_first == 2);
    b.predictors.pop_back();
    CHECK_THROWS_AS(compare_selections(a, b), InvalidInput);
}
