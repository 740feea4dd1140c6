#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "csv_io.hpp"
#include "spikegam/errors.hpp"
#include "spikegam/gibbs.hpp"
#include "spikegam/harness.hpp"
#include "spikegam/mfvb.hpp"
#include "spikegam/model.hpp"
#include "spikegam/preprocess.hpp"
#include "spikegam/rng.hpp"
#include "spikegam/selection.hpp"

namespace spikegam::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

constexpr int kMinTestDraws = 10000;

double elapsed_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write '" + path.string() + "'");
    return out;
}

void make_directory(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InvalidInput("cannot create directory '" + dir.string() + "': " + ec.message());
}

void write_json(const fs::path& path, const json& doc) {
    auto out = open_output(path);
    out << doc.dump(2) << '\n';
}

json to_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

json to_json(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(x);
    return a;
}

std::string num(double v) { return format_double(v); }
std::string num(long v) { return std::to_string(v); }

// Options shared by every command that fits models.
struct FitSettings {
    Hyperparameters hyper;
    int n_warm = 1000;
    int n_kept = 1000;
    double tol = 1e-8;
    int max_cycles = 500;
    int num_basis = 30;

    void validate() const {
        hyper.validate();
        if (n_warm < 0) throw InvalidParameter("--nwarm must be non-negative");
        if (n_kept < 1) throw InvalidParameter("--nkept must be positive");
        if (!(tol > 0.0)) throw InvalidParameter("--tol must be positive");
        if (max_cycles < 1) throw InvalidParameter("--max-cycles must be positive");
        if (num_basis < 1) throw InvalidParameter("--K must be positive");
    }

    GibbsOptions gibbs() const { return {.n_warm = n_warm, .n_kept = n_kept}; }
    MfvbOptions mfvb() const { return {.tol = tol, .max_cycles = max_cycles}; }

    json echo() const {
        return {{"sigma_beta0", hyper.sigma_beta0}, {"s_beta", hyper.s_beta}, {"s_eps", hyper.s_eps},
                {"s_u", hyper.s_u},                 {"rho_beta", hyper.rho_beta}, {"rho_u", hyper.rho_u},
                {"nwarm", n_warm},                  {"nkept", n_kept},           {"tol", tol},
                {"max_cycles", max_cycles},         {"K", num_basis}};
    }
};

void add_fit_settings(CLI::App* cmd, FitSettings& s, bool with_hyper) {
    cmd->add_option("--nwarm", s.n_warm, "MCMC warm-up sweeps")->capture_default_str();
    cmd->add_option("--nkept", s.n_kept, "MCMC retained sweeps")->capture_default_str();
    cmd->add_option("--tol", s.tol, "MFVB relative ELBO tolerance")->capture_default_str();
    cmd->add_option("--max-cycles", s.max_cycles, "MFVB cycle cap")->capture_default_str();
    cmd->add_option("--K", s.num_basis, "spline basis size per continuous predictor")->capture_default_str();
    if (!with_hyper) return;
    cmd->add_option("--sigma-beta0", s.hyper.sigma_beta0, "prior sd of the intercept")->capture_default_str();
    cmd->add_option("--s-beta", s.hyper.s_beta, "Half-Cauchy scale of the linear-term scale")->capture_default_str();
    cmd->add_option("--s-eps", s.hyper.s_eps, "Half-Cauchy scale of the error sd")->capture_default_str();
    cmd->add_option("--s-u", s.hyper.s_u, "Half-Cauchy scale of the spline scale")->capture_default_str();
    cmd->add_option("--rho-beta", s.hyper.rho_beta, "prior inclusion probability, linear terms")
        ->capture_default_str();
    cmd->add_option("--rho-u", s.hyper.rho_u, "prior inclusion probability, spline blocks")->capture_default_str();
}

std::vector<FitMethod> parse_methods(const std::string& spec) {
    if (spec == "both") return {FitMethod::Mcmc, FitMethod::Mfvb};
    return {parse_fit_method(spec)};
}

std::vector<FitMethod> parse_methods(const std::vector<std::string>& specs) {
    std::vector<FitMethod> out;
    for (const auto& s : specs)
        for (FitMethod m : parse_methods(s))
            if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
    if (out.empty()) throw InvalidParameter("no method given");
    return out;
}

// fit

struct FitArgs {
    std::string data;
    std::string response;
    std::vector<std::string> linear_only;
    std::string family = "gaussian";
    std::string method = "mcmc";
    std::optional<double> tau;
    std::uint64_t seed = 1;
    int grid_size = 101;
    std::string out = "spikegam_out";
    FitSettings settings;
};

struct FitReport {
    SelectionResult selection;
    double seconds = 0.0;
    json diagnostics;
    bool converged = true;
};

std::string role_of(const PreparedData& data, Eigen::Index column) {
    if (column < data.num_linear_only) {
        const ColumnSource& src = data.source[column];
        return src.nonlinear ? "demoted" : "linear-only";
    }
    return "continuous";
}

json data_summary(const PreparedData& data) {
    json predictors = json::array();
    for (Eigen::Index c = 0; c < data.d(); ++c) {
        json p = {{"name", data.names[c]}, {"role", role_of(data, c)}};
        const int block = static_cast<int>(c - data.num_linear_only);
        if (block >= 0) {
            p["block"] = block;
            p["K"] = data.block_size(block);
        }
        predictors.push_back(p);
    }
    return {{"n", data.n},
            {"response", std::string(to_string(data.response))},
            {"predictors", predictors},
            {"demoted", data.demoted},
            {"y_mean", data.y_scale.mean},
            {"y_sd", data.y_scale.sd}};
}

void write_chains(const fs::path& path, const GibbsSamples& fit, const PreparedData& data) {
    auto out = open_output(path);
    const bool gaussian = fit.response == ResponseType::Gaussian;
    std::vector<std::string> header{"iteration", "beta0", "sigma2_beta", "a_beta"};
    if (gaussian) {
        header.push_back("sigma2_eps");
        header.push_back("a_eps");
    }
    for (const auto& name : data.names) header.push_back(csv_field("beta[" + name + "]"));
    for (const auto& name : data.names) header.push_back(csv_field("gamma_beta[" + name + "]"));
    for (int j = 0; j < data.num_blocks(); ++j)
        header.push_back(csv_field("gamma_u[" + data.names[data.block_column(j)] + "]"));
    for (int j = 0; j < data.num_blocks(); ++j)
        header.push_back(csv_field("sigma2_u[" + data.names[data.block_column(j)] + "]"));
    write_csv_row(out, header);
    for (Eigen::Index g = 0; g < fit.n_kept(); ++g) {
        std::vector<std::string> row{num(static_cast<long>(g + 1)), num(fit.beta0[g]), num(fit.sigma2_beta[g]),
                                     num(fit.a_beta[g])};
        if (gaussian) {
            row.push_back(num(fit.sigma2_eps[g]));
            row.push_back(num(fit.a_eps[g]));
        }
        for (Eigen::Index c = 0; c < fit.beta.cols(); ++c) row.push_back(num(fit.beta(g, c)));
        for (Eigen::Index c = 0; c < fit.gamma_beta.cols(); ++c)
            row.push_back(num(static_cast<long>(fit.gamma_beta(g, c))));
        for (Eigen::Index j = 0; j < fit.gamma_u.cols(); ++j) row.push_back(num(static_cast<long>(fit.gamma_u(g, j))));
        for (Eigen::Index j = 0; j < fit.sigma2_u.cols(); ++j) row.push_back(num(fit.sigma2_u(g, j)));
        write_csv_row(out, row);
    }
}

json inclusion_json(const InclusionProbabilities& p) { return {{"beta", to_json(p.beta)}, {"u", to_json(p.u)}}; }

FitReport fit_mcmc(const PreparedData& data, const FitArgs& args, const SelectionConfig& config,
                   const fs::path& out_dir) {
    RngStream rng(args.seed, 0);
    const auto started = Clock::now();
    const GibbsSamples fit = run_gibbs(data, args.settings.hyper, args.settings.gibbs(), rng);
    FitReport report;
    report.seconds = elapsed_since(started);
    report.selection = summarize(fit, data, config);
    write_chains(out_dir / "chains.csv", fit, data);

    json d = {{"method", to_string(FitMethod::Mcmc)},
              {"tau", config.tau},
              {"nwarm", args.settings.n_warm},
              {"nkept", fit.n_kept()},
              {"inclusion", inclusion_json(posterior_inclusion_means(fit))}};
    if (fit.response == ResponseType::Gaussian) {
        const double sd2 = data.y_scale.sd * data.y_scale.sd;
        d["sigma2_eps_mean"] = fit.sigma2_eps.mean() * sd2;
    }
    report.diagnostics = d;
    return report;
}

FitReport fit_mfvb(const PreparedData& data, const FitArgs& args, const SelectionConfig& config) {
    const auto started = Clock::now();
    const MfvbResult fit = run_mfvb(data, args.settings.hyper, args.settings.mfvb());
    FitReport report;
    report.seconds = elapsed_since(started);
    report.converged = fit.converged;
    report.selection = summarize(fit.q, data, config);

    json d = {{"method", to_string(FitMethod::Mfvb)},
              {"tau", config.tau},
              {"converged", fit.converged},
              {"cycles", fit.cycles},
              {"elbo", to_json(fit.trace.values)},
              {"relative_change", to_json(fit.trace.relative_change)},
              {"inclusion", inclusion_json(variational_inclusion_means(fit.q))}};
    if (fit.q.response == ResponseType::Gaussian) {
        const double sd2 = data.y_scale.sd * data.y_scale.sd;
        const InvGammaQ& s = fit.q.sigma2_eps;
        d["q_sigma2_eps"] = {{"kappa", s.kappa}, {"lambda", s.lambda * sd2}};
    }
    report.diagnostics = d;
    return report;
}

void write_selection_tables(const fs::path& dir, const std::vector<FitReport>& reports, const PreparedData& data) {
    auto effects = open_output(dir / "effects.csv");
    write_csv_row(effects, {"method", "predictor", "role", "type", "p_beta", "p_u", "tau"});
    auto coefs = open_output(dir / "coefficients.csv");
    write_csv_row(coefs, {"method", "predictor", "mean", "lower", "upper"});
    auto curves = open_output(dir / "curves.csv");
    write_csv_row(curves, {"method", "predictor", "grid", "estimate", "lower", "upper"});
    for (const auto& r : reports) {
        const SelectionResult& s = r.selection;
        const std::string m = to_string(s.method);
        for (const auto& p : s.predictors)
            write_csv_row(effects, {m, csv_field(p.name), role_of(data, p.column), to_string(p.type), num(p.p_beta),
                                    p.p_u ? num(*p.p_u) : std::string("NA"), num(s.tau)});
        for (const auto& c : s.coefficients)
            write_csv_row(coefs, {m, csv_field(c.name), num(c.mean), num(c.lower), num(c.upper)});
        for (const auto& c : s.curves)
            for (Eigen::Index i = 0; i < c.grid.size(); ++i)
                write_csv_row(curves, {m, csv_field(c.name), num(c.grid[i]), num(c.estimate[i]), num(c.lower[i]),
                                       num(c.upper[i])});
    }
}

void print_effects(const std::vector<FitReport>& reports) {
    for (const auto& r : reports) {
        const SelectionResult& s = r.selection;
        std::cout << to_string(s.method) << " (tau = " << s.tau << ", " << r.seconds << " s)\n";
        for (const auto& p : s.predictors) {
            std::cout << "  " << p.name << ": " << to_string(p.type) << "  p_beta=" << p.p_beta;
            if (p.p_u) std::cout << "  p_u=" << *p.p_u;
            std::cout << '\n';
        }
    }
}

int run_fit(const FitArgs& args) {
    args.settings.validate();
    const ResponseType response = parse_response_type(args.family);
    const std::vector<FitMethod> methods = parse_methods(args.method);

    const CsvTable table = read_csv_file(args.data);
    const RawDataset raw = to_raw_dataset(table, args.response, args.linear_only);
    const PreparedData data = prepare(raw, response, {.num_basis = args.settings.num_basis});

    const fs::path out_dir(args.out);
    make_directory(out_dir);

    json config = {{"data", args.data},
                   {"response", args.response},
                   {"linear_only", args.linear_only},
                   {"family", std::string(to_string(response))},
                   {"method", args.method},
                   {"seed", args.seed},
                   {"grid_size", args.grid_size}};
    config["settings"] = args.settings.echo();

    std::vector<FitReport> reports;
    json timing = json::object();
    for (FitMethod m : methods) {
        SelectionConfig sc = SelectionConfig::defaults(m);
        if (args.tau) sc.tau = *args.tau;
        sc.grid_size = args.grid_size;
        sc.validate();
        reports.push_back(m == FitMethod::Mcmc ? fit_mcmc(data, args, sc, out_dir) : fit_mfvb(data, args, sc));
        timing[to_string(m)] = {{"seconds", reports.back().seconds}};
    }

    write_selection_tables(out_dir, reports, data);

    json doc = {{"config", config}, {"data", data_summary(data)}};
    json fits = json::array();
    for (const auto& r : reports) fits.push_back(r.diagnostics);
    doc["fits"] = fits;
    if (reports.size() == 2) {
        const SelectionOverlap o = compare_selections(reports[0].selection, reports[1].selection);
        doc["overlap"] = {{"num_predictors", o.num_predictors},
                          {"same_type", o.same_type},
                          {"selected_mcmc", o.selected_first},
                          {"selected_mfvb", o.selected_second},
                          {"selected_both", o.selected_both}};
    }
    write_json(out_dir / "diagnostics.json", doc);
    write_json(out_dir / "timing.json", timing);

    print_effects(reports);
    for (const auto& r : reports)
        if (!r.converged) {
            std::cerr << "warning: MFVB stopped at --max-cycles without meeting --tol\n";
            return kNotConverged;
        }
    return kSuccess;
}

// generate

struct GenerateArgs {
    SyntheticSpec spec;
    std::string family = "gaussian";
    std::uint64_t seed = 1;
    int replication = 0;
    std::string out;
    std::string truth;
};

json truth_json(const SyntheticSpec& spec, const SyntheticData& sim) {
    json predictors = json::array();
    for (std::size_t j = 0; j < sim.truth.labels.size(); ++j) {
        json h = json::array();
        for (double c : sim.truth.quintic[j]) h.push_back(c);
        predictors.push_back({{"name", sim.data.nonlinear_names[j]},
                              {"type", to_string(sim.truth.labels[j])},
                              {"linear", sim.truth.linear[j]},
                              {"hermite", h}});
    }
    json doc = {{"n", spec.n}, {"family", std::string(to_string(spec.response))}, {"intercept", sim.truth.intercept}};
    if (spec.response == ResponseType::Gaussian) doc["sigma_eps"] = spec.sigma_eps;
    doc["predictors"] = predictors;
    return doc;
}

int run_generate(GenerateArgs args) {
    args.spec.response = parse_response_type(args.family);
    args.spec.validate();
    if (args.replication < 0) throw InvalidParameter("--replication must be non-negative");
    // Matches the data stream of simulate replication r.
    RngStream rng(args.seed, 3 * static_cast<std::uint64_t>(args.replication));
    const SyntheticData sim = gen_synthetic(args.spec, rng);

    auto out = open_output(args.out);
    std::vector<std::string> header{"y"};
    for (const auto& name : sim.data.nonlinear_names) header.push_back(name);
    write_csv_row(out, header);
    for (std::size_t i = 0; i < sim.data.n(); ++i) {
        std::vector<std::string> row{num(sim.data.y[i])};
        for (const auto& col : sim.data.x_nonlinear) row.push_back(num(col[i]));
        write_csv_row(out, row);
    }
    if (!args.truth.empty()) write_json(args.truth, truth_json(args.spec, sim));
    return kSuccess;
}

// simulate and benchmark

struct StudyArgs {
    std::vector<int> n{1000};
    std::vector<double> sigma_eps{1.0};
    std::vector<double> tau;
    std::vector<std::string> method{"both"};
    std::vector<double> scale;
    int d_zero = 5;
    int d_lin = 5;
    int d_nonlin = 5;
    std::string family = "gaussian";
    int reps = 20;
    int workers = 1;
    std::uint64_t seed = 1;
    int test_draws = 0;
    std::string out = "spikegam_study";
    FitSettings settings;
};

void add_study_options(CLI::App* cmd, StudyArgs& a) {
    cmd->add_option("--d-zero", a.d_zero, "predictors with no effect")->capture_default_str();
    cmd->add_option("--d-lin", a.d_lin, "predictors with a linear effect")->capture_default_str();
    cmd->add_option("--d-nonlin", a.d_nonlin, "predictors with a nonlinear effect")->capture_default_str();
    cmd->add_option("--family", a.family, "gaussian or bernoulli")->capture_default_str();
    cmd->add_option("--reps", a.reps, "replications per cell")->capture_default_str();
    cmd->add_option("--workers", a.workers, "worker threads")->capture_default_str();
    cmd->add_option("--seed", a.seed, "master seed")->capture_default_str();
    cmd->add_option("--out", a.out, "output directory")->capture_default_str();
    add_fit_settings(cmd, a.settings, false);
}

struct CellKey {
    FitMethod method;
    int n;
    double sigma_eps;
    double scale;
};

SimulationCell make_cell(const StudyArgs& a, const CellKey& key, ResponseType response,
                         const std::vector<double>& taus) {
    SimulationCell cell;
    cell.spec.n = key.n;
    cell.spec.d_zero = a.d_zero;
    cell.spec.d_lin = a.d_lin;
    cell.spec.d_nonlin = a.d_nonlin;
    cell.spec.response = response;
    if (response == ResponseType::Gaussian) cell.spec.sigma_eps = key.sigma_eps;
    cell.spec.validate();
    cell.method = key.method;
    cell.taus = taus;
    cell.hyper = a.settings.hyper;
    cell.hyper.s_beta = cell.hyper.s_eps = cell.hyper.s_u = key.scale;
    cell.hyper.validate();
    cell.gibbs = a.settings.gibbs();
    cell.mfvb = a.settings.mfvb();
    cell.num_basis = a.settings.num_basis;
    cell.test_draws = response == ResponseType::Gaussian ? a.test_draws : 0;
    return cell;
}

void validate_study(const StudyArgs& a) {
    a.settings.validate();
    if (a.reps < 1) throw InvalidParameter("--reps must be positive");
    if (a.workers < 1) throw InvalidParameter("--workers must be positive");
    if (a.test_draws != 0 && a.test_draws < kMinTestDraws)
        throw InvalidParameter("--test-draws must be 0 or at least " + std::to_string(kMinTestDraws));
    if (a.n.empty()) throw InvalidParameter("--n needs at least one value");
}

std::vector<CellKey> expand_cells(const StudyArgs& a, ResponseType response, const std::vector<FitMethod>& methods) {
    std::vector<double> sigmas = a.sigma_eps;
    if (response == ResponseType::Bernoulli) sigmas = {std::numeric_limits<double>::quiet_NaN()};
    if (sigmas.empty()) throw InvalidParameter("--sigma-eps needs at least one value");
    std::vector<double> scales = a.scale;
    if (scales.empty()) scales = {a.settings.hyper.s_beta};
    std::vector<CellKey> cells;
    for (FitMethod m : methods)
        for (int n : a.n)
            for (double s : sigmas)
                for (double sc : scales) cells.push_back({m, n, s, sc});
    return cells;
}

int run_simulate(const StudyArgs& a) {
    validate_study(a);
    const ResponseType response = parse_response_type(a.family);
    const std::vector<FitMethod> methods = parse_methods(a.method);
    const std::vector<CellKey> keys = expand_cells(a, response, methods);

    // Validate the whole grid before running anything.
    std::vector<SimulationCell> cells;
    for (const auto& key : keys) {
        std::vector<double> taus = a.tau;
        if (taus.empty()) taus = {SelectionConfig::defaults(key.method).tau};
        for (double t : taus) SelectionConfig{.tau = t}.validate();
        cells.push_back(make_cell(a, key, response, taus));
    }

    const fs::path dir(a.out);
    make_directory(dir);
    auto reps_out = open_output(dir / "replications.csv");
    write_csv_row(reps_out, {"method", "n", "sigma_eps", "scale", "replication", "tau", "misclassification",
                             "relative_test_error", "seconds", "converged", "cycles"});
    auto cells_out = open_output(dir / "cells.csv");
    write_csv_row(cells_out, {"method", "n", "sigma_eps", "scale", "tau", "reps", "median_misclassification",
                              "mean_misclassification", "median_relative_test_error", "median_seconds",
                              "not_converged"});

    bool any_capped = false;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        const CellKey& key = keys[c];
        const SimulationCell& cell = cells[c];
        const auto records = run_cell(cell, a.seed, a.reps, a.workers);
        const std::string m = to_string(key.method);
        std::vector<double> rte, secs;
        int capped = 0;
        for (const auto& r : records) {
            if (!std::isnan(r.relative_test_error)) rte.push_back(r.relative_test_error);
            secs.push_back(r.seconds);
            if (!r.converged) ++capped;
            for (std::size_t t = 0; t < cell.taus.size(); ++t)
                write_csv_row(reps_out, {m, num(static_cast<long>(key.n)), num(key.sigma_eps), num(key.scale),
                                         num(static_cast<long>(r.replication)), num(cell.taus[t]),
                                         num(r.misclassification[t]), num(r.relative_test_error), num(r.seconds),
                                         r.converged ? "1" : "0", num(static_cast<long>(r.cycles))});
        }
        any_capped = any_capped || capped > 0;
        const double rte_med = rte.empty() ? std::numeric_limits<double>::quiet_NaN() : median(rte);
        for (std::size_t t = 0; t < cell.taus.size(); ++t) {
            std::vector<double> mis;
            for (const auto& r : records) mis.push_back(r.misclassification[t]);
            double mean = 0.0;
            for (double v : mis) mean += v / static_cast<double>(mis.size());
            const double med = median(mis);
            write_csv_row(cells_out, {m, num(static_cast<long>(key.n)), num(key.sigma_eps), num(key.scale),
                                      num(cell.taus[t]), num(static_cast<long>(a.reps)), num(med), num(mean),
                                      num(rte_med), num(median(secs)), num(static_cast<long>(capped))});
            std::cout << m << " n=" << key.n << " sigma_eps=" << key.sigma_eps << " scale=" << key.scale
                      << " tau=" << cell.taus[t] << ": median misclassification " << med << ", median "
                      << median(secs) << " s";
            if (capped) std::cout << ", " << capped << " run(s) hit --max-cycles";
            std::cout << '\n';
        }
    }
    if (any_capped) std::cerr << "note: some MFVB runs stopped at --max-cycles; see the converged column\n";
    return kSuccess;
}

int run_benchmark(const StudyArgs& a) {
    validate_study(a);
    const ResponseType response = parse_response_type(a.family);
    const std::vector<FitMethod> methods = parse_methods(a.method);
    const fs::path dir(a.out);
    make_directory(dir);
    auto out = open_output(dir / "timings.csv");
    write_csv_row(out, {"method", "n", "replication", "seconds", "converged", "cycles"});

    json summary = json::array();
    for (FitMethod m : methods) {
        std::vector<double> ns, medians;
        json per_n = json::array();
        for (int n : a.n) {
            const CellKey key{m, n, a.sigma_eps.empty() ? 1.0 : a.sigma_eps.front(), a.settings.hyper.s_beta};
            const SimulationCell cell = make_cell(a, key, response, {SelectionConfig::defaults(m).tau});
            const auto records = run_cell(cell, a.seed, a.reps, a.workers);
            std::vector<double> secs;
            for (const auto& r : records) {
                secs.push_back(r.seconds);
                write_csv_row(out, {to_string(m), num(static_cast<long>(n)), num(static_cast<long>(r.replication)),
                                    num(r.seconds), r.converged ? "1" : "0", num(static_cast<long>(r.cycles))});
            }
            ns.push_back(n);
            medians.push_back(median(secs));
            per_n.push_back({{"n", n}, {"median_seconds", medians.back()}});
            std::cout << to_string(m) << " n=" << n << ": median " << medians.back() << " s\n";
        }
        json entry = {{"method", to_string(m)}, {"cells", per_n}};
        if (ns.size() >= 2) {
            const double slope = loglog_slope(ns, medians);
            entry["loglog_slope"] = slope;
            std::cout << to_string(m) << " log-log slope of runtime on n: " << slope << '\n';
        }
        summary.push_back(entry);
    }
    json doc = {{"family", std::string(to_string(response))},
                {"d_zero", a.d_zero},
                {"d_lin", a.d_lin},
                {"d_nonlin", a.d_nonlin},
                {"reps", a.reps},
                {"seed", a.seed},
                {"settings", a.settings.echo()},
                {"methods", summary}};
    write_json(dir / "benchmark.json", doc);
    return kSuccess;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Bayesian effect-type selection for generalized additive models"};
    app.require_subcommand(1);

    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit", "fit a CSV data set and classify each predictor");
    fit_cmd->add_option("--data", fit.data, "input CSV with a header row")->required();
    fit_cmd->add_option("--response", fit.response, "name of the response column")->required();
    fit_cmd->add_option("--linear-only", fit.linear_only, "comma-separated predictors without a spline part")
        ->delimiter(',');
    fit_cmd->add_option("--family", fit.family, "gaussian or bernoulli")->capture_default_str();
    fit_cmd->add_option("--method", fit.method, "mcmc, mfvb or both")->capture_default_str();
    fit_cmd->add_option("--tau", fit.tau, "sparsity threshold (default 0.5 for mcmc, 0.1 for mfvb)");
    fit_cmd->add_option("--seed", fit.seed, "MCMC seed")->capture_default_str();
    fit_cmd->add_option("--grid-size", fit.grid_size, "points per curve slice")->capture_default_str();
    fit_cmd->add_option("--out", fit.out, "output directory")->capture_default_str();
    add_fit_settings(fit_cmd, fit.settings, true);

    GenerateArgs gen;
    auto* gen_cmd = app.add_subcommand("generate", "write a synthetic data set as CSV");
    gen_cmd->add_option("--n", gen.spec.n, "sample size")->capture_default_str();
    gen_cmd->add_option("--d-zero", gen.spec.d_zero, "predictors with no effect")->capture_default_str();
    gen_cmd->add_option("--d-lin", gen.spec.d_lin, "predictors with a linear effect")->capture_default_str();
    gen_cmd->add_option("--d-nonlin", gen.spec.d_nonlin, "predictors with a nonlinear effect")->capture_default_str();
    gen_cmd->add_option("--sigma-eps", gen.spec.sigma_eps, "error sd (gaussian)")->capture_default_str();
    gen_cmd->add_option("--linear-scale", gen.spec.linear_scale, "sd of linear coefficients")->capture_default_str();
    gen_cmd->add_option("--nonlinear-scale", gen.spec.nonlinear_scale, "sd of each nonlinear effect")
        ->capture_default_str();
    gen_cmd->add_option("--intercept", gen.spec.intercept, "intercept of the linear predictor")
        ->capture_default_str();
    gen_cmd->add_option("--family", gen.family, "gaussian or bernoulli")->capture_default_str();
    gen_cmd->add_option("--seed", gen.seed, "master seed")->capture_default_str();
    gen_cmd->add_option("--replication", gen.replication, "replication index within the seed")
        ->capture_default_str();
    gen_cmd->add_option("--out", gen.out, "output CSV")->required();
    gen_cmd->add_option("--truth", gen.truth, "optional JSON file describing the generating model");

    StudyArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "run a replicated simulation study over a grid of cells");
    sim_cmd->add_option("--n", sim.n, "sample sizes")->delimiter(',')->capture_default_str();
    sim_cmd->add_option("--sigma-eps", sim.sigma_eps, "error sds (gaussian)")->delimiter(',')->capture_default_str();
    sim_cmd->add_option("--tau", sim.tau, "sparsity thresholds (default 0.5 for mcmc, 0.1 for mfvb)")
        ->delimiter(',');
    sim_cmd->add_option("--method", sim.method, "mcmc, mfvb or both")->delimiter(',')->capture_default_str();
    sim_cmd->add_option("--scale", sim.scale, "values shared by s_beta, s_eps and s_u (default 1000)")
        ->delimiter(',');
    sim_cmd->add_option("--test-draws", sim.test_draws, "relative test error draws, 0 to skip")
        ->capture_default_str();
    add_study_options(sim_cmd, sim);

    StudyArgs bench;
    bench.n = {1000, 10000, 100000};
    bench.d_zero = 4;
    bench.d_lin = 3;
    bench.d_nonlin = 3;
    bench.reps = 5;
    bench.out = "spikegam_benchmark";
    auto* bench_cmd = app.add_subcommand("benchmark", "time both algorithms across sample sizes");
    bench_cmd->add_option("--n", bench.n, "sample sizes")->delimiter(',')->capture_default_str();
    bench_cmd->add_option("--method", bench.method, "mcmc, mfvb or both")->delimiter(',')->capture_default_str();
    add_study_options(bench_cmd, bench);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kSuccess : kInputError;
    }

    try {
        if (*fit_cmd) return run_fit(fit);
        if (*gen_cmd) return run_generate(gen);
        if (*sim_cmd) return run_simulate(sim);
        if (*bench_cmd) return run_benchmark(bench);
    } catch (const NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumericalFailure;
    } catch (const ConsistencyError& e) {
        std::cerr << "internal consistency check failed: " << e.what() << '\n';
        return kNumericalFailure;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInputError;
    }
    return kInputError;
}

}  // namespace spikegam::cli
