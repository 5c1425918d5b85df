#include "pival/commands.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "pival/decision.hpp"
#include "pival/errors.hpp"
#include "pival/inference.hpp"
#include "pival/json_io.hpp"
#include "pival/numerics.hpp"
#include "pival/parallel.hpp"
#include "pival/posterior.hpp"
#include "pival/quadrature.hpp"
#include "pival/replication.hpp"
#include "pival/surface.hpp"
#include "pival/trial_data.hpp"

#ifndef PIVAL_DATA_DIR
#define PIVAL_DATA_DIR "data"
#endif

namespace pival {

using nlohmann::json;

std::vector<PriorSpec> prior_preset(const std::string& name, Eigen::Index p) {
    std::vector<PriorSpec> out;
    for (Eigen::Index j = 0; j < p; ++j) {
        if (name == "flat") {
            out.push_back(PriorSpec::flat());
        } else if (name == "student-t") {
            out.push_back(j == 0 ? PriorSpec::cauchy(0.0, 1.0) : PriorSpec::student_t(2.5, 0.0, 1.0));
        } else if (name == "student-t-appendix") {
            out.push_back(j == 0 ? PriorSpec::student_t(2.5, 0.0, 1.0) : PriorSpec::cauchy(0.0, 1.0));
        } else if (name == "diffuse-normal") {
            out.push_back(PriorSpec::normal(0.0, 50.0));
        } else {
            throw UsageError("unknown prior preset '" + name + "'");
        }
    }
    return out;
}

std::vector<std::pair<std::string, PriorSpec>> reference_priors() {
    return {
        {"test_fixed_sigma", PriorSpec::normal(0.0, 1000.0)},
        {"test_uniform_sigma", PriorSpec::test_uniform_sigma(0.0, 900.0, 1100.0)},
        {"test_invchisq", PriorSpec::student_t(1.0, 0.0, 1000.0)},
        {"explore_fixed_sigma", PriorSpec::explore_fixed_sigma(-200.0, 200.0, 1000.0)},
        {"explore_uniform_sigma", PriorSpec::explore_uniform_sigma(-200.0, 200.0, 900.0, 1100.0)},
        {"explore_invchisq", PriorSpec::explore_invchisq(-200.0, 200.0, 1.0, 1000.0)},
    };
}

std::string bundled_data_path() { return std::string(PIVAL_DATA_DIR) + "/sglt2i_trials.csv"; }

namespace {

json vec(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

json header(const std::string& command, const RunConfig& cfg) {
    return json{{"command", command}, {"version", kVersion}, {"seed", cfg.seed}};
}

struct Outputs {
    std::string json_path;
    std::string csv_path;
};

// `--out x.csv` routes the plot table there and the JSON to stdout.
Outputs resolve_outputs(const RunConfig& cfg) {
    Outputs o{cfg.out, cfg.csv};
    if (o.json_path.size() >= 4 && o.json_path.compare(o.json_path.size() - 4, 4, ".csv") == 0) {
        if (!o.csv_path.empty()) throw UsageError("--out names a CSV and --csv is also set");
        o.csv_path = o.json_path;
        o.json_path.clear();
    }
    return o;
}

void finish(const json& result, const CsvTable* table, const RunConfig& cfg, std::ostream& out) {
    const Outputs o = resolve_outputs(cfg);
    if (table && !o.csv_path.empty()) write_text_file(o.csv_path, emit_csv(*table));
    const std::string text = emit_json(result);
    if (o.json_path.empty()) {
        out << text;
    } else {
        write_text_file(o.json_path, text);
    }
}

struct Selected {
    std::string study, outcome;
    ModelData data;
    bool exposure_from_arm_size = false;
};

std::vector<Selected> load_groups(const RunConfig& cfg) {
    const std::string path = cfg.data_path.empty() ? bundled_data_path() : cfg.data_path;
    const auto records = parse_trial_csv(path);
    std::vector<Selected> out;
    for (const auto& [study, outcome] : trial_groups(records)) {
        if (!cfg.study.empty() && study != cfg.study) continue;
        if (!cfg.outcome.empty() && outcome != cfg.outcome) continue;
        Selected s{study, outcome, {}, false};
        for (const auto& r : records)
            if (r.study == study && r.outcome == outcome) s.exposure_from_arm_size |= r.exposure_from_arm_size;
        if (cfg.family == "poisson") {
            if (cfg.link != "log") throw UsageError("trial data supports the log link for poisson");
            s.data = trial_model_data(records, study, outcome, cfg.exposure_scale);
        } else if (cfg.family == "binomial") {
            if (cfg.link != "logit") throw UsageError("trial data supports the logit link for binomial");
            std::vector<const TrialRecord*> rows;
            for (const auto& r : records)
                if (r.study == study && r.outcome == outcome) rows.push_back(&r);
            const auto n = static_cast<Eigen::Index>(rows.size());
            Eigen::VectorXd succ(n), trials(n);
            Eigen::MatrixXd X(n, 2);
            for (Eigen::Index i = 0; i < n; ++i) {
                if (!rows[i]->arm_size) throw DomainError("binomial model needs arm_size for every row");
                succ[i] = static_cast<double>(rows[i]->events);
                trials[i] = *rows[i]->arm_size;
                X(i, 0) = 1.0;
                X(i, 1) = rows[i]->treat;
            }
            s.data = ModelData::binomial(succ, trials, X);
            s.data.coef_names = {"(Intercept)", "treat"};
        } else {
            throw UsageError("trial data supports families poisson and binomial");
        }
        out.push_back(std::move(s));
    }
    if (out.empty()) throw DomainError("no study/outcome matches the selection");
    return out;
}

Selected load_one(const RunConfig& cfg) {
    auto groups = load_groups(cfg);
    if (groups.size() != 1) throw UsageError("select a single study and outcome (--study, --outcome)");
    return std::move(groups.front());
}

Family family_of(const RunConfig& cfg) { return Family::from_name(cfg.family); }
Link link_of(const RunConfig& cfg) { return Link::from_name(cfg.link); }

bool fatal_fit(const FitResult& fit, const RunConfig& cfg) { return (fit.boundary || !fit.converged) && !cfg.allow_boundary; }

json fit_json(const Selected& s, const FitResult& fit, const RunConfig& cfg, WaldDist dist) {
    json r{{"study", s.study},
           {"outcome", s.outcome},
           {"coef_names", s.data.coef_names},
           {"converged", fit.converged},
           {"boundary", fit.boundary},
           {"boundary_reason", fit.boundary_reason},
           {"iterations", fit.iterations},
           {"deviance", fit.deviance},
           {"exposure_from_arm_size", s.exposure_from_arm_size}};
    const double phi = fit.inferential_phi();
    const Eigen::VectorXd se = fit.standard_errors(phi);
    r["beta_hat"] = vec(fit.beta_hat);
    r["se"] = vec(se);
    const bool report = !fatal_fit(fit, cfg);
    r["reported"] = report;
    if (report) {
        json z = json::array(), p = json::array();
        for (Eigen::Index j = 0; j < fit.p; ++j) {
            const auto t = wald_pvalue(fit, phi, j, 0.0, dist);
            z.push_back(t.z);
            p.push_back(t.p_or_pi);
        }
        r["z"] = z;
        r["p"] = p;
        const Eigen::Index k = fit.p - 1;
        const double q = std_normal_quantile(0.975);
        r["relative_risk"] = {{"estimate", std::exp(fit.beta_hat[k])},
                              {"lower", std::exp(fit.beta_hat[k] - q * se[k])},
                              {"upper", std::exp(fit.beta_hat[k] + q * se[k])}};
    }
    return r;
}

std::vector<std::pair<double, double>> grid_bounds(const FitResult& fit, double half_width_se, double guard) {
    const Eigen::VectorXd se = fit.standard_errors(fit.inferential_phi());
    std::vector<std::pair<double, double>> b;
    for (Eigen::Index j = 0; j < fit.p; ++j) {
        if (!std::isfinite(se[j]) || std::abs(fit.beta_hat[j]) > guard || se[j] > 10.0) {
            b.emplace_back(-40.0, 40.0);
        } else {
            b.emplace_back(fit.beta_hat[j] - half_width_se * se[j], fit.beta_hat[j] + half_width_se * se[j]);
        }
    }
    return b;
}

int cmd_fit(const RunConfig& cfg, bool wald_t, std::ostream& out) {
    const auto groups = load_groups(cfg);
    const Family family = family_of(cfg);
    const Link link = link_of(cfg);
    const WaldDist dist = wald_t ? WaldDist::t : WaldDist::normal;
    json result = header("fit", cfg);
    result["method"] = wald_t ? "wald_t" : "wald_normal";
    result["exposure_scale"] = cfg.exposure_scale;
    result["results"] = json::array();
    bool fatal = false;
    for (const auto& s : groups) {
        const FitResult fit = fit_irls(family, link, s.data);
        fatal |= fatal_fit(fit, cfg);
        result["results"].push_back(fit_json(s, fit, cfg, dist));
    }
    finish(result, nullptr, cfg, out);
    return fatal ? exit_boundary : exit_ok;
}

int cmd_posterior(const RunConfig& cfg, std::ostream& out) {
    const Selected s = load_one(cfg);
    const Family family = family_of(cfg);
    const Link link = link_of(cfg);
    const FitResult fit = fit_irls(family, link, s.data);
    const Eigen::Index p = fit.p;
    const auto priors = prior_preset(cfg.prior, p);
    json result = header("posterior", cfg);
    result["method"] = cfg.method;
    result["prior"] = cfg.prior;
    result["study"] = s.study;
    result["outcome"] = s.outcome;
    result["coef_names"] = s.data.coef_names;
    result["ml_boundary"] = fit.boundary;
    const double phi = fit.inferential_phi();
    std::optional<CsvTable> table;
    int status = exit_ok;

    if (cfg.method == "laplace") {
        if (cfg.prior != "flat") throw UsageError("the laplace method uses the flat prior");
        if (fatal_fit(fit, cfg) || fit.boundary) throw BoundaryError("laplace posterior needs a clean interior fit");
        const auto lap = laplace_posterior(fit, ScalePriorSpec{}, family);
        json pi = json::array(), sd = json::array();
        for (Eigen::Index j = 0; j < p; ++j) {
            pi.push_back(pi_value_analytic(lap.beta_posterior, j).p_or_pi);
            sd.push_back(std::sqrt(lap.beta_posterior.cov(j, j)));
        }
        result["beta_hat"] = vec(lap.beta_posterior.mean);
        result["se"] = sd;
        result["pi"] = pi;
    } else if (cfg.method == "grid") {
        if (p > 3) throw NotApplicableError("grid posterior supports at most 3 coefficients");
        const auto bounds = grid_bounds(fit, cfg.half_width_se, FitOptions{}.divergence_guard);
        auto loglik = [&](const Eigen::VectorXd& b) { return log_likelihood(family, link, b, phi, s.data); };
        const auto grid = grid_posterior(loglik, priors, bounds, cfg.resolution);
        result["proper"] = grid.proper;
        result["resolution"] = cfg.resolution;
        json bj = json::array();
        for (const auto& [lo, hi] : bounds) bj.push_back({lo, hi});
        result["bounds"] = bj;
        json imp = json::array();
        for (const auto& r : grid.impropriety)
            imp.push_back({{"improper", r.improper},
                           {"left_log_ratio", r.left_log_ratio},
                           {"right_log_ratio", r.right_log_ratio},
                           {"left_slope", r.left_slope},
                           {"right_slope", r.right_slope},
                           {"evidence", r.evidence}});
        result["impropriety"] = imp;
        if (grid.proper) {
            json mean = json::array(), sd = json::array(), pi = json::array();
            for (std::size_t j = 0; j < grid.dim(); ++j) {
                mean.push_back(grid.marginal_mean(j));
                sd.push_back(grid.marginal_sd(j));
                pi.push_back(pi_value_grid(grid, j).p_or_pi);
            }
            result["beta_hat"] = mean;
            result["se"] = sd;
            result["pi"] = pi;
        } else {
            result["pi"] = nullptr;
            status = exit_domain;
        }
        if (grid.dim() == 2) {
            table = CsvTable{{"beta0", "beta1", "log_density"}, {}};
            const auto& a0 = grid.axes[0];
            const auto& a1 = grid.axes[1];
            for (std::size_t i = 0; i < a0.size(); ++i)
                for (std::size_t k = 0; k < a1.size(); ++k)
                    table->add({a0[i], a1[k], grid.log_density[i * a1.size() + k]});
        }
    } else if (cfg.method == "metropolis") {
        if (fit.boundary || !fit.converged)
            throw BoundaryError("metropolis needs an interior ML fit for its start and proposal");
        const auto lp = glm_log_posterior(family, link, s.data, phi, priors);
        const auto chains =
            run_chains(lp, fit.beta_hat, phi * fit.cov_unscaled, cfg.chains, cfg.draws, cfg.burn_in, cfg.seed);
        const Eigen::MatrixXd pooled = pool_draws(chains);
        json mean = json::array(), sd = json::array(), pi = json::array(), acc = json::array();
        for (Eigen::Index j = 0; j < p; ++j) {
            const Eigen::VectorXd col = pooled.col(j);
            const double m = col.mean();
            mean.push_back(m);
            sd.push_back(std::sqrt((col.array() - m).square().sum() / (col.size() - 1.0)));
            pi.push_back(pi_value_from_samples(std::span<const double>(col.data(), col.size()), 0.0,
                                               SampleMethod::mixture)
                             .p_or_pi);
        }
        for (const auto& c : chains) acc.push_back(c.acceptance_rate);
        result["beta_hat"] = mean;
        result["se"] = sd;
        result["pi"] = pi;
        result["acceptance"] = acc;
        result["chains"] = cfg.chains;
        result["draws"] = cfg.draws;
        result["burn_in"] = cfg.burn_in;
        table = CsvTable{{}, {}};
        table->header.push_back("chain");
        for (const auto& n : s.data.coef_names) table->header.push_back(n == "(Intercept)" ? "beta0" : n);
        for (std::size_t c = 0; c < chains.size(); ++c)
            for (Eigen::Index r = 0; r < chains[c].draws.rows(); ++r) {
                std::vector<double> row{static_cast<double>(c)};
                for (Eigen::Index j = 0; j < p; ++j) row.push_back(chains[c].draws(r, j));
                table->add(std::move(row));
            }
    } else {
        throw UsageError("unknown posterior method '" + cfg.method + "'");
    }
    finish(result, table ? &*table : nullptr, cfg, out);
    return status;
}

int cmd_surface(const RunConfig& cfg, const std::vector<double>& anchor, double half_width, int resolution,
                std::ostream& out) {
    const Selected s = load_one(cfg);
    const Family family = family_of(cfg);
    const Link link = link_of(cfg);
    const FitResult fit = fit_irls(family, link, s.data);
    SurfaceGrid g;
    g.half_width_se = half_width;
    g.resolution = resolution;
    if (!anchor.empty()) {
        if (anchor.size() != 2) throw UsageError("--anchor takes two values");
        g.anchor = Eigen::Vector2d(anchor[0], anchor[1]);
    } else if (fit.boundary && !cfg.allow_boundary) {
        throw BoundaryError("boundary fit: pass --anchor to centre the surface");
    } else if (fit.boundary) {
        g.anchor = Eigen::Vector2d(fit.beta_hat[0], 0.0);
    }
    if (fit.boundary) g.absolute_half_widths = Eigen::Vector2d(half_width, half_width);
    const auto surf = likelihood_surface(family, link, s.data, fit, g);
    json result = header("surface", cfg);
    result["study"] = s.study;
    result["outcome"] = s.outcome;
    result["resolution"] = resolution;
    result["centre"] = vec(Eigen::VectorXd(surf.centre));
    result["boundary"] = surf.boundary;
    result["beta_hat"] = vec(fit.beta_hat);
    if (!surf.boundary) {
        const auto q = quadraticity_diagnostic(surf);
        result["quadraticity"] = {{"score", q.score}, {"pass", q.pass}};
    } else {
        result["quadraticity"] = nullptr;
    }
    CsvTable t{{"beta0", "beta1", "loglik", "loglik_quad"}, {}};
    for (const auto& n : surf.nodes) t.add({n.beta0, n.beta1, n.loglik, n.loglik_quad});
    finish(result, &t, cfg, out);
    return exit_ok;
}

ClientParams client_of(const RunConfig& cfg) {
    ClientParams c{cfg.epsilon, cfg.epsilon_loss, cfg.c, cfg.client_capital};
    c.validate();
    return c;
}

int cmd_decide(const RunConfig& cfg, const std::vector<double>& pis, std::ostream& out) {
    const ClientParams client = client_of(cfg);
    AnalystParams analyst;
    analyst.capital = cfg.analyst_capital;
    analyst.alpha = cfg.alpha;
    if (cfg.utility == "linear") {
        analyst.utility = UtilityKind::linear;
    } else if (cfg.utility == "log") {
        analyst.utility = UtilityKind::log;
    } else {
        throw UsageError("utility must be linear or log");
    }
    analyst.validate();
    const double crit = pi_critical(client);
    json result = header("decide", cfg);
    result["method"] = "pi_critical";
    result["client"] = {{"epsilon", client.epsilon},
                        {"epsilon_loss", client.epsilon_loss},
                        {"c", client.c},
                        {"capital", client.capital}};
    result["analyst"] = {{"capital", analyst.capital}, {"alpha", analyst.alpha}, {"utility", cfg.utility}};
    result["pi_critical_raw"] = pi_critical_raw(client);
    result["pi_critical"] = crit;
    const auto loss = recalibration_loss(analyst, crit);
    result["recalibration_loss"] = {{"fraction", loss.fraction}, {"factor", loss.factor}};
    json dec = json::array();
    for (double pi : pis) {
        const auto d = evaluate_decision(client, pi);
        dec.push_back({{"pi", pi},
                       {"action", d.action == Action::act ? "act" : "sleep"},
                       {"utility_act", d.utility_act},
                       {"utility_sleep", d.utility_sleep},
                       {"evpi_pure", evpi_pure(analyst, pi)},
                       {"evpi_recalibrated", evpi_recalibrated(analyst, pi, crit)}});
    }
    result["decisions"] = dec;

    CsvTable t{{"epsilon", "epsilon_loss", "c", "pi_critical"}, {}};
    for (double el : {0.1, 0.25, 0.5, 0.75, 0.9})
        for (double c : {0.0, 0.001, 0.01})
            for (int i = 0; i <= 60; ++i) {
                const double e = std::pow(10.0, -3.0 + 3.0 * i / 60.0);
                t.add({e, el, c, pi_critical(ClientParams{e, el, c, 1.0})});
            }
    finish(result, &t, cfg, out);
    return exit_ok;
}

int cmd_predict(const RunConfig& cfg, const std::vector<double>& pis, double level, std::ostream& out) {
    json result = header("predict-pi", cfg);
    result["method"] = "predictive_normal";
    json rows = json::array();
    for (double pi : pis) rows.push_back({{"pi", pi}, {"predictive_pi", predictive_pi(pi)}});
    result["results"] = rows;
    result["threshold"] = {{"level", level}, {"pi_init", predictive_pi_threshold(level)}};
    finish(result, nullptr, cfg, out);
    return exit_ok;
}

double rpd_median(double pi_init) {
    double lo = 0.0, hi = 400.0;
    for (int i = 0; i < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++i) {
        const double mid = 0.5 * (lo + hi);
        (rpd_cdf(mid, pi_init) < 0.5 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

int cmd_rpd(const RunConfig& cfg, double pi_init, double cap, double step, std::ostream& out) {
    const RpdCurve curve = rpd_curve(pi_init, cap, step);
    json result = header("rpd", cfg);
    result["method"] = "rpd";
    result["pi_init"] = pi_init;
    result["cap"] = cap;
    result["step"] = step;
    result["pi"] = pi_init;
    result["moments"] = {{"mean_log10", curve.moments.mean_log10},
                         {"sd_log10", curve.moments.sd_log10},
                         {"mean_raw", curve.moments.mean_raw},
                         {"sd_raw", curve.moments.sd_raw}};
    result["mass_beyond_cap"] = curve.mass_beyond_cap;
    result["trapezoid_mass"] = trapezoid(curve.x, curve.pdf);
    result["median_log10"] = rpd_median(pi_init);
    result["prob_rep_above_005"] = rpd_cdf(-std::log10(0.05), pi_init);
    CsvTable t{{"x", "pdf", "cdf"}, {}};
    for (std::size_t i = 0; i < curve.x.size(); ++i) t.add({curve.x[i], curve.pdf[i], curve.cdf[i]});
    finish(result, &t, cfg, out);
    return exit_ok;
}

int cmd_replicate(const RunConfig& cfg, std::ostream& out) {
    const Selected s = load_one(cfg);
    const Family family = family_of(cfg);
    const Link link = link_of(cfg);
    const FitResult fit = fit_irls(family, link, s.data);
    require_clean(fit);
    ReplicationConfig rc;
    rc.n_sim = cfg.n_sim;
    rc.seed = cfg.seed;
    rc.min_events_guard = cfg.min_events;
    rc.boundary_is_failure = cfg.boundary_is_failure;
    if (cfg.kernel == "exact") {
        rc.kernel.kind = KernelKind::exact;
    } else if (cfg.kernel == "gaussian") {
        rc.kernel.kind = KernelKind::gaussian;
    } else {
        throw UsageError("kernel must be exact or gaussian");
    }
    for (const auto& b : cfg.bayes) {
        if (b == "flat") {
            rc.bayes.push_back(BayesAnalysis::flat());
        } else if (b == "student-t") {
            rc.bayes.push_back(BayesAnalysis::student_t(2.5, 1.0, fit.p));
        } else {
            throw UsageError("unknown replicate analysis '" + b + "'");
        }
    }
    rc.grid_resolution = std::min(cfg.resolution, 101);
    const auto rep = run_replication(InitialPosterior{fit}, s.data, family, link, rc);
    const auto& sm = rep.summary;
    const double phi = fit.inferential_phi();
    const Eigen::Index k = rep.index;
    const double p_init = wald_pvalue(fit, phi, k).p_or_pi;

    json result = header("replicate", cfg);
    result["method"] = "replicate_ml";
    result["study"] = s.study;
    result["outcome"] = s.outcome;
    result["index"] = k;
    result["kernel"] = cfg.kernel;
    result["beta_hat"] = vec(fit.beta_hat);
    result["se"] = vec(fit.standard_errors(phi));
    result["p"] = p_init;
    result["summary"] = {{"n_sim", sm.n_sim},
                         {"n_failed", sm.n_failed},
                         {"fraction_failed", sm.fraction_failed},
                         {"ml_mean", sm.ml_mean},
                         {"ml_sd", sm.ml_sd},
                         {"ml_var", sm.ml_var},
                         {"ml_mc_se", sm.ml_mc_se},
                         {"quantile_levels", sm.quantile_levels},
                         {"neglog10_p_quantiles", sm.neglog10_p_quantiles},
                         {"fraction_p_below_005", sm.fraction_p_below_005}};
    json bs = json::array();
    for (const auto& b : sm.bayes)
        bs.push_back({{"name", b.name},
                      {"draw_mean", b.draw_mean},
                      {"draw_sd", b.draw_sd},
                      {"fraction_pi_below_005", b.fraction_pi_below_005},
                      {"neglog10_pi_quantiles", b.neglog10_pi_quantiles}});
    result["bayes"] = bs;
    std::map<std::string, int> reasons;
    for (const auto& r : rep.records)
        if (r.failed) ++reasons[r.failure_reason];
    result["failure_reasons"] = reasons;
    const RpdCurve overlay = rpd_curve(p_init, 30.0, 0.05);
    result["rpd_overlay"] = {{"pi_init", p_init}, {"x", overlay.x}, {"pdf", overlay.pdf}};

    CsvTable t{{"index", "beta_g", "ml_estimate", "ml_se", "ml_p", "neglog10_p", "failed"}, {}};
    for (const auto& b : rep.bayes_names) t.header.push_back(b + "_pi");
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& r : rep.records) {
        const bool ok = !r.failed;
        std::vector<double> row{static_cast<double>(r.index),
                                r.beta_g.size() ? r.beta_g[k] : nan,
                                ok ? r.ml_estimates[k] : nan,
                                ok ? r.ml_se[k] : nan,
                                ok ? r.ml_p[k] : nan,
                                ok ? -std::log10(r.ml_p[k]) : nan,
                                r.failed ? 1.0 : 0.0};
        for (const auto& b : r.bayes) row.push_back(b.ok ? b.pi : nan);
        t.add(std::move(row));
    }
    finish(result, &t, cfg, out);
    return exit_ok;
}

int cmd_priors(const RunConfig& cfg, double lo, double hi, std::ostream& out) {
    if (!(lo < hi)) throw UsageError("--lo must be below --hi");
    const auto priors = reference_priors();
    json result = header("priors", cfg);
    result["method"] = "local_uniformity";
    result["interval"] = {lo, hi};
    json rows = json::array();
    for (const auto& [name, spec] : priors) {
        const double dev = local_uniformity_check(spec, lo, hi);
        const auto mass = prior_log_mass(spec);
        rows.push_back({{"name", name},
                        {"deviation", dev},
                        {"pass", dev < 0.0025},
                        {"log_density_at_0", prior_logpdf(spec, 0.0)},
                        {"log_mass", mass ? json(*mass) : json(nullptr)}});
    }
    result["priors"] = rows;
    CsvTable t{{"beta"}, {}};
    for (const auto& pr : priors) t.header.push_back(pr.first);
    const int n = std::max(cfg.resolution, 2);
    for (int i = 0; i < n; ++i) {
        const double b = lo + (hi - lo) * i / (n - 1.0);
        std::vector<double> row{b};
        for (const auto& pr : priors) row.push_back(std::exp(prior_logpdf(pr.second, b)));
        t.add(std::move(row));
    }
    finish(result, &t, cfg, out);
    return exit_ok;
}

int cmd_tails(const RunConfig& cfg, long dof, double zmax, std::ostream& out) {
    json result = header("tails", cfg);
    result["method"] = "tail_comparison";
    result["dof"] = dof;
    CsvTable t{{"z", "p_normal", "p_t_jeffreys", "p_t_uniform"}, {}};
    double gap = 0.0;
    const int n = std::max(cfg.resolution, 2);
    for (int i = 0; i < n; ++i) {
        const double z = zmax * i / (n - 1.0);
        const auto c = tail_comparison(z, dof);
        gap = std::max(gap, c.max_pairwise_gap());
        t.add({z, c.p_normal, c.p_t_jeffreys, c.p_t_uniform});
    }
    result["max_pairwise_gap"] = gap;
    finish(result, &t, cfg, out);
    return exit_ok;
}

std::string find_config(const std::vector<std::string>& args) {
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw UsageError("--config needs a path");
            return args[i + 1];
        }
        if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
    }
    return {};
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const RunConfig& base) {
    try {
        RunConfig cfg = base;
        if (const auto path = find_config(args); !path.empty()) cfg = load_run_config(path);

        CLI::App app{"p-value and pi-value analysis of generalized linear models", "pivalue"};
        app.require_subcommand(1);
        app.fallthrough();
        std::string config_path;
        app.add_option("--config", config_path, "INFO key-tree run configuration");
        app.add_option("--seed", cfg.seed, "RNG seed");
        app.add_option("--threads", cfg.threads, "OpenMP threads (0 = default)");
        app.add_option("--out", cfg.out, "JSON result path (a .csv path receives the plot table)");
        app.add_option("--csv", cfg.csv, "plot CSV path");
        app.add_flag("--allow-boundary", cfg.allow_boundary, "report boundary fits with exit 0");

        auto data_opts = [&](CLI::App* sub) {
            sub->add_option("--data", cfg.data_path, "trial CSV");
            sub->add_option("--study", cfg.study);
            sub->add_option("--outcome", cfg.outcome);
            sub->add_option("--family", cfg.family);
            sub->add_option("--link", cfg.link);
            sub->add_option("--exposure-scale", cfg.exposure_scale);
        };

        bool wald_t = false;
        auto* fit = app.add_subcommand("fit", "ML fit, Wald p-values, relative risks");
        data_opts(fit);
        fit->add_flag("--wald-t", wald_t, "Student-t reference with n - p dof");

        auto* post = app.add_subcommand("posterior", "Laplace, grid or Metropolis posterior and pi-values");
        data_opts(post);
        post->add_option("--method", cfg.method)->check(CLI::IsMember({"laplace", "grid", "metropolis"}));
        post->add_option("--prior", cfg.prior);
        post->add_option("--resolution", cfg.resolution);
        post->add_option("--half-width", cfg.half_width_se, "grid half-width in SE units");
        post->add_option("--chains", cfg.chains);
        post->add_option("--draws", cfg.draws);
        post->add_option("--burn-in", cfg.burn_in);

        std::vector<double> anchor;
        double surf_half = 4.0;
        int surf_res = 81;
        auto* surf = app.add_subcommand("surface", "log-likelihood grid and quadraticity score");
        data_opts(surf);
        surf->add_option("--anchor", anchor, "grid centre b0 b1")->expected(2);
        surf->add_option("--half-width", surf_half, "SE units, or absolute for boundary fits");
        surf->add_option("--resolution", surf_res);

        std::vector<double> pis;
        auto* dec = app.add_subcommand("decide", "critical pi, EVPI and the act/sleep decision");
        dec->add_option("--pi", pis, "pi-values to evaluate");
        dec->add_option("--epsilon", cfg.epsilon);
        dec->add_option("--epsilon-loss", cfg.epsilon_loss);
        dec->add_option("--c", cfg.c);
        dec->add_option("--client-capital", cfg.client_capital);
        dec->add_option("--analyst-capital", cfg.analyst_capital);
        dec->add_option("--alpha", cfg.alpha);
        dec->add_option("--utility", cfg.utility);
        dec->add_option("--grid-out", cfg.csv, "critical pi grid CSV");

        double level = 0.05;
        auto* pred = app.add_subcommand("predict-pi", "predictive pi of a replicate study");
        pred->add_option("--pi", pis)->required();
        pred->add_option("--level", level);

        double pi_init = 0.05, cap = 30.0, step = 1e-3;
        auto* rpd = app.add_subcommand("rpd", "replication p-value distribution curve and moments");
        rpd->add_option("--pi-init", pi_init)->required();
        rpd->add_option("--cap", cap);
        rpd->add_option("--step", step);

        auto* rep = app.add_subcommand("replicate", "simulated replicate studies");
        data_opts(rep);
        rep->add_option("--n-sim", cfg.n_sim);
        rep->add_option("--kernel", cfg.kernel);
        rep->add_option("--min-events", cfg.min_events);
        rep->add_option("--bayes", cfg.bayes, "flat, student-t");
        rep->add_option("--resolution", cfg.resolution);

        double lo = -50.0, hi = 50.0;
        auto* pri = app.add_subcommand("priors", "reference prior densities and local uniformity");
        pri->add_option("--lo", lo);
        pri->add_option("--hi", hi);
        pri->add_option("--resolution", cfg.resolution);

        long dof = 30;
        double zmax = 4.0;
        auto* tails = app.add_subcommand("tails", "normal vs Student-t tail areas");
        tails->add_option("--dof", dof);
        tails->add_option("--z-max", zmax);
        tails->add_option("--resolution", cfg.resolution);

        try {
            std::vector<std::string> reversed(args.rbegin(), args.rend());
            app.parse(reversed);
        } catch (const CLI::CallForHelp& e) {
            out << app.help();
            return exit_ok;
        } catch (const CLI::ParseError& e) {
            err << "pivalue: " << e.what() << "\n";
            return exit_usage;
        }
        if (cfg.threads > 0) set_threads(cfg.threads);

        if (fit->parsed()) return cmd_fit(cfg, wald_t, out);
        if (post->parsed()) return cmd_posterior(cfg, out);
        if (surf->parsed()) return cmd_surface(cfg, anchor, surf_half, surf_res, out);
        if (dec->parsed()) return cmd_decide(cfg, pis, out);
        if (pred->parsed()) return cmd_predict(cfg, pis, level, out);
        if (rpd->parsed()) return cmd_rpd(cfg, pi_init, cap, step, out);
        if (rep->parsed()) return cmd_replicate(cfg, out);
        if (pri->parsed()) return cmd_priors(cfg, lo, hi, out);
        if (tails->parsed()) return cmd_tails(cfg, dof, zmax, out);
        return exit_usage;
    } catch (const UsageError& e) {
        err << "pivalue: " << e.what() << "\n";
        return exit_usage;
    } catch (const IoError& e) {
        err << "pivalue: " << e.what() << "\n";
        return exit_io;
    } catch (const BoundaryError& e) {
        err << "pivalue: " << e.what() << "\n";
        return exit_boundary;
    } catch (const ConvergenceError& e) {
        err << "pivalue: " << e.what() << "\n";
        return exit_boundary;
    } catch (const std::exception& e) {
        err << "pivalue: " << e.what() << "\n";
        return exit_domain;
    }
}

}  // namespace pival
