// srp: batch driver for the spatial random permutation toolkit.
//
// Every run prints a one-line JSON manifest first (command, version, seed,
// config digest, parameters), then line-delimited JSON records for machines,
// then '#'-prefixed lines and an aligned table for humans.  Timestamps go to
// stderr so that rerunning with the same config and seed produces
// byte-identical stdout.

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <iostream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "srp/errors.hpp"
#include "srp/fourier.hpp"
#include "srp/kernel.hpp"
#include "srp/numerics.hpp"
#include "srp/rng.hpp"
#include "srp/spatial.hpp"
#include "srp/spectrum.hpp"
#include "srp/stats.hpp"
#include "srp/weights.hpp"

namespace {

using nlohmann::ordered_json;

constexpr const char* version_string = "srp 0.1.0";

std::string fnv1a_hex(const std::string& text) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
    return std::string(buf);
}

std::string iso_utc_now() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return std::string(buf);
}

std::string fmt_g(double v, int prec = 6) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    return std::string(buf);
}

void emit(const ordered_json& j) { std::cout << j.dump() << "\n"; }

void print_table(const std::vector<std::vector<std::string>>& rows) {
    std::vector<size_t> width;
    for (const auto& row : rows)
        for (size_t c = 0; c < row.size(); ++c) {
            if (width.size() <= c) width.resize(c + 1, 0);
            width[c] = std::max(width[c], row[c].size());
        }
    for (const auto& row : rows) {
        std::string line;
        for (size_t c = 0; c < row.size(); ++c) {
            line.append(width[c] - row[c].size(), ' ');
            line += row[c];
            if (c + 1 < row.size()) line += "  ";
        }
        std::cout << line << "\n";
    }
}

// Effective parameter set of the parsed subcommand, values as strings
// (command-line result if given, captured default otherwise).
ordered_json collect_params(const CLI::App& cmd) {
    ordered_json params;
    for (const CLI::Option* opt : cmd.get_options()) {
        const std::string& name = opt->get_single_name();
        if (name.empty() || name == "help") continue;
        if (opt->count() > 0) {
            const auto& results = opt->results();
            if (results.size() == 1)
                params[name] = results.front();
            else
                params[name] = results;
        } else {
            params[name] = opt->get_default_str();
        }
    }
    return params;
}

struct RunManifest {
    std::string command;
    ordered_json params;
    uint64_t seed = 0;
    std::string config_digest;
    std::string started_at;

    void emit_start() const {
        ordered_json j;
        j["record"] = "manifest";
        j["command"] = command;
        j["version"] = version_string;
        j["seed"] = seed;
        j["config_digest"] = config_digest;
        j["params"] = params;
        emit(j);
        std::cerr << "[srp] " << command << " started " << started_at << "\n";
    }
};

// ---------------------------------------------------------------------------
// Shared model options

struct ModelOpts {
    int dim = 3;
    double beta = 0.0;
    std::string kernel_name = "gaussian";
    double xi_gamma = 1.5;
    double growth_a = 0.5;
    double growth_eta = 0.5;
    std::string weights_name = "constant";
    double alpha = 0.0;
    double gamma = 1.0;
    std::vector<std::string> overrides;
};

void add_weight_options(CLI::App* cmd, ModelOpts& m) {
    cmd->add_option("--weights", m.weights_name, "cycle-weight regime")
        ->check(CLI::IsMember({"constant", "asymptotic", "logarithmic"}))
        ->capture_default_str();
    cmd->add_option("--alpha", m.alpha, "constant cycle weight alpha")->capture_default_str();
    cmd->add_option("--gamma", m.gamma, "logarithmic weight exponent (alpha_j = gamma log j)")
        ->capture_default_str();
    cmd->add_option("--override", m.overrides,
                    "asymptotic-regime override j:alpha_j (repeatable)");
}

void add_kernel_options(CLI::App* cmd, ModelOpts& m, bool beta_required) {
    auto* beta =
        cmd->add_option("--beta", m.beta, "gaussian jump variance parameter")->capture_default_str();
    if (beta_required) beta->required();
    cmd->add_option("--dim", m.dim, "spatial dimension")
        ->check(CLI::Range(1, 3))
        ->capture_default_str();
    cmd->add_option("--kernel", m.kernel_name, "jump kernel family")
        ->check(CLI::IsMember({"gaussian", "power-law"}))
        ->capture_default_str();
    cmd->add_option("--xi-gamma", m.xi_gamma, "power-law jump density exponent, in (1,2)")
        ->capture_default_str();
    cmd->add_option("--growth-a", m.growth_a, "power-law dispersion growth constant a")
        ->capture_default_str();
    cmd->add_option("--growth-eta", m.growth_eta, "power-law dispersion growth exponent eta")
        ->capture_default_str();
}

srp::JumpKernel make_kernel(const ModelOpts& m) {
    if (m.kernel_name == "gaussian") return srp::JumpKernel::gaussian(m.dim, m.beta);
    if (m.dim != 1) throw srp::ConfigError("the power-law kernel requires --dim 1");
    return srp::JumpKernel::power_law_1d(m.xi_gamma, m.growth_a, m.growth_eta);
}

srp::CycleWeightModel make_weights(const ModelOpts& m) {
    if (m.weights_name == "logarithmic") {
        if (!m.overrides.empty())
            throw srp::ConfigError("--override requires --weights asymptotic");
        return srp::CycleWeightModel::logarithmic(m.gamma);
    }
    std::vector<std::pair<int64_t, double>> overrides;
    for (const std::string& s : m.overrides) {
        const size_t pos = s.find(':');
        if (pos == std::string::npos)
            throw srp::ConfigError("--override expects j:alpha_j, got '" + s + "'");
        try {
            overrides.emplace_back(std::stoll(s.substr(0, pos)), std::stod(s.substr(pos + 1)));
        } catch (const std::exception&) {
            throw srp::ConfigError("--override expects j:alpha_j, got '" + s + "'");
        }
    }
    if (m.weights_name == "asymptotic")
        return srp::CycleWeightModel::asymptotic(m.alpha, std::move(overrides));
    if (!overrides.empty()) throw srp::ConfigError("--override requires --weights asymptotic");
    return srp::CycleWeightModel::constant(m.alpha);
}

srp::BoxGeometry resolve_box(const srp::JumpKernel& kernel, int64_t n_points, double density,
                             double box_length, double eps_cut) {
    double L = box_length;
    if (L <= 0.0) {
        if (density <= 0.0)
            throw srp::ConfigError("provide --density > 0 or --box-length > 0");
        L = std::pow(static_cast<double>(n_points) / density, 1.0 / kernel.d);
    }
    return srp::BoxGeometry::make(L, kernel.d, srp::default_mode_cutoff(kernel, eps_cut));
}

int64_t default_nu_k(int64_t n_points, int64_t requested) {
    if (requested > 0) return requested;
    return static_cast<int64_t>(std::ceil(std::pow(static_cast<double>(n_points), 2.0 / 3.0)));
}

double plateau_std_error(const std::vector<srp::CycleSpectrum>& spectra, int64_t k) {
    std::vector<double> vals;
    vals.reserve(spectra.size());
    for (const auto& s : spectra) vals.push_back(s.fraction_longer_than(k));
    return spectra.size() >= 2 ? srp::standard_error(vals) : 0.0;
}

void emit_nu_summary(const std::vector<srp::CycleSpectrum>& spectra, int64_t nu_k_opt,
                     int64_t n_points) {
    if (spectra.empty()) {
        std::cout << "# no samples collected\n";
        return;
    }
    const srp::NuEstimate nu = srp::estimate_nu(spectra, default_nu_k(n_points, nu_k_opt));
    double mean_largest = 0.0;
    for (const auto& s : spectra)
        mean_largest += static_cast<double>(s.largest()) / static_cast<double>(s.total);
    mean_largest /= static_cast<double>(spectra.size());
    ordered_json j;
    j["record"] = "nu_estimate";
    j["samples"] = spectra.size();
    j["k"] = nu.k;
    j["nu_k"] = nu.nu_k;
    j["plateau_k"] = nu.plateau_k;
    j["nu_plateau"] = nu.nu_plateau;
    j["std_error"] = plateau_std_error(spectra, nu.plateau_k);
    j["mean_largest_fraction"] = mean_largest;
    ordered_json sweep = ordered_json::array();
    for (const auto& [k, v] : nu.sweep) sweep.push_back({k, v});
    j["sweep"] = sweep;
    emit(j);
    std::cout << "# long-cycle fraction: nu_" << nu.plateau_k << " = " << fmt_g(nu.nu_plateau)
              << " (plateau), nu_" << nu.k << " = " << fmt_g(nu.nu_k) << "\n";
    std::vector<std::vector<std::string>> rows{{"K", "nu_K"}};
    for (const auto& [k, v] : nu.sweep) rows.push_back({std::to_string(k), fmt_g(v)});
    print_table(rows);
}

// ---------------------------------------------------------------------------
// rho-c

struct RhoCOpts {
    ModelOpts model;
    std::vector<double> L_grid{8.0, 16.0, 32.0};
    double tol = 1e-10;
};

void cmd_rho_c(const RhoCOpts& o) {
    const srp::JumpKernel kernel = make_kernel(o.model);
    const srp::CycleWeightModel weights = make_weights(o.model);
    const srp::CriticalDensityReport report = srp::critical_density_report(kernel, weights, o.tol);

    ordered_json head;
    head["record"] = "rho_c";
    head["value"] = report.value;
    head["tail_bound"] = report.tail_bound;
    head["terms"] = report.terms;
    emit(head);

    std::vector<std::vector<std::string>> rows{{"L", "rho_c_L", "rel_gap", "j_tail", "mode_tail"}};
    for (double L : o.L_grid) {
        const srp::BoxGeometry box =
            srp::BoxGeometry::make(L, kernel.d, srp::default_mode_cutoff(kernel));
        const srp::FiniteVolumeDensity fv =
            srp::finite_volume_critical_density(kernel, weights, box);
        const double gap = std::abs(fv.value - report.value) / report.value;
        ordered_json r;
        r["record"] = "rho_c_finite";
        r["L"] = L;
        r["value"] = fv.value;
        r["rel_gap"] = gap;
        r["j_tail_bound"] = fv.j_tail_bound;
        r["mode_tail_bound"] = fv.mode_tail_bound;
        r["j_terms"] = fv.j_terms;
        emit(r);
        rows.push_back({fmt_g(L), fmt_g(fv.value, 10), fmt_g(gap, 3), fmt_g(fv.j_tail_bound, 3),
                        fmt_g(fv.mode_tail_bound, 3)});
    }
    std::cout << "# critical density " << fmt_g(report.value, 10) << " (series tail <= "
              << fmt_g(report.tail_bound, 3) << ", " << report.terms << " terms)\n";
    print_table(rows);
}

// ---------------------------------------------------------------------------
// hn

struct HnOpts {
    ModelOpts model;
    int64_t n_max = 20;
};

void cmd_hn(const HnOpts& o) {
    if (o.n_max < 1) throw srp::ConfigError("hn: --n-max must be >= 1");
    const srp::CycleWeightModel weights = make_weights(o.model);
    const srp::WeightTable table = srp::compute_h(weights, o.n_max);

    const int64_t checked = std::min<int64_t>(o.n_max, 8);
    double max_rel = 0.0;
    for (int64_t n = 1; n <= checked; ++n) {
        const double exact = srp::brute_force_h(weights, n);
        max_rel = std::max(max_rel, std::abs(table.h(n) - exact) / exact);
    }

    std::vector<std::vector<std::string>> rows{{"n", "log_h_n", "h_n"}};
    for (int64_t n = 0; n <= o.n_max; ++n) {
        const double lh = table.log_h_at(n);
        ordered_json r;
        r["record"] = "hn";
        r["n"] = n;
        r["log_h"] = lh;
        emit(r);
        rows.push_back({std::to_string(n), fmt_g(lh, 12), lh < 700.0 ? fmt_g(std::exp(lh), 12) : "-"});
    }
    ordered_json oracle;
    oracle["record"] = "hn_oracle";
    oracle["n_checked"] = checked;
    oracle["max_rel_error"] = max_rel;
    emit(oracle);
    std::cout << "# partition-sum oracle: max relative error " << fmt_g(max_rel, 3)
              << " over n <= " << checked << "\n";
    print_table(rows);
}

// ---------------------------------------------------------------------------
// fourier sampling (shared by sample-fourier, verify-pd, giant-cycle, scan-density)

struct FourierRun {
    std::vector<srp::OccupationState> states;
    std::vector<srp::CycleSpectrum> spectra;
    double identity_rel_error = 0.0;
    double acceptance_rate = 0.0;
    bool exact = true;
};

FourierRun run_fourier_sampler(const srp::ModeSet& modes, const srp::CycleWeightModel& weights,
                               const srp::WeightTable& table, int64_t n_points, bool exact,
                               int64_t samples, int64_t burn_in_steps, int64_t thin_steps,
                               double ops_budget, srp::Rng& rng) {
    if (samples < 1) throw srp::ConfigError("--samples must be >= 1");
    FourierRun run;
    run.exact = exact;
    run.states.reserve(static_cast<size_t>(samples));
    if (exact) {
        const srp::ModePartitionTables tables =
            srp::build_tables(modes, table, n_points, ops_budget);
        run.identity_rel_error = tables.identity_rel_error;
        for (int64_t i = 0; i < samples; ++i)
            run.states.push_back(srp::sample_occupations_exact(tables, rng));
    } else {
        const int64_t burn = burn_in_steps >= 0 ? burn_in_steps : 200 * n_points;
        const int64_t thin = thin_steps >= 0 ? thin_steps : 20 * n_points;
        srp::OccupationChain chain(modes, table, n_points, srp::Rng(rng.next_u64()));
        chain.step(burn);
        for (int64_t i = 0; i < samples; ++i) {
            chain.step(thin);
            run.states.push_back(chain.snapshot());
        }
        run.acceptance_rate = chain.acceptance_rate();
    }
    run.spectra.reserve(run.states.size());
    for (const auto& state : run.states)
        run.spectra.push_back(srp::CycleSpectrum::from_counts(
            srp::sample_permutation_given_occupations(state, weights, table, rng)));
    return run;
}

struct SampleFourierOpts {
    ModelOpts model;
    int64_t n_points = 1024;
    double density = 0.0;
    double box_length = 0.0;
    std::string sampler = "exact";
    int64_t samples = 100;
    int64_t burn_in_steps = -1;
    int64_t thin_steps = -1;
    double ops_budget = 1e9;
    double eps_cut = 40.0;
    int64_t nu_k = 0;
    bool emit_spectra = false;
};

void cmd_sample_fourier(const SampleFourierOpts& o, uint64_t seed) {
    const srp::JumpKernel kernel = make_kernel(o.model);
    const srp::CycleWeightModel weights = make_weights(o.model);
    const srp::BoxGeometry box =
        resolve_box(kernel, o.n_points, o.density, o.box_length, o.eps_cut);
    const srp::ModeSet modes = srp::ModeSet::build(box, kernel, o.eps_cut);
    const srp::WeightTable table = srp::compute_h(weights, o.n_points);

    ordered_json setup;
    setup["record"] = "mode_set";
    setup["L"] = box.L;
    setup["volume"] = box.volume();
    setup["density"] = static_cast<double>(o.n_points) / box.volume();
    setup["modes"] = modes.size();
    setup["dropped"] = modes.dropped_count;
    setup["dropped_mass_bound"] = modes.dropped_mass_bound;
    emit(setup);

    srp::Rng rng(seed);
    const FourierRun run =
        run_fourier_sampler(modes, weights, table, o.n_points, o.sampler == "exact", o.samples,
                            o.burn_in_steps, o.thin_steps, o.ops_budget, rng);

    ordered_json sampler_rec;
    sampler_rec["record"] = "sampler";
    sampler_rec["kind"] = o.sampler;
    if (run.exact)
        sampler_rec["identity_rel_error"] = run.identity_rel_error;
    else
        sampler_rec["acceptance_rate"] = run.acceptance_rate;
    sampler_rec["equilibrated"] = run.states.empty() ? true : run.states.front().equilibrated;
    emit(sampler_rec);

    double mean_zero = 0.0;
    for (size_t i = 0; i < run.states.size(); ++i) {
        const auto& state = run.states[i];
        const auto& spectrum = run.spectra[i];
        const double zf =
            static_cast<double>(state.zero_mode_count()) / static_cast<double>(state.total);
        mean_zero += zf;
        ordered_json r;
        r["record"] = "sample";
        r["index"] = i;
        r["zero_mode_fraction"] = zf;
        r["occupied_modes"] = state.occupied.size();
        r["largest_cycle"] = spectrum.largest();
        if (o.emit_spectra) r["spectrum"] = spectrum.lengths;
        emit(r);
    }
    mean_zero /= static_cast<double>(run.states.size());
    std::cout << "# mean zero-mode fraction " << fmt_g(mean_zero) << " over " << o.samples
              << " samples\n";
    emit_nu_summary(run.spectra, o.nu_k, o.n_points);
}

// ---------------------------------------------------------------------------
// sample-spatial

struct SampleSpatialOpts {
    ModelOpts model;
    int64_t n_points = 64;
    double density = 0.0;
    double box_length = 0.0;
    int64_t sweeps = 2000;
    int64_t burn_in = 500;
    int64_t thinning = 5;
    double p_pos = 0.5;
    double proposal_scale = -1.0;
    int64_t audit_interval = 0;
    int64_t nu_k = 0;
    bool emit_spectra = false;
};

void cmd_sample_spatial(const SampleSpatialOpts& o, uint64_t seed) {
    srp::ChainParams params;
    params.kernel = make_kernel(o.model);
    params.weights = make_weights(o.model);
    params.box = resolve_box(params.kernel, o.n_points, o.density, o.box_length, 40.0);
    params.n_points = o.n_points;
    params.p_pos = o.p_pos;
    params.proposal_scale = o.proposal_scale;
    params.sweeps = o.sweeps;
    params.burn_in = o.burn_in;
    params.thinning = o.thinning;
    params.audit_interval = o.audit_interval;
    params.seed = seed;

    const srp::ChainResult result = srp::run_chain(params);
    const srp::ChainDiagnostics& diag = result.diagnostics;

    ordered_json d;
    d["record"] = "diagnostics";
    d["L"] = params.box.L;
    d["sweeps"] = o.sweeps;
    d["position_acceptance"] = diag.position_acceptance;
    d["swap_acceptance"] = diag.swap_acceptance;
    d["geweke_z"] = diag.geweke_z;
    d["max_energy_audit_error"] = diag.max_energy_audit_error;
    d["registry_audit_failures"] = diag.registry_audit_failures;
    d["audits"] = diag.audits;
    d["final_energy"] = diag.energy_trace.empty() ? 0.0 : diag.energy_trace.back();
    emit(d);

    for (size_t i = 0; i < result.spectra.size(); ++i) {
        const auto& spectrum = result.spectra[i];
        ordered_json r;
        r["record"] = "sample";
        r["index"] = i;
        r["largest_cycle"] = spectrum.largest();
        r["cycles"] = spectrum.lengths.size();
        if (o.emit_spectra) r["spectrum"] = spectrum.lengths;
        emit(r);
    }
    std::cout << "# acceptance: position " << fmt_g(diag.position_acceptance) << ", swap "
              << fmt_g(diag.swap_acceptance) << "; geweke z " << fmt_g(diag.geweke_z)
              << "; audits " << diag.audits << " (max energy error "
              << fmt_g(diag.max_energy_audit_error, 3) << ")\n";
    emit_nu_summary(result.spectra, o.nu_k, o.n_points);
}

// ---------------------------------------------------------------------------
// verify-pd

struct VerifyPdOpts {
    ModelOpts model;
    std::string sampler = "nonspatial";
    int64_t n_points = 2048;
    double density = 0.0;
    double box_length = 0.0;
    int64_t samples = 400;
    int64_t coordinates = 3;
    double nu_hat = 0.0;
    double theta = 0.0;
    int64_t burn_in_steps = -1;
    int64_t thin_steps = -1;
    double ops_budget = 1e9;
    int64_t nu_k = 0;
};

std::vector<srp::CycleSpectrum> gather_spectra(const ModelOpts& model, const std::string& sampler,
                                               int64_t n_points, double density, double box_length,
                                               int64_t samples, int64_t burn_in_steps,
                                               int64_t thin_steps, double ops_budget,
                                               srp::Rng& rng) {
    if (samples < 1) throw srp::ConfigError("--samples must be >= 1");
    const srp::CycleWeightModel weights = make_weights(model);
    const srp::WeightTable table = srp::compute_h(weights, n_points);
    if (sampler == "nonspatial") {
        std::vector<srp::CycleSpectrum> spectra;
        spectra.reserve(static_cast<size_t>(samples));
        for (int64_t i = 0; i < samples; ++i)
            spectra.push_back(srp::CycleSpectrum::from_lengths(
                srp::sample_cycle_lengths(weights, n_points, table, rng)));
        return spectra;
    }
    if (model.beta <= 0.0)
        throw srp::ConfigError("--beta is required for sampler '" + sampler + "'");
    const srp::JumpKernel kernel = make_kernel(model);
    const srp::BoxGeometry box = resolve_box(kernel, n_points, density, box_length, 40.0);
    const srp::ModeSet modes = srp::ModeSet::build(box, kernel);
    return run_fourier_sampler(modes, weights, table, n_points, sampler == "fourier-exact",
                               samples, burn_in_steps, thin_steps, ops_budget, rng)
        .spectra;
}

void cmd_verify_pd(const VerifyPdOpts& o, uint64_t seed) {
    srp::Rng rng(seed);
    const std::vector<srp::CycleSpectrum> spectra =
        gather_spectra(o.model, o.sampler, o.n_points, o.density, o.box_length, o.samples,
                       o.burn_in_steps, o.thin_steps, o.ops_budget, rng);

    double nu = o.nu_hat;
    if (nu <= 0.0)
        nu = o.sampler == "nonspatial"
                 ? 1.0
                 : srp::estimate_nu(spectra, default_nu_k(o.n_points, o.nu_k)).nu_plateau;
    const double theta = o.theta > 0.0 ? o.theta : make_weights(o.model).theta();

    const srp::PdFitReport report = srp::pd_fit_test(spectra, nu, theta, o.coordinates);

    std::vector<std::vector<std::string>> rows{{"coordinate", "ks_distance", "p_value"}};
    double min_p = 1.0;
    for (size_t i = 0; i < report.coordinates.size(); ++i) {
        const auto& c = report.coordinates[i];
        min_p = std::min(min_p, c.p_value);
        ordered_json r;
        r["record"] = "pd_coordinate";
        r["index"] = i + 1;
        r["ks_distance"] = c.ks_distance;
        r["p_value"] = c.p_value;
        emit(r);
        rows.push_back({std::to_string(i + 1), fmt_g(c.ks_distance), fmt_g(c.p_value)});
    }
    ordered_json s;
    s["record"] = "pd_fit";
    s["samples"] = o.samples;
    s["nu_hat"] = nu;
    s["theta"] = theta;
    s["sum_squares_empirical"] = report.sum_squares_empirical;
    s["sum_squares_empirical_se"] = report.sum_squares_empirical_se;
    s["sum_squares_reference"] = report.sum_squares_reference;
    s["sum_squares_reference_se"] = report.sum_squares_reference_se;
    s["sum_squares_oracle"] = 1.0 / (1.0 + theta);
    s["min_coordinate_p"] = min_p;
    emit(s);
    std::cout << "# sum of squared fractions: empirical " << fmt_g(report.sum_squares_empirical)
              << " +- " << fmt_g(report.sum_squares_empirical_se, 3) << ", stick-breaking oracle "
              << fmt_g(1.0 / (1.0 + theta)) << "\n";
    print_table(rows);
}

// ---------------------------------------------------------------------------
// giant-cycle

struct GiantCycleOpts {
    ModelOpts model;
    std::string sampler = "nonspatial";
    int64_t n_points = 2048;
    double density = 0.0;
    double box_length = 0.0;
    int64_t samples = 400;
    double threshold = 0.9;
    double nu_hat = 0.0;
    int64_t burn_in_steps = -1;
    int64_t thin_steps = -1;
    double ops_budget = 1e9;
    int64_t nu_k = 0;
};

void cmd_giant_cycle(const GiantCycleOpts& o, uint64_t seed) {
    srp::Rng rng(seed);
    const std::vector<srp::CycleSpectrum> spectra =
        gather_spectra(o.model, o.sampler, o.n_points, o.density, o.box_length, o.samples,
                       o.burn_in_steps, o.thin_steps, o.ops_budget, rng);
    double nu = o.nu_hat;
    if (nu <= 0.0)
        nu = o.sampler == "nonspatial"
                 ? 1.0
                 : srp::estimate_nu(spectra, default_nu_k(o.n_points, o.nu_k)).nu_plateau;

    const srp::GiantCycleReport report = srp::giant_cycle_test(spectra, nu, o.threshold);
    auto quantile = [&](double q) {
        const size_t i = static_cast<size_t>(q * static_cast<double>(report.ratios.size() - 1));
        return report.ratios[i];
    };
    ordered_json r;
    r["record"] = "giant_cycle";
    r["samples"] = o.samples;
    r["nu_hat"] = nu;
    r["threshold"] = report.threshold;
    r["mean_ratio"] = report.mean_ratio;
    r["p_above"] = report.p_above;
    r["ratio_q10"] = quantile(0.10);
    r["ratio_q50"] = quantile(0.50);
    r["ratio_q90"] = quantile(0.90);
    emit(r);
    std::cout << "# largest-cycle ratio: mean " << fmt_g(report.mean_ratio) << ", P(ratio > "
              << fmt_g(report.threshold) << ") = " << fmt_g(report.p_above) << "\n";
    print_table({{"q10", "q50", "q90", "mean", "p_above"},
                 {fmt_g(quantile(0.10)), fmt_g(quantile(0.50)), fmt_g(quantile(0.90)),
                  fmt_g(report.mean_ratio), fmt_g(report.p_above)}});
}

// ---------------------------------------------------------------------------
// scan-density

struct ScanDensityOpts {
    ModelOpts model;
    std::vector<double> rho_grid;
    std::string sampler = "fourier-exact";
    int64_t n_points = 512;
    int64_t samples = 200;
    int64_t burn_in_steps = -1;
    int64_t thin_steps = -1;
    int64_t sweeps = 2000;
    int64_t burn_in = 500;
    int64_t thinning = 5;
    double p_pos = 0.5;
    double proposal_scale = -1.0;
    double ops_budget = 1e9;
    double theta = 0.0;
    int64_t coordinates = 3;
    double threshold = 0.9;
    int64_t nu_k = 0;
};

void cmd_scan_density(const ScanDensityOpts& o, uint64_t seed) {
    const srp::JumpKernel kernel = make_kernel(o.model);
    const srp::CycleWeightModel weights = make_weights(o.model);
    const double rho_c = srp::critical_density(kernel, weights);

    ordered_json setup;
    setup["record"] = "scan_setup";
    setup["rho_c"] = rho_c;
    setup["sampler"] = o.sampler;
    setup["n_points"] = o.n_points;
    setup["samples"] = o.samples;
    emit(setup);

    const srp::Rng root(seed);
    std::vector<std::vector<std::string>> rows{
        {"rho", "rho/rho_c", "nu_hat", "stderr", "theory", "K*"}};
    for (size_t idx = 0; idx < o.rho_grid.size(); ++idx) {
        const double rho = o.rho_grid[idx];
        if (rho <= 0.0) throw srp::ConfigError("scan-density: densities must be positive");
        srp::Rng rng = root.derive(idx);

        std::vector<srp::CycleSpectrum> spectra;
        if (o.sampler == "spatial") {
            srp::ChainParams params;
            params.kernel = kernel;
            params.weights = weights;
            params.box = resolve_box(kernel, o.n_points, rho, 0.0, 40.0);
            params.n_points = o.n_points;
            params.p_pos = o.p_pos;
            params.proposal_scale = o.proposal_scale;
            params.sweeps = o.sweeps;
            params.burn_in = o.burn_in;
            params.thinning = o.thinning;
            params.seed = rng.next_u64();
            spectra = srp::run_chain(params).spectra;
        } else {
            const srp::WeightTable table = srp::compute_h(weights, o.n_points);
            const srp::BoxGeometry box = resolve_box(kernel, o.n_points, rho, 0.0, 40.0);
            const srp::ModeSet modes = srp::ModeSet::build(box, kernel);
            const bool exact = o.sampler == "fourier-exact";
            try {
                spectra = run_fourier_sampler(modes, weights, table, o.n_points, exact, o.samples,
                                              o.burn_in_steps, o.thin_steps, o.ops_budget, rng)
                              .spectra;
            } catch (const srp::BudgetError& e) {
                throw srp::BudgetError(std::string(e.what()) +
                                       "; rerun with --sampler fourier-mcmc");
            }
        }

        const srp::NuEstimate nu = srp::estimate_nu(spectra, default_nu_k(o.n_points, o.nu_k));
        const double se = plateau_std_error(spectra, nu.plateau_k);
        const double theory = std::max(0.0, 1.0 - rho_c / rho);
        ordered_json r;
        r["record"] = "density_row";
        r["rho"] = rho;
        r["rho_over_rho_c"] = rho / rho_c;
        r["nu_hat"] = nu.nu_plateau;
        r["std_error"] = se;
        r["theory"] = theory;
        r["plateau_k"] = nu.plateau_k;
        emit(r);
        rows.push_back({fmt_g(rho), fmt_g(rho / rho_c, 4), fmt_g(nu.nu_plateau), fmt_g(se, 3),
                        fmt_g(theory), std::to_string(nu.plateau_k)});

        if (rho > rho_c && nu.nu_plateau > 0.0) {
            if (weights.regime == srp::WeightRegime::logarithmic) {
                const srp::GiantCycleReport g =
                    srp::giant_cycle_test(spectra, nu.nu_plateau, o.threshold);
                ordered_json gr;
                gr["record"] = "giant_cycle";
                gr["rho"] = rho;
                gr["mean_ratio"] = g.mean_ratio;
                gr["p_above"] = g.p_above;
                gr["threshold"] = g.threshold;
                emit(gr);
            } else {
                const double theta = o.theta > 0.0 ? o.theta : weights.theta();
                const srp::PdFitReport fit =
                    srp::pd_fit_test(spectra, nu.nu_plateau, theta, o.coordinates);
                double min_p = 1.0;
                for (const auto& c : fit.coordinates) min_p = std::min(min_p, c.p_value);
                ordered_json fr;
                fr["record"] = "pd_fit";
                fr["rho"] = rho;
                fr["theta"] = theta;
                fr["sum_squares_empirical"] = fit.sum_squares_empirical;
                fr["sum_squares_reference"] = fit.sum_squares_reference;
                fr["sum_squares_oracle"] = 1.0 / (1.0 + theta);
                fr["min_coordinate_p"] = min_p;
                emit(fr);
            }
        }
    }
    std::cout << "# density scan: rho_c = " << fmt_g(rho_c, 10) << ", theory nu = max(0, 1 - rho_c/rho)\n";
    print_table(rows);
}

// ---------------------------------------------------------------------------
// selftest

struct SelfCheck {
    std::string name;
    bool ok = false;
    std::string detail;
};

std::vector<SelfCheck> run_selftest() {
    std::vector<SelfCheck> checks;
    auto add = [&](const std::string& name, auto&& fn) {
        SelfCheck c;
        c.name = name;
        try {
            c.detail = fn();
            c.ok = true;
        } catch (const std::exception& e) {
            c.ok = false;
            c.detail = e.what();
        }
        checks.push_back(std::move(c));
    };
    auto require = [](bool cond, const std::string& msg) {
        if (!cond) throw srp::NumericError(msg);
    };

    add("partition-sum oracle", [&] {
        const std::vector<srp::CycleWeightModel> models = {
            srp::CycleWeightModel::constant(std::log(2.0)),
            srp::CycleWeightModel::asymptotic(0.3, {{2, -0.4}, {5, 1.0}}),
            srp::CycleWeightModel::logarithmic(1.0)};
        double worst = 0.0;
        for (const auto& model : models) {
            const srp::WeightTable table = srp::compute_h(model, 8);
            for (int64_t n = 1; n <= 8; ++n) {
                const double exact = srp::brute_force_h(model, n);
                worst = std::max(worst, std::abs(table.h(n) - exact) / exact);
            }
        }
        require(worst <= 1e-12, "recursion vs. enumeration mismatch " + fmt_g(worst, 3));
        return "max rel error " + fmt_g(worst, 3) + " (3 regimes, n <= 8)";
    });

    add("series identity", [&] {
        double worst = 0.0;
        const std::vector<srp::CycleWeightModel> models = {
            srp::CycleWeightModel::constant(0.0), srp::CycleWeightModel::constant(std::log(2.0)),
            srp::CycleWeightModel::logarithmic(1.0)};
        for (const auto& model : models) {
            const int64_t N = 120;
            const srp::WeightTable table = srp::compute_h(model, N);
            double theta_cap = 1.0;
            if (model.regime != srp::WeightRegime::logarithmic)
                theta_cap = std::max(1.0, model.theta());
            const double z = 0.4 / theta_cap;
            double lhs = 0.0;
            for (int64_t n = 0; n <= N; ++n)
                lhs += table.h(n) * std::pow(z, static_cast<double>(n));
            double expo = 0.0;
            for (int64_t j = 1; j <= 4000; ++j) {
                const double term =
                    std::exp(-srp::cycle_weight(model, j)) * std::pow(z, static_cast<double>(j)) /
                    static_cast<double>(j);
                expo += term;
                if (term < 1e-18 * std::max(1.0, expo)) break;
            }
            worst = std::max(worst, std::abs(lhs - std::exp(expo)) / std::exp(expo));
        }
        require(worst <= 1e-8, "series identity violated, rel error " + fmt_g(worst, 3));
        return "max rel error " + fmt_g(worst, 3) + " at truncation 120";
    });

    add("critical density", [&] {
        const srp::JumpKernel kernel = srp::JumpKernel::gaussian(3, 1.0 / (4.0 * srp::pi));
        const double rho0 = srp::critical_density(kernel, srp::CycleWeightModel::constant(0.0));
        const double rho_ln2 =
            srp::critical_density(kernel, srp::CycleWeightModel::constant(std::log(2.0)));
        const double zeta32 = 2.6123753486854883;
        require(std::abs(rho0 - zeta32) / zeta32 <= 1e-8, "headline value off: " + fmt_g(rho0, 12));
        require(std::abs(rho_ln2 - 0.5 * zeta32) / (0.5 * zeta32) <= 1e-8,
                "half-weight value off: " + fmt_g(rho_ln2, 12));
        return "rho_c = " + fmt_g(rho0, 10) + ", halved at alpha = ln 2";
    });

    add("finite-volume trend", [&] {
        const srp::JumpKernel kernel = srp::JumpKernel::gaussian(3, 0.015);
        const srp::CycleWeightModel weights = srp::CycleWeightModel::constant(0.0);
        const double rho = srp::critical_density(kernel, weights);
        double prev = std::numeric_limits<double>::infinity();
        std::string gaps;
        for (double L : {8.0, 16.0, 32.0}) {
            const srp::BoxGeometry box =
                srp::BoxGeometry::make(L, 3, srp::default_mode_cutoff(kernel));
            const double gap =
                std::abs(srp::finite_volume_critical_density(kernel, weights, box).value - rho) /
                rho;
            require(gap < prev, "gap not decreasing at L = " + fmt_g(L));
            prev = gap;
            gaps += (gaps.empty() ? "" : ", ") + fmt_g(gap, 3);
        }
        return "rel gaps " + gaps + " over L = 8, 16, 32";
    });

    add("two-mode marginal", [&] {
        srp::ModeSet modes;
        modes.box = srp::BoxGeometry::make(1.0, 1, 1.5);
        modes.kernel = srp::JumpKernel::gaussian(1, 1.0);
        modes.modes = {{0, 0, 0}, {1, 0, 0}};
        modes.eps = {0.0, 1.0};
        modes.zero_index = 0;
        const srp::WeightTable table = srp::compute_h(srp::CycleWeightModel::constant(0.0), 2);
        const srp::ModePartitionTables tables = srp::build_tables(modes, table, 2);
        const std::vector<double> marginal = tables.zero_mode_marginal();
        const double want = 1.0 / (1.0 + std::exp(-1.0) + std::exp(-2.0));
        require(std::abs(marginal[2] - want) <= 1e-12,
                "P(n0 = 2) = " + fmt_g(marginal[2], 12) + ", want " + fmt_g(want, 12));
        return "P(n0 = 2) = " + fmt_g(marginal[2], 10);
    });

    add("dual partition route", [&] {
        const srp::JumpKernel kernel = srp::JumpKernel::gaussian(3, 1.0 / (4.0 * srp::pi));
        const srp::CycleWeightModel weights = srp::CycleWeightModel::constant(0.0);
        const srp::BoxGeometry box = srp::BoxGeometry::make(3.0, 3, srp::default_mode_cutoff(kernel));
        const srp::ModeSet modes = srp::ModeSet::build(box, kernel);
        const int64_t N = 40;
        const srp::WeightTable table = srp::compute_h(weights, N);
        const srp::ModePartitionTables tables = srp::build_tables(modes, table, N);
        const srp::PowerSumTables pst = srp::power_sum_tables(modes, weights, N);
        const double rel =
            std::abs(std::expm1(pst.log_Y[static_cast<size_t>(N)] - tables.log_partition()));
        require(rel <= 1e-10, "partition sums disagree, rel error " + fmt_g(rel, 3));
        return "log-partition rel error " + fmt_g(rel, 3) + " (" + std::to_string(modes.size()) +
               " modes, N = 40)";
    });

    add("density-measure transform", [&] {
        const srp::JumpKernel kernel = srp::JumpKernel::gaussian(3, 1.0 / (4.0 * srp::pi));
        const srp::CycleWeightModel weights = srp::CycleWeightModel::constant(0.0);
        const srp::BoxGeometry box = srp::BoxGeometry::make(6.0, 3, srp::default_mode_cutoff(kernel));
        const srp::ModeSet modes = srp::ModeSet::build(box, kernel);
        const double at_zero = srp::mu_lambda_laplace(modes, weights, 0.0);
        require(at_zero == 1.0, "transform at 0 is " + fmt_g(at_zero, 12));
        bool refused = false;
        try {
            srp::mu_lambda_laplace(modes, weights, 1e12);
        } catch (const srp::ConfigError&) {
            refused = true;
        }
        require(refused, "out-of-domain argument was not refused");
        return "value 1 at lambda = 0; domain guard active";
    });

    add("stick breaking", [&] {
        srp::Rng rng(17);
        const int64_t draws = 20000;
        double mean_first = 0.0;
        for (int64_t i = 0; i < draws; ++i) mean_first += srp::sample_gem(1.0, 1, rng)[0];
        mean_first /= static_cast<double>(draws);
        require(std::abs(mean_first - 0.5) < 0.01,
                "first-fragment mean " + fmt_g(mean_first) + ", want 0.5");
        const srp::PdSumSquares ss = srp::pd_sum_squares_reference(1.0, draws, 128, rng);
        require(std::abs(ss.estimate - 0.5) < 5.0 * ss.std_error,
                "sum of squares " + fmt_g(ss.estimate) + " +- " + fmt_g(ss.std_error, 3));
        return "E[X1] ~ " + fmt_g(mean_first, 4) + ", E[sum p^2] ~ " + fmt_g(ss.estimate, 4);
    });

    add("ks self-consistency", [&] {
        srp::Rng rng(29);
        std::vector<double> a(2000), b(2000), c(2000);
        for (auto& v : a) v = rng.normal();
        for (auto& v : b) v = rng.normal();
        for (auto& v : c) v = rng.normal() + 1.0;
        const srp::KSResult same = srp::two_sample_ks(a, b);
        const srp::KSResult shifted = srp::two_sample_ks(a, c);
        require(same.p_value > 0.01, "same-law p = " + fmt_g(same.p_value, 3));
        require(shifted.p_value < 1e-6, "shifted-law p = " + fmt_g(shifted.p_value, 3));
        return "same-law p " + fmt_g(same.p_value, 3) + ", shifted-law p " +
               fmt_g(shifted.p_value, 3);
    });

    add("spatial chain audits", [&] {
        srp::ChainParams params;
        params.kernel = srp::JumpKernel::gaussian(3, 0.1);
        params.weights = srp::CycleWeightModel::constant(0.0);
        params.box = srp::BoxGeometry::make(2.0, 3, srp::default_mode_cutoff(params.kernel));
        params.n_points = 8;
        params.sweeps = 400;
        params.burn_in = 100;
        params.thinning = 10;
        params.audit_interval = 50;
        params.seed = 7;
        const srp::ChainResult result = srp::run_chain(params);
        require(result.diagnostics.registry_audit_failures == 0, "cycle registry audit failed");
        require(result.diagnostics.max_energy_audit_error <= 1e-8,
                "energy drift " + fmt_g(result.diagnostics.max_energy_audit_error, 3));
        for (const auto& s : result.spectra)
            require(s.total == 8, "spectrum does not cover all points");
        return "energy drift " + fmt_g(result.diagnostics.max_energy_audit_error, 3) + " over " +
               std::to_string(result.diagnostics.audits) + " audits";
    });

    return checks;
}

void cmd_selftest() {
    const std::vector<SelfCheck> checks = run_selftest();
    int64_t failed = 0;
    for (const auto& c : checks) {
        ordered_json r;
        r["record"] = "selftest";
        r["name"] = c.name;
        r["status"] = c.ok ? "ok" : "fail";
        r["detail"] = c.detail;
        emit(r);
        std::cout << (c.ok ? "#   ok  " : "# FAIL  ") << c.name << ": " << c.detail << "\n";
        if (!c.ok) ++failed;
    }
    std::cout << "# " << (checks.size() - static_cast<size_t>(failed)) << "/" << checks.size()
              << " checks passed\n";
    if (failed > 0)
        throw srp::NumericError("selftest: " + std::to_string(failed) + " check(s) failed");
}

} // namespace

int main(int argc, char** argv) {
    std::ios::sync_with_stdio(false);

    CLI::App app{"spatial random permutation toolkit"};
    app.set_version_flag("--version", version_string);
    app.set_config("--config", "", "INI config file ([subcommand] sections supported)");
    uint64_t seed = 1;
    app.add_option("--seed", seed,
                   "RNG seed; precedence: flag, config key, SRP_SEED, default")
        ->envname("SRP_SEED")
        ->capture_default_str();
    bool print_config = false;
    app.add_flag("--print-config", print_config, "dump the effective configuration and exit");
    app.require_subcommand(0, 1);

    RhoCOpts rho_c_opts;
    {
        CLI::App* cmd = app.add_subcommand("rho-c", "critical density and finite-volume table")->fallthrough();
        add_kernel_options(cmd, rho_c_opts.model, true);
        add_weight_options(cmd, rho_c_opts.model);
        cmd->add_option("--L-grid", rho_c_opts.L_grid, "box side lengths for the finite-volume table")
            ->capture_default_str();
        cmd->add_option("--tol", rho_c_opts.tol, "series tail tolerance")->capture_default_str();
    }

    HnOpts hn_opts;
    {
        CLI::App* cmd = app.add_subcommand("hn", "permutation normalization table and oracle check")->fallthrough();
        add_weight_options(cmd, hn_opts.model);
        cmd->add_option("--n-max", hn_opts.n_max, "largest n in the table")->capture_default_str();
    }

    SampleFourierOpts sf_opts;
    {
        CLI::App* cmd = app.add_subcommand("sample-fourier", "occupation-number sampler (exact or MCMC)")->fallthrough();
        add_kernel_options(cmd, sf_opts.model, true);
        add_weight_options(cmd, sf_opts.model);
        cmd->add_option("--n-points", sf_opts.n_points, "number of points")->capture_default_str();
        cmd->add_option("--density", sf_opts.density, "target density (sets the box)")->capture_default_str();
        cmd->add_option("--box-length", sf_opts.box_length, "box side length (overrides --density)")
            ->capture_default_str();
        cmd->add_option("--sampler", sf_opts.sampler, "exact or mcmc")
            ->check(CLI::IsMember({"exact", "mcmc"}))
            ->capture_default_str();
        cmd->add_option("--samples", sf_opts.samples, "number of samples")->capture_default_str();
        cmd->add_option("--burn-in-steps", sf_opts.burn_in_steps,
                        "MCMC burn-in steps (negative selects 200 n)")
            ->capture_default_str();
        cmd->add_option("--thin-steps", sf_opts.thin_steps,
                        "MCMC steps between samples (negative selects 20 n)")
            ->capture_default_str();
        cmd->add_option("--ops-budget", sf_opts.ops_budget, "table-build operation budget")
            ->capture_default_str();
        cmd->add_option("--eps-cut", sf_opts.eps_cut, "dispersion cutoff for the mode set")
            ->capture_default_str();
        cmd->add_option("--nu-k", sf_opts.nu_k, "cycle-length threshold K (0 selects ceil(n^(2/3)))")
            ->capture_default_str();
        cmd->add_flag("--emit-spectra", sf_opts.emit_spectra, "include full cycle spectra in sample records");
    }

    SampleSpatialOpts ss_opts;
    {
        CLI::App* cmd = app.add_subcommand("sample-spatial", "position/permutation Metropolis chain")->fallthrough();
        add_kernel_options(cmd, ss_opts.model, true);
        add_weight_options(cmd, ss_opts.model);
        cmd->add_option("--n-points", ss_opts.n_points, "number of points")->capture_default_str();
        cmd->add_option("--density", ss_opts.density, "target density (sets the box)")->capture_default_str();
        cmd->add_option("--box-length", ss_opts.box_length, "box side length (overrides --density)")
            ->capture_default_str();
        cmd->add_option("--sweeps", ss_opts.sweeps, "sweeps (n moves each)")->capture_default_str();
        cmd->add_option("--burn-in", ss_opts.burn_in, "sweeps discarded before sampling")
            ->capture_default_str();
        cmd->add_option("--thinning", ss_opts.thinning, "sweeps between samples")->capture_default_str();
        cmd->add_option("--p-pos", ss_opts.p_pos, "fraction of position moves, in (0,1)")
            ->capture_default_str();
        cmd->add_option("--proposal-scale", ss_opts.proposal_scale,
                        "position step scale (negative selects 2 sqrt(beta); 0 freezes positions)")
            ->capture_default_str();
        cmd->add_option("--audit-interval", ss_opts.audit_interval,
                        "sweeps between exact audits (0 selects sweeps/8)")
            ->capture_default_str();
        cmd->add_option("--nu-k", ss_opts.nu_k, "cycle-length threshold K (0 selects ceil(n^(2/3)))")
            ->capture_default_str();
        cmd->add_flag("--emit-spectra", ss_opts.emit_spectra, "include full cycle spectra in sample records");
    }

    VerifyPdOpts vp_opts;
    {
        CLI::App* cmd = app.add_subcommand(
            "verify-pd", "compare long-cycle fractions against the stick-breaking law")->fallthrough();
        add_kernel_options(cmd, vp_opts.model, false);
        add_weight_options(cmd, vp_opts.model);
        cmd->add_option("--sampler", vp_opts.sampler, "nonspatial, fourier-exact, or fourier-mcmc")
            ->check(CLI::IsMember({"nonspatial", "fourier-exact", "fourier-mcmc"}))
            ->capture_default_str();
        cmd->add_option("--n-points", vp_opts.n_points, "number of points")->capture_default_str();
        cmd->add_option("--density", vp_opts.density, "target density (fourier samplers)")
            ->capture_default_str();
        cmd->add_option("--box-length", vp_opts.box_length, "box side length (overrides --density)")
            ->capture_default_str();
        cmd->add_option("--samples", vp_opts.samples, "number of samples")->capture_default_str();
        cmd->add_option("--coordinates", vp_opts.coordinates, "size-ordered coordinates to test")
            ->capture_default_str();
        cmd->add_option("--nu-hat", vp_opts.nu_hat,
                        "long-cycle fraction used for normalization (0 = estimate)")
            ->capture_default_str();
        cmd->add_option("--theta", vp_opts.theta, "stick-breaking parameter (0 = e^{-alpha})")
            ->capture_default_str();
        cmd->add_option("--burn-in-steps", vp_opts.burn_in_steps, "MCMC burn-in steps")
            ->capture_default_str();
        cmd->add_option("--thin-steps", vp_opts.thin_steps, "MCMC steps between samples")
            ->capture_default_str();
        cmd->add_option("--ops-budget", vp_opts.ops_budget, "table-build operation budget")
            ->capture_default_str();
        cmd->add_option("--nu-k", vp_opts.nu_k, "cycle-length threshold K")->capture_default_str();
    }

    GiantCycleOpts gc_opts;
    gc_opts.model.weights_name = "logarithmic";
    {
        CLI::App* cmd =
            app.add_subcommand("giant-cycle", "distribution of the largest normalized cycle")->fallthrough();
        add_kernel_options(cmd, gc_opts.model, false);
        add_weight_options(cmd, gc_opts.model);
        cmd->add_option("--sampler", gc_opts.sampler, "nonspatial, fourier-exact, or fourier-mcmc")
            ->check(CLI::IsMember({"nonspatial", "fourier-exact", "fourier-mcmc"}))
            ->capture_default_str();
        cmd->add_option("--n-points", gc_opts.n_points, "number of points")->capture_default_str();
        cmd->add_option("--density", gc_opts.density, "target density (fourier samplers)")
            ->capture_default_str();
        cmd->add_option("--box-length", gc_opts.box_length, "box side length (overrides --density)")
            ->capture_default_str();
        cmd->add_option("--samples", gc_opts.samples, "number of samples")->capture_default_str();
        cmd->add_option("--threshold", gc_opts.threshold, "ratio threshold for P(ratio > t)")
            ->capture_default_str();
        cmd->add_option("--nu-hat", gc_opts.nu_hat,
                        "long-cycle fraction used for normalization (0 = estimate)")
            ->capture_default_str();
        cmd->add_option("--burn-in-steps", gc_opts.burn_in_steps, "MCMC burn-in steps")
            ->capture_default_str();
        cmd->add_option("--thin-steps", gc_opts.thin_steps, "MCMC steps between samples")
            ->capture_default_str();
        cmd->add_option("--ops-budget", gc_opts.ops_budget, "table-build operation budget")
            ->capture_default_str();
        cmd->add_option("--nu-k", gc_opts.nu_k, "cycle-length threshold K")->capture_default_str();
    }

    ScanDensityOpts sd_opts;
    {
        CLI::App* cmd = app.add_subcommand("scan-density", "long-cycle fraction across a density grid")->fallthrough();
        add_kernel_options(cmd, sd_opts.model, true);
        add_weight_options(cmd, sd_opts.model);
        cmd->add_option("--rho-grid", sd_opts.rho_grid, "densities to scan")->required();
        cmd->add_option("--sampler", sd_opts.sampler, "fourier-exact, fourier-mcmc, or spatial")
            ->check(CLI::IsMember({"fourier-exact", "fourier-mcmc", "spatial"}))
            ->capture_default_str();
        cmd->add_option("--n-points", sd_opts.n_points, "number of points")->capture_default_str();
        cmd->add_option("--samples", sd_opts.samples, "samples per density")->capture_default_str();
        cmd->add_option("--burn-in-steps", sd_opts.burn_in_steps, "fourier MCMC burn-in steps")
            ->capture_default_str();
        cmd->add_option("--thin-steps", sd_opts.thin_steps, "fourier MCMC steps between samples")
            ->capture_default_str();
        cmd->add_option("--sweeps", sd_opts.sweeps, "spatial chain sweeps")->capture_default_str();
        cmd->add_option("--burn-in", sd_opts.burn_in, "spatial chain burn-in sweeps")
            ->capture_default_str();
        cmd->add_option("--thinning", sd_opts.thinning, "spatial chain thinning")->capture_default_str();
        cmd->add_option("--p-pos", sd_opts.p_pos, "spatial chain position-move fraction")
            ->capture_default_str();
        cmd->add_option("--proposal-scale", sd_opts.proposal_scale, "spatial chain step scale")
            ->capture_default_str();
        cmd->add_option("--ops-budget", sd_opts.ops_budget, "table-build operation budget")
            ->capture_default_str();
        cmd->add_option("--theta", sd_opts.theta, "stick-breaking parameter (0 = e^{-alpha})")
            ->capture_default_str();
        cmd->add_option("--coordinates", sd_opts.coordinates, "size-ordered coordinates to test")
            ->capture_default_str();
        cmd->add_option("--threshold", sd_opts.threshold, "giant-cycle ratio threshold")
            ->capture_default_str();
        cmd->add_option("--nu-k", sd_opts.nu_k, "cycle-length threshold K")->capture_default_str();
    }

    app.add_subcommand("selftest", "run the built-in oracle and invariant checks")->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : srp::exit_config_error;
    }

    if (print_config) {
        std::cout << app.config_to_str(true, true);
        return srp::exit_ok;
    }
    if (app.get_subcommands().empty()) {
        std::cerr << app.help();
        return srp::exit_config_error;
    }
    CLI::App* sub = app.get_subcommands().front();

    RunManifest manifest;
    manifest.command = sub->get_name();
    manifest.params = collect_params(*sub);
    manifest.seed = seed;
    manifest.config_digest = fnv1a_hex(app.config_to_str(true, false));
    manifest.started_at = iso_utc_now();

    const auto t0 = std::chrono::steady_clock::now();
    int rc = srp::exit_ok;
    try {
        manifest.emit_start();
        const std::string& name = manifest.command;
        if (name == "rho-c")
            cmd_rho_c(rho_c_opts);
        else if (name == "hn")
            cmd_hn(hn_opts);
        else if (name == "sample-fourier")
            cmd_sample_fourier(sf_opts, seed);
        else if (name == "sample-spatial")
            cmd_sample_spatial(ss_opts, seed);
        else if (name == "verify-pd")
            cmd_verify_pd(vp_opts, seed);
        else if (name == "giant-cycle")
            cmd_giant_cycle(gc_opts, seed);
        else if (name == "scan-density")
            cmd_scan_density(sd_opts, seed);
        else
            cmd_selftest();
    } catch (const srp::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        rc = srp::exit_config_error;
    } catch (const srp::BudgetError& e) {
        std::cerr << "budget refusal: " << e.what() << "\n";
        rc = srp::exit_budget_error;
    } catch (const srp::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        rc = srp::exit_numeric_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        rc = srp::exit_numeric_error;
    }

    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cerr << "[srp] " << manifest.command << " finished " << iso_utc_now() << " ("
              << fmt_g(elapsed, 3) << " s, exit " << rc << ")\n";
    return rc;
}
