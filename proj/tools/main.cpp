#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "tnd/baselines.hpp"
#include "tnd/dense_tensor.hpp"
#include "tnd/disentangler.hpp"
#include "tnd/errors.hpp"
#include "tnd/factorized_layer.hpp"
#include "tnd/guard.hpp"
#include "tnd/linalg.hpp"
#include "tnd/manifest.hpp"
#include "tnd/mpo.hpp"
#include "tnd/planted.hpp"
#include "tnd/qten_io.hpp"
#include "tnd/sampling.hpp"

namespace {

using tnd::cplx;
using tnd::DenseTensor;
using tnd::ordered_json;

void log_line(const std::string& msg) { std::cerr << "[tndisent] " << msg << "\n"; }

void emit_report(const ordered_json& report, const std::string& path) {
    const std::string text = report.dump(2) + "\n";
    if (path.empty()) {
        std::cout << text;
    } else {
        tnd::write_text_atomic(path, text);
        log_line("wrote report " + path);
    }
}

DenseTensor load_matrix(const std::string& path) {
    DenseTensor t = tnd::read_qten(path);
    if (t.rank() != 2)
        throw tnd::validation_error(path + ": expected a rank-2 tensor, got rank " +
                                    std::to_string(t.rank()));
    return t;
}

// Number of site_dim factors making up n, or 0 when n is not a clean power.
std::size_t log_dim(std::size_t n, std::size_t d) {
    std::size_t k = 0;
    while (n > 1 && n % d == 0) {
        n /= d;
        ++k;
    }
    return n == 1 ? k : 0;
}

struct PreparedInput {
    DenseTensor w;
    tnd::SiteSpec spec;
    std::size_t original_rows = 0;
    std::size_t original_cols = 0;
    bool padded = false;
};

// Maps a matrix onto uniform site_dim sites; with allow_pad, zero-pads both
// dims up to the next common power of site_dim.
PreparedInput prepare_input(DenseTensor w, std::size_t site_dim, bool allow_pad) {
    if (site_dim < 2) throw tnd::validation_error("--site-dim must be >= 2");
    PreparedInput out;
    out.original_rows = w.rows();
    out.original_cols = w.cols();

    const std::size_t ka = log_dim(w.rows(), site_dim);
    const std::size_t kb = log_dim(w.cols(), site_dim);
    if (ka > 0 && ka == kb) {
        out.spec.out_dims.assign(ka, site_dim);
        out.spec.in_dims.assign(ka, site_dim);
        out.w = std::move(w);
        return out;
    }
    if (!allow_pad)
        throw tnd::validation_error(
            "matrix of shape " + std::to_string(w.rows()) + "x" +
            std::to_string(w.cols()) + " does not factorize over --site-dim " +
            std::to_string(site_dim) + " sites; pass --pad to zero-pad");

    std::size_t k = 1, target = site_dim;
    while (target < std::max(w.rows(), w.cols())) {
        target *= site_dim;
        ++k;
    }
    tnd::check_dense_guard(target * target, "pad");
    DenseTensor padded = DenseTensor::zeros({target, target});
    for (std::size_t i = 0; i < w.rows(); ++i)
        for (std::size_t j = 0; j < w.cols(); ++j)
            padded.data[i * target + j] = w.data[i * w.cols() + j];
    out.spec.out_dims.assign(k, site_dim);
    out.spec.in_dims.assign(k, site_dim);
    out.w = std::move(padded);
    out.padded = true;
    log_line("zero-padded input to " + std::to_string(target) + "x" +
             std::to_string(target));
    return out;
}

ordered_json input_echo(const PreparedInput& in) {
    ordered_json j;
    j["original_rows"] = in.original_rows;
    j["original_cols"] = in.original_cols;
    j["padded"] = in.padded;
    j["rows"] = in.w.rows();
    j["cols"] = in.w.cols();
    return j;
}

ordered_json param_count_json(const tnd::ParamCount& pc) {
    ordered_json j;
    j["gates"] = pc.gates;
    j["core"] = pc.core;
    j["total"] = pc.total;
    j["dense_equiv"] = pc.dense_equiv;
    j["ratio"] = pc.ratio;
    return j;
}

// Shared metric block for factorize/disentangle (and evaluate's recompute):
// identical inputs must serialize identically.
ordered_json build_metrics(const tnd::FactorizedOperator& fac,
                           const tnd::ConvergenceReport& rep) {
    ordered_json m;
    m["final_rel_error"] = rep.final_rel_error;
    m["fidelity"] = rep.sweep_fidelities.empty() ? 0.0 : rep.sweep_fidelities.back();
    m["converged"] = rep.converged;
    m["sweeps_used"] = rep.sweeps_used;
    m["restart_index"] = rep.restart_index;
    m["bond_dims"] = fac.core.bond_dims();
    m["param_count"] = param_count_json(tnd::param_count(fac));
    m["entropy_before_s1"] = rep.entropy_before_s1;
    m["entropy_after_s1"] = rep.entropy_after_s1;
    m["entropy_before_s2"] = rep.entropy_before_s2;
    m["entropy_after_s2"] = rep.entropy_after_s2;
    m["sweep_fidelities"] = rep.sweep_fidelities;
    return m;
}

ordered_json report_skeleton(const std::string& command, const ordered_json& config) {
    ordered_json r;
    r["schema_version"] = 1;
    r["command"] = command;
    r["config"] = config;
    return r;
}

double recompute_rel_error(const tnd::FactorizedOperator& fac, const tnd::MPO& mpo_old,
                           const DenseTensor* dense) {
    if (dense != nullptr &&
        fac.site_spec.rows() * fac.site_spec.cols() <= tnd::dense_guard())
        return tnd::rel_frob_dist(*dense, tnd::reconstruct(fac));
    const tnd::MPO r1 =
        tnd::apply_circuit_mpo(fac.core, fac.u, false, tnd::near_exact_policy()).first;
    const tnd::MPO r =
        tnd::apply_circuit_mpo(r1, fac.v_dag, false, tnd::near_exact_policy()).first;
    const double nw = tnd::mpo_overlap(mpo_old, mpo_old).real();
    const double nr = tnd::mpo_overlap(r, r).real();
    const double ov = tnd::mpo_overlap(r, mpo_old).real();
    return nw > 0.0 ? std::sqrt(std::max(0.0, nw + nr - 2.0 * ov) / nw) : 0.0;
}

// ---- command configurations ------------------------------------------------

struct PlantArgs {
    std::size_t k = 4, site_dim = 2, layers = 1, chi = 1;
    std::int64_t layers_u = -1, layers_v = -1;
    double noise = 0.0;
    std::uint64_t seed = 0;
    std::string out, truth, report;
};

int cmd_plant(const PlantArgs& a) {
    tnd::PlantedSpec spec;
    spec.k = a.k;
    spec.site_dim = a.site_dim;
    spec.layers_u = a.layers_u >= 0 ? static_cast<std::size_t>(a.layers_u) : a.layers;
    spec.layers_v = a.layers_v >= 0 ? static_cast<std::size_t>(a.layers_v) : a.layers;
    spec.chi_core = a.chi;
    spec.noise_level = a.noise;
    spec.seed = a.seed;

    tnd::PlantedInstance inst = tnd::plant_instance(spec);
    tnd::write_qten(a.out, inst.w);
    log_line("wrote " + a.out);

    ordered_json config;
    config["k"] = spec.k;
    config["site_dim"] = spec.site_dim;
    config["layers_u"] = spec.layers_u;
    config["layers_v"] = spec.layers_v;
    config["chi_core"] = spec.chi_core;
    config["noise_level"] = spec.noise_level;
    config["seed"] = spec.seed;
    config["out"] = a.out;

    ordered_json metrics;
    metrics["w_rows"] = inst.w.rows();
    metrics["w_cols"] = inst.w.cols();
    metrics["w_norm"] = tnd::frob_norm(inst.w);
    metrics["truth_bond_dims"] = inst.truth.core.bond_dims();
    metrics["truth_param_count"] = param_count_json(tnd::param_count(inst.truth));

    if (!a.truth.empty()) {
        inst.truth.provenance["source_hash"] = tnd::fnv1a_file_hex(a.out);
        tnd::save_factorized(a.truth, inst.truth, config, metrics);
        log_line("wrote " + a.truth);
        config["truth"] = a.truth;
    }

    ordered_json report = report_skeleton("plant", config);
    report["metrics"] = metrics;
    emit_report(report, a.report);
    return 0;
}

struct FactorizeArgs {
    std::string input, out, report;
    std::size_t chi = 0, site_dim = 2;
    bool pad = false;
};

struct DisentangleArgs {
    std::string input, out, report, init = "identity";
    std::size_t layers = 1, chi_new = 1, restarts = 1, max_sweeps = 200, site_dim = 2;
    std::int64_t layers_u = -1, layers_v = -1;
    double fid_tol = 1e-9;
    std::uint64_t seed = 0;
    bool pad = false;
};

// Shared tail of factorize/disentangle: run the optimizer, persist, report.
int run_disentangle_pipeline(const std::string& command, const std::string& input,
                             const PreparedInput& in, const tnd::DisentangleConfig& cfg,
                             std::size_t restarts, ordered_json config,
                             const std::string& out, const std::string& report_path) {
    config["input"] = input;
    config["input_shape"] = input_echo(in);
    config["source_hash"] = tnd::fnv1a_file_hex(input);

    tnd::MPO mpo_old = tnd::mpo_from_matrix(in.w, in.spec, tnd::near_exact_policy()).first;
    tnd::RestartResult rr = tnd::disentangle_restarts(mpo_old, cfg, restarts);
    log_line("final_rel_error " + std::to_string(rr.report.final_rel_error) + " after " +
             std::to_string(rr.report.sweeps_used) + " sweeps (restart " +
             std::to_string(rr.report.restart_index) + ")");

    ordered_json metrics = build_metrics(rr.fac, rr.report);
    ordered_json restart_errors = ordered_json::array();
    for (const tnd::ConvergenceReport& r : rr.all) restart_errors.push_back(r.final_rel_error);
    metrics["restart_errors"] = std::move(restart_errors);

    if (!out.empty()) {
        rr.fac.provenance["source_hash"] = config["source_hash"].get<std::string>();
        rr.fac.provenance["command"] = command;
        rr.fac.provenance["seed"] = std::to_string(cfg.seed);
        tnd::save_factorized(out, rr.fac, config, metrics);
        log_line("wrote " + out);
        config["out"] = out;
    }

    ordered_json report = report_skeleton(command, config);
    report["metrics"] = metrics;
    emit_report(report, report_path);
    return 0;
}

int cmd_factorize(const FactorizeArgs& a) {
    PreparedInput in = prepare_input(load_matrix(a.input), a.site_dim, a.pad);
    tnd::DisentangleConfig cfg;
    cfg.layers_u = 0;
    cfg.layers_v = 0;
    cfg.chi_new = a.chi;
    cfg.validate();

    ordered_json config;
    config["chi"] = a.chi;
    config["site_dim"] = a.site_dim;
    return run_disentangle_pipeline("factorize", a.input, in, cfg, 1, std::move(config),
                                    a.out, a.report);
}

int cmd_disentangle(const DisentangleArgs& a) {
    PreparedInput in = prepare_input(load_matrix(a.input), a.site_dim, a.pad);
    tnd::DisentangleConfig cfg;
    cfg.layers_u = a.layers_u >= 0 ? static_cast<std::size_t>(a.layers_u) : a.layers;
    cfg.layers_v = a.layers_v >= 0 ? static_cast<std::size_t>(a.layers_v) : a.layers;
    cfg.chi_new = a.chi_new;
    cfg.max_sweeps = a.max_sweeps;
    cfg.fid_tol = a.fid_tol;
    cfg.seed = a.seed;
    if (a.init == "identity") {
        cfg.init = tnd::GateInit::identity;
    } else if (a.init == "haar") {
        cfg.init = tnd::GateInit::haar;
    } else {
        throw tnd::validation_error("--init must be identity or haar");
    }
    cfg.validate();
    if (a.restarts < 1) throw tnd::validation_error("--restarts must be >= 1");

    ordered_json config;
    config["layers_u"] = cfg.layers_u;
    config["layers_v"] = cfg.layers_v;
    config["chi_new"] = cfg.chi_new;
    config["restarts"] = a.restarts;
    config["max_sweeps"] = cfg.max_sweeps;
    config["fid_tol"] = cfg.fid_tol;
    config["seed"] = cfg.seed;
    config["init"] = a.init;
    config["site_dim"] = a.site_dim;
    return run_disentangle_pipeline("disentangle", a.input, in, cfg, a.restarts,
                                    std::move(config), a.out, a.report);
}

struct EvaluateArgs {
    std::string layer, reference, report;
    std::size_t site_dim = 2;
    bool pad = false;
};

int cmd_evaluate(const EvaluateArgs& a) {
    tnd::LoadedFactorized loaded = tnd::load_factorized(a.layer);
    PreparedInput in = prepare_input(load_matrix(a.reference), a.site_dim, a.pad);
    if (!(in.spec == loaded.fac.site_spec))
        throw tnd::validation_error("evaluate: reference shape disagrees with the layer");

    tnd::MPO mpo_old = tnd::mpo_from_matrix(in.w, in.spec, tnd::near_exact_policy()).first;
    tnd::ConvergenceReport rec;
    rec.final_rel_error = recompute_rel_error(loaded.fac, mpo_old, &in.w);
    rec.entropy_before_s1 = tnd::entropy_profile(mpo_old);
    rec.entropy_after_s1 = tnd::entropy_profile(loaded.fac.core);
    for (std::size_t b = 0; b + 1 < in.spec.num_sites(); ++b) {
        rec.entropy_before_s2.push_back(tnd::operator_entanglement(mpo_old, b).entropy_s2);
        rec.entropy_after_s2.push_back(
            tnd::operator_entanglement(loaded.fac.core, b).entropy_s2);
    }
    const double fid = tnd::fidelity(loaded.fac, mpo_old);

    ordered_json recomputed;
    recomputed["final_rel_error"] = rec.final_rel_error;
    recomputed["fidelity"] = fid;
    recomputed["bond_dims"] = loaded.fac.core.bond_dims();
    recomputed["param_count"] = param_count_json(tnd::param_count(loaded.fac));
    recomputed["entropy_before_s1"] = rec.entropy_before_s1;
    recomputed["entropy_after_s1"] = rec.entropy_after_s1;
    recomputed["entropy_before_s2"] = rec.entropy_before_s2;
    recomputed["entropy_after_s2"] = rec.entropy_after_s2;

    const ordered_json stored = loaded.manifest.contains("metrics")
                                    ? loaded.manifest["metrics"]
                                    : ordered_json::object();
    double max_disc = 0.0;
    bool comparable = false;
    auto compare_scalar = [&](const char* key) {
        if (!stored.contains(key) || !stored[key].is_number()) return;
        comparable = true;
        max_disc = std::max(max_disc, std::abs(stored[key].get<double>() -
                                               recomputed[key].get<double>()));
    };
    compare_scalar("final_rel_error");
    auto compare_list = [&](const char* key) {
        if (!stored.contains(key) || !stored[key].is_array()) return;
        const auto sv = stored[key].get<std::vector<double>>();
        const auto rv = recomputed[key].get<std::vector<double>>();
        if (sv.size() != rv.size()) {
            max_disc = std::numeric_limits<double>::infinity();
            return;
        }
        comparable = true;
        for (std::size_t i = 0; i < sv.size(); ++i)
            max_disc = std::max(max_disc, std::abs(sv[i] - rv[i]));
    };
    compare_list("entropy_before_s1");
    compare_list("entropy_after_s1");
    compare_list("entropy_before_s2");
    compare_list("entropy_after_s2");

    ordered_json config;
    config["layer"] = a.layer;
    config["reference"] = a.reference;
    config["reference_shape"] = input_echo(in);
    config["site_dim"] = a.site_dim;

    ordered_json report = report_skeleton("evaluate", config);
    report["metrics"] = recomputed;
    report["stored_metrics"] = stored;
    report["metrics_comparable"] = comparable;
    report["max_metric_discrepancy"] = max_disc;
    report["metrics_match"] = comparable && max_disc <= 1e-9;
    emit_report(report, a.report);
    return 0;
}

struct BaselineArgs {
    std::string input, report;
    double target = 1e-3;
    std::size_t depth_cap = 8, grid_layers_cap = 4, restarts = 2, max_sweeps = 80;
    std::size_t site_dim = 2;
    double fid_tol = 1e-7;
    std::uint64_t seed = 0;
    bool pad = false;
};

int cmd_baseline(const BaselineArgs& a) {
    PreparedInput in = prepare_input(load_matrix(a.input), a.site_dim, a.pad);
    tnd::BaselineConfig cfg;
    cfg.depth_cap = a.depth_cap;
    cfg.grid_layers_cap = a.grid_layers_cap;
    cfg.restarts = a.restarts;
    cfg.max_sweeps = a.max_sweeps;
    cfg.fid_tol = a.fid_tol;
    cfg.seed = a.seed;

    const std::vector<tnd::BondProfile> profiles =
        tnd::baseline_profiles(in.w, in.spec, a.target, cfg);

    ordered_json config;
    config["input"] = a.input;
    config["input_shape"] = input_echo(in);
    config["source_hash"] = tnd::fnv1a_file_hex(a.input);
    config["target_error"] = a.target;
    config["depth_cap"] = a.depth_cap;
    config["grid_layers_cap"] = a.grid_layers_cap;
    config["restarts"] = a.restarts;
    config["max_sweeps"] = a.max_sweeps;
    config["fid_tol"] = a.fid_tol;
    config["seed"] = a.seed;
    config["site_dim"] = a.site_dim;

    ordered_json report = report_skeleton("baseline", config);
    ordered_json arr = ordered_json::array();
    for (const tnd::BondProfile& p : profiles) {
        ordered_json j;
        j["method"] = p.method == tnd::BaselineMethod::disentangler ? "disentangler"
                      : p.method == tnd::BaselineMethod::polar      ? "polar"
                                                                    : "plain_mpo";
        j["target_error"] = p.target_error;
        j["bond_dims"] = p.bond_dims;
        j["circuit_layers"] = p.circuit_layers;
        j["param_count"] = p.param_count;
        j["achieved_error"] = p.achieved_error;
        arr.push_back(std::move(j));
        log_line(j["method"].get<std::string>() + ": params " +
                 std::to_string(p.param_count) + ", achieved " +
                 std::to_string(p.achieved_error));
    }
    report["profiles"] = std::move(arr);
    emit_report(report, a.report);
    return 0;
}

struct EnhanceArgs {
    std::string layer, out, report;
    std::size_t add_layers_u = 0, add_layers_v = 0, new_chi = 0;
    double pad_noise = 0.0;
    std::uint64_t seed = 0;
};

int cmd_enhance(const EnhanceArgs& a) {
    tnd::LoadedFactorized loaded = tnd::load_factorized(a.layer);
    tnd::EnhanceConfig cfg;
    cfg.add_layers_u = a.add_layers_u;
    cfg.add_layers_v = a.add_layers_v;
    cfg.new_chi = a.new_chi == 0 ? loaded.fac.core.max_bond() : a.new_chi;
    cfg.pad_noise = a.pad_noise;
    cfg.seed = a.seed;

    tnd::FactorizedOperator grown = tnd::enhance(loaded.fac, cfg);

    double growth_rel_error = 0.0;
    if (loaded.fac.site_spec.rows() * loaded.fac.site_spec.cols() <= tnd::dense_guard()) {
        const DenseTensor before = tnd::reconstruct(loaded.fac);
        const DenseTensor after = tnd::reconstruct(grown);
        growth_rel_error = tnd::rel_frob_dist(before, after);
    }

    ordered_json config;
    config["layer"] = a.layer;
    config["add_layers_u"] = cfg.add_layers_u;
    config["add_layers_v"] = cfg.add_layers_v;
    config["new_chi"] = cfg.new_chi;
    config["pad_noise"] = cfg.pad_noise;
    config["seed"] = cfg.seed;

    ordered_json metrics;
    metrics["bond_dims"] = grown.core.bond_dims();
    metrics["layers_u"] = grown.u.num_layers();
    metrics["layers_v"] = grown.v_dag.num_layers();
    metrics["param_count"] = param_count_json(tnd::param_count(grown));
    metrics["growth_rel_error"] = growth_rel_error;

    grown.provenance["command"] = "enhance";
    tnd::save_factorized(a.out, grown, config, metrics);
    log_line("wrote " + a.out);

    config["out"] = a.out;
    ordered_json report = report_skeleton("enhance", config);
    report["metrics"] = metrics;
    emit_report(report, a.report);
    return 0;
}

struct RetrainArgs {
    std::string layer, reference, out, report, objective = "matrix_fidelity";
    std::size_t steps = 0, batch_size = 32, site_dim = 2;
    double step_size = 0.05;
    std::uint64_t seed = 0;
    bool pad = false;
};

int cmd_retrain(const RetrainArgs& a) {
    tnd::LoadedFactorized loaded = tnd::load_factorized(a.layer);
    PreparedInput in = prepare_input(load_matrix(a.reference), a.site_dim, a.pad);
    if (!(in.spec == loaded.fac.site_spec))
        throw tnd::validation_error("retrain: reference shape disagrees with the layer");

    tnd::EnhanceConfig cfg;
    cfg.retrain_steps = a.steps;
    cfg.step_size = a.step_size;
    cfg.seed = a.seed;

    tnd::FactorizedOperator result;
    tnd::LossTrace trace;
    if (a.objective == "matrix_fidelity") {
        cfg.objective = tnd::Objective::matrix_fidelity;
        tnd::MPO target =
            tnd::mpo_from_matrix(in.w, in.spec, tnd::near_exact_policy()).first;
        std::tie(result, trace) = tnd::retrain(loaded.fac, target, cfg);
    } else if (a.objective == "data_mse") {
        cfg.objective = tnd::Objective::data_mse;
        std::mt19937_64 rng(tnd::derived_seed(a.seed, 0xD0));
        std::normal_distribution<double> gauss(0.0, 1.0);
        DenseTensor x({in.spec.cols(), a.batch_size});
        for (cplx& v : x.data) v = cplx(gauss(rng), gauss(rng));
        tnd::Dataset data{std::move(x), DenseTensor()};
        data.y = tnd::matmul(in.w, data.x);
        std::tie(result, trace) = tnd::retrain(loaded.fac, data, cfg);
    } else {
        throw tnd::validation_error("--objective must be matrix_fidelity or data_mse");
    }

    tnd::MPO mpo_old = tnd::mpo_from_matrix(in.w, in.spec, tnd::near_exact_policy()).first;
    const double final_err = recompute_rel_error(result, mpo_old, &in.w);
    log_line("retrained " + std::to_string(a.steps) + " steps, final_rel_error " +
             std::to_string(final_err));

    ordered_json config;
    config["layer"] = a.layer;
    config["reference"] = a.reference;
    config["objective"] = a.objective;
    config["steps"] = a.steps;
    config["step_size"] = a.step_size;
    config["batch_size"] = a.batch_size;
    config["seed"] = a.seed;
    config["site_dim"] = a.site_dim;

    ordered_json metrics;
    metrics["final_rel_error"] = final_err;
    metrics["step_losses"] = trace.step_losses;
    metrics["bond_dims"] = result.core.bond_dims();
    metrics["param_count"] = param_count_json(tnd::param_count(result));

    if (!a.out.empty()) {
        result.provenance["command"] = "retrain";
        tnd::save_factorized(a.out, result, config, metrics);
        log_line("wrote " + a.out);
        config["out"] = a.out;
    }

    ordered_json report = report_skeleton("retrain", config);
    report["metrics"] = metrics;
    emit_report(report, a.report);
    return 0;
}

struct SampleArgs {
    std::string layer, which = "u", x_path, report;
    std::vector<std::size_t> shots = {100, 1000, 10000, 100000};
    std::size_t num_seeds = 20;
    std::uint64_t seed = 0;
};

int cmd_sample_study(const SampleArgs& a) {
    tnd::LoadedFactorized loaded = tnd::load_factorized(a.layer);
    const tnd::Circuit* circuit = nullptr;
    if (a.which == "u") {
        circuit = &loaded.fac.u;
    } else if (a.which == "v_dag") {
        circuit = &loaded.fac.v_dag;
    } else {
        throw tnd::validation_error("--which must be u or v_dag");
    }
    if (a.shots.empty()) throw tnd::validation_error("--shots must not be empty");
    if (a.num_seeds < 1) throw tnd::validation_error("--num-seeds must be >= 1");

    std::size_t dim = 1;
    for (std::size_t d : circuit->site_dims) dim *= d;
    DenseTensor x;
    if (a.x_path.empty()) {
        std::mt19937_64 rng(tnd::derived_seed(a.seed, 0x51));
        std::normal_distribution<double> gauss(0.0, 1.0);
        x = DenseTensor({dim});
        for (cplx& v : x.data) v = cplx(gauss(rng), gauss(rng));
    } else {
        x = tnd::read_qten(a.x_path);
        if (x.size() != dim)
            throw tnd::validation_error("--x length disagrees with the circuit");
    }

    std::vector<std::vector<double>> per_seed;
    per_seed.reserve(a.num_seeds);
    for (std::size_t i = 0; i < a.num_seeds; ++i) {
        tnd::ShotStudy st = tnd::shot_noise_study(*circuit, x, a.shots,
                                                  tnd::derived_seed(a.seed, 0x5000 + i));
        per_seed.push_back(st.l2_errors);
    }
    std::vector<double> med(a.shots.size());
    for (std::size_t j = 0; j < a.shots.size(); ++j) {
        std::vector<double> col(a.num_seeds);
        for (std::size_t i = 0; i < a.num_seeds; ++i) col[i] = per_seed[i][j];
        med[j] = tnd::median(col);
    }
    std::vector<double> shots_real(a.shots.begin(), a.shots.end());
    double slope = std::numeric_limits<double>::quiet_NaN();
    bool slope_defined = true;
    for (double v : med)
        if (!(v > 0.0)) slope_defined = false;
    if (a.shots.size() >= 2 && slope_defined)
        slope = tnd::loglog_slope(shots_real, med);
    else
        slope_defined = false;

    ordered_json config;
    config["layer"] = a.layer;
    config["which"] = a.which;
    config["shots"] = a.shots;
    config["num_seeds"] = a.num_seeds;
    config["seed"] = a.seed;
    if (!a.x_path.empty()) config["x"] = a.x_path;

    ordered_json report = report_skeleton("sample-study", config);
    ordered_json metrics;
    metrics["per_seed_l2"] = per_seed;
    metrics["median_l2"] = med;
    metrics["slope_defined"] = slope_defined;
    metrics["slope"] = slope_defined ? ordered_json(slope) : ordered_json(nullptr);
    report["metrics"] = metrics;
    emit_report(report, a.report);
    if (slope_defined) log_line("median log-log slope " + std::to_string(slope));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tensor-network disentangler for dense layers"};
    app.require_subcommand(1);

    std::function<int()> run;

    PlantArgs plant;
    CLI::App* p = app.add_subcommand("plant", "generate a planted ground-truth instance");
    p->add_option("--k", plant.k, "number of sites");
    p->add_option("--site-dim", plant.site_dim, "physical dimension per site");
    p->add_option("--layers", plant.layers, "brickwork layers for both circuits");
    p->add_option("--layers-u", plant.layers_u, "override layers for u");
    p->add_option("--layers-v", plant.layers_v, "override layers for v_dag");
    p->add_option("--chi", plant.chi, "core bond dimension");
    p->add_option("--noise", plant.noise, "relative noise level");
    p->add_option("--seed", plant.seed, "rng seed");
    p->add_option("--out", plant.out, "output .qten for W")->required();
    p->add_option("--truth", plant.truth, "optional manifest path for the ground truth");
    p->add_option("--report", plant.report, "report path (default: stdout)");
    p->callback([&] { run = [&] { return cmd_plant(plant); }; });

    FactorizeArgs fact;
    CLI::App* f = app.add_subcommand("factorize", "classical MPO factorization of W");
    f->add_option("--input", fact.input, "input .qten matrix")->required();
    f->add_option("--chi", fact.chi, "bond cap")->required();
    f->add_option("--site-dim", fact.site_dim, "physical dimension per site");
    f->add_flag("--pad", fact.pad, "zero-pad to the next factorizable shape");
    f->add_option("--out", fact.out, "output manifest path");
    f->add_option("--report", fact.report, "report path (default: stdout)");
    f->callback([&] { run = [&] { return cmd_factorize(fact); }; });

    DisentangleArgs dis;
    CLI::App* d = app.add_subcommand("disentangle", "circuit factorization of W");
    d->add_option("--input", dis.input, "input .qten matrix")->required();
    d->add_option("--layers", dis.layers, "brickwork layers for both circuits");
    d->add_option("--layers-u", dis.layers_u, "override layers for u");
    d->add_option("--layers-v", dis.layers_v, "override layers for v_dag");
    d->add_option("--chi-new", dis.chi_new, "residual core bond cap");
    d->add_option("--restarts", dis.restarts, "optimizer restarts");
    d->add_option("--max-sweeps", dis.max_sweeps, "sweep budget per restart");
    d->add_option("--fid-tol", dis.fid_tol, "fidelity-change convergence tolerance");
    d->add_option("--seed", dis.seed, "rng seed");
    d->add_option("--init", dis.init, "gate init: identity or haar");
    d->add_option("--site-dim", dis.site_dim, "physical dimension per site");
    d->add_flag("--pad", dis.pad, "zero-pad to the next factorizable shape");
    d->add_option("--out", dis.out, "output manifest path");
    d->add_option("--report", dis.report, "report path (default: stdout)");
    d->callback([&] { run = [&] { return cmd_disentangle(dis); }; });

    EvaluateArgs ev;
    CLI::App* e = app.add_subcommand("evaluate", "recompute metrics of a saved layer");
    e->add_option("--layer", ev.layer, "layer manifest")->required();
    e->add_option("--reference", ev.reference, "reference .qten matrix")->required();
    e->add_option("--site-dim", ev.site_dim, "physical dimension per site");
    e->add_flag("--pad", ev.pad, "zero-pad the reference like the original run");
    e->add_option("--report", ev.report, "report path (default: stdout)");
    e->callback([&] { run = [&] { return cmd_evaluate(ev); }; });

    BaselineArgs base;
    CLI::App* b = app.add_subcommand("baseline", "compare factorization methods");
    b->add_option("--input", base.input, "input .qten matrix")->required();
    b->add_option("--target", base.target, "reconstruction error target")->required();
    b->add_option("--depth-cap", base.depth_cap, "max u_p depth in the polar profile");
    b->add_option("--grid-layers-cap", base.grid_layers_cap, "disentangler grid depth cap");
    b->add_option("--restarts", base.restarts, "optimizer restarts");
    b->add_option("--max-sweeps", base.max_sweeps, "sweep budget");
    b->add_option("--fid-tol", base.fid_tol, "convergence tolerance");
    b->add_option("--seed", base.seed, "rng seed");
    b->add_option("--site-dim", base.site_dim, "physical dimension per site");
    b->add_flag("--pad", base.pad, "zero-pad to the next factorizable shape");
    b->add_option("--report", base.report, "report path (default: stdout)");
    b->callback([&] { run = [&] { return cmd_baseline(base); }; });

    EnhanceArgs enh;
    CLI::App* n = app.add_subcommand("enhance", "grow circuit depth and core bonds");
    n->add_option("--layer", enh.layer, "layer manifest")->required();
    n->add_option("--add-layers-u", enh.add_layers_u, "identity layers appended to u");
    n->add_option("--add-layers-v", enh.add_layers_v, "identity layers appended to v_dag");
    n->add_option("--new-chi", enh.new_chi, "new core bond cap (0 keeps current)");
    n->add_option("--pad-noise", enh.pad_noise, "relative noise on padded bond entries");
    n->add_option("--seed", enh.seed, "rng seed");
    n->add_option("--out", enh.out, "output manifest path")->required();
    n->add_option("--report", enh.report, "report path (default: stdout)");
    n->callback([&] { run = [&] { return cmd_enhance(enh); }; });

    RetrainArgs ret;
    CLI::App* r = app.add_subcommand("retrain", "retrain a layer against a reference");
    r->add_option("--layer", ret.layer, "layer manifest")->required();
    r->add_option("--reference", ret.reference, "reference .qten matrix")->required();
    r->add_option("--steps", ret.steps, "retraining sweeps")->required();
    r->add_option("--objective", ret.objective, "matrix_fidelity or data_mse");
    r->add_option("--step-size", ret.step_size, "gradient step size (data_mse)");
    r->add_option("--batch-size", ret.batch_size, "data_mse batch columns");
    r->add_option("--seed", ret.seed, "rng seed");
    r->add_option("--site-dim", ret.site_dim, "physical dimension per site");
    r->add_flag("--pad", ret.pad, "zero-pad the reference");
    r->add_option("--out", ret.out, "output manifest path");
    r->add_option("--report", ret.report, "report path (default: stdout)");
    r->callback([&] { run = [&] { return cmd_retrain(ret); }; });

    SampleArgs smp;
    CLI::App* s = app.add_subcommand("sample-study", "shot-noise study of a layer circuit");
    s->add_option("--layer", smp.layer, "layer manifest")->required();
    s->add_option("--which", smp.which, "circuit: u or v_dag");
    s->add_option("--shots", smp.shots, "shot counts")->delimiter(',');
    s->add_option("--num-seeds", smp.num_seeds, "independent sampling seeds");
    s->add_option("--seed", smp.seed, "base rng seed");
    s->add_option("--x", smp.x_path, "input vector .qten (default: seeded random)");
    s->add_option("--report", smp.report, "report path (default: stdout)");
    s->callback([&] { run = [&] { return cmd_sample_study(smp); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : 1;
    }

    try {
        return run ? run() : 1;
    } catch (const tnd::validation_error& err) {
        log_line(std::string("validation error: ") + err.what());
        return 1;
    } catch (const tnd::guard_error& err) {
        log_line(std::string("guard error: ") + err.what());
        return 1;
    } catch (const tnd::numeric_error& err) {
        log_line(std::string("numeric error: ") + err.what());
        return 2;
    } catch (const std::exception& err) {
        log_line(std::string("error: ") + err.what());
        return 2;
    }
}
