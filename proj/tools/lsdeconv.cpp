// lsdeconv: batch CLI for PSF synthesis, simulation, deconvolution,
// method comparison and regularization-parameter tuning.
//
// Exit codes: 0 success, 2 config error, 3 I/O error, 4 solver error.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "json.hpp"

#include "lsdeconv/metrics.hpp"
#include "lsdeconv/optics.hpp"
#include "lsdeconv/phantom.hpp"
#include "lsdeconv/solver.hpp"
#include "lsdeconv/tuning.hpp"
#include "lsdeconv/volume_io.hpp"

using json = nlohmann::json;
using namespace lsdeconv;
namespace fs = std::filesystem;

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require_keys(const json& obj, const std::string& where,
                  const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ConfigError(where + ": expected a JSON object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

double num(const json& o, const std::string& key, double dflt) {
    if (!o.contains(key)) return dflt;
    if (!o[key].is_number()) throw ConfigError("'" + key + "' must be a number");
    return o[key].get<double>();
}

int integer(const json& o, const std::string& key, int dflt) {
    if (!o.contains(key)) return dflt;
    if (!o[key].is_number_integer()) throw ConfigError("'" + key + "' must be an integer");
    return o[key].get<int>();
}

OpticalConfig parse_optics(const json& cfg) {
    OpticalConfig o;
    if (!cfg.contains("optics")) return o;
    const json& j = cfg["optics"];
    require_keys(j, "optics",
                 {"n", "na_h", "na_l", "lambda_h", "lambda_l", "px_x", "px_y", "step_z",
                  "nx", "ny", "nz", "sheet_x0"});
    o.n = num(j, "n", o.n);
    o.na_h = num(j, "na_h", o.na_h);
    o.na_l = num(j, "na_l", o.na_l);
    o.lambda_h = num(j, "lambda_h", o.lambda_h);
    o.lambda_l = num(j, "lambda_l", o.lambda_l);
    o.px_x = num(j, "px_x", o.px_x);
    o.px_y = num(j, "px_y", o.px_y);
    o.step_z = num(j, "step_z", o.step_z);
    o.nx = integer(j, "nx", o.nx);
    o.ny = integer(j, "ny", o.ny);
    o.nz = integer(j, "nz", o.nz);
    o.sheet_x0 = num(j, "sheet_x0", o.sheet_x0);
    o.validate();
    return o;
}

ZernikeCoeffs parse_zernike(const json& cfg) {
    ZernikeCoeffs z{};
    if (!cfg.contains("zernike")) return z;
    const json& j = cfg["zernike"];
    if (!j.is_array() || j.size() != 15)
        throw ConfigError("zernike: expected an array of 15 coefficients");
    for (int i = 0; i < 15; ++i) z.c[i] = j[i].get<double>();
    z.validate();
    return z;
}

NoiseSpec parse_noise(const json& cfg) {
    NoiseSpec n;
    if (!cfg.contains("noise")) return n;
    const json& j = cfg["noise"];
    require_keys(j, "noise", {"sigma_g", "peak", "seed"});
    n.sigma_g = num(j, "sigma_g", n.sigma_g);
    n.peak = num(j, "peak", n.peak);
    if (j.contains("seed")) n.seed = j["seed"].get<uint64_t>();
    n.validate();
    return n;
}

SolverParams parse_solver(const json& cfg) {
    SolverParams p;
    if (!cfg.contains("solver")) return p;
    const json& j = cfg["solver"];
    require_keys(j, "solver",
                 {"alpha", "sigma", "rho", "max_iters", "gap_tol", "gap_every",
                  "isotropic_tv", "variant", "box_hi"});
    p.alpha = num(j, "alpha", p.alpha);
    p.sigma = num(j, "sigma", p.sigma);
    p.rho = num(j, "rho", p.rho);
    p.max_iters = integer(j, "max_iters", p.max_iters);
    p.gap_tol = num(j, "gap_tol", p.gap_tol);
    p.gap_every = integer(j, "gap_every", p.gap_every);
    if (j.contains("isotropic_tv")) p.isotropic_tv = j["isotropic_tv"].get<bool>();
    p.validate();
    return p;
}

MethodVariant parse_variant(const json& cfg) {
    if (cfg.contains("solver") && cfg["solver"].contains("variant"))
        return variant_from_name(cfg["solver"]["variant"].get<std::string>());
    return MethodVariant::LS_IC;
}

Volume parse_phantom(const json& cfg, const OpticalConfig& oc) {
    if (!cfg.contains("phantom")) throw ConfigError("missing 'phantom' section");
    const json& j = cfg["phantom"];
    require_keys(j, "phantom",
                 {"kind", "grid", "bead_radius", "n_levels", "n_seeds", "seed"});
    const std::string kind = j.value("kind", std::string());
    if (kind == "beads") {
        std::array<int, 3> grid{5, 5, 5};
        if (j.contains("grid")) {
            if (!j["grid"].is_array() || j["grid"].size() != 3)
                throw ConfigError("phantom.grid: expected [gx, gy, gz]");
            for (int i = 0; i < 3; ++i) grid[i] = j["grid"][i].get<int>();
        }
        return make_beads(oc.nx, oc.ny, oc.nz, grid, num(j, "bead_radius", 1.5),
                          oc.pitch());
    }
    if (kind == "steps")
        return make_steps(oc.nx, oc.ny, oc.nz, integer(j, "n_levels", 4), oc.pitch());
    if (kind == "cells")
        return make_cells(oc.nx, oc.ny, oc.nz, integer(j, "n_seeds", 8),
                          j.value("seed", uint64_t(1)), oc.pitch());
    throw ConfigError("phantom.kind must be one of beads|steps|cells");
}

Volume load_vol(const std::string& path) {
    try {
        return load_volume(path);
    } catch (const std::exception& e) {
        throw IoError(e.what());
    }
}

json load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config: " + path);
    json cfg;
    try {
        is >> cfg;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config parse failure: ") + e.what());
    }
    return cfg;
}

fs::path make_run_dir(const std::string& out_flag, const std::string& cmd) {
    fs::path dir;
    if (!out_flag.empty()) {
        dir = out_flag;
    } else {
        std::time_t t = std::time(nullptr);
        char stamp[32];
        std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", std::localtime(&t));
        dir = fs::path("runs") / (std::string(stamp) + "-" + cmd);
    }
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create run directory: " + dir.string());
    return dir;
}

void write_json(const json& j, const fs::path& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path.string());
    os << j.dump(2) << "\n";
}

void write_mips(const Volume& v, const fs::path& dir, const std::string& stem) {
    save_pgm(mip(v, 2), (dir / (stem + "_mip_z.pgm")).string());
    save_pgm(mip(v, 1), (dir / (stem + "_mip_y.pgm")).string());
    save_pgm(mip(v, 0), (dir / (stem + "_mip_x.pgm")).string());
}

json gap_history_json(const ReconResult& r) {
    json hist = json::array();
    for (const auto& g : r.gap_history)
        hist.push_back({{"iter", g.iter},
                        {"normalized_gap", g.normalized_gap},
                        {"gauss_fidelity", g.gauss_fidelity},
                        {"kl_fidelity", g.kl_fidelity},
                        {"wall_ms", g.wall_ms}});
    return {{"iters", r.iters},
            {"final_gap", r.final_gap},
            {"converged", r.converged},
            {"history", hist}};
}

// Load or synthesize the operator pair (h, l). Config precedence:
// explicit input paths, then optics synthesis.
struct Kernels {
    Volume h, l;
};

Kernels get_kernels(const json& cfg, const OpticalConfig& oc) {
    Kernels k;
    const json inputs = cfg.value("input", json::object());
    if (inputs.contains("h")) {
        k.h = load_vol(inputs["h"].get<std::string>());
    } else {
        k.h = detection_psf(oc, parse_zernike(cfg), num(cfg, "sigma_blur", 0.5));
    }
    if (inputs.contains("l")) {
        k.l = load_vol(inputs["l"].get<std::string>());
    } else {
        k.l = lightsheet_profile(oc);
    }
    return k;
}

std::shared_ptr<const LinOp> build_operator(MethodVariant variant, const Kernels& k) {
    if (variant_uses_lightsheet(variant))
        return std::make_shared<LightsheetOperator>(k.l, k.h);
    ConvolutionOperator probe(k.h, Boundary::Zero, 1.0);
    auto est = estimate_op_norm(probe, k.h.nx, k.h.ny, k.h.nz, 400, 1e-8);
    if (!(est.value > 0)) throw std::runtime_error("detection PSF operator is zero");
    return std::make_shared<ConvolutionOperator>(k.h, Boundary::Zero, 1.0 / est.value);
}

const std::set<std::string> kTopKeys = {
    "optics", "zernike", "sigma_blur", "phantom", "noise",  "solver",
    "bounds", "input",   "compare",    "fit",    "box_hi"};

// ---------------------------------------------------------------- commands

int cmd_psf(const json& cfg, const fs::path& dir) {
    OpticalConfig oc = parse_optics(cfg);
    ZernikeCoeffs z = parse_zernike(cfg);
    const double sigma_blur = num(cfg, "sigma_blur", 0.5);
    Volume h = detection_psf(oc, z, sigma_blur);
    Volume l = lightsheet_profile(oc);
    save_volume(h, (dir / "h").string());
    save_volume(l, (dir / "l").string());
    write_mips(h, dir, "h");
    write_mips(l, dir, "l");
    std::cout << "psf: h sum = " << h.sum() << ", l max = " << l.max() << "\n";

    if (cfg.contains("fit")) {
        const json& fj = cfg["fit"];
        require_keys(fj, "fit", {"bead", "bead_radius_um", "max_evals", "restarts"});
        if (!fj.contains("bead")) throw ConfigError("fit.bead path is required");
        Volume bead = load_vol(fj["bead"].get<std::string>());
        PsfFitResult init;
        PsfFitOptions opts;
        opts.max_evals = integer(fj, "max_evals", opts.max_evals);
        opts.restarts = integer(fj, "restarts", opts.restarts);
        PsfFitResult fit =
            fit_psf(bead, num(fj, "bead_radius_um", 0.5), oc, init, opts);
        json out = {{"sigma", fit.sigma},     {"scale", fit.scale},
                    {"shift", fit.shift},     {"residual", fit.residual},
                    {"converged", fit.converged}};
        out["coeffs"] = json::array();
        for (double c : fit.coeffs.c) out["coeffs"].push_back(c);
        write_json(out, dir / "fit.json");
        std::cout << "psf: fit residual = " << fit.residual << "\n";
    }
    return 0;
}

int cmd_simulate(const json& cfg, const fs::path& dir) {
    OpticalConfig oc = parse_optics(cfg);
    NoiseSpec ns = parse_noise(cfg);
    Volume u0 = parse_phantom(cfg, oc);
    Kernels k = get_kernels(cfg, oc);
    LightsheetOperator L(k.l, k.h);
    Volume clean = L.apply(u0);
    auto cr = corrupt(clean, ns);
    save_volume(u0, (dir / "u0").string());
    save_volume(clean, (dir / "f_clean").string());
    save_volume(cr.f, (dir / "f").string());
    save_volume(k.h, (dir / "h").string());
    save_volume(k.l, (dir / "l").string());
    write_mips(cr.f, dir, "f");
    write_json({{"scale", cr.scale},
                {"seed", ns.seed},
                {"sigma_g", ns.sigma_g},
                {"peak", ns.peak},
                {"operator_normalization", L.normalization()}},
               dir / "simulate.json");
    std::cout << "simulate: wrote u0, f_clean, f (scale " << cr.scale << ")\n";
    return 0;
}

Problem problem_from_config(const json& cfg, MethodVariant variant, Volume f,
                            double sigma_g, const Kernels& k) {
    auto op = build_operator(variant, k);
    double box_hi = num(cfg, "box_hi", -1.0);
    if (cfg.contains("solver")) box_hi = num(cfg["solver"], "box_hi", box_hi);
    if (box_hi <= 0) box_hi = 1.5 * std::max(f.max(), 1e-12);
    return build_problem(variant, op, std::move(f), sigma_g, 0.0, box_hi);
}

int cmd_deconvolve(const json& cfg, const fs::path& dir) {
    const json inputs = cfg.value("input", json::object());
    require_keys(inputs, "input", {"f", "u0", "h", "l"});
    if (!inputs.contains("f")) throw ConfigError("input.f is required for deconvolve");
    Volume f = load_vol(inputs["f"].get<std::string>());
    OpticalConfig oc = parse_optics(cfg);
    oc.nx = f.nx; oc.ny = f.ny; oc.nz = f.nz;
    Kernels k = get_kernels(cfg, oc);
    if (!k.h.same_dims(f)) throw ConfigError("PSF dims do not match the data volume");

    MethodVariant variant = parse_variant(cfg);
    SolverParams params = parse_solver(cfg);
    NoiseSpec ns = parse_noise(cfg);
    Problem pb = problem_from_config(cfg, variant, f, ns.sigma_g, k);
    ReconResult r = pdhg_run(pb, params);

    save_volume(r.u, (dir / "u").string());
    if (variant_is_ic(variant)) save_volume(r.v, (dir / "v").string());
    write_mips(r.u, dir, "u");
    json meta = gap_history_json(r);
    meta["variant"] = variant_name(variant);
    meta["alpha"] = params.alpha;
    write_json(meta, dir / "gap_history.json");
    std::cout << "deconvolve[" << variant_name(variant) << "]: iters " << r.iters
              << ", gap " << r.final_gap << (r.converged ? "" : " (not converged)")
              << "\n";
    if (cfg.contains("input") && inputs.contains("u0")) {
        Volume u0 = load_vol(inputs["u0"].get<std::string>());
        auto m = evaluate(r.u, u0);
        write_json({{"l2", m.l2_normalized}, {"ssim", m.ssim}, {"psnr", m.psnr}},
                   dir / "metrics.json");
    }
    return 0;
}

int cmd_compare(const json& cfg, const fs::path& dir) {
    const json inputs = cfg.value("input", json::object());
    require_keys(inputs, "input", {"f", "u0", "h", "l"});
    if (!inputs.contains("f") || !inputs.contains("u0"))
        throw ConfigError("compare needs input.f and input.u0");
    Volume f = load_vol(inputs["f"].get<std::string>());
    Volume u0 = load_vol(inputs["u0"].get<std::string>());
    OpticalConfig oc = parse_optics(cfg);
    oc.nx = f.nx; oc.ny = f.ny; oc.nz = f.nz;
    Kernels k = get_kernels(cfg, oc);

    const json cj = cfg.value("compare", json::object());
    require_keys(cj, "compare", {"variants", "alphas", "discrepancy"});
    std::vector<MethodVariant> variants;
    if (cj.contains("variants"))
        for (const auto& v : cj["variants"])
            variants.push_back(variant_from_name(v.get<std::string>()));
    if (variants.empty())
        variants = {MethodVariant::LS_IC, MethodVariant::LS_L2, MethodVariant::PSF_IC,
                    MethodVariant::PSF_L2};
    std::vector<double> alphas;
    if (cj.contains("alphas"))
        for (const auto& a : cj["alphas"]) alphas.push_back(a.get<double>());
    if (alphas.empty()) alphas = {0.1, 1.0, 10.0};
    const bool use_disc = cj.value("discrepancy", false);

    SolverParams params = parse_solver(cfg);
    NoiseSpec ns = parse_noise(cfg);

    std::ofstream csv(dir / "compare.csv");
    if (!csv) throw IoError("cannot write compare.csv");
    csv << "variant,alpha,selected,l2,ssim,psnr,iters,final_gap,wall_ms\n";
    json table = json::array();

    for (auto variant : variants) {
        Problem pb = problem_from_config(cfg, variant, f, ns.sigma_g, k);
        double selected_alpha = -1.0;
        if (use_disc) {
            NoiseBounds b;
            b.sigma_g = ns.sigma_g;
            b.gamma = poisson_kl_bound(f);
            auto dres = discrepancy_search(pb, params, b, alphas);
            selected_alpha = dres.alpha;
        }
        for (double a : alphas) {
            SolverParams p = params;
            p.alpha = a;
            auto t0 = std::chrono::steady_clock::now();
            ReconResult r = pdhg_run(pb, p);
            const double ms = std::chrono::duration<double, std::milli>(
                                  std::chrono::steady_clock::now() - t0)
                                  .count();
            auto m = evaluate(r.u, u0);
            const bool sel = (a == selected_alpha);
            csv << variant_name(variant) << "," << a << "," << (sel ? 1 : 0) << ","
                << m.l2_normalized << "," << m.ssim << "," << m.psnr << "," << r.iters
                << "," << r.final_gap << "," << ms << "\n";
            table.push_back({{"variant", variant_name(variant)},
                             {"alpha", a},
                             {"selected", sel},
                             {"l2", m.l2_normalized},
                             {"ssim", m.ssim},
                             {"psnr", m.psnr},
                             {"iters", r.iters},
                             {"final_gap", r.final_gap},
                             {"wall_ms", ms}});
            std::cout << variant_name(variant) << " alpha=" << a
                      << " l2=" << m.l2_normalized << " ssim=" << m.ssim << "\n";
        }
    }
    write_json(table, dir / "compare.json");
    return 0;
}

int cmd_tune(const json& cfg, const fs::path& dir) {
    const json inputs = cfg.value("input", json::object());
    require_keys(inputs, "input", {"f", "u0", "h", "l"});
    if (!inputs.contains("f")) throw ConfigError("input.f is required for tune");
    Volume f = load_vol(inputs["f"].get<std::string>());
    OpticalConfig oc = parse_optics(cfg);
    oc.nx = f.nx; oc.ny = f.ny; oc.nz = f.nz;
    Kernels k = get_kernels(cfg, oc);

    MethodVariant variant = parse_variant(cfg);
    SolverParams params = parse_solver(cfg);
    NoiseSpec ns = parse_noise(cfg);

    NoiseBounds bounds;
    bounds.sigma_g = ns.sigma_g;
    bounds.gamma = poisson_kl_bound(f);
    std::vector<double> grid;
    const json bj = cfg.value("bounds", json::object());
    require_keys(bj, "bounds",
                 {"tau_disc", "mode", "alpha_lo", "alpha_hi", "points_per_decade",
                  "alpha_grid"});
    bounds.tau_disc = num(bj, "tau_disc", bounds.tau_disc);
    if (bj.contains("mode")) {
        const std::string m = bj["mode"].get<std::string>();
        if (m == "combined") bounds.mode = DiscrepancyMode::Combined;
        else if (m == "per-fidelity") bounds.mode = DiscrepancyMode::PerFidelity;
        else throw ConfigError("bounds.mode must be combined|per-fidelity");
    }
    if (bj.contains("alpha_grid"))
        for (const auto& a : bj["alpha_grid"]) grid.push_back(a.get<double>());
    else
        grid = log_grid(num(bj, "alpha_lo", 0.01), num(bj, "alpha_hi", 10.0),
                        integer(bj, "points_per_decade", 8));
    bounds.validate();

    Problem pb = problem_from_config(cfg, variant, f, ns.sigma_g, k);
    auto res = discrepancy_search(pb, params, bounds, grid);

    json sweep = json::array();
    for (const auto& e : res.sweep)
        if (e.iters > 0)
            sweep.push_back({{"alpha", e.alpha},
                             {"gauss_fidelity", e.fidelity.gauss_term},
                             {"kl_fidelity", e.fidelity.kl_term},
                             {"combined", e.fidelity.combined},
                             {"accepted", e.accepted},
                             {"iters", e.iters},
                             {"final_gap", e.final_gap}});
    write_json({{"selected_alpha", res.alpha},
                {"criterion_met", res.criterion_met},
                {"gamma", bounds.gamma},
                {"delta", bounds.delta()},
                {"sweep", sweep}},
               dir / "tune.json");
    save_volume(res.recon.u, (dir / "u").string());
    if (variant_is_ic(variant)) save_volume(res.recon.v, (dir / "v").string());
    std::cout << "tune[" << variant_name(variant) << "]: alpha = " << res.alpha
              << (res.criterion_met ? "" : " (criterion not met; smallest grid point)")
              << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"light-sheet deconvolution toolkit"};
    app.require_subcommand(1);
    std::string config_path, out_dir;
    int threads = 0;

    std::vector<std::pair<std::string, std::function<int(const json&, const fs::path&)>>>
        commands = {{"psf", cmd_psf},
                    {"simulate", cmd_simulate},
                    {"deconvolve", cmd_deconvolve},
                    {"compare", cmd_compare},
                    {"tune", cmd_tune}};
    for (auto& [name, fn] : commands) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON config path")->required();
        sub->add_option("--threads", threads, "worker thread cap");
        sub->add_option("--out", out_dir, "output directory (default runs/<stamp>)");
    }

    CLI11_PARSE(app, argc, argv);
    const std::string cmd = app.get_subcommands().front()->get_name();

#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#endif

    try {
        json cfg = load_config(config_path);
        require_keys(cfg, "config", kTopKeys);
        fs::path dir = make_run_dir(out_dir, cmd);
        write_json(cfg, dir / "config.json");  // resolved provenance copy
        for (auto& [name, fn] : commands)
            if (name == cmd) return fn(cfg, dir);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::ios_base::failure& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 4;
    }
}
