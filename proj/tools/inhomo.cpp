// Command-line driver: model validation, free energy, phase scans,
// thresholds, limiting spectra, outlier prediction and finite-N
// simulation. Exit codes: 0 success, 2 validation error, 3 I/O error,
// 4 numeric non-convergence.

#include "inhomo/io.hpp"
#include "inhomo/replica.hpp"
#include "inhomo/simulate.hpp"
#include "inhomo/spectral.hpp"
#include "inhomo/thresholds.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace inhomo;

struct Args {
    std::string spec_path;
    std::string out_path;
    std::string dump_path;
    std::string grid = "";
    std::uint64_t seed = 1;
    int nodes = 61;
    int N = 1000;
    double eta = 1e-6;
    double damping = 0.5;
};

std::vector<double> parse_grid(const std::string& g) {
    double a = 0.0, b = 0.0;
    int steps = 0;
    if (std::sscanf(g.c_str(), "%lf:%lf:%d", &a, &b, &steps) != 3 ||
        steps < 2 || b <= a)
        throw SpecError("grid must be a:b:steps with steps >= 2 and b > a");
    std::vector<double> xs(steps);
    for (int i = 0; i < steps; ++i)
        xs[i] = a + (b - a) * i / (steps - 1);
    return xs;
}

// The QVE/spectral profile of the score-transformed data: the Fisher
// information when a channel is present, the profile itself otherwise.
NoiseProfile effective_profile(const ModelSpec& m) {
    return m.channel ? fisher_information(*m.channel) : m.profile;
}

void emit(const Args& args, const json& j) {
    if (args.out_path.empty()) {
        std::cout << j.dump(2) << "\n";
        return;
    }
    std::ofstream out(args.out_path);
    if (!out) throw IoError("cannot open output file: " + args.out_path);
    out << j.dump(2) << "\n";
}

FixedPointOptions fp_options(const Args& args) {
    FixedPointOptions opt;
    opt.damping = args.damping;
    opt.quad.nodes = args.nodes;
    return opt;
}

json state_json(const OverlapState& st) {
    json q = json::array();
    for (const auto& m : st.Q) q.push_back(to_json(m));
    return q;
}

int cmd_validate(const Args& args) {
    ModelSpec m = load_model_spec(args.spec_path);
    NoiseProfile profile = effective_profile(m);
    ProfileValidation rep = validate_noise_profile(profile, profile.n);

    // empirical bound on the QVE solution along a horizontal line
    double bound = 0.0;
    try {
        for (double x = -3.0; x <= 3.0; x += 0.25) {
            QveResult r = qve_solve(profile, Complex(x, 0.5));
            bound = std::max(bound, r.m.cwiseAbs().maxCoeff());
        }
        rep.empirical_m_bound = bound;
    } catch (const NumericError&) {
        rep.failures.push_back("QVE probe did not converge");
        rep.passed = false;
    }

    json j;
    j["psd"] = rep.psd;
    j["min_eigenvalue"] = rep.min_eigenvalue;
    j["max_entry"] = rep.max_entry;
    j["irreducible"] = rep.irreducible;
    j["power"] = rep.power;
    j["empirical_m_bound"] = rep.empirical_m_bound;
    j["passed"] = rep.passed;
    j["failures"] = rep.failures;
    emit(args, j);
    return rep.passed ? 0 : 2;
}

int cmd_free_energy(const Args& args) {
    ModelSpec m = load_model_spec(args.spec_path);
    NoiseProfile profile = effective_profile(m);
    FreeEnergyResult fe = free_energy(profile, m.prior, fp_options(args));
    json j;
    j["phi"] = fe.phi_star;
    j["q"] = state_json(fe.q_star);
    j["mmse"] = mmse(fe.q_star, m.prior, profile);
    json branches = json::array();
    for (const auto& b : fe.branches) {
        json bj;
        bj["phi"] = b.phi;
        bj["q"] = state_json(b.state);
        bj["residual"] = b.residual;
        bj["iterations"] = b.iterations;
        bj["converged"] = b.converged;
        branches.push_back(bj);
    }
    j["branches"] = branches;
    emit(args, j);
    return 0;
}

int cmd_phase_scan(const Args& args) {
    ModelSpec m = load_model_spec(args.spec_path);
    if (!m.family_shape)
        throw SpecError("phase-scan needs a family.shape in the spec");
    if (args.grid.empty()) throw SpecError("phase-scan needs --grid");
    ProfileFamily family{m.profile.rho, *m.family_shape};
    ScanResult scan =
        phase_scan(family, m.prior, parse_grid(args.grid), fp_options(args));

    if (!args.out_path.empty()) {
        CsvWriter csv(args.out_path,
                      {"t", "op_norm", "phi_star", "phi_branch_0",
                       "phi_branch_1", "mmse", "q_norm", "classification",
                       "bbp_outlier"});
        for (const auto& r : scan.rows) {
            double b0 = r.phi_branches.empty() ? 0.0 : r.phi_branches[0];
            double b1 =
                r.phi_branches.size() < 2 ? b0 : r.phi_branches[1];
            csv.row({format_double(r.t), format_double(r.op_norm),
                     format_double(r.phi_star), format_double(b0),
                     format_double(b1), format_double(r.mmse),
                     format_double(r.q_norm), to_string(r.classification),
                     r.bbp_outlier ? "1" : "0"});
        }
    }
    json j;
    j["transition_found"] = scan.transition_found;
    if (scan.transition_found) {
        j["t_star"] = scan.t_star;
        j["op_norm_star"] = scan.op_norm_star;
        j["first_order"] = scan.first_order;
        j["q_jump"] = scan.q_jump;
    }
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_thresholds(const Args& args) {
    ModelSpec m = load_model_spec(args.spec_path);
    NoiseProfile profile = effective_profile(m);
    ThresholdReport rep = recovery_bounds(profile, m.prior);
    GapResult gap = gap_check(profile);
    json j;
    j["op_norm_it"] = rep.op_norm_it;
    j["lower_bound"] = rep.lower_bound;
    j["upper_bound"] = rep.upper_bound;
    j["bbp_norm"] = rep.bbp_norm;
    j["bbp_threshold"] = rep.bbp_threshold;
    j["classification"] = to_string(rep.classification);
    j["centered"] = rep.centered;
    j["gap"] = {{"lhs", gap.lhs}, {"rhs", gap.rhs},
                {"equality", gap.equality}};
    emit(args, j);
    return 0;
}

int cmd_spectrum(const Args& args) {
    ModelSpec m = load_model_spec(args.spec_path);
    NoiseProfile profile = effective_profile(m);
    std::vector<SupportInterval> edges = support_edges(profile);
    std::vector<double> xs;
    if (!args.grid.empty()) {
        xs = parse_grid(args.grid);
    } else {
        double lo = edges.front().lo - 0.5, hi = edges.back().hi + 0.5;
        for (int i = 0; i < 1000; ++i)
            xs.push_back(lo + (hi - lo) * i / 999);
    }
    std::vector<DensityPoint> table = density(profile, xs, args.eta);
    if (!args.out_path.empty()) {
        CsvWriter csv(args.out_path, {"x", "rho"});
        for (const auto& p : table)
            csv.row({format_double(p.x), format_double(p.rho)});
    }
    json j;
    json ivs = json::array();
    for (const auto& e : edges) ivs.push_back({{"lo", e.lo}, {"hi", e.hi}});
    j["support"] = ivs;
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_outliers(const Args& args) {
    ModelSpec m = load_model_spec(args.spec_path);
    NoiseProfile profile = effective_profile(m);
    OutlierReport rep = outlier_predict(profile, m.prior);
    if (!args.out_path.empty()) {
        CsvWriter csv(args.out_path, {"direction", "gamma", "lambda"});
        for (size_t d = 0; d < rep.directions.size(); ++d) {
            const auto& dir = rep.directions[d];
            double gamma = dir.gammas.maxCoeff();
            for (double lam : dir.outliers)
                csv.row({std::to_string(d), format_double(gamma),
                         format_double(lam)});
        }
    }
    json j;
    json ivs = json::array();
    for (const auto& e : rep.support)
        ivs.push_back({{"lo", e.lo}, {"hi", e.hi}});
    j["support"] = ivs;
    json dirs = json::array();
    for (const auto& dir : rep.directions) {
        json dj;
        dj["theta"] = dir.theta;
        dj["gammas"] = std::vector<double>(
            dir.gammas.data(), dir.gammas.data() + dir.gammas.size());
        dj["outliers"] = dir.outliers;
        dj["degenerate"] = dir.degenerate;
        dirs.push_back(dj);
    }
    j["directions"] = dirs;
    j["any_outlier"] = rep.any_outlier();
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_simulate(const Args& args) {
    ModelSpec m = load_model_spec(args.spec_path);
    SimConfig config{args.N, args.seed};
    Matrix signal = sample_signal(m.prior, config);
    Matrix mat;
    if (m.channel) {
        Matrix data = sample_channel_data(*m.channel, signal, config);
        mat = effective_matrix(*m.channel, data, config);
    } else {
        mat = sample_spiked(m.profile, signal, config) /
              std::sqrt(static_cast<double>(args.N));
    }
    if (!args.dump_path.empty()) write_matrix_binary(args.dump_path, mat);
    Vector spectrum = empirical_spectrum(mat);
    if (!args.out_path.empty()) {
        CsvWriter csv(args.out_path, {"eigenvalue"});
        for (int i = 0; i < spectrum.size(); ++i)
            csv.row({format_double(spectrum(i))});
    }
    json j;
    j["N"] = args.N;
    j["seed"] = args.seed;
    j["min_eigenvalue"] = spectrum(0);
    j["max_eigenvalue"] = spectrum(spectrum.size() - 1);
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_universality_check(const Args& args) {
    ModelSpec m = load_model_spec(args.spec_path);
    if (!m.channel)
        throw SpecError("universality-check needs a channel in the spec");
    SimConfig config{args.N, args.seed};
    Matrix signal = sample_signal(m.prior, config);

    Matrix data = sample_channel_data(*m.channel, signal, config);
    Matrix eff = effective_matrix(*m.channel, data, config);
    Vector spec1 = empirical_spectrum(std::move(eff));

    // matched Gaussian model: same Fisher profile, Gaussian noise
    NoiseProfile fi = fisher_information(*m.channel);
    ChannelFamily gch = gaussian_channel(fi);
    Matrix gdata = sample_channel_data(gch, signal,
                                       SimConfig{args.N, args.seed + 1});
    Matrix geff = effective_matrix(gch, gdata, config);
    Vector spec2 = empirical_spectrum(std::move(geff));

    std::vector<SupportInterval> edges = support_edges(fi);
    auto o1 = top_outlier(spec1, edges);
    auto o2 = top_outlier(spec2, edges);

    json j;
    j["ks_distance"] = ks_distance(spec1, spec2);
    j["outlier_channel"] = o1.has_value();
    j["outlier_gaussian"] = o2.has_value();
    if (o1) j["outlier_channel_value"] = o1->value;
    if (o2) j["outlier_gaussian_value"] = o2->value;
    j["outliers_agree"] = o1.has_value() == o2.has_value();
    emit(args, j);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Replica free energy, detectability thresholds and "
                 "limiting spectra for block-inhomogeneous spiked matrix "
                 "models"};
    app.require_subcommand(1);

    Args args;
    std::string cmd_name;
    auto add_common = [&](CLI::App* sub, bool needs_spec = true) {
        auto* opt = sub->add_option("--spec", args.spec_path,
                                    "model spec JSON path");
        if (needs_spec) opt->required();
        sub->add_option("--out", args.out_path, "output file path");
        sub->add_option("--dump", args.dump_path,
                        "binary matrix dump path (simulate)");
        sub->add_option("--grid", args.grid, "grid as a:b:steps");
        sub->add_option("--seed", args.seed, "RNG seed (64-bit)");
        sub->add_option("--nodes", args.nodes,
                        "quadrature nodes per axis (odd)");
        sub->add_option("--N", args.N, "matrix size for simulation");
        sub->add_option("--eta", args.eta,
                        "imaginary offset for density evaluation");
        sub->add_option("--damping", args.damping,
                        "fixed-point damping in (0,1]");
        sub->callback([&, sub] { cmd_name = sub->get_name(); });
    };
    for (const char* name :
         {"validate", "free-energy", "phase-scan", "thresholds", "spectrum",
          "outliers", "simulate", "universality-check"})
        add_common(app.add_subcommand(name, ""));

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_name == "validate") return cmd_validate(args);
        if (cmd_name == "free-energy") return cmd_free_energy(args);
        if (cmd_name == "phase-scan") return cmd_phase_scan(args);
        if (cmd_name == "thresholds") return cmd_thresholds(args);
        if (cmd_name == "spectrum") return cmd_spectrum(args);
        if (cmd_name == "outliers") return cmd_outliers(args);
        if (cmd_name == "simulate") return cmd_simulate(args);
        if (cmd_name == "universality-check")
            return cmd_universality_check(args);
        std::cerr << "unknown command\n";
        return 2;
    } catch (const inhomo::IoError& e) {
        std::cout << inhomo::json{{"error", {{"type", "io"},
                                             {"message", e.what()}}}}
                         .dump()
                  << "\n";
        return 3;
    } catch (const inhomo::NumericError& e) {
        std::cout << inhomo::json{{"error", {{"type", "numeric"},
                                             {"message", e.what()}}}}
                         .dump()
                  << "\n";
        return 4;
    } catch (const inhomo::SpecError& e) {
        std::cout << inhomo::json{{"error", {{"type", "validation"},
                                             {"message", e.what()}}}}
                         .dump()
                  << "\n";
        return 2;
    }
}
