#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "qitp/errors.hpp"
#include "qitp/sweep.hpp"

namespace {

struct FlagValues {
    std::string config_path;
    std::string hamiltonian;
    std::vector<std::string> observables;
    std::string beta_spec;
    std::string e_trial;
    double p = 1.0;
    int trotter_steps = 1;
    std::uint64_t shots = 2000;
    int reps = 100;
    std::uint64_t seed = 1;
    std::string out;
    bool plot = false;
    bool verbose_shots = false;
};

void add_common_flags(CLI::App* cmd, FlagValues& v) {
    cmd->add_option("--config", v.config_path,
                    "JSON config file; explicit flags override its values");
    cmd->add_option("--hamiltonian", v.hamiltonian,
                    "Hamiltonian document path");
    cmd->add_option("--observable", v.observables,
                    "observable: sz<k>, hamiltonian, or a document path "
                    "(repeatable)");
    cmd->add_option("--beta", v.beta_spec,
                    "comma list '0,0.5,1' or inclusive grid 'start:stop:count'");
    cmd->add_option("--e-trial", v.e_trial,
                    "trial energy, or 'auto' for the ground energy");
    cmd->add_option("--p", v.p, "dilation strength in (0, 1]");
    cmd->add_option("--trotter-steps", v.trotter_steps,
                    "first-order factorization steps over the pair terms");
    cmd->add_option("--shots", v.shots, "samples per sweep point");
    cmd->add_option("--reps", v.reps,
                    "repetitions per cell of the uncertainty study");
    cmd->add_option("--seed", v.seed, "master RNG seed");
    cmd->add_option("--out", v.out,
                    "output basename; defaults to qitp_<subcommand> under "
                    "$QITP_OUT_DIR or the working directory");
    cmd->add_flag("--plot", v.plot, "also write an SVG figure (sweep)");
    cmd->add_flag("--verbose-shots", v.verbose_shots,
                  "also write the raw shot records (sweep)");
}

double parse_e_trial(const std::string& text) {
    std::size_t pos = 0;
    double value = 0.0;
    try {
        value = std::stod(text, &pos);
    } catch (const std::exception&) {
        throw qitp::SchemaError("--e-trial must be a number or 'auto'");
    }
    if (pos != text.size())
        throw qitp::SchemaError("--e-trial must be a number or 'auto'");
    return value;
}

qitp::SweepConfig build_config(const CLI::App* cmd, const FlagValues& v) {
    qitp::SweepConfig c;
    if (cmd->count("--config") > 0)
        c = qitp::parse_config(qitp::read_text_file(v.config_path));
    if (cmd->count("--hamiltonian")) c.hamiltonian_path = v.hamiltonian;
    if (cmd->count("--observable")) c.observables = v.observables;
    if (cmd->count("--beta")) c.betas = qitp::parse_beta_spec(v.beta_spec);
    if (cmd->count("--e-trial")) {
        if (v.e_trial == "auto")
            c.e_trial.reset();
        else
            c.e_trial = parse_e_trial(v.e_trial);
    }
    if (cmd->count("--p")) c.p = v.p;
    if (cmd->count("--trotter-steps")) c.trotter_steps = v.trotter_steps;
    if (cmd->count("--shots")) c.shots = v.shots;
    if (cmd->count("--reps")) c.reps = v.reps;
    if (cmd->count("--seed")) c.seed = v.seed;
    if (cmd->count("--out")) c.out = v.out;
    if (v.plot) c.plot = true;
    if (v.verbose_shots) c.verbose_shots = true;

    if (c.shots < 1) throw qitp::DomainError("shots must be at least 1");
    if (c.reps < 1) throw qitp::DomainError("reps must be at least 1");
    if (c.trotter_steps && *c.trotter_steps < 1)
        throw qitp::DomainError("trotter-steps must be at least 1");
    if (!(c.p > 0.0) || c.p > 1.0)
        throw qitp::DomainError("p must lie in (0, 1]");
    return c;
}

void print_compile_report(const qitp::CompileReport& rep,
                          const std::string& out_base) {
    std::cout << "n_qubits: " << rep.n_qubits << "\n"
              << "post_selections: " << rep.n_beta << "\n"
              << "hadamard: " << rep.gates.hadamard << "\n"
              << "cnot: " << rep.gates.cnot << "\n"
              << "ry: " << rep.gates.ry << "\n"
              << "unitary: " << rep.gates.unitary << "\n"
              << "measure: " << rep.gates.measure << "\n"
              << "total: " << rep.gates.total() << "\n"
              << "circuit: " << out_base << ".json\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Thermal-state preparation by dilated imaginary-time propagation: "
        "sampled sweeps, oracle tables, circuit compilation, and estimator "
        "calibration."};
    app.require_subcommand(1);

    FlagValues v;
    CLI::App* sweep_cmd = app.add_subcommand(
        "sweep", "sample a beta sweep and compare against the oracle");
    CLI::App* exact_cmd = app.add_subcommand(
        "exact", "oracle-only table over beta, with the asymptote row");
    CLI::App* compile_cmd = app.add_subcommand(
        "compile", "build the pipeline circuit and report gate counts");
    CLI::App* unc_cmd = app.add_subcommand(
        "uncertainty", "repeated-sampling comparison of the two observable "
                       "estimators");
    for (CLI::App* cmd : {sweep_cmd, exact_cmd, compile_cmd, unc_cmd})
        add_common_flags(cmd, v);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (sweep_cmd->parsed()) {
            qitp::SweepConfig c = build_config(sweep_cmd, v);
            c.out = qitp::default_out_base(c, "sweep");
            const qitp::SweepResult res = qitp::run_sweep(c);
            std::cout << qitp::render_sweep_table(res);
        } else if (exact_cmd->parsed()) {
            qitp::SweepConfig c = build_config(exact_cmd, v);
            c.out = qitp::default_out_base(c, "exact");
            const qitp::ExactResult res = qitp::run_exact(c);
            std::cout << qitp::render_exact_table(res);
        } else if (compile_cmd->parsed()) {
            qitp::SweepConfig c = build_config(compile_cmd, v);
            c.out = qitp::default_out_base(c, "compile");
            const qitp::CompileReport rep = qitp::compile_dump(c);
            print_compile_report(rep, c.out);
        } else {
            qitp::SweepConfig c = build_config(unc_cmd, v);
            c.out = qitp::default_out_base(c, "uncertainty");
            const qitp::UncertaintyTable t = qitp::run_uncertainty(c);
            std::cout << qitp::render_uncertainty_table(t);
        }
    } catch (const qitp::Error& e) {
        std::cerr << "error[" << e.code() << "]: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error[internal]: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
