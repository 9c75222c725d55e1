#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qitp/estimator.hpp"

namespace qitp {

// One configuration drives all four subcommands; a JSON config file mirrors
// the flags and explicitly passed flags win over it.
struct SweepConfig {
    std::string hamiltonian_path;
    std::vector<std::string> observables; // paths or builtin names (sz<k>, hamiltonian)
    std::vector<double> betas = {0.0};
    std::optional<double> e_trial;        // nullopt = ground energy of H
    double p = 1.0;
    std::optional<int> trotter_steps;
    std::uint64_t shots = 2000;
    std::vector<std::uint64_t> shots_list; // uncertainty study; falls back to {shots}
    int reps = 100;
    std::uint64_t seed = 1;
    std::string out;                      // output basename; see default_out_base
    bool plot = false;
    bool verbose_shots = false;
};

SweepConfig parse_config(const std::string& json_text);
std::string serialize_config(const SweepConfig& config);

// Environment variable naming the default output directory.
inline constexpr const char* OUT_DIR_ENV = "QITP_OUT_DIR";

// config.out if set; otherwise $QITP_OUT_DIR/qitp_<subcommand> or ./qitp_<subcommand>.
std::string default_out_base(const SweepConfig& config, const std::string& subcommand);

// "0,0.5,1" (explicit list) or "start:stop:count" (inclusive linear grid).
std::vector<double> parse_beta_spec(const std::string& spec);

// Builtin observable names resolve first; anything else is read as a file.
Observable resolve_observable(const std::string& name_or_path, const Hamiltonian& h);

struct SweepRow {
    double beta = 0.0;
    double z_est = 0.0;
    double z_sigma = 0.0;
    double z_ref = 0.0;     // chi^2 reference: Trotterized when a plan is active
    double z_exact = 0.0;   // non-Trotter oracle value
    std::optional<double> obs_est;
    std::optional<double> obs_sigma;
    std::optional<double> obs_ref;
    std::optional<double> obs_exact;
    double success_prob = 0.0;
    int n_qubits = 0;
    GateCounts gates;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::string hamiltonian;
    std::string observable;           // empty when none
    double p = 1.0;
    double e_trial = 0.0;
    std::optional<int> trotter_steps;
    std::uint64_t shots = 0;
    std::uint64_t seed = 0;
    // Reduced chi^2 over rows with nonzero sigma; count of rows used.
    std::optional<double> chi2_z;
    int chi2_z_rows = 0;
    std::optional<double> chi2_obs;
    int chi2_obs_rows = 0;
};

// Beta points run on a worker pool; each row's RNG stream derives from
// (seed, row index) so the result is independent of scheduling. When
// config.out is set, writes <out>.csv and <out>.json, plus <out>.svg with
// plot and <out>_shots.json with verbose_shots.
SweepResult run_sweep(const SweepConfig& config);

struct ExactRow {
    double beta = 0.0; // +inf marks the ground-state asymptote row
    double z = 0.0;
    std::optional<double> obs;
    double success_prob = 0.0; // at p = 1: z / 2^{n_sys}
    std::optional<double> z_trotter;
    std::optional<double> obs_trotter;
};

struct ExactResult {
    std::vector<ExactRow> rows;
    std::string hamiltonian;
    std::string observable;
    double e_trial = 0.0;
    std::optional<int> trotter_steps;
};

// Oracle-only table; appends the beta -> infinity row (ground-space averages).
// When config.out is set, writes <out>.csv.
ExactResult run_exact(const SweepConfig& config);

// Repeated-sampling comparison of the two observable estimators over the
// config's beta and shots grids; shots_list falls back to {shots}. When
// config.out is set, writes <out>.csv.
UncertaintyTable run_uncertainty(const SweepConfig& config);

struct CompileReport {
    std::string dump; // circuit dump document
    int n_qubits = 0;
    GateCounts gates;
    int n_beta = 0;
};

// Compiles the pipeline at betas[0]. When config.out is set, writes the
// circuit document to <out>.json.
CompileReport compile_dump(const SweepConfig& config);

// ---------------------------------------------------------------------------
// Rendering. All writers are deterministic: fixed column orders, fixed float
// formatting, no timestamps.
// ---------------------------------------------------------------------------

std::string render_sweep_table(const SweepResult& r);
std::string sweep_csv(const SweepResult& r);
std::string sweep_json(const SweepResult& r);

std::string render_exact_table(const ExactResult& r);
std::string exact_csv(const ExactResult& r);

std::string render_uncertainty_table(const UncertaintyTable& t);
std::string uncertainty_csv(const UncertaintyTable& t);

// Self-contained SVG: points with 1-sigma error bars for the estimates, the
// oracle curve dashed, one panel for Z and one per observable.
std::string emit_plot(const SweepResult& r);

std::string shots_json(const std::vector<std::pair<double, ShotRecord>>& records);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

} // namespace qitp
