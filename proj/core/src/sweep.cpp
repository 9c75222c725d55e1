#include "qitp/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "qitp/errors.hpp"
#include "qitp/propagator.hpp"
#include "qitp/rng.hpp"

namespace qitp {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string fmt_g(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string fmt_f(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::string trim(const std::string& s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double_token(const std::string& raw) {
    const std::string tok = trim(raw);
    if (tok.empty()) throw SchemaError("empty number in beta spec");
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(tok, &pos);
    } catch (const std::exception&) {
        throw SchemaError("not a number in beta spec: '" + tok + "'");
    }
    if (pos != tok.size())
        throw SchemaError("trailing characters in beta spec: '" + tok + "'");
    return v;
}

long parse_count_token(const std::string& raw) {
    const std::string tok = trim(raw);
    std::size_t pos = 0;
    long v = 0;
    try {
        v = std::stol(tok, &pos);
    } catch (const std::exception&) {
        throw SchemaError("grid count is not an integer: '" + tok + "'");
    }
    if (pos != tok.size())
        throw SchemaError("grid count is not an integer: '" + tok + "'");
    return v;
}

void validate_betas(const std::vector<double>& betas) {
    if (betas.empty()) throw SchemaError("betas must not be empty");
    for (double b : betas)
        if (!std::isfinite(b) || b < 0.0)
            throw DomainError("beta values must be non-negative and finite");
}

std::int64_t config_int(const json& v, const char* key) {
    if (!v.is_number_integer() && !v.is_number_unsigned())
        throw SchemaError(std::string("config key '") + key +
                          "' must be an integer");
    return v.get<std::int64_t>();
}

// Thermal expectation of a dense operator against an unnormalized oracle.
double expectation(const ComplexMatrix& op, const GibbsOracle& g) {
    return (op * g.rho).trace().real() / g.z;
}

struct GroundSpace {
    int degeneracy = 0;
    double average(const ComplexMatrix& op, const Eigensystem& eig) const {
        double sum = 0.0;
        for (int i = 0; i < degeneracy; ++i) {
            const ComplexVector v = eig.eigenvectors.col(i);
            sum += (v.adjoint() * op * v)(0, 0).real();
        }
        return sum / degeneracy;
    }
};

GroundSpace ground_space(const Hamiltonian& h) {
    const RealVector& e = h.eigensystem().eigenvalues;
    GroundSpace g;
    g.degeneracy = 1;
    while (g.degeneracy < e.size() &&
           e(g.degeneracy) - e(0) <= 1e-9 * std::max(1.0, std::abs(e(0))))
        ++g.degeneracy;
    return g;
}

SweepRow compute_sweep_row(const Hamiltonian& h, const SweepConfig& config,
                           double e_trial, const Observable* obs, double beta,
                           std::uint64_t seed, ShotRecord* record_out) {
    const QitpParams params{beta, e_trial, config.p};
    std::optional<TrotterPlan> plan;
    if (config.trotter_steps)
        plan = make_trotter_plan(h, beta, *config.trotter_steps);

    ThermalRun run;
    try {
        run = run_thermal_estimation(h, params, obs, config.shots, seed, plan);
    } catch (const InfeasibleParamsError& e) {
        throw InfeasibleParamsError("beta=" + fmt_g(beta) + ": " + e.what());
    }

    SweepRow row;
    row.beta = beta;
    row.z_est = run.z.value;
    row.z_sigma = run.z.sigma;

    const GibbsOracle exact = gibbs_oracle(h, beta, e_trial);
    row.z_exact = exact.z;
    if (plan) {
        const GibbsOracle trotter = trotterized_gibbs_oracle(h, *plan, e_trial);
        row.z_ref = trotter.z;
        if (obs) row.obs_ref = expectation(obs->dense(), trotter);
        row.success_prob = trotter_success_probability(h, *plan, config.p);
    } else {
        row.z_ref = exact.z;
        if (obs) row.obs_ref = expectation(obs->dense(), exact);
        row.success_prob = success_probability(h, params);
    }
    if (obs) {
        row.obs_exact = expectation(obs->dense(), exact);
        if (run.obs) {
            row.obs_est = run.obs->value;
            row.obs_sigma = run.obs->sigma;
        }
    }
    row.n_qubits = run.n_qubits;
    row.gates = run.gates;
    if (record_out) *record_out = run.record;
    return row;
}

std::string csv_opt(const std::optional<double>& v) {
    return v ? fmt_g(*v) : std::string();
}

json json_opt(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

// Fixed-width helper for the stdout tables.
std::string pad(const std::string& s, std::size_t width) {
    if (s.size() >= width) return s + "  ";
    return s + std::string(width - s.size() + 2, ' ');
}

struct PlotSeries {
    std::string title;
    std::vector<double> x;
    std::vector<double> est;
    std::vector<double> sigma;
    std::vector<double> ref_x;
    std::vector<double> ref_y;
};

void render_panel(std::ostringstream& out, const PlotSeries& s, double x0,
                  double panel_w, double panel_h) {
    const double ml = 58.0, mr = 14.0, mt = 26.0, mb = 42.0;
    const double iw = panel_w - ml - mr;
    const double ih = panel_h - mt - mb;

    double xmin = s.x.front(), xmax = s.x.front();
    for (double v : s.x) {
        xmin = std::min(xmin, v);
        xmax = std::max(xmax, v);
    }
    if (xmax - xmin < 1e-12) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    double ymin = std::numeric_limits<double>::infinity();
    double ymax = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < s.est.size(); ++i) {
        ymin = std::min(ymin, s.est[i] - s.sigma[i]);
        ymax = std::max(ymax, s.est[i] + s.sigma[i]);
    }
    for (double v : s.ref_y) {
        ymin = std::min(ymin, v);
        ymax = std::max(ymax, v);
    }
    if (!(ymax - ymin > 1e-12)) {
        ymin -= 0.5;
        ymax += 0.5;
    }
    const double ypad = 0.08 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    auto px = [&](double v) {
        return ml + iw * (v - xmin) / (xmax - xmin);
    };
    auto py = [&](double v) {
        return mt + ih * (1.0 - (v - ymin) / (ymax - ymin));
    };
    auto c2 = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        return std::string(buf);
    };
    auto tick_label = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3g", v);
        return std::string(buf);
    };

    out << "<g class=\"panel\" transform=\"translate(" << c2(x0) << ",0)\">\n";
    out << "  <text x=\"" << c2(ml + iw / 2) << "\" y=\"16\" "
        << "text-anchor=\"middle\" font-weight=\"bold\">" << s.title
        << "</text>\n";
    out << "  <rect x=\"" << c2(ml) << "\" y=\"" << c2(mt) << "\" width=\""
        << c2(iw) << "\" height=\"" << c2(ih)
        << "\" fill=\"none\" stroke=\"#444\"/>\n";

    for (int t = 0; t <= 3; ++t) {
        const double xv = xmin + (xmax - xmin) * t / 3.0;
        const double yv = ymin + (ymax - ymin) * t / 3.0;
        out << "  <text x=\"" << c2(px(xv)) << "\" y=\"" << c2(mt + ih + 14)
            << "\" text-anchor=\"middle\">" << tick_label(xv) << "</text>\n";
        out << "  <text x=\"" << c2(ml - 6) << "\" y=\"" << c2(py(yv) + 4)
            << "\" text-anchor=\"end\">" << tick_label(yv) << "</text>\n";
    }
    out << "  <text x=\"" << c2(ml + iw / 2) << "\" y=\""
        << c2(panel_h - 10) << "\" text-anchor=\"middle\">beta</text>\n";

    out << "  <polyline class=\"ref\" fill=\"none\" stroke=\"#888\" "
        << "stroke-dasharray=\"5 4\" points=\"";
    for (std::size_t i = 0; i < s.ref_x.size(); ++i) {
        if (i) out << ' ';
        out << c2(px(s.ref_x[i])) << ',' << c2(py(s.ref_y[i]));
    }
    out << "\"/>\n";

    for (std::size_t i = 0; i < s.x.size(); ++i) {
        const double cx = px(s.x[i]);
        out << "  <line class=\"err\" x1=\"" << c2(cx) << "\" y1=\""
            << c2(py(s.est[i] - s.sigma[i])) << "\" x2=\"" << c2(cx)
            << "\" y2=\"" << c2(py(s.est[i] + s.sigma[i]))
            << "\" stroke=\"#1f6feb\"/>\n";
        out << "  <circle class=\"pt\" cx=\"" << c2(cx) << "\" cy=\""
            << c2(py(s.est[i])) << "\" r=\"3\" fill=\"#1f6feb\"/>\n";
    }
    out << "</g>\n";
}

} // namespace

SweepConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw SchemaError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw SchemaError("config must be a JSON object");

    static const std::set<std::string> known = {
        "hamiltonian", "observables", "betas",      "e_trial",
        "p",           "trotter_steps", "shots",    "shots_list",
        "reps",        "seed",        "out",        "plot",
        "verbose_shots"};
    for (const auto& item : j.items())
        if (!known.count(item.key()))
            throw SchemaError("unknown config key: " + item.key());

    SweepConfig c;
    try {
        if (j.contains("hamiltonian"))
            c.hamiltonian_path = j.at("hamiltonian").get<std::string>();
        if (j.contains("observables"))
            c.observables = j.at("observables").get<std::vector<std::string>>();
        if (j.contains("betas"))
            c.betas = j.at("betas").get<std::vector<double>>();
        if (j.contains("e_trial")) {
            const json& v = j.at("e_trial");
            if (v.is_string()) {
                if (v.get<std::string>() != "auto")
                    throw SchemaError(
                        "e_trial must be a number or the string \"auto\"");
            } else if (v.is_number()) {
                c.e_trial = v.get<double>();
            } else {
                throw SchemaError(
                    "e_trial must be a number or the string \"auto\"");
            }
        }
        if (j.contains("p")) c.p = j.at("p").get<double>();
        if (j.contains("trotter_steps"))
            c.trotter_steps =
                static_cast<int>(config_int(j.at("trotter_steps"), "trotter_steps"));
        if (j.contains("shots")) {
            const std::int64_t v = config_int(j.at("shots"), "shots");
            if (v < 1) throw DomainError("shots must be at least 1");
            c.shots = static_cast<std::uint64_t>(v);
        }
        if (j.contains("shots_list")) {
            if (!j.at("shots_list").is_array())
                throw SchemaError("shots_list must be an array");
            for (const json& v : j.at("shots_list")) {
                const std::int64_t n = config_int(v, "shots_list");
                if (n < 1) throw DomainError("shots_list entries must be at least 1");
                c.shots_list.push_back(static_cast<std::uint64_t>(n));
            }
        }
        if (j.contains("reps")) {
            const std::int64_t v = config_int(j.at("reps"), "reps");
            if (v < 1) throw DomainError("reps must be at least 1");
            c.reps = static_cast<int>(v);
        }
        if (j.contains("seed")) {
            const json& v = j.at("seed");
            if (!v.is_number_integer() && !v.is_number_unsigned())
                throw SchemaError("seed must be an integer");
            if (v.is_number_integer() && v.get<std::int64_t>() < 0)
                throw DomainError("seed must be non-negative");
            c.seed = v.get<std::uint64_t>();
        }
        if (j.contains("out")) c.out = j.at("out").get<std::string>();
        if (j.contains("plot")) c.plot = j.at("plot").get<bool>();
        if (j.contains("verbose_shots"))
            c.verbose_shots = j.at("verbose_shots").get<bool>();
    } catch (const json::exception& e) {
        throw SchemaError(std::string("bad config value: ") + e.what());
    }

    validate_betas(c.betas);
    if (!(c.p > 0.0) || c.p > 1.0)
        throw DomainError("p must lie in (0, 1]");
    if (c.trotter_steps && *c.trotter_steps < 1)
        throw DomainError("trotter_steps must be at least 1");
    return c;
}

std::string serialize_config(const SweepConfig& c) {
    ordered_json j;
    j["hamiltonian"] = c.hamiltonian_path;
    if (!c.observables.empty()) j["observables"] = c.observables;
    j["betas"] = c.betas;
    if (c.e_trial)
        j["e_trial"] = *c.e_trial;
    else
        j["e_trial"] = "auto";
    j["p"] = c.p;
    if (c.trotter_steps) j["trotter_steps"] = *c.trotter_steps;
    j["shots"] = c.shots;
    if (!c.shots_list.empty()) j["shots_list"] = c.shots_list;
    j["reps"] = c.reps;
    j["seed"] = c.seed;
    if (!c.out.empty()) j["out"] = c.out;
    j["plot"] = c.plot;
    j["verbose_shots"] = c.verbose_shots;
    return j.dump(2) + "\n";
}

std::string default_out_base(const SweepConfig& config,
                             const std::string& subcommand) {
    if (!config.out.empty()) return config.out;
    const std::string name = "qitp_" + subcommand;
    const char* dir = std::getenv(OUT_DIR_ENV);
    if (dir && *dir) return (std::filesystem::path(dir) / name).string();
    return name;
}

std::vector<double> parse_beta_spec(const std::string& spec) {
    if (trim(spec).empty()) throw SchemaError("empty beta spec");
    std::vector<double> betas;
    if (spec.find(':') != std::string::npos) {
        const std::vector<std::string> parts = split(spec, ':');
        if (parts.size() != 3)
            throw SchemaError("beta grid must be start:stop:count");
        const double start = parse_double_token(parts[0]);
        const double stop = parse_double_token(parts[1]);
        const long count = parse_count_token(parts[2]);
        if (count < 1) throw SchemaError("beta grid count must be at least 1");
        if (count == 1) {
            betas.push_back(start);
        } else {
            for (long i = 0; i < count; ++i)
                betas.push_back(start + (stop - start) * static_cast<double>(i) /
                                            static_cast<double>(count - 1));
        }
    } else {
        for (const std::string& tok : split(spec, ','))
            betas.push_back(parse_double_token(tok));
    }
    validate_betas(betas);
    return betas;
}

Observable resolve_observable(const std::string& name_or_path,
                              const Hamiltonian& h) {
    if (name_or_path == "hamiltonian")
        return Observable(h.dense(), h.label());
    if (name_or_path.size() > 2 && name_or_path.rfind("sz", 0) == 0 &&
        std::all_of(name_or_path.begin() + 2, name_or_path.end(),
                    [](unsigned char ch) { return std::isdigit(ch); })) {
        const int k = std::stoi(name_or_path.substr(2));
        if (k < 1 || k > h.n_sys())
            throw BadIndexError("observable " + name_or_path +
                                " is out of range for " +
                                std::to_string(h.n_sys()) + " qubits");
        return sigma_z_observable(k - 1, h.n_sys());
    }
    Observable o = load_observable_file(name_or_path);
    if (o.n_sys() != h.n_sys())
        throw BadDimensionError("observable acts on " +
                                std::to_string(o.n_sys()) +
                                " qubits but the model has " +
                                std::to_string(h.n_sys()));
    return o;
}

SweepResult run_sweep(const SweepConfig& config) {
    validate_betas(config.betas);
    const Hamiltonian h = load_hamiltonian_file(config.hamiltonian_path);
    const double e_trial = config.e_trial.value_or(h.ground_energy());
    std::optional<Observable> obs;
    if (!config.observables.empty())
        obs = resolve_observable(config.observables.front(), h);

    std::vector<double> betas = config.betas;
    std::sort(betas.begin(), betas.end());

    SweepResult res;
    res.rows.resize(betas.size());
    res.hamiltonian = h.label();
    res.observable = obs ? obs->label() : std::string();
    res.p = config.p;
    res.e_trial = e_trial;
    res.trotter_steps = config.trotter_steps;
    res.shots = config.shots;
    res.seed = config.seed;

    std::vector<ShotRecord> records(betas.size());
    std::vector<std::exception_ptr> failures(betas.size());
    std::atomic<std::size_t> next{0};

    auto work = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= betas.size()) return;
            try {
                res.rows[i] = compute_sweep_row(
                    h, config, e_trial, obs ? &*obs : nullptr, betas[i],
                    derive_seed(config.seed, i), &records[i]);
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    };

    const std::size_t n_threads =
        std::min({betas.size(),
                  static_cast<std::size_t>(
                      std::max(1u, std::thread::hardware_concurrency())),
                  std::size_t{8}});
    if (n_threads <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(work);
        for (std::thread& t : pool) t.join();
    }
    // Rethrow the lowest-beta failure so the reported error is deterministic.
    for (const std::exception_ptr& e : failures)
        if (e) std::rethrow_exception(e);

    std::vector<double> zv, zs, zr, ov, os_, orf;
    for (const SweepRow& row : res.rows) {
        if (row.z_sigma > 0.0) {
            zv.push_back(row.z_est);
            zs.push_back(row.z_sigma);
            zr.push_back(row.z_ref);
        }
        if (row.obs_est && row.obs_sigma && *row.obs_sigma > 0.0 && row.obs_ref) {
            ov.push_back(*row.obs_est);
            os_.push_back(*row.obs_sigma);
            orf.push_back(*row.obs_ref);
        }
    }
    res.chi2_z_rows = static_cast<int>(zv.size());
    if (!zv.empty()) res.chi2_z = reduced_chi2(zv, zs, zr);
    res.chi2_obs_rows = static_cast<int>(ov.size());
    if (!ov.empty()) res.chi2_obs = reduced_chi2(ov, os_, orf);

    if (!config.out.empty()) {
        write_text_file(config.out + ".csv", sweep_csv(res));
        write_text_file(config.out + ".json", sweep_json(res));
        if (config.plot) write_text_file(config.out + ".svg", emit_plot(res));
        if (config.verbose_shots) {
            std::vector<std::pair<double, ShotRecord>> paired;
            paired.reserve(betas.size());
            for (std::size_t i = 0; i < betas.size(); ++i)
                paired.emplace_back(betas[i], records[i]);
            write_text_file(config.out + "_shots.json", shots_json(paired));
        }
    }
    return res;
}

ExactResult run_exact(const SweepConfig& config) {
    validate_betas(config.betas);
    const Hamiltonian h = load_hamiltonian_file(config.hamiltonian_path);
    const double e_trial = config.e_trial.value_or(h.ground_energy());
    std::optional<Observable> obs;
    if (!config.observables.empty())
        obs = resolve_observable(config.observables.front(), h);

    std::vector<double> betas = config.betas;
    std::sort(betas.begin(), betas.end());
    const double dim = std::pow(2.0, h.n_sys());

    ExactResult res;
    res.hamiltonian = h.label();
    res.observable = obs ? obs->label() : std::string();
    res.e_trial = e_trial;
    res.trotter_steps = config.trotter_steps;

    for (double beta : betas) {
        const GibbsOracle g = gibbs_oracle(h, beta, e_trial);
        ExactRow row;
        row.beta = beta;
        row.z = g.z;
        row.success_prob = g.z / dim;
        if (obs) row.obs = expectation(obs->dense(), g);
        if (config.trotter_steps) {
            const TrotterPlan plan =
                make_trotter_plan(h, beta, *config.trotter_steps);
            const GibbsOracle t = trotterized_gibbs_oracle(h, plan, e_trial);
            row.z_trotter = t.z;
            if (obs) row.obs_trotter = expectation(obs->dense(), t);
        }
        res.rows.push_back(row);
    }

    // Asymptote: only states at the trial energy keep weight as beta grows,
    // so z tends to the ground degeneracy when e_trial sits on the ground
    // energy, to zero below it, and diverges above it. The thermal
    // expectation itself always settles on the ground-space average.
    const RealVector& energies = h.eigensystem().eigenvalues;
    const GroundSpace gs = ground_space(h);
    ExactRow inf_row;
    inf_row.beta = std::numeric_limits<double>::infinity();
    const double e0 = energies(0);
    if (std::abs(e_trial - e0) <= 1e-12 * std::max(1.0, std::abs(e0)))
        inf_row.z = static_cast<double>(gs.degeneracy);
    else if (e_trial < e0)
        inf_row.z = 0.0;
    else
        inf_row.z = std::numeric_limits<double>::infinity();
    inf_row.success_prob = inf_row.z / dim;
    if (obs) inf_row.obs = gs.average(obs->dense(), h.eigensystem());
    res.rows.push_back(inf_row);

    if (!config.out.empty())
        write_text_file(config.out + ".csv", exact_csv(res));
    return res;
}

UncertaintyTable run_uncertainty(const SweepConfig& config) {
    validate_betas(config.betas);
    const Hamiltonian h = load_hamiltonian_file(config.hamiltonian_path);
    if (config.observables.empty())
        throw SchemaError("the uncertainty study needs at least one observable");
    std::vector<Observable> os;
    os.reserve(config.observables.size());
    for (const std::string& name : config.observables)
        os.push_back(resolve_observable(name, h));
    const std::vector<std::uint64_t> shots_list =
        config.shots_list.empty() ? std::vector<std::uint64_t>{config.shots}
                                  : config.shots_list;

    const UncertaintyTable t = uncertainty_study(
        {h}, os, config.betas, shots_list, config.reps, config.p, config.seed);
    if (!config.out.empty())
        write_text_file(config.out + ".csv", uncertainty_csv(t));
    return t;
}

CompileReport compile_dump(const SweepConfig& config) {
    validate_betas(config.betas);
    const Hamiltonian h = load_hamiltonian_file(config.hamiltonian_path);
    const double e_trial = config.e_trial.value_or(h.ground_energy());
    const double beta = config.betas.front();

    std::optional<Observable> obs;
    if (!config.observables.empty())
        obs = resolve_observable(config.observables.front(), h);

    PipelineSpec spec;
    spec.params = QitpParams{beta, e_trial, config.p};
    if (config.trotter_steps)
        spec.plan = make_trotter_plan(h, beta, *config.trotter_steps);
    spec.observable = obs ? &*obs : nullptr;

    const Circuit c = build_thermal_pipeline(h, spec);
    CompileReport rep;
    rep.dump = dump_circuit(c);
    rep.n_qubits = c.n_qubits;
    rep.gates = gate_counts(c);
    rep.n_beta = pipeline_n_beta(c);

    if (!config.out.empty())
        write_text_file(config.out + ".json", rep.dump);
    return rep;
}

std::string render_sweep_table(const SweepResult& r) {
    std::ostringstream out;
    out << "hamiltonian: " << r.hamiltonian;
    if (!r.observable.empty()) out << "   observable: " << r.observable;
    out << "\n";
    out << "p: " << fmt_g(r.p) << "   e_trial: " << fmt_g(r.e_trial);
    if (r.trotter_steps) out << "   trotter_steps: " << *r.trotter_steps;
    out << "   shots: " << r.shots << "   seed: " << r.seed << "\n\n";

    const bool with_obs = !r.observable.empty();
    out << pad("beta", 8) << pad("z_est", 10) << pad("z_sigma", 10)
        << pad("z_ref", 10) << pad("z_exact", 10);
    if (with_obs)
        out << pad("obs_est", 10) << pad("obs_sigma", 10) << pad("obs_exact", 10);
    out << pad("success", 9) << pad("qubits", 6) << "cnots\n";
    for (const SweepRow& row : r.rows) {
        out << pad(fmt_f(row.beta), 8) << pad(fmt_f(row.z_est), 10)
            << pad(fmt_f(row.z_sigma), 10) << pad(fmt_f(row.z_ref), 10)
            << pad(fmt_f(row.z_exact), 10);
        if (with_obs)
            out << pad(row.obs_est ? fmt_f(*row.obs_est) : "-", 10)
                << pad(row.obs_sigma ? fmt_f(*row.obs_sigma) : "-", 10)
                << pad(row.obs_exact ? fmt_f(*row.obs_exact) : "-", 10);
        out << pad(fmt_f(row.success_prob), 9)
            << pad(std::to_string(row.n_qubits), 6) << row.gates.cnot << "\n";
    }
    out << "\n";
    out << "chi2_z: " << (r.chi2_z ? fmt_f(*r.chi2_z) : "-") << " ("
        << r.chi2_z_rows << " rows)";
    if (with_obs)
        out << "   chi2_obs: " << (r.chi2_obs ? fmt_f(*r.chi2_obs) : "-")
            << " (" << r.chi2_obs_rows << " rows)";
    out << "\n";
    return out.str();
}

std::string sweep_csv(const SweepResult& r) {
    std::ostringstream out;
    out << "beta,z_est,z_sigma,z_ref,z_exact,obs_est,obs_sigma,obs_ref,"
           "obs_exact,success_prob,n_qubits,cnots,total_gates\n";
    for (const SweepRow& row : r.rows) {
        out << fmt_g(row.beta) << ',' << fmt_g(row.z_est) << ','
            << fmt_g(row.z_sigma) << ',' << fmt_g(row.z_ref) << ','
            << fmt_g(row.z_exact) << ',' << csv_opt(row.obs_est) << ','
            << csv_opt(row.obs_sigma) << ',' << csv_opt(row.obs_ref) << ','
            << csv_opt(row.obs_exact) << ',' << fmt_g(row.success_prob) << ','
            << row.n_qubits << ',' << row.gates.cnot << ','
            << row.gates.total() << "\n";
    }
    return out.str();
}

std::string sweep_json(const SweepResult& r) {
    ordered_json j;
    j["hamiltonian"] = r.hamiltonian;
    j["observable"] = r.observable;
    j["p"] = r.p;
    j["e_trial"] = r.e_trial;
    j["trotter_steps"] =
        r.trotter_steps ? json(*r.trotter_steps) : json(nullptr);
    j["shots"] = r.shots;
    j["seed"] = r.seed;
    j["chi2_z"] = json_opt(r.chi2_z);
    j["chi2_z_rows"] = r.chi2_z_rows;
    j["chi2_obs"] = json_opt(r.chi2_obs);
    j["chi2_obs_rows"] = r.chi2_obs_rows;
    j["rows"] = ordered_json::array();
    for (const SweepRow& row : r.rows) {
        ordered_json rj;
        rj["beta"] = row.beta;
        rj["z_est"] = row.z_est;
        rj["z_sigma"] = row.z_sigma;
        rj["z_ref"] = row.z_ref;
        rj["z_exact"] = row.z_exact;
        rj["obs_est"] = json_opt(row.obs_est);
        rj["obs_sigma"] = json_opt(row.obs_sigma);
        rj["obs_ref"] = json_opt(row.obs_ref);
        rj["obs_exact"] = json_opt(row.obs_exact);
        rj["success_prob"] = row.success_prob;
        rj["n_qubits"] = row.n_qubits;
        rj["gates"] = {{"hadamard", row.gates.hadamard},
                       {"cnot", row.gates.cnot},
                       {"ry", row.gates.ry},
                       {"unitary", row.gates.unitary},
                       {"measure", row.gates.measure},
                       {"total", row.gates.total()}};
        j["rows"].push_back(std::move(rj));
    }
    return j.dump(2) + "\n";
}

std::string render_exact_table(const ExactResult& r) {
    std::ostringstream out;
    out << "hamiltonian: " << r.hamiltonian;
    if (!r.observable.empty()) out << "   observable: " << r.observable;
    out << "   e_trial: " << fmt_g(r.e_trial);
    if (r.trotter_steps) out << "   trotter_steps: " << *r.trotter_steps;
    out << "\n\n";

    const bool with_obs = !r.observable.empty();
    const bool with_trotter = r.trotter_steps.has_value();
    out << pad("beta", 8) << pad("z", 12);
    if (with_obs) out << pad("obs", 12);
    out << pad("success", 9);
    if (with_trotter) {
        out << pad("z_trotter", 12);
        if (with_obs) out << pad("obs_trotter", 12);
    }
    out << "\n";
    for (const ExactRow& row : r.rows) {
        out << pad(std::isinf(row.beta) ? "inf" : fmt_f(row.beta), 8)
            << pad(fmt_f(row.z), 12);
        if (with_obs) out << pad(row.obs ? fmt_f(*row.obs) : "-", 12);
        out << pad(fmt_f(row.success_prob), 9);
        if (with_trotter) {
            out << pad(row.z_trotter ? fmt_f(*row.z_trotter) : "-", 12);
            if (with_obs)
                out << pad(row.obs_trotter ? fmt_f(*row.obs_trotter) : "-", 12);
        }
        out << "\n";
    }
    return out.str();
}

std::string exact_csv(const ExactResult& r) {
    std::ostringstream out;
    out << "beta,z,obs,success_prob,z_trotter,obs_trotter\n";
    for (const ExactRow& row : r.rows) {
        out << fmt_g(row.beta) << ',' << fmt_g(row.z) << ','
            << csv_opt(row.obs) << ',' << fmt_g(row.success_prob) << ','
            << csv_opt(row.z_trotter) << ',' << csv_opt(row.obs_trotter)
            << "\n";
    }
    return out.str();
}

std::string render_uncertainty_table(const UncertaintyTable& t) {
    std::ostringstream out;
    out << pad("hamiltonian", 12) << pad("observable", 11) << pad("method", 8)
        << pad("beta", 7) << pad("shots", 8) << pad("reps", 5)
        << pad("mean", 10) << pad("empirical", 10) << pad("reported", 10)
        << "exact\n";
    for (const UncertaintyRow& row : t.rows) {
        out << pad(row.hamiltonian, 12) << pad(row.observable, 11)
            << pad(row.method, 8) << pad(fmt_f(row.beta), 7)
            << pad(std::to_string(row.shots), 8)
            << pad(std::to_string(row.reps), 5) << pad(fmt_f(row.mean_value), 10)
            << pad(fmt_f(row.empirical_sigma), 10)
            << pad(fmt_f(row.mean_reported_sigma), 10) << fmt_f(row.exact)
            << "\n";
    }
    return out.str();
}

std::string uncertainty_csv(const UncertaintyTable& t) {
    std::ostringstream out;
    out << "hamiltonian,observable,method,beta,shots,reps,mean_value,"
           "empirical_sigma,mean_reported_sigma,exact\n";
    for (const UncertaintyRow& row : t.rows) {
        out << row.hamiltonian << ',' << row.observable << ',' << row.method
            << ',' << fmt_g(row.beta) << ',' << row.shots << ',' << row.reps
            << ',' << fmt_g(row.mean_value) << ',' << fmt_g(row.empirical_sigma)
            << ',' << fmt_g(row.mean_reported_sigma) << ',' << fmt_g(row.exact)
            << "\n";
    }
    return out.str();
}

std::string emit_plot(const SweepResult& r) {
    if (r.rows.empty()) throw EmptyResultError("nothing to plot");

    PlotSeries z;
    z.title = "Z";
    for (const SweepRow& row : r.rows) {
        z.x.push_back(row.beta);
        z.est.push_back(row.z_est);
        z.sigma.push_back(row.z_sigma);
        z.ref_x.push_back(row.beta);
        z.ref_y.push_back(row.z_ref);
    }

    PlotSeries o;
    o.title = r.observable.empty() ? "obs" : r.observable;
    for (const SweepRow& row : r.rows) {
        if (row.obs_est) {
            o.x.push_back(row.beta);
            o.est.push_back(*row.obs_est);
            o.sigma.push_back(row.obs_sigma.value_or(0.0));
        }
        if (row.obs_ref) {
            o.ref_x.push_back(row.beta);
            o.ref_y.push_back(*row.obs_ref);
        }
    }
    const bool with_obs = !o.x.empty();

    const double panel_w = 420.0;
    const double panel_h = 300.0;
    const double width = with_obs ? 2 * panel_w : panel_w;

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << panel_h << "\" viewBox=\"0 0 " << width << " "
        << panel_h << "\" font-family=\"monospace\" font-size=\"11\">\n";
    out << "<rect width=\"" << width << "\" height=\"" << panel_h
        << "\" fill=\"white\"/>\n";
    render_panel(out, z, 0.0, panel_w, panel_h);
    if (with_obs) render_panel(out, o, panel_w, panel_w, panel_h);
    out << "</svg>\n";
    return out.str();
}

std::string shots_json(
    const std::vector<std::pair<double, ShotRecord>>& records) {
    ordered_json j = ordered_json::array();
    for (const auto& [beta, rec] : records) {
        ordered_json rj;
        rj["beta"] = beta;
        rj["seed"] = rec.seed;
        rj["n_shots"] = rec.n_shots;
        ordered_json counts = ordered_json::object();
        for (const auto& [key, n] : rec.counts) counts[key] = n;
        rj["counts"] = std::move(counts);
        j.push_back(std::move(rj));
    }
    return j.dump(2) + "\n";
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    f.flush();
    if (!f) throw IoError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    if (f.bad()) throw IoError("read failed: " + path);
    return ss.str();
}

} // namespace qitp
