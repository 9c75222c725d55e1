#include "qitp/estimator.hpp"

#include <algorithm>
#include <cmath>

#include "qitp/rng.hpp"

namespace qitp {

namespace {

bool is_success_key(const std::string& key, std::size_t n_beta) {
    for (std::size_t i = 0; i < n_beta; ++i)
        if (key[i] != '0')
            return false;
    return true;
}

double mean_of(const std::vector<double>& xs) {
    double acc = 0.0;
    for (double x : xs)
        acc += x;
    return acc / static_cast<double>(xs.size());
}

double sample_sd_of(const std::vector<double>& xs) {
    const double m = mean_of(xs);
    double acc = 0.0;
    for (double x : xs)
        acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

// measuring Y in the computational basis: rotate by H S^dagger first
ComplexMatrix y_basis_rotation() {
    ComplexMatrix m(2, 2);
    const double r = 1.0 / std::sqrt(2.0);
    m(0, 0) = r;
    m(0, 1) = std::complex<double>(0.0, -r);
    m(1, 0) = r;
    m(1, 1) = std::complex<double>(0.0, r);
    return m;
}

// One Pauli string of the expansion: the identity term carries only its
// coefficient, every other term owns the outcome distribution of a pipeline
// that records the string's support in the right basis.
struct PauliTermSampler {
    std::string str;
    double coeff = 0.0;
    bool identity = false;
    std::vector<std::pair<std::string, double>> dist;
    std::size_t n_beta = 1;
};

std::vector<PauliTermSampler> build_pauli_terms(
    const Hamiltonian& h, const QitpParams& params, const Observable& o,
    const std::optional<TrotterPlan>& plan) {
    const int n = h.n_sys();
    const std::string identity(static_cast<std::size_t>(n), 'I');

    PipelineSpec spec;
    spec.params = params;
    spec.plan = plan;
    const Circuit base = build_thermal_pipeline(h, spec);
    const std::size_t n_beta =
        plan ? static_cast<std::size_t>(plan->n_qitp_ancillas) : 1;

    std::vector<PauliTermSampler> terms;
    for (const auto& [str, coeff] : pauli_decompose(o.dense())) {
        if (std::abs(coeff) < tol::PAULI_PRUNE)
            continue;
        PauliTermSampler term;
        term.str = str;
        term.coeff = coeff;
        term.n_beta = n_beta;
        if (str == identity) {
            term.identity = true;
            terms.push_back(std::move(term));
            continue;
        }
        Circuit c = base;
        for (int q = 0; q < n; ++q) {
            const char axis = str[static_cast<std::size_t>(q)];
            if (axis == 'I')
                continue;
            if (axis == 'X')
                c.gates.push_back(Gate::h(q));
            else if (axis == 'Y')
                c.gates.push_back(Gate::unitary(y_basis_rotation(), {q}));
            c.gates.push_back(Gate::mrecord(q));
        }
        term.dist = outcome_distribution(c);
        terms.push_back(std::move(term));
    }
    return terms;
}

Estimate pauli_estimate_from_samples(const std::vector<PauliTermSampler>& terms,
                                     std::uint64_t shots_per_term,
                                     std::uint64_t seed) {
    if (shots_per_term == 0)
        throw EmptyResultError("needs at least one shot per string");
    Estimate e;
    e.method = "pauli";
    double var = 0.0;
    std::uint64_t stream = 0;
    for (const PauliTermSampler& term : terms) {
        if (term.identity) {
            e.value += term.coeff;
            continue;
        }
        const ShotRecord rec = sample_from_distribution(
            term.dist, shots_per_term, derive_seed(seed, stream));
        ++stream;
        e.n_shots += shots_per_term;

        std::uint64_t plus = 0, survived = 0;
        for (const auto& [key, count] : rec.counts) {
            if (!is_success_key(key, term.n_beta))
                continue;
            int parity = 0;
            for (std::size_t b = term.n_beta; b < key.size(); ++b)
                parity ^= key[b] - '0';
            survived += count;
            if (!parity)
                plus += count;
        }
        if (survived == 0)
            throw NoSuccessesError("no shots survived post-selection for " +
                                   term.str);
        const double phat =
            static_cast<double>(plus) / static_cast<double>(survived);
        double sig;
        if (plus == 0 || plus == survived) {
            sig = 2.0 * wilson_sigma(plus, survived);
            e.boundary = true;
        } else {
            sig = 2.0 * std::sqrt(phat * (1.0 - phat) /
                                  static_cast<double>(survived));
        }
        e.value += term.coeff * (2.0 * phat - 1.0);
        var += term.coeff * term.coeff * sig * sig;
    }
    e.sigma = std::sqrt(var);
    return e;
}

} // namespace

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

ShotRecord sample_from_distribution(
    const std::vector<std::pair<std::string, double>>& dist,
    std::uint64_t n_shots, std::uint64_t seed) {
    if (dist.empty())
        throw EmptyResultError("cannot sample an empty distribution");
    double total = 0.0;
    for (const auto& [key, p] : dist) {
        if (!std::isfinite(p) || p < 0.0)
            throw DomainError("distribution probabilities must be non-negative");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-6)
        throw DomainError("distribution must sum to one");

    std::vector<double> cdf(dist.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        acc += dist[i].second / total;
        cdf[i] = acc;
    }
    cdf.back() = 1.0;

    ShotRecord out;
    out.n_shots = n_shots;
    out.seed = seed;
    Rng rng(seed);
    for (std::uint64_t s = 0; s < n_shots; ++s) {
        const double u = rng.next_double();
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        const std::size_t idx =
            std::min(dist.size() - 1,
                     static_cast<std::size_t>(it - cdf.begin()));
        ++out.counts[dist[idx].first];
    }
    return out;
}

ShotRecord sample(const Circuit& c, std::uint64_t n_shots, std::uint64_t seed) {
    return sample_from_distribution(outcome_distribution(c), n_shots, seed);
}

// ---------------------------------------------------------------------------
// Estimators
// ---------------------------------------------------------------------------

double wilson_sigma(std::uint64_t k, std::uint64_t n) {
    if (n == 0)
        throw DomainError("wilson width needs at least one trial");
    if (k > n)
        throw DomainError("successes cannot exceed trials");
    const double kk = static_cast<double>(k), nn = static_cast<double>(n);
    return std::sqrt(kk * (nn - kk) / nn + 0.25) / (nn + 1.0);
}

Estimate estimate_partition(const ShotRecord& record, int n_sys, double p,
                            int n_beta) {
    if (record.n_shots == 0 || record.counts.empty())
        throw EmptyResultError("record holds no shots");
    if (n_sys < 1 || n_beta < 1)
        throw BadSizeError("need at least one system qubit and one fragment");
    if (!(p > 0.0) || p > 1.0)
        throw DomainError("p must lie in (0, 1]");

    std::uint64_t successes = 0;
    for (const auto& [key, count] : record.counts) {
        if (key.size() < static_cast<std::size_t>(n_beta))
            throw BadSizeError("record keys shorter than the post-selection count");
        if (is_success_key(key, static_cast<std::size_t>(n_beta)))
            successes += count;
    }

    const double n = static_cast<double>(record.n_shots);
    const double phat = static_cast<double>(successes) / n;
    const double scale = std::pow(2.0, n_sys) / std::pow(p, n_beta);

    Estimate e;
    e.value = scale * phat;
    e.n_shots = record.n_shots;
    e.method = "partition";
    if (successes == 0 || successes == record.n_shots) {
        e.boundary = true;
        e.sigma = scale * wilson_sigma(successes, record.n_shots);
    } else {
        e.sigma = scale * std::sqrt(phat * (1.0 - phat) / n);
    }
    return e;
}

ComplexMatrix dilate_observable(const Observable& o) {
    if (o.degenerate())
        throw DegenerateObservableError("observable spectrum has zero spread");
    const double lo = o.lambda_min(), spread = o.spread();
    return matrix_func(o.eigensystem(), [lo, spread](double x) {
        return std::sqrt(std::clamp((x - lo) / spread, 0.0, 1.0));
    });
}

ComplexMatrix dilated_observable_unitary(const Observable& o) {
    if (o.degenerate())
        throw DegenerateObservableError("observable spectrum has zero spread");
    const double lo = o.lambda_min(), spread = o.spread();
    const ComplexMatrix a = dilate_observable(o);
    const ComplexMatrix s = matrix_func(o.eigensystem(), [lo, spread](double x) {
        const double frac = std::clamp((x - lo) / spread, 0.0, 1.0);
        return std::sqrt(1.0 - frac);
    });
    const long d = a.rows();
    ComplexMatrix u(2 * d, 2 * d);
    u.topLeftCorner(d, d) = a;
    u.topRightCorner(d, d) = s;
    u.bottomLeftCorner(d, d) = -s;
    u.bottomRightCorner(d, d) = a;
    return u;
}

Estimate estimate_observable_ancilla(const ShotRecord& record,
                                     const Observable& o) {
    if (record.n_shots == 0 || record.counts.empty())
        throw EmptyResultError("record holds no shots");
    if (o.degenerate())
        throw DegenerateObservableError("observable spectrum has zero spread");

    const std::size_t len = record.counts.begin()->first.size();
    if (len < 2)
        throw BadSizeError(
            "record needs post-selection bits and an observable bit");
    const std::size_t n_beta = len - 1;

    std::uint64_t k00 = 0, surviving = 0;
    for (const auto& [key, count] : record.counts) {
        if (key.size() != len)
            throw BadSizeError("record keys have inconsistent lengths");
        if (!is_success_key(key, n_beta))
            continue;
        surviving += count;
        if (key.back() == '0')
            k00 += count;
    }
    if (surviving == 0)
        throw NoSuccessesError("no shots survived post-selection");

    const double phat =
        static_cast<double>(k00) / static_cast<double>(surviving);
    Estimate e;
    e.value = phat * o.spread() + o.lambda_min();
    e.n_shots = record.n_shots;
    e.method = "ancilla";
    if (k00 == 0 || k00 == surviving) {
        e.boundary = true;
        e.sigma = o.spread() * wilson_sigma(k00, surviving);
    } else {
        e.sigma = o.spread() *
                  std::sqrt(phat * (1.0 - phat) / static_cast<double>(surviving));
    }
    return e;
}

Estimate estimate_observable_pauli(const Hamiltonian& h,
                                   const QitpParams& params,
                                   const Observable& o,
                                   std::uint64_t shots_per_term,
                                   std::uint64_t seed,
                                   const std::optional<TrotterPlan>& plan) {
    if (o.n_sys() != h.n_sys())
        throw BadSizeError("observable size does not match the hamiltonian");
    if (o.degenerate()) {
        Estimate e;
        e.value = o.lambda_min();
        e.method = "pauli";
        return e;
    }
    return pauli_estimate_from_samples(build_pauli_terms(h, params, o, plan),
                                       shots_per_term, seed);
}

ThermalRun run_thermal_estimation(const Hamiltonian& h, const QitpParams& params,
                                  const Observable* obs, std::uint64_t n_shots,
                                  std::uint64_t seed,
                                  const std::optional<TrotterPlan>& plan) {
    const bool circuit_obs = obs != nullptr && !obs->degenerate();
    PipelineSpec spec;
    spec.params = params;
    spec.plan = plan;
    spec.observable = circuit_obs ? obs : nullptr;
    const Circuit c = build_thermal_pipeline(h, spec);

    ThermalRun run;
    run.record = sample(c, n_shots, seed);
    run.gates = gate_counts(c);
    run.n_qubits = c.n_qubits;
    run.z = estimate_partition(run.record, h.n_sys(), params.p,
                               plan ? plan->n_qitp_ancillas : 1);
    if (plan) {
        // The raw success fraction estimates Tr(M M^dagger) with each factor
        // referenced to its own term's ground energy; shift to e_trial so the
        // value is comparable with trotterized_gibbs_oracle.
        double shifts = 0.0;
        for (const TrotterEntry& entry : plan->entries)
            shifts += 2.0 * entry.tau *
                      pair_term_e_trial(h.pair_terms()[entry.term_index]);
        const double rescale = std::exp(params.beta * params.e_trial - shifts);
        run.z.value *= rescale;
        run.z.sigma *= rescale;
    }
    if (circuit_obs) {
        run.obs = estimate_observable_ancilla(run.record, *obs);
    } else if (obs != nullptr) {
        Estimate e;
        e.value = obs->lambda_min();
        e.method = "exact";
        run.obs = e;
    }
    return run;
}

// ---------------------------------------------------------------------------
// Uncertainty study
// ---------------------------------------------------------------------------

UncertaintyTable uncertainty_study(const std::vector<Hamiltonian>& hs,
                                   const std::vector<Observable>& os,
                                   const std::vector<double>& betas,
                                   const std::vector<std::uint64_t>& shots_list,
                                   int reps, double p, std::uint64_t seed) {
    if (hs.empty() || os.empty() || betas.empty() || shots_list.empty())
        throw EmptyResultError(
            "study needs hamiltonians, observables, betas, and shot counts");
    if (reps < 2)
        throw BadSizeError("need at least two repetitions to report a spread");

    UncertaintyTable table;
    std::uint64_t row_stream = 0;
    for (const Hamiltonian& h : hs) {
        for (const Observable& o : os) {
            for (double beta : betas) {
                const QitpParams params{beta, h.ground_energy(), p};
                const GibbsOracle g = gibbs_oracle(h, beta, h.ground_energy());
                const double exact =
                    (o.dense() * g.rho).trace().real() / g.z;

                PipelineSpec spec;
                spec.params = params;
                spec.observable = &o;
                const auto anc_dist =
                    outcome_distribution(build_thermal_pipeline(h, spec));
                const auto pauli_terms = build_pauli_terms(h, params, o, {});

                for (std::uint64_t shots : shots_list) {
                    UncertaintyRow base;
                    base.hamiltonian = h.label();
                    base.observable = o.label();
                    base.beta = beta;
                    base.shots = shots;
                    base.reps = reps;
                    base.exact = exact;

                    UncertaintyRow anc = base;
                    anc.method = "ancilla";
                    const std::uint64_t anc_seed = derive_seed(seed, row_stream++);
                    std::vector<double> values, sigmas;
                    for (int rep = 0; rep < reps; ++rep) {
                        const ShotRecord rec = sample_from_distribution(
                            anc_dist, shots,
                            derive_seed(anc_seed, static_cast<std::uint64_t>(rep)));
                        const Estimate e = estimate_observable_ancilla(rec, o);
                        values.push_back(e.value);
                        sigmas.push_back(e.sigma);
                    }
                    anc.mean_value = mean_of(values);
                    anc.empirical_sigma = sample_sd_of(values);
                    anc.mean_reported_sigma = mean_of(sigmas);
                    table.rows.push_back(std::move(anc));

                    UncertaintyRow pau = base;
                    pau.method = "pauli";
                    const std::uint64_t pau_seed = derive_seed(seed, row_stream++);
                    values.clear();
                    sigmas.clear();
                    for (int rep = 0; rep < reps; ++rep) {
                        const Estimate e = pauli_estimate_from_samples(
                            pauli_terms, shots,
                            derive_seed(pau_seed, static_cast<std::uint64_t>(rep)));
                        values.push_back(e.value);
                        sigmas.push_back(e.sigma);
                    }
                    pau.mean_value = mean_of(values);
                    pau.empirical_sigma = sample_sd_of(values);
                    pau.mean_reported_sigma = mean_of(sigmas);
                    table.rows.push_back(std::move(pau));
                }
            }
        }
    }
    return table;
}

double reduced_chi2(const std::vector<double>& values,
                    const std::vector<double>& sigmas,
                    const std::vector<double>& references) {
    if (values.empty())
        throw EmptyResultError("chi^2 needs at least one point");
    if (values.size() != sigmas.size() || values.size() != references.size())
        throw BadSizeError("chi^2 inputs must have matching lengths");
    double acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(sigmas[i] > 0.0))
            throw ZeroSigmaError("chi^2 needs positive uncertainties");
        const double r = (values[i] - references[i]) / sigmas[i];
        acc += r * r;
    }
    return acc / static_cast<double>(values.size());
}

} // namespace qitp
