#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qitp/circuit.hpp"

namespace qitp {

// Multinomial draw over the recorded-outcome bitstrings of one circuit.
struct ShotRecord {
    std::map<std::string, std::uint64_t> counts;
    std::uint64_t n_shots = 0;
    std::uint64_t seed = 0;
};

struct Estimate {
    double value = 0.0;
    double sigma = 0.0;
    std::uint64_t n_shots = 0;
    std::string method;
    // Set when a binomial cell sat at 0 or 1 and sigma fell back to the
    // Wilson-interval width.
    bool boundary = false;
};

// n_shots outcomes from the exact joint ancilla distribution; deterministic
// in (circuit, seed).
ShotRecord sample(const Circuit& c, std::uint64_t n_shots, std::uint64_t seed);
ShotRecord sample_from_distribution(
    const std::vector<std::pair<std::string, double>>& dist,
    std::uint64_t n_shots, std::uint64_t seed);

// Wilson 1-sigma half-width for k successes in n trials; stays positive at
// the p-hat = 0 and 1 boundaries where the plain binomial formula collapses.
double wilson_sigma(std::uint64_t k, std::uint64_t n);

// Partition function from the success fraction:
//   Z = 2^{n_sys} * (successes / shots) / p^{n_beta},
// where a success is a record whose first n_beta bits are all zero.
Estimate estimate_partition(const ShotRecord& record, int n_sys, double p,
                            int n_beta);

// Observable dilation A = sqrt((O - lambda_min) / spread) and its unitary
// embedding [[A, S], [-S, A]] with S = sqrt(1 - A^2), ancilla block first.
// DegenerateObservableError when spread == 0.
ComplexMatrix dilate_observable(const Observable& o);
ComplexMatrix dilated_observable_unitary(const Observable& o);

// <O> from the ancilla method: among successful shots (all qitp bits zero,
// the obs bit is last), p-hat = P00 / (P00 + P10) estimates <A^2>, and
// <O> = p-hat * spread + lambda_min. NoSuccessesError when nothing survives
// post-selection.
Estimate estimate_observable_ancilla(const ShotRecord& record,
                                     const Observable& o);

// <O> from the Pauli expansion: each non-identity string is measured on the
// system qubits of its own post-selected pipeline (shots_per_term each);
// terms combine with coefficient weights and quadrature-summed sigmas.
Estimate estimate_observable_pauli(const Hamiltonian& h,
                                   const QitpParams& params,
                                   const Observable& o,
                                   std::uint64_t shots_per_term,
                                   std::uint64_t seed,
                                   const std::optional<TrotterPlan>& plan = {});

// Convenience driver for the ancilla method: builds the pipeline, samples
// once, returns the partition estimate and (if an observable is given and not
// degenerate) the observable estimate. Degenerate observables bypass the
// circuit and report the exact value with sigma 0. With a Trotter plan the
// partition estimate is rescaled from the per-term references to e_trial, so
// it is comparable with trotterized_gibbs_oracle(h, plan, e_trial).
struct ThermalRun {
    Estimate z;
    std::optional<Estimate> obs;
    ShotRecord record;
    GateCounts gates;
    int n_qubits = 0;
};

ThermalRun run_thermal_estimation(const Hamiltonian& h, const QitpParams& params,
                                  const Observable* obs, std::uint64_t n_shots,
                                  std::uint64_t seed,
                                  const std::optional<TrotterPlan>& plan = {});

// ---------------------------------------------------------------------------
// Repeated-sampling uncertainty study comparing the two observable methods.
// ---------------------------------------------------------------------------

struct UncertaintyRow {
    std::string hamiltonian;
    std::string observable;
    std::string method; // "ancilla" | "pauli"
    double beta = 0.0;
    std::uint64_t shots = 0;
    int reps = 0;
    double mean_value = 0.0;
    double empirical_sigma = 0.0;     // sd of the rep values
    double mean_reported_sigma = 0.0; // mean of per-rep reported sigmas
    double exact = 0.0;
};

struct UncertaintyTable {
    std::vector<UncertaintyRow> rows;
};

UncertaintyTable uncertainty_study(const std::vector<Hamiltonian>& hs,
                                   const std::vector<Observable>& os,
                                   const std::vector<double>& betas,
                                   const std::vector<std::uint64_t>& shots_list,
                                   int reps, double p, std::uint64_t seed);

// Reduced chi^2 of estimates against references. All sigmas must be positive
// (ZeroSigmaError) and the vectors non-empty (EmptyResultError).
double reduced_chi2(const std::vector<double>& values,
                    const std::vector<double>& sigmas,
                    const std::vector<double>& references);

} // namespace qitp
