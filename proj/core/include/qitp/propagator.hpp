#pragma once

#include <memory>
#include <optional>
#include <shared_mutex>

#include "qitp/hamiltonian.hpp"

namespace qitp {

// Imaginary-time parameters. tau is the half-propagation time: a thermal
// state at inverse temperature beta needs e^{-tau H} applied from both sides
// of the maximally mixed state, so tau = beta / 2 throughout the pipeline.
struct QitpParams {
    double beta = 0.0;
    double e_trial = 0.0;
    double p = 1.0;

    double tau() const { return beta / 2.0; }
};

// Unnormalized thermal matrix e^{-beta (H - e_trial)} and its trace z.
struct GibbsOracle {
    ComplexMatrix rho;
    double z = 0.0;
};

GibbsOracle gibbs_oracle(const Hamiltonian& h, double beta, double e_trial);

// Raises InfeasibleParamsError when p * e^{-2 tau (E_i - e_trial)} > 1 for
// some eigenvalue (the dilation's rotation angles would leave [0, pi/2]).
void check_feasible(const Hamiltonian& h, const QitpParams& params);

// Ground-state dilation: blocks built from e^{-tau(H-E_T)} / sqrt(1 + e^{-2 tau(H-E_T)}).
// Acts on (ancilla ⊗ system); the ancilla |0> block is top-left.
ComplexMatrix qitp_gs_matrix(const Hamiltonian& h, double tau, double e_trial);

// Thermal dilation: diagonal blocks sqrt(p) e^{-tau(H-E_T)}, off-diagonal
// blocks ±sqrt(1 - p e^{-2 tau(H-E_T)}). Unitary by construction; same block
// convention as qitp_gs_matrix.
ComplexMatrix qitp_th_matrix(const Hamiltonian& h, const QitpParams& params);

// Rotation angles theta_i = arccos(sqrt(p) e^{-tau (E_i - e_trial)}) of the
// thermal dilation, one per eigenvalue in ascending order. The compiled
// circuit multiplexes exactly these angles over the eigenbasis.
std::vector<double> qitp_th_thetas(const Hamiltonian& h,
                                   const QitpParams& params);

// Probability that all n_beta post-selections succeed:
//   p^{n_beta} * z(beta) / 2^{n_sys}.
double success_probability(const Hamiltonian& h, const QitpParams& params,
                           int n_beta = 1);

// ---------------------------------------------------------------------------
// First-order Trotter factorization over the Hamiltonian's pair terms.
// ---------------------------------------------------------------------------

struct TrotterEntry {
    std::size_t term_index = 0; // into Hamiltonian::pair_terms()
    double tau = 0.0;           // half-propagation time of this factor
};

struct TrotterPlan {
    int n_steps = 1;
    double delta_beta = 0.0;              // beta / n_steps
    std::vector<TrotterEntry> entries;    // term-major within each step
    int n_qitp_ancillas = 0;              // n_steps * n_terms

    double beta() const { return n_steps * delta_beta; }
};

// Requires pair terms (NoPairTermsError otherwise) and n_steps >= 1.
TrotterPlan make_trotter_plan(const Hamiltonian& h, double beta, int n_steps);

// Exact matrix form of the post-selected Trotter pipeline: the half
// propagator M = Π e^{-tau (H_ij - E0_ij)} applied two-sided to the maximally
// mixed state, rescaled from the per-term references E0_ij (each embedded
// term's ground energy) to the caller's e_trial so the result is comparable
// with gibbs_oracle.
GibbsOracle trotterized_gibbs_oracle(const Hamiltonian& h,
                                     const TrotterPlan& plan,
                                     double e_trial);

// Success probability of the full Trotter pipeline at dilation strength p.
double trotter_success_probability(const Hamiltonian& h,
                                   const TrotterPlan& plan, double p);

// Per-term trial energy used by the Trotter fragments: the embedded pair
// term's ground energy, which keeps every fragment feasible for p <= 1.
double pair_term_e_trial(const PairTerm& term);

// ---------------------------------------------------------------------------
// Oracle cache: gibbs_oracle keyed by (beta, e_trial) for one Hamiltonian.
// Concurrent readers share results; insertion is single-writer.
// ---------------------------------------------------------------------------

class ThermalOracleCache {
public:
    explicit ThermalOracleCache(const Hamiltonian& h) : h_(h) {}

    std::shared_ptr<const GibbsOracle> get(double beta, double e_trial) const;
    const Hamiltonian& hamiltonian() const { return h_; }

private:
    const Hamiltonian& h_;
    mutable std::shared_mutex mutex_;
    mutable std::map<std::pair<double, double>,
                     std::shared_ptr<const GibbsOracle>> cache_;
};

} // namespace qitp
