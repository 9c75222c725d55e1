#include "qitp/propagator.hpp"

#include <cmath>
#include <mutex>

namespace qitp {

namespace {

void check_params_domain(const QitpParams& params) {
    if (!(params.beta >= 0.0) || !std::isfinite(params.beta))
        throw DomainError("beta must be finite and non-negative");
    if (!(params.p > 0.0) || !(params.p <= 1.0))
        throw DomainError("p must lie in (0, 1]");
    if (!std::isfinite(params.e_trial))
        throw DomainError("e_trial must be finite");
}

// Rotation angles of the thermal dilation: cos(theta_i) = sqrt(p) e^{-tau (E_i - E_T)}.
std::vector<double> thermal_thetas(const RealVector& energies,
                                   const QitpParams& params) {
    std::vector<double> thetas(static_cast<std::size_t>(energies.size()));
    for (Eigen::Index k = 0; k < energies.size(); ++k) {
        const double weight =
            params.p * std::exp(-2.0 * params.tau() * (energies(k) - params.e_trial));
        if (weight > 1.0 + tol::FEASIBILITY_SLACK)
            throw InfeasibleParamsError(
                "p * exp(-2 tau (E - E_T)) exceeds 1 at eigenvalue " +
                std::to_string(energies(k)) + "; lower e_trial or p");
        thetas[static_cast<std::size_t>(k)] =
            std::acos(std::sqrt(std::min(weight, 1.0)));
    }
    return thetas;
}

// [[C, S], [-S, C]] on (ancilla ⊗ system) from per-eigenvalue cosines/sines.
ComplexMatrix assemble_dilation(const Eigensystem& es,
                                const std::vector<double>& thetas) {
    const Eigen::Index d = es.eigenvalues.size();
    RealVector cosv(d), sinv(d);
    for (Eigen::Index k = 0; k < d; ++k) {
        cosv(k) = std::cos(thetas[static_cast<std::size_t>(k)]);
        sinv(k) = std::sin(thetas[static_cast<std::size_t>(k)]);
    }
    const ComplexMatrix c = es.eigenvectors * cosv.asDiagonal() *
                            es.eigenvectors.adjoint();
    const ComplexMatrix s = es.eigenvectors * sinv.asDiagonal() *
                            es.eigenvectors.adjoint();
    ComplexMatrix out(2 * d, 2 * d);
    out.topLeftCorner(d, d) = c;
    out.topRightCorner(d, d) = s;
    out.bottomLeftCorner(d, d) = -s;
    out.bottomRightCorner(d, d) = c;
    return out;
}

} // namespace

GibbsOracle gibbs_oracle(const Hamiltonian& h, double beta, double e_trial) {
    if (!(beta >= 0.0) || !std::isfinite(beta))
        throw DomainError("beta must be finite and non-negative");
    GibbsOracle out;
    out.rho = matrix_func(h.eigensystem(), [beta, e_trial](double e) {
        return std::exp(-beta * (e - e_trial));
    });
    out.z = out.rho.trace().real();
    return out;
}

void check_feasible(const Hamiltonian& h, const QitpParams& params) {
    check_params_domain(params);
    thermal_thetas(h.eigensystem().eigenvalues, params);
}

ComplexMatrix qitp_gs_matrix(const Hamiltonian& h, double tau, double e_trial) {
    if (!std::isfinite(tau) || !std::isfinite(e_trial))
        throw DomainError("tau and e_trial must be finite");
    const Eigensystem& es = h.eigensystem();
    std::vector<double> thetas(static_cast<std::size_t>(es.eigenvalues.size()));
    for (Eigen::Index k = 0; k < es.eigenvalues.size(); ++k) {
        // cos = e^{-a}/sqrt(1+e^{-2a}) = 1/sqrt(1+e^{2a}) with a = tau (E - E_T),
        // evaluated through atan for stability at large |a|.
        const double a = tau * (es.eigenvalues(k) - e_trial);
        thetas[static_cast<std::size_t>(k)] = std::atan(std::exp(a));
    }
    return assemble_dilation(es, thetas);
}

ComplexMatrix qitp_th_matrix(const Hamiltonian& h, const QitpParams& params) {
    check_params_domain(params);
    const Eigensystem& es = h.eigensystem();
    return assemble_dilation(es, thermal_thetas(es.eigenvalues, params));
}

std::vector<double> qitp_th_thetas(const Hamiltonian& h,
                                   const QitpParams& params) {
    check_params_domain(params);
    return thermal_thetas(h.eigensystem().eigenvalues, params);
}

double success_probability(const Hamiltonian& h, const QitpParams& params,
                           int n_beta) {
    if (n_beta < 1) throw BadSizeError("n_beta must be at least 1");
    check_feasible(h, params);
    const double z = gibbs_oracle(h, params.beta, params.e_trial).z;
    const double ps = std::pow(params.p, n_beta) * z /
                      std::pow(2.0, h.n_sys());
    return std::min(ps, 1.0);
}

TrotterPlan make_trotter_plan(const Hamiltonian& h, double beta, int n_steps) {
    if (!h.has_pair_terms())
        throw NoPairTermsError("trotterization needs a pair-term decomposition");
    if (n_steps < 1) throw BadSizeError("n_steps must be at least 1");
    if (!(beta >= 0.0) || !std::isfinite(beta))
        throw DomainError("beta must be finite and non-negative");

    TrotterPlan plan;
    plan.n_steps = n_steps;
    plan.delta_beta = beta / n_steps;
    const std::size_t n_terms = h.pair_terms().size();
    plan.entries.reserve(static_cast<std::size_t>(n_steps) * n_terms);
    for (int step = 0; step < n_steps; ++step)
        for (std::size_t t = 0; t < n_terms; ++t)
            plan.entries.push_back({t, plan.delta_beta / 2.0});
    plan.n_qitp_ancillas = static_cast<int>(plan.entries.size());
    return plan;
}

double pair_term_e_trial(const PairTerm& term) {
    return hermitian_eig(term.term).eigenvalues(0);
}

namespace {

// Half propagator of the plan: the ordered product of per-term factors
// e^{-tau (H_ij - E0_ij)}, first entry applied first.
ComplexMatrix half_propagator(const Hamiltonian& h, const TrotterPlan& plan,
                              double* shift_sum) {
    const long dim = 1l << h.n_sys();
    ComplexMatrix m = ComplexMatrix::Identity(dim, dim);
    double shifts = 0.0;
    for (const TrotterEntry& entry : plan.entries) {
        if (entry.term_index >= h.pair_terms().size())
            throw BadIndexError("trotter plan references a missing pair term");
        const PairTerm& term = h.pair_terms()[entry.term_index];
        const double e0 = pair_term_e_trial(term);
        const double tau = entry.tau;
        const ComplexMatrix local = matrix_func_hermitian(
            term.term, [tau, e0](double e) { return std::exp(-tau * (e - e0)); });
        m = embed_pair_term(local, term.i, term.j, h.n_sys()) * m;
        shifts += 2.0 * tau * e0;
    }
    if (shift_sum) *shift_sum = shifts;
    return m;
}

} // namespace

GibbsOracle trotterized_gibbs_oracle(const Hamiltonian& h,
                                     const TrotterPlan& plan, double e_trial) {
    double shift_sum = 0.0;
    const ComplexMatrix m = half_propagator(h, plan, &shift_sum);
    GibbsOracle out;
    // M M^dagger carries e^{+sum of per-term shifts}; move it to the caller's
    // e_trial reference so the result is comparable with gibbs_oracle.
    out.rho = (m * m.adjoint()) * std::exp(plan.beta() * e_trial - shift_sum);
    out.z = out.rho.trace().real();
    return out;
}

double trotter_success_probability(const Hamiltonian& h,
                                   const TrotterPlan& plan, double p) {
    if (!(p > 0.0) || !(p <= 1.0)) throw DomainError("p must lie in (0, 1]");
    const ComplexMatrix m = half_propagator(h, plan, nullptr);
    const double raw = (m * m.adjoint()).trace().real() /
                       std::pow(2.0, h.n_sys());
    return std::min(std::pow(p, plan.entries.size()) * raw, 1.0);
}

std::shared_ptr<const GibbsOracle> ThermalOracleCache::get(double beta,
                                                           double e_trial) const {
    const std::pair<double, double> key{beta, e_trial};
    {
        std::shared_lock lock(mutex_);
        const auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
    }
    std::unique_lock lock(mutex_);
    const auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    auto value = std::make_shared<const GibbsOracle>(gibbs_oracle(h_, beta, e_trial));
    cache_.emplace(key, value);
    return value;
}

} // namespace qitp
