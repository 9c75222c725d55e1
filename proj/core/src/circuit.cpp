#include "qitp/circuit.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numeric>
#include <utility>

#include <nlohmann/json.hpp>

namespace qitp {

namespace {

ComplexMatrix hadamard2() {
    ComplexMatrix m(2, 2);
    const double r = 1.0 / std::sqrt(2.0);
    m << r, r, r, -r;
    return m;
}

ComplexMatrix ry2(double angle) {
    ComplexMatrix m(2, 2);
    const double c = std::cos(angle / 2.0), s = std::sin(angle / 2.0);
    m << c, -s, s, c;
    return m;
}

// control is the most significant slot
ComplexMatrix cnot4() {
    ComplexMatrix m = ComplexMatrix::Zero(4, 4);
    m(0, 0) = m(1, 1) = m(2, 3) = m(3, 2) = 1.0;
    return m;
}

bool is_unitary_matrix(const ComplexMatrix& m) {
    if (m.rows() != m.cols() || m.rows() == 0)
        return false;
    const ComplexMatrix prod = m * m.adjoint();
    return max_abs_diff(prod, ComplexMatrix::Identity(m.rows(), m.cols())) <=
           1e-10;
}

void require_distinct(const std::vector<int>& qs, const char* what) {
    std::vector<int> sorted = qs;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw BadIndexError(std::string(what) + " act on a repeated qubit");
}

void validate_circuit(const Circuit& c) {
    if (c.n_qubits < 0)
        throw BadSizeError("circuit qubit count must be non-negative");
    if (static_cast<int>(c.roles.size()) != c.n_qubits)
        throw BadSizeError("roles must cover every circuit qubit");
    for (const Gate& g : c.gates) {
        const bool is_cnot = g.kind == GateKind::cnot;
        const bool is_unitary = g.kind == GateKind::unitary;
        if (is_unitary) {
            if (g.targets.empty())
                throw BadSizeError("unitary gate needs at least one target");
        } else if (g.targets.size() != 1) {
            throw BadSizeError("gate needs exactly one target");
        }
        if (g.controls.size() != (is_cnot ? 1u : 0u))
            throw BadSizeError(is_cnot ? "cnot needs exactly one control"
                                       : "only cnot carries a control");
        std::vector<int> touched = g.targets;
        touched.insert(touched.end(), g.controls.begin(), g.controls.end());
        require_distinct(touched, "gate operands");
        for (int q : touched)
            if (q < 0 || q >= c.n_qubits)
                throw BadIndexError("gate qubit index out of range");
        if (is_unitary) {
            const long want = 1l << g.targets.size();
            if (g.matrix.rows() != want || g.matrix.cols() != want)
                throw BadSizeError(
                    "unitary matrix dimension does not match its target count");
        }
        if (g.kind == GateKind::measure_postselect && g.outcome != 0 &&
            g.outcome != 1)
            throw DomainError("post-selection outcome must be 0 or 1");
    }
}

// rho <- U rho on the given bit positions (slot 0 of u = most significant)
void apply_left(ComplexMatrix& m, const ComplexMatrix& u,
                const std::vector<int>& bitpos) {
    const int k = static_cast<int>(bitpos.size());
    const long big = 1l << k;
    long mask = 0;
    std::vector<long> spread(static_cast<std::size_t>(big), 0);
    for (int s = 0; s < k; ++s)
        mask |= 1l << bitpos[static_cast<std::size_t>(s)];
    for (long t = 0; t < big; ++t) {
        long x = 0;
        for (int s = 0; s < k; ++s)
            if ((t >> (k - 1 - s)) & 1)
                x |= 1l << bitpos[static_cast<std::size_t>(s)];
        spread[static_cast<std::size_t>(t)] = x;
    }
    std::vector<std::complex<double>> in(static_cast<std::size_t>(big));
    for (long base = 0; base < m.rows(); ++base) {
        if (base & mask)
            continue;
        for (long col = 0; col < m.cols(); ++col) {
            for (long t = 0; t < big; ++t)
                in[static_cast<std::size_t>(t)] =
                    m(base | spread[static_cast<std::size_t>(t)], col);
            for (long s = 0; s < big; ++s) {
                std::complex<double> acc = 0.0;
                for (long t = 0; t < big; ++t)
                    acc += u(s, t) * in[static_cast<std::size_t>(t)];
                m(base | spread[static_cast<std::size_t>(s)], col) = acc;
            }
        }
    }
}

// rho <- rho U^dagger on the given bit positions
void apply_right_adjoint(ComplexMatrix& m, const ComplexMatrix& u,
                         const std::vector<int>& bitpos) {
    const int k = static_cast<int>(bitpos.size());
    const long big = 1l << k;
    long mask = 0;
    std::vector<long> spread(static_cast<std::size_t>(big), 0);
    for (int s = 0; s < k; ++s)
        mask |= 1l << bitpos[static_cast<std::size_t>(s)];
    for (long t = 0; t < big; ++t) {
        long x = 0;
        for (int s = 0; s < k; ++s)
            if ((t >> (k - 1 - s)) & 1)
                x |= 1l << bitpos[static_cast<std::size_t>(s)];
        spread[static_cast<std::size_t>(t)] = x;
    }
    std::vector<std::complex<double>> in(static_cast<std::size_t>(big));
    for (long base = 0; base < m.cols(); ++base) {
        if (base & mask)
            continue;
        for (long row = 0; row < m.rows(); ++row) {
            for (long t = 0; t < big; ++t)
                in[static_cast<std::size_t>(t)] =
                    m(row, base | spread[static_cast<std::size_t>(t)]);
            for (long s = 0; s < big; ++s) {
                std::complex<double> acc = 0.0;
                for (long t = 0; t < big; ++t)
                    acc += in[static_cast<std::size_t>(t)] * std::conj(u(s, t));
                m(row, base | spread[static_cast<std::size_t>(s)]) = acc;
            }
        }
    }
}

// Density-matrix engine over the live subregister. Qubits materialize in the
// live list on first use; measurements take them back out (or, for recorded
// measurements, leave them dephased).
class Engine {
public:
    Engine(int n_qubits, const std::optional<RegisterState>& initial)
        : n_(n_qubits), removed_(static_cast<std::size_t>(n_qubits), 0) {
        if (!initial) {
            rho_ = ComplexMatrix::Ones(1, 1);
            return;
        }
        const RegisterState& s = *initial;
        for (std::size_t i = 0; i < s.live_qubits.size(); ++i) {
            const int q = s.live_qubits[i];
            if (q < 0 || q >= n_)
                throw BadIndexError("initial live qubit out of range");
            if (i > 0 && s.live_qubits[i - 1] >= q)
                throw BadIndexError("initial live qubits must be ascending");
        }
        const long want = 1l << s.live_qubits.size();
        if (s.rho.rows() != want || s.rho.cols() != want)
            throw BadDimensionError(
                "initial density matrix does not match its live qubit count");
        if (std::abs(s.rho.trace().real() - 1.0) > tol::TRACE)
            throw DomainError("initial density matrix must have unit trace");
        if (!(s.accumulated_prob > 0.0))
            throw DomainError("initial accumulated probability must be positive");
        rho_ = s.rho;
        live_ = s.live_qubits;
        prob_ = s.accumulated_prob;
    }

    void apply_gate(const Gate& g) {
        switch (g.kind) {
        case GateKind::hadamard:
            apply_unitary(hadamard2(), {g.targets[0]});
            break;
        case GateKind::cnot:
            apply_unitary(cnot4(), {g.controls[0], g.targets[0]});
            break;
        case GateKind::ry:
            apply_unitary(ry2(g.angle), {g.targets[0]});
            break;
        case GateKind::unitary:
            apply_unitary(g.matrix, g.targets);
            break;
        case GateKind::measure_discard:
            discard(g.targets[0]);
            break;
        case GateKind::measure_postselect:
            postselect(g.targets[0], g.outcome);
            break;
        case GateKind::measure_record:
            dephase(g.targets[0]);
            break;
        }
    }

    double outcome_prob(int q, int outcome) {
        ensure_live(q);
        const int bit = bit_of(q);
        double pr = 0.0;
        for (long i = 0; i < rho_.rows(); ++i)
            if (((i >> bit) & 1) == outcome)
                pr += rho_(i, i).real();
        return pr;
    }

    // Condition on a definite measured outcome. The caller guarantees the
    // outcome carries nonzero probability; `remove` drops the qubit,
    // otherwise it stays live in the measured basis state.
    void collapse(int q, int outcome, bool remove, double pr) {
        ensure_live(q);
        const int bit = bit_of(q);
        if (remove) {
            extract(q, outcome);
        } else {
            for (long i = 0; i < rho_.rows(); ++i)
                for (long j = 0; j < rho_.cols(); ++j)
                    if (((i >> bit) & 1) != outcome || ((j >> bit) & 1) != outcome)
                        rho_(i, j) = 0.0;
        }
        rho_ /= pr;
        prob_ *= pr;
    }

    void validate_state() const {
        if (std::abs(rho_.trace().real() - 1.0) > tol::TRACE)
            throw DomainError("simulated state trace drifted from one");
        if (!is_hermitian(rho_, 1e-10))
            throw DomainError("simulated state lost hermiticity");
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(rho_,
                                                            Eigen::EigenvaluesOnly);
        if (solver.eigenvalues().minCoeff() < -tol::POSITIVITY)
            throw DomainError("simulated state lost positivity");
    }

    RegisterState finalize() {
        for (int q = 0; q < n_; ++q)
            if (!removed_[static_cast<std::size_t>(q)])
                ensure_live(q);
        RegisterState out;
        out.rho = std::move(rho_);
        out.live_qubits = std::move(live_);
        out.accumulated_prob = prob_;
        return out;
    }

    double prob() const { return prob_; }

private:
    int pos_of(int q) const {
        const auto it = std::lower_bound(live_.begin(), live_.end(), q);
        return static_cast<int>(it - live_.begin());
    }

    int bit_of(int q) const {
        return static_cast<int>(live_.size()) - 1 - pos_of(q);
    }

    void ensure_live(int q) {
        if (q < 0 || q >= n_)
            throw BadIndexError("qubit index out of range");
        if (removed_[static_cast<std::size_t>(q)])
            throw BadIndexError("gate acts on a qubit that was measured out");
        const auto it = std::lower_bound(live_.begin(), live_.end(), q);
        if (it != live_.end() && *it == q)
            return;
        if (static_cast<int>(live_.size()) >= tol::MAX_QUBITS)
            throw BadSizeError("dense register limit of 12 live qubits exceeded");
        const int pos = static_cast<int>(it - live_.begin());
        const int shift = static_cast<int>(live_.size()) - pos;
        const long d_old = rho_.rows();
        const long low_mask = (1l << shift) - 1;
        const auto up = [&](long x) {
            return ((x >> shift) << (shift + 1)) | (x & low_mask);
        };
        ComplexMatrix out = ComplexMatrix::Zero(2 * d_old, 2 * d_old);
        for (long i = 0; i < d_old; ++i)
            for (long j = 0; j < d_old; ++j)
                out(up(i), up(j)) = rho_(i, j);
        rho_ = std::move(out);
        live_.insert(it, q);
    }

    void apply_unitary(const ComplexMatrix& u, const std::vector<int>& qs) {
        for (int q : qs)
            ensure_live(q);
        std::vector<int> bitpos(qs.size());
        for (std::size_t s = 0; s < qs.size(); ++s)
            bitpos[s] = bit_of(qs[s]);
        apply_left(rho_, u, bitpos);
        apply_right_adjoint(rho_, u, bitpos);
    }

    // drop qubit q from the register with its bit pinned to `outcome`
    void extract(int q, int outcome) {
        const int pos = pos_of(q);
        const int bit = static_cast<int>(live_.size()) - 1 - pos;
        const long half = rho_.rows() / 2;
        const long low_mask = (1l << bit) - 1;
        const auto expand = [&](long x) {
            return ((x >> bit) << (bit + 1)) |
                   (static_cast<long>(outcome) << bit) | (x & low_mask);
        };
        ComplexMatrix out(half, half);
        for (long i = 0; i < half; ++i)
            for (long j = 0; j < half; ++j)
                out(i, j) = rho_(expand(i), expand(j));
        rho_ = std::move(out);
        live_.erase(live_.begin() + pos);
        removed_[static_cast<std::size_t>(q)] = 1;
    }

    void discard(int q) {
        ensure_live(q);
        const int pos = pos_of(q);
        const int bit = static_cast<int>(live_.size()) - 1 - pos;
        const long half = rho_.rows() / 2;
        const long low_mask = (1l << bit) - 1;
        ComplexMatrix out = ComplexMatrix::Zero(half, half);
        for (long b = 0; b < 2; ++b) {
            const auto expand = [&](long x) {
                return ((x >> bit) << (bit + 1)) | (b << bit) | (x & low_mask);
            };
            for (long i = 0; i < half; ++i)
                for (long j = 0; j < half; ++j)
                    out(i, j) += rho_(expand(i), expand(j));
        }
        rho_ = std::move(out);
        live_.erase(live_.begin() + pos);
        removed_[static_cast<std::size_t>(q)] = 1;
    }

    void postselect(int q, int outcome) {
        const double pr = outcome_prob(q, outcome);
        if (pr < tol::POSTSELECT_FLOOR)
            throw ZeroProbabilityError(
                "post-selected branch has vanishing probability");
        collapse(q, outcome, true, pr);
    }

    void dephase(int q) {
        ensure_live(q);
        const int bit = bit_of(q);
        for (long i = 0; i < rho_.rows(); ++i)
            for (long j = 0; j < rho_.cols(); ++j)
                if (((i >> bit) & 1) != ((j >> bit) & 1))
                    rho_(i, j) = 0.0;
    }

    int n_;
    ComplexMatrix rho_;
    std::vector<int> live_;
    std::vector<char> removed_;
    double prob_ = 1.0;
};

uint32_t gray(uint32_t k) { return k ^ (k >> 1); }

} // namespace

// ---------------------------------------------------------------------------
// Gates and circuits
// ---------------------------------------------------------------------------

Gate Gate::h(int q) {
    Gate g;
    g.kind = GateKind::hadamard;
    g.targets = {q};
    return g;
}

Gate Gate::cnot(int control, int target) {
    if (control == target)
        throw BadIndexError("cnot control and target must differ");
    Gate g;
    g.kind = GateKind::cnot;
    g.targets = {target};
    g.controls = {control};
    return g;
}

Gate Gate::ry(int q, double angle) {
    if (!std::isfinite(angle))
        throw DomainError("rotation angle must be finite");
    Gate g;
    g.kind = GateKind::ry;
    g.targets = {q};
    g.angle = angle;
    return g;
}

Gate Gate::unitary(ComplexMatrix m, std::vector<int> targets) {
    if (targets.empty())
        throw BadSizeError("unitary gate needs at least one target");
    require_distinct(targets, "unitary targets");
    const long want = 1l << targets.size();
    if (m.rows() != want || m.cols() != want)
        throw BadSizeError(
            "unitary matrix dimension does not match its target count");
    if (!is_unitary_matrix(m))
        throw DomainError("gate matrix is not unitary");
    Gate g;
    g.kind = GateKind::unitary;
    g.targets = std::move(targets);
    g.matrix = std::move(m);
    return g;
}

Gate Gate::mdiscard(int q) {
    Gate g;
    g.kind = GateKind::measure_discard;
    g.targets = {q};
    return g;
}

Gate Gate::mpostselect(int q, int outcome) {
    if (outcome != 0 && outcome != 1)
        throw DomainError("post-selection outcome must be 0 or 1");
    Gate g;
    g.kind = GateKind::measure_postselect;
    g.targets = {q};
    g.outcome = outcome;
    return g;
}

Gate Gate::mrecord(int q) {
    Gate g;
    g.kind = GateKind::measure_record;
    g.targets = {q};
    return g;
}

std::vector<int> Circuit::qubits_with_role(QubitRole role) const {
    std::vector<int> out;
    for (int q = 0; q < n_qubits; ++q)
        if (roles[static_cast<std::size_t>(q)] == role)
            out.push_back(q);
    return out;
}

GateCounts gate_counts(const Circuit& c) {
    GateCounts counts;
    for (const Gate& g : c.gates) {
        switch (g.kind) {
        case GateKind::hadamard:
            ++counts.hadamard;
            break;
        case GateKind::cnot:
            ++counts.cnot;
            break;
        case GateKind::ry:
            ++counts.ry;
            break;
        case GateKind::unitary:
            ++counts.unitary;
            break;
        case GateKind::measure_discard:
        case GateKind::measure_postselect:
        case GateKind::measure_record:
            ++counts.measure;
            break;
        }
    }
    return counts;
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

RegisterState simulate(const Circuit& c, std::optional<RegisterState> initial,
                       const SimulateOptions& options) {
    validate_circuit(c);
    Engine eng(c.n_qubits, initial);
    for (const Gate& g : c.gates) {
        eng.apply_gate(g);
        if (options.validate_each_step)
            eng.validate_state();
    }
    return eng.finalize();
}

std::vector<std::pair<std::string, double>> outcome_distribution(
    const Circuit& c, std::optional<RegisterState> initial) {
    validate_circuit(c);

    struct Branch {
        Engine eng;
        std::string key;
    };
    std::vector<Branch> branches;
    branches.push_back({Engine(c.n_qubits, initial), ""});

    for (const Gate& g : c.gates) {
        const bool branching = g.kind == GateKind::measure_postselect ||
                               g.kind == GateKind::measure_record;
        if (!branching) {
            for (Branch& br : branches)
                br.eng.apply_gate(g);
            continue;
        }
        std::vector<Branch> next;
        next.reserve(2 * branches.size());
        for (Branch& br : branches) {
            for (int outcome = 0; outcome < 2; ++outcome) {
                const double pr = br.eng.outcome_prob(g.targets[0], outcome);
                if (pr <= 0.0)
                    continue;
                Branch child{br.eng, br.key + static_cast<char>('0' + outcome)};
                child.eng.collapse(g.targets[0], outcome,
                                   g.kind == GateKind::measure_postselect, pr);
                next.push_back(std::move(child));
            }
        }
        branches = std::move(next);
    }

    std::map<std::string, double> agg;
    for (const Branch& br : branches)
        agg[br.key] += br.eng.prob();
    return {agg.begin(), agg.end()};
}

ComplexMatrix circuit_unitary(const Circuit& c,
                              const std::vector<int>& qubit_order) {
    validate_circuit(c);
    if (c.n_qubits > tol::MAX_QUBITS)
        throw BadSizeError("dense unitary limited to 12 qubits");
    if (static_cast<int>(qubit_order.size()) != c.n_qubits)
        throw BadSizeError("qubit_order must list every circuit qubit");
    std::vector<int> pos(static_cast<std::size_t>(c.n_qubits), -1);
    for (std::size_t k = 0; k < qubit_order.size(); ++k) {
        const int q = qubit_order[k];
        if (q < 0 || q >= c.n_qubits || pos[static_cast<std::size_t>(q)] != -1)
            throw BadIndexError(
                "qubit_order must be a permutation of the circuit qubits");
        pos[static_cast<std::size_t>(q)] = static_cast<int>(k);
    }

    const long dim = 1l << c.n_qubits;
    ComplexMatrix u = ComplexMatrix::Identity(dim, dim);
    for (const Gate& g : c.gates) {
        ComplexMatrix small;
        std::vector<int> qs;
        switch (g.kind) {
        case GateKind::hadamard:
            small = hadamard2();
            qs = {g.targets[0]};
            break;
        case GateKind::cnot:
            small = cnot4();
            qs = {g.controls[0], g.targets[0]};
            break;
        case GateKind::ry:
            small = ry2(g.angle);
            qs = {g.targets[0]};
            break;
        case GateKind::unitary:
            small = g.matrix;
            qs = g.targets;
            break;
        default:
            throw DomainError("circuit_unitary needs a measurement-free circuit");
        }
        std::vector<int> bitpos(qs.size());
        for (std::size_t s = 0; s < qs.size(); ++s)
            bitpos[s] = c.n_qubits - 1 - pos[static_cast<std::size_t>(qs[s])];
        apply_left(u, small, bitpos);
    }
    return u;
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

Circuit build_mme_prep(int n_sys) {
    if (n_sys < 1 || n_sys > 5)
        throw BadSizeError("system register supports 1 to 5 qubits");
    Circuit c;
    c.n_qubits = 2 * n_sys;
    c.roles.assign(static_cast<std::size_t>(n_sys), QubitRole::system);
    c.roles.insert(c.roles.end(), static_cast<std::size_t>(n_sys),
                   QubitRole::mme_ancilla);
    for (int k = 0; k < n_sys; ++k) {
        c.gates.push_back(Gate::h(n_sys + k));
        c.gates.push_back(Gate::cnot(n_sys + k, k));
        c.gates.push_back(Gate::mdiscard(n_sys + k));
    }
    return c;
}

std::vector<Gate> compile_dilated_rotation(const ComplexMatrix& basis,
                                           const std::vector<double>& thetas,
                                           const std::vector<int>& system_qubits,
                                           int ancilla) {
    const int n = static_cast<int>(system_qubits.size());
    if (n < 1)
        throw BadSizeError("dilated rotation needs at least one system qubit");
    const std::size_t branches = std::size_t{1} << n;
    if (thetas.size() != branches)
        throw BadSizeError("need one rotation angle per eigenbranch");
    if (basis.rows() != static_cast<long>(branches) ||
        basis.cols() != static_cast<long>(branches))
        throw BadDimensionError("basis dimension does not match the qubit count");
    std::vector<int> touched = system_qubits;
    touched.push_back(ancilla);
    require_distinct(touched, "rotation qubits");

    std::vector<Gate> gates;
    gates.reserve(2 * branches + 2);
    gates.push_back(Gate::unitary(basis.adjoint(), system_qubits));

    // Each eigenbranch b needs the ancilla rotated by alpha_b = -2 theta_b.
    // The CNOT ladder flips rotation signs per branch following the Gray
    // code, so the physical angles come from the Walsh-style solve
    //   phi_k = 2^{-n} sum_b (-1)^{popcount(b & gray(k))} alpha_b.
    std::vector<double> phi(branches, 0.0);
    for (std::size_t k = 0; k < branches; ++k) {
        double acc = 0.0;
        for (std::size_t b = 0; b < branches; ++b) {
            const int parity =
                std::popcount(b & static_cast<std::size_t>(
                                      gray(static_cast<uint32_t>(k)))) &
                1;
            acc += (parity ? -1.0 : 1.0) * (-2.0 * thetas[b]);
        }
        phi[k] = acc / static_cast<double>(branches);
    }

    for (std::size_t k = 0; k < branches; ++k) {
        gates.push_back(Gate::ry(ancilla, phi[k]));
        int flipped;
        if (k + 1 == branches) {
            flipped = n - 1; // closing the ladder resets the top control
        } else {
            const uint32_t diff = gray(static_cast<uint32_t>(k)) ^
                                  gray(static_cast<uint32_t>(k + 1));
            flipped = std::countr_zero(diff);
        }
        const int control =
            system_qubits[static_cast<std::size_t>(n - 1 - flipped)];
        gates.push_back(Gate::cnot(control, ancilla));
    }

    gates.push_back(Gate::unitary(basis, system_qubits));
    return gates;
}

Circuit compile_qitp_gray(const Hamiltonian& h, const QitpParams& params) {
    const int n = h.n_sys();
    Circuit c;
    c.n_qubits = n + 1;
    c.roles.assign(static_cast<std::size_t>(n), QubitRole::system);
    c.roles.push_back(QubitRole::qitp_ancilla);
    std::vector<int> sys(static_cast<std::size_t>(n));
    std::iota(sys.begin(), sys.end(), 0);
    c.gates = compile_dilated_rotation(h.eigensystem().eigenvectors,
                                       qitp_th_thetas(h, params), sys, n);
    return c;
}

ComplexMatrix fragment_unitary(const Circuit& fragment) {
    const std::vector<int> anc = fragment.qubits_with_role(QubitRole::qitp_ancilla);
    if (anc.size() != 1)
        throw BadSizeError("fragment needs exactly one qitp ancilla");
    std::vector<int> order = anc;
    for (int q : fragment.qubits_with_role(QubitRole::system))
        order.push_back(q);
    return circuit_unitary(fragment, order);
}

Circuit build_thermal_pipeline(const Hamiltonian& h, const PipelineSpec& spec) {
    const int n = h.n_sys();
    const bool has_obs = spec.observable != nullptr;
    if (has_obs) {
        if (spec.observable->degenerate())
            throw DegenerateObservableError(
                "observable spectrum has zero spread");
        if (spec.observable->n_sys() != n)
            throw BadSizeError("observable size does not match the hamiltonian");
    }
    int n_beta = 1;
    if (spec.plan) {
        if (std::abs(spec.plan->beta() - spec.params.beta) > 1e-9)
            throw DomainError("trotter plan beta disagrees with params.beta");
        for (const TrotterEntry& e : spec.plan->entries)
            if (e.term_index >= h.pair_terms().size())
                throw BadIndexError("trotter entry references a missing term");
        n_beta = spec.plan->n_qitp_ancillas;
    }

    Circuit c = build_mme_prep(n);
    c.n_qubits = 2 * n + n_beta + (has_obs ? 1 : 0);
    c.roles.insert(c.roles.end(), static_cast<std::size_t>(n_beta),
                   QubitRole::qitp_ancilla);
    if (has_obs)
        c.roles.push_back(QubitRole::obs_ancilla);

    std::vector<int> sys(static_cast<std::size_t>(n));
    std::iota(sys.begin(), sys.end(), 0);

    if (!spec.plan) {
        const std::vector<Gate> frag = compile_dilated_rotation(
            h.eigensystem().eigenvectors, qitp_th_thetas(h, spec.params), sys,
            2 * n);
        c.gates.insert(c.gates.end(), frag.begin(), frag.end());
        c.gates.push_back(Gate::mpostselect(2 * n, 0));
    } else {
        for (std::size_t k = 0; k < spec.plan->entries.size(); ++k) {
            const TrotterEntry& entry = spec.plan->entries[k];
            const PairTerm& term = h.pair_terms()[entry.term_index];
            const Hamiltonian local(term.term);
            const QitpParams frag_params{2.0 * entry.tau, pair_term_e_trial(term),
                                         spec.params.p};
            const int anc = 2 * n + static_cast<int>(k);
            const std::vector<Gate> frag = compile_dilated_rotation(
                local.eigensystem().eigenvectors,
                qitp_th_thetas(local, frag_params), {term.i, term.j}, anc);
            c.gates.insert(c.gates.end(), frag.begin(), frag.end());
            c.gates.push_back(Gate::mpostselect(anc, 0));
        }
    }

    if (has_obs) {
        const int anc = c.n_qubits - 1;
        const Eigensystem& es = spec.observable->eigensystem();
        const double lo = spec.observable->lambda_min();
        const double spread = spec.observable->spread();
        std::vector<double> thetas(static_cast<std::size_t>(es.eigenvalues.size()));
        for (Eigen::Index i = 0; i < es.eigenvalues.size(); ++i) {
            const double frac =
                std::clamp((es.eigenvalues(i) - lo) / spread, 0.0, 1.0);
            thetas[static_cast<std::size_t>(i)] = std::acos(std::sqrt(frac));
        }
        const std::vector<Gate> frag =
            compile_dilated_rotation(es.eigenvectors, thetas, sys, anc);
        c.gates.insert(c.gates.end(), frag.begin(), frag.end());
        c.gates.push_back(Gate::mrecord(anc));
    }
    return c;
}

int pipeline_n_beta(const Circuit& c) {
    return static_cast<int>(c.qubits_with_role(QubitRole::qitp_ancilla).size());
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

const char* kind_name(GateKind k) {
    switch (k) {
    case GateKind::hadamard:
        return "hadamard";
    case GateKind::cnot:
        return "cnot";
    case GateKind::ry:
        return "ry";
    case GateKind::unitary:
        return "unitary";
    case GateKind::measure_discard:
        return "measure_discard";
    case GateKind::measure_postselect:
        return "measure_postselect";
    case GateKind::measure_record:
        return "measure_record";
    }
    return "unknown";
}

const char* role_name(QubitRole r) {
    switch (r) {
    case QubitRole::system:
        return "system";
    case QubitRole::mme_ancilla:
        return "mme_ancilla";
    case QubitRole::qitp_ancilla:
        return "qitp_ancilla";
    case QubitRole::obs_ancilla:
        return "obs_ancilla";
    }
    return "unknown";
}

QubitRole role_from(const std::string& s) {
    if (s == "system")
        return QubitRole::system;
    if (s == "mme_ancilla")
        return QubitRole::mme_ancilla;
    if (s == "qitp_ancilla")
        return QubitRole::qitp_ancilla;
    if (s == "obs_ancilla")
        return QubitRole::obs_ancilla;
    throw SchemaError("unknown qubit role: " + s);
}

json matrix_to_json(const ComplexMatrix& m) {
    json rows = json::array();
    for (long i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (long j = 0; j < m.cols(); ++j)
            row.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::complex<double> entry_from_json(const json& v) {
    if (v.is_number())
        return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
        return {v[0].get<double>(), v[1].get<double>()};
    throw SchemaError("matrix entries must be numbers or [re, im] pairs");
}

ComplexMatrix matrix_from_json(const json& rows) {
    if (!rows.is_array() || rows.empty())
        throw SchemaError("gate matrix must be a non-empty array of rows");
    const long n = static_cast<long>(rows.size());
    ComplexMatrix m(n, n);
    for (long i = 0; i < n; ++i) {
        const json& row = rows[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<long>(row.size()) != n)
            throw SchemaError("gate matrix must be square");
        for (long j = 0; j < n; ++j)
            m(i, j) = entry_from_json(row[static_cast<std::size_t>(j)]);
    }
    return m;
}

} // namespace

std::string dump_circuit(const Circuit& c) {
    validate_circuit(c);
    json j;
    j["n_qubits"] = c.n_qubits;
    json roles = json::array();
    for (QubitRole r : c.roles)
        roles.push_back(role_name(r));
    j["roles"] = std::move(roles);
    json gates = json::array();
    for (const Gate& g : c.gates) {
        json jg;
        jg["kind"] = kind_name(g.kind);
        jg["targets"] = g.targets;
        switch (g.kind) {
        case GateKind::cnot:
            jg["control"] = g.controls[0];
            break;
        case GateKind::ry:
            jg["angle"] = g.angle;
            break;
        case GateKind::unitary:
            jg["matrix"] = matrix_to_json(g.matrix);
            break;
        case GateKind::measure_postselect:
            jg["outcome"] = g.outcome;
            break;
        default:
            break;
        }
        gates.push_back(std::move(jg));
    }
    j["gates"] = std::move(gates);
    return j.dump(2);
}

Circuit parse_circuit(const std::string& text) {
    try {
        const json j = json::parse(text);
        Circuit c;
        c.n_qubits = j.at("n_qubits").get<int>();
        for (const json& r : j.at("roles"))
            c.roles.push_back(role_from(r.get<std::string>()));
        for (const json& jg : j.at("gates")) {
            const std::string kind = jg.at("kind").get<std::string>();
            const std::vector<int> targets =
                jg.at("targets").get<std::vector<int>>();
            if (targets.empty())
                throw SchemaError("gate needs at least one target");
            if (kind == "hadamard") {
                c.gates.push_back(Gate::h(targets[0]));
            } else if (kind == "cnot") {
                c.gates.push_back(Gate::cnot(jg.at("control").get<int>(),
                                             targets[0]));
            } else if (kind == "ry") {
                c.gates.push_back(Gate::ry(targets[0],
                                           jg.at("angle").get<double>()));
            } else if (kind == "unitary") {
                c.gates.push_back(
                    Gate::unitary(matrix_from_json(jg.at("matrix")), targets));
            } else if (kind == "measure_discard") {
                c.gates.push_back(Gate::mdiscard(targets[0]));
            } else if (kind == "measure_postselect") {
                c.gates.push_back(
                    Gate::mpostselect(targets[0], jg.at("outcome").get<int>()));
            } else if (kind == "measure_record") {
                c.gates.push_back(Gate::mrecord(targets[0]));
            } else {
                throw SchemaError("unknown gate kind: " + kind);
            }
        }
        validate_circuit(c);
        return c;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("circuit document: ") + e.what());
    }
}

} // namespace qitp
