#include "qitp/hamiltonian.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace qitp {

using nlohmann::json;

// ===========================================================================
// Core types
// ===========================================================================

Hamiltonian::Hamiltonian(ComplexMatrix dense, std::vector<PairTerm> pair_terms,
                         std::string label)
    : dense_(std::move(dense)),
      pair_terms_(std::move(pair_terms)),
      label_(std::move(label)) {
    if (dense_.rows() != dense_.cols())
        throw NonSquareError("hamiltonian matrix must be square");
    n_sys_ = qubit_count_for_dim(dense_.rows());
    if (n_sys_ < 1) throw BadSizeError("hamiltonian needs at least one qubit");
    if (!is_hermitian(dense_))
        throw NonHermitianError("hamiltonian matrix is not Hermitian");

    if (!pair_terms_.empty()) {
        ComplexMatrix sum = ComplexMatrix::Zero(dense_.rows(), dense_.cols());
        for (const PairTerm& t : pair_terms_) {
            if (t.i == t.j) throw BadIndexError("pair term needs two distinct qubits");
            if (t.i < 0 || t.i >= n_sys_ || t.j < 0 || t.j >= n_sys_)
                throw BadIndexError("pair term qubit index out of range");
            if (t.term.rows() != 4 || t.term.cols() != 4)
                throw BadSizeError("pair terms are 4x4 matrices");
            if (!is_hermitian(t.term))
                throw NonHermitianError("pair term is not Hermitian");
            sum += embed_pair_term(t.term, t.i, t.j, n_sys_);
        }
        if (max_abs_diff(sum, dense_) > tol::PAIR_SUM)
            throw PairSumMismatchError(
                "pair terms do not sum to the dense matrix");
    }

    eig_ = hermitian_eig(dense_);
}

Observable::Observable(ComplexMatrix dense, std::string label)
    : dense_(std::move(dense)), label_(std::move(label)) {
    if (dense_.rows() != dense_.cols())
        throw NonSquareError("observable matrix must be square");
    n_sys_ = qubit_count_for_dim(dense_.rows());
    if (!is_hermitian(dense_))
        throw NonHermitianError("observable matrix is not Hermitian");
    eig_ = hermitian_eig(dense_);
    const double lo = eig_.eigenvalues(0);
    const double hi = eig_.eigenvalues(eig_.eigenvalues.size() - 1);
    spread_ = hi - lo;
    // A spectrum flat to roundoff is a multiple of the identity.
    if (spread_ <= 1e-12 * std::max(1.0, std::abs(hi) + std::abs(lo)))
        spread_ = 0.0;
}

ComplexMatrix embed_pair_term(const ComplexMatrix& term, int i, int j, int n_sys) {
    if (term.rows() != 4 || term.cols() != 4)
        throw BadSizeError("pair terms are 4x4 matrices");
    if (i == j || i < 0 || j < 0 || i >= n_sys || j >= n_sys)
        throw BadIndexError("pair term qubit indices out of range");

    const long dim = 1l << n_sys;
    const int pos_i = n_sys - 1 - i; // bit position of qubit i
    const int pos_j = n_sys - 1 - j;
    ComplexMatrix out = ComplexMatrix::Zero(dim, dim);
    for (long row = 0; row < dim; ++row) {
        const long a_row = (((row >> pos_i) & 1l) << 1) | ((row >> pos_j) & 1l);
        for (long a_col = 0; a_col < 4; ++a_col) {
            long col = row;
            col &= ~(1l << pos_i);
            col &= ~(1l << pos_j);
            col |= ((a_col >> 1) & 1l) << pos_i;
            col |= (a_col & 1l) << pos_j;
            out(row, col) += term(a_row, a_col);
        }
    }
    return out;
}

// ===========================================================================
// Pauli strings
// ===========================================================================

namespace {

// Nonzero column and phase of row `row` of the Pauli string s.
std::pair<long, Complex> pauli_row_action(const std::string& s, long row) {
    const int n = static_cast<int>(s.size());
    long col = row;
    Complex phase = 1.0;
    for (int q = 0; q < n; ++q) {
        const int pos = n - 1 - q;
        const long bit = (row >> pos) & 1l;
        switch (s[q]) {
            case 'I': break;
            case 'X': col ^= 1l << pos; break;
            case 'Y':
                col ^= 1l << pos;
                // row bit 0 pairs with column bit 1: entry Y[0][1] = -i
                phase *= bit ? Complex(0, 1) : Complex(0, -1);
                break;
            case 'Z':
                if (bit) phase = -phase;
                break;
            default:
                throw SchemaError("pauli strings use characters I, X, Y, Z");
        }
    }
    return {col, phase};
}

} // namespace

ComplexMatrix pauli_string_matrix(const std::string& s) {
    if (s.empty()) throw SchemaError("pauli string must not be empty");
    if (s.size() > static_cast<std::size_t>(tol::MAX_QUBITS))
        throw BadDimensionError("pauli string exceeds the 12-qubit dense limit");
    const long dim = 1l << s.size();
    ComplexMatrix out = ComplexMatrix::Zero(dim, dim);
    for (long row = 0; row < dim; ++row) {
        const auto [col, phase] = pauli_row_action(s, row);
        out(row, col) = phase;
    }
    return out;
}

std::map<std::string, double> pauli_decompose(const ComplexMatrix& o) {
    if (o.rows() != o.cols())
        throw NonSquareError("pauli_decompose needs a square matrix");
    const int n = qubit_count_for_dim(o.rows());
    if (!is_hermitian(o))
        throw NonHermitianError("pauli_decompose needs a Hermitian matrix");
    const long dim = o.rows();

    std::map<std::string, double> out;
    std::string s(n, 'I');
    const char letters[4] = {'I', 'X', 'Y', 'Z'};
    const long n_strings = 1l << (2 * n);
    for (long code = 0; code < n_strings; ++code) {
        long c = code;
        for (int q = n - 1; q >= 0; --q) {
            s[q] = letters[c & 3];
            c >>= 2;
        }
        // Tr(P O) via the one nonzero entry per row of P.
        Complex tr = 0.0;
        for (long row = 0; row < dim; ++row) {
            const auto [col, phase] = pauli_row_action(s, row);
            tr += phase * o(col, row);
        }
        const double coeff = (tr / static_cast<double>(dim)).real();
        if (std::abs(coeff) > tol::PAULI_PRUNE) out[s] = coeff;
    }
    return out;
}

// ===========================================================================
// Built-in models
// ===========================================================================

namespace {

ComplexMatrix pauli_1q(char c) {
    ComplexMatrix m(2, 2);
    switch (c) {
        case 'X': m << 0, 1, 1, 0; break;
        case 'Y': m << 0, Complex(0, -1), Complex(0, 1), 0; break;
        case 'Z': m << 1, 0, 0, -1; break;
        default:  m << 1, 0, 0, 1; break;
    }
    return m;
}

} // namespace

Hamiltonian heisenberg_pair_model(int n_sys,
                                  const std::vector<PairCoupling>& couplings,
                                  const std::vector<QubitField>& fields,
                                  std::string label) {
    if (n_sys < 2 || n_sys > 5)
        throw BadSizeError("heisenberg model supports 2 to 5 qubits");
    const std::size_t n_pairs =
        static_cast<std::size_t>(n_sys) * (n_sys - 1) / 2;
    if (couplings.size() != n_pairs)
        throw BadSizeError("expected one coupling per unordered qubit pair");
    if (!fields.empty() && fields.size() != static_cast<std::size_t>(n_sys))
        throw BadSizeError("expected one field entry per qubit");

    const ComplexMatrix i2 = ComplexMatrix::Identity(2, 2);
    const ComplexMatrix x = pauli_1q('X'), y = pauli_1q('Y'), z = pauli_1q('Z');
    const double field_share = 1.0 / static_cast<double>(n_sys - 1);

    const auto field_term = [&](const QubitField& f) {
        return ComplexMatrix(f.hx * x + f.hy * y + f.hz * z);
    };

    std::vector<PairTerm> terms;
    std::size_t k = 0;
    ComplexMatrix dense = ComplexMatrix::Zero(1l << n_sys, 1l << n_sys);
    for (int i = 0; i < n_sys; ++i) {
        for (int j = i + 1; j < n_sys; ++j, ++k) {
            const PairCoupling& c = couplings[k];
            ComplexMatrix term = c.jx * kron(x, x) + c.jy * kron(y, y) +
                                 c.jz * kron(z, z);
            if (!fields.empty()) {
                term += field_share * kron(field_term(fields[i]), i2);
                term += field_share * kron(i2, field_term(fields[j]));
            }
            dense += embed_pair_term(term, i, j, n_sys);
            terms.push_back({i, j, std::move(term)});
        }
    }
    return Hamiltonian(std::move(dense), std::move(terms), std::move(label));
}

Hamiltonian heisenberg_pair_model(int n_sys, PairCoupling coupling,
                                  QubitField field, std::string label) {
    if (n_sys < 2 || n_sys > 5)
        throw BadSizeError("heisenberg model supports 2 to 5 qubits");
    const std::size_t n_pairs =
        static_cast<std::size_t>(n_sys) * (n_sys - 1) / 2;
    return heisenberg_pair_model(
        n_sys, std::vector<PairCoupling>(n_pairs, coupling),
        std::vector<QubitField>(static_cast<std::size_t>(n_sys), field),
        std::move(label));
}

Observable sigma_z_observable(int qubit, int n_sys) {
    if (qubit < 0 || qubit >= n_sys)
        throw BadIndexError("sigma_z qubit index out of range");
    std::string s(static_cast<std::size_t>(n_sys), 'I');
    s[static_cast<std::size_t>(qubit)] = 'Z';
    return Observable(pauli_string_matrix(s), "sz" + std::to_string(qubit + 1));
}

// ===========================================================================
// Documents
// ===========================================================================

namespace {

[[noreturn]] void schema_fail(const std::string& what) {
    throw SchemaError("document: " + what);
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const char* where) {
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (const char* key : allowed) ok = ok || item.key() == key;
        if (!ok) schema_fail(std::string("unknown field '") + item.key() + "' in " + where);
    }
}

Complex parse_entry(const json& v) {
    if (v.is_number()) return Complex(v.get<double>(), 0.0);
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
        return Complex(v[0].get<double>(), v[1].get<double>());
    schema_fail("matrix entries are numbers or [re, im] pairs");
}

ComplexMatrix parse_dense(const json& rows, long expected_dim) {
    if (!rows.is_array()) schema_fail("dense must be an array of rows");
    if (static_cast<long>(rows.size()) != expected_dim)
        throw BadSizeError("dense matrix has the wrong number of rows");
    ComplexMatrix m(expected_dim, expected_dim);
    for (long i = 0; i < expected_dim; ++i) {
        const json& row = rows[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<long>(row.size()) != expected_dim)
            throw BadSizeError("dense matrix row has the wrong length");
        for (long j = 0; j < expected_dim; ++j)
            m(i, j) = parse_entry(row[static_cast<std::size_t>(j)]);
    }
    return m;
}

json dense_to_json(const ComplexMatrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            row.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
        rows.push_back(std::move(row));
    }
    return rows;
}

struct ParsedDocument {
    ComplexMatrix dense;
    std::vector<PairTerm> pair_terms;
    std::string label;
};

ParsedDocument parse_operator_document(const std::string& text,
                                       const char* default_label) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        schema_fail(std::string("invalid json: ") + e.what());
    }
    if (!doc.is_object()) schema_fail("top level must be an object");
    check_keys(doc, {"n_qubits", "dense", "pauli_terms", "pairs", "label"},
               "document");

    if (!doc.contains("n_qubits") || !doc["n_qubits"].is_number_integer())
        schema_fail("n_qubits (integer) is required");
    const int n = doc["n_qubits"].get<int>();
    if (n < 1) throw BadSizeError("n_qubits must be at least 1");
    if (n > tol::MAX_QUBITS)
        throw BadDimensionError("n_qubits exceeds the 12-qubit dense limit");
    const long dim = 1l << n;

    const int forms = doc.contains("dense") + doc.contains("pauli_terms") +
                      doc.contains("pairs");
    if (forms != 1)
        schema_fail("exactly one of dense, pauli_terms, pairs is required");

    ParsedDocument out;
    out.label = doc.value("label", std::string(default_label));

    if (doc.contains("dense")) {
        out.dense = parse_dense(doc["dense"], dim);
    } else if (doc.contains("pauli_terms")) {
        const json& terms = doc["pauli_terms"];
        if (!terms.is_array() || terms.empty())
            schema_fail("pauli_terms must be a non-empty array");
        out.dense = ComplexMatrix::Zero(dim, dim);
        for (const json& t : terms) {
            if (!t.is_object()) schema_fail("pauli term must be an object");
            check_keys(t, {"string", "coeff"}, "pauli term");
            if (!t.contains("string") || !t["string"].is_string())
                schema_fail("pauli term needs a string");
            if (!t.contains("coeff") || !t["coeff"].is_number())
                schema_fail("pauli term needs a real coeff");
            const std::string s = t["string"].get<std::string>();
            if (static_cast<int>(s.size()) != n)
                schema_fail("pauli string length must equal n_qubits");
            out.dense += t["coeff"].get<double>() * pauli_string_matrix(s);
        }
    } else {
        const json& pairs = doc["pairs"];
        if (!pairs.is_array() || pairs.empty())
            schema_fail("pairs must be a non-empty array");
        out.dense = ComplexMatrix::Zero(dim, dim);
        for (const json& t : pairs) {
            if (!t.is_object()) schema_fail("pair term must be an object");
            check_keys(t, {"i", "j", "dense"}, "pair term");
            if (!t.contains("i") || !t["i"].is_number_integer() ||
                !t.contains("j") || !t["j"].is_number_integer() ||
                !t.contains("dense"))
                schema_fail("pair term needs integer i, j and a 4x4 dense block");
            PairTerm term;
            term.i = t["i"].get<int>();
            term.j = t["j"].get<int>();
            term.term = parse_dense(t["dense"], 4);
            out.dense += embed_pair_term(term.term, term.i, term.j, n);
            out.pair_terms.push_back(std::move(term));
        }
    }
    return out;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("failed reading " + path);
    return ss.str();
}

} // namespace

Hamiltonian load_hamiltonian(const std::string& json_text) {
    ParsedDocument doc = parse_operator_document(json_text, "hamiltonian");
    return Hamiltonian(std::move(doc.dense), std::move(doc.pair_terms),
                       std::move(doc.label));
}

Hamiltonian load_hamiltonian_file(const std::string& path) {
    return load_hamiltonian(slurp(path));
}

Observable load_observable(const std::string& json_text) {
    ParsedDocument doc = parse_operator_document(json_text, "observable");
    return Observable(std::move(doc.dense), std::move(doc.label));
}

Observable load_observable_file(const std::string& path) {
    return load_observable(slurp(path));
}

std::string serialize_hamiltonian(const Hamiltonian& h) {
    json doc;
    doc["n_qubits"] = h.n_sys();
    doc["label"] = h.label();
    if (h.has_pair_terms()) {
        json pairs = json::array();
        for (const PairTerm& t : h.pair_terms())
            pairs.push_back(json{{"i", t.i}, {"j", t.j}, {"dense", dense_to_json(t.term)}});
        doc["pairs"] = std::move(pairs);
    } else {
        doc["dense"] = dense_to_json(h.dense());
    }
    return doc.dump(2) + "\n";
}

std::string serialize_observable(const Observable& o) {
    json doc;
    doc["n_qubits"] = o.n_sys();
    doc["label"] = o.label();
    doc["dense"] = dense_to_json(o.dense());
    return doc.dump(2) + "\n";
}

} // namespace qitp
