#pragma once

#include <stdexcept>
#include <string>

namespace qitp {

// Every error carries a stable machine-readable code; the CLI prints it and
// exits nonzero.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

#define QITP_DEFINE_ERROR(Name, code_str)                          \
    class Name : public Error {                                    \
    public:                                                        \
        explicit Name(const std::string& message)                  \
            : Error(code_str, message) {}                          \
    }

QITP_DEFINE_ERROR(NonSquareError, "non_square");
QITP_DEFINE_ERROR(NonHermitianError, "non_hermitian");
QITP_DEFINE_ERROR(DomainError, "domain_error");
QITP_DEFINE_ERROR(BadDimensionError, "bad_dimension");
QITP_DEFINE_ERROR(BadIndexError, "bad_index");
QITP_DEFINE_ERROR(BadSizeError, "bad_size");
QITP_DEFINE_ERROR(SchemaError, "schema_error");
QITP_DEFINE_ERROR(PairSumMismatchError, "pair_sum_mismatch");
QITP_DEFINE_ERROR(NoPairTermsError, "no_pair_terms");
QITP_DEFINE_ERROR(InfeasibleParamsError, "infeasible_params");
QITP_DEFINE_ERROR(ZeroProbabilityError, "zero_probability_postselection");
QITP_DEFINE_ERROR(DegenerateObservableError, "degenerate_observable");
QITP_DEFINE_ERROR(NoSuccessesError, "no_successes");
QITP_DEFINE_ERROR(ZeroSigmaError, "zero_sigma");
QITP_DEFINE_ERROR(EmptyResultError, "empty_result");
QITP_DEFINE_ERROR(IoError, "io_error");

#undef QITP_DEFINE_ERROR

} // namespace qitp
