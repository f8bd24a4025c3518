#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace wvamp {

/// Base of every domain failure raised by the library. `code()` is a stable,
/// machine-readable token (used verbatim in CSV `reason` cells).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    [[nodiscard]] virtual std::string_view code() const noexcept = 0;
};

#define WVAMP_DEFINE_ERROR(Name, token)                                        \
    class Name : public Error {                                                \
    public:                                                                    \
        using Error::Error;                                                    \
        [[nodiscard]] std::string_view code() const noexcept override {        \
            return token;                                                      \
        }                                                                      \
    }

// |<phi_f|phi_i>| at or below the orthogonality guard.
WVAMP_DEFINE_ERROR(OrthogonalSelections, "orthogonal_selections");
// Preselection is an eigenstate of A; no amplification possible.
WVAMP_DEFINE_ERROR(EigenstatePreselection, "eigenstate_preselection");
WVAMP_DEFINE_ERROR(NonPositiveVariance, "non_positive_variance");
WVAMP_DEFINE_ERROR(ZeroCoupling, "zero_coupling");
// eta at or beyond the supremum 1 - Bi[0; N0, r] of the binomial average.
WVAMP_DEFINE_ERROR(EtaOutOfDomain, "eta_out_of_domain");
WVAMP_DEFINE_ERROR(GridTooNarrow, "grid_too_narrow");
WVAMP_DEFINE_ERROR(ShiftOutOfGrid, "shift_out_of_grid");
WVAMP_DEFINE_ERROR(VanishingState, "vanishing_state");
WVAMP_DEFINE_ERROR(NonOrthonormalBasis, "non_orthonormal_basis");
// No prepared pair survived postselection.
WVAMP_DEFINE_ERROR(AllRejected, "all_rejected");
WVAMP_DEFINE_ERROR(IoError, "io_error");

#undef WVAMP_DEFINE_ERROR

/// Malformed configuration text. `line()` is 1-based.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& message)
        : Error("line " + std::to_string(line) + ": " + message), line_(line) {}
    [[nodiscard]] std::string_view code() const noexcept override { return "parse_error"; }
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Well-formed configuration that violates a constraint. `line()` is 0 when
/// the offending key is missing altogether.
class ValidationError : public Error {
public:
    ValidationError(std::size_t line, std::string field, const std::string& message)
        : Error((line ? "line " + std::to_string(line) + ": " : std::string{}) + "`" +
                field + "` " + message),
          line_(line), field_(std::move(field)) {}
    [[nodiscard]] std::string_view code() const noexcept override { return "validation_error"; }
    [[nodiscard]] std::size_t line() const noexcept { return line_; }
    [[nodiscard]] const std::string& field() const noexcept { return field_; }

private:
    std::size_t line_;
    std::string field_;
};

} // namespace wvamp
