#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace rapm {

enum class ErrorCode {
    InvalidParameter,
    ExistenceViolationA,   // C >= sigma^2 M T
    ExistenceViolationB,   // C M >= pi/8
    NonpositiveSpot,
    DegenerateSwitch,
    InvalidSpacing,
    OutOfRange,
    InvalidSize,
    SingularMass,
    LinearSolveFailure,
    NonFiniteState,
    SpotOutOfDomain,
};

[[nodiscard]] const char* to_string(ErrorCode code) noexcept;

/// Base error for everything the library reports.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Raised when time stepping produces a non-finite value. Carries the last
/// state in which every nodal value was finite.
class NonFiniteStateError : public Error {
public:
    NonFiniteStateError(const std::string& what, double last_tau,
                        std::vector<double> last_u, double dtau_over_dx2)
        : Error(ErrorCode::NonFiniteState, what),
          last_tau_(last_tau),
          last_u_(std::move(last_u)),
          dtau_over_dx2_(dtau_over_dx2) {}

    [[nodiscard]] double last_tau() const noexcept { return last_tau_; }
    /// Full nodal vector (boundary nodes included) at last_tau().
    [[nodiscard]] const std::vector<double>& last_u() const noexcept { return last_u_; }
    [[nodiscard]] double dtau_over_dx2() const noexcept { return dtau_over_dx2_; }

private:
    double last_tau_;
    std::vector<double> last_u_;
    double dtau_over_dx2_;
};

}  // namespace rapm
