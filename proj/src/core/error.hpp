#pragma once

#include <stdexcept>
#include <string>

namespace rtlab {

enum class ErrorCode {
    Ok = 0,
    BadSpec,
    NonPositiveDensity,
    SingularForms,
    NoConvergence,
    DegenerateMode,
    IncompatibleDivergence,
    SolverFailure,
    DensityUnderflow,
    NotContracting,
    CflViolation,
    NeverEscapes,
    RegimeViolation,
    IoError,
    Internal,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
    throw Error(code, msg);
}

} // namespace rtlab
