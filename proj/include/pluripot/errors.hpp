#pragma once

#include <stdexcept>
#include <string>

namespace pluripot {

// Exit-code buckets used by the command line driver. Validation failures are
// caller mistakes (bad config, bad geometry); convergence failures mean a
// solver gave up; witness is the "domain is provably not what you asserted"
// outcome, which is a successful computation with a negative answer.
enum class ErrorKind { Validation, Convergence, Internal };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

private:
  ErrorKind kind_;
};

#define PLURIPOT_ERROR(NAME, KIND)                                                               \
  class NAME : public Error {                                                                    \
  public:                                                                                        \
    explicit NAME(const std::string& what) : Error(ErrorKind::KIND, std::string(#NAME ": ") + what) {} \
  }

PLURIPOT_ERROR(InvalidBox, Validation);
PLURIPOT_ERROR(NodeBudgetExceeded, Validation);
PLURIPOT_ERROR(DomainNotCovered, Validation);
PLURIPOT_ERROR(OutOfBox, Validation);
PLURIPOT_ERROR(IsolatedNode, Validation);
PLURIPOT_ERROR(BadParams, Validation);
PLURIPOT_ERROR(DimensionMismatch, Validation);
PLURIPOT_ERROR(EmptyIntersection, Validation);
PLURIPOT_ERROR(MaskMismatch, Validation);
PLURIPOT_ERROR(EmptyE, Validation);
PLURIPOT_ERROR(UnboundedU, Validation);
PLURIPOT_ERROR(BoundViolated, Validation);
PLURIPOT_ERROR(PreconditionFailed, Validation);
PLURIPOT_ERROR(ConfigError, Validation);
PLURIPOT_ERROR(InvalidProbe, Validation);

PLURIPOT_ERROR(NonConvergence, Convergence);
PLURIPOT_ERROR(LpInfeasible, Convergence);
PLURIPOT_ERROR(LpUnbounded, Convergence);
PLURIPOT_ERROR(NoFeasibleC, Convergence);

#undef PLURIPOT_ERROR

} // namespace pluripot
