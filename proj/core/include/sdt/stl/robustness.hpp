#pragma once

#include <span>
#include <string>
#include <vector>

#include "sdt/common/error.hpp"
#include "sdt/stl/formula.hpp"
#include "sdt/stl/signal.hpp"

namespace sdt::stl {

/// Robustness of the always-true formula; also the value of empty G windows
/// (+rho_max) and of empty F/U windows (-rho_max).
inline constexpr double kDefaultRhoMax = 1e6;

struct Semantics {
  double rho_max = kDefaultRhoMax;
};

class UnknownChannelError : public DataError {
 public:
  using DataError::DataError;
};

/// Checks that every channel the formula references exists in the schema.
void validate(const Formula& formula, std::span<const std::string> schema);

struct RobustnessTrace {
  std::vector<double> values;  // values[t - 1] == rho(signal, t, formula)

  double at(std::size_t t) const { return values.at(t - 1); }
  std::size_t length() const { return values.size(); }
};

/// Quantitative semantics at 1-indexed step t. Temporal windows
/// [t + t1, t + t2] are intersected with [1, T]; untimed operators use [t, T].
double robustness(const Signal& signal, std::size_t t, const Formula& formula,
                  const Semantics& semantics = {});

/// rho(signal, t, formula) for all t in one bottom-up pass: bounded G/F use a
/// monotonic-deque sliding extremum, untimed U a backward recurrence.
RobustnessTrace robustness_trace(const Signal& signal, const Formula& formula,
                                 const Semantics& semantics = {});

/// Literal recursive transcription of the quantitative semantics with no
/// memoization. Exponential in temporal nesting depth; use as a test oracle.
double robustness_bruteforce(const Signal& signal, std::size_t t, const Formula& formula,
                             const Semantics& semantics = {});

/// rho(signal[1:t], 1, formula).
double prefix_robustness(const Signal& signal, std::size_t t, const Formula& formula,
                         const Semantics& semantics = {});

/// rho(signal[t:T], 1, formula).
double suffix_robustness(const Signal& signal, std::size_t t, const Formula& formula,
                         const Semantics& semantics = {});

/// Classic Boolean semantics over the same clamped windows (empty G window is
/// true, empty F/U window is false).
bool boolean_satisfaction(const Signal& signal, std::size_t t, const Formula& formula);

/// Satisfaction as read off a robustness value: ties at zero count as violation.
inline bool satisfied(double rho) { return rho > 0.0; }

}  // namespace sdt::stl
