#include "sdt/stl/robustness.hpp"

#include <algorithm>
#include <deque>

#include "compiled.hpp"

namespace sdt::stl {

using detail::CompiledFormula;

void validate(const Formula& formula, std::span<const std::string> schema) {
  for (const auto& channel : referenced_channels(formula)) {
    if (std::find(schema.begin(), schema.end(), channel) == schema.end()) {
      throw UnknownChannelError("unknown channel '" + channel + "'");
    }
  }
}

namespace {

using Trace = std::vector<double>;  // 0-based storage of 1-indexed steps

// out[t] = extremum of x over the clamped window [t+lo, t+hi]; empty windows
// take `empty_value`. Monotonic deque, O(T).
template <typename Better>
Trace sliding_extremum(const Trace& x, const Interval& iv, double empty_value, Better better) {
  const std::size_t n = x.size();
  Trace out(n, empty_value);
  if (!iv.bounded()) {
    // Suffix extremum starting at t + lo.
    Trace suffix(n);
    for (std::size_t j = n; j-- > 0;) {
      suffix[j] = (j + 1 < n && better(suffix[j + 1], x[j])) ? suffix[j + 1] : x[j];
    }
    for (std::size_t t = 0; t < n; ++t) {
      const std::size_t first = t + static_cast<std::size_t>(iv.lo);
      if (first < n) out[t] = suffix[first];
    }
    return out;
  }
  std::deque<std::size_t> dq;  // indices with values in strictly "better" order
  std::size_t next = 0;
  const auto lo = static_cast<std::size_t>(iv.lo);
  const auto hi = static_cast<std::size_t>(*iv.hi);
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t first = t + lo;
    const std::size_t last = std::min(n - 1, t + hi);
    if (first >= n) break;
    while (next <= last) {
      while (!dq.empty() && !better(x[dq.back()], x[next])) dq.pop_back();
      dq.push_back(next++);
    }
    while (dq.front() < first) dq.pop_front();
    out[t] = x[dq.front()];
  }
  return out;
}

Trace until_trace(const Trace& lhs, const Trace& rhs, const Interval& iv, double rho_max) {
  const std::size_t n = lhs.size();
  Trace out(n, -rho_max);
  const auto lo = static_cast<std::size_t>(iv.lo);
  if (!iv.bounded()) {
    // W[s] = max_{t'>=s} min(rhs[t'], min lhs[s..t']) satisfies
    // W[s] = max(min(rhs[s], lhs[s]), min(lhs[s], W[s+1])).
    Trace w(n);
    for (std::size_t s = n; s-- > 0;) {
      const double here = std::min(rhs[s], lhs[s]);
      w[s] = s + 1 < n ? std::max(here, std::min(lhs[s], w[s + 1])) : here;
    }
    for (std::size_t t = 0; t < n; ++t) {
      const std::size_t first = t + lo;
      if (first >= n) break;
      double v = w[first];
      for (std::size_t j = t; j < first; ++j) v = std::min(v, lhs[j]);
      out[t] = v;
    }
    return out;
  }
  const auto hi = static_cast<std::size_t>(*iv.hi);
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t first = t + lo;
    if (first >= n) break;
    const std::size_t last = std::min(n - 1, t + hi);
    double run = lhs[t];
    for (std::size_t j = t + 1; j < first; ++j) run = std::min(run, lhs[j]);
    double best = 0.0;
    for (std::size_t tp = first; tp <= last; ++tp) {
      run = std::min(run, lhs[tp]);
      const double v = std::min(rhs[tp], run);
      best = tp == first ? v : std::max(best, v);
    }
    out[t] = best;
  }
  return out;
}

Trace trace_of(const Signal& signal, const CompiledFormula& f, double rho_max) {
  const std::size_t n = signal.length();
  switch (f.kind) {
    case Formula::Kind::kTrue:
      return Trace(n, rho_max);
    case Formula::Kind::kPredicate: {
      Trace out(n);
      for (std::size_t t = 1; t <= n; ++t) out[t - 1] = f.predicate_value(signal.step(t));
      return out;
    }
    case Formula::Kind::kNot: {
      Trace out = trace_of(signal, f.children[0], rho_max);
      for (auto& v : out) v = -v;
      return out;
    }
    case Formula::Kind::kAnd:
    case Formula::Kind::kOr:
    case Formula::Kind::kImplies: {
      Trace a = trace_of(signal, f.children[0], rho_max);
      const Trace b = trace_of(signal, f.children[1], rho_max);
      for (std::size_t i = 0; i < n; ++i) {
        if (f.kind == Formula::Kind::kAnd) {
          a[i] = std::min(a[i], b[i]);
        } else if (f.kind == Formula::Kind::kOr) {
          a[i] = std::max(a[i], b[i]);
        } else {
          a[i] = std::max(-a[i], b[i]);
        }
      }
      return a;
    }
    case Formula::Kind::kGlobally:
      return sliding_extremum(trace_of(signal, f.children[0], rho_max), f.interval, rho_max,
                              [](double a, double b) { return a < b; });
    case Formula::Kind::kFinally:
      return sliding_extremum(trace_of(signal, f.children[0], rho_max), f.interval, -rho_max,
                              [](double a, double b) { return a > b; });
    case Formula::Kind::kUntil:
      return until_trace(trace_of(signal, f.children[0], rho_max),
                         trace_of(signal, f.children[1], rho_max), f.interval, rho_max);
  }
  return Trace(n, 0.0);
}

}  // namespace

RobustnessTrace robustness_trace(const Signal& signal, const Formula& formula,
                                 const Semantics& semantics) {
  const CompiledFormula compiled = detail::compile(formula, signal.schema());
  return {trace_of(signal, compiled, semantics.rho_max)};
}

double robustness(const Signal& signal, std::size_t t, const Formula& formula,
                  const Semantics& semantics) {
  detail::check_step(t, signal.length());
  return robustness_trace(signal, formula, semantics).at(t);
}

double prefix_robustness(const Signal& signal, std::size_t t, const Formula& formula,
                         const Semantics& semantics) {
  detail::check_step(t, signal.length());
  return robustness(signal.slice(1, t), 1, formula, semantics);
}

double suffix_robustness(const Signal& signal, std::size_t t, const Formula& formula,
                         const Semantics& semantics) {
  detail::check_step(t, signal.length());
  return robustness(signal.slice(t, signal.length()), 1, formula, semantics);
}

}  // namespace sdt::stl
