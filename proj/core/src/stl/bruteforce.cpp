#include <algorithm>

#include "compiled.hpp"
#include "sdt/stl/robustness.hpp"

namespace sdt::stl {

namespace {

using detail::CompiledFormula;

double rho(const Signal& s, std::size_t t, const CompiledFormula& f, double rho_max) {
  switch (f.kind) {
    case Formula::Kind::kTrue:
      return rho_max;
    case Formula::Kind::kPredicate:
      return f.predicate_value(s.step(t));
    case Formula::Kind::kNot:
      return -rho(s, t, f.children[0], rho_max);
    case Formula::Kind::kAnd:
      return std::min(rho(s, t, f.children[0], rho_max), rho(s, t, f.children[1], rho_max));
    case Formula::Kind::kOr:
      return std::max(rho(s, t, f.children[0], rho_max), rho(s, t, f.children[1], rho_max));
    case Formula::Kind::kImplies:
      return std::max(-rho(s, t, f.children[0], rho_max), rho(s, t, f.children[1], rho_max));
    case Formula::Kind::kGlobally: {
      const auto w = detail::window(f.interval, t, s.length());
      if (w.empty()) return rho_max;
      double v = rho(s, w.first, f.children[0], rho_max);
      for (std::size_t tp = w.first + 1; tp <= w.last; ++tp) {
        v = std::min(v, rho(s, tp, f.children[0], rho_max));
      }
      return v;
    }
    case Formula::Kind::kFinally: {
      const auto w = detail::window(f.interval, t, s.length());
      if (w.empty()) return -rho_max;
      double v = rho(s, w.first, f.children[0], rho_max);
      for (std::size_t tp = w.first + 1; tp <= w.last; ++tp) {
        v = std::max(v, rho(s, tp, f.children[0], rho_max));
      }
      return v;
    }
    case Formula::Kind::kUntil: {
      const auto w = detail::window(f.interval, t, s.length());
      if (w.empty()) return -rho_max;
      double best = 0.0;
      for (std::size_t tp = w.first; tp <= w.last; ++tp) {
        double hold = rho(s, t, f.children[0], rho_max);
        for (std::size_t tpp = t + 1; tpp <= tp; ++tpp) {
          hold = std::min(hold, rho(s, tpp, f.children[0], rho_max));
        }
        const double v = std::min(rho(s, tp, f.children[1], rho_max), hold);
        best = tp == w.first ? v : std::max(best, v);
      }
      return best;
    }
  }
  return 0.0;
}

bool holds(const Signal& s, std::size_t t, const CompiledFormula& f) {
  switch (f.kind) {
    case Formula::Kind::kTrue:
      return true;
    case Formula::Kind::kPredicate:
      return f.predicate_holds(s.step(t));
    case Formula::Kind::kNot:
      return !holds(s, t, f.children[0]);
    case Formula::Kind::kAnd:
      return holds(s, t, f.children[0]) && holds(s, t, f.children[1]);
    case Formula::Kind::kOr:
      return holds(s, t, f.children[0]) || holds(s, t, f.children[1]);
    case Formula::Kind::kImplies:
      return !holds(s, t, f.children[0]) || holds(s, t, f.children[1]);
    case Formula::Kind::kGlobally: {
      const auto w = detail::window(f.interval, t, s.length());
      for (std::size_t tp = w.first; tp <= w.last; ++tp) {
        if (!holds(s, tp, f.children[0])) return false;
      }
      return true;
    }
    case Formula::Kind::kFinally: {
      const auto w = detail::window(f.interval, t, s.length());
      for (std::size_t tp = w.first; tp <= w.last; ++tp) {
        if (holds(s, tp, f.children[0])) return true;
      }
      return false;
    }
    case Formula::Kind::kUntil: {
      const auto w = detail::window(f.interval, t, s.length());
      for (std::size_t tp = w.first; tp <= w.last; ++tp) {
        if (!holds(s, tp, f.children[1])) continue;
        bool kept = true;
        for (std::size_t tpp = t; tpp <= tp && kept; ++tpp) kept = holds(s, tpp, f.children[0]);
        if (kept) return true;
      }
      return false;
    }
  }
  return false;
}

}  // namespace

double robustness_bruteforce(const Signal& signal, std::size_t t, const Formula& formula,
                             const Semantics& semantics) {
  detail::check_step(t, signal.length());
  return rho(signal, t, detail::compile(formula, signal.schema()), semantics.rho_max);
}

bool boolean_satisfaction(const Signal& signal, std::size_t t, const Formula& formula) {
  detail::check_step(t, signal.length());
  return holds(signal, t, detail::compile(formula, signal.schema()));
}

}  // namespace sdt::stl
