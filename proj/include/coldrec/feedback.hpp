#pragma once

#include <string>

#include "coldrec/error.hpp"

namespace coldrec {

// Implicit: observed events, trained as binary labels with sampled negatives.
// Explicit: ratings normalised to [0, 1], trained by squared error.
enum class Feedback { kImplicit, kExplicit };

inline std::string to_string(Feedback f) {
  return f == Feedback::kImplicit ? "implicit" : "explicit";
}

inline Feedback feedback_from_string(const std::string& name) {
  if (name == "implicit") return Feedback::kImplicit;
  if (name == "explicit") return Feedback::kExplicit;
  throw ConfigError("unknown feedback kind '" + name + "'");
}

}  // namespace coldrec
