#pragma once

#include <string>
#include <vector>

#include "coldrec/numerics/grad_check.hpp"

namespace coldrec::diagnostics {

inline constexpr double kSuiteTolerance = 1e-4;

struct GradCheckCase {
  std::string module;
  std::string name;
  GradCheckReport report;
};

// numerics: random MLP stacks. vae: encoder + heads + decoder with eps held
// fixed, and the reconstruction's input gradient. fusion: intermediate
// fusion under every combine mode, plus the side restore layer. recsys: MF
// and NeuMF (embedding tables included) and the multimodal model over every
// fusion path, with and without side features and the VAE.
std::vector<std::string> gradcheck_modules();  // numerics, vae, fusion, recsys
// `module` is one of gradcheck_modules() or "all"; ArgumentError otherwise.
std::vector<GradCheckCase> run_gradcheck_suite(const std::string& module);

}  // namespace coldrec::diagnostics
