#pragma once

#include <cmath>
#include <string>

#include "tumor/errors.hpp"

namespace tumor {

/// Physical constants of the density/nutrient system.
struct ModelParams {
  double G0 = 1.0;
  double cB = 0.1;
  double lambda = 0.5;
  double lambda_tilde = 1.0;  // exchange coefficient, fixed to 1
  double tau = 0.1;
  double k_pme = 2.0;
  double kappa_smooth = 5.0;

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(std::isfinite(v) && v > 0.0)) throw DomainError(std::string(name) + " must be positive and finite");
    };
    positive(G0, "G0");
    positive(cB, "cB");
    positive(lambda, "lambda");
    positive(tau, "tau");
    positive(k_pme, "k_pme");
    positive(kappa_smooth, "kappa_smooth");
    if (lambda_tilde != 1.0) throw DomainError("lambda_tilde is fixed to 1");
  }
};

enum class Dimension { D2, D3 };
enum class Regime { InVitro, InVivo };

struct ProblemSelector {
  Dimension dim = Dimension::D2;
  Regime regime = Regime::InVitro;

  friend constexpr bool operator==(ProblemSelector, ProblemSelector) = default;
};

inline std::string to_string(ProblemSelector sel) {
  return std::string(sel.dim == Dimension::D2 ? "2d" : "3d") + "-" +
         (sel.regime == Regime::InVitro ? "vitro" : "vivo");
}

}  // namespace tumor
