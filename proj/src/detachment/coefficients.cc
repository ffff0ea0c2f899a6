//
// Copyright 2026 The vunlearn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "vunlearn/detachment/coefficients.h"

#include <cmath>
#include <sstream>

#include "vunlearn/common/error.h"

namespace vunlearn::detachment {
namespace {

void check_admissible(const CoefficientSet& c) {
  require(std::isfinite(c.alpha) && c.alpha >= 0.0, ErrorCode::kConstraint,
          "alpha must be finite and >= 0");
  require(std::isfinite(c.beta) && c.beta >= 0.0, ErrorCode::kConstraint,
          "beta must be finite and >= 0");
  require(c.beta <= 1.0, ErrorCode::kConstraint,
          "beta must be <= 1 (lambda1 = alpha(1 - beta) would be negative)");
  for (std::size_t i = 0; i < c.gammas.size(); ++i) {
    const double g = c.gammas[i];
    require(std::isfinite(g) && g >= 0.0, ErrorCode::kConstraint,
            "gamma[" + std::to_string(i) + "] must be finite and >= 0");
    if (c.beta < g) {
      std::ostringstream msg;
      msg << "constraint beta >= gamma violated: beta=" << c.beta
          << " < gamma[" << i << "]=" << g;
      fail(ErrorCode::kConstraint, msg.str());
    }
  }
}

}  // namespace

CoefficientSet derive_coefficients(double alpha, double beta,
                                   std::span<const double> gammas) {
  CoefficientSet c;
  c.alpha = alpha;
  c.beta = beta;
  c.gammas.assign(gammas.begin(), gammas.end());
  check_admissible(c);
  c.lambda1 = alpha * (1.0 - beta);
  c.lambda2 = alpha * beta;
  for (double g : c.gammas) c.sigmas.push_back(alpha * (beta - g));
  return c;
}

LossBreakdown surrogate_loss(const CoefficientSet& coeffs, double info_x,
                             double info_y, std::span<const double> info_z) {
  require(info_z.size() == coeffs.sigmas.size(), ErrorCode::kDimensionMismatch,
          "got " + std::to_string(info_z.size()) +
              " sensitive estimates for " +
              std::to_string(coeffs.sigmas.size()) + " attributes");
  LossBreakdown b;
  b.info_x = info_x;
  b.info_y = info_y;
  b.info_z.assign(info_z.begin(), info_z.end());
  b.weighted_x = -coeffs.lambda1 * info_x;
  b.weighted_y = -coeffs.lambda2 * info_y;
  b.surrogate_total = b.weighted_x + b.weighted_y;
  for (std::size_t i = 0; i < info_z.size(); ++i) {
    b.weighted_z.push_back(-coeffs.sigmas[i] * info_z[i]);
    b.surrogate_total += b.weighted_z.back();
  }
  return b;
}

bool satisfies_identity(const CoefficientSet& coeffs, const LossBreakdown& b,
                        double tolerance) {
  if (b.info_z.size() != coeffs.sigmas.size()) return false;
  double total = -coeffs.lambda1 * b.info_x - coeffs.lambda2 * b.info_y;
  for (std::size_t i = 0; i < b.info_z.size(); ++i) {
    total -= coeffs.sigmas[i] * b.info_z[i];
  }
  const double scale = std::max(1.0, std::abs(total));
  return std::abs(total - b.surrogate_total) <= tolerance * scale;
}

SurrogateGradient surrogate_gradient(const CoefficientSet& coeffs) {
  SurrogateGradient g;
  g.d_info_x = -coeffs.lambda1;
  g.d_info_y = -coeffs.lambda2;
  for (double s : coeffs.sigmas) g.d_info_z.push_back(-s);
  return g;
}

double exact_loss_on_system(const oracle::FactorSystem& system,
                            const CoefficientSet& coeffs) {
  oracle::validate(system);
  require(coeffs.gammas.size() == system.sensitive_count(),
          ErrorCode::kDimensionMismatch,
          "one gamma per sensitive attribute required");
  const oracle::DiscreteJoint chain = oracle::compose_markov_chain(system);
  double inner = -oracle::mutual_information(chain, {"h"}, {"x"}) +
                 coeffs.beta * oracle::mutual_information(chain, {"h"}, {"r"});
  for (std::size_t i = 0; i < system.sensitive_count(); ++i) {
    inner += coeffs.gammas[i] *
             oracle::mutual_information(chain, {"h"},
                                        {oracle::sensitive_info_axis(i)});
  }
  return coeffs.alpha * inner;
}

LossBreakdown surrogate_on_system(const oracle::FactorSystem& system,
                                  const CoefficientSet& coeffs) {
  oracle::validate(system);
  const oracle::DiscreteJoint chain = oracle::compose_markov_chain(system);
  std::vector<double> info_z;
  for (std::size_t i = 0; i < system.sensitive_count(); ++i) {
    info_z.push_back(oracle::mutual_information(
        chain, {"h"}, {oracle::sensitive_label_axis(i)}));
  }
  return surrogate_loss(coeffs,
                        oracle::mutual_information(chain, {"h"}, {"x"}),
                        oracle::mutual_information(chain, {"h"}, {"y"}),
                        info_z);
}

double gap_bound(const CoefficientSet& coeffs, double info_xy, double info_hy,
                 std::span<const double> info_hz) {
  double inner = info_xy - info_hy;
  for (double v : info_hz) inner -= v;
  return coeffs.alpha * coeffs.beta * inner;
}

}  // namespace vunlearn::detachment
