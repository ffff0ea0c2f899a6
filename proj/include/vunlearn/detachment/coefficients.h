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

#ifndef VUNLEARN_DETACHMENT_COEFFICIENTS_H_
#define VUNLEARN_DETACHMENT_COEFFICIENTS_H_

#include <span>
#include <vector>

#include "vunlearn/oracle/factor_system.h"

namespace vunlearn::detachment {

// Weights of the detachment objective and of its tractable upper bound.
//
//   lambda1  = alpha (1 - beta)      retained-input weight on I(h,x)
//   lambda2  = alpha beta            task weight on I(h,y)
//   sigma_i  = alpha (beta - gamma_i) weight on I(h,z_i) in the bound
//
// Admissible inputs: alpha >= 0, 0 <= gamma_i <= beta <= 1.
struct CoefficientSet {
  double alpha = 0.0;
  double beta = 0.0;
  std::vector<double> gammas;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  std::vector<double> sigmas;

  // Weight alpha * gamma_i that the exact objective places on the sensitive
  // information of attribute i. The trainer uses it as the weight of the
  // confusion term on the sensitive classifier.
  double suppression(std::size_t i) const { return alpha * gammas.at(i); }
};

inline constexpr double kDefaultAlpha = 1.0;
inline constexpr double kDefaultBeta = 0.5;
inline constexpr double kDefaultGamma = 0.25;

// Throws ErrorCode::kConstraint on inadmissible input.
CoefficientSet derive_coefficients(double alpha, double beta,
                                   std::span<const double> gammas);

struct LossBreakdown {
  double info_x = 0.0;
  double info_y = 0.0;
  std::vector<double> info_z;
  double weighted_x = 0.0;               // -lambda1 * info_x
  double weighted_y = 0.0;               // -lambda2 * info_y
  std::vector<double> weighted_z;        // -sigma_i * info_z[i]
  double surrogate_total = 0.0;
};

inline constexpr double kBreakdownTolerance = 1e-12;

LossBreakdown surrogate_loss(const CoefficientSet& coeffs, double info_x,
                             double info_y, std::span<const double> info_z);

// True when surrogate_total equals the weighted sum of the logged terms.
bool satisfies_identity(const CoefficientSet& coeffs, const LossBreakdown& b,
                        double tolerance = kBreakdownTolerance);

// Partial derivatives of surrogate_total with respect to (info_x, info_y,
// info_z...). Constant: the surrogate is linear in its estimate inputs.
struct SurrogateGradient {
  double d_info_x = 0.0;
  double d_info_y = 0.0;
  std::vector<double> d_info_z;
};
SurrogateGradient surrogate_gradient(const CoefficientSet& coeffs);

// alpha (-I(h,x) + beta I(h,r) + Σ gamma_i I(h,s_i)) evaluated exactly with
// the explicit generative factors of `system`.
double exact_loss_on_system(const oracle::FactorSystem& system,
                            const CoefficientSet& coeffs);

// Surrogate assembled from the exact oracle values I(h,x), I(h,y), I(h,z_i).
LossBreakdown surrogate_on_system(const oracle::FactorSystem& system,
                                  const CoefficientSet& coeffs);

// alpha beta (I(x,y) - I(h,y) - Σ I(h,z_i)).
double gap_bound(const CoefficientSet& coeffs, double info_xy, double info_hy,
                 std::span<const double> info_hz);

}  // namespace vunlearn::detachment

#endif  // VUNLEARN_DETACHMENT_COEFFICIENTS_H_
