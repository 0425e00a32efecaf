#pragma once

#include "structadapt/grid.hpp"
#include "structadapt/partition.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace structadapt {

enum class FunctionFamily
{
  single_index,
  additive,
  projection_pursuit,
  multi_index,
  additive_multi_index,
  polynomial,
  zero
};

std::string to_string(FunctionFamily f);
FunctionFamily parse_family(const std::string& s);

enum class Profile
{
  //! A prod_j cos(omega u_j + phase)
  trig,
  //! A |sin(omega u_1)|, one-dimensional, beta <= 1
  kink,
  //! c0 + sum_j a_j u_j + sum_{j<=k} q_jk u_j u_k
  poly,
  none
};

std::string to_string(Profile p);
Profile parse_profile(const std::string& s);

struct Component
{
  Block block;
  Profile profile = Profile::none;
  double amplitude = 0.0;
  double frequency = 0.0;
  double phase = 0.0;
  //! poly: constant, linear (|block|), quadratic upper triangle row-major.
  std::vector<double> coefficients;
  //! Certified Hoelder order and constant of this component.
  double beta = 0.0;
  double lipschitz = 0.0;

  bool is_zero() const { return profile == Profile::none; }
  double operator()(std::span<const double> u) const;
};

//! F(t) = sum_i f_i(E_i^T t) with certified smoothness.
struct StructuredFunction
{
  FunctionFamily kind = FunctionFamily::zero;
  int dim = 1;
  Partition partition;
  Eigen::MatrixXd directions;
  std::vector<double> angles;
  std::vector<Component> components;
  //! Effective smoothness beta = beta_i / |I_i|.
  double beta = 1.0;
  //! Common Hoelder constant, max over components.
  double lipschitz = 0.0;

  double operator()(std::span<const double> t) const;
  ScalarFunction evaluator() const;
};

struct FunctionSpec
{
  std::string family = "single-index";
  int dim = 2;
  double beta = 1.0;
  //! Givens angles of E (d(d-1)/2 values); zeros when empty.
  std::vector<double> angles;
  std::string profile = "trig";
  double amplitude = 1.0;
  double frequency = 6.283185307179586;
  //! multi-index: number of index directions m.
  int index_dim = 1;
  //! additive-multi-index: partition in text form, e.g. "1.2|3".
  std::string partition;
  //! polynomial: total degree (0, 1 or 2).
  int degree = 1;

  bool operator==(const FunctionSpec&) const = default;
};

//! Throws std::invalid_argument for an unknown family or profile, a profile
//! that cannot carry the requested smoothness, or a violation of
//! beta_i = beta |I_i|.
StructuredFunction make_test_function(const FunctionSpec& spec);

//! Hoelder constant of A prod_j cos(omega u_j + phase) on R^s in H_s(beta, L):
//! A max(max_{k <= l} omega^k, 2^(1 - alpha) (sqrt(s) omega)^beta / l!),
//! beta = l + alpha, alpha in (0, 1].
double trig_holder_constant(double amplitude, double omega, int s, double beta);

//! Hoelder constant of A |sin(omega x)| for beta <= 1: A max(1, omega^beta).
double kink_holder_constant(double amplitude, double omega, double beta);

} // namespace structadapt
