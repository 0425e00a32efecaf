#include "structadapt/functions.hpp"

#include "structadapt/kernel.hpp"

#include <cmath>
#include <stdexcept>

namespace structadapt {

namespace {

// l = ceil(beta) - 1, alpha = beta - l in (0, 1]
int holder_order(double beta)
{
  return static_cast<int>(std::ceil(beta - 1e-12)) - 1;
}

double factorial(int n)
{
  double f = 1.0;
  for (int i = 2; i <= n; ++i)
    f *= i;
  return f;
}

// coefficients of a fixed quadratic over s variables
std::vector<double> poly_coefficients(int s, int degree)
{
  std::vector<double> c{0.5};
  for (int j = 0; j < s; ++j)
    c.push_back(degree >= 1 ? 0.8 - 0.6 * j : 0.0);
  for (int j = 0; j < s; ++j)
    for (int k = j; k < s; ++k)
      c.push_back(degree >= 2 ? (j == k ? 0.7 : -0.4) : 0.0);
  return c;
}

// sup of |D^k f| for |k| <= l over the cube |u_j| <= r, and the remainder constant
double poly_holder_constant(const std::vector<double>& c, int s, double beta, double r)
{
  const int l = holder_order(beta);
  double c0 = std::abs(c[0]);
  double lin = 0.0, quad = 0.0;
  for (int j = 0; j < s; ++j)
    lin += std::abs(c[1 + j]);
  for (std::size_t k = 1 + s; k < c.size(); ++k)
    quad += std::abs(c[k]);
  // crude but valid bounds on the cube
  double sup0 = c0 + lin * r + quad * r * r;
  double sup1 = 0.0;
  for (int j = 0; j < s; ++j)
    sup1 = std::max(sup1, std::abs(c[1 + j]) + 2.0 * quad * r);
  double sup2 = 2.0 * quad;
  double bound = sup0;
  if (l >= 1)
    bound = std::max(bound, sup1);
  if (l >= 2)
    bound = std::max(bound, sup2);
  // remainder of the order-l Taylor expansion, |z - t| <= 2 r sqrt(s)
  const double diam = 2.0 * r * std::sqrt(static_cast<double>(s));
  const double alpha = beta - l;
  double rem = 0.0;
  if (l == 0)
    rem = (lin + 2.0 * quad * r) * std::sqrt(static_cast<double>(s)) * std::pow(diam, 1.0 - alpha);
  else if (l == 1)
    rem = quad * std::pow(diam, 2.0 - beta);
  return std::max(bound, rem);
}

Component trig_component(Block block, double a, double omega, double phase, double beta)
{
  Component c;
  c.profile = Profile::trig;
  c.amplitude = a;
  c.frequency = omega;
  c.phase = phase;
  c.beta = beta;
  c.lipschitz = trig_holder_constant(a, omega, static_cast<int>(block.size()), beta);
  c.block = std::move(block);
  return c;
}

Component profile_component(Profile p, Block block, const FunctionSpec& spec, double phase,
                            double beta_i, double radius)
{
  switch (p) {
    case Profile::trig:
      return trig_component(std::move(block), spec.amplitude, spec.frequency, phase, beta_i);
    case Profile::kink: {
      if (block.size() != 1)
        throw std::invalid_argument("the kink profile is one-dimensional");
      if (beta_i > 1.0)
        throw std::invalid_argument("the kink profile is only Hoelder up to order 1");
      Component c;
      c.profile = Profile::kink;
      c.amplitude = spec.amplitude;
      c.frequency = spec.frequency;
      c.beta = beta_i;
      c.lipschitz = kink_holder_constant(spec.amplitude, spec.frequency, beta_i);
      c.block = std::move(block);
      return c;
    }
    case Profile::poly: {
      Component c;
      c.profile = Profile::poly;
      const int s = static_cast<int>(block.size());
      c.coefficients = poly_coefficients(s, spec.degree);
      for (double& v : c.coefficients)
        v *= spec.amplitude;
      c.beta = beta_i;
      c.lipschitz = poly_holder_constant(c.coefficients, s, beta_i, radius);
      c.block = std::move(block);
      return c;
    }
    case Profile::none:
      break;
  }
  Component z;
  z.block = std::move(block);
  z.beta = beta_i;
  return z;
}

} // namespace

std::string to_string(FunctionFamily f)
{
  switch (f) {
    case FunctionFamily::single_index:
      return "single-index";
    case FunctionFamily::additive:
      return "additive";
    case FunctionFamily::projection_pursuit:
      return "projection-pursuit";
    case FunctionFamily::multi_index:
      return "multi-index";
    case FunctionFamily::additive_multi_index:
      return "additive-multi-index";
    case FunctionFamily::polynomial:
      return "polynomial";
    case FunctionFamily::zero:
      return "zero";
  }
  return "zero";
}

FunctionFamily parse_family(const std::string& s)
{
  for (auto f : {FunctionFamily::single_index, FunctionFamily::additive,
                 FunctionFamily::projection_pursuit, FunctionFamily::multi_index,
                 FunctionFamily::additive_multi_index, FunctionFamily::polynomial,
                 FunctionFamily::zero})
    if (to_string(f) == s)
      return f;
  throw std::invalid_argument("unknown function family '" + s + "'");
}

std::string to_string(Profile p)
{
  switch (p) {
    case Profile::trig:
      return "trig";
    case Profile::kink:
      return "kink";
    case Profile::poly:
      return "poly";
    case Profile::none:
      return "none";
  }
  return "none";
}

Profile parse_profile(const std::string& s)
{
  for (auto p : {Profile::trig, Profile::kink, Profile::poly, Profile::none})
    if (to_string(p) == s)
      return p;
  throw std::invalid_argument("unknown profile '" + s + "'");
}

double trig_holder_constant(double amplitude, double omega, int s, double beta)
{
  if (!(beta > 0.0))
    throw std::invalid_argument("beta must be positive");
  const int l = holder_order(beta);
  const double alpha = beta - l;
  double derivs = 0.0;
  for (int k = 0; k <= l; ++k)
    derivs = std::max(derivs, std::pow(omega, k));
  double rem = std::pow(2.0, 1.0 - alpha) * std::pow(std::sqrt(double(s)) * omega, beta) /
               factorial(l);
  return amplitude * std::max(derivs, rem);
}

double kink_holder_constant(double amplitude, double omega, double beta)
{
  if (!(beta > 0.0 && beta <= 1.0))
    throw std::invalid_argument("the kink profile needs 0 < beta <= 1");
  return amplitude * std::max(1.0, std::pow(omega, beta));
}

double Component::operator()(std::span<const double> u) const
{
  switch (profile) {
    case Profile::trig: {
      double v = amplitude;
      for (std::size_t j = 0; j < u.size(); ++j)
        v *= std::cos(frequency * u[j] + phase);
      return v;
    }
    case Profile::kink:
      return amplitude * std::abs(std::sin(frequency * u[0]));
    case Profile::poly: {
      const std::size_t s = u.size();
      double v = coefficients[0];
      for (std::size_t j = 0; j < s; ++j)
        v += coefficients[1 + j] * u[j];
      std::size_t k = 1 + s;
      for (std::size_t j = 0; j < s; ++j)
        for (std::size_t m = j; m < s; ++m)
          v += coefficients[k++] * u[j] * u[m];
      return v;
    }
    case Profile::none:
      break;
  }
  return 0.0;
}

double StructuredFunction::operator()(std::span<const double> t) const
{
  double v = 0.0;
  double u[16];
  for (const auto& c : components) {
    if (c.is_zero())
      continue;
    const std::size_t s = c.block.size();
    for (std::size_t k = 0; k < s; ++k) {
      double acc = 0.0;
      const int col = c.block[k];
      for (int a = 0; a < dim; ++a)
        acc += directions(a, col) * t[a];
      u[k] = acc;
    }
    v += c(std::span<const double>(u, s));
  }
  return v;
}

ScalarFunction StructuredFunction::evaluator() const
{
  return [f = *this](std::span<const double> t) { return f(t); };
}

StructuredFunction make_test_function(const FunctionSpec& spec)
{
  const int d = spec.dim;
  if (d < 1 || d > 16)
    throw std::invalid_argument("test functions support 1 <= d <= 16");
  if (!(spec.beta > 0.0))
    throw std::invalid_argument("beta must be positive");
  StructuredFunction f;
  f.kind = parse_family(spec.family);
  f.dim = d;
  f.beta = spec.beta;
  f.angles = spec.angles.empty() ? std::vector<double>(rotation_angle_count(d), 0.0) : spec.angles;
  Profile prof = parse_profile(spec.profile);
  // box containing E_i^T t for t in [-W, W]^d with W <= 1/2 + sqrt(d) + 1
  const double radius = std::sqrt(double(d)) * (1.5 + std::sqrt(double(d)));
  const double pi = 3.141592653589793;

  auto singletons = [d] {
    Partition p;
    for (int j = 0; j < d; ++j)
      p.push_back({j});
    return p;
  };
  Block all;
  for (int j = 0; j < d; ++j)
    all.push_back(j);

  switch (f.kind) {
    case FunctionFamily::single_index: {
      f.directions = rotation_matrix(d, f.angles);
      f.partition = {{0}};
      if (d > 1) {
        Block rest(all.begin() + 1, all.end());
        f.partition.push_back(rest);
      }
      f.components.push_back(profile_component(prof, {0}, spec, 0.0, spec.beta, radius));
      if (d > 1)
        f.components.push_back(
          profile_component(Profile::none, f.partition[1], spec, 0.0, spec.beta * (d - 1), radius));
      break;
    }
    case FunctionFamily::additive:
    case FunctionFamily::projection_pursuit: {
      f.directions = f.kind == FunctionFamily::additive ? Eigen::MatrixXd::Identity(d, d)
                                                        : rotation_matrix(d, f.angles);
      if (f.kind == FunctionFamily::additive)
        f.angles.assign(rotation_angle_count(d), 0.0);
      f.partition = singletons();
      for (int j = 0; j < d; ++j)
        f.components.push_back(profile_component(prof, {j}, spec, -0.5 * pi * j, spec.beta, radius));
      break;
    }
    case FunctionFamily::multi_index: {
      const int m = spec.index_dim;
      if (m < 1 || m > d)
        throw std::invalid_argument("index_dim must lie in [1, d]");
      if (prof == Profile::kink && m > 1)
        throw std::invalid_argument("the kink profile is one-dimensional");
      f.directions = rotation_matrix(d, f.angles);
      Block head(all.begin(), all.begin() + m);
      f.partition = {head};
      f.components.push_back(profile_component(prof, head, spec, 0.0, spec.beta * m, radius));
      if (m < d) {
        Block rest(all.begin() + m, all.end());
        f.partition.push_back(rest);
        f.components.push_back(
          profile_component(Profile::none, rest, spec, 0.0, spec.beta * (d - m), radius));
      }
      break;
    }
    case FunctionFamily::additive_multi_index: {
      f.directions = rotation_matrix(d, f.angles);
      f.partition = spec.partition.empty() ? singletons() : parse_partition(spec.partition);
      if (!is_partition_of(f.partition, d))
        throw std::invalid_argument("'" + spec.partition + "' is not a partition");
      for (std::size_t i = 0; i < f.partition.size(); ++i) {
        const auto& b = f.partition[i];
        f.components.push_back(profile_component(prof, b, spec, -0.5 * pi * double(i),
                                                 spec.beta * double(b.size()), radius));
      }
      break;
    }
    case FunctionFamily::polynomial: {
      if (spec.degree < 0 || spec.degree > 2)
        throw std::invalid_argument("polynomial degree must lie in [0, 2]");
      f.directions = Eigen::MatrixXd::Identity(d, d);
      f.angles.assign(rotation_angle_count(d), 0.0);
      f.partition = {all};
      f.components.push_back(
        profile_component(Profile::poly, all, spec, 0.0, spec.beta * d, radius));
      break;
    }
    case FunctionFamily::zero: {
      f.directions = Eigen::MatrixXd::Identity(d, d);
      f.angles.assign(rotation_angle_count(d), 0.0);
      f.partition = {all};
      f.components.push_back(profile_component(Profile::none, all, spec, 0.0, spec.beta * d, radius));
      break;
    }
  }

  for (const auto& c : f.components) {
    double eff = c.beta / static_cast<double>(c.block.size());
    if (std::abs(eff - f.beta) > 1e-12 * f.beta)
      throw std::invalid_argument("component smoothness violates beta_i = beta |I_i|");
    f.lipschitz = std::max(f.lipschitz, c.lipschitz);
  }
  return f;
}

} // namespace structadapt
