// SPDX-License-Identifier: Apache-2.0
#include "fdsic/activation.hpp"

#include <cmath>
#include <string>

namespace fdsic {

namespace {

[[noreturn]] void unsupported(Activation kind, const char* field) {
  throw std::invalid_argument("activation '" + std::string(to_string(kind)) + "' is not defined on " + field + " values");
}

double sech2(double r) {
  const double c = std::cosh(r);
  return std::isfinite(c) ? 1.0 / (c * c) : 0.0;
}

}  // namespace

double activation_apply(Activation kind, double z) {
  switch (kind) {
    case Activation::Tanh: return std::tanh(z);
    case Activation::ReLU: return z > 0.0 ? z : 0.0;
    case Activation::Identity: return z;
    default: unsupported(kind, "real");
  }
}

double activation_derivative(Activation kind, double z) {
  switch (kind) {
    case Activation::Tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::ReLU: return z > 0.0 ? 1.0 : 0.0;
    case Activation::Identity: return 1.0;
    default: unsupported(kind, "real");
  }
}

Complex activation_apply(Activation kind, Complex z, double bias) {
  const double r = std::abs(z);
  switch (kind) {
    case Activation::Identity: return z;
    case Activation::CReLU: return {std::max(z.real(), 0.0), std::max(z.imag(), 0.0)};
    case Activation::ZReLU: return (r > 0.0 && z.real() >= 0.0 && z.imag() >= 0.0) ? z : Complex{};
    case Activation::Cardioid:
      if (r == 0.0) return {};
      return 0.5 * (1.0 + z.real() / r) * z;
    case Activation::ModReLU:
      if (r == 0.0 || r + bias <= 0.0) return {};
      return (r + bias) * (z / r);
    case Activation::AmpPhase:
      if (r == 0.0) return {};
      return std::tanh(r) * (z / r);
    default: unsupported(kind, "complex");
  }
}

WirtingerPair activation_derivative(Activation kind, Complex z, double bias) {
  const double r = std::abs(z);
  switch (kind) {
    case Activation::Identity: return {Complex{1.0, 0.0}, Complex{}};
    case Activation::CReLU: {
      // df/dx = H(x), df/dy = i H(y)
      const double hx = z.real() > 0.0 ? 1.0 : 0.0;
      const double hy = z.imag() > 0.0 ? 1.0 : 0.0;
      return {Complex{0.5 * (hx + hy), 0.0}, Complex{0.5 * (hx - hy), 0.0}};
    }
    case Activation::ZReLU:
      if (r > 0.0 && z.real() >= 0.0 && z.imag() >= 0.0) return {Complex{1.0, 0.0}, Complex{}};
      return {};
    case Activation::Cardioid: {
      if (r == 0.0) return {};
      // f = z/2 + (z + z*) z / (4|z|), u = z/|z|
      const Complex u = z / r;
      return {0.5 + (3.0 * u + std::conj(u)) / 8.0, (u - u * u * u) / 8.0};
    }
    case Activation::ModReLU: {
      if (r == 0.0 || r + bias <= 0.0) return {};
      // f = z + b z/|z|
      const Complex u = z / r;
      return {Complex{1.0 + bias / (2.0 * r), 0.0}, -bias * u * u / (2.0 * r)};
    }
    case Activation::AmpPhase: {
      if (r == 0.0) return {};
      // f = s(|z|) z with s(r) = tanh(r)/r
      const Complex u = z / r;
      const double s = std::tanh(r) / r;
      const double d = sech2(r);
      return {Complex{0.5 * (s + d), 0.0}, 0.5 * (d - s) * u * u};
    }
    default: unsupported(kind, "complex");
  }
}

Complex modrelu_bias_derivative(Complex z, double bias) {
  const double r = std::abs(z);
  if (r == 0.0 || r + bias <= 0.0) return {};
  return z / r;
}

}  // namespace fdsic
