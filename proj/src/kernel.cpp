// Copyright 2026 The echo-gfa Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <numbers>
#include <sstream>
#include <utility>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "echogfa/error.hpp"
#include "echogfa/master.hpp"

namespace echogfa::master {

namespace {

using Quadrature = boost::math::quadrature::gauss_kronrod<double, 31>;

constexpr unsigned kMaxDepth = 15;
constexpr double kPanelTolerance = 1e-10;
// The tail is considered gone once this many consecutive panels carry less
// than kTailFraction of the accumulated weight.
constexpr int kQuietPanels = 3;
constexpr double kTailFraction = 1e-15;
constexpr double kMaxRangeInScales = 1e4;

struct PanelResult {
  Complex value;
  double weight;  // int |C|
};

// One non-adaptive Gauss-Kronrod rule per piece, bisecting until the error
// estimate is small against int |C e^{i w s}|. Boost's own adaptive driver
// measures its tolerance against |int f|, which never converges on panels
// where the oscillating integrand cancels.
template <class F>
PanelResult integrate_panel(const F& c, double omega, double a, double b, unsigned depth = 0) {
  double err_re = 0.0, err_im = 0.0, err_abs = 0.0;
  double l1_re = 0.0, l1_im = 0.0;
  const double re = Quadrature::integrate(
      [&](double s) { return c(s) * std::cos(omega * s); }, a, b, 0, 0.0, &err_re, &l1_re);
  const double im = Quadrature::integrate(
      [&](double s) { return c(s) * std::sin(omega * s); }, a, b, 0, 0.0, &err_im, &l1_im);
  const double weight =
      Quadrature::integrate([&](double s) { return std::abs(c(s)); }, a, b, 0, 0.0, &err_abs);
  if (!std::isfinite(re) || !std::isfinite(im)) {
    std::ostringstream msg;
    msg << "Gauss-Kronrod panel [" << a << ", " << b << "] produced non-finite values at omega="
        << omega;
    throw QuadratureError(msg.str());
  }
  const double scale = std::max(weight, l1_re + l1_im);
  if (std::max(err_re, err_im) <= kPanelTolerance * scale) return {Complex(re, im), weight};
  if (depth >= kMaxDepth) {
    if (std::max(err_re, err_im) > 1e-8 * (1.0 + scale)) {
      std::ostringstream msg;
      msg << "Gauss-Kronrod panel [" << a << ", " << b << "] failed at omega=" << omega
          << " (error estimates " << err_re << ", " << err_im << ")";
      throw QuadratureError(msg.str());
    }
    return {Complex(re, im), weight};
  }
  const double mid = 0.5 * (a + b);
  const PanelResult left = integrate_panel(c, omega, a, mid, depth + 1);
  const PanelResult right = integrate_panel(c, omega, mid, b, depth + 1);
  return {left.value + right.value, left.weight + right.weight};
}

}  // namespace

CorrelationKernel CorrelationKernel::delta(double area) {
  if (!std::isfinite(area) || area <= 0.0) {
    throw InvalidArgument("delta kernel weight C0 must be positive");
  }
  CorrelationKernel k;
  k.kind_ = Kind::delta;
  k.name_ = "delta";
  k.area_ = area;
  return k;
}

CorrelationKernel CorrelationKernel::parametric(std::function<double(double)> c, double time_scale,
                                                std::string name) {
  if (!c) throw InvalidArgument("parametric kernel needs a callable");
  if (!std::isfinite(time_scale) || time_scale <= 0.0) {
    throw InvalidArgument("parametric kernel time scale must be positive");
  }
  CorrelationKernel k;
  k.kind_ = Kind::parametric;
  k.name_ = std::move(name);
  k.time_scale_ = time_scale;
  k.function_ = std::move(c);
  return k;
}

CorrelationKernel CorrelationKernel::exponential(double amplitude, double tau) {
  if (!std::isfinite(amplitude)) throw InvalidArgument("exponential kernel amplitude not finite");
  if (!std::isfinite(tau) || tau <= 0.0) {
    throw InvalidArgument("exponential kernel correlation time must be positive");
  }
  return parametric([amplitude, tau](double s) { return amplitude * std::exp(-s / tau); }, tau,
                    "exponential");
}

CorrelationKernel CorrelationKernel::exponential_with_area(double area, double tau) {
  if (!std::isfinite(area) || area <= 0.0) {
    throw InvalidArgument("exponential kernel area must be positive");
  }
  if (!std::isfinite(tau) || tau <= 0.0) {
    throw InvalidArgument("exponential kernel correlation time must be positive");
  }
  return exponential(area / (2.0 * tau), tau);
}

CorrelationKernel CorrelationKernel::tabulated(double ds, std::vector<double> samples) {
  if (!std::isfinite(ds) || ds <= 0.0) throw InvalidArgument("tabulated kernel spacing must be positive");
  if (samples.size() < 2) throw InvalidArgument("tabulated kernel needs at least two samples");
  for (double v : samples) {
    if (!std::isfinite(v)) throw InvalidArgument("tabulated kernel has non-finite samples");
  }
  CorrelationKernel k;
  k.kind_ = Kind::tabulated;
  k.name_ = "tabulated";
  k.ds_ = ds;
  k.time_scale_ = ds * static_cast<double>(samples.size() - 1);
  k.samples_ = std::move(samples);
  return k;
}

double CorrelationKernel::operator()(double s) const {
  switch (kind_) {
    case Kind::delta:
      throw InvalidArgument("delta kernel has no pointwise value");
    case Kind::parametric:
      return function_(s);
    case Kind::tabulated: {
      if (s < 0.0) return 0.0;
      const double x = s / ds_;
      const auto last = static_cast<double>(samples_.size() - 1);
      if (x >= last) return x == last ? samples_.back() : 0.0;
      const auto i = static_cast<std::size_t>(x);
      const double frac = x - static_cast<double>(i);
      return (1.0 - frac) * samples_[i] + frac * samples_[i + 1];
    }
  }
  return 0.0;
}

Complex CorrelationKernel::one_sided_transform(double omega) const {
  if (!std::isfinite(omega)) throw QuadratureError("non-finite frequency in kernel transform");
  const auto c = [this](double s) { return (*this)(s); };

  switch (kind_) {
    case Kind::delta:
      return Complex(0.5 * area_, 0.0);

    case Kind::tabulated: {
      // Finite support; one panel per table segment keeps the integrand smooth.
      Complex total{0.0, 0.0};
      for (std::size_t i = 0; i + 1 < samples_.size(); ++i) {
        const double a = ds_ * static_cast<double>(i);
        total += integrate_panel(c, omega, a, a + ds_).value;
      }
      return total;
    }

    case Kind::parametric: {
      double panel = time_scale_;
      if (omega != 0.0) panel = std::min(panel, std::numbers::pi / std::abs(omega));
      const double max_range = kMaxRangeInScales * time_scale_;

      Complex total{0.0, 0.0};
      double weight = 0.0;
      double last_weight = 0.0;
      int quiet = 0;
      double a = 0.0;
      while (a < max_range) {
        const PanelResult r = integrate_panel(c, omega, a, a + panel);
        total += r.value;
        weight += r.weight;
        last_weight = r.weight;
        a += panel;
        if (a >= time_scale_ && r.weight <= kTailFraction * weight) {
          if (++quiet >= kQuietPanels) return total;
        } else {
          quiet = 0;
        }
      }
      std::ostringstream msg;
      msg << "one-sided transform of kernel '" << name_ << "' did not converge at omega=" << omega
          << ": reached s=" << a << " (" << kMaxRangeInScales
          << " correlation times) with tail panel weight " << last_weight
          << " against accumulated weight " << weight;
      throw QuadratureError(msg.str());
    }
  }
  return {};
}

Eigen::MatrixXcd gamma_operator(const CorrelationKernel& kernel, const echo::SpectralData& h,
                                const Eigen::MatrixXcd& coupling) {
  const Index n = h.dim();
  if (coupling.rows() != n || coupling.cols() != n || h.vectors.rows() != n ||
      h.vectors.cols() != n) {
    throw ShapeError("gamma_operator: coupling and Hamiltonian dimensions differ");
  }
  if (!h.energies.allFinite()) throw NumericError("gamma_operator: non-finite eigenvalues");

  if (kernel.kind() == CorrelationKernel::Kind::delta) {
    return 0.5 * kernel.area() * coupling;
  }

  // U(s) V U(s)^+ has entries V_ab exp(-i (E_a - E_b) s) in the eigenbasis.
  Eigen::MatrixXcd rotated = h.vectors.adjoint() * coupling * h.vectors;
  const Complex at_zero = kernel.one_sided_transform(0.0);
  for (Index b = 0; b < n; ++b) {
    for (Index a = 0; a < n; ++a) {
      const Complex weight =
          a == b ? at_zero : kernel.one_sided_transform(h.energies[b] - h.energies[a]);
      rotated(a, b) *= weight;
    }
  }
  return h.vectors * rotated * h.vectors.adjoint();
}

}  // namespace echogfa::master
