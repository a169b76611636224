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
#include <string>

#include "echogfa/error.hpp"
#include "echogfa/master.hpp"

namespace echogfa::master {

namespace {

constexpr Complex kI{0.0, 1.0};

// out += scale * kron(a, b)
void add_kron(Eigen::MatrixXcd& out, const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b,
              Complex scale = 1.0) {
  const Index p = b.rows();
  const Index q = b.cols();
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      const Complex s = scale * a(i, j);
      if (s == Complex(0.0)) continue;
      out.block(i * p, j * q, p, q) += s * b;
    }
  }
}

void require_pair(const echo::Hamiltonian& perturbed, const echo::Hamiltonian& unperturbed) {
  if (perturbed.dim() == 0 || perturbed.dim() != unperturbed.dim() ||
      perturbed.matrix.cols() != perturbed.dim() ||
      unperturbed.matrix.cols() != unperturbed.dim()) {
    throw ShapeError("generator: H_lambda and H_0 must be square matrices of one dimension");
  }
}

}  // namespace

Eigen::MatrixXcd EchoGenerator::dissipator(const Eigen::MatrixXcd& rho) const {
  if (rho.rows() != dim() || rho.cols() != dim()) {
    throw ShapeError("generator applied to a matrix of dimension " + std::to_string(rho.rows()) +
                     ", expected " + std::to_string(dim()));
  }
  Eigen::MatrixXcd out = -decay_ * rho;
  if (left_.size() > 0) out.noalias() += left_ * rho;
  if (right_.size() > 0) out.noalias() += rho * right_;
  for (const Sandwich& term : sandwiches_) out.noalias() += term.left * rho * term.right;
  if (trace_coefficient_ != Complex(0.0)) {
    out.diagonal().array() += trace_coefficient_ * rho.trace();
  }
  return out;
}

Eigen::MatrixXcd EchoGenerator::apply(const Eigen::MatrixXcd& rho) const {
  Eigen::MatrixXcd out = dissipator(rho);
  out.noalias() -= kI * (h_perturbed_ * rho);
  out.noalias() += kI * (rho * h_unperturbed_);
  return out;
}

Eigen::MatrixXcd EchoGenerator::superoperator() const {
  const Index n = dim();
  const Index n2 = n * n;
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);

  // vec(A X B) = (B^T kron A) vec(X) for column-major vec.
  Eigen::MatrixXcd left = -kI * h_perturbed_;
  if (left_.size() > 0) left += left_;
  Eigen::MatrixXcd right = kI * h_unperturbed_;
  if (right_.size() > 0) right += right_;

  Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(n2, n2);
  add_kron(s, id, left);
  add_kron(s, right.transpose(), id);
  s.diagonal().array() -= decay_;
  for (const Sandwich& term : sandwiches_) add_kron(s, term.right.transpose(), term.left);
  if (trace_coefficient_ != Complex(0.0)) {
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) s(i * (n + 1), j * (n + 1)) += trace_coefficient_;
    }
  }
  return s;
}

EchoGenerator general_generator(const echo::Hamiltonian& perturbed,
                                const echo::Hamiltonian& unperturbed,
                                const Eigen::MatrixXcd& coupling, const CorrelationKernel& kernel,
                                double gamma) {
  require_pair(perturbed, unperturbed);
  if (coupling.rows() != perturbed.dim() || coupling.cols() != perturbed.dim()) {
    throw ShapeError("general_generator: coupling dimension does not match the Hamiltonians");
  }
  if (!std::isfinite(gamma)) throw InvalidArgument("general_generator: gamma must be finite");
  const double scale = std::max(1.0, coupling.cwiseAbs().maxCoeff());
  if ((coupling - coupling.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InvalidArgument("general_generator: coupling V' must be Hermitian");
  }

  EchoGenerator g;
  g.form_ = GeneratorForm::general;
  g.strength_ = gamma;
  g.h_perturbed_ = perturbed.matrix;
  g.h_unperturbed_ = unperturbed.matrix;
  if (gamma == 0.0) return g;

  const Eigen::MatrixXcd gamma_l = gamma_operator(kernel, perturbed.spectrum, coupling);
  const Eigen::MatrixXcd gamma_0 = gamma_operator(kernel, unperturbed.spectrum, coupling);
  const double g2 = gamma * gamma;
  // -g^2 { V' G_l rho - V' rho G_0 - G_l rho V' + rho G_0 V' }
  g.left_ = -g2 * (coupling * gamma_l);
  g.right_ = -g2 * (gamma_0 * coupling);
  g.sandwiches_.push_back({g2 * coupling, gamma_0});
  g.sandwiches_.push_back({g2 * gamma_l, coupling});
  return g;
}

EchoGenerator rmt_generator(const echo::Hamiltonian& perturbed,
                            const echo::Hamiltonian& unperturbed, double rate) {
  require_pair(perturbed, unperturbed);
  if (!std::isfinite(rate) || rate < 0.0) {
    throw InvalidRate("rmt_generator: rate Gamma must be finite and non-negative, got " +
                      std::to_string(rate));
  }
  EchoGenerator g;
  g.form_ = GeneratorForm::rmt;
  g.strength_ = rate;
  g.h_perturbed_ = perturbed.matrix;
  g.h_unperturbed_ = unperturbed.matrix;
  g.decay_ = rate;
  g.trace_coefficient_ = Complex(rate / static_cast<double>(perturbed.dim()), 0.0);
  return g;
}

}  // namespace echogfa::master
