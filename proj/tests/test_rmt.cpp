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

#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"

#include "echogfa/error.hpp"
#include "echogfa/rmt.hpp"

using namespace echogfa;
using rmt::SymmetryClass;

namespace {

// Checks <V_ij V_kl> against d_jk d_il (+ d_ik d_jl for GOE) entrywise.
// Returns the largest deviation in units of its standard error.
double covariance_z(Index dim, SymmetryClass beta, int draws, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(dim);
  const std::size_t n4 = n * n * n * n;
  std::vector<Complex> sum(n4), sum_sq(n4);
  auto rng = rng::make_stream(seed, 0, "covariance");
  for (int d = 0; d < draws; ++d) {
    const Eigen::MatrixXcd v = rmt::sample_gaussian(dim, beta, rng);
    std::size_t idx = 0;
    for (Index i = 0; i < dim; ++i)
      for (Index j = 0; j < dim; ++j)
        for (Index k = 0; k < dim; ++k)
          for (Index l = 0; l < dim; ++l, ++idx) {
            const Complex p = v(i, j) * v(k, l);
            sum[idx] += p;
            sum_sq[idx] += Complex(p.real() * p.real(), p.imag() * p.imag());
          }
  }
  double worst = 0.0;
  std::size_t idx = 0;
  const double count = draws;
  for (Index i = 0; i < dim; ++i)
    for (Index j = 0; j < dim; ++j)
      for (Index k = 0; k < dim; ++k)
        for (Index l = 0; l < dim; ++l, ++idx) {
          double expected = (j == k && i == l) ? 1.0 : 0.0;
          if (beta == SymmetryClass::orthogonal && i == k && j == l) expected += 1.0;
          const Complex mean = sum[idx] / count;
          const double var_re = sum_sq[idx].real() / count - mean.real() * mean.real();
          const double var_im = sum_sq[idx].imag() / count - mean.imag() * mean.imag();
          const double se_re = std::sqrt(std::max(var_re, 0.0) / count);
          const double se_im = std::sqrt(std::max(var_im, 0.0) / count);
          // Identically zero components (GOE imaginary parts) have no spread.
          if (se_re > 0.0) worst = std::max(worst, std::abs(mean.real() - expected) / se_re);
          else if (mean.real() != expected) worst = INFINITY;
          if (se_im > 0.0) worst = std::max(worst, std::abs(mean.imag()) / se_im);
          else if (mean.imag() != 0.0) worst = INFINITY;
        }
  return worst;
}

double wigner_cdf(double s) { return 1.0 - std::exp(-M_PI * s * s / 4.0); }

}  // namespace

TEST_CASE("GOE samples are exactly real symmetric") {
  auto rng = rng::make_stream(7, 0, "t");
  const Eigen::MatrixXcd m = rmt::sample_gaussian(5, SymmetryClass::orthogonal, rng);
  CHECK(m == m.transpose());
  CHECK(m.imag().isZero(0.0));
}

TEST_CASE("GUE samples are exactly Hermitian") {
  auto rng = rng::make_stream(7, 1, "t");
  for (int k = 0; k < 20; ++k) {
    const Eigen::MatrixXcd m = rmt::sample_gaussian(6, SymmetryClass::unitary, rng);
    CHECK((m - m.adjoint()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("GUE off-diagonal second moment is one") {
  auto rng = rng::make_stream(11, 0, "moments");
  const int draws = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int d = 0; d < draws; ++d) {
    const double x = std::norm(rmt::sample_gaussian(2, SymmetryClass::unitary, rng)(0, 1));
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / draws;
  const double se = std::sqrt((sum_sq / draws - mean * mean) / draws);
  CHECK(std::abs(mean - 1.0) < 5.0 * se);
}

TEST_CASE("GOE diagonal variance is two") {
  auto rng = rng::make_stream(12, 0, "moments");
  const int draws = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int d = 0; d < draws; ++d) {
    const double x = rmt::sample_gaussian(2, SymmetryClass::orthogonal, rng)(0, 0).real();
    sum += x * x;
    sum_sq += x * x * x * x;
  }
  const double mean = sum / draws;
  const double se = std::sqrt((sum_sq / draws - mean * mean) / draws);
  CHECK(std::abs(mean - 2.0) < 5.0 * se);
}

TEST_CASE("full covariance tensor matches the ensemble convention") {
  CHECK(covariance_z(3, SymmetryClass::orthogonal, 20000, 5) < 5.0);
  CHECK(covariance_z(3, SymmetryClass::unitary, 20000, 6) < 5.0);
}

TEST_CASE("invalid dimension and class are rejected") {
  auto rng = rng::make_stream(1, 0, "t");
  CHECK_THROWS_AS(rmt::sample_gaussian(1, SymmetryClass::unitary, rng), InvalidDimension);
  CHECK_THROWS_AS(rmt::sample_gaussian(4, static_cast<SymmetryClass>(4), rng), InvalidClass);
  CHECK_THROWS_AS(rmt::symmetry_class_from_beta(4), InvalidClass);
  CHECK(rmt::symmetry_class_from_beta(2) == SymmetryClass::unitary);
  rmt::EnsembleConfig c;
  c.dim = 0;
  CHECK_THROWS_AS(c.validate(), InvalidDimension);
}

TEST_CASE("unfolded spectrum is ascending with unit mean spacing") {
  for (Index dim : {2, 7, 50}) {
    for (auto beta : {SymmetryClass::orthogonal, SymmetryClass::unitary}) {
      auto rng = rng::make_stream(3, static_cast<std::uint64_t>(dim), "levels");
      const Eigen::VectorXd x = rmt::unfolded_spectrum(dim, beta, rng);
      CHECK(x.size() == dim);
      CHECK(std::is_sorted(x.begin(), x.end()));
      CHECK((x[dim - 1] - x[0]) / static_cast<double>(dim - 1) == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(std::abs(x[0] + x[dim - 1]) < 1e-12);
    }
  }
}

TEST_CASE("GOE spacings follow the Wigner surmise") {
  std::vector<double> spacings;
  for (std::uint64_t r = 0; r < 200; ++r) {
    rmt::EnsembleConfig c{50, SymmetryClass::orthogonal, 99, r};
    const Eigen::VectorXd x = rmt::build_realization(c).env_levels;
    for (Index i = 1; i < x.size(); ++i) spacings.push_back(x[i] - x[i - 1]);
  }
  std::sort(spacings.begin(), spacings.end());
  const double n = static_cast<double>(spacings.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < spacings.size(); ++i) {
    const double cdf = wigner_cdf(spacings[i]);
    ks = std::max({ks, std::abs(cdf - i / n), std::abs(cdf - (i + 1) / n)});
  }
  MESSAGE("KS distance " << ks);
  CHECK(ks < 0.15);
}

TEST_CASE("realizations are deterministic and streams are separated") {
  rmt::EnsembleConfig c{6, SymmetryClass::unitary, 42, 3};
  const auto a = rmt::build_realization(c);
  const auto b = rmt::build_realization(c);
  CHECK(a.env_levels == b.env_levels);
  CHECK(a.perturbation == b.perturbation);

  c.realization_index = 4;
  const auto other = rmt::build_realization(c);
  CHECK(other.perturbation != a.perturbation);
  CHECK(other.env_levels != a.env_levels);

  auto s1 = rng::make_stream(5, 1, "levels");
  auto s2 = rng::make_stream(5, 1, "levels");
  CHECK(rmt::unfolded_spectrum(9, SymmetryClass::orthogonal, s1) ==
        rmt::unfolded_spectrum(9, SymmetryClass::orthogonal, s2));
}

TEST_CASE("realization shapes") {
  const auto r = rmt::build_realization({50, SymmetryClass::orthogonal, 1, 0});
  CHECK(r.env_levels.size() == 50);
  CHECK(r.perturbation.rows() == 50);
  CHECK(r.perturbation.cols() == 50);
  CHECK((r.perturbation - r.perturbation.adjoint()).cwiseAbs().maxCoeff() == 0.0);
}
