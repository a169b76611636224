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

#include "echogfa/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "echogfa/echo.hpp"
#include "echogfa/error.hpp"
#include "echogfa/rng.hpp"
#include "echogfa/volterra.hpp"

namespace echogfa::harness {

namespace {

constexpr Index kBlockSize = 16;
constexpr Index kVolterraAboveDim = 32;

using Values = std::vector<Complex>;
// One entry per tracked quantity: f, fbar, then one per Gamma.
using Sample = std::vector<Values>;

void add_into(Sample& acc, const Sample& other) {
  for (std::size_t q = 0; q < acc.size(); ++q) {
    for (std::size_t i = 0; i < acc[q].size(); ++i) acc[q][i] += other[q][i];
  }
}

// Pairwise summation over [first, last) in index order.
Sample pairwise_sum(const std::vector<Sample>& items, std::size_t first, std::size_t last) {
  if (last - first == 1) return items[first];
  const std::size_t mid = first + (last - first) / 2;
  Sample left = pairwise_sum(items, first, mid);
  add_into(left, pairwise_sum(items, mid, last));
  return left;
}

std::string format_hex(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", x);
  return buf;
}

}  // namespace

std::string to_string(SimulationMethod method) {
  switch (method) {
    case SimulationMethod::automatic: return "auto";
    case SimulationMethod::volterra: return "volterra";
    case SimulationMethod::superoperator: return "superoperator";
    case SimulationMethod::stepper: return "stepper";
  }
  return "auto";
}

SimulationMethod simulation_method_from_string(const std::string& name) {
  if (name == "auto") return SimulationMethod::automatic;
  if (name == "volterra") return SimulationMethod::volterra;
  if (name == "superoperator") return SimulationMethod::superoperator;
  if (name == "stepper") return SimulationMethod::stepper;
  throw InvalidArgument("unknown method '" + name +
                        "' (expected auto, volterra, superoperator or stepper)");
}

void ExperimentConfig::validate() const {
  ensemble.validate();
  grid.validate();
  if (!std::isfinite(lambda)) throw InvalidArgument("lambda must be finite");
  for (double g : gamma_list) {
    if (!std::isfinite(g) || g < 0.0) {
      throw InvalidRate("every Gamma must be finite and non-negative");
    }
  }
  if (n_run < 1) throw InvalidArgument("n_run must be at least 1");
  if (n_batch < 1) throw InvalidArgument("n_batch must be at least 1");
  if (threads < 1) throw InvalidArgument("threads must be at least 1");
  if (initial_state) {
    if (initial_state->rows() != ensemble.dim) {
      throw ShapeError("initial state dimension does not match dim");
    }
    echo::validate_initial_state(*initial_state);
  }
  const SimulationMethod method_used = resolved_method();
  if (method_used == SimulationMethod::superoperator && ensemble.dim > max_superoperator_dim) {
    throw ResourceError("superoperator method infeasible for dim " + std::to_string(ensemble.dim) +
                        " (limit " + std::to_string(max_superoperator_dim) + ")");
  }
  if (method_used == SimulationMethod::volterra) {
    for (double g : gamma_list) {
      if (0.5 * g * grid.dt >= 1.0) {
        throw StepsizeError("Gamma=" + std::to_string(g) + " too large for dt=" +
                            std::to_string(grid.dt));
      }
    }
  }
}

SimulationMethod ExperimentConfig::resolved_method() const {
  if (method != SimulationMethod::automatic) return method;
  return ensemble.dim > kVolterraAboveDim ? SimulationMethod::volterra
                                          : SimulationMethod::superoperator;
}

std::string config_fingerprint(const ExperimentConfig& config) {
  std::ostringstream s;
  s << "dim=" << config.ensemble.dim << ";beta=" << static_cast<int>(config.ensemble.beta)
    << ";seed=" << config.ensemble.master_seed << ";lambda=" << format_hex(config.lambda)
    << ";gammas=";
  for (double g : config.gamma_list) s << format_hex(g) << ',';
  s << ";dt=" << format_hex(config.grid.dt) << ";points=" << config.grid.points
    << ";n_run=" << config.n_run << ";n_batch=" << config.n_batch
    << ";method=" << to_string(config.resolved_method())
    << ";max_superoperator_dim=" << config.max_superoperator_dim << ";initial=";
  if (config.initial_state) {
    for (Index j = 0; j < config.initial_state->cols(); ++j) {
      for (Index i = 0; i < config.initial_state->rows(); ++i) {
        const Complex z = (*config.initial_state)(i, j);
        s << format_hex(z.real()) << ':' << format_hex(z.imag()) << ',';
      }
    }
  } else {
    s << "mixed";
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(rng::fnv1a(s.str())));
  return buf;
}

FidelityCurve difference_curve(const FidelityCurve& a, const FidelityCurve& b) {
  require_same_grid(a, b, "difference_curve");
  FidelityCurve out = FidelityCurve::constant(a.grid, Complex(0.0));
  for (std::size_t i = 0; i < a.values.size(); ++i) out.values[i] = a.values[i] - b.values[i];
  if (a.error || b.error) {
    std::vector<Complex> err(a.values.size());
    for (std::size_t i = 0; i < err.size(); ++i) {
      const Complex ea = a.error ? (*a.error)[i] : Complex(0.0);
      const Complex eb = b.error ? (*b.error)[i] : Complex(0.0);
      err[i] = Complex(std::hypot(ea.real(), eb.real()), std::hypot(ea.imag(), eb.imag()));
    }
    out.error = std::move(err);
  }
  return out;
}

std::vector<FidelityCurve> theory_pipeline(const FidelityCurve& f, const FidelityCurve& kernel,
                                           const std::vector<double>& gamma_list) {
  std::vector<FidelityCurve> out;
  out.reserve(gamma_list.size());
  for (double g : gamma_list) {
    try {
      out.push_back(volterra::generalized_fidelity(volterra::solve({f, kernel, g}), g));
    } catch (const StepsizeError& e) {
      throw StepsizeError("theory for Gamma=" + std::to_string(g) + ": " + e.what());
    } catch (const InvalidRate& e) {
      throw InvalidRate("theory for Gamma=" + std::to_string(g) + ": " + e.what());
    }
  }
  return out;
}

FidelityCurve mean_with_error(const std::vector<FidelityCurve>& samples) {
  if (samples.empty()) throw InvalidArgument("mean_with_error: no samples");
  for (const auto& s : samples) require_same_grid(samples.front(), s, "mean_with_error");
  const std::size_t n = samples.front().values.size();
  const double count = static_cast<double>(samples.size());

  FidelityCurve out = FidelityCurve::constant(samples.front().grid, Complex(0.0));
  for (const auto& s : samples) {
    for (std::size_t i = 0; i < n; ++i) out.values[i] += s.values[i];
  }
  for (auto& v : out.values) v /= count;
  if (samples.size() < 2) return out;

  std::vector<Complex> err(n);
  for (std::size_t i = 0; i < n; ++i) {
    double var_re = 0.0;
    double var_im = 0.0;
    for (const auto& s : samples) {
      const Complex d = s.values[i] - out.values[i];
      var_re += d.real() * d.real();
      var_im += d.imag() * d.imag();
    }
    const double norm = (count - 1.0) * count;
    err[i] = Complex(std::sqrt(var_re / norm), std::sqrt(var_im / norm));
  }
  out.error = std::move(err);
  return out;
}

FidelityCurve realization_fidelity(const echo::EchoSystem& system, const FidelityCurve& f,
                                   const FidelityCurve& kernel, const Eigen::MatrixXcd& rho0,
                                   double gamma, SimulationMethod method,
                                   const master::PropagationOptions& options) {
  // Without decay the generalized amplitude is f itself, whatever the method.
  if (gamma == 0.0 && method != SimulationMethod::automatic) return f;
  switch (method) {
    case SimulationMethod::volterra:
      return volterra::generalized_fidelity(volterra::solve({f, kernel, gamma}), gamma);
    case SimulationMethod::superoperator:
    case SimulationMethod::stepper: {
      const auto generator =
          master::rmt_generator(system.perturbed(), system.unperturbed(), gamma);
      const auto how = method == SimulationMethod::superoperator
                           ? master::PropagationMethod::superoperator
                           : master::PropagationMethod::stepper;
      return master::trace_curve(master::propagate(generator, rho0, f.grid, how, options));
    }
    case SimulationMethod::automatic:
      break;
  }
  throw InvalidArgument("realization_fidelity needs a resolved method");
}

RunReport run_ensemble(const ExperimentConfig& config, const ProgressCallback& progress) {
  const auto started = std::chrono::steady_clock::now();
  config.validate();
  const SimulationMethod method = config.resolved_method();
  const Index dim = config.ensemble.dim;
  const bool mixed = !config.initial_state.has_value();
  const Eigen::MatrixXcd rho0 = mixed ? echo::maximally_mixed(dim) : *config.initial_state;
  const std::size_t n_gamma = config.gamma_list.size();
  master::PropagationOptions options;
  options.max_superoperator_dim = config.max_superoperator_dim;

  const Index blocks_per_batch = (config.n_run + kBlockSize - 1) / kBlockSize;
  const Index total_blocks = blocks_per_batch * config.n_batch;

  // Sample for one realization: [f, fbar, f_{lambda,Gamma_0}, ...].
  auto compute = [&](std::uint64_t index) {
    rmt::EnsembleConfig ec = config.ensemble;
    ec.realization_index = index;
    const echo::EchoSystem system(rmt::build_realization(ec), config.lambda);
    FidelityCurve kernel = system.kernel_curve(config.grid);
    FidelityCurve f = mixed ? kernel : system.fidelity_curve(rho0, config.grid);
    Sample sample;
    sample.reserve(2 + n_gamma);
    for (double g : config.gamma_list) {
      sample.push_back(
          realization_fidelity(system, f, kernel, rho0, g, method, options).values);
    }
    sample.insert(sample.begin(), std::move(kernel.values));
    sample.insert(sample.begin(), std::move(f.values));
    return sample;
  };

  std::vector<Sample> block_sums(static_cast<std::size_t>(total_blocks));
  std::atomic<Index> next_block{0};
  std::atomic<Index> done_blocks{0};
  std::atomic<bool> failed{false};
  std::mutex failure_mutex;
  std::uint64_t failed_index = 0;
  std::exception_ptr failure;
  std::mutex progress_mutex;

  auto worker = [&] {
    while (!failed.load()) {
      const Index block = next_block.fetch_add(1);
      if (block >= total_blocks) return;
      const Index batch = block / blocks_per_batch;
      const Index first = (block % blocks_per_batch) * kBlockSize;
      const Index last = std::min(config.n_run, first + kBlockSize);
      std::vector<Sample> samples;
      samples.reserve(static_cast<std::size_t>(last - first));
      std::uint64_t index = 0;
      try {
        for (Index r = first; r < last; ++r) {
          index = static_cast<std::uint64_t>(batch * config.n_run + r);
          samples.push_back(compute(index));
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure || index < failed_index) {
          failure = std::current_exception();
          failed_index = index;
        }
        failed.store(true);
        return;
      }
      block_sums[static_cast<std::size_t>(block)] = pairwise_sum(samples, 0, samples.size());
      const Index done = ++done_blocks;
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(done, total_blocks);
      }
    }
  };

  const unsigned n_threads =
      static_cast<unsigned>(std::min<Index>(config.threads, std::max<Index>(1, total_blocks)));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  }

  if (failure) {
    try {
      std::rethrow_exception(failure);
    } catch (const Error& e) {
      std::ostringstream msg;
      msg << "realization failed (master_seed=" << config.ensemble.master_seed
          << ", realization_index=" << failed_index << "): " << e.what();
      throw NumericError(msg.str());
    }
  }

  // Batch means, then statistics over batches.
  const std::size_t n_quantities = 2 + n_gamma;
  std::vector<std::vector<FidelityCurve>> per_quantity(n_quantities);
  for (Index b = 0; b < config.n_batch; ++b) {
    const auto first = static_cast<std::size_t>(b * blocks_per_batch);
    Sample sum = pairwise_sum(block_sums, first, first + static_cast<std::size_t>(blocks_per_batch));
    for (std::size_t q = 0; q < n_quantities; ++q) {
      for (auto& v : sum[q]) v /= static_cast<double>(config.n_run);
      per_quantity[q].push_back(FidelityCurve{config.grid, std::move(sum[q]), std::nullopt});
    }
  }

  RunReport report;
  report.fidelity = mean_with_error(per_quantity[0]);
  report.kernel = mean_with_error(per_quantity[1]);

  const FidelityCurve f_mean{config.grid, report.fidelity.values, std::nullopt};
  const FidelityCurve k_mean{config.grid, report.kernel.values, std::nullopt};

  for (std::size_t g = 0; g < n_gamma; ++g) {
    const double gamma = config.gamma_list[g];
    GammaCurves gc;
    gc.gamma = gamma;
    if (config.lambda != 0.0) gc.alpha = gamma / config.lambda;
    gc.simulated = mean_with_error(per_quantity[2 + g]);

    std::vector<FidelityCurve> sim_diff, theory_b, theory_diff_b, phi_b;
    for (Index b = 0; b < config.n_batch; ++b) {
      const auto& fb = per_quantity[0][static_cast<std::size_t>(b)];
      const auto& kb = per_quantity[1][static_cast<std::size_t>(b)];
      sim_diff.push_back(difference_curve(per_quantity[2 + g][static_cast<std::size_t>(b)], fb));
      FidelityCurve phi = volterra::solve({fb, kb, gamma});
      FidelityCurve th = volterra::generalized_fidelity(phi, gamma);
      theory_diff_b.push_back(difference_curve(th, fb));
      theory_b.push_back(std::move(th));
      phi_b.push_back(std::move(phi));
    }
    gc.simulated_difference = mean_with_error(sim_diff);

    gc.theory_phi = volterra::solve({f_mean, k_mean, gamma});
    gc.theory = volterra::generalized_fidelity(gc.theory_phi, gamma);
    gc.theory_difference = difference_curve(gc.theory, f_mean);
    gc.theory_phi.error = mean_with_error(phi_b).error;
    gc.theory.error = mean_with_error(theory_b).error;
    gc.theory_difference.error = mean_with_error(theory_diff_b).error;
    gc.first_order = volterra::first_order(f_mean, k_mean, gamma);
    report.per_gamma.push_back(std::move(gc));
  }

  report.metadata.master_seed = config.ensemble.master_seed;
  report.metadata.method = method;
  report.metadata.n_run = config.n_run;
  report.metadata.n_batch = config.n_batch;
  report.metadata.config_hash = config_fingerprint(config);
  report.metadata.threads = config.threads;
  report.metadata.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

}  // namespace echogfa::harness
