#pragma once

#include <cstdint>
#include <span>

#include "kzpp/iteration.hpp"
#include "kzpp/linalg.hpp"
#include "kzpp/problems.hpp"

namespace kzpp {

/// w = I_Sᵀ(Ā_SS + λI)⁻¹(Ā_S x̄ - b̄_S) with R factoring Ā_SS + λI.
Vector cd_step(const Matrix& a_bar, std::span<const std::size_t> idx, const CholeskyFactor& r_factor,
               std::span<const double> x_bar, std::span<const double> b_bar, Meter meter = {});

/// Same step, also returning the block residual used for estimation.
Vector cd_step(const Matrix& a_bar, std::span<const std::size_t> idx, const CholeskyFactor& r_factor,
               std::span<const double> x_bar, std::span<const double> b_bar, Vector& residual,
               Meter meter = {});

/// CD++ on a symmetric positive (semi)definite system.
SolveResult solve_psd(const LinearProblem& problem, const SolverConfig& config);

struct ReductionSetup {
  std::size_t block_size = 1;
  double lambda = 0.0;
  double rho = 0.1;
  double eta = 0.1;
  std::size_t iterations = 50;
  std::uint64_t seed = 0;
};

/// Runs CD++ steps on Ā = Q(ΦΦᵀ)Qᵀ and Kaczmarz steps on Φ̄ = QΦ with shared
/// blocks and momentum parameters; returns max_t ‖z_t − Φ̄ᵀx̄_t‖.
double cdpp_kzpp_reduction_check(const Matrix& phi, std::span<const double> b,
                                 const ReductionSetup& setup);

}  // namespace kzpp
