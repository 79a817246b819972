#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "kzpp/iteration.hpp"
#include "kzpp/linalg.hpp"
#include "kzpp/problems.hpp"

namespace kzpp {

/// w = A_Sᵀ(A_S A_Sᵀ + λI)⁻¹ r by dense factorization; pseudo-inverse when the
/// Gram matrix is singular at λ = 0.
Vector project_block_exact(const Matrix& a, std::span<const std::size_t> rows,
                           std::span<const double> residual, double lambda, Meter meter = {});

/// Same projection with the residual formed from x and b_S.
Vector regularized_projection_exact(const Matrix& a, std::span<const std::size_t> rows,
                                    std::span<const double> x, std::span<const double> b_block,
                                    double lambda);

/// R with RᵀR = ÂÂᵀ + λI for the sketched block Â = A_S·Πᵀ.
CholeskyFactor build_block_preconditioner(const Matrix& a, std::span<const std::size_t> rows,
                                          std::size_t sketch_width, double lambda,
                                          std::uint64_t seed, Meter meter = {});

/// Runs `inner_iterations` LSQR steps on R⁻ᵀ[A_S √λI][w; v] = R⁻ᵀ r and returns w.
Vector proj_lsqr(const Matrix& a, std::span<const std::size_t> rows, const CholeskyFactor& r_factor,
                 std::span<const double> residual, double lambda, std::size_t inner_iterations,
                 Meter meter = {});

/// Explicitly forms R⁻ᵀ[A_S √λI]; for diagnostics only.
Matrix preconditioned_block(const Matrix& a, std::span<const std::size_t> rows,
                            const CholeskyFactor& r_factor, double lambda);

/// Kaczmarz++ on a general consistent system.
SolveResult solve(const LinearProblem& problem, const SolverConfig& config);

}  // namespace kzpp
