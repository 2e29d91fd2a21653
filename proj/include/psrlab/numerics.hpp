#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace psrlab {

// log(sum(exp(xs))) with max subtraction. Returns -inf on empty input or when
// every entry is -inf.
double logsumexp(std::span<const double> xs);

// Normalizes xs into exp(xs - max) / sum in place.
void softmax_inplace(std::span<double> xs);

double mean(std::span<const double> xs);

// Sample standard deviation / sqrt(n); 0 when n < 2.
double sample_stderr(std::span<const double> xs);

// Solves the n x n dense system a * x = b with partial pivoting. `a` is
// row-major and consumed in place. Throws EvaluationError when a pivot falls
// below singular_tol relative to the matrix scale.
std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b,
                                double singular_tol = 1e-12);

// FNV-1a over a byte string; used for content digests.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace psrlab
