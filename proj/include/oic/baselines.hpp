#pragma once

#include "oic/core.hpp"

namespace oic {

/// Seeded Fisher-Yates shuffle of 0..n-1 cut into K contiguous blocks whose
/// sizes differ by at most one (the first n mod K blocks get the extra row).
std::vector<std::vector<Index>> fold_assignment(Index n, Index k, std::uint64_t seed);

/// Held-out cost of each row under the model fitted without its fold.
struct CrossValidation {
  double estimate = 0.0;
  std::vector<double> held_out;     ///< indexed by original row
  std::vector<double> full_sample;  ///< fold model evaluated on all n rows, per fold
};
CrossValidation kfold_detail(const Pipeline& pipeline, const Dataset& data, Index k, std::uint64_t seed);

/// Mean held-out cost over K folds. Throws FitFailure with the fold index.
double kfold_cv(const Pipeline& pipeline, const Dataset& data, Index k, std::uint64_t seed);

/// Leave-one-out mean. Throws FitFailure with the row index.
double loocv(const Pipeline& pipeline, const Dataset& data);

/// A_kcv + A_o - (1/K) sum_k A_full(theta_-k), where A_full(theta_-k) is the
/// fold-k model's mean cost over all n rows.
double bc_kfold_cv(const Pipeline& pipeline, const Dataset& data, Index k, std::uint64_t seed);

struct BootstrapResult {
  double estimate = 0.0;
  std::vector<double> replicates;  ///< in-bag A_o,b
};

/// 2 A_o - mean_b A_o,b with in-bag evaluation of each bootstrap fit.
/// Replicate b resamples with stream (seed, "boot", b).
BootstrapResult bootstrap_debias(const Pipeline& pipeline, const Dataset& data, Index b, std::uint64_t seed);

/// n A_o - ((n-1)/n) sum_k A_o,k, A_o,k the leave-k-out fit on its own n-1 rows.
double jackknife_debias(const Pipeline& pipeline, const Dataset& data);

} // namespace oic
