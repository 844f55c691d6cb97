#pragma once

#include <Eigen/Core>

namespace fmtt {

/// Largest supported state dimension. Vectors and matrices carry inline
/// storage of this size so the per-particle hot loop never allocates.
inline constexpr int kMaxDim = 8;
inline constexpr int kMaxAugmented = kMaxDim + kMaxDim * kMaxDim;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;
using AugVec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxAugmented, 1>;

}  // namespace fmtt
