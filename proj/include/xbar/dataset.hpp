#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace xbar {

/// Samples stored one per row with integer class labels.
struct LabeledSet {
  Eigen::MatrixXd features;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  Eigen::VectorXd sample(std::size_t i) const { return features.row(static_cast<Eigen::Index>(i)).transpose(); }
};

/// One-hot target of `label` over `classes` outputs.
inline Eigen::VectorXd one_hot(int label, std::size_t classes) {
  Eigen::VectorXd t = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(classes));
  t(label) = 1.0;
  return t;
}

}  // namespace xbar
