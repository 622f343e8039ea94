#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "xbar/dataset.hpp"

namespace xbar {

inline constexpr std::size_t kIrisRecords = 150;
inline constexpr std::size_t kIrisPerClass = 50;
inline constexpr std::size_t kIrisTrainPerClass = 35;

struct IrisDataset {
  Eigen::MatrixXd raw;         // 150 x 4, centimetres
  Eigen::MatrixXd normalized;  // per-feature min-max onto [0, 1]
  std::vector<int> labels;     // 0 setosa, 1 versicolor, 2 virginica
  std::vector<std::size_t> train_index;
  std::vector<std::size_t> test_index;
  LabeledSet train;  // 105 normalized samples
  LabeledSet test;   // 45 normalized samples
};

/// Parses the standard five-column Iris CSV and splits it 35/15 per class.
/// Blank lines are ignored; malformed rows raise ParseError with the line.
IrisDataset parse_iris(std::istream& in, std::uint64_t seed);
IrisDataset load_iris(const std::filesystem::path& path, std::uint64_t seed);

struct MnistSubset {
  LabeledSet train;
  LabeledSet test;
};

/// First `count` images of an IDX image/label file pair, pixels scaled to [0, 1].
LabeledSet read_idx(std::istream& images, std::istream& labels, std::size_t count);
LabeledSet read_idx(const std::filesystem::path& images, const std::filesystem::path& labels, std::size_t count);

/// Loads `train_count` and `test_count` samples from the four standard files
/// (train-images-idx3-ubyte and so on) in `dir`.
MnistSubset load_mnist(const std::filesystem::path& dir, std::size_t train_count = 10000,
                       std::size_t test_count = 1000);

/// $XBAR_IRIS_PATH, else the copy shipped in the source tree.
std::filesystem::path default_iris_path();
/// $XBAR_MNIST_DIR, else /root/data/mnist.
std::filesystem::path default_mnist_dir();

void write_history_csv(std::ostream& out, const std::vector<double>& values, const std::string& value_name = "value",
                       int first_epoch = 1);
void write_confusion_csv(std::ostream& out, const Eigen::MatrixXi& confusion);

}  // namespace xbar
