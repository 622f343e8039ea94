#include "xbar/data_io.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "xbar/errors.hpp"

namespace xbar {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

int iris_label(const std::string& name, std::size_t line) {
  std::string n = name;
  if (n.rfind("Iris-", 0) == 0) n = n.substr(5);
  if (n == "setosa") return 0;
  if (n == "versicolor") return 1;
  if (n == "virginica") return 2;
  throw ParseError("unknown Iris class '" + name + "'", line);
}

double parse_number(const std::string& cell, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw ParseError("bad number '" + cell + "'", line);
    return v;
  } catch (const std::logic_error&) {
    throw ParseError("bad number '" + cell + "'", line);
  }
}

LabeledSet select(const Eigen::MatrixXd& x, const std::vector<int>& labels, const std::vector<std::size_t>& idx) {
  LabeledSet s;
  s.features.resize(static_cast<Eigen::Index>(idx.size()), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    s.features.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(idx[i]));
    s.labels.push_back(labels[idx[i]]);
  }
  return s;
}

std::uint32_t read_be32(std::istream& in, const char* what) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) {
    throw LengthError(std::string("IDX file truncated while reading the ") + what);
  }
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

std::ifstream open_binary(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw FormatError("cannot open " + p.string());
  return f;
}

}  // namespace

IrisDataset parse_iris(std::istream& in, std::uint64_t seed) {
  IrisDataset d;
  std::vector<std::array<double, 4>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ss(t);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (cells.size() != 5) {
      throw ParseError("expected 5 comma-separated fields, found " + std::to_string(cells.size()), line_no);
    }
    std::array<double, 4> f{};
    for (std::size_t k = 0; k < 4; ++k) f[k] = parse_number(cells[k], line_no);
    rows.push_back(f);
    d.labels.push_back(iris_label(cells[4], line_no));
  }
  if (rows.size() != kIrisRecords) {
    throw ValidationError("Iris file has " + std::to_string(rows.size()) + " records, expected 150");
  }
  for (int c = 0; c < 3; ++c) {
    if (std::count(d.labels.begin(), d.labels.end(), c) != static_cast<long>(kIrisPerClass)) {
      throw ValidationError("Iris class " + std::to_string(c) + " does not have 50 records");
    }
  }

  d.raw.resize(static_cast<Eigen::Index>(rows.size()), 4);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < 4; ++k) d.raw(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  }
  const Eigen::RowVectorXd lo = d.raw.colwise().minCoeff();
  const Eigen::RowVectorXd span = d.raw.colwise().maxCoeff() - lo;
  d.normalized = d.raw;
  for (Eigen::Index k = 0; k < 4; ++k) {
    if (span(k) > 0.0) d.normalized.col(k) = (d.raw.col(k).array() - lo(k)) / span(k);
    else d.normalized.col(k).setZero();
  }

  std::mt19937_64 rng(seed);
  for (int c = 0; c < 3; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < d.labels.size(); ++i) {
      if (d.labels[i] == c) members.push_back(i);
    }
    std::shuffle(members.begin(), members.end(), rng);
    d.train_index.insert(d.train_index.end(), members.begin(), members.begin() + kIrisTrainPerClass);
    d.test_index.insert(d.test_index.end(), members.begin() + kIrisTrainPerClass, members.end());
  }
  std::sort(d.train_index.begin(), d.train_index.end());
  std::sort(d.test_index.begin(), d.test_index.end());
  d.train = select(d.normalized, d.labels, d.train_index);
  d.test = select(d.normalized, d.labels, d.test_index);
  return d;
}

IrisDataset load_iris(const std::filesystem::path& path, std::uint64_t seed) {
  std::ifstream f(path);
  if (!f) throw FormatError("cannot open Iris file " + path.string());
  return parse_iris(f, seed);
}

LabeledSet read_idx(std::istream& images, std::istream& labels, std::size_t count) {
  const std::uint32_t image_magic = read_be32(images, "image magic");
  if (image_magic != 0x00000803u) throw FormatError("bad IDX image magic (expected 0x00000803)");
  const std::uint32_t n_images = read_be32(images, "image count");
  const std::uint32_t rows = read_be32(images, "row count");
  const std::uint32_t cols = read_be32(images, "column count");
  const std::uint32_t label_magic = read_be32(labels, "label magic");
  if (label_magic != 0x00000801u) throw FormatError("bad IDX label magic (expected 0x00000801)");
  const std::uint32_t n_labels = read_be32(labels, "label count");
  if (n_images != n_labels) throw FormatError("image and label files disagree on the sample count");
  if (count > n_images) {
    throw RangeError("requested " + std::to_string(count) + " samples but the files hold " + std::to_string(n_images));
  }

  const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
  LabeledSet s;
  s.features.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(pixels));
  s.labels.resize(count);
  std::vector<unsigned char> buf(pixels);
  for (std::size_t i = 0; i < count; ++i) {
    if (!images.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels))) {
      throw LengthError("IDX image file truncated at image " + std::to_string(i));
    }
    for (std::size_t p = 0; p < pixels; ++p) {
      s.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) = buf[p] / 255.0;
    }
    const int label = labels.get();
    if (label == std::char_traits<char>::eof()) throw LengthError("IDX label file truncated at label " + std::to_string(i));
    if (label > 9) throw FormatError("label " + std::to_string(label) + " outside 0..9 at index " + std::to_string(i));
    s.labels[i] = label;
  }
  return s;
}

LabeledSet read_idx(const std::filesystem::path& images, const std::filesystem::path& labels, std::size_t count) {
  std::ifstream fi = open_binary(images);
  std::ifstream fl = open_binary(labels);
  return read_idx(fi, fl, count);
}

MnistSubset load_mnist(const std::filesystem::path& dir, std::size_t train_count, std::size_t test_count) {
  return {read_idx(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte", train_count),
          read_idx(dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte", test_count)};
}

std::filesystem::path default_iris_path() {
  if (const char* env = std::getenv("XBAR_IRIS_PATH")) return env;
  return std::filesystem::path(XBAR_SOURCE_DIR) / "data" / "iris.data";
}

std::filesystem::path default_mnist_dir() {
  if (const char* env = std::getenv("XBAR_MNIST_DIR")) return env;
  return "/root/data/mnist";
}

void write_history_csv(std::ostream& out, const std::vector<double>& values, const std::string& value_name,
                       int first_epoch) {
  const auto old = out.precision(17);
  out << "epoch," << value_name << '\n';
  for (std::size_t i = 0; i < values.size(); ++i) out << first_epoch + static_cast<int>(i) << ',' << values[i] << '\n';
  out.precision(old);
}

void write_confusion_csv(std::ostream& out, const Eigen::MatrixXi& confusion) {
  out << "true_label";
  for (Eigen::Index c = 0; c < confusion.cols(); ++c) out << ",pred_" << c;
  out << '\n';
  for (Eigen::Index r = 0; r < confusion.rows(); ++r) {
    out << r;
    for (Eigen::Index c = 0; c < confusion.cols(); ++c) out << ',' << confusion(r, c);
    out << '\n';
  }
}

}  // namespace xbar
