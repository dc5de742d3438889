#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "m3svm/m3svm.hpp"

namespace testing_support {

// Writes text to a fresh file under the system temp dir and returns its path.
inline std::string temp_file(const std::string& name, const std::string& text) {
  const auto dir = std::filesystem::temp_directory_path() / "m3svm_tests";
  std::filesystem::create_directories(dir);
  const auto path = dir / name;
  std::ofstream(path, std::ios::binary) << text;
  return path.string();
}

inline std::string temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "m3svm_tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

inline std::string data_path(const std::string& file) {
  return std::string(M3SVM_DATA_DIR) + "/" + file;
}

// Two Gaussian blobs at +-(2, 2), sigma 0.3.
inline m3svm::Dataset two_blobs(std::uint64_t seed, int per_class = 20) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.3);
  m3svm::Matrix x(2 * per_class, 2);
  std::vector<int> y;
  for (int i = 0; i < 2 * per_class; ++i) {
    const double centre = i < per_class ? 2.0 : -2.0;
    x(i, 0) = centre + noise(rng);
    x(i, 1) = centre + noise(rng);
    y.push_back(i < per_class ? 0 : 1);
  }
  return m3svm::Dataset(x, y, 2);
}

inline m3svm::Dataset blobs(std::uint64_t seed, int c, int per_class, double radius, double sigma) {
  std::mt19937_64 rng(seed);
  return m3svm::detail::blobs(rng, c, per_class, radius, sigma);
}

inline m3svm::Dataset random_data(std::uint64_t seed, int n, int d, int c) {
  std::mt19937_64 rng(seed);
  return m3svm::detail::random_dataset(rng, n, d, c);
}

inline m3svm::LinearModel random_model(std::uint64_t seed, int d, int c, double scale = 1.0) {
  return m3svm::random_init(d, c, scale, seed);
}

}  // namespace testing_support
