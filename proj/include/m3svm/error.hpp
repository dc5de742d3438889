#pragma once

#include <stdexcept>
#include <string>

namespace m3svm {

// Base class for every error the library raises.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class io_error : public error {
 public:
  using error::error;
};

class parse_error : public error {
 public:
  using error::error;
};

class dimension_error : public error {
 public:
  using error::error;
};

class config_error : public error {
 public:
  using error::error;
};

// Raised when a trained quantity stops being finite.
class numeric_error : public error {
 public:
  using error::error;
};

// Two weight columns coincide, so their margin is unbounded.
class degenerate_pair_error : public error {
 public:
  degenerate_pair_error(int k, int l)
      : error("infinite margin / degenerate pair (" + std::to_string(k) + ", " +
              std::to_string(l) + ")"),
        k_(k),
        l_(l) {}
  int k() const noexcept { return k_; }
  int l() const noexcept { return l_; }

 private:
  int k_;
  int l_;
};

inline void require_same_dim(long expected, long got, const char* what) {
  if (expected != got)
    throw dimension_error(std::string(what) + ": dimension mismatch (expected " +
                          std::to_string(expected) + ", got " +
                          std::to_string(got) + ")");
}

}  // namespace m3svm
