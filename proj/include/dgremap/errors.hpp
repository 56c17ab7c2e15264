// Exception hierarchy shared across the library.
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace dgremap {

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// An element with nonpositive (or numerically vanishing) measure.
struct DegenerateElement : Error {
  int element = -1;
  double pseudo_time = -1.0;  // set when detected during mesh motion
  DegenerateElement(const std::string& msg, int elem, double sigma = -1.0)
      : Error(msg), element(elem), pseudo_time(sigma) {}
};

struct NonpositiveVolume : Error {
  int element = -1;
  NonpositiveVolume(const std::string& msg, int elem) : Error(msg), element(elem) {}
};

struct PointOutsideElement : Error {
  using Error::Error;
};

struct PointNotFound : Error {
  using Error::Error;
};

struct UnsupportedDegree : Error {
  using Error::Error;
};

struct SingularFit : Error {
  using Error::Error;
};

struct NegativeCellAverage : Error {
  int element = -1;
  double average = 0.0;
  NegativeCellAverage(const std::string& msg, int elem, double avg)
      : Error(msg), element(elem), average(avg) {}
};

struct CyclicDependency : Error {
  using Error::Error;
};

struct SingularLocalSystem : Error {
  using Error::Error;
};

struct NoConvergence : Error {
  using Error::Error;
};

// Bad user input (config, CLI, incompatible files).  Collects every violation.
struct ValidationError : Error {
  std::vector<std::string> violations;
  explicit ValidationError(std::vector<std::string> list)
      : Error(join(list)), violations(std::move(list)) {}
  explicit ValidationError(const std::string& msg)
      : Error(msg), violations{msg} {}

 private:
  static std::string join(const std::vector<std::string>& list) {
    std::string all;
    for (const auto& v : list) {
      if (!all.empty()) all += "; ";
      all += v;
    }
    return all.empty() ? std::string("validation failed") : all;
  }
};

struct ParseError : Error {
  int line = -1;
  std::string key;
  ParseError(const std::string& msg, int line_no = -1, std::string k = {})
      : Error(msg), line(line_no), key(std::move(k)) {}
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace dgremap
