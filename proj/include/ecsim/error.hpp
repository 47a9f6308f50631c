#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ecsim {

// Runtime failure inside the simulator (bad state transition, unknown node, ...).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input rejected before anything ran. Carries every problem found, not just the first.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> problems);
  explicit ValidationError(const std::string& problem)
      : ValidationError(std::vector<std::string>{problem}) {}

  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

inline std::string join_problems(const std::vector<std::string>& problems) {
  std::string out;
  for (const auto& p : problems) {
    if (!out.empty()) out += "; ";
    out += p;
  }
  return out;
}

inline ValidationError::ValidationError(std::vector<std::string> problems)
    : Error(join_problems(problems)), problems_(std::move(problems)) {}

}  // namespace ecsim
