#pragma once

#include <cstdint>
#include <deque>
#include <stdexcept>
#include <string>

// Replays a fixed script of draws so tests can steer randomized algorithms
// through a specific path. Mirrors the RngStream draw interface.

namespace essmc_test {

class ScriptedRng {
 public:
  ScriptedRng& uniforms(std::initializer_list<double> vs) {
    uniforms_.insert(uniforms_.end(), vs);
    return *this;
  }
  ScriptedRng& normals(std::initializer_list<double> vs) {
    normals_.insert(normals_.end(), vs);
    return *this;
  }
  ScriptedRng& ints(std::initializer_list<std::uint64_t> vs) {
    ints_.insert(ints_.end(), vs);
    return *this;
  }

  double uniform() { return pop(uniforms_, "uniform"); }
  double uniform_open() { return pop(uniforms_, "uniform_open"); }
  double uniform(double a, double b) { return a + (b - a) * pop(uniforms_, "uniform(a,b)"); }
  double normal() { return pop(normals_, "normal"); }
  std::uint64_t uniform_int(std::uint64_t n) {
    const auto v = pop(ints_, "uniform_int");
    if (v >= n) throw std::logic_error("scripted uniform_int out of range");
    return v;
  }

  bool exhausted() const { return uniforms_.empty() && normals_.empty() && ints_.empty(); }

 private:
  template <class Q>
  static typename Q::value_type pop(Q& q, const char* what) {
    if (q.empty()) throw std::logic_error(std::string("rng script ran dry: ") + what);
    auto v = q.front();
    q.pop_front();
    return v;
  }

  std::deque<double> uniforms_, normals_;
  std::deque<std::uint64_t> ints_;
};

}  // namespace essmc_test
