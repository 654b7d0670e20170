#pragma once

#include <cmath>
#include <string>

#include <json.hpp>

#include "epibarrier/core.hpp"

namespace testing {

inline epibarrier::Scenario sir_perfect(double cap) {
  return epibarrier::validate_scenario(
      {{"variant", "SIR_PERFECT"}, {"beta", {0.6, 0.8}}, {"gamma", 0.5}, {"i_max", cap}});
}

inline epibarrier::Scenario sir_imperfect() {
  return epibarrier::validate_scenario(
      {{"variant", "SIR_IMPERFECT"}, {"beta", {0.6, 0.8}}, {"gamma", {0.3, 0.5}}, {"i_max", 0.2}});
}

inline epibarrier::Scenario seir_perfect(double cap) {
  return epibarrier::validate_scenario({{"variant", "SEIR_PERFECT"},
                                        {"beta", {0.8, 1.0}},
                                        {"gamma", {1.0 / 5.0, 1.0 / 3.0}},
                                        {"eta", 0.2},
                                        {"i_max", cap}});
}

inline epibarrier::Scenario seir_imperfect() {
  return epibarrier::validate_scenario({{"variant", "SEIR_IMPERFECT"},
                                        {"beta", {0.8, 1.0}},
                                        {"gamma", {1.0 / 5.0, 1.0 / 3.0}},
                                        {"eta", {1.0 / 7.0, 1.0 / 5.0}},
                                        {"i_max", 0.1}});
}

template <class F>
epibarrier::ErrorCode error_of(F&& f) {
  try {
    f();
  } catch (const epibarrier::Error& e) {
    return e.code();
  }
  throw std::runtime_error("expected an epibarrier::Error");
}

}  // namespace testing
