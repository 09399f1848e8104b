#include <doctest.h>

#include <stdexcept>

#include "paracon/parallel.hpp"

using namespace paracon;

TEST_CASE("parallel map keeps order and matches serial") {
  auto fn = [](std::size_t i) { return static_cast<double>(i) * 0.5; };
  const auto a = parallel_map<double>(1000, fn, Exec::parallel);
  const auto b = parallel_map<double>(1000, fn, Exec::serial);
  CHECK(a == b);
  CHECK(a[999] == 499.5);
}

TEST_CASE("the lowest-index exception wins") {
  auto fn = [](std::size_t i) -> int {
    if (i == 7) throw std::runtime_error("seven");
    if (i == 40) throw std::runtime_error("forty");
    return 0;
  };
  try {
    parallel_map<int>(100, fn, Exec::parallel);
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "seven");
  }
}

TEST_CASE("empty input") {
  CHECK(parallel_map<int>(0, [](std::size_t) { return 1; }, Exec::parallel).empty());
}
