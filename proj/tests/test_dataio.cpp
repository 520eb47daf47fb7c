#include <sstream>

#include "doctest.h"
#include "hscop/dataio.hpp"

using namespace hscop;

TEST_CASE("csv with header and named label column") {
  std::istringstream in("f1,f2,label\n1.0,2.0,cat\n3.0,4.0,dog\n5.0,6.0,cat\n");
  Dataset d = load_csv(in, "label");
  REQUIRE(d.size() == 3);
  CHECK(d.features() == 2);
  CHECK(d.num_classes == 2);
  CHECK(d.y == std::vector<int>{0, 1, 0});  // sorted label order: cat, dog
  CHECK(d.X[1] == std::vector<double>{3.0, 4.0});
}

TEST_CASE("headerless csv with label index") {
  std::istringstream in("0.5,1,7\n0.25,2,9\n");
  Dataset d = load_csv(in, "2");
  REQUIRE(d.size() == 2);
  CHECK(d.num_classes == 2);
  CHECK(d.X[0] == std::vector<double>{0.5, 1.0});
}

TEST_CASE("csv rejects a missing label column") {
  std::istringstream in("a,b\n1,2\n");
  CHECK_THROWS(load_csv(in, "missing"));
}

TEST_CASE("standardization leaves zero-variance features alone") {
  Dataset d;
  d.num_classes = 2;
  d.X = {{1.0, 5.0}, {3.0, 5.0}, {5.0, 5.0}};
  d.y = {0, 1, 0};
  Standardizer s = Standardizer::fit(d);
  Dataset t = d;
  s.apply(t);
  CHECK(t.X[0][0] + t.X[1][0] + t.X[2][0] == doctest::Approx(0.0));
  double var = 0.0;
  for (const auto& row : t.X) var += row[0] * row[0];
  CHECK(var / 3.0 == doctest::Approx(1.0));
  CHECK(t.X[0][1] == doctest::Approx(0.0));  // centered but unscaled
  CHECK(t.X[1][1] == doctest::Approx(0.0));
}

TEST_CASE("stratified folds balance classes within one sample") {
  std::vector<int> y;
  for (int i = 0; i < 20; ++i) y.push_back(0);
  for (int i = 0; i < 20; ++i) y.push_back(1);
  auto folds = stratified_folds(y, 4, 9);
  REQUIRE(folds.size() == 4);
  for (const auto& f : folds) {
    CHECK(f.size() == 10);
    int c0 = 0;
    for (int idx : f) c0 += y[static_cast<std::size_t>(idx)] == 0;
    CHECK(c0 >= 4);
    CHECK(c0 <= 6);
  }
  auto again = stratified_folds(y, 4, 9);
  CHECK(folds == again);
  auto different = stratified_folds(y, 4, 10);
  CHECK(folds != different);
}

TEST_CASE("every sample lands in exactly one fold") {
  std::vector<int> y{0, 1, 2, 0, 1, 2, 0, 0, 1, 2, 1, 0};
  auto folds = stratified_folds(y, 3, 1);
  std::vector<int> seen(y.size(), 0);
  for (const auto& f : folds)
    for (int idx : f) ++seen[static_cast<std::size_t>(idx)];
  for (int s : seen) CHECK(s == 1);
}
