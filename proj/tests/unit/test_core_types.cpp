#include <doctest.h>

#include <random>
#include <stdexcept>
#include <vector>

#include "m3mix/core_types.hpp"

using namespace m3mix;

TEST_CASE("increment on an empty table opens the first cell") {
  JointCounts t;
  t.increment(0, 0);
  CHECK(t.rows() == 1);
  CHECK(t.cols() == 1);
  CHECK(t.at(0, 0) == 1);
  CHECK(t.total() == 1);
}

TEST_CASE("increment one past the end grows the table") {
  JointCounts t;
  t.increment(0, 0);
  t.increment(0, 0);
  t.increment(0, 1);
  CHECK(t.cols() == 2);
  CHECK(t.at(0, 1) == 1);
  CHECK(t.colMarginal(0) == 2);
  CHECK(t.colMarginal(1) == 1);
  CHECK(t.rowMarginal(0) == 3);
}

TEST_CASE("increment further out is a bounds error") {
  JointCounts t;
  CHECK_THROWS_AS(t.increment(2, 0), std::out_of_range);
  t.increment(0, 0);
  CHECK_THROWS_AS(t.increment(0, 2), std::out_of_range);
}

TEST_CASE("increment then decrement restores the table") {
  JointCounts t;
  t.increment(0, 0);
  t.increment(1, 0);
  const JointCounts before = t;
  t.increment(1, 0);
  t.decrement(1, 0);
  CHECK(t == before);
}

TEST_CASE("decrementing the last point empties the table") {
  JointCounts t;
  t.increment(0, 0);
  const Compaction c = t.decrement(0, 0);
  CHECK(t.total() == 0);
  CHECK(t.rows() == 0);
  CHECK(t.cols() == 0);
  CHECK(c.removedRow == 0u);
  CHECK(c.removedCol == 0u);
}

TEST_CASE("an emptied column is compacted and reported") {
  JointCounts t;
  t.increment(0, 0);
  t.increment(0, 1);
  t.increment(0, 1);
  const Compaction c = t.decrement(0, 0);
  CHECK(t.rows() == 1);
  CHECK(t.cols() == 1);
  CHECK(t.at(0, 0) == 2);
  CHECK_FALSE(c.removedRow.has_value());
  REQUIRE(c.removedCol.has_value());
  CHECK(c.remapCol(1) == 0);
}

TEST_CASE("decrementing a zero cell is a logic error") {
  JointCounts t;
  t.increment(0, 0);
  t.increment(1, 1);
  CHECK_THROWS_AS(t.decrement(0, 1), std::logic_error);
}

TEST_CASE("fixed columns survive emptying") {
  JointCounts t = JointCounts::withFixedColumns(3);
  t.increment(0, 2);
  t.decrement(0, 2);
  CHECK(t.cols() == 3);
  CHECK(t.rows() == 0);
}

TEST_CASE("random increments and decrements stay consistent") {
  std::mt19937_64 gen(11);
  JointCounts t;
  std::vector<Assignment2D> live;
  for (int step = 0; step < 5000; ++step) {
    if (live.empty() || gen() % 3 != 0) {
      const std::size_t c = gen() % (t.rows() + 1);
      const std::size_t d = gen() % (t.cols() + 1);
      t.increment(c, d);
      live.push_back({c, d});
    } else {
      const std::size_t k = gen() % live.size();
      const Assignment2D a = live[k];
      live.erase(live.begin() + static_cast<long>(k));
      const Compaction comp = t.decrement(a.z1, a.z2);
      for (auto& x : live) {
        x.z1 = comp.remapRow(x.z1);
        x.z2 = comp.remapCol(x.z2);
      }
    }
    REQUIRE(t.consistent());
    REQUIRE(t.total() == static_cast<std::int64_t>(live.size()));
  }
  CHECK(t == JointCounts::fromAssignments(live));
}

TEST_CASE("share weights must sum to one") {
  CHECK_NOTHROW(ShareWeights(0.5, 0.25, 0.25));
  CHECK_NOTHROW(ShareWeights(1.0, 0.0, 0.0));
  CHECK_THROWS_AS(ShareWeights(0.5, 0.5, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(ShareWeights(0.5, 0.25, 0.25 + 1e-9), std::invalid_argument);
  CHECK_THROWS_AS(ShareWeights(1.5, -0.25, -0.25), std::invalid_argument);
}

TEST_CASE("concentration must be positive") {
  CHECK(Concentration(0.3).value() == 0.3);
  CHECK_THROWS_AS(Concentration(0.0), std::invalid_argument);
  CHECK_THROWS_AS(Concentration(-1.0), std::invalid_argument);
}
