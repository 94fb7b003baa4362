#include <doctest.h>

#include "em_oracle.hpp"

using namespace truthkit;

TEST_CASE("EM matches the exhaustive oracle wherever the oracle is stable") {
  const auto report = oracle::compare_with_oracle(2, 3, 300);
  CHECK(report.instances > 0);
  // Every disagreement sits on an instance where the oracle disagrees with
  // itself under 1e-10 perturbations; everywhere else the match is tight.
  CHECK(report.mismatches == report.ill_conditioned_mismatches);
  CHECK(report.worst_well_conditioned < 1e-9);
}

TEST_CASE("a tied item under exact symmetry is a repelling fixed point") {
  // Worker w0 only labels i1 and w1 splits its votes. In exact arithmetic the
  // posterior of i1 stays at 1/2 forever; rounding error grows each iteration.
  const oracle::Grid g{{-1, 1, 1}, {1, 0, -1}};
  const auto early = oracle::exhaustive_em(g, oracle::Model::OneCoin, 0.01, 10);
  CHECK(early[1][0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(oracle::ill_conditioned(g, oracle::Model::OneCoin, 0.01, 1000, 1e-6));

  const oracle::Grid stable{{0, 0, 1}, {1, 1, 1}};
  CHECK_FALSE(oracle::ill_conditioned(stable, oracle::Model::Full, 0.01, 1000, 1e-6));
  CHECK_FALSE(oracle::ill_conditioned(stable, oracle::Model::OneCoin, 0.01, 1000, 1e-6));
}

TEST_CASE("oracle enumeration count") {
  // One item, one worker: the single cell must be labeled (2 grids).
  std::size_t n = 0;
  oracle::for_each_instance(1, 1, [&](const oracle::Grid&) { ++n; });
  CHECK(n == 2);
  // 1 item x 2 workers: both cells labeled = 4 grids.
  n = 0;
  oracle::for_each_instance(1, 2, [&](const oracle::Grid& g) { n += g[0].size() == 2; });
  CHECK(n == 4);
}
