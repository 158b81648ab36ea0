#include <doctest.h>

#include "fastsurv/beam_search.hpp"
#include "fastsurv/errors.hpp"
#include "oracles.hpp"

#include <random>

using namespace fastsurv;

namespace {

SelectionConfig selection(std::size_t k, std::size_t b, std::size_t m) {
  SelectionConfig c;
  c.k_max = k;
  c.beam_width = b;
  c.candidates_per_beam = m;
  c.inner_tol = 1e-10;
  c.finetune_max_sweeps = 20000;
  return c;
}

}  // namespace

TEST_CASE("configuration checks") {
  std::mt19937_64 rng(1);
  const auto data = sort_and_index(oracle::random_dataset(rng, 20, 3));
  CHECK_THROWS_AS(beam_search(data, selection(4, 1, 1)), UsageError);
  CHECK_THROWS_AS(beam_search(data, selection(0, 1, 1)), UsageError);
  CHECK_THROWS_AS(beam_search(data, selection(2, 0, 1)), UsageError);
  auto c = selection(2, 1, 1);
  c.inner_method = Method::ExactNewton;
  CHECK_THROWS_AS(beam_search(data, c), UsageError);
}

TEST_CASE("the strongest single feature ranks first") {
  const auto [raw, truth] = generate_synthetic({400, 12, 0.0, 1, 0.1, 5});
  const auto data = sort_and_index(raw);
  const auto bounds = lipschitz_constants(data);
  const auto ranked = rank_candidates(data, empty_state(data), bounds, selection(1, 1, 1));
  REQUIRE(ranked.size() == 12);
  CHECK(ranked.front().feature == truth.support_star.front());

  std::size_t best = 0;
  oracle::ld best_loss = std::numeric_limits<oracle::ld>::infinity();
  for (std::size_t l = 0; l < 12; ++l) {
    const oracle::ld v = oracle::best_loss_on_support(raw, {l});
    if (v < best_loss) {
      best_loss = v;
      best = l;
    }
  }
  CHECK(ranked.front().feature == best);
  for (const auto& c : ranked) CHECK(c.decrease >= -1e-10);
  for (std::size_t i = 1; i < ranked.size(); ++i) CHECK(ranked[i - 1].decrease >= ranked[i].decrease);
  // the scored loss matches the one-feature optimum
  CHECK(data.event_count() > 0);
  CHECK(std::abs(empty_state(data).loss - ranked.front().decrease - static_cast<double>(best_loss)) <= 1e-7);
}

TEST_CASE("duplicate of an in-support feature adds nothing") {
  std::mt19937_64 rng(2);
  auto raw = oracle::random_dataset(rng, 80, 4);
  raw.x.col(3) = raw.x.col(0);
  const auto data = sort_and_index(raw);
  const auto bounds = lipschitz_constants(data);
  const auto cfg = selection(2, 1, 1);
  const auto state = finetune_support(data, {0}, Vector::Zero(4), bounds, cfg);
  for (const auto& c : rank_candidates(data, state, bounds, cfg)) {
    if (c.feature == 3) CHECK(std::abs(c.decrease) <= 1e-8);
  }
}

TEST_CASE("B = m = 1 is greedy forward selection") {
  std::mt19937_64 rng(3);
  const auto data = sort_and_index(oracle::random_dataset(rng, 60, 6));
  const auto bounds = lipschitz_constants(data);
  const auto cfg = selection(4, 1, 1);
  const auto path = beam_search(data, cfg);
  REQUIRE(path.best.size() == 4);

  BeamState state = empty_state(data);
  for (std::size_t s = 0; s < 4; ++s) {
    const auto ranked = rank_candidates(data, state, bounds, cfg);
    auto support = state.support;
    support.push_back(ranked.front().feature);
    Vector beta = state.beta;
    beta[static_cast<Eigen::Index>(ranked.front().feature)] = ranked.front().coefficient;
    state = finetune_support(data, support, beta, bounds, cfg);
    CHECK(path.best[s].support == state.support);
    CHECK(path.best[s].loss == doctest::Approx(state.loss).epsilon(1e-12));
  }
}

TEST_CASE("first step with full width enumerates every single-feature model") {
  std::mt19937_64 rng(4);
  const auto raw = oracle::random_dataset(rng, 50, 3);
  const auto data = sort_and_index(raw);
  const auto bounds = lipschitz_constants(data);
  const auto frontier = expand_and_finetune(data, {empty_state(data)}, bounds, selection(1, 3, 3));
  REQUIRE(frontier.size() == 3);
  oracle::ld best = std::numeric_limits<oracle::ld>::infinity();
  for (std::size_t l = 0; l < 3; ++l) best = std::min(best, oracle::best_loss_on_support(raw, {l}));
  CHECK(std::abs(frontier.front().loss - static_cast<double>(best)) <= 1e-8);
}

TEST_CASE("children of different parents with the same support are merged") {
  std::mt19937_64 rng(5);
  const auto data = sort_and_index(oracle::random_dataset(rng, 50, 3));
  const auto bounds = lipschitz_constants(data);
  const auto cfg = selection(2, 10, 10);
  const auto level1 = expand_and_finetune(data, {empty_state(data)}, bounds, cfg);
  const auto level2 = expand_and_finetune(data, level1, bounds, cfg);
  // {0,1}, {0,2} and {1,2}, each reachable from two parents
  CHECK(level2.size() == 3);
  for (std::size_t i = 1; i < level2.size(); ++i) CHECK(level2[i - 1].support != level2[i].support);
}

TEST_CASE("full-width beam matches exhaustive best subset on five features") {
  for (std::uint64_t seed = 10; seed < 13; ++seed) {
    const auto raw = generate_synthetic({70, 5, 0.5, 2, 0.1, seed}).first;
    const auto data = sort_and_index(raw);
    const auto path = beam_search(data, selection(5, 5, 5));
    REQUIRE(path.best.size() == 5);
    for (std::size_t s = 1; s <= 5; ++s) {
      oracle::ld best = std::numeric_limits<oracle::ld>::infinity();
      oracle::subsets_of_size(5, s, [&](const std::vector<std::size_t>& support) {
        best = std::min(best, oracle::best_loss_on_support(raw, support));
      });
      CHECK(std::abs(path.best[s - 1].loss - static_cast<double>(best)) <= 1e-6);
    }
  }
}

TEST_CASE("path properties") {
  const auto data = sort_and_index(generate_synthetic({200, 30, 0.7, 4, 0.1, 7}).first);
  const auto narrow = beam_search(data, selection(6, 1, 1));
  const auto wide = beam_search(data, selection(6, 4, 4));
  REQUIRE(narrow.best.size() == 6);
  REQUIRE(wide.best.size() == 6);
  for (std::size_t s = 0; s < 6; ++s) {
    const auto& state = wide.best[s];
    CHECK(state.support.size() == s + 1);
    for (Eigen::Index l = 0; l < state.beta.size(); ++l) {
      if (!std::binary_search(state.support.begin(), state.support.end(), static_cast<std::size_t>(l))) {
        CHECK(state.beta[l] == 0.0);
      }
    }
    CHECK(std::abs(state.loss - cph_loss(data, compute_eta(data, state.beta))) <= 1e-8);
    if (s > 0) {
      CHECK(wide.best[s].loss <= wide.best[s - 1].loss + 1e-12);
      CHECK(narrow.best[s].loss <= narrow.best[s - 1].loss + 1e-12);
    }
    CHECK(wide.best[s].loss <= narrow.best[s].loss + 1e-8);
  }

  auto threaded = selection(6, 4, 4);
  threaded.threads = 4;
  const auto again = beam_search(data, threaded);
  for (std::size_t s = 0; s < 6; ++s) {
    CHECK(again.best[s].support == wide.best[s].support);
    CHECK(again.best[s].beta == wide.best[s].beta);
  }
}

TEST_CASE("warm-started scoring reaches the same one-feature optimum") {
  const auto data = sort_and_index(generate_synthetic({150, 10, 0.3, 3, 0.1, 8}).first);
  auto cold = selection(3, 3, 3);
  auto warm = cold;
  warm.warm_start_candidates = true;
  const auto a = beam_search(data, cold);
  const auto b = beam_search(data, warm);
  REQUIRE(a.best.size() == 3);
  REQUIRE(b.best.size() == 3);
  for (std::size_t s = 0; s < 3; ++s) CHECK(std::abs(a.best[s].loss - b.best[s].loss) <= 1e-7);
}

TEST_CASE("constant features truncate the path with a warning") {
  std::mt19937_64 rng(9);
  auto raw = oracle::random_dataset(rng, 40, 4);
  raw.x.col(1).setConstant(2.0);
  raw.x.col(3).setZero();
  const auto data = sort_and_index(raw);
  const auto path = beam_search(data, selection(4, 2, 2));
  CHECK(path.best.size() == 2);
  REQUIRE(path.warnings.size() == 1);
  CHECK(path.warnings.front().find("truncated") != std::string::npos);
  for (const auto& c : rank_candidates(data, empty_state(data), lipschitz_constants(data), selection(1, 1, 1))) {
    if (c.feature == 1 || c.feature == 3) {
      CHECK_FALSE(c.usable);
      CHECK(c.decrease == 0.0);
    }
  }
}
