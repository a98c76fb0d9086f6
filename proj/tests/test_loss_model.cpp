#include <doctest.h>

#include <cmath>
#include <map>
#include <numeric>

#include "frameloss/loss_model.hpp"
#include "oracles.hpp"

using namespace frameloss;

TEST_CASE("splitmix64 reference stream")
{
  // Published SplitMix64 outputs for state 0.
  SplitMix64 rng{0};
  CHECK(rng.next_u64() == 0xe220a8397b1dcdafULL);
  CHECK(rng.next_u64() == 0x6e789e6aa1b965f4ULL);
  CHECK(rng.next_u64() == 0x06c45d188009454fULL);

  SplitMix64 a{42}, b{42};
  for (int i = 0; i < 100; ++i)
  {
    const double u = a.next_double();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(u == b.next_double());
  }
}

TEST_CASE("sample_mask forced chains")
{
  SplitMix64 rng{1};
  CHECK(sample_mask({1.0, 0.0}, 5, rng).to_string() == "11111");
  CHECK(sample_mask({0.0, 1.0}, 4, rng).to_string() == "1000");
  CHECK(sample_mask({0.0, 0.0}, 6, rng).to_string() == "101010");
  CHECK(sample_mask({0.3, 0.3}, 0, rng).empty());
  CHECK(sample_mask({0.3, 0.3}, 1, rng).to_string() == "1");
}

TEST_CASE("sample_mask consumes t - 1 draws")
{
  SplitMix64 rng{9};
  sample_mask({0.5, 0.5}, 10, rng);
  SplitMix64 reference{9};
  for (int i = 0; i < 9; ++i)
  {
    reference.next_u64();
  }
  CHECK(rng.state() == reference.state());
}

TEST_CASE("sample_mask is deterministic and starts with a kept frame")
{
  for (std::uint64_t seed = 0; seed < 50; ++seed)
  {
    SplitMix64 a{seed}, b{seed};
    const LossParams params{0.05 + 0.018 * static_cast<double>(seed), 0.02 * static_cast<double>(seed)};
    const auto m1 = sample_mask(params, 300, a);
    const auto m2 = sample_mask(params, 300, b);
    CHECK(m1 == m2);
    CHECK(m1[0]);
  }
}

TEST_CASE("sample_mask rejects out-of-range parameters")
{
  SplitMix64 rng{0};
  CHECK_THROWS_AS(sample_mask({1.5, 0.0}, 3, rng), Error);
  CHECK_THROWS_AS(sample_mask({0.5, -0.1}, 3, rng), Error);
}

TEST_CASE("expected_loss_fraction")
{
  CHECK(expected_loss_fraction({1.0, 0.3}) == 0.0);
  CHECK(expected_loss_fraction({0.5, 0.5}) == 0.5);
  CHECK(expected_loss_fraction({0.9, 0.5}) == doctest::Approx(0.1 / 0.6).epsilon(1e-15));

  try
  {
    expected_loss_fraction({1.0, 1.0});
    FAIL("expected an error");
  }
  catch (const Error& e)
  {
    CHECK(e.code() == ErrorCode::degenerate_parameters);
  }
  CHECK(expected_loss_fraction_from_n({1.0, 1.0}) == 0.0);
}

TEST_CASE("expected_loss_fraction matches the balance-equation oracle")
{
  for (int i = 0; i <= 10; ++i)
  {
    for (int j = 0; j <= 10; ++j)
    {
      const double pn = i / 10.0, pl = j / 10.0;
      if (i == 10 && j == 10)
      {
        continue;
      }
      const double loss = expected_loss_fraction({pn, pl});
      CHECK(loss == doctest::Approx(oracle::stationary_loss_fraction(pn, pl)).epsilon(1e-14));
      // keep fraction (1 - p_L) / (2 - p_L - p_N) completes it to one
      CHECK(loss + (1.0 - pl) / (2.0 - pl - pn) == doctest::Approx(1.0).epsilon(1e-14));
    }
  }
}

TEST_CASE("Monte-Carlo drop rate for (0.9, 0.5)")
{
  const LossParams params{0.9, 0.5};
  double sum = 0.0;
  const int masks = 100000;
  for (int m = 0; m < masks; ++m)
  {
    SplitMix64 rng{derive_seed(1000 + static_cast<std::uint64_t>(m))};
    sum += drop_rate(sample_mask(params, 10000, rng));
  }
  CHECK(std::abs(sum / masks - 1.0 / 6.0) < 5e-4);
}

TEST_CASE("1-run lengths are geometric with mean 1 / (1 - p_N)")
{
  const double pn = 0.7;
  const LossParams params{pn, 0.5};
  std::map<std::size_t, std::size_t> counts;
  std::size_t runs = 0;
  double length_sum = 0.0;
  for (std::uint64_t m = 0; m < 400; ++m)
  {
    SplitMix64 rng{derive_seed(m)};
    const auto mask = sample_mask(params, 2000, rng);
    // Collect complete 1-runs: skip the run at the start, and a run touching the end.
    std::size_t i = 0;
    while (i < mask.size() && mask[i]) ++i;
    while (i < mask.size())
    {
      while (i < mask.size() && !mask[i]) ++i;
      const std::size_t start = i;
      while (i < mask.size() && mask[i]) ++i;
      if (i < mask.size() && i > start)
      {
        ++counts[std::min<std::size_t>(i - start, 10)];
        length_sum += static_cast<double>(i - start);
        ++runs;
      }
    }
  }
  REQUIRE(runs > 10000);
  CHECK(length_sum / static_cast<double>(runs) == doctest::Approx(1.0 / (1.0 - pn)).epsilon(0.02));

  // Chi-square over lengths 1..9 and a >= 10 tail bin, 9 degrees of freedom.
  double chi2 = 0.0;
  for (std::size_t k = 1; k <= 10; ++k)
  {
    const double p = k < 10 ? std::pow(pn, static_cast<double>(k - 1)) * (1.0 - pn) : std::pow(pn, 9.0);
    const double expected = p * static_cast<double>(runs);
    const double observed = static_cast<double>(counts[k]);
    chi2 += (observed - expected) * (observed - expected) / expected;
  }
  CHECK(chi2 < 27.88); // 0.999 quantile of chi-square(9)
}

TEST_CASE("sample_params")
{
  SplitMix64 rng{5};
  const auto point = sample_params({0.5, 0.5}, {0.2, 0.2}, rng);
  CHECK(point.p_n == 0.5);
  CHECK(point.p_l == 0.2);

  for (int i = 0; i < 1000; ++i)
  {
    const auto p = sample_params({0.05, 1.0}, {0.0, 1.0}, rng);
    CHECK(p.p_n >= 0.05);
    CHECK(p.p_n <= 1.0);
    CHECK(p.p_l >= 0.0);
    CHECK(p.p_l <= 1.0);

    const auto hm = sample_params(category_range(Category::high, ParamKind::pn),
                                  category_range(Category::mid, ParamKind::pl), rng);
    CHECK(hm.p_n >= 2.0 / 3.0);
    CHECK(hm.p_l >= 1.0 / 3.0);
    CHECK(hm.p_l < 2.0 / 3.0);
  }

  // p_N is drawn before p_L from the same stream.
  SplitMix64 a{77}, b{77};
  const auto drawn = sample_params({0.0, 1.0}, {0.0, 1.0}, a);
  CHECK(drawn.p_n == b.next_double());
  CHECK(drawn.p_l == b.next_double());

  CHECK_THROWS_AS(sample_params({0.6, 0.5}, {0.0, 1.0}, rng), Error);
  CHECK_THROWS_AS(sample_params({0.0, 1.2}, {0.0, 1.0}, rng), Error);
}

TEST_CASE("classify")
{
  CHECK(classify(0.0, ParamKind::pl).category == Category::low);
  CHECK(classify(1.0 / 3.0, ParamKind::pl).category == Category::mid);
  CHECK(classify(2.0 / 3.0, ParamKind::pl).category == Category::high);
  CHECK(classify(1.0, ParamKind::pn).category == Category::high);
  CHECK(classify(0.5, ParamKind::pn).category == Category::mid);

  const auto clamped = classify(0.01, ParamKind::pn);
  CHECK(clamped.category == Category::low);
  CHECK(clamped.clamped);
  CHECK_FALSE(classify(0.05, ParamKind::pn).clamped);
  CHECK_FALSE(classify(0.01, ParamKind::pl).clamped);

  CHECK(category_range(Category::low, ParamKind::pn) == Interval{0.05, 1.0 / 3.0});
  CHECK(category_range(Category::low, ParamKind::pl) == Interval{0.0, 1.0 / 3.0});
  CHECK_THROWS_AS(classify(1.1, ParamKind::pl), Error);
}
