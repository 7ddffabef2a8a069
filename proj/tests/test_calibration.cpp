#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "sparsemix/calibration.hpp"
#include "sparsemix/report.hpp"
#include "test_support.hpp"

using namespace sparsemix;
using testing_support::code_of;

TEST(EmpiricalCv, OrderStatisticIndex) {
    EXPECT_EQ(empirical_cv_index(19, 0.05), 19u);
    EXPECT_EQ(empirical_cv_index(100000, 0.05), 95001u);
    EXPECT_EQ(empirical_cv_index(100000, 0.10), 90001u);
    EXPECT_EQ(empirical_cv_index(99, 0.01), 99u);
    EXPECT_EQ(empirical_cv_index(1000, 0.5), 501u);
}

TEST(EmpiricalCv, PicksTheIndexedReplicate) {
    NullSample sample{StatisticKind::BJ, 10, std::vector<double>(1000), 0};
    std::iota(sample.replicates.begin(), sample.replicates.end(), 1.0);
    EXPECT_EQ(empirical_cv(sample, 0.05), 951.0);
    EXPECT_EQ(exceedance_fraction(sample, empirical_cv(sample, 0.05)), 0.049);
}

TEST(EmpiricalCv, Errors) {
    NullSample sample{StatisticKind::HC, 10, std::vector<double>(100, 1.0), 0};
    EXPECT_EQ(code_of([&] { empirical_cv(sample, 0.0); }), ErrorCode::AlphaOutOfRange);
    EXPECT_EQ(code_of([&] { empirical_cv(sample, 1.0); }), ErrorCode::AlphaOutOfRange);
    EXPECT_EQ(code_of([&] { empirical_cv(sample, 0.01); }), ErrorCode::InsufficientReplicates);
    EXPECT_FALSE(code_of([&] { empirical_cv(sample, 0.05); }).has_value());
}

TEST(SimulateNull, ValidatesArguments) {
    EXPECT_EQ(code_of([] { simulate_null_distribution(StatisticKind::ALR, 3, 100, 1); }),
              ErrorCode::SampleTooSmall);
    EXPECT_EQ(code_of([] { simulate_null_distribution(StatisticKind::HC, 1, 100, 1); }),
              ErrorCode::SampleTooSmall);
    EXPECT_EQ(code_of([] { simulate_null_distribution(StatisticKind::HC, 10, 99, 1); }),
              ErrorCode::InsufficientReplicates);
}

TEST(SimulateNull, BjNonNegativeAndSorted) {
    const auto s = simulate_null_distribution(StatisticKind::BJ, 50, 2000, 3);
    EXPECT_EQ(s.size(), 2000u);
    EXPECT_TRUE(std::is_sorted(s.replicates.begin(), s.replicates.end()));
    EXPECT_GE(s.replicates.front(), 0.0);
}

TEST(SimulateNull, IndependentOfThreadCount) {
    const std::array kinds{StatisticKind::HC, StatisticKind::BJ, StatisticKind::ALR};
    const auto one = simulate_null_distributions(kinds, 300, 3000, 17, {1});
    const auto four = simulate_null_distributions(kinds, 300, 3000, 17, {4});
    const auto many = simulate_null_distributions(kinds, 300, 3000, 17, {13});
    EXPECT_EQ(one, four);
    EXPECT_EQ(one, many);
    // Fused evaluation equals single-statistic runs.
    EXPECT_EQ(simulate_null_distribution(StatisticKind::BJ, 300, 3000, 17, {2}), one[1]);
}

TEST(SimulateNull, HcClosedFormAtNTwo) {
    // HC at n = 2 is sqrt(2)(1/2 - U)/sqrt(U(1 - U)) with U = min of two uniforms;
    // the 5% point of U is 1 - sqrt(0.95).
    const auto s = simulate_null_distribution(StatisticKind::HC, 2, 20000, 12);
    EXPECT_NEAR(empirical_cv(s, 0.05), 4.2731467937401265, 0.12);
}

TEST(Thresholds, FrozenValues) {
    EXPECT_NEAR(thresh_cv(StatisticKind::BJ, 1000000), 2.6257919144760108, 1e-13);
    EXPECT_NEAR(thresh_cv(StatisticKind::HC, 1000000), 2.2916334412274625, 1e-13);
    EXPECT_NEAR(thresh_cv(StatisticKind::BJ, 100), 1.5271796258079011, 1e-13);

    EXPECT_NEAR(evi_cv(StatisticKind::BJ, 1000000, 0.05), 4.8131663061595092, 1e-12);
    EXPECT_NEAR(evi_cv(StatisticKind::HC, 1000000, 0.05), 3.1026331739860931, 1e-12);
    EXPECT_NEAR(evi_cv(StatisticKind::BJ, 10000, 0.10), 3.6040092077583736, 1e-12);
    EXPECT_NEAR(evi_cv(StatisticKind::HC, 100, 0.05), 2.6243376602851898, 1e-12);

    EXPECT_NEAR(evii_cv(StatisticKind::BJ, 1000000, 0.05), 4.8715114182890481, 1e-12);
    EXPECT_NEAR(evii_cv(StatisticKind::HC, 1000000, 0.05), 3.1213815589539988, 1e-12);
    EXPECT_NEAR(evii_cv(StatisticKind::BJ, 10000, 0.05), 4.4084128278341675, 1e-12);
    EXPECT_NEAR(evii_cv(StatisticKind::HC, 100, 0.10), 2.4106160525128265, 1e-12);
}

TEST(Thresholds, Errors) {
    EXPECT_EQ(code_of([] { thresh_cv(StatisticKind::ALR, 100); }), ErrorCode::UnsupportedStatistic);
    EXPECT_EQ(code_of([] { evi_cv(StatisticKind::ALR, 100, 0.05); }), ErrorCode::UnsupportedStatistic);
    EXPECT_EQ(code_of([] { evii_cv(StatisticKind::ALR, 100, 0.05); }), ErrorCode::UnsupportedStatistic);
    EXPECT_EQ(code_of([] { thresh_cv(StatisticKind::BJ, 15); }), ErrorCode::DomainError);
    EXPECT_EQ(code_of([] { evi_cv(StatisticKind::BJ, 100, 1.5); }), ErrorCode::AlphaOutOfRange);
    // At n = 16 the centering is negative and a large alpha drives q below 0.
    EXPECT_EQ(code_of([] { evi_cv(StatisticKind::HC, 16, 0.9); }), ErrorCode::NegativeQ);
    EXPECT_LT(evi_cv(StatisticKind::BJ, 16, 0.9), 0.0);
}

TEST(Thresholds, MonotoneInAlphaAndEviiAboveEvi) {
    for (std::size_t n : {100u, 1000u, 10000u, 100000u, 1000000u, 100000000u}) {
        double prev_evi = 1e300, prev_evii = 1e300;
        for (double alpha = 0.001; alpha <= 0.1001; alpha += 0.001) {
            const double a = evi_cv(StatisticKind::BJ, n, alpha);
            const double b = evii_cv(StatisticKind::BJ, n, alpha);
            EXPECT_LT(a, prev_evi);
            EXPECT_LT(b, prev_evii);
            EXPECT_GT(b, a);
            EXPECT_GT(evii_cv(StatisticKind::HC, n, alpha), evi_cv(StatisticKind::HC, n, alpha));
            prev_evi = a;
            prev_evii = b;
        }
    }
}

TEST(AlrLimit, Cal1Values) {
    EXPECT_EQ(alr_limit_value(2.0, -1.0), 1.0);
    EXPECT_NEAR(alr_limit_value(0.5, 1.0), 1.4308912950626975, 1e-14);
    for (std::uint64_t s = 0; s < 10000; ++s) EXPECT_GE(sample_alr_limit_cal1(RandomStream{3, s}), 1.0);
}

TEST(AlrLimit, ReferenceConstants) {
    EXPECT_NEAR(std::exp(reference_alr_limit_cv(AlrLimitVariant::Cal1, 0.05)), 6.05, 1e-12);
    EXPECT_NEAR(std::exp(reference_alr_limit_cv(AlrLimitVariant::Cal2, 0.10)), 3.60, 1e-12);
    EXPECT_EQ(code_of([] { reference_alr_limit_cv(AlrLimitVariant::Cal1, 0.01); }), ErrorCode::AlphaOutOfRange);
}

TEST(AlrLimit, Cal1QuantilesRoughly) {
    // Desk-size version of the 1e5-draw check in the acceptance suite.
    AlrLimitConfig config{AlrLimitVariant::Cal1, 20000, 0, 0, 5, 0};
    const auto sample = simulate_alr_limit(config);
    EXPECT_NEAR(std::exp(empirical_cv(sample, 0.05)), 6.05, 0.6);
    EXPECT_NEAR(std::exp(empirical_cv(sample, 0.10)), 3.42, 0.25);
    EXPECT_EQ(code_of([] { alr_limit_cv({AlrLimitVariant::Cal1, 1000, 0, 0, 1, 0}, 0.05); }),
              ErrorCode::InsufficientReplicates);
}

TEST(Bridge, GridEndpointsAndSpacing) {
    const auto t = log_spaced_grid(10000, 256);
    ASSERT_EQ(t.size(), 257u);
    EXPECT_EQ(t.front(), 1e-4);
    EXPECT_EQ(t.back(), 0.5);
    for (std::size_t j = 1; j < t.size(); ++j) EXPECT_GT(t[j], t[j - 1]);
    const double ratio = t[1] / t[0];
    EXPECT_NEAR(t[200] / t[199], ratio, 1e-12);
    EXPECT_EQ(code_of([] { log_spaced_grid(15, 256); }), ErrorCode::DomainError);
    EXPECT_EQ(code_of([] { log_spaced_grid(100, 255); }), ErrorCode::DomainError);
}

TEST(Bridge, ZeroPathGivesFloor) {
    const LnSampler sampler(10000, 4096);
    const std::vector<double> zero(sampler.grid() + 1, 0.0);
    EXPECT_NEAR(sampler.functional(zero), 0.9247425010840047, 1e-12);
    EXPECT_NEAR(ln_floor(10000), 0.9247425010840047, 1e-15);
}

TEST(Bridge, StreamedDrawEqualsStoredPath) {
    const LnSampler sampler(1000, 512);
    for (std::uint64_t s = 0; s < 20; ++s) {
        auto a = RandomStream{6, s}.generator();
        auto b = RandomStream{6, s}.generator();
        const auto path = sampler.sample_path(a);
        EXPECT_EQ(sampler.functional(path.b_values), sampler.draw(b));
        EXPECT_EQ(sample_ln(1000, 512, {6, s}), sampler.functional(path.b_values));
    }
}

TEST(Bridge, MarginalVarianceMatchesBridge) {
    // Var B(t) = t(1 - t) at every grid point.
    const LnSampler sampler(100, 256);
    const std::size_t draws = 20000;
    std::vector<double> sum_sq(sampler.grid() + 1, 0.0);
    for (std::uint64_t s = 0; s < draws; ++s) {
        auto rng = RandomStream{10, s}.generator();
        const auto path = sampler.sample_path(rng);
        for (std::size_t j = 0; j < path.b_values.size(); ++j) sum_sq[j] += path.b_values[j] * path.b_values[j];
    }
    const auto t = sampler.t_grid();
    for (std::size_t j : {std::size_t{0}, std::size_t{100}, sampler.grid()}) {
        const double var = sum_sq[j] / draws;
        EXPECT_NEAR(var / (t[j] * (1.0 - t[j])), 1.0, 0.05) << "t = " << t[j];
    }
}

TEST(Bridge, LnAboveFloor) {
    for (std::uint64_t s = 0; s < 2000; ++s) EXPECT_GE(sample_ln(1000, 256, {1, s}), ln_floor(1000) - 1e-12);
}

TEST(Bridge, RefinementKeepsCoarsePointsAndBridgeLaw) {
    const LnSampler coarse(100, 256), fine(100, 512);
    std::vector<double> sum_sq(fine.grid() + 1, 0.0);
    const std::size_t draws = 20000;
    for (std::uint64_t s = 0; s < draws; ++s) {
        auto rng = RandomStream{12, s}.generator();
        const auto path = coarse.sample_path(rng);
        const auto refined = refine_bridge(path, rng);
        ASSERT_EQ(refined.b_values.size(), fine.grid() + 1);
        for (std::size_t j = 0; j < path.b_values.size(); ++j) ASSERT_EQ(refined.b_values[2 * j], path.b_values[j]);
        for (std::size_t j = 0; j < refined.b_values.size(); ++j)
            sum_sq[j] += refined.b_values[j] * refined.b_values[j];
    }
    const auto t = fine.t_grid();
    for (std::size_t j : {std::size_t{1}, std::size_t{201}, fine.grid() - 1}) {
        EXPECT_NEAR(t[j], std::sqrt(t[j - 1] * t[j + 1]), 1e-12 * t[j]);
        EXPECT_NEAR(sum_sq[j] / draws / (t[j] * (1.0 - t[j])), 1.0, 0.05) << "t = " << t[j];
    }
}

TEST(Bridge, DoublingTheGridChangesMeanLittle) {
    // Common random numbers: the 8192-point path refines the 4096-point one.
    const LnSampler coarse(10000, 4096), fine(10000, 8192);
    double mean_c = 0.0, mean_f = 0.0;
    const std::size_t draws = 10000;
    for (std::uint64_t s = 0; s < draws; ++s) {
        auto rng = RandomStream{21, s}.generator();
        const auto path = coarse.sample_path(rng);
        mean_c += coarse.functional(path.b_values);
        mean_f += fine.functional(refine_bridge(path, rng).b_values);
    }
    EXPECT_LT(std::fabs(mean_f / mean_c - 1.0), 0.02);
}

TEST(CriticalValueTable, JsonRoundTrip) {
    const std::array alphas{0.10, 0.05};
    const auto sample = simulate_null_distribution(StatisticKind::BJ, 100, 1000, 1);
    const auto table = empirical_table(sample, alphas);
    EXPECT_EQ(table.entries.front().alpha, 0.05);
    nlohmann::ordered_json j = table;
    EXPECT_EQ(j["kind"], "bj");
    EXPECT_EQ(j["method"], "empirical");
    EXPECT_EQ(j["R"], 1000);
    const auto back = j.get<CriticalValueTable>();
    EXPECT_EQ(back, table);

    const auto evi = asymptotic_table(StatisticKind::HC, 1000, CalibrationMethod::EVI, alphas);
    nlohmann::ordered_json je = evi;
    EXPECT_TRUE(je["R"].is_null());
    EXPECT_EQ(je.get<CriticalValueTable>(), evi);
    EXPECT_GT(evi.at(0.05), evi.at(0.10));
}

TEST(CriticalValueTable, Validation) {
    const std::array alphas{0.05};
    EXPECT_EQ(code_of([&] { asymptotic_table(StatisticKind::ALR, 1000, CalibrationMethod::EVI, alphas); }),
              ErrorCode::IncompatibleMethod);
    EXPECT_EQ(code_of([&] { asymptotic_table(StatisticKind::HC, 1000, CalibrationMethod::Cal1, alphas); }),
              ErrorCode::IncompatibleMethod);
    CriticalValueTable bad{StatisticKind::BJ, 10, CalibrationMethod::EVI, {{0.05, 1.0}, {0.1, 2.0}}, {}, {}};
    EXPECT_EQ(code_of([&] { bad.validate(); }), ErrorCode::ConfigError);
    const auto thresh = asymptotic_table(StatisticKind::BJ, 1000, CalibrationMethod::Thresh,
                                         std::array{0.01, 0.05, 0.1});
    EXPECT_EQ(thresh.at(0.01), thresh.at(0.1));
}
