#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "llbar/calibration.hpp"
#include "llbar/experiments.hpp"

using namespace llbar;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / "llbar_test_experiments" / name;
    fs::remove_all(dir);
    return dir;
}

StudySpec stationary_spec(StudyKind k) {
    StudySpec s;
    s.kind = k;
    s.n = 32;
    s.stationary = true;
    s.eps_list = {0.4, 0.2, 0.1};
    s.t_end = 0.1;
    s.scheme.dt = 0.01;
    s.cadence = 2;
    return s;
}

// Small smooth data on 64^2 so eps down to 0.05 is resolvable.
StudySpec smooth_spec(StudyKind k) {
    StudySpec s;
    s.kind = k;
    s.eps_list = {0.2, 0.1, 0.05};
    s.t_end = 0.2;
    s.scheme.dt = 1e-3;
    s.threads = 4;
    return s;
}

StudySpec growth_spec() {
    StudySpec s;
    s.kind = StudyKind::linear_growth;
    s.n = 16;
    s.t_end = 0.1;
    s.scheme.dt = 1e-3;
    s.cadence = 10;
    return s;
}

}  // namespace

TEST(StudySpec, ParsesKeysAndRejectsUnknown) {
    std::stringstream in("study = eps_limit\nn = 32\neps_list = 0.5, 0.25, 0.125\nt_end = 0.3\nscheme = etd1\n"
                         "kernel = bump\ninitial = uniform\nthreads = 2\ndrop_largest = true\n");
    StudySpec s = read_study_spec(in);
    EXPECT_EQ(s.kind, StudyKind::eps_limit);
    EXPECT_EQ(s.n, 32);
    EXPECT_EQ(s.eps_list, (std::vector<double>{0.5, 0.25, 0.125}));
    EXPECT_EQ(s.t_end, 0.3);
    EXPECT_EQ(s.scheme.scheme, Scheme::etd1);
    EXPECT_EQ(s.kernel, KernelKind::bump);
    EXPECT_TRUE(s.stationary);
    EXPECT_TRUE(s.drop_largest);

    std::stringstream unknown("study = eps_limit\nbogus = 1\n");
    EXPECT_THROW(read_study_spec(unknown), UsageError);
    StudySpec t;
    EXPECT_FALSE(apply_study_key(t, "bogus", "1"));
    EXPECT_THROW(apply_study_key(t, "study", "nope"), UsageError);
    EXPECT_THROW(apply_study_key(t, "initial", "snapshot"), UsageError);
}

TEST(StudySpec, ValidationErrors) {
    StudySpec s;
    s.eps_list = {0.2, 0.1};
    EXPECT_THROW(s.validate(), UsageError);  // fewer than three
    s.eps_list = {0.1, 0.2, 0.05};
    EXPECT_THROW(s.validate(), UsageError);  // not decreasing
    s.eps_list = {0.4, 0.2, 0.01};
    EXPECT_THROW(s.validate(), UsageError);  // below the 64-point floor
    s.eps_list = {0.4, 0.2, 0.1};
    s.t_end = 0.0;
    EXPECT_THROW(s.validate(), UsageError);
    s.t_end = 1.0;
    s.kind = StudyKind::gn_calibration;
    s.family_size = 10;
    EXPECT_THROW(s.validate(), UsageError);
    s.family_size = 100;
    EXPECT_NO_THROW(s.validate());
    s.n = 63;
    EXPECT_THROW(s.validate(), ParameterError);
}

TEST(SampleTimes, EndpointsAndSpacing) {
    auto t = sample_times(1.0, 0.1, 3);
    ASSERT_EQ(t.size(), 5u);
    EXPECT_EQ(t.front(), 0.0);
    EXPECT_NEAR(t[1], 0.3, 1e-15);
    EXPECT_EQ(t.back(), 1.0);
    // exact multiple: no duplicate endpoint
    EXPECT_EQ(sample_times(1.0, 0.25, 1).size(), 5u);
}

TEST(Smoke, StationaryDataGivesZeroDifferences) {
    for (auto k : {StudyKind::eps_cauchy, StudyKind::eps_limit}) {
        auto s = stationary_spec(k);
        auto rep = k == StudyKind::eps_cauchy ? run_eps_cauchy(s) : run_eps_limit(s);
        ASSERT_FALSE(rep.aborted);
        EXPECT_FALSE(rep.pairs.empty());
        for (const auto& p : rep.pairs) EXPECT_LE(p.sup_l2, 1e-12);
        EXPECT_LE(rep.h2_spread, 1e-12);
    }
    auto u = run_uniqueness(stationary_spec(StudyKind::uniqueness));
    EXPECT_LE(u.difference, 1e-12);
    EXPECT_TRUE(u.pass);
    for (double d : u.kernel_difference) EXPECT_LE(d, 1e-12);
}

TEST(Trajectory, IdenticalRunsDifferByZero) {
    StudySpec s = stationary_spec(StudyKind::eps_cauchy);
    s.stationary = false;
    s.initial.profile_r = 3.0;
    const Field u0 = initial_field(s);
    RunConfiguration a{s.scheme, 0.2, KernelKind::gaussian};
    auto ag = compare_runs(u0, sample_times(s.t_end, s.scheme.dt, s.cadence), a, a);
    EXPECT_EQ(ag.sup_l2, 0.0);
    EXPECT_EQ(ag.sup_h2, 0.0);
    EXPECT_EQ(ag.final_l2, 0.0);
}

TEST(EpsCauchy, RepeatedEpsGivesZero) {
    StudySpec s = stationary_spec(StudyKind::eps_cauchy);
    s.stationary = false;
    const Field u0 = initial_field(s);
    const auto times = sample_times(s.t_end, s.scheme.dt, s.cadence);
    auto a = detail::eps_run(u0, s, 0.2, KernelKind::gaussian);
    auto b = detail::eps_run(u0, s, 0.2, KernelKind::gaussian);
    EXPECT_EQ(sup_difference(a, b), 0.0);
    EXPECT_EQ(a.states.size(), times.size());
}

TEST(EpsCauchy, RateAtLeastLinear) {
    auto rep = run_eps_cauchy(smooth_spec(StudyKind::eps_cauchy));
    ASSERT_FALSE(rep.aborted);
    ASSERT_TRUE(rep.fit_valid);
    EXPECT_EQ(rep.pairs.size(), 3u);
    EXPECT_GE(rep.fit.slope, 0.9);
    EXPECT_LE(rep.h2_spread, 0.1);
}

TEST(EpsLimit, MonotoneAndAgreesWithCauchySlope) {
    // four values as in the acceptance run; on the three-value ladder the fits differ by about 0.151
    StudySpec s = smooth_spec(StudyKind::eps_limit);
    s.eps_list = {0.4, 0.2, 0.1, 0.05};
    auto lim = run_eps_limit(s);
    s.kind = StudyKind::eps_cauchy;
    auto cau = run_eps_cauchy(s);
    ASSERT_TRUE(lim.fit_valid);
    EXPECT_TRUE(lim.monotone);
    EXPECT_GE(lim.fit.slope, 0.9);
    EXPECT_LE(lim.h2_spread, 0.1);
    EXPECT_EQ(lim.pairs.back().eps_b, 0.0);
    EXPECT_LE(std::abs(lim.fit.slope - cau.fit.slope), 0.15)
        << "limit " << lim.fit.slope << " cauchy " << cau.fit.slope;
}

TEST(EpsCauchy, DeterministicAcrossThreadCounts) {
    StudySpec s = smooth_spec(StudyKind::eps_cauchy);
    s.t_end = 0.05;
    s.threads = 1;
    auto a = run_eps_cauchy(s);
    s.threads = 3;
    auto b = run_eps_cauchy(s);
    ASSERT_EQ(a.pairs.size(), b.pairs.size());
    for (std::size_t i = 0; i < a.pairs.size(); ++i) EXPECT_EQ(a.pairs[i].sup_l2, b.pairs[i].sup_l2);
    EXPECT_EQ(a.fit.slope, b.fit.slope);
}

TEST(EpsCauchy, BlowUpAborts) {
    StudySpec s = stationary_spec(StudyKind::eps_cauchy);
    s.stationary = false;
    s.initial.amplitude = 3.0;
    s.initial.profile_r = 1.0;
    s.scheme.dt = 0.5;
    s.t_end = 20.0;
    auto rep = run_eps_cauchy(s);
    EXPECT_TRUE(rep.aborted);
    EXPECT_EQ(rep.verdict.verdict, Verdict::blown_up);
    EXPECT_TRUE(rep.pairs.empty());
}

TEST(EpsStudy, WritesOutputs) {
    StudySpec s = stationary_spec(StudyKind::eps_limit);
    s.output_dir = scratch("eps_limit").string();
    run_eps_limit(s);
    for (const char* f : {"eps_limit.csv", "eps_limit_summary.txt", "run_eps_0.2.csv", "run_eps_limit.csv"})
        EXPECT_TRUE(fs::exists(fs::path(s.output_dir) / f)) << f;
    std::ifstream is(fs::path(s.output_dir) / "run_eps_0.2.csv");
    auto ts = TimeSeries::read_csv(is);
    EXPECT_EQ(ts.metadata().epsilon, "0.2");
    EXPECT_GT(ts.size(), 1u);
}

TEST(Uniqueness, SchemesAgreeAndKernelsConverge) {
    auto rep = run_uniqueness(smooth_spec(StudyKind::uniqueness));
    EXPECT_GT(rep.est_etd1, 0.0);
    EXPECT_GT(rep.est_rk2, 0.0);
    EXPECT_GT(rep.dt_rk2, rep.dt_etd1);
    EXPECT_TRUE(rep.pass) << "difference " << rep.difference << " bound " << rep.bound;
    EXPECT_TRUE(rep.kernel_shrinks);
    ASSERT_EQ(rep.kernel_difference.size(), 3u);
    EXPECT_GT(rep.kernel_difference.front(), 0.0);
}

TEST(LinearGrowth, RatesMatchSymbol) {
    auto rep = run_linear_growth(growth_spec());
    ASSERT_EQ(rep.modes.size(), 5u);
    const double want[] = {2.0, 2.0, 0.0, -10.0, -70.0};
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(rep.modes[i].predicted, want[i]);
        EXPECT_LE(rep.modes[i].error, 1e-6) << "k2 " << rep.modes[i].k2 << " measured " << rep.modes[i].measured;
    }
    EXPECT_NEAR(rep.modes[3].measured, -10.0, 1e-5);
    EXPECT_LE(std::abs(rep.modes[2].measured), 1e-6);
    EXPECT_FALSE(rep.contaminated);
    EXPECT_TRUE(rep.pass());
}

TEST(LinearGrowth, LargeAmplitudeIsFlagged) {
    StudySpec s = growth_spec();
    s.growth_amplitude = 0.05;
    auto rep = run_linear_growth(s, {{0, 0, 0}, {1, 0, 0}});
    EXPECT_FALSE(rep.amplitude_ok);
    EXPECT_TRUE(rep.contaminated);
    EXPECT_FALSE(rep.pass());
}

TEST(LinearGrowth, NonDefaultPhysics) {
    StudySpec s = growth_spec();
    s.physics = {0.5, 0.3, 2.0, 1.0};
    auto rep = run_linear_growth(s, {{0, 0, 0}, {1, 1, 0}});
    // sigma = -2 k^4 + (2*1 - 0.3) k^2 + 0.3
    EXPECT_NEAR(rep.modes[0].predicted, 0.3, 1e-15);
    EXPECT_NEAR(rep.modes[1].predicted, -8.0 + 3.4 + 0.3, 1e-14);
    EXPECT_LE(rep.max_error, 1e-6);
}

TEST(GnCalibration, ConstantsGiveVolumeFactor) {
    Grid g(2, 16);
    std::vector<Field> family;
    for (int i = 1; i <= 4; ++i) family.push_back(Field::constant(g, {0.1 * i, 0.0, -0.2}));
    auto rep = gn_ratios(family, 2);
    const double V = 4.0 * std::numbers::pi * std::numbers::pi;
    EXPECT_NEAR(rep.linf_max, 1.0 / std::sqrt(V), 1e-14);
    EXPECT_EQ(rep.grad_l4_max, 0.0);  // undefined on constants, skipped
    EXPECT_EQ(rep.samples, 4u);
}

TEST(GnCalibration, SingleModeReproducible) {
    Grid g(2, 32);
    auto mode = Field::sample(g, [](const std::array<double, 3>& x) { return Vec3{std::cos(2 * x[0]), 0, 0}; });
    std::vector<Field> family{mode};
    auto a = gn_ratios(family, 2), b = gn_ratios(family, 2);
    EXPECT_TRUE(std::isfinite(a.linf_max));
    EXPECT_GT(a.grad_l4_max, 0.0);
    EXPECT_EQ(a.linf_max, b.linf_max);
    EXPECT_EQ(a.grad_l4_max, b.grad_l4_max);
}

TEST(GnCalibration, FileHasOneRowPerInequality) {
    StudySpec s;
    s.kind = StudyKind::gn_calibration;
    s.n = 32;
    s.initial.profile_r = 3.0;
    s.output_dir = scratch("gn").string();
    auto rep = run_gn_calibration(s);
    EXPECT_EQ(rep.samples, 100u);
    auto file = CalibrationFile::load(fs::path(s.output_dir) / "calibration.txt");
    EXPECT_EQ(file.records().size(), 2u);
    for (const auto& r : file.records()) EXPECT_GT(r.value, 0.0) << r.id;
    auto again = run_gn_calibration(s);
    EXPECT_EQ(again.linf_max, rep.linf_max);
}
