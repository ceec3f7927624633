#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "llbar/calibration.hpp"
#include "llbar/experiments.hpp"
#include "llbar/physics.hpp"
#include "oracles.hpp"

using namespace llbar;

namespace {

double max_abs(const Field& f) { return oracle::linf(to_representation(f, Representation::physical)); }

Field constant(const Grid& g, Vec3 v) { return Field::constant(g, v); }

}  // namespace

TEST(Physics, ParamsValidate) {
    EffectiveFieldParams p;
    EXPECT_NO_THROW(p.validate());
    EXPECT_DOUBLE_EQ(p.coupling(), 2.0);
    EXPECT_DOUBLE_EQ(p.linear_symbol(1.0), 2.0);
    EXPECT_DOUBLE_EQ(p.max_linear_symbol(), 2.25);
    for (double EffectiveFieldParams::*m : {&EffectiveFieldParams::chi, &EffectiveFieldParams::lambda_r,
                                            &EffectiveFieldParams::lambda_e, &EffectiveFieldParams::gamma}) {
        EffectiveFieldParams q;
        q.*m = 0.0;
        EXPECT_THROW(q.validate(), ParameterError);
        q.*m = -1.0;
        EXPECT_THROW(q.validate(), ParameterError);
    }
}

TEST(Physics, EffectiveFieldOfConstants) {
    Grid g(2, 16);
    EXPECT_EQ(max_abs(effective_field(constant(g, {0, 0, 0}))), 0.0);
    EXPECT_LE(max_abs(effective_field(constant(g, {0, 0, 1}))), 1e-15);
    Field h = effective_field(constant(g, {0, 0, 0.5}));
    for (std::size_t p = 0; p < g.size(); ++p) {
        EXPECT_NEAR(h.value(p)[2], 0.75, 1e-14);
        EXPECT_NEAR(h.value(p)[0], 0.0, 1e-15);
    }
}

TEST(Physics, NonFiniteInputIsDataError) {
    Grid g(1, 16);
    Field u(g);
    u.at(2, 0) = INFINITY;
    EXPECT_THROW(rhs(u), DataError);
    EXPECT_THROW(effective_field(u), DataError);
    EXPECT_THROW(energy(u), DataError);
}

TEST(Physics, StationaryUnitConstant) {
    for (int d = 1; d <= 3; ++d) {
        Grid g(d, d == 3 ? 8 : 16);
        auto t = rhs_terms(constant(g, {0, 0, 1}));
        for (const Field* f : {&t.bilaplacian_term, &t.laplacian_term, &t.cubic_term, &t.cubic_laplacian_term,
                               &t.cross_term})
            EXPECT_LE(max_abs(*f), 1e-12);
        Field tilted = constant(g, {0.6, 0.0, 0.8});
        EXPECT_LE(max_abs(rhs(tilted)), 1e-12);
    }
}

TEST(Physics, ConstantReducesToOde) {
    Grid g(2, 16);
    for (double c : {-1.3, -0.5, 0.0, 0.25, 0.9, 2.0}) {
        Field f = rhs(constant(g, {0, 0, c}));
        for (std::size_t p = 0; p < g.size(); p += 17) EXPECT_NEAR(f.value(p)[2], 2 * c * (1 - c * c), 1e-12);
    }
}

TEST(Physics, LinearizationAboutZero) {
    Grid g(1, 32);
    const double a = 1e-6;
    Field u = Field::sample(g, [&](const std::array<double, 3>& x) { return Vec3{a * std::sin(x[0]), 0, 0}; });
    Field f = rhs(u);
    const double sigma = -1.0 + 1.0 + 2.0;
    Field pred = sigma * u;
    EXPECT_LE(l2_norm(f - pred) / l2_norm(pred), 1e-9);
    // k = 2 has sigma = -16 + 4 + 2
    Field u2 = Field::sample(g, [&](const std::array<double, 3>& x) { return Vec3{0, a * std::cos(2 * x[0]), 0}; });
    EXPECT_LE(l2_norm(rhs(u2) - (-10.0) * u2) / l2_norm(10.0 * u2), 1e-9);
}

TEST(Physics, TermsSumToTotal) {
    Grid g(2, 64);
    for (const auto& u : resolved_family(g, 5, 1)) {
        auto t = rhs_terms(u);
        Field manual = t.bilaplacian_term;
        for (const Field* f : {&t.laplacian_term, &t.cubic_term, &t.cubic_laplacian_term, &t.cross_term}) manual += *f;
        EXPECT_LE(l2_norm(manual - rhs(u)), 1e-12 * l2_norm(manual));
    }
}

TEST(Physics, TermsMatchClosedForm) {
    // u = (0.3 sin x, 0.2 cos 2x, 0.1 + 0.1 sin 3x); Laplacians are exact
    // multiples per component, products formed pointwise here.
    Grid g(1, 64);
    auto field = [&](auto fn) { return Field::sample(g, fn); };
    Field u = field([](const std::array<double, 3>& x) {
        return Vec3{0.3 * std::sin(x[0]), 0.2 * std::cos(2 * x[0]), 0.1 + 0.1 * std::sin(3 * x[0])};
    });
    Field lap = field([](const std::array<double, 3>& x) {
        return Vec3{-0.3 * std::sin(x[0]), -0.8 * std::cos(2 * x[0]), -0.9 * std::sin(3 * x[0])};
    });
    Field bil = field([](const std::array<double, 3>& x) {
        return Vec3{0.3 * std::sin(x[0]), 3.2 * std::cos(2 * x[0]), 8.1 * std::sin(3 * x[0])};
    });
    auto t = rhs_terms(u);
    EXPECT_LE(max_abs(t.laplacian_term - (1.0 - 2.0) * lap), 1e-12);
    EXPECT_LE(max_abs(t.bilaplacian_term + bil), 1e-10);  // roundoff scales with k^4
    Field cross_o(g), cubic_o(g);
    for (std::size_t p = 0; p < g.size(); ++p) {
        auto a = u.value(p), b = lap.value(p);
        cross_o.set(p, {-(a[1] * b[2] - a[2] * b[1]), -(a[2] * b[0] - a[0] * b[2]), -(a[0] * b[1] - a[1] * b[0])});
        const double m = 1.0 - (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
        cubic_o.set(p, {2 * m * a[0], 2 * m * a[1], 2 * m * a[2]});
    }
    EXPECT_LE(max_abs(t.cross_term - cross_o), 1e-12);
    EXPECT_LE(max_abs(t.cubic_term - cubic_o), 1e-12);
}

TEST(Physics, RhsConsistencyWithEffectiveField) {
    Grid g(2, 64);
    EXPECT_EQ(rhs_consistency_with_heff(constant(g, {0, 0, 1})), 0.0);
    for (const auto& u : resolved_family(g, 5, 10)) EXPECT_LE(rhs_consistency_with_heff(u), 1e-11);
    Field single = Field::sample(g, [](const std::array<double, 3>& x) {
        return Vec3{0.3 * std::cos(x[0] + 2 * x[1]), 0.3 * std::sin(x[0] + 2 * x[1]), 0};
    });
    EXPECT_LE(rhs_consistency_with_heff(single), 1e-11);
}

TEST(Physics, MollifiedRhsOfUnitConstantVanishes) {
    Grid g(2, 32);
    auto J = make_mollifier(g, 0.3);
    EXPECT_LE(max_abs(rhs_mollified(constant(g, {0, 1, 0}), J)), 1e-12);
    EXPECT_THROW(rhs_mollified(constant(Grid(2, 16), {0, 1, 0}), J), GridMismatch);
}

TEST(Physics, MollifiedRhsApproachesLimit) {
    Grid g(2, 64);
    Field u = oracle::trig_field(g, 2, 3);
    Field f = rhs(u);
    std::vector<double> eps{0.2, 0.1, 0.05}, err;
    for (double e : eps) err.push_back(l2_norm(rhs_mollified(u, make_mollifier(g, e)) - f));
    EXPECT_GT(err[0], err[1]);
    EXPECT_GT(err[1], err[2]);
    EXPECT_GE(fit_loglog(eps, err).slope, 0.9);
}

TEST(Physics, MollifiedLinearPartScales) {
    // the bilaplacian, laplacian and lr*a*u addends of F^eps, isolated
    Grid g(2, 32);
    auto J = make_mollifier(g, 0.2);
    EffectiveFieldParams p;
    auto linear = [&](const Field& u) {
        auto t = rhs_terms(mollify(J, u), p);
        Field l = t.bilaplacian_term + t.laplacian_term;
        l.axpy(p.lambda_r * p.coupling(), mollify(J, u));
        return mollify(J, l);
    };
    Field u = oracle::trig_field(g, 4);
    for (double a : {3.0, -0.5, 1e-4}) {
        Field lhs = linear(a * u), rhs_ = a * linear(u);
        EXPECT_LE(l2_norm(lhs - rhs_), 1e-12 * l2_norm(rhs_));
    }
}

TEST(Physics, LipschitzProbe) {
    Grid g(2, 32);
    auto J = make_mollifier(g, 0.2);
    Field u = oracle::trig_field(g, 1);
    EXPECT_THROW(lipschitz_probe(u, u, J, {}, 1.0), DegenerateRatio);
    Field small = 1e-3 * u;
    Field zero(g);
    const double r = lipschitz_probe(small, zero, J, {}, 0.0);
    EXPECT_NEAR(r, l2_norm(rhs_mollified(small, J)) / l2_norm(small), 1e-12 * r);
    EXPECT_TRUE(std::isfinite(r));
}

TEST(Physics, LipschitzCalibrationRegression) {
    auto cal = CalibrationFile::load(std::string(LLBAR_DATA_DIR) + "/calibration.txt");
    auto stored = cal.find("lipschitz_h1", "gaussian", 0.2);
    ASSERT_TRUE(stored.has_value());
    Grid g(2, 64);
    auto J = make_mollifier(g, 0.2);
    double lip = 0.0;
    for (int i = 0; i < 50; ++i) {
        InitialDataSpec a, b;
        a.amplitude = b.amplitude = 1.0;
        a.seed = 1000 + 2 * i;
        b.seed = a.seed + 1;
        lip = std::max(lip, lipschitz_probe(random_field(g, a), random_field(g, b), J, {}, 1.0));
    }
    EXPECT_LE(lip, 1.05 * *stored);
}

TEST(Physics, IdentitiesOnConstants) {
    Grid g(2, 16, 3.0);
    const double V = 9.0;
    auto z = identity_l2(constant(g, {0, 0, 0}), nullptr);
    EXPECT_EQ(z.lhs, 0.0);
    EXPECT_EQ(z.rhs, 0.0);
    auto one = identity_l2(constant(g, {0, 0, 1}), nullptr);
    EXPECT_NEAR(one.lhs, 2 * V, 1e-12);
    EXPECT_NEAR(one.rhs, 2 * V, 1e-12);
    EXPECT_LE(one.residual, 1e-14);
    auto h = identity_h1(constant(g, {0, 0, 0}), nullptr);
    EXPECT_EQ(h.lhs, 0.0);
    EXPECT_EQ(h.rhs, 0.0);
    EXPECT_EQ(identity_cubic_expansion(constant(g, {0, 0, 0}), nullptr), 0.0);
    EXPECT_LE(identity_cubic_expansion(constant(g, {0.3, 0.4, 0.5}), nullptr), 1e-15);
}

TEST(Physics, IdentitiesOnBandLimitedFamily) {
    Grid g(2, 64);
    auto J = make_mollifier(g, 0.2);
    for (const auto& u : resolved_family(g, 10, 100)) {
        for (const MollifierSymbol* j : std::array<const MollifierSymbol*, 2>{nullptr, &J}) {
            EXPECT_LE(identity_l2(u, j).residual, 1e-10);
            auto h = identity_h1(u, j);
            EXPECT_LE(h.residual, 1e-10);
            EXPECT_LE(h.orthogonality, 1e-11);
            EXPECT_LE(identity_cubic_expansion(u, j), 1e-10);
        }
    }
}

TEST(Physics, IdentitiesInThreeDimensions) {
    Grid g(3, 32);
    auto J = make_mollifier(g, 0.2);
    Field u = resolved_family(g, 1, 7).front();
    EXPECT_LE(identity_l2(u, &J).residual, 1e-10);
    EXPECT_LE(identity_h1(u, &J).residual, 1e-10);
    EXPECT_LE(identity_cubic_expansion(u, &J), 1e-10);
}

TEST(Physics, IdentitiesAtNonDefaultConstants) {
    Grid g(2, 64);
    EffectiveFieldParams p{0.4, 0.7, 1.3, 2.0};
    auto J = make_mollifier(g, 0.15, KernelKind::bump);
    Field u = resolved_family(g, 1, 55).front();
    EXPECT_LE(identity_l2(u, &J, p).residual, 1e-10);
    EXPECT_LE(identity_h1(u, &J, p).residual, 1e-10);
}

TEST(Physics, CrossTermOrthogonality) {
    Grid g(2, 64);
    for (const auto& u : resolved_family(g, 5, 20)) {
        Field lap = laplacian(u);
        Field c = dealiased_cross(u, lap);
        EXPECT_LE(std::abs(inner_product(c, u)), 1e-11 * l2_norm(c) * l2_norm(u));
        EXPECT_LE(std::abs(inner_product(c, lap)), 1e-11 * l2_norm(c) * l2_norm(lap));
    }
}

TEST(Physics, EnergyOfConstants) {
    Grid g(3, 8, 2.0);
    EXPECT_EQ(energy(constant(g, {0, 0, 0})), 0.0);
    EXPECT_NEAR(energy(constant(g, {0, 0, 1})), -4.0, 1e-13);
    EXPECT_NEAR(dissipation(constant(g, {0, 0, 1})), 0.0, 1e-24);
    EXPECT_EQ(dissipation(constant(g, {0, 0, 0})), 0.0);
}

TEST(Physics, EnergyMatchesQuadratureOracle) {
    Grid g(2, 16);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        Field u = oracle::trig_field(g, seed);
        double grad2 = 0.0;
        for (int a = 0; a < 2; ++a) {
            Field d = oracle::multiply(u, [&](std::array<int, 3> m) { return cplx(0.0, m[a] == -8 ? 0 : m[a]); });
            grad2 += oracle::inner(d, d);
        }
        const double e = 0.5 * std::pow(oracle::lp_norm(u, 4), 4) + 0.5 * grad2 - oracle::inner(u, u);
        EXPECT_NEAR(energy(u), e, 1e-11 * std::max(1.0, std::abs(e)));
    }
}

TEST(Physics, DissipationMatchesNormDecomposition) {
    Grid g(2, 32);
    for (std::uint64_t seed : {4u, 5u}) {
        Field u = oracle::trig_field(g, seed);
        Field h = effective_field(u);
        double gh = 0.0;
        for (int a = 0; a < 2; ++a) {
            Field d = oracle::multiply(h, [&](std::array<int, 3> m) { return cplx(0.0, m[a] == -16 ? 0 : m[a]); });
            gh += oracle::inner(d, d);
        }
        const double want = oracle::inner(h, h) + gh;
        EXPECT_NEAR(dissipation(u), want, 1e-9 * want);
        EXPECT_GE(dissipation(u), 0.0);
    }
}

TEST(Physics, EnergyChainRule) {
    Grid g(2, 64);
    for (const auto& u : resolved_family(g, 5, 30)) {
        const double d = dissipation(u);
        EXPECT_NEAR(energy_rate(u), -d, 1e-9 * d);
    }
}

TEST(Physics, GagliardoNirenbergProbes) {
    Grid g(2, 32);
    EXPECT_TRUE(std::isnan(gn_grad_l4_ratio(constant(g, {1, 0, 0}))));
    Field f = oracle::trig_field(g, 3);
    EXPECT_GT(gn_linf_ratio(f), 0.0);
    EXPECT_TRUE(std::isfinite(gn_grad_l4_ratio(f)));
}

TEST(Physics, GnCalibrationRegression) {
    auto cal = CalibrationFile::load(std::string(LLBAR_DATA_DIR) + "/calibration.txt");
    Grid g(2, 64);
    std::vector<Field> family;
    for (std::uint64_t i = 0; i < 100; ++i) {
        InitialDataSpec s;
        s.seed = i;
        family.push_back(random_field(g, s));
    }
    auto rep = gn_ratios(family, 2);
    EXPECT_EQ(rep.samples, 100u);
    auto linf = cal.find("gn_linf_d2"), l4 = cal.find("gn_grad_l4_d2");
    ASSERT_TRUE(linf && l4);
    EXPECT_LE(rep.linf_max, 1.05 * *linf);
    EXPECT_LE(rep.grad_l4_max, 1.05 * *l4);
}
