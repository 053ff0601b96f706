#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "dispersive/kdv.hpp"
#include "reference_tables.hpp"

using namespace dispersive;
using namespace dispersive::kdv;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

RunConfig default_run(const std::string& preset) {
    RunConfig cfg;
    cfg.dt_rule = preset_defaults(preset).dt_rule;
    return cfg;
}

double ratio(double a, double b) { return std::max(a / b, b / a); }

}  // namespace

TEST(Presets, AllNamesConstruct) {
    for (const auto& name : preset_names()) {
        auto p = make_problem(name);
        EXPECT_EQ(p.name, name);
        EXPECT_GT(p.length(), 0.0);
        EXPECT_TRUE(std::isfinite(p.initial_condition(p.x_lo + 0.3 * p.length()))) << name;
        EXPECT_NO_THROW(preset_defaults(name));
    }
    EXPECT_THROW(make_problem("burgers"), LookupError);
    EXPECT_THROW(preset_defaults("burgers"), LookupError);
}

TEST(Presets, LinearDefaultsTieEpsilonToWavenumber) {
    auto p = make_problem("linear", {.c = 8.0});
    EXPECT_DOUBLE_EQ(p.epsilon, 1.0 / 64.0);
    EXPECT_NEAR(p.exact_solution(0.1, 0.2), std::sin(8.0 * 0.3), 1e-15);
    EXPECT_THROW(make_problem("linear", {.c = 0.0}), ArgumentError);
}

TEST(Presets, SolitonExactSolutionTravels) {
    auto p = make_problem("soliton");
    EXPECT_NEAR(p.initial_condition(0.0), -2.0, 1e-15);
    EXPECT_NEAR(p.exact_solution(2.0, 0.5), -2.0, 1e-15);
    // periodic extension across the domain edge
    EXPECT_NEAR(p.initial_condition(p.x_hi - 1e-9), p.initial_condition(p.x_lo - 1e-9), 1e-12);
}

TEST(Presets, SingleSolitonPeak) {
    auto p = make_problem("single_soliton");
    EXPECT_NEAR(p.initial_condition(0.5), 0.9, 1e-15);
    EXPECT_NEAR(p.exact_solution(0.5 + 0.3 * 1.5, 1.5), 0.9, 1e-12);
}

TEST(Presets, TophatLiteralInterval) {
    auto p = make_problem("tophat");
    EXPECT_EQ(p.initial_condition(0.2), 0.0);
    EXPECT_EQ(p.initial_condition(0.3), 1.0);
    EXPECT_EQ(p.initial_condition(0.99), 1.0);
}

TEST(Rhs, ConstantStateHasZeroRate) {
    for (auto f : {SchemeFamily::tdcncs, SchemeFamily::tdccs}) {
        auto p = make_problem("soliton");
        auto d = make_discretization(f, 8, p, 32);
        std::vector<double> u(d.state_size(), 0.7);
        for (double r : semidiscrete_rhs(p, d, u)) EXPECT_NEAR(r, 0.0, 1e-12);
    }
}

TEST(Rhs, LinearWaveRate) {
    // u = sin(x): -eps u_xxx = cos(x) at eps = 1
    auto p = make_problem("linear");
    for (auto f : {SchemeFamily::tdcncs, SchemeFamily::tdccs}) {
        auto d = make_discretization(f, 8, p, 40);
        auto u = initial_state(p, d);
        auto r = semidiscrete_rhs(p, d, u);
        for (int j = 0; j < d.n; ++j) EXPECT_NEAR(r[j], std::cos(j * d.h), 1e-6) << j;
        if (d.dual()) {
            for (int j = 0; j < d.n; ++j) EXPECT_NEAR(r[d.n + j], std::cos((j + 0.5) * d.h), 1e-6);
        }
    }
}

TEST(Rhs, RateSumsToZero) {
    auto p = make_problem("single_soliton");
    for (auto f : {SchemeFamily::tdcncs, SchemeFamily::tdccs}) {
        auto d = make_discretization(f, 8, p, 80);
        auto r = semidiscrete_rhs(p, d, initial_state(p, d));
        double s = 0.0, m = 0.0;
        for (double x : r) {
            s += x;
            m = std::max(m, std::abs(x));
        }
        EXPECT_LT(std::abs(s), 1e-10 * m * r.size());
    }
}

TEST(Rhs, StateSizeChecked) {
    auto p = make_problem("linear");
    auto d = make_discretization(SchemeFamily::tdccs, 8, p, 20);
    std::vector<double> u(20, 0.0);
    EXPECT_THROW(semidiscrete_rhs(p, d, u), ArgumentError);
}

TEST(Integrate, ZeroFinalTimeReturnsInitialCondition) {
    auto p = make_problem("linear", {.t_final = 0.0});
    auto d = make_discretization(SchemeFamily::tdccs, 8, p, 20);
    auto r = integrate(p, d, default_run("linear"));
    EXPECT_EQ(r.steps, 0);
    const auto u0 = initial_state(p, d);
    EXPECT_EQ(r.final_state.nodes, std::vector<double>(u0.begin(), u0.begin() + 20));
    EXPECT_EQ(r.final_state.centers, std::vector<double>(u0.begin() + 20, u0.end()));
    // only the repeated endpoint differs: sin(2 pi) is not exactly zero
    EXPECT_LT(r.errors->linf, 1e-15);
}

TEST(Integrate, StepCountLandsOnFinalTime) {
    auto p = make_problem("linear", {.t_final = 0.1});
    auto d = make_discretization(SchemeFamily::tdcncs, 8, p, 20);
    RunConfig cfg;
    cfg.dt_rule = DtRule::fixed(0.03);
    auto r = integrate(p, d, cfg);
    EXPECT_EQ(r.steps, 4);
    EXPECT_DOUBLE_EQ(r.dt, 0.025);
    EXPECT_DOUBLE_EQ(r.final_state.time, 0.1);
}

TEST(Norms, HandComputedExample) {
    std::vector<double> a = {1.0, 2.0, 3.0}, b = {1.0, -1.0, 7.0};
    auto e = error_norms(a, b);
    EXPECT_DOUBLE_EQ(e.linf, 4.0);
    EXPECT_DOUBLE_EQ(e.l1, 7.0 / 3.0);
    EXPECT_DOUBLE_EQ(e.l2, std::sqrt(25.0 / 3.0));
    EXPECT_THROW(error_norms(a, std::vector<double>{1.0}), ArgumentError);
}

TEST(Norms, ClosedGridRepeatsEndpoint) {
    auto p = make_problem("linear");
    auto x = closed_grid(p, 4);
    ASSERT_EQ(x.size(), 5u);
    EXPECT_DOUBLE_EQ(x.back(), kTwoPi);
    std::vector<double> v = {1, 2, 3, 4};
    EXPECT_EQ(closed_values(v), (std::vector<double>{1, 2, 3, 4, 1}));
}

TEST(Accuracy, LinearWaveMatchesTabulatedErrorAtTwenty) {
    auto p = make_problem("linear");
    auto a = integrate(p, make_discretization(SchemeFamily::tdcncs, 8, p, 20), default_run("linear"));
    auto b = integrate(p, make_discretization(SchemeFamily::tdccs, 8, p, 20), default_run("linear"));
    EXPECT_LT(ratio(a.errors->linf, reference::linear_c1_tdcncs[1].linf), 1.10);
    EXPECT_LT(ratio(b.errors->linf, reference::linear_c1_tdccs[1].linf), 1.10);
}

TEST(Accuracy, SolitonTdccsAtForty) {
    auto p = make_problem("soliton");
    auto r = integrate(p, make_discretization(SchemeFamily::tdccs, 8, p, 40), default_run("soliton"));
    EXPECT_LT(ratio(r.errors->linf, reference::soliton_tdccs[1].linf), 2.0);
}

TEST(Convergence, LinearWaveEighthOrder) {
    auto p = make_problem("linear");
    auto a = convergence_study(p, SchemeFamily::tdcncs, 8, {10, 20, 30}, default_run("linear"));
    auto b = convergence_study(p, SchemeFamily::tdccs, 8, {10, 20, 30}, default_run("linear"));
    ASSERT_EQ(a.rows.size(), 3u);
    EXPECT_FALSE(a.rows[0].rate_inf.has_value());
    EXPECT_NEAR(*a.rows[1].rate_inf, 8.03, 0.3);
    EXPECT_NEAR(*a.rows[2].rate_inf, 8.01, 0.3);
    for (std::size_t i = 1; i < 3; ++i) {
        EXPECT_GE(*a.rows[i].rate_2, 7.5);
        EXPECT_LE(*a.rows[i].rate_2, 8.5);
        EXPECT_GE(*b.rows[i].rate_inf, 7.0);
        EXPECT_LE(*b.rows[i].rate_inf, 8.2);
    }
    EXPECT_EQ(a.scheme, "TDCNCS-T8");
    EXPECT_EQ(b.scheme, "TDCCS-T8");
}

TEST(Convergence, SolitonNodeSchemeRate) {
    auto p = make_problem("soliton");
    auto r = convergence_study(p, SchemeFamily::tdcncs, 8, {60, 80}, default_run("soliton"));
    EXPECT_NEAR(*r.rows[1].rate_inf, 7.97, 0.5);
}

TEST(Convergence, ThreadCountDoesNotChangeResults) {
    auto p = make_problem("linear");
    auto a = convergence_study(p, SchemeFamily::tdcncs, 8, {10, 16}, default_run("linear"), 1);
    auto b = convergence_study(p, SchemeFamily::tdcncs, 8, {10, 16}, default_run("linear"), 4);
    EXPECT_EQ(a.rows[1].err.linf, b.rows[1].err.linf);
}

TEST(Convergence, RejectsBadInputs) {
    auto lin = make_problem("linear");
    EXPECT_THROW(convergence_study(lin, SchemeFamily::tdcncs, 8, {}, {}), ArgumentError);
    EXPECT_THROW(convergence_study(lin, SchemeFamily::tdcncs, 8, {20, 10}, {}), ArgumentError);
    EXPECT_THROW(convergence_study(make_problem("double_soliton"), SchemeFamily::tdcncs, 8, {20}, {}),
                 ArgumentError);
}

TEST(Conservation, MassDriftSmall) {
    auto p = make_problem("single_soliton", {.t_final = 0.2});
    for (auto f : {SchemeFamily::tdcncs, SchemeFamily::tdccs}) {
        auto r = integrate(p, make_discretization(f, 8, p, 80), default_run("single_soliton"));
        EXPECT_NEAR(r.mass_final.node, r.mass_initial.node, 1e-10);
        if (f == SchemeFamily::tdccs) {
            EXPECT_NEAR(*r.mass_final.center, *r.mass_initial.center, 1e-10);
        }
    }
}

TEST(Filtering, NeverAmplifiesAnyMode) {
    const int n = 64;
    FilterOperator f(derive_filter("F12", 0.4), n);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int m = 0; m <= n / 2; ++m) {
        std::vector<double> in(n), out(n);
        double ph = u(rng);
        for (int j = 0; j < n; ++j) in[j] = std::cos(kTwoPi * m * j / n + ph);
        f.apply(in, out);
        double ein = 0.0, eout = 0.0;
        for (int j = 0; j < n; ++j) {
            ein += in[j] * in[j];
            eout += out[j] * out[j];
        }
        EXPECT_LE(eout, ein * (1 + 1e-12)) << m;
    }
}

TEST(Filtering, FilteredRunConservesMass) {
    auto p = make_problem("double_soliton", {.t_final = 0.05});
    RunConfig cfg = default_run("double_soliton");
    cfg.filter = FilterPolicy{"F12", 0.4, 5};
    auto r = integrate(p, make_discretization(SchemeFamily::tdcncs, 8, p, 100), cfg);
    EXPECT_NEAR(r.mass_final.node, r.mass_initial.node, 1e-10);
}

TEST(Stability, GuardWarnsButRuns) {
    auto p = make_problem("linear", {.t_final = 0.05});
    RunConfig cfg;
    cfg.dt_rule = DtRule::fixed(0.01);
    auto r = integrate(p, make_discretization(SchemeFamily::tdcncs, 8, p, 40), cfg);
    EXPECT_FALSE(r.warnings.empty());
    EXPECT_LT(r.dt_bound_dispersive, 0.01);
}

TEST(Stability, DivergenceReportsStep) {
    auto p = make_problem("linear", {.t_final = 50.0});
    RunConfig cfg;
    cfg.dt_rule = DtRule::fixed(0.05);
    try {
        integrate(p, make_discretization(SchemeFamily::tdcncs, 8, p, 40), cfg);
        FAIL();
    } catch (const DivergenceError& e) {
        EXPECT_GT(e.step(), 0);
        EXPECT_NE(std::string(e.what()).find("dispersive"), std::string::npos);
    }
}

TEST(Snapshots, RecordedAtRequestedTimes) {
    auto p = make_problem("linear", {.t_final = 0.1});
    RunConfig cfg;
    cfg.dt_rule = DtRule::fixed(0.01);
    cfg.snapshot_times = {0.05, 0.0};
    auto r = integrate(p, make_discretization(SchemeFamily::tdccs, 8, p, 10), cfg);
    ASSERT_EQ(r.history.size(), 2u);
    EXPECT_EQ(r.history[0].step, 0);
    EXPECT_NEAR(r.history[1].time, 0.05, 1e-12);
    EXPECT_EQ(r.history[1].centers.size(), 10u);
}

TEST(Csv, HeadersPinned) {
    auto p = make_problem("linear", {.t_final = 0.0});
    auto r = integrate(p, make_discretization(SchemeFamily::tdcncs, 8, p, 8), default_run("linear"));
    std::ostringstream os;
    write_snapshot_csv(os, p, r.final_state);
    const std::string text = os.str();
    EXPECT_EQ(text.substr(0, text.find('\n')), kSnapshotCsvHeader);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 10);

    auto rep = convergence_study(p, SchemeFamily::tdcncs, 8, {8}, default_run("linear"));
    std::ostringstream cs;
    write_convergence_csv(cs, rep);
    EXPECT_EQ(cs.str().substr(0, cs.str().find('\n')), kConvergenceCsvHeader);
    EXPECT_EQ(std::string(kSnapshotCsvHeader), "x,u_numeric,u_exact,abs_error");
    EXPECT_EQ(std::string(kConvergenceCsvHeader), "N,Linf,L1,L2,rate_inf,rate_1,rate_2");
}

TEST(Parsing, DtRules) {
    EXPECT_EQ(DtRule::parse("cfl_h3:0.01").nominal(2.0), 0.08);
    EXPECT_EQ(DtRule::parse("half_h2").nominal(0.1), 0.5 * 0.1 * 0.1);
    EXPECT_EQ(DtRule::parse("fixed:1e-4").nominal(7.0), 1e-4);
    EXPECT_EQ(DtRule::parse(DtRule::h2().str()).kind, DtRule::Kind::h2);
    for (const char* bad : {"cfl_h3", "fixed:x", "h2:1", "rk4"}) EXPECT_THROW(DtRule::parse(bad), ArgumentError) << bad;
}

TEST(Parsing, FilterPolicies) {
    auto f = FilterPolicy::parse("F12:0.4:20");
    EXPECT_EQ(f.id, "F12");
    EXPECT_EQ(f.alpha, 0.4);
    EXPECT_EQ(f.every, 20);
    EXPECT_EQ(FilterPolicy::parse("F8").every, 1);
    for (const char* bad : {"F13", "F12:0.6", "F12:0.4:0", "F12:a", "F12:0.4:1:2"})
        EXPECT_ANY_THROW(FilterPolicy::parse(bad)) << bad;
    EXPECT_EQ(parse_family("TDCCS"), SchemeFamily::tdccs);
    EXPECT_THROW(parse_family("abc"), LookupError);
}
