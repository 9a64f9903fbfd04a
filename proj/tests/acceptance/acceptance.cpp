// Acceptance suite: one PASS/FAIL line per primary criterion. Exit status is
// non-zero if any criterion fails.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <future>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "propsim/dynamics.hpp"
#include "propsim/error.hpp"
#include "propsim/regime.hpp"
#include "propsim/scenario_io.hpp"
#include "propsim/service.hpp"
#include "test_support.hpp"

using namespace propsim;
using namespace propsim::testing;
using nlohmann::json;
namespace svc = propsim::service;

namespace {

// Pinned tolerances and limits.
constexpr double kScenarioBudgetSec = 0.1;
constexpr double kPropertyBudgetSec = 30.0;
constexpr double kSweepBudgetSec = 1.0;
constexpr double kSmoothGapThreshold = 0.20;
constexpr double kCriticalExact = 2004.0080160320641;
constexpr double kCriticalRelTol = 1e-9;
constexpr double kClosedFormRelTol = 1e-9;
constexpr double kSqrtAbsTol = 1e-10;
constexpr double kConservationRelTol = 1e-12;
constexpr double kExposureRelTol = 1e-12;
constexpr double kImpactUlps = 4.0;
constexpr double kMaturityLimitTol = 1e-2;
constexpr double kFixedPointExponentTol = 1e-9;
constexpr double kHealthBudgetMs = 100.0;
constexpr int kPropertySteps = 10000;
constexpr int kSqrtCases = 300;
constexpr int kConcurrentRequests = 32;

struct Check {
    bool ok = true;
    std::ostringstream detail;
    std::string failures;

    void expect(bool cond, const std::string& what) {
        if (cond) return;
        failures += (ok ? "failed: " : "; ") + what;
        ok = false;
    }
};

struct Criterion {
    std::string name;
    double budget_sec;  // <= 0 means no runtime limit
    std::function<void(Check&)> body;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string describe(const RegimeReport& r) {
    std::ostringstream os;
    os << "regime=" << to_string(r.regime) << " termination=" << to_string(r.termination);
    if (r.bankruptcy_step) os << " bankrupt_at=" << *r.bankruptcy_step;
    if (!r.peaks.empty()) os << " peak=" << r.peaks.front().value << "@" << r.peaks.front().step;
    os << " gaps=" << r.gaps.size() << " final=" << r.final_capital;
    return os.str();
}

bool in_open(double x, double lo, double hi) { return x > lo && x < hi; }
bool in_closed(std::size_t x, std::size_t lo, std::size_t hi) { return x >= lo && x <= hi; }

void smooth_bubble(Check& c) {
    const auto traj = simulate(reference_scenario(1000.0, 20.0));
    const auto r = classify(traj);
    c.expect(r.regime == Regime::SmoothBubble, "regime SmoothBubble");
    c.expect(r.peaks.size() == 1, "exactly one prominent peak");
    if (!r.peaks.empty()) {
        c.expect(in_open(r.peaks[0].value, 1750.0, 2000.0), "peak in (1750, 2000)");
        c.expect(in_closed(r.peaks[0].step, 280, 320), "peak step in [280, 320]");
    }
    c.expect(r.termination == Termination::Bankrupt, "termination Bankrupt");
    c.expect(r.bankruptcy_step && in_closed(*r.bankruptcy_step, 550, 650),
             "bankruptcy step in [550, 650]");
    c.expect(detect_gaps(traj, kSmoothGapThreshold).empty(), "no gaps at threshold 0.20");
    c.detail << describe(r);
}

void gap_bubble(Check& c) {
    const auto r = classify(simulate(reference_scenario(1010.0, 20.0)));
    c.expect(r.regime == Regime::GapBubble, "regime GapBubble");
    c.expect(!r.peaks.empty() && r.peaks[0].value > 2000.0, "peak > 2000");
    c.expect(!r.peaks.empty() && in_closed(r.peaks[0].step, 230, 270), "peak step in [230, 270]");
    c.expect(std::any_of(r.gaps.begin(), r.gaps.end(),
                         [](const GapEvent& g) { return g.rel_change < 0.0; }),
             "at least one negative gap");
    c.expect(r.termination == Termination::Bankrupt && r.bankruptcy_step &&
                 *r.bankruptcy_step <= 650,
             "bankrupt by step 650");
    c.detail << describe(r);
}

void unbounded_growth(Check& c) {
    const auto traj = simulate(reference_scenario(1012.0, 20.0));
    const auto r = classify(traj);
    c.expect(r.regime == Regime::UnboundedGrowth, "regime UnboundedGrowth");
    c.expect(traj.states.size() > 1000 && traj.states[1000].capital > 17500.0,
             "capital at step 1000 > 17500");
    c.detail << describe(r);
}

void double_bubble(Check& c) {
    const auto traj = simulate(reference_scenario(1000.0, 17.0));
    const auto r = classify(traj);
    const auto cap = traj.capital_series();
    c.expect(r.peaks.size() >= 2, "two prominent peaks");
    if (r.peaks.size() >= 2) {
        c.expect(in_open(r.peaks[0].value, 2200.0, 2800.0), "first peak in (2200, 2800)");
        c.expect(in_closed(r.peaks[0].step, 120, 180), "first peak step in [120, 180]");
        c.expect(in_open(r.peaks[1].value, 800.0, 1200.0), "second maximum in (800, 1200)");
        c.expect(in_closed(r.peaks[1].step, 430, 570), "second maximum step in [430, 570]");
    }
    const auto gaps = detect_gaps(traj, traj.scenario.guards.gap_threshold);
    const auto big = std::find_if(gaps.begin(), gaps.end(), [](const GapEvent& g) {
        return in_open(g.rel_change, -0.85, -0.65);
    });
    c.expect(big != gaps.end(), "gap with rel_change in (-0.85, -0.65)");
    if (big != gaps.end() && r.peaks.size() >= 2) {
        const auto first = cap.begin() + static_cast<long>(big->step);
        const auto last = cap.begin() + static_cast<long>(r.peaks[1].step);
        const double trough = *std::min_element(first, last);
        c.expect(in_open(trough, 400.0, 600.0), "post-gap trough in (400, 600)");
        c.detail << "gap=" << big->rel_change << "@" << big->step << " trough=" << trough << " ";
    }
    c.detail << describe(r);
    if (r.peaks.size() >= 2) c.detail << " second=" << r.peaks[1].value << "@" << r.peaks[1].step;
}

void critical(Check& c) {
    ModelParams p = base_params();
    const auto cc = critical_capital(p, 5.0);
    c.expect(cc.approx == 2000.0, "approx == 2000 exactly");
    c.expect(cc.exact && close_rel(*cc.exact, kCriticalExact, kCriticalRelTol),
             "exact == 2004.0080... to 1e-9");
    char buf[96];
    std::snprintf(buf, sizeof buf, "approx=%.17g exact=%.17g", cc.approx, cc.exact.value_or(NAN));
    c.detail << buf;
}

void properties(Check& c) {
    std::mt19937_64 rng(20240601);
    int checked = 0;
    int conservation = 0, exposure = 0, impact = 0, closed = 0;
    while (checked < kPropertySteps) {
        const auto rc = random_case(rng);
        if (std::abs(degeneracy_margin(rc.state, rc.params)) <= 0.05) continue;
        StepResult r;
        try {
            r = step(rc.state, rc.params, rc.realized);
        } catch (const Error&) {
            continue;
        }
        const auto& b = r.breakdown;
        const double scale = std::max(std::abs(rc.state.capital), std::abs(r.next.capital));
        conservation += std::abs((r.next.capital - rc.state.capital) -
                                 (b.realized_pnl + b.implied_pnl)) > kConservationRelTol * scale;
        exposure += r.next.capital > 0 &&
                    !close_rel(r.next.vega, rc.params.kappa * r.next.capital, kExposureRelTol);
        impact += std::abs((r.next.implied - rc.state.implied) - rc.params.lambda * b.trade) >
                  kImpactUlps * std::numeric_limits<double>::epsilon() * std::abs(r.next.implied);
        if (!r.bankrupt) {
            const auto f = step_closed_form(rc.state, rc.params, rc.realized);
            closed += !close_rel(r.next.capital, f.capital, kClosedFormRelTol) ||
                      !close_rel(r.next.avg_maturity, f.avg_maturity, kClosedFormRelTol) ||
                      !close_rel(r.next.implied, f.implied, kClosedFormRelTol);
        }
        ++checked;
    }
    c.expect(conservation == 0, "conservation");
    c.expect(exposure == 0, "exposure identity");
    c.expect(impact == 0, "impact identity");
    c.expect(closed == 0, "closed form agreement to 1e-9");

    int determinism = 0;
    for (double c0 : {1000.0, 1010.0, 1012.0}) {
        const auto a = simulate(reference_scenario(c0));
        const auto b = simulate(reference_scenario(c0));
        determinism += a.states.size() != b.states.size() ||
                       std::memcmp(a.states.data(), b.states.data(),
                                   a.states.size() * sizeof(FundState)) != 0;
    }
    c.expect(determinism == 0, "bit-for-bit determinism");

    int sigma_moved = 0, maturity_off = 0;
    for (int trial = 0; trial < 20; ++trial) {
        Scenario s = reference_scenario();
        s.params.lambda = 0.0;
        s.horizon = 2000;
        s.m0 = s.params.dt + (s.params.maturity - s.params.dt) * (trial + 1) / 20.0;
        const auto t = simulate(s);
        maturity_off += t.termination != Termination::HorizonReached ||
                        std::abs(t.states.back().avg_maturity -
                                 (s.params.maturity + s.params.dt) / 2) >= kMaturityLimitTol;

        s.horizon = 500;
        std::vector<double> path(s.horizon);
        for (std::size_t i = 0; i < path.size(); ++i) path[i] = 20.0 + 3.0 * std::sin(0.1 * i + trial);
        s.realized = RealizedPath::sequence(path);
        s.guards.ruin_fraction = 0.0;
        for (const auto& st : simulate(s).states) sigma_moved += st.implied != s.sigma0;
    }
    c.expect(sigma_moved == 0, "lambda=0 keeps implied constant");
    c.expect(maturity_off == 0, "lambda=0 maturity within 1e-2 of (T+dt)/2 after 2000 steps");

    int sqrt_bad = 0, sqrt_checked = 0;
    std::mt19937_64 srng(77);
    for (int i = 0; i < kSqrtCases; ++i) {
        auto rc = random_case(srng);
        rc.params.impact = ImpactModel::Sqrt;
        std::optional<double> got;
        try {
            got = solve_profit_sqrt(rc.state, rc.params, rc.realized).total_pnl;
        } catch (const Error&) {
        }
        const auto oracle = bisection_oracle(rc.state, rc.params, rc.realized, 20000);
        if (got.has_value() != oracle.has_value()) {
            ++sqrt_bad;
            continue;
        }
        if (!got) continue;
        ++sqrt_checked;
        sqrt_bad += std::abs(*got - *oracle) > kSqrtAbsTol * std::max(1.0, std::abs(*oracle));
    }
    c.expect(sqrt_bad == 0, "sqrt solver matches bisection oracle to 1e-10");
    c.detail << checked << " random steps, " << sqrt_checked << " sqrt roots checked";
}

void sweep_boundary(Check& c) {
    const auto map = sweep(reference_scenario(), {AxisSpec{"c0", {1000.0, 1010.0, 1012.0}}});
    std::vector<Regime> got;
    for (const auto& cell : map.cells) got.push_back(cell.report.regime);
    c.expect(got == std::vector<Regime>{Regime::SmoothBubble, Regime::GapBubble,
                                        Regime::UnboundedGrowth},
             "[SmoothBubble, GapBubble, UnboundedGrowth]");
    for (auto r : got) c.detail << to_string(r) << " ";
}

void chaos(Check& c) {
    auto fixed = reference_scenario();
    fixed.params.lambda = 0.0;
    const auto f = lyapunov_estimate(fixed);
    c.expect(std::abs(f.exponent) <= kFixedPointExponentTol, "fixed-point exponent 0 +- 1e-9");

    const auto base = lyapunov_estimate(reference_scenario());
    auto near = reference_scenario();
    near.c0 = 0.995 * critical_capital(near.params, 5.0).exact.value();
    const auto n = lyapunov_estimate(near);
    c.expect(std::isfinite(base.exponent), "baseline finite");
    c.expect(n.exponent > base.exponent, "near-critical exponent exceeds baseline");
    c.detail << "fixed=" << f.exponent << " baseline=" << base.exponent
             << " near_critical=" << n.exponent;
}

void service_contract(Check& c) {
    svc::Server server(svc::Config{});
    const int port = server.bind_any_port("127.0.0.1");
    c.expect(port > 0, "bind ephemeral port");
    if (port <= 0) return;
    std::thread loop([&] { server.listen_after_bind(); });
    for (int i = 0; i < 400 && !server.is_running(); ++i) {
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }

    auto client = [port] {
        httplib::Client cl("127.0.0.1", port);
        cl.set_read_timeout(60, 0);
        cl.set_tcp_nodelay(true);
        return cl;
    };
    auto body = [](const Scenario& s) { return scenario_to_json(s); };
    auto post = [&](const std::string& path, const json& b) -> std::pair<int, json> {
        auto cl = client();
        auto r = cl.Post(path, b.dump(), "application/json");
        if (!r) return {-1, json()};
        return {r->status, json::parse(r->body, nullptr, false)};
    };
    auto get = [&](const std::string& path) -> std::pair<int, json> {
        auto cl = client();
        auto r = cl.Get(path);
        if (!r) return {-1, json()};
        return {r->status, json::parse(r->body, nullptr, false)};
    };

    {
        auto [st, j] = post("/api/simulate", body(reference_scenario()));
        c.expect(st == 200 && j["report"]["regime"] == "SmoothBubble" &&
                     j["termination"] == "Bankrupt",
                 "simulate base scenario");
    }
    {
        auto b = body(reference_scenario());
        b["kappa"] = -1;
        auto [st, j] = post("/api/simulate", b);
        c.expect(st == 400 && j["error"]["field"] == "kappa", "simulate kappa -1 -> 400");
    }
    {
        auto [st, j] = post("/api/simulate", body(reference_scenario(1012.0)));
        c.expect(st == 200 && j["report"]["regime"] == "UnboundedGrowth" &&
                     j["report"]["final_capital"].get<double>() > 17500.0,
                 "simulate c0 = 1012");
    }
    {
        auto b = body(reference_scenario());
        b["axes"] = json::array({{{"name", "c0"}, {"values", {1000, 1010, 1012}}}});
        auto [st, j] = post("/api/sweep", b);
        c.expect(st == 200 && j["cells"].size() == 3 && j["cells"][0]["regime"] == "SmoothBubble" &&
                     j["cells"][1]["regime"] == "GapBubble" &&
                     j["cells"][2]["regime"] == "UnboundedGrowth",
                 "sweep initial capital");
    }
    {
        auto b = body(reference_scenario());
        b["axes"] = json::array({{{"name", "c0"}, {"lo", 900}, {"hi", 1100}, {"count", 250}},
                                 {{"name", "sigma0"}, {"lo", 15}, {"hi", 25}, {"count", 250}}});
        auto [st, j] = post("/api/sweep", b);
        c.expect(st == 413, "sweep 250x250 -> 413");
    }
    {
        auto b = body(reference_scenario());
        b["axes"] = json::array({{{"name", "c0"}, {"values", {1010}}}});
        auto [st, j] = post("/api/sweep", b);
        auto [st2, sim] = post("/api/simulate", body(reference_scenario(1010.0)));
        bool same = st == 200 && st2 == 200 && j["cells"].size() == 1;
        if (same) {
            const auto& cell = j["cells"][0];
            const auto& rep = sim["report"];
            same = cell["regime"] == rep["regime"] && cell["termination"] == rep["termination"] &&
                   cell["final_capital"] == rep["final_capital"] &&
                   cell["bankruptcy_step"] == rep["bankruptcy_step"] &&
                   cell["gap_count"] == rep["gaps"].size() &&
                   cell["peak_count"] == rep["peaks"].size();
        }
        c.expect(same, "single-cell sweep equals simulate report");
    }
    {
        auto [st, j] = get("/api/critical?kappa=0.1&lambda=0.05");
        c.expect(st == 200 && j["approx"] == 2000.0, "critical approx 2000");
        auto [st0, j0] = get("/api/critical?kappa=0.1&lambda=0");
        c.expect(st0 == 400 && j0["error"]["code"] == "UndefinedCritical",
                 "critical lambda 0 -> 400");
        auto [st2, j2] = get("/api/critical?kappa=0.1&lambda=0.05&maturity=5&dt=0.01");
        c.expect(st2 == 200 && close_rel(j2["exact"].get<double>(), kCriticalExact, kCriticalRelTol),
                 "critical exact 2004.008");
    }
    {
        auto s = reference_scenario();
        s.params.lambda = 0.0;
        auto [st, j] = post("/api/lyapunov", body(s));
        c.expect(st == 200 && std::abs(j["exponent"].get<double>()) <= kFixedPointExponentTol,
                 "lyapunov fixed point");
        auto [st1, j1] = post("/api/lyapunov", body(reference_scenario()));
        c.expect(st1 == 200 &&
                     j1["exponent"].get<double>() == lyapunov_estimate(reference_scenario()).exponent,
                 "lyapunov parity with library");
        auto cl = client();
        auto bad = cl.Post("/api/lyapunov", "{oops", "application/json");
        c.expect(bad && bad->status == 400, "lyapunov malformed -> 400");
    }
    {
        auto cl = client();
        const auto b = body(reference_scenario(1010.0)).dump();
        auto r1 = cl.Post("/api/simulate", b, "application/json");
        auto r2 = cl.Post("/api/simulate", b, "application/json");
        c.expect(r1 && r2 && r1->body == r2->body, "identical requests give identical bodies");
    }
    {
        std::atomic<bool> go{false};
        std::vector<std::future<int>> load;
        const auto base_body = body(reference_scenario()).dump();
        for (int i = 0; i < kConcurrentRequests; ++i) {
            load.push_back(std::async(std::launch::async, [&] {
                auto cl = client();
                while (!go.load()) std::this_thread::yield();
                auto r = cl.Post("/api/simulate", base_body, "application/json");
                return r ? r->status : -1;
            }));
        }
        go = true;
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
        auto hc = client();
        double worst = 0.0;
        bool health_ok = true;
        for (int i = 0; i < 5; ++i) {
            const auto t0 = std::chrono::steady_clock::now();
            auto h = hc.Get("/healthz");
            worst = std::max(worst, seconds_since(t0) * 1e3);
            health_ok = health_ok && h && h->status == 200;
        }
        int ok = 0;
        for (auto& f : load) ok += f.get() == 200;
        c.expect(ok == kConcurrentRequests, "32 concurrent simulations succeed");
        c.expect(health_ok && worst < kHealthBudgetMs, "/healthz < 100 ms under load");
        c.detail << "worst /healthz " << worst << " ms under " << kConcurrentRequests
                 << " concurrent simulations";
    }

    server.stop();
    loop.join();
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {"Smooth bubble c0=1000", kScenarioBudgetSec, smooth_bubble},
        {"Gap bubble c0=1010", kScenarioBudgetSec, gap_bubble},
        {"Unbounded c0=1012", kScenarioBudgetSec, unbounded_growth},
        {"Double bubble sigma0=17", kScenarioBudgetSec, double_bubble},
        {"Critical capital", 0.0, critical},
        {"Property suite", kPropertyBudgetSec, properties},
        {"Sweep boundary", kSweepBudgetSec, sweep_boundary},
        {"Chaos diagnostics", 0.0, chaos},
        {"Service contract", 0.0, service_contract},
    };

    int failures = 0;
    for (const auto& cr : criteria) {
        Check check;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            cr.body(check);
        } catch (const std::exception& e) {
            check.expect(false, std::string("exception: ") + e.what());
        }
        const double elapsed = seconds_since(t0);
        if (cr.budget_sec > 0) check.expect(elapsed < cr.budget_sec, "runtime budget");
        failures += !check.ok;
        std::string limit;
        if (cr.budget_sec > 0) {
            char buf[32];
            std::snprintf(buf, sizeof buf, " (limit %g s)", cr.budget_sec);
            limit = buf;
        }
        std::string detail = check.detail.str();
        if (!check.failures.empty()) detail = check.failures + " | " + detail;
        std::printf("%s  %-24s  %9.4f s%s  %s\n", check.ok ? "PASS" : "FAIL", cr.name.c_str(),
                    elapsed, limit.c_str(), detail.c_str());
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
                criteria.size());
    return failures == 0 ? 0 : 1;
}
