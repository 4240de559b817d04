#include "doctest.h"

#include <set>
#include <sstream>

#include "tvqp/async_schedule.hpp"

using namespace tvqp;

namespace {

ScheduleParams params(Index agents, std::int64_t B, std::vector<std::int64_t> kappa, double pu, double pc) {
    ScheduleParams p;
    p.agents = agents;
    p.B = B;
    p.kappa = std::move(kappa);
    p.p_update.assign(static_cast<std::size_t>(agents), pu);
    p.p_comm.assign(static_cast<std::size_t>(agents), pc);
    return p;
}

}  // namespace

TEST_CASE("sampling with probability one covers the grid") {
    const auto plan = generate_sampling(7, 2.0, 10.0, {1.0, 1.0, 1.0});
    CHECK(plan.events() == 6);
    for (const auto& s : plan.per_agent) {
        CHECK(s == std::vector<std::int64_t>{0, 1, 2, 3, 4, 5});
    }
    CHECK(plan.delta == doctest::Approx(2.0));
}

TEST_CASE("hand-built sampling sets") {
    const auto plan = make_sampling_plan(2.0, 4.0, {{0, 2}, {0, 1}});
    REQUIRE(plan.events() == 3);
    CHECK(plan.time(1) == 2.0);
    CHECK(plan.time(2) == 4.0);
    const auto s1 = plan.state(1);
    CHECK(s1.theta[0] == 0.0);
    CHECK(s1.theta[1] == 2.0);
    CHECK(plan.state(2).theta[0] == 4.0);
    CHECK(plan.delta == doctest::Approx(4.0));
}

TEST_CASE("sampling is deterministic and validated") {
    const auto a = generate_sampling(11, 1.0, 50.0, {0.3, 0.6});
    const auto b = generate_sampling(11, 1.0, 50.0, {0.3, 0.6});
    CHECK(a.per_agent == b.per_agent);
    CHECK(a.union_grid == b.union_grid);
    CHECK_THROWS_AS(generate_sampling(1, 1.0, 10.0, {0.0}), ConfigError);
    CHECK_THROWS_AS(generate_sampling(1, 1.0, 10.0, {1.5}), ConfigError);
    CHECK_THROWS_AS(generate_sampling(1, 2.0, 1.0, {0.5}), ConfigError);
}

TEST_CASE("B = 1 is fully synchronous") {
    const auto s = generate_schedule(3, params(3, 1, {20, 20}, 0.2, 0.2));
    for (std::int64_t k = 0; k < s.total_iterations(); ++k) {
        CHECK(s.compute[static_cast<std::size_t>(k)].size() == 3);
        for (const auto& d : s.deliveries[static_cast<std::size_t>(k)]) {
            CHECK(d.stamp == k);
        }
        CHECK(s.deliveries[static_cast<std::size_t>(k)].size() == 6);
    }
}

TEST_CASE("forced updates only") {
    const auto s = generate_schedule(5, params(2, 5, {20}, 0.0, 0.0));
    for (Index a = 0; a < 2; ++a) {
        std::vector<std::int64_t> ks;
        for (std::int64_t k = 0; k < 20; ++k) {
            const auto& c = s.compute[static_cast<std::size_t>(k)];
            if (std::find(c.begin(), c.end(), a) != c.end()) {
                ks.push_back(k);
            }
        }
        CHECK(ks == std::vector<std::int64_t>{4, 9, 14, 19});
    }
    CHECK(validate_schedule(s).empty());
}

TEST_CASE("generated schedules always validate") {
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const std::int64_t B = 1 + static_cast<std::int64_t>(seed % 7);
        const double p = 0.05 + 0.9 * static_cast<double>(seed % 10) / 10.0;
        const auto s = generate_schedule(seed, params(3, B, {17, 9, 30}, p, 1.0 - p));
        const auto v = validate_schedule(s);
        CHECK_MESSAGE(v.empty(), "seed " << seed << ": " << (v.empty() ? "" : v.front().message));
        if (!v.empty()) {
            break;
        }
    }
}

TEST_CASE("validator catches constructed violations") {
    SUBCASE("idle agent") {
        auto s = synchronous_schedule(2, {20});
        s.B = 3;
        for (std::int64_t k = 0; k <= 3; ++k) {
            auto& c = s.compute[static_cast<std::size_t>(k)];
            c.erase(std::remove(c.begin(), c.end(), 0), c.end());
        }
        const auto v = validate_schedule(s);
        REQUIRE(v.size() == 1);
        CHECK(v[0].condition == 1);
        CHECK(v[0].agent == 0);
        CHECK(v[0].k == 0);
    }
    SUBCASE("out-of-window stamp") {
        auto s = synchronous_schedule(2, {20});
        s.B = 3;
        for (auto& d : s.deliveries[10]) {
            if (d.receiver == 1 && d.sender == 0) {
                d.stamp = 10 - 3;
            }
        }
        const auto v = validate_schedule(s);
        REQUIRE(v.size() == 1);
        CHECK(v[0].condition == 2);
        CHECK(v[0].agent == 1);
        CHECK(v[0].counterpart == 0);
    }
}

TEST_CASE("schedule CSV") {
    const auto s = generate_schedule(2, params(2, 2, {4}, 0.5, 0.5));
    std::ostringstream out;
    write_schedule_csv(out, s);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "k,agent,event_type,counterpart,tau");
    std::set<std::string> kinds;
    while (std::getline(in, line)) {
        const auto first = line.find(',');
        const auto second = line.find(',', first + 1);
        kinds.insert(line.substr(second + 1, line.find(',', second + 1) - second - 1));
    }
    CHECK(kinds == std::set<std::string>{"compute", "deliver"});
}

TEST_CASE("invalid schedule parameters") {
    CHECK_THROWS_AS(generate_schedule(1, params(2, 0, {4}, 0.5, 0.5)), ConfigError);
    CHECK_THROWS_AS(generate_schedule(1, params(2, 2, {0}, 0.5, 0.5)), ConfigError);
    CHECK_THROWS_AS(generate_schedule(1, params(2, 2, {4}, 1.5, 0.5)), ConfigError);
}
