#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rlab/nstep.hpp"
#include "rlab/rng.hpp"

using namespace rlab;

namespace {

struct EpisodeLog {
    std::vector<double> rewards;
    bool ends_terminal = true;
};

Transition make_tr(double reward, int64_t episode, bool terminal, bool truncated,
                   int64_t id) {
    Transition t;
    t.state = Obs::one_hot(3, static_cast<int>(id % 3));
    t.next_state = Obs::one_hot(3, static_cast<int>((id + 1) % 3));
    t.action = 0;
    t.reward = reward;
    t.terminal = terminal;
    t.truncated = truncated;
    t.policy_stamp = 0;
    t.env_step = id;
    t.episode_id = episode;
    return t;
}

/// Fills a buffer from episode logs; returns (slot, position-in-episode,
/// episode) triples for direct-summation checks.
struct LoggedBuffer {
    ReplayBuffer buf;
    std::vector<EpisodeLog> episodes;
    // For each slot: (episode index, step index within the episode).
    std::vector<std::pair<int, int>> origin;

    explicit LoggedBuffer(int capacity, const std::vector<EpisodeLog>& eps)
        : buf(capacity), episodes(eps), origin(static_cast<size_t>(capacity), {-1, -1}) {
        int64_t id = 0;
        for (int e = 0; e < static_cast<int>(eps.size()); ++e) {
            const EpisodeLog& ep = eps[static_cast<size_t>(e)];
            for (int k = 0; k < static_cast<int>(ep.rewards.size()); ++k) {
                const bool last = k + 1 == static_cast<int>(ep.rewards.size());
                const int slot = buf.insert(make_tr(ep.rewards[static_cast<size_t>(k)], e,
                                                    last && ep.ends_terminal,
                                                    last && !ep.ends_terminal, id));
                origin[static_cast<size_t>(slot)] = {e, k};
                ++id;
            }
        }
    }

    // Direct summation from the raw episode log, the brute-force oracle.
    double oracle_target(int slot, int n, double gamma, double boot_value,
                         bool* bootstrap_used) const {
        const auto [e, k] = origin[static_cast<size_t>(slot)];
        const EpisodeLog& ep = episodes[static_cast<size_t>(e)];
        double target = 0.0;
        double discount = 1.0;
        int steps = 0;
        for (int i = k; i < static_cast<int>(ep.rewards.size()) && steps < n; ++i, ++steps) {
            target += discount * ep.rewards[static_cast<size_t>(i)];
            discount *= gamma;
        }
        const bool hit_end = k + steps == static_cast<int>(ep.rewards.size());
        const bool terminal = hit_end && ep.ends_terminal;
        *bootstrap_used = !terminal;
        if (!terminal) target += discount * boot_value;
        return target;
    }
};

} // namespace

TEST_CASE("n-step target examples") {
    SUBCASE("r=[1,2,3], gamma=0.5, n=3, bootstrap 4 -> 3.25") {
        LoggedBuffer lb(16, {{{1, 2, 3, 0}, true}});
        const TargetSpec spec{TargetKind::n_step, 3, 0.5};
        const double y = target_value(lb.buf, 0, spec, [](const Obs&) { return 4.0; });
        CHECK(y == doctest::Approx(1.0 + 1.0 + 0.75 + 0.5));
    }
    SUBCASE("terminal inside horizon: r=[1,2], gamma=0.5, n=3 -> 2.0, no bootstrap") {
        LoggedBuffer lb(16, {{{1, 2}, true}});
        const TargetSpec spec{TargetKind::n_step, 3, 0.5};
        bool called = false;
        const double y = target_value(lb.buf, 0, spec, [&](const Obs&) {
            called = true;
            return 100.0;
        });
        CHECK(y == doctest::Approx(2.0));
        CHECK(!called);
    }
    SUBCASE("n=1 reduces to the one-step target: r=5, gamma=0.9, maxQ=10 -> 14") {
        LoggedBuffer lb(16, {{{5, 0}, true}});
        const TargetSpec spec{TargetKind::one_step, 1, 0.9};
        const double y = target_value(lb.buf, 0, spec, [](const Obs&) { return 10.0; });
        CHECK(y == doctest::Approx(14.0));
    }
    SUBCASE("invalid index is an error") {
        LoggedBuffer lb(16, {{{1, 2, 3}, false}}); // truncated tail
        const TargetSpec spec{TargetKind::n_step, 3, 0.5};
        // Slot 1's window would cross the truncation at slot 2.
        CHECK_THROWS_AS(target_value(lb.buf, 1, spec, [](const Obs&) { return 0.0; }),
                        std::out_of_range);
    }
}

TEST_CASE("mc_return examples") {
    const double r1[] = {1, 1, 1};
    CHECK(mc_return(r1, 1.0) == doctest::Approx(3.0));
    const double r2[] = {1, 2, 3};
    CHECK(mc_return(r2, 0.5) == doctest::Approx(1.0 + 1.0 + 0.75));
    CHECK(mc_return(std::span<const double>{}, 0.9) == 0.0);
}

TEST_CASE("contraction-matched target examples") {
    SUBCASE("r=5, gamma=0.9, n=3, maxQ=10 -> 12.29") {
        Transition t = make_tr(5.0, 0, false, false, 0);
        const double y =
            contraction_matched_target(t, 3, 0.9, [](const Obs&) { return 10.0; });
        CHECK(y == doctest::Approx(5.0 + 0.729 * 10.0));
    }
    SUBCASE("n=1 is the ordinary one-step target") {
        Transition t = make_tr(2.0, 0, false, false, 0);
        const double a =
            contraction_matched_target(t, 1, 0.9, [](const Obs&) { return 7.0; });
        CHECK(a == doctest::Approx(2.0 + 0.9 * 7.0));
    }
    SUBCASE("terminal transition keeps only the reward") {
        Transition t = make_tr(3.5, 0, true, false, 0);
        const double y =
            contraction_matched_target(t, 4, 0.9, [](const Obs&) { return 50.0; });
        CHECK(y == doctest::Approx(3.5));
    }
}

TEST_CASE("property: nstep_target equals direct episode summation on 1e4 random instances") {
    Rng rng(2024);
    int checked = 0;
    while (checked < 10000) {
        // Random episode set.
        std::vector<EpisodeLog> eps;
        const int n_eps = 1 + static_cast<int>(rng.uniform_int(4));
        for (int e = 0; e < n_eps; ++e) {
            EpisodeLog ep;
            const int len = 1 + static_cast<int>(rng.uniform_int(8));
            for (int i = 0; i < len; ++i) ep.rewards.push_back(rng.uniform(-2.0, 2.0));
            ep.ends_terminal = rng.uniform() < 0.7;
            eps.push_back(std::move(ep));
        }
        LoggedBuffer lb(64, eps);
        const double gamma = rng.uniform(0.0, 0.999);
        const double boot = rng.uniform(-3.0, 3.0);
        for (int n = 1; n <= 5; ++n) {
            const TargetSpec spec{TargetKind::n_step, n, gamma};
            for (int slot : lb.buf.valid_nstep_indices(n)) {
                bool used = false;
                const double expect = lb.oracle_target(slot, n, gamma, boot, &used);
                const double got =
                    target_value(lb.buf, slot, spec, [&](const Obs&) { return boot; });
                CHECK(got == doctest::Approx(expect).epsilon(1e-12));
                ++checked;
            }
        }
    }
}

TEST_CASE("property: n >= episode length matches the Monte Carlo return") {
    Rng rng(55);
    for (int trial = 0; trial < 200; ++trial) {
        EpisodeLog ep;
        const int len = 1 + static_cast<int>(rng.uniform_int(6));
        for (int i = 0; i < len; ++i) ep.rewards.push_back(rng.uniform(-1.0, 1.0));
        ep.ends_terminal = true;
        LoggedBuffer lb(32, {ep});
        const double gamma = rng.uniform(0.0, 0.999);
        const TargetSpec spec{TargetKind::n_step, len + 3, gamma};
        const double y = target_value(lb.buf, 0, spec, [](const Obs&) { return 1e9; });
        CHECK(y == doctest::Approx(mc_return(ep.rewards, gamma)).epsilon(1e-12));
    }
}

TEST_CASE("property: bootstrap perturbation is contracted by gamma^m") {
    Rng rng(99);
    for (int trial = 0; trial < 300; ++trial) {
        EpisodeLog ep;
        const int len = 2 + static_cast<int>(rng.uniform_int(6));
        for (int i = 0; i < len; ++i) ep.rewards.push_back(rng.uniform(-1.0, 1.0));
        ep.ends_terminal = false; // keep bootstrap paths alive
        LoggedBuffer lb(32, {ep});
        const double gamma = rng.uniform(0.1, 0.999);
        const double q0 = rng.uniform(-2.0, 2.0);
        const double delta = rng.uniform(-1.0, 1.0);
        for (int n = 1; n <= 4; ++n) {
            const TargetSpec spec{TargetKind::n_step, n, gamma};
            for (int slot : lb.buf.valid_nstep_indices(n)) {
                const double a =
                    target_value(lb.buf, slot, spec, [&](const Obs&) { return q0; });
                const double b =
                    target_value(lb.buf, slot, spec, [&](const Obs&) { return q0 + delta; });
                CHECK(std::abs(b - a) <= std::pow(gamma, n) * std::abs(delta) + 1e-12);
            }
            // The contraction-matched control has the same bound with m = 1
            // rewards but a gamma^n factor.
            const Transition& t = lb.buf.at_slot(0);
            const double ca =
                contraction_matched_target(t, n, gamma, [&](const Obs&) { return q0; });
            const double cb = contraction_matched_target(
                t, n, gamma, [&](const Obs&) { return q0 + delta; });
            CHECK(std::abs(cb - ca) <= std::pow(gamma, n) * std::abs(delta) + 1e-12);
        }
    }
}
