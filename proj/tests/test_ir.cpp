#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include "nengine/ir.hpp"
#include "support/helpers.hpp"

using namespace neng;
using neng::test::make_signal;

namespace {

std::vector<Signal> two_vectors(int rows = 4) {
    return {make_signal(0, "x", {rows}), make_signal(1, "y", {rows})};
}

}  // namespace

TEST_CASE("refs_overlap basic cases") {
    CHECK(refs_overlap({0, 0, 3}, {0, 2, 5}));
    CHECK(refs_overlap({0, 2, 5}, {0, 0, 3}));
    CHECK_FALSE(refs_overlap({0, 0, 3}, {0, 3, 6}));
    CHECK_FALSE(refs_overlap({0, 0, 3}, {1, 0, 3}));
    CHECK(refs_overlap({2, 1, 2}, {2, 1, 2}));
}

TEST_CASE("refs_overlap is symmetric and reflexive on nonempty refs") {
    for (int a0 = 0; a0 < 5; ++a0) {
        for (int a1 = a0 + 1; a1 <= 5; ++a1) {
            SignalRef a{0, a0, a1};
            CHECK(refs_overlap(a, a));
            for (int b0 = 0; b0 < 5; ++b0) {
                for (int b1 = b0 + 1; b1 <= 5; ++b1) {
                    SignalRef b{0, b0, b1};
                    CHECK(refs_overlap(a, b) == refs_overlap(b, a));
                }
            }
        }
    }
}

TEST_CASE("access_lists classifies operands by kind") {
    auto sigs = two_vectors();
    SignalRef x = SignalRef::full(sigs[0]), y = SignalRef::full(sigs[1]);

    auto set_copy = access_lists(Operator::copy(0, x, y, false));
    CHECK(set_copy.sets == std::vector<SignalRef>{y});
    CHECK(set_copy.reads == std::vector<SignalRef>{x});
    CHECK(set_copy.incs.empty());
    CHECK(set_copy.updates.empty());

    auto inc_copy = access_lists(Operator::copy(0, x, y, true));
    CHECK(inc_copy.incs == std::vector<SignalRef>{y});
    CHECK(inc_copy.sets.empty());

    auto reset = access_lists(Operator::reset(0, y, {0, 0, 0, 0}));
    CHECK(reset.sets == std::vector<SignalRef>{y});
    CHECK(reset.reads.empty());

    Signal a = make_signal(2, "a", {4, 4}, {.constant = true});
    auto dot = access_lists(Operator::dot_inc(0, SignalRef::full(a), x, y));
    CHECK(dot.reads == std::vector<SignalRef>{SignalRef::full(a), x});
    CHECK(dot.incs == std::vector<SignalRef>{y});

    Signal step = make_signal(3, "step", {1}), time = make_signal(4, "time", {1});
    auto tu = access_lists(Operator::time_update(0, 0.001, SignalRef::full(step),
                                                 SignalRef::full(time)));
    CHECK(tu.updates.size() == 2);
    CHECK(tu.sets.empty());
    CHECK(tu.reads.empty());
}

TEST_CASE("access_lists covers neuron, filter and learning operators") {
    Signal j = make_signal(0, "j", {3}), out = make_signal(1, "out", {3});
    Signal v = make_signal(2, "v", {3}), r = make_signal(3, "r", {3});

    auto lif = access_lists(Operator::sim_neurons(
        0, NeuronModel{}, SignalRef::full(j), SignalRef::full(out),
        {SignalRef::full(v), SignalRef::full(r)}));
    CHECK(lif.reads == std::vector<SignalRef>{SignalRef::full(j)});
    CHECK(lif.sets == std::vector<SignalRef>{SignalRef::full(out)});
    CHECK(lif.updates == std::vector<SignalRef>{SignalRef::full(v), SignalRef::full(r)});

    auto rate = access_lists(Operator::sim_neurons(
        0, NeuronModel{.kind = NeuronKind::LIFRate}, SignalRef::full(j),
        SignalRef::full(out), {}));
    CHECK(rate.updates.empty());

    Signal in = make_signal(4, "in", {3}), st = make_signal(5, "st", {3});
    auto filt = access_lists(Operator::sim_process(0, 0.005, SignalRef::full(in),
                                                   SignalRef::full(out),
                                                   SignalRef::full(st)));
    CHECK(filt.reads == std::vector<SignalRef>{SignalRef::full(in)});
    CHECK(filt.updates == std::vector<SignalRef>{SignalRef::full(out), SignalRef::full(st)});

    auto pass = access_lists(Operator::sim_process(0, 0.0, SignalRef::full(in),
                                                   SignalRef::full(out), std::nullopt));
    CHECK(pass.sets == std::vector<SignalRef>{SignalRef::full(out)});
    CHECK(pass.updates.empty());

    Signal err = make_signal(6, "err", {2}), w = make_signal(7, "w", {2, 3});
    auto pes = access_lists(Operator::sim_pes(0, 1e-4, SignalRef::full(j),
                                              SignalRef::full(err), SignalRef::full(w)));
    CHECK(pes.reads.size() == 2);
    CHECK(pes.updates == std::vector<SignalRef>{SignalRef::full(w)});
}

TEST_CASE("every operand lands in exactly one access list") {
    Signal j = make_signal(0, "j", {3}), out = make_signal(1, "out", {3});
    Signal v = make_signal(2, "v", {3}), r = make_signal(3, "r", {3});
    std::vector<Operator> ops = {
        Operator::reset(0, SignalRef::full(j), {0, 0, 0}),
        Operator::copy(1, SignalRef::full(j), SignalRef::full(out), true),
        Operator::sim_neurons(2, NeuronModel{}, SignalRef::full(j), SignalRef::full(out),
                              {SignalRef::full(v), SignalRef::full(r)}),
        Operator::sim_process(3, 0.01, SignalRef::full(j), SignalRef::full(v),
                              SignalRef::full(r)),
    };
    for (const Operator& op : ops) {
        AccessLists al = access_lists(op);
        size_t total = al.sets.size() + al.incs.size() + al.reads.size() + al.updates.size();
        CHECK(total == op.operands.size());
    }
}

TEST_CASE("dependency graph orders the lowered connection chain") {
    // Reset(t); DotInc(W, x, t); SimProcess(t -> f); Copy(f -> y) with a
    // stateless process, so the filter output is set and read the same step.
    std::vector<Signal> sigs = {
        make_signal(0, "t", {2}),
        make_signal(1, "W", {2, 3}, {.constant = true, .initial = {1, 0, 0, 0, 1, 0}}),
        make_signal(2, "x", {3}),
        make_signal(3, "f", {2}),
        make_signal(4, "y", {2}),
    };
    std::vector<Operator> ops = {
        Operator::reset(0, SignalRef::full(sigs[0]), {0, 0}),
        Operator::dot_inc(1, SignalRef::full(sigs[1]), SignalRef::full(sigs[2]),
                          SignalRef::full(sigs[0])),
        Operator::sim_process(2, 0.0, SignalRef::full(sigs[0]), SignalRef::full(sigs[3]),
                              std::nullopt),
        Operator::copy(3, SignalRef::full(sigs[3]), SignalRef::full(sigs[4]), false),
    };
    DependencyGraph g = build_dependency_graph(sigs, ops);
    CHECK(g.has_edge(0, 1));
    CHECK(g.has_edge(1, 2));
    CHECK(g.has_edge(2, 3));
    CHECK(g.has_edge(0, 2));
    CHECK(g.edge_count() == 4);
    CHECK(toposort_schedule(g) == std::vector<OpId>{0, 1, 2, 3});
}

TEST_CASE("stateful filters are read before they update") {
    std::vector<Signal> sigs = {
        make_signal(0, "t", {2}),
        make_signal(1, "f", {2}),
        make_signal(2, "fs", {2}),
        make_signal(3, "y", {2}),
    };
    std::vector<Operator> ops = {
        Operator::sim_process(0, 0.005, SignalRef::full(sigs[0]), SignalRef::full(sigs[1]),
                              SignalRef::full(sigs[2])),
        Operator::copy(1, SignalRef::full(sigs[1]), SignalRef::full(sigs[3]), false),
    };
    DependencyGraph g = build_dependency_graph(sigs, ops);
    CHECK(g.has_edge(1, 0));       // read precedes update
    CHECK_FALSE(g.has_edge(0, 1));  // no same-step update -> read edge
    CHECK(toposort_schedule(g) == std::vector<OpId>{1, 0});
}

TEST_CASE("increments to a shared target stay unordered among themselves") {
    std::vector<Signal> sigs = {
        make_signal(0, "y", {3}),
        make_signal(1, "a", {3, 2}, {.constant = true, .initial = {1, 0, 0, 1, 1, 1}}),
        make_signal(2, "x1", {2}),
        make_signal(3, "x2", {2}),
        make_signal(4, "z", {3}),
    };
    std::vector<Operator> ops = {
        Operator::reset(0, SignalRef::full(sigs[0]), {0, 0, 0}),
        Operator::dot_inc(1, SignalRef::full(sigs[1]), SignalRef::full(sigs[2]),
                          SignalRef::full(sigs[0])),
        Operator::dot_inc(2, SignalRef::full(sigs[1]), SignalRef::full(sigs[3]),
                          SignalRef::full(sigs[0])),
        Operator::copy(3, SignalRef::full(sigs[0]), SignalRef::full(sigs[4]), false),
    };
    DependencyGraph g = build_dependency_graph(sigs, ops);
    CHECK(g.has_edge(0, 1));
    CHECK(g.has_edge(0, 2));
    CHECK(g.has_edge(1, 3));
    CHECK(g.has_edge(2, 3));
    CHECK_FALSE(g.has_edge(1, 2));
    CHECK_FALSE(g.has_edge(2, 1));
}

TEST_CASE("disjoint slices of one signal do not constrain each other") {
    std::vector<Signal> sigs = {make_signal(0, "buf", {8}), make_signal(1, "src", {4})};
    std::vector<Operator> ops = {
        Operator::copy(0, SignalRef::full(sigs[1]), SignalRef::slice(sigs[0], 0, 4), false),
        Operator::copy(1, SignalRef::full(sigs[1]), SignalRef::slice(sigs[0], 4, 8), false),
    };
    DependencyGraph g = build_dependency_graph(sigs, ops);
    CHECK(g.edge_count() == 0);
}

TEST_CASE("overlapping set regions are a build error naming both operators") {
    std::vector<Signal> sigs = {make_signal(0, "y", {4})};
    std::vector<Operator> ops = {
        Operator::reset(11, SignalRef::slice(sigs[0], 0, 3), {0, 0, 0}),
        Operator::reset(12, SignalRef::slice(sigs[0], 2, 4), {0, 0}),
    };
    try {
        build_dependency_graph(sigs, ops);
        FAIL("expected BuildError");
    } catch (const BuildError& e) {
        std::string msg = e.what();
        CHECK(msg.find("11") != std::string::npos);
        CHECK(msg.find("12") != std::string::npos);
        CHECK(msg.find("conflict") != std::string::npos);
    }
}

TEST_CASE("overlapping update regions are rejected") {
    std::vector<Signal> sigs = {
        make_signal(0, "in", {2}),
        make_signal(1, "out", {2}),
        make_signal(2, "s1", {2}),
        make_signal(3, "out2", {2}),
    };
    std::vector<Operator> ops = {
        Operator::sim_process(0, 0.01, SignalRef::full(sigs[0]), SignalRef::full(sigs[1]),
                              SignalRef::full(sigs[2])),
        Operator::sim_process(1, 0.01, SignalRef::full(sigs[0]), SignalRef::full(sigs[3]),
                              SignalRef::full(sigs[2])),
    };
    CHECK_THROWS_AS(build_dependency_graph(sigs, ops), BuildError);
}

TEST_CASE("cyclic access patterns report a cycle path") {
    std::vector<Signal> sigs = two_vectors();
    std::vector<Operator> ops = {
        Operator::copy(0, SignalRef::full(sigs[0]), SignalRef::full(sigs[1]), false),
        Operator::copy(1, SignalRef::full(sigs[1]), SignalRef::full(sigs[0]), false),
    };
    try {
        build_dependency_graph(sigs, ops);
        FAIL("expected BuildError");
    } catch (const BuildError& e) {
        CHECK(std::string(e.what()).find("cycle") != std::string::npos);
    }
}

TEST_CASE("toposort breaks ties by ascending operator id") {
    std::vector<Signal> sigs = {make_signal(0, "a", {2}), make_signal(1, "b", {2}),
                                make_signal(2, "c", {2}), make_signal(3, "d", {2})};
    std::vector<Operator> ops = {
        Operator::reset(7, SignalRef::full(sigs[0]), {0, 0}),
        Operator::reset(3, SignalRef::full(sigs[1]), {0, 0}),
        Operator::copy(9, SignalRef::full(sigs[0]), SignalRef::full(sigs[2]), false),
        Operator::copy(5, SignalRef::full(sigs[1]), SignalRef::full(sigs[3]), false),
    };
    DependencyGraph g = build_dependency_graph(sigs, ops);
    CHECK(toposort_schedule(g) == std::vector<OpId>{3, 5, 7, 9});
}

TEST_CASE("toposort of an empty graph is empty") {
    DependencyGraph g = build_dependency_graph({}, {});
    CHECK(toposort_schedule(g).empty());
}

TEST_CASE("reach matrix follows transitive paths") {
    std::vector<Signal> sigs = {make_signal(0, "a", {2}), make_signal(1, "b", {2}),
                                make_signal(2, "c", {2})};
    std::vector<Operator> ops = {
        Operator::reset(0, SignalRef::full(sigs[0]), {0, 0}),
        Operator::copy(1, SignalRef::full(sigs[0]), SignalRef::full(sigs[1]), false),
        Operator::copy(2, SignalRef::full(sigs[1]), SignalRef::full(sigs[2]), false),
    };
    ReachMatrix reach(build_dependency_graph(sigs, ops));
    CHECK(reach.reaches(0, 1));
    CHECK(reach.reaches(0, 2));
    CHECK(reach.reaches(1, 2));
    CHECK_FALSE(reach.reaches(2, 0));
    CHECK_FALSE(reach.reaches(0, 0));
    CHECK(reach.either_reaches(2, 1));
}

TEST_CASE("structural validation rejects malformed operators") {
    std::vector<Signal> sigs = {
        make_signal(0, "x", {4}),
        make_signal(1, "c", {4}, {.constant = true, .initial = {1, 2, 3, 4}}),
        make_signal(2, "m", {2, 3}, {.constant = true, .initial = {0, 0, 0, 0, 0, 0}}),
    };
    SUBCASE("slice out of bounds") {
        std::vector<Operator> ops = {Operator::reset(0, {0, 2, 6}, {0, 0, 0, 0})};
        CHECK_THROWS_AS(validate_operators(sigs, ops), StructuralError);
    }
    SUBCASE("writing a constant signal") {
        std::vector<Operator> ops = {
            Operator::copy(0, SignalRef::full(sigs[0]), SignalRef::full(sigs[1]), false)};
        CHECK_THROWS_AS(validate_operators(sigs, ops), StructuralError);
    }
    SUBCASE("reset payload length mismatch") {
        std::vector<Operator> ops = {Operator::reset(0, SignalRef::full(sigs[0]), {0, 0})};
        CHECK_THROWS_AS(validate_operators(sigs, ops), StructuralError);
    }
    SUBCASE("dot product dimension mismatch") {
        std::vector<Operator> ops = {Operator::dot_inc(
            0, SignalRef::full(sigs[2]), SignalRef::slice(sigs[0], 0, 2),
            SignalRef::slice(sigs[0], 2, 4))};
        CHECK_THROWS_AS(validate_operators(sigs, ops), StructuralError);
    }
    SUBCASE("duplicate ids") {
        std::vector<Operator> ops = {
            Operator::reset(4, SignalRef::slice(sigs[0], 0, 2), {0, 0}),
            Operator::reset(4, SignalRef::slice(sigs[0], 2, 4), {0, 0})};
        CHECK_THROWS_AS(validate_operators(sigs, ops), StructuralError);
    }
}

TEST_CASE("json dump uses the documented field names") {
    std::vector<Signal> sigs = {
        make_signal(0, "state", {3}, {.minibatched = true}),
        make_signal(1, "weights", {3, 2},
                    {.constant = true, .trainable = true, .initial = {1, 2, 3, 4, 5, 6}}),
    };
    std::vector<Operator> ops = {Operator::reset(0, SignalRef::full(sigs[0]), {1, 2, 3})};

    std::string text = dump_ir_json(sigs, ops);
    auto root = nlohmann::json::parse(text);

    REQUIRE(root["signals"].size() == 2);
    auto& s0 = root["signals"][0];
    CHECK(s0["id"] == 0);
    CHECK(s0["label"] == "state");
    CHECK(s0["shape"] == nlohmann::json::array({3}));
    CHECK(s0["elem"] == 64);
    CHECK(s0["constant"] == false);
    CHECK(s0["minibatched"] == true);
    CHECK(s0["trainable"] == false);
    CHECK(root["signals"][1]["trainable"] == true);

    REQUIRE(root["operators"].size() == 1);
    auto& o0 = root["operators"][0];
    CHECK(o0["kind"] == "Reset");
    CHECK(o0["operands"] == nlohmann::json::array({{0, 0, 3}}));
    CHECK(o0["value"] == nlohmann::json::array({1, 2, 3}));

    CHECK(dump_ir_json(sigs, ops) == text);
}
