#pragma once

#include <string>
#include <vector>

#include "nengine/frontend.hpp"
#include "nengine/ir.hpp"
#include "nengine/model.hpp"

namespace neng::test {

/// Seeded generator of structurally valid random models. Operators are added
/// tentatively and discarded when they would introduce a write conflict or an
/// ordering cycle, so every returned model builds a dependency graph. The
/// signal pool includes all-ones and all-zeros constants so that graph
/// simplification has material to work on.
class RandomModelBuilder {
  public:
    explicit RandomModelBuilder(uint64_t seed) : rng_(seed) {}

    BuiltModel build(int target_ops) {
        make_pool();
        int attempts = 0;
        while (static_cast<int>(model_.operators.size()) < target_ops &&
               attempts < target_ops * 30) {
            ++attempts;
            try_add_random_op();
        }
        add_probes();
        return std::move(model_);
    }

  private:
    SignalId add_signal(std::vector<int> shape, bool constant, bool minibatched,
                        std::vector<double> initial = {}) {
        Signal s;
        s.id = static_cast<int>(model_.signals.size());
        s.label = "s" + std::to_string(s.id);
        s.shape = std::move(shape);
        s.constant = constant;
        s.minibatched = minibatched;
        s.initial = std::move(initial);
        model_.signals.push_back(std::move(s));
        return model_.signals.back().id;
    }

    std::vector<double> random_values(int n, double lo = -1.0, double hi = 1.0) {
        std::vector<double> v(n);
        for (double& x : v) x = rng_.uniform(lo, hi);
        return v;
    }

    int pick(int n) { return static_cast<int>(rng_.uniform() * n) % n; }

    void make_pool() {
        static const int kSizes[] = {1, 2, 3, 5, 8};
        // writable vectors, batched and unbatched
        for (int size : kSizes) {
            for (int rep = 0; rep < 2; ++rep) {
                add_signal({size}, false, true);
                add_signal({size}, false, false);
            }
        }
        // constants: random values plus all-ones / all-zeros in both layouts
        for (int size : {1, 3, 5}) {
            add_signal({size}, true, false, random_values(size));
            add_signal({size}, true, false, std::vector<double>(size, 1.0));
            add_signal({size}, true, false, std::vector<double>(size, 0.0));
        }
        // matrices for products
        for (auto [r, c] : {std::pair{2, 3}, {3, 5}, {5, 8}, {3, 3}}) {
            add_signal({r, c}, true, false, random_values(r * c));
            add_signal({r, c}, false, false, random_values(r * c));
        }
    }

    SignalId pick_signal(int rows, bool minibatched, bool allow_constant,
                         bool vector_only = true) {
        std::vector<SignalId> fits;
        for (const Signal& s : model_.signals) {
            if (vector_only && s.shape.size() != 1) continue;
            if (s.rows() != rows) continue;
            if (s.minibatched != minibatched) continue;
            if (!allow_constant && s.constant) continue;
            fits.push_back(s.id);
        }
        if (fits.empty()) return -1;
        return fits[pick(static_cast<int>(fits.size()))];
    }

    /// A destination plus the batching its inputs must respect: writers of
    /// unbatched signals may only read unbatched signals.
    struct Dst {
        SignalId sig = -1;
        bool minibatched = false;
    };

    Dst pick_dst(int rows) {
        bool mb = rng_.uniform() < 0.65;
        SignalId s = pick_signal(rows, mb, false);
        if (s == -1) s = pick_signal(rows, !mb, false);
        if (s == -1) return {};
        return {s, model_.signals[s].minibatched};
    }

    /// At most one increment-phase writer per target: a second one would make
    /// the summation order, and so the low bits, depend on the group schedule.
    bool inc_target_free(SignalId sig) const {
        for (const Operator& op : model_.operators) {
            if (op.kind == OpKind::Copy && op.inc && op.operands[1].signal == sig)
                return false;
            if ((op.kind == OpKind::ElementwiseInc || op.kind == OpKind::DotInc) &&
                op.operands[2].signal == sig)
                return false;
        }
        return true;
    }

    SignalRef maybe_slice(SignalId sig) {
        const Signal& s = model_.signals[sig];
        if (s.rows() >= 2 && rng_.uniform() < 0.25) {
            int start = pick(s.rows());
            int stop = start + 1 + pick(s.rows() - start);
            return SignalRef::slice(s, start, stop);
        }
        return SignalRef::full(s);
    }

    void try_add_random_op() {
        int id = next_op_id_++;
        double roll = rng_.uniform();
        bool added = false;
        if (roll < 0.18)
            added = try_reset(id);
        else if (roll < 0.40)
            added = try_copy(id);
        else if (roll < 0.62)
            added = try_elementwise(id);
        else if (roll < 0.78)
            added = try_dot(id);
        else if (roll < 0.86)
            added = try_neurons(id);
        else if (roll < 0.94)
            added = try_process(id);
        else if (roll < 0.98)
            added = try_pes(id);
        else
            added = try_time(id);
        if (!added) --next_op_id_;
    }

    bool commit(Operator op) {
        model_.operators.push_back(std::move(op));
        try {
            validate_operators(model_.signals, model_.operators);
            build_dependency_graph(model_.signals, model_.operators);
            return true;
        } catch (const std::runtime_error&) {  // validation or ordering rejected it
            model_.operators.pop_back();
            return false;
        }
    }

    bool try_reset(int id) {
        Dst dst = pick_dst(1 + pick(8));
        if (dst.sig == -1) return false;
        SignalRef ref = maybe_slice(dst.sig);
        int elems = ref.rows() * model_.signals[dst.sig].elems_per_row();
        return commit(Operator::reset(id, ref, random_values(elems)));
    }

    bool try_copy(int id) {
        Dst dst = pick_dst(1 + pick(8));
        if (dst.sig == -1) return false;
        SignalRef dref = maybe_slice(dst.sig);
        SignalId src = pick_signal(dref.rows(), dst.minibatched && rng_.uniform() < 0.8,
                                   rng_.uniform() < 0.4);
        if (src == -1 || (model_.signals[src].minibatched && !dst.minibatched))
            return false;
        const Signal& ssig = model_.signals[src];
        SignalRef sref = ssig.rows() == dref.rows()
                             ? SignalRef::full(ssig)
                             : SignalRef::slice(ssig, 0, dref.rows());
        bool inc = rng_.uniform() < 0.5;
        if (inc && !inc_target_free(dst.sig)) return false;
        return commit(Operator::copy(id, sref, dref, inc));
    }

    bool try_elementwise(int id) {
        Dst dst = pick_dst(1 + pick(8));
        if (dst.sig == -1 || !inc_target_free(dst.sig)) return false;
        const Signal& y = model_.signals[dst.sig];
        SignalId x = pick_signal(y.rows(), dst.minibatched && rng_.uniform() < 0.7,
                                 rng_.uniform() < 0.3);
        // scale: scalar or full-shape, constant more often than not
        int a_rows = rng_.uniform() < 0.5 ? 1 : y.rows();
        SignalId a = pick_signal(a_rows, false, rng_.uniform() < 0.8);
        if (x == -1 || a == -1) return false;
        if (!dst.minibatched &&
            (model_.signals[x].minibatched || model_.signals[a].minibatched))
            return false;
        return commit(Operator::elementwise_inc(id, SignalRef::full(model_.signals[a]),
                                                SignalRef::full(model_.signals[x]),
                                                SignalRef::full(y)));
    }

    bool try_dot(int id) {
        // pick a matrix, then conforming vectors
        std::vector<SignalId> mats;
        for (const Signal& s : model_.signals)
            if (s.shape.size() == 2) mats.push_back(s.id);
        if (mats.empty()) return false;
        const Signal& a = model_.signals[mats[pick(static_cast<int>(mats.size()))]];
        int m = a.shape[0], n = a.shape[1];
        SignalId y = pick_signal(m, rng_.uniform() < 0.5, false);
        SignalId x = pick_signal(n, rng_.uniform() < 0.5, rng_.uniform() < 0.3);
        if (x == -1 || y == -1 || !inc_target_free(y)) return false;
        if (!model_.signals[y].minibatched &&
            (model_.signals[x].minibatched || a.minibatched))
            return false;
        return commit(Operator::dot_inc(id, SignalRef::full(a),
                                        SignalRef::full(model_.signals[x]),
                                        SignalRef::full(model_.signals[y])));
    }

    bool try_neurons(int id) {
        int n = 1 + pick(6);
        SignalId j = pick_signal(n, true, false);
        if (j == -1) return false;
        NeuronModel nm;
        double kind = rng_.uniform();
        nm.kind = kind < 0.5    ? NeuronKind::LIF
                  : kind < 0.75 ? NeuronKind::LIFRate
                                : NeuronKind::RectifiedLinear;
        nm.amplitude = rng_.uniform() < 0.5 ? 1.0 : 2.0;
        SignalId out = add_signal({n}, false, true);
        std::vector<SignalRef> states;
        if (nm.has_state()) {
            SignalId v = add_signal({n}, false, true);
            SignalId r = add_signal({n}, false, true);
            states = {SignalRef::full(model_.signals[v]),
                      SignalRef::full(model_.signals[r])};
        }
        return commit(Operator::sim_neurons(id, nm, SignalRef::full(model_.signals[j]),
                                            SignalRef::full(model_.signals[out]),
                                            std::move(states)));
    }

    bool try_process(int id) {
        int n = 1 + pick(8);
        bool mb = rng_.uniform() < 0.7;
        SignalId in = pick_signal(n, mb, !mb);
        if (in == -1) return false;
        double tau = rng_.uniform() < 0.25 ? 0.0 : rng_.uniform(0.002, 0.1);
        SignalId out = add_signal({n}, false, mb);
        std::optional<SignalRef> state;
        if (tau > 0.0) {
            SignalId st = add_signal({n}, false, mb);
            state = SignalRef::full(model_.signals[st]);
        }
        return commit(Operator::sim_process(id, tau, SignalRef::full(model_.signals[in]),
                                            SignalRef::full(model_.signals[out]),
                                            state));
    }

    bool try_pes(int id) {
        int n = 1 + pick(5), r = 1 + pick(3);
        SignalId pre = pick_signal(n, true, false);
        SignalId err = pick_signal(r, true, false);
        if (pre == -1 || err == -1) return false;
        SignalId w = add_signal({r, n}, false, false, random_values(r * n, -0.1, 0.1));
        return commit(Operator::sim_pes(id, rng_.uniform(1e-4, 1e-2),
                                        SignalRef::full(model_.signals[pre]),
                                        SignalRef::full(model_.signals[err]),
                                        SignalRef::full(model_.signals[w])));
    }

    bool try_time(int id) {
        if (has_clock_) return false;
        SignalId step = add_signal({1}, false, false);
        SignalId time = add_signal({1}, false, false);
        bool ok = commit(Operator::time_update(id, model_.dt,
                                               SignalRef::full(model_.signals[step]),
                                               SignalRef::full(model_.signals[time])));
        has_clock_ = ok;
        return ok;
    }

    void add_probes() {
        std::vector<SignalId> candidates;
        for (const Signal& s : model_.signals)
            if (!s.constant) candidates.push_back(s.id);
        int want = 2 + pick(3);
        int key = 0;
        for (int t = 0; t < want && !candidates.empty(); ++t) {
            int at = pick(static_cast<int>(candidates.size()));
            SignalId sig = candidates[at];
            candidates.erase(candidates.begin() + at);
            model_.probes.push_back({key, sig, "p" + std::to_string(key)});
            ++key;
        }
    }

    Rng rng_;
    BuiltModel model_;
    int next_op_id_ = 0;
    bool has_clock_ = false;
};

inline BuiltModel random_model(uint64_t seed, int target_ops = 40) {
    return RandomModelBuilder(seed).build(target_ops);
}

}  // namespace neng::test
