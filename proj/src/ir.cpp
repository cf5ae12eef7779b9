#include "nengine/ir.hpp"

#include <algorithm>
#include <queue>
#include <set>
#include <sstream>

#include <json.hpp>

namespace neng {

bool refs_overlap(const SignalRef& a, const SignalRef& b) {
    return a.signal == b.signal && a.start < b.stop && b.start < a.stop;
}

const char* op_kind_name(OpKind k) {
    switch (k) {
        case OpKind::Reset: return "Reset";
        case OpKind::Copy: return "Copy";
        case OpKind::ElementwiseInc: return "ElementwiseInc";
        case OpKind::DotInc: return "DotInc";
        case OpKind::SimNeurons: return "SimNeurons";
        case OpKind::SimProcess: return "SimProcess";
        case OpKind::SimPES: return "SimPES";
        case OpKind::TimeUpdate: return "TimeUpdate";
    }
    return "?";
}

const char* neuron_kind_name(NeuronKind k) {
    switch (k) {
        case NeuronKind::LIF: return "LIF";
        case NeuronKind::LIFRate: return "LIFRate";
        case NeuronKind::RectifiedLinear: return "RectifiedLinear";
    }
    return "?";
}

Operator Operator::reset(OpId id, SignalRef dst, std::vector<double> value) {
    Operator op;
    op.id = id;
    op.kind = OpKind::Reset;
    op.operands = {dst};
    op.value = std::move(value);
    return op;
}

Operator Operator::copy(OpId id, SignalRef src, SignalRef dst, bool inc) {
    Operator op;
    op.id = id;
    op.kind = OpKind::Copy;
    op.operands = {src, dst};
    op.inc = inc;
    return op;
}

Operator Operator::elementwise_inc(OpId id, SignalRef a, SignalRef x, SignalRef y) {
    Operator op;
    op.id = id;
    op.kind = OpKind::ElementwiseInc;
    op.operands = {a, x, y};
    return op;
}

Operator Operator::dot_inc(OpId id, SignalRef a, SignalRef x, SignalRef y) {
    Operator op;
    op.id = id;
    op.kind = OpKind::DotInc;
    op.operands = {a, x, y};
    return op;
}

Operator Operator::sim_neurons(OpId id, NeuronModel model, SignalRef j, SignalRef out,
                               std::vector<SignalRef> states) {
    Operator op;
    op.id = id;
    op.kind = OpKind::SimNeurons;
    op.operands = {j, out};
    op.operands.insert(op.operands.end(), states.begin(), states.end());
    op.neuron = model;
    return op;
}

Operator Operator::sim_process(OpId id, double tau, SignalRef in, SignalRef out,
                               std::optional<SignalRef> state) {
    Operator op;
    op.id = id;
    op.kind = OpKind::SimProcess;
    op.operands = {in, out};
    if (state) op.operands.push_back(*state);
    op.tau = tau;
    return op;
}

Operator Operator::sim_pes(OpId id, double learning_rate, SignalRef pre, SignalRef error,
                           SignalRef weights) {
    Operator op;
    op.id = id;
    op.kind = OpKind::SimPES;
    op.operands = {pre, error, weights};
    op.learning_rate = learning_rate;
    return op;
}

Operator Operator::time_update(OpId id, double dt, SignalRef step, SignalRef time) {
    Operator op;
    op.id = id;
    op.kind = OpKind::TimeUpdate;
    op.operands = {step, time};
    op.dt = dt;
    return op;
}

namespace {

[[noreturn]] void structural_fail(const Operator& op, const std::string& what) {
    std::ostringstream os;
    os << "operator " << op.id << " (" << op_kind_name(op.kind) << "): " << what;
    throw StructuralError(os.str());
}

void expect_arity(const Operator& op, size_t n) {
    if (op.operands.size() != n)
        structural_fail(op, "expected " + std::to_string(n) + " operands, got " +
                                std::to_string(op.operands.size()));
}

}  // namespace

std::vector<std::pair<int, AccessMode>> operand_modes(const Operator& op) {
    using M = AccessMode;
    switch (op.kind) {
        case OpKind::Reset:
            expect_arity(op, 1);
            return {{0, M::Set}};
        case OpKind::Copy:
            expect_arity(op, 2);
            return {{0, M::Read}, {1, op.inc ? M::Inc : M::Set}};
        case OpKind::ElementwiseInc:
        case OpKind::DotInc:
            expect_arity(op, 3);
            return {{0, M::Read}, {1, M::Read}, {2, M::Inc}};
        case OpKind::SimNeurons: {
            size_t want = op.neuron.has_state() ? 4 : 2;
            expect_arity(op, want);
            std::vector<std::pair<int, M>> m = {{0, M::Read}, {1, M::Set}};
            for (size_t i = 2; i < op.operands.size(); ++i)
                m.emplace_back(static_cast<int>(i), M::Update);
            return m;
        }
        case OpKind::SimProcess:
            if (op.tau > 0.0) {
                expect_arity(op, 3);
                // Filtered output becomes visible next step, as does the state.
                return {{0, M::Read}, {1, M::Update}, {2, M::Update}};
            }
            expect_arity(op, 2);
            return {{0, M::Read}, {1, M::Set}};
        case OpKind::SimPES:
            expect_arity(op, 3);
            return {{0, M::Read}, {1, M::Read}, {2, M::Update}};
        case OpKind::TimeUpdate:
            expect_arity(op, 2);
            return {{0, M::Update}, {1, M::Update}};
    }
    structural_fail(op, "unknown kind");
}

AccessLists access_lists(const Operator& op) {
    AccessLists out;
    for (auto [pos, mode] : operand_modes(op)) {
        const SignalRef& r = op.operands[pos];
        switch (mode) {
            case AccessMode::Read: out.reads.push_back(r); break;
            case AccessMode::Set: out.sets.push_back(r); break;
            case AccessMode::Inc: out.incs.push_back(r); break;
            case AccessMode::Update: out.updates.push_back(r); break;
        }
    }
    return out;
}

std::vector<int> read_positions(const Operator& op) {
    std::vector<int> out;
    for (auto [pos, mode] : operand_modes(op))
        if (mode == AccessMode::Read) out.push_back(pos);
    return out;
}

namespace {

const Signal& ref_signal(const std::vector<Signal>& signals, const Operator& op,
                         const SignalRef& r) {
    if (r.signal < 0 || static_cast<size_t>(r.signal) >= signals.size())
        structural_fail(op, "ref to unknown signal " + std::to_string(r.signal));
    return signals[r.signal];
}

void check_ref(const std::vector<Signal>& signals, const Operator& op, const SignalRef& r) {
    const Signal& s = ref_signal(signals, op, r);
    if (r.start < 0 || r.stop > s.rows() || r.start >= r.stop)
        structural_fail(op, "slice [" + std::to_string(r.start) + ", " +
                                std::to_string(r.stop) + ") out of bounds for signal '" +
                                s.label + "' with " + std::to_string(s.rows()) + " rows");
}

bool is_scalar_ref(const std::vector<Signal>& signals, const SignalRef& r) {
    return r.rows() == 1 && signals[r.signal].elems_per_row() == 1;
}

long long ref_elems(const std::vector<Signal>& signals, const SignalRef& r) {
    return static_cast<long long>(r.rows()) * signals[r.signal].elems_per_row();
}

void check_same_layout(const std::vector<Signal>& signals, const Operator& op,
                       const SignalRef& a, const SignalRef& b, const char* what) {
    if (a.rows() != b.rows() ||
        signals[a.signal].trailing_shape() != signals[b.signal].trailing_shape())
        structural_fail(op, std::string(what) + " shapes do not agree");
}

void check_rank1(const std::vector<Signal>& signals, const Operator& op, const SignalRef& r,
                 const char* what) {
    if (!signals[r.signal].trailing_shape().empty())
        structural_fail(op, std::string(what) + " must be a vector signal");
}

void validate_one(const std::vector<Signal>& signals, const Operator& op) {
    auto modes = operand_modes(op);  // checks arity
    for (const SignalRef& r : op.operands) check_ref(signals, op, r);

    Elem elem = signals[op.operands[0].signal].elem;
    for (const SignalRef& r : op.operands)
        if (signals[r.signal].elem != elem)
            structural_fail(op, "operands mix element widths");

    for (auto [pos, mode] : modes) {
        if (mode == AccessMode::Read) continue;
        const Signal& s = signals[op.operands[pos].signal];
        if (s.constant)
            structural_fail(op, "writes constant signal '" + s.label + "'");
    }

    switch (op.kind) {
        case OpKind::Reset: {
            if (static_cast<long long>(op.value.size()) != ref_elems(signals, op.operands[0]))
                structural_fail(op, "value length does not match destination");
            break;
        }
        case OpKind::Copy:
            check_same_layout(signals, op, op.operands[0], op.operands[1], "src/dst");
            break;
        case OpKind::ElementwiseInc: {
            const SignalRef &a = op.operands[0], &x = op.operands[1], &y = op.operands[2];
            check_same_layout(signals, op, x, y, "x/y");
            if (!is_scalar_ref(signals, a)) check_same_layout(signals, op, a, x, "a/x");
            break;
        }
        case OpKind::DotInc: {
            const SignalRef &a = op.operands[0], &x = op.operands[1], &y = op.operands[2];
            auto a_trailing = signals[a.signal].trailing_shape();
            if (a_trailing.size() != 1)
                structural_fail(op, "a must be a matrix signal");
            check_rank1(signals, op, x, "x");
            check_rank1(signals, op, y, "y");
            if (a_trailing[0] != x.rows())
                structural_fail(op, "a columns do not match x rows");
            if (a.rows() != y.rows())
                structural_fail(op, "a rows do not match y rows");
            if (refs_overlap(y, x) || refs_overlap(y, a))
                structural_fail(op, "y aliases an input operand");
            break;
        }
        case OpKind::SimNeurons: {
            for (const SignalRef& r : op.operands) check_rank1(signals, op, r, "operand");
            int n = op.operands[0].rows();
            for (const SignalRef& r : op.operands)
                if (r.rows() != n) structural_fail(op, "operand row counts differ");
            break;
        }
        case OpKind::SimProcess: {
            const SignalRef &in = op.operands[0], &out = op.operands[1];
            check_same_layout(signals, op, in, out, "in/out");
            if (op.operands.size() == 3)
                check_same_layout(signals, op, out, op.operands[2], "out/state");
            break;
        }
        case OpKind::SimPES: {
            const SignalRef &pre = op.operands[0], &err = op.operands[1], &w = op.operands[2];
            check_rank1(signals, op, pre, "pre");
            check_rank1(signals, op, err, "error");
            auto w_trailing = signals[w.signal].trailing_shape();
            if (w_trailing.size() != 1)
                structural_fail(op, "weights must be a matrix signal");
            if (w.rows() != err.rows() || w_trailing[0] != pre.rows())
                structural_fail(op, "weights shape does not match error x pre");
            break;
        }
        case OpKind::TimeUpdate: {
            for (const SignalRef& r : op.operands)
                if (ref_elems(signals, r) != 1)
                    structural_fail(op, "step/time must be scalar signals");
            break;
        }
    }
}

}  // namespace

void validate_operators(const std::vector<Signal>& signals, const std::vector<Operator>& ops) {
    std::set<OpId> seen;
    for (const Operator& op : ops) {
        if (!seen.insert(op.id).second)
            throw StructuralError("duplicate operator id " + std::to_string(op.id));
        validate_one(signals, op);
    }
}

bool DependencyGraph::has_edge(OpId a, OpId b) const {
    auto ia = index.find(a), ib = index.find(b);
    if (ia == index.end() || ib == index.end()) return false;
    const auto& s = succ[ia->second];
    return std::binary_search(s.begin(), s.end(), ib->second);
}

size_t DependencyGraph::edge_count() const {
    size_t n = 0;
    for (const auto& s : succ) n += s.size();
    return n;
}

namespace {

struct Access {
    int node;
    SignalRef ref;
    AccessMode mode;
};

[[noreturn]] void conflict_fail(const std::vector<Operator>& ops, const Signal& s, int a, int b,
                                const char* mode) {
    std::ostringstream os;
    os << "write conflict on signal '" << s.label << "': operators " << ops[a].id << " ("
       << op_kind_name(ops[a].kind) << ") and " << ops[b].id << " ("
       << op_kind_name(ops[b].kind) << ") both " << mode << " overlapping rows";
    throw BuildError(os.str());
}

// Phase ordering: Set < Inc < Read < Update, except that Update -> Read is
// deliberately absent (updates are next-step visible).
bool phase_edge(AccessMode from, AccessMode to) {
    using M = AccessMode;
    switch (from) {
        case M::Set: return to == M::Inc || to == M::Read || to == M::Update;
        case M::Inc: return to == M::Read || to == M::Update;
        case M::Read: return to == M::Update;
        case M::Update: return false;
    }
    return false;
}

std::vector<int> find_cycle(const DependencyGraph& g) {
    // Iterative DFS; returns node indices of one cycle.
    size_t n = g.node_count();
    std::vector<int> color(n, 0), parent(n, -1);
    for (size_t root = 0; root < n; ++root) {
        if (color[root] != 0) continue;
        std::vector<std::pair<int, size_t>> stack{{static_cast<int>(root), 0}};
        color[root] = 1;
        while (!stack.empty()) {
            auto& [v, ei] = stack.back();
            if (ei < g.succ[v].size()) {
                int w = g.succ[v][ei++];
                if (color[w] == 0) {
                    color[w] = 1;
                    parent[w] = v;
                    stack.emplace_back(w, 0);
                } else if (color[w] == 1) {
                    std::vector<int> cycle{w};
                    for (int u = v; u != w; u = parent[u]) cycle.push_back(u);
                    cycle.push_back(w);
                    std::reverse(cycle.begin(), cycle.end());
                    return cycle;
                }
            } else {
                color[v] = 2;
                stack.pop_back();
            }
        }
    }
    return {};
}

}  // namespace

DependencyGraph build_dependency_graph(const std::vector<Signal>& signals,
                                       const std::vector<Operator>& ops) {
    validate_operators(signals, ops);

    DependencyGraph g;
    g.op_ids.reserve(ops.size());
    for (size_t i = 0; i < ops.size(); ++i) {
        g.op_ids.push_back(ops[i].id);
        g.index[ops[i].id] = static_cast<int>(i);
    }

    std::unordered_map<SignalId, std::vector<Access>> by_signal;
    for (size_t i = 0; i < ops.size(); ++i) {
        for (auto [pos, mode] : operand_modes(ops[i])) {
            const SignalRef& r = ops[i].operands[pos];
            by_signal[r.signal].push_back({static_cast<int>(i), r, mode});
        }
    }

    std::set<std::pair<int, int>> edges;
    for (auto& [sid, accesses] : by_signal) {
        for (size_t i = 0; i < accesses.size(); ++i) {
            for (size_t j = i + 1; j < accesses.size(); ++j) {
                const Access &a = accesses[i], &b = accesses[j];
                if (a.node == b.node) continue;  // self pair: no ordering constraint
                if (!refs_overlap(a.ref, b.ref)) continue;
                if (a.mode == AccessMode::Set && b.mode == AccessMode::Set)
                    conflict_fail(ops, signals[sid], a.node, b.node, "set");
                if (a.mode == AccessMode::Update && b.mode == AccessMode::Update)
                    conflict_fail(ops, signals[sid], a.node, b.node, "update");
                if (phase_edge(a.mode, b.mode)) edges.insert({a.node, b.node});
                if (phase_edge(b.mode, a.mode)) edges.insert({b.node, a.node});
            }
        }
    }

    g.succ.assign(ops.size(), {});
    g.pred.assign(ops.size(), {});
    for (auto [from, to] : edges) {
        g.succ[from].push_back(to);
        g.pred[to].push_back(from);
    }
    for (auto& v : g.succ) std::sort(v.begin(), v.end());
    for (auto& v : g.pred) std::sort(v.begin(), v.end());

    // Cycle check via Kahn's algorithm.
    std::vector<int> indeg(ops.size());
    for (size_t i = 0; i < ops.size(); ++i) indeg[i] = static_cast<int>(g.pred[i].size());
    std::queue<int> ready;
    for (size_t i = 0; i < ops.size(); ++i)
        if (indeg[i] == 0) ready.push(static_cast<int>(i));
    size_t done = 0;
    while (!ready.empty()) {
        int v = ready.front();
        ready.pop();
        ++done;
        for (int w : g.succ[v])
            if (--indeg[w] == 0) ready.push(w);
    }
    if (done != ops.size()) {
        std::vector<int> cycle = find_cycle(g);
        std::ostringstream os;
        os << "dependency cycle:";
        for (int v : cycle) os << " " << ops[v].id;
        throw BuildError(os.str());
    }
    return g;
}

std::vector<OpId> toposort_schedule(const DependencyGraph& g) {
    size_t n = g.node_count();
    std::vector<int> indeg(n);
    for (size_t i = 0; i < n; ++i) indeg[i] = static_cast<int>(g.pred[i].size());

    // Min-heap on operator id for deterministic tie-breaking.
    std::priority_queue<std::pair<OpId, int>, std::vector<std::pair<OpId, int>>,
                        std::greater<>>
        ready;
    for (size_t i = 0; i < n; ++i)
        if (indeg[i] == 0) ready.push({g.op_ids[i], static_cast<int>(i)});

    std::vector<OpId> order;
    order.reserve(n);
    while (!ready.empty()) {
        auto [id, v] = ready.top();
        ready.pop();
        order.push_back(id);
        for (int w : g.succ[v])
            if (--indeg[w] == 0) ready.push({g.op_ids[w], w});
    }
    if (order.size() != n) throw BuildError("toposort on cyclic graph");
    return order;
}

ReachMatrix::ReachMatrix(const DependencyGraph& g) {
    n_ = g.node_count();
    words_ = (n_ + 63) / 64;
    bits_.assign(n_ * words_, 0);
    index_ = g.index;

    std::vector<OpId> order = toposort_schedule(g);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        int v = g.index.at(*it);
        uint64_t* row = bits_.data() + static_cast<size_t>(v) * words_;
        for (int w : g.succ[v]) {
            row[w / 64] |= uint64_t{1} << (w % 64);
            const uint64_t* wrow = bits_.data() + static_cast<size_t>(w) * words_;
            for (size_t k = 0; k < words_; ++k) row[k] |= wrow[k];
        }
    }
}

bool ReachMatrix::reaches(OpId a, OpId b) const {
    auto ia = index_.find(a), ib = index_.find(b);
    if (ia == index_.end() || ib == index_.end()) return false;
    int i = ia->second, j = ib->second;
    return (bits_[static_cast<size_t>(i) * words_ + j / 64] >> (j % 64)) & 1;
}

std::string dump_ir_json(const std::vector<Signal>& signals, const std::vector<Operator>& ops) {
    using json = nlohmann::ordered_json;
    json root;
    root["signals"] = json::array();
    for (const Signal& s : signals) {
        json j;
        j["id"] = s.id;
        j["label"] = s.label;
        j["shape"] = s.shape;
        j["elem"] = elem_bits(s.elem);
        j["constant"] = s.constant;
        j["minibatched"] = s.minibatched;
        j["trainable"] = s.trainable;
        root["signals"].push_back(std::move(j));
    }
    root["operators"] = json::array();
    for (const Operator& op : ops) {
        json j;
        j["id"] = op.id;
        j["kind"] = op_kind_name(op.kind);
        j["operands"] = json::array();
        for (const SignalRef& r : op.operands)
            j["operands"].push_back({r.signal, r.start, r.stop});
        switch (op.kind) {
            case OpKind::Reset: j["value"] = op.value; break;
            case OpKind::Copy: j["inc"] = op.inc; break;
            case OpKind::SimNeurons:
                j["neuron"] = {{"model", neuron_kind_name(op.neuron.kind)},
                               {"tau_rc", op.neuron.tau_rc},
                               {"tau_ref", op.neuron.tau_ref},
                               {"amplitude", op.neuron.amplitude}};
                break;
            case OpKind::SimProcess: j["tau"] = op.tau; break;
            case OpKind::SimPES: j["learning_rate"] = op.learning_rate; break;
            case OpKind::TimeUpdate: j["dt"] = op.dt; break;
            default: break;
        }
        root["operators"].push_back(std::move(j));
    }
    return root.dump(2);
}

}  // namespace neng
