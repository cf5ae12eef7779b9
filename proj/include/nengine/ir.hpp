#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

/// Core intermediate representation: signals (typed state vectors), operators
/// (the per-step computations reading and writing signal slices), and the
/// dependency graph induced by their access patterns.
namespace neng {

struct StructuralError : std::runtime_error {
    explicit StructuralError(const std::string& msg) : std::runtime_error(msg) {}
};

struct BuildError : std::runtime_error {
    explicit BuildError(const std::string& msg) : std::runtime_error(msg) {}
};

struct RunError : std::runtime_error {
    explicit RunError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class Elem { f32, f64 };

inline int elem_bits(Elem e) { return e == Elem::f32 ? 32 : 64; }

using SignalId = int;
using OpId = int;

/// A named value in the model: parameters (encoders, weights), simulation
/// state (voltages, filtered values) or constants. The first shape axis is
/// the sliceable one; trailing axes describe per-row structure.
struct Signal {
    SignalId id = -1;
    std::string label;
    std::vector<int> shape;       // non-empty, every dim >= 1
    Elem elem = Elem::f64;
    std::vector<double> initial;  // flattened row-major; empty means all zero
    bool constant = false;        // never written by any operator
    bool minibatched = false;     // carries a per-batch copy at run time
    bool trainable = false;       // parameter (vs. simulation state)

    int rows() const { return shape.empty() ? 0 : shape[0]; }
    long long elems_per_row() const {
        long long n = 1;
        for (size_t i = 1; i < shape.size(); ++i) n *= shape[i];
        return n;
    }
    long long size() const { return rows() * elems_per_row(); }
    std::vector<int> trailing_shape() const {
        return shape.empty() ? std::vector<int>{}
                             : std::vector<int>(shape.begin() + 1, shape.end());
    }
};

/// Contiguous slice [start, stop) of a signal's first axis.
struct SignalRef {
    SignalId signal = -1;
    int start = 0;
    int stop = 0;

    int rows() const { return stop - start; }
    bool operator==(const SignalRef& o) const = default;

    static SignalRef full(const Signal& s) { return {s.id, 0, s.rows()}; }
    static SignalRef slice(const Signal& s, int start, int stop) {
        return {s.id, start, stop};
    }
};

/// True when the two refs address at least one common row of one signal.
bool refs_overlap(const SignalRef& a, const SignalRef& b);

enum class OpKind {
    Reset,
    Copy,
    ElementwiseInc,
    DotInc,
    SimNeurons,
    SimProcess,
    SimPES,
    TimeUpdate,
};

const char* op_kind_name(OpKind k);

enum class NeuronKind { LIF, LIFRate, RectifiedLinear };

const char* neuron_kind_name(NeuronKind k);

struct NeuronModel {
    NeuronKind kind = NeuronKind::LIF;
    double tau_rc = 0.02;
    double tau_ref = 0.002;
    double amplitude = 1.0;

    bool has_state() const { return kind == NeuronKind::LIF; }
    bool operator==(const NeuronModel& o) const = default;
};

/// One per-step computation. Operand layout is positional per kind:
///   Reset          [dst]
///   Copy           [src, dst]
///   ElementwiseInc [a, x, y]     y += a * x (a may be scalar-shaped)
///   DotInc         [a, x, y]     y += a . x
///   SimNeurons     [j, out, states...]
///   SimProcess     [in, out] or [in, out, state]
///   SimPES         [pre, error, weights]
///   TimeUpdate     [step, time]
struct Operator {
    OpId id = -1;
    OpKind kind = OpKind::Reset;
    std::vector<SignalRef> operands;

    std::vector<double> value;   // Reset: dense payload written each step
    bool inc = false;            // Copy: increment instead of overwrite
    NeuronModel neuron;          // SimNeurons
    double tau = 0.0;            // SimProcess: lowpass constant, 0 = passthrough
    double learning_rate = 0.0;  // SimPES
    double dt = 0.0;             // TimeUpdate

    static Operator reset(OpId id, SignalRef dst, std::vector<double> value);
    static Operator copy(OpId id, SignalRef src, SignalRef dst, bool inc);
    static Operator elementwise_inc(OpId id, SignalRef a, SignalRef x, SignalRef y);
    static Operator dot_inc(OpId id, SignalRef a, SignalRef x, SignalRef y);
    static Operator sim_neurons(OpId id, NeuronModel model, SignalRef j, SignalRef out,
                                std::vector<SignalRef> states);
    static Operator sim_process(OpId id, double tau, SignalRef in, SignalRef out,
                                std::optional<SignalRef> state);
    static Operator sim_pes(OpId id, double learning_rate, SignalRef pre, SignalRef error,
                            SignalRef weights);
    static Operator time_update(OpId id, double dt, SignalRef step, SignalRef time);
};

/// How an operator touches one operand position.
enum class AccessMode { Read, Set, Inc, Update };

/// (operand index, mode) for every operand of the operator, in operand order.
std::vector<std::pair<int, AccessMode>> operand_modes(const Operator& op);

struct AccessLists {
    std::vector<SignalRef> sets, incs, reads, updates;
};

/// Classify each operand ref into exactly one of the four access phases.
AccessLists access_lists(const Operator& op);

/// Operand indices that are reads, in positional order (read-block slots).
std::vector<int> read_positions(const Operator& op);

/// Structural validation: arity, slice bounds, per-kind shape rules and the
/// constant-signal write prohibition. Throws StructuralError.
void validate_operators(const std::vector<Signal>& signals,
                        const std::vector<Operator>& ops);

/// Within-step ordering constraints. Node order mirrors the operator list;
/// edges are deduplicated. Write conflicts and cycles raise BuildError.
struct DependencyGraph {
    std::vector<OpId> op_ids;               // node index -> operator id
    std::vector<std::vector<int>> succ;     // by node index, sorted
    std::vector<std::vector<int>> pred;     // by node index, sorted
    std::unordered_map<OpId, int> index;    // operator id -> node index

    bool has_edge(OpId a, OpId b) const;
    size_t edge_count() const;
    size_t node_count() const { return op_ids.size(); }
};

/// Edge rules per overlapping region of each signal: sets precede incs,
/// sets/incs precede reads, reads precede updates, and sets/incs precede
/// updates. There is no update->read edge: updated values become visible on
/// the next step. Self pairs are skipped (an operator may read and write the
/// same signal).
DependencyGraph build_dependency_graph(const std::vector<Signal>& signals,
                                       const std::vector<Operator>& ops);

/// Deterministic topological order: Kahn's algorithm, ties broken by
/// ascending operator id.
std::vector<OpId> toposort_schedule(const DependencyGraph& g);

/// Dense transitive closure over the dependency graph (ops reaching ops).
class ReachMatrix {
  public:
    explicit ReachMatrix(const DependencyGraph& g);

    /// True when a path a -> ... -> b exists (a == b returns false).
    bool reaches(OpId a, OpId b) const;
    bool either_reaches(OpId a, OpId b) const {
        return reaches(a, b) || reaches(b, a);
    }

  private:
    size_t n_ = 0, words_ = 0;
    std::vector<uint64_t> bits_;  // row-major: bits_[i * words_ ..] = reach set of node i
    std::unordered_map<OpId, int> index_;
};

/// Serialize signals and operators to JSON. Field names are part of the
/// external interface; see README.
std::string dump_ir_json(const std::vector<Signal>& signals,
                         const std::vector<Operator>& ops);

}  // namespace neng
