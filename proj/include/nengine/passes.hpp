#pragma once

#include <cstdint>
#include <vector>

#include "nengine/ir.hpp"
#include "nengine/model.hpp"

/// Build-time optimization passes: operator graph simplification, merge
/// planning (batching compatible operators into grouped kernel launches),
/// base buffer construction, and buffer sorting for contiguous reads.
namespace neng {

/// Graph rewrites applied before planning. Three local rules, iterated to a
/// fixpoint, all exactly value-preserving:
///   - an elementwise scale by a constant all-ones factor becomes an
///     accumulating copy of the other operand;
///   - a plain (non-accumulating) copy out of a constant becomes a reset to
///     the constant's value;
///   - products scaled by a constant all-zeros factor are dropped entirely.
/// Surviving operators keep their ids; the result is idempotent.
std::vector<Operator> simplify_operators(const std::vector<Signal>& signals,
                                         std::vector<Operator> ops);

/// True when two operators can execute as one batched kernel: same kind,
/// operand count and scalar parameters, per-position matching row layout
/// (trailing shape, element type, minibatched and trainable storage), and no
/// overlap anywhere between their written regions, so member order inside a
/// group never affects results.
bool mergeable(const std::vector<Signal>& signals, const Operator& a,
               const Operator& b);

/// One scheduled kernel launch: members run as a unit, in member order for
/// layout purposes only.
struct OpGroup {
    std::vector<OpId> members;
};

/// Execution plan: groups in dependency-safe order.
using Plan = std::vector<OpGroup>;

/// Each round, partition the currently runnable operators into mergeable
/// groups and commit the largest one.
Plan plan_greedy(const std::vector<Signal>& signals,
                 const std::vector<Operator>& ops);

/// Like the greedy planner, but each commit is chosen by a depth-limited
/// search maximizing the total operators scheduled over the next `depth`
/// groups (memoized on the set of scheduled operators). Depth 1 reproduces
/// the greedy plan exactly.
Plan plan_tree_search(const std::vector<Signal>& signals,
                      const std::vector<Operator>& ops, int depth);

enum class Planner { Greedy, Tree, TransitiveClosure };

/// Throws if the plan misses or repeats operators, or schedules a dependency
/// after its dependent. Used by tests and the pipeline driver.
void validate_plan(const std::vector<Signal>& signals,
                   const std::vector<Operator>& ops, const Plan& plan);

/// Storage layout for one base buffer: a uniform row grid shared by the
/// signals listed in `order`, concatenated in that order.
struct BufferDesc {
    std::vector<int> trailing;  // per-row element shape
    Elem elem = Elem::f64;
    bool minibatched = false;
    bool trainable = false;
    int rows = 0;
    std::vector<SignalId> order;
};

struct BufferAssignment {
    std::vector<int> buffer_of;   // signal id -> buffer index
    std::vector<int> row_offset;  // signal id -> first row within its buffer
    std::vector<BufferDesc> buffers;
};

/// Union operands position-wise across each group so that every merged
/// kernel reads and writes whole slices of shared buffers. Signals start in
/// ascending-id order within each buffer.
BufferAssignment create_base_buffers(const std::vector<Signal>& signals,
                                     const std::vector<Operator>& ops,
                                     const Plan& plan);

/// The rows one merged kernel reads for one operand position: one slice per
/// group member, in member order.
struct ReadBlock {
    int id = 0;
    int group = 0;     // index into the plan
    int position = 0;  // operand position
    int buffer = 0;
    std::vector<SignalRef> refs;

    int total_rows() const {
        int n = 0;
        for (const auto& r : refs) n += r.rows();
        return n;
    }
};

std::vector<ReadBlock> collect_read_blocks(const std::vector<Operator>& ops,
                                           const Plan& plan,
                                           const BufferAssignment& buffers);

/// Reorder signals within each buffer (and members within each group) so
/// that read blocks cover contiguous ascending rows wherever possible.
/// Signals sharing the same set of read blocks move as a unit; a hierarchy
/// of interleaved block sorts settles the rest.
void sort_buffers(const std::vector<Signal>& signals, Plan& plan,
                  BufferAssignment& buffers, std::vector<ReadBlock>& blocks);

struct ContiguityStats {
    double contiguous_read_fraction = 1.0;  // blocks covering one ascending run
    long long gather_row_count = 0;         // rows needing indexed gathers
    int groups_per_step = 0;
};

ContiguityStats contiguity_stats(const std::vector<ReadBlock>& blocks,
                                 const BufferAssignment& buffers,
                                 const Plan& plan);

struct PipelineConfig {
    bool merge = true;
    bool simplify = true;
    Planner planner = Planner::Tree;
    int tree_depth = 3;
    bool sort = true;
};

/// A model with its execution plan and storage layout, ready for an engine.
struct PlannedModel {
    BuiltModel model;
    Plan plan;
    BufferAssignment buffers;
    std::vector<ReadBlock> read_blocks;
    ContiguityStats stats;
};

PlannedModel run_passes(BuiltModel model, const PipelineConfig& config = {});

}  // namespace neng
