#include "nengine/passes.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace neng {

namespace {

/// True when every element of the constant's value over the referenced rows
/// equals v. An absent initializer means all zeros.
bool constant_all_equal(const Signal& s, const SignalRef& ref, double v) {
    if (s.initial.empty()) return v == 0.0;
    size_t epr = static_cast<size_t>(s.elems_per_row());
    size_t lo = static_cast<size_t>(ref.start) * epr;
    size_t hi = static_cast<size_t>(ref.stop) * epr;
    for (size_t i = lo; i < hi; ++i)
        if (s.initial[i] != v) return false;
    return true;
}

std::vector<double> constant_slice(const Signal& s, const SignalRef& ref) {
    size_t epr = static_cast<size_t>(s.elems_per_row());
    size_t lo = static_cast<size_t>(ref.start) * epr;
    size_t hi = static_cast<size_t>(ref.stop) * epr;
    if (s.initial.empty()) return std::vector<double>(hi - lo, 0.0);
    return std::vector<double>(s.initial.begin() + lo, s.initial.begin() + hi);
}

}  // namespace

std::vector<Operator> simplify_operators(const std::vector<Signal>& signals,
                                         std::vector<Operator> ops) {
    bool changed = true;
    while (changed) {
        changed = false;
        std::vector<Operator> next;
        next.reserve(ops.size());
        for (Operator& op : ops) {
            if (op.kind == OpKind::ElementwiseInc || op.kind == OpKind::DotInc) {
                const SignalRef& aref = op.operands[0];
                const Signal& a = signals[aref.signal];
                if (a.constant && constant_all_equal(a, aref, 0.0)) {
                    changed = true;  // increment by zero: drop
                    continue;
                }
                if (op.kind == OpKind::ElementwiseInc && a.constant &&
                    constant_all_equal(a, aref, 1.0)) {
                    next.push_back(
                        Operator::copy(op.id, op.operands[1], op.operands[2], true));
                    changed = true;  // scale by one: accumulate directly
                    continue;
                }
            }
            if (op.kind == OpKind::Copy && !op.inc &&
                signals[op.operands[0].signal].constant) {
                next.push_back(Operator::reset(
                    op.id, op.operands[1],
                    constant_slice(signals[op.operands[0].signal], op.operands[0])));
                changed = true;  // copying a constant: load the value directly
                continue;
            }
            next.push_back(std::move(op));
        }
        ops = std::move(next);
    }
    return ops;
}

bool mergeable(const std::vector<Signal>& signals, const Operator& a,
               const Operator& b) {
    if (a.kind != b.kind || a.operands.size() != b.operands.size()) return false;
    switch (a.kind) {
        case OpKind::Copy:
            if (a.inc != b.inc) return false;
            break;
        case OpKind::SimNeurons:
            if (!(a.neuron == b.neuron)) return false;
            break;
        case OpKind::SimProcess:
            if (a.tau != b.tau) return false;
            break;
        case OpKind::SimPES:
            if (a.learning_rate != b.learning_rate) return false;
            break;
        case OpKind::TimeUpdate:
            if (a.dt != b.dt) return false;
            break;
        default:
            break;  // Reset values and product shapes may differ per member
    }
    for (size_t p = 0; p < a.operands.size(); ++p) {
        const Signal& sa = signals[a.operands[p].signal];
        const Signal& sb = signals[b.operands[p].signal];
        if (sa.elem != sb.elem || sa.minibatched != sb.minibatched ||
            sa.trainable != sb.trainable ||
            sa.trailing_shape() != sb.trailing_shape())
            return false;
    }
    // Overlapping written regions would make member order observable.
    AccessLists la = access_lists(a), lb = access_lists(b);
    auto writes = [](const AccessLists& l) {
        std::vector<SignalRef> w = l.sets;
        w.insert(w.end(), l.incs.begin(), l.incs.end());
        w.insert(w.end(), l.updates.begin(), l.updates.end());
        return w;
    };
    for (const SignalRef& wa : writes(la))
        for (const SignalRef& wb : writes(lb))
            if (refs_overlap(wa, wb)) return false;
    return true;
}

namespace {

using Bits = std::vector<uint64_t>;

bool bit_get(const Bits& b, int i) { return (b[i >> 6] >> (i & 63)) & 1u; }
void bit_set(Bits& b, int i) { b[i >> 6] |= uint64_t{1} << (i & 63); }

/// Dense pairwise mergeability, indexed by operator position.
struct MergeMatrix {
    int n = 0, words = 0;
    Bits bits;  // row-major

    bool get(int i, int j) const {
        return (bits[static_cast<size_t>(i) * words + (j >> 6)] >> (j & 63)) & 1u;
    }
};

MergeMatrix build_merge_matrix(const std::vector<Signal>& signals,
                               const std::vector<Operator>& ops) {
    MergeMatrix mm;
    mm.n = static_cast<int>(ops.size());
    mm.words = (mm.n + 63) / 64;
    mm.bits.assign(static_cast<size_t>(mm.n) * mm.words, 0);
    for (int i = 0; i < mm.n; ++i)
        for (int j = i + 1; j < mm.n; ++j)
            if (mergeable(signals, ops[i], ops[j])) {
                mm.bits[static_cast<size_t>(i) * mm.words + (j >> 6)] |=
                    uint64_t{1} << (j & 63);
                mm.bits[static_cast<size_t>(j) * mm.words + (i >> 6)] |=
                    uint64_t{1} << (i & 63);
            }
    return mm;
}

std::vector<int> runnable_ops(const DependencyGraph& g, const Bits& done) {
    std::vector<int> avail;
    for (size_t i = 0; i < g.node_count(); ++i) {
        if (bit_get(done, static_cast<int>(i))) continue;
        bool ready = true;
        for (int p : g.pred[i])
            if (!bit_get(done, p)) {
                ready = false;
                break;
            }
        if (ready) avail.push_back(static_cast<int>(i));
    }
    return avail;
}

/// Greedy clique cover of the runnable set: scan in ascending position and
/// put each operator into the first group it is mergeable with in full.
std::vector<std::vector<int>> partition_runnable(const MergeMatrix& mm,
                                                 const std::vector<int>& avail) {
    std::vector<std::vector<int>> groups;
    std::vector<Bits> masks;  // per group: ops mergeable with every member
    for (int o : avail) {
        bool placed = false;
        for (size_t gi = 0; gi < groups.size(); ++gi) {
            if ((masks[gi][o >> 6] >> (o & 63)) & 1u) {
                groups[gi].push_back(o);
                const uint64_t* row = mm.bits.data() + static_cast<size_t>(o) * mm.words;
                for (int w = 0; w < mm.words; ++w) masks[gi][w] &= row[w];
                placed = true;
                break;
            }
        }
        if (!placed) {
            groups.push_back({o});
            const uint64_t* row = mm.bits.data() + static_cast<size_t>(o) * mm.words;
            masks.emplace_back(row, row + mm.words);
        }
    }
    return groups;
}

/// Lookahead value: operators scheduled within the horizon, and the groups
/// spent doing so. More operators win; on ties, fewer groups win.
struct Score {
    int ops = 0;
    int groups = 0;

    bool better_than(const Score& o) const {
        return ops != o.ops ? ops > o.ops : groups < o.groups;
    }
};

struct TreePlanner {
    const DependencyGraph& graph;
    const MergeMatrix& mm;
    std::map<std::pair<int, Bits>, Score> memo;

    /// Best achievable over the next `depth` groups from `done`.
    Score lookahead(const Bits& done, int depth) {
        if (depth <= 0) return {};
        std::vector<int> avail = runnable_ops(graph, done);
        if (avail.empty()) return {};
        auto key = std::make_pair(depth, done);
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;
        Score best{-1, 0};
        for (const auto& g : partition_runnable(mm, avail)) {
            Bits next = done;
            for (int o : g) bit_set(next, o);
            Score s = lookahead(next, depth - 1);
            s.ops += static_cast<int>(g.size());
            s.groups += 1;
            if (s.better_than(best)) best = s;
        }
        memo.emplace(std::move(key), best);
        return best;
    }
};

}  // namespace

Plan plan_tree_search(const std::vector<Signal>& signals,
                      const std::vector<Operator>& ops, int depth) {
    if (depth < 1) throw BuildError("planner search depth must be at least 1");
    DependencyGraph graph = build_dependency_graph(signals, ops);
    MergeMatrix mm = build_merge_matrix(signals, ops);
    TreePlanner planner{graph, mm, {}};

    int n = static_cast<int>(ops.size());
    Bits done((n + 63) / 64, 0);
    int scheduled = 0;
    Plan plan;
    while (scheduled < n) {
        std::vector<int> avail = runnable_ops(graph, done);
        auto groups = partition_runnable(mm, avail);
        int best_gi = 0;
        Score best_val{-1, 0};
        size_t best_size = 0;
        for (size_t gi = 0; gi < groups.size(); ++gi) {
            Bits next = done;
            for (int o : groups[gi]) bit_set(next, o);
            Score val = planner.lookahead(next, depth - 1);
            val.ops += static_cast<int>(groups[gi].size());
            val.groups += 1;
            if (val.better_than(best_val) ||
                (val.ops == best_val.ops && val.groups == best_val.groups &&
                 groups[gi].size() > best_size)) {
                best_gi = static_cast<int>(gi);
                best_val = val;
                best_size = groups[gi].size();
            }
        }
        OpGroup group;
        for (int o : groups[best_gi]) {
            group.members.push_back(ops[o].id);
            bit_set(done, o);
        }
        scheduled += static_cast<int>(group.members.size());
        plan.push_back(std::move(group));
    }
    return plan;
}

Plan plan_greedy(const std::vector<Signal>& signals,
                 const std::vector<Operator>& ops) {
    return plan_tree_search(signals, ops, 1);
}

void validate_plan(const std::vector<Signal>& signals,
                   const std::vector<Operator>& ops, const Plan& plan) {
    DependencyGraph graph = build_dependency_graph(signals, ops);
    std::vector<int> group_of(ops.size(), -1);
    for (size_t gi = 0; gi < plan.size(); ++gi) {
        for (OpId id : plan[gi].members) {
            auto it = graph.index.find(id);
            if (it == graph.index.end())
                throw BuildError("plan names operator " + std::to_string(id) +
                                 " which does not exist");
            if (group_of[it->second] != -1)
                throw BuildError("plan schedules operator " + std::to_string(id) +
                                 " twice");
            group_of[it->second] = static_cast<int>(gi);
        }
    }
    for (size_t i = 0; i < ops.size(); ++i)
        if (group_of[i] == -1)
            throw BuildError("plan is missing operator " + std::to_string(ops[i].id));
    for (size_t i = 0; i < graph.node_count(); ++i)
        for (int j : graph.succ[i])
            if (group_of[i] >= group_of[j])
                throw BuildError("plan schedules operator " +
                                 std::to_string(graph.op_ids[j]) +
                                 " no later than its dependency " +
                                 std::to_string(graph.op_ids[i]));
}

namespace {

struct UnionFind {
    std::vector<int> parent;

    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }

    int find(int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

}  // namespace

BufferAssignment create_base_buffers(const std::vector<Signal>& signals,
                                     const std::vector<Operator>& ops,
                                     const Plan& plan) {
    int nsig = static_cast<int>(signals.size());
    UnionFind uf(nsig);

    std::unordered_map<OpId, const Operator*> by_id;
    for (const Operator& op : ops) by_id.emplace(op.id, &op);

    for (const OpGroup& g : plan) {
        if (g.members.size() < 2) continue;
        const Operator& first = *by_id.at(g.members[0]);
        for (size_t m = 1; m < g.members.size(); ++m) {
            const Operator& other = *by_id.at(g.members[m]);
            for (size_t p = 0; p < first.operands.size(); ++p)
                uf.unite(first.operands[p].signal, other.operands[p].signal);
        }
    }

    BufferAssignment out;
    out.buffer_of.assign(nsig, -1);
    out.row_offset.assign(nsig, 0);
    for (int s = 0; s < nsig; ++s) {
        int root = uf.find(s);
        if (out.buffer_of[root] == -1) {
            out.buffer_of[root] = static_cast<int>(out.buffers.size());
            BufferDesc desc;
            desc.trailing = signals[root].trailing_shape();
            desc.elem = signals[root].elem;
            desc.minibatched = signals[root].minibatched;
            desc.trainable = signals[root].trainable;
            out.buffers.push_back(std::move(desc));
        }
        int bi = out.buffer_of[root];
        out.buffer_of[s] = bi;
        BufferDesc& desc = out.buffers[bi];
        if (signals[s].trailing_shape() != desc.trailing ||
            signals[s].elem != desc.elem || signals[s].minibatched != desc.minibatched ||
            signals[s].trainable != desc.trainable)
            throw BuildError("signals " + signals[root].label + " and " +
                             signals[s].label + " share a buffer but not a row layout");
        out.row_offset[s] = desc.rows;
        desc.rows += signals[s].rows();
        desc.order.push_back(s);
    }
    return out;
}

std::vector<ReadBlock> collect_read_blocks(const std::vector<Operator>& ops,
                                           const Plan& plan,
                                           const BufferAssignment& buffers) {
    std::unordered_map<OpId, const Operator*> by_id;
    for (const Operator& op : ops) by_id.emplace(op.id, &op);

    std::vector<ReadBlock> blocks;
    for (size_t gi = 0; gi < plan.size(); ++gi) {
        const OpGroup& g = plan[gi];
        const Operator& first = *by_id.at(g.members[0]);
        for (int p : read_positions(first)) {
            ReadBlock b;
            b.id = static_cast<int>(blocks.size());
            b.group = static_cast<int>(gi);
            b.position = p;
            b.buffer = buffers.buffer_of[first.operands[p].signal];
            for (OpId id : g.members) b.refs.push_back(by_id.at(id)->operands[p]);
            blocks.push_back(std::move(b));
        }
    }
    return blocks;
}

namespace {

struct MetaBlock {
    std::vector<int> sigs;       // layout order within the span
    std::vector<int> block_ids;  // sorted: the read blocks touching these signals
};

int block_rows(const std::vector<ReadBlock>& blocks, int id) {
    return blocks[id].total_rows();
}

/// Pick the block with the most rows (ties to the lowest id).
int largest_block(const std::vector<ReadBlock>& blocks, const std::vector<int>& ids) {
    int best = ids.front();
    for (int id : ids)
        if (block_rows(blocks, id) > block_rows(blocks, best)) best = id;
    return best;
}

bool contains_block(const MetaBlock& m, int block) {
    return std::binary_search(m.block_ids.begin(), m.block_ids.end(), block);
}

bool subset_of(const std::vector<int>& a, const std::vector<int>& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

size_t sym_diff_size(const std::vector<int>& a, const std::vector<int>& b) {
    size_t inter = 0;
    auto ia = a.begin();
    for (int x : b) {
        while (ia != a.end() && *ia < x) ++ia;
        if (ia != a.end() && *ia == x) ++inter;
    }
    return a.size() + b.size() - 2 * inter;
}

/// Order the meta-blocks of one buffer so that, as far as possible, each
/// read block's signals end up adjacent: start from the block covering the
/// most rows and repeatedly append the remaining meta-block most similar to
/// the last one placed.
std::vector<int> order_meta_blocks(const std::vector<MetaBlock>& metas,
                                   const std::vector<ReadBlock>& blocks,
                                   const std::vector<int>& buffer_blocks) {
    int a = largest_block(blocks, buffer_blocks);
    int c = -1;
    for (size_t mi = 0; mi < metas.size(); ++mi)
        if (contains_block(metas[mi], a)) {
            c = static_cast<int>(mi);
            break;
        }
    if (c == -1) c = 0;  // only write-only spans reference the buffer

    std::vector<int> order{c};
    std::vector<int> remaining;
    for (size_t mi = 0; mi < metas.size(); ++mi)
        if (static_cast<int>(mi) != c) remaining.push_back(static_cast<int>(mi));

    while (!remaining.empty()) {
        std::vector<int> x;
        for (int m : remaining)
            if (contains_block(metas[m], a)) x.push_back(m);
        if (x.empty()) {
            x = remaining;
            if (!metas[c].block_ids.empty())
                a = largest_block(blocks, metas[c].block_ids);
        }
        std::vector<int> y;
        for (int m : x)
            if (subset_of(metas[c].block_ids, metas[m].block_ids)) y.push_back(m);
        if (y.empty()) y = x;

        size_t best_diff = SIZE_MAX;
        for (int m : y)
            best_diff = std::min(best_diff,
                                 sym_diff_size(metas[m].block_ids, metas[c].block_ids));
        std::vector<int> z;
        for (int m : y)
            if (sym_diff_size(metas[m].block_ids, metas[c].block_ids) == best_diff)
                z.push_back(m);
        if (z.size() > 1) {
            // break ties with the larger read blocks of the current span
            std::vector<int> c_blocks = metas[c].block_ids;
            std::sort(c_blocks.begin(), c_blocks.end(), [&](int l, int r) {
                int rl = block_rows(blocks, l), rr = block_rows(blocks, r);
                return rl != rr ? rl > rr : l < r;
            });
            for (int m : c_blocks) {
                std::vector<int> z2;
                for (int zi : z)
                    if (contains_block(metas[zi], m)) z2.push_back(zi);
                if (!z2.empty()) z = std::move(z2);
                if (z.size() == 1) break;
            }
        }
        int chosen = z.front();
        order.push_back(chosen);
        remaining.erase(std::find(remaining.begin(), remaining.end(), chosen));
        c = chosen;
    }
    return order;
}

}  // namespace

void sort_buffers(const std::vector<Signal>& signals, Plan& plan,
                  BufferAssignment& buffers, std::vector<ReadBlock>& blocks) {
    int nsig = static_cast<int>(buffers.buffer_of.size());

    // Memberships: which read blocks touch each signal.
    std::vector<std::vector<int>> membership(nsig);
    for (const ReadBlock& b : blocks)
        for (const SignalRef& r : b.refs) membership[r.signal].push_back(b.id);
    for (auto& m : membership) m.erase(std::unique(m.begin(), m.end()), m.end());

    // Meta-blocks per buffer: signals sharing a membership set move as one
    // span. Scanned in ascending signal id for a deterministic numbering.
    std::vector<std::vector<MetaBlock>> metas(buffers.buffers.size());
    for (size_t bi = 0; bi < buffers.buffers.size(); ++bi) {
        std::vector<int> sigs = buffers.buffers[bi].order;
        std::sort(sigs.begin(), sigs.end());
        std::map<std::vector<int>, int> index;
        for (int s : sigs) {
            auto [it, fresh] =
                index.try_emplace(membership[s], static_cast<int>(metas[bi].size()));
            if (fresh) metas[bi].push_back({{}, membership[s]});
            metas[bi][it->second].sigs.push_back(s);
        }
    }

    std::vector<std::vector<int>> buffer_blocks(buffers.buffers.size());
    for (const ReadBlock& b : blocks) buffer_blocks[b.buffer].push_back(b.id);

    // Rebuild a buffer's layout (order and offsets) from its meta-block order.
    std::vector<std::vector<int>> meta_order(buffers.buffers.size());
    auto rebuild = [&](size_t bi) {
        BufferDesc& desc = buffers.buffers[bi];
        desc.order.clear();
        int row = 0;
        for (int mi : meta_order[bi])
            for (int s : metas[bi][mi].sigs) {
                desc.order.push_back(s);
                buffers.row_offset[s] = row;
                row += signals[s].rows();
            }
    };

    // Phase one: order the meta-block spans of every buffer.
    for (size_t bi = 0; bi < buffers.buffers.size(); ++bi) {
        if (buffer_blocks[bi].empty() || metas[bi].size() < 2) {
            meta_order[bi].resize(metas[bi].size());
            std::iota(meta_order[bi].begin(), meta_order[bi].end(), 0);
            if (!meta_order[bi].empty()) rebuild(bi);
            continue;
        }
        meta_order[bi] = order_meta_blocks(metas[bi], blocks, buffer_blocks[bi]);
        rebuild(bi);
    }

    // Phase two: interleave. Repeatedly align group member order with each
    // block's physical layout, then signals within spans with member order,
    // from the smallest block to the largest, until a full pass changes
    // nothing.
    std::vector<int> by_size(blocks.size());
    std::iota(by_size.begin(), by_size.end(), 0);
    std::sort(by_size.begin(), by_size.end(), [&](int l, int r) {
        int rl = block_rows(blocks, l), rr = block_rows(blocks, r);
        return rl != rr ? rl < rr : l < r;
    });

    std::vector<std::vector<int>> group_blocks(plan.size());
    for (const ReadBlock& b : blocks) group_blocks[b.group].push_back(b.id);

    for (int pass = 0; pass < 10; ++pass) {
        bool changed = false;
        for (int bid : by_size) {
            ReadBlock& b = blocks[bid];
            OpGroup& g = plan[b.group];
            size_t k = g.members.size();

            // Align member order with the block's current physical order.
            std::vector<int> perm(k);
            std::iota(perm.begin(), perm.end(), 0);
            auto first_row = [&](int m) {
                const SignalRef& r = b.refs[m];
                return buffers.row_offset[r.signal] + r.start;
            };
            std::stable_sort(perm.begin(), perm.end(),
                             [&](int l, int r) { return first_row(l) < first_row(r); });
            bool identity = true;
            for (size_t m = 0; m < k; ++m) identity &= perm[m] == static_cast<int>(m);
            if (!identity) {
                std::vector<OpId> members(k);
                for (size_t m = 0; m < k; ++m) members[m] = g.members[perm[m]];
                g.members = std::move(members);
                for (int cid : group_blocks[b.group]) {
                    std::vector<SignalRef> refs;
                    refs.reserve(k);
                    for (size_t m = 0; m < k; ++m)
                        refs.push_back(blocks[cid].refs[perm[m]]);
                    blocks[cid].refs = std::move(refs);
                }
                changed = true;
            }

            // Align signals with member order inside each span this group reads.
            for (int cid : group_blocks[b.group]) {
                const ReadBlock& c = blocks[cid];
                std::vector<int> first_member(nsig, -1);
                for (size_t m = 0; m < c.refs.size(); ++m) {
                    int s = c.refs[m].signal;
                    if (first_member[s] == -1) first_member[s] = static_cast<int>(m);
                }
                bool moved = false;
                for (MetaBlock& meta : metas[c.buffer]) {
                    if (!contains_block(meta, cid)) continue;
                    std::vector<int> sorted = meta.sigs;
                    std::stable_sort(sorted.begin(), sorted.end(), [&](int l, int r) {
                        return first_member[l] < first_member[r];
                    });
                    if (sorted != meta.sigs) {
                        meta.sigs = std::move(sorted);
                        moved = true;
                    }
                }
                if (moved) {
                    rebuild(c.buffer);
                    changed = true;
                }
            }
        }
        if (!changed) break;
    }
}

ContiguityStats contiguity_stats(const std::vector<ReadBlock>& blocks,
                                 const BufferAssignment& buffers, const Plan& plan) {
    ContiguityStats stats;
    stats.groups_per_step = static_cast<int>(plan.size());
    if (blocks.empty()) return stats;
    int contiguous = 0;
    for (const ReadBlock& b : blocks) {
        bool ok = true;
        int expected = buffers.row_offset[b.refs[0].signal] + b.refs[0].start;
        for (const SignalRef& r : b.refs) {
            int first = buffers.row_offset[r.signal] + r.start;
            if (first != expected) {
                ok = false;
                break;
            }
            expected = first + r.rows();
        }
        if (ok)
            ++contiguous;
        else
            stats.gather_row_count += b.total_rows();
    }
    stats.contiguous_read_fraction =
        static_cast<double>(contiguous) / static_cast<double>(blocks.size());
    return stats;
}

PlannedModel run_passes(BuiltModel model, const PipelineConfig& config) {
    if (config.simplify)
        model.operators = simplify_operators(model.signals, std::move(model.operators));

    Plan plan;
    if (!config.merge) {
        DependencyGraph graph = build_dependency_graph(model.signals, model.operators);
        for (OpId id : toposort_schedule(graph)) plan.push_back({{id}});
    } else {
        switch (config.planner) {
            case Planner::Greedy:
                plan = plan_greedy(model.signals, model.operators);
                break;
            case Planner::Tree:
                plan = plan_tree_search(model.signals, model.operators,
                                        config.tree_depth);
                break;
            case Planner::TransitiveClosure:
                throw BuildError(
                    "the transitive closure planner is reserved but not implemented");
        }
    }
    validate_plan(model.signals, model.operators, plan);

    BufferAssignment buffers = create_base_buffers(model.signals, model.operators, plan);
    std::vector<ReadBlock> blocks = collect_read_blocks(model.operators, plan, buffers);
    if (config.sort) sort_buffers(model.signals, plan, buffers, blocks);
    ContiguityStats stats = contiguity_stats(blocks, buffers, plan);

    return {std::move(model), std::move(plan), std::move(buffers), std::move(blocks),
            stats};
}

}  // namespace neng
