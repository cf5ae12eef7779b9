#pragma once

#include <cstdint>
#include <vector>

#include "nengine/model.hpp"
#include "nengine/passes.hpp"

/// The optimizing executor: compiles a planned model into a flat instruction
/// list over shared base buffers and steps it. One instruction runs a whole
/// operator group; all writes happen in place, which is safe because the
/// plan schedules every reader of a signal ahead of the operator that
/// updates it.
namespace neng {

enum class StorageMode { Shared, PerBatch };

template <class T>
class EngineCore {
  public:
    /// Compiles the planned model. `batch` is the number of model instances
    /// advanced together: minibatched signals (and buffers holding online-
    /// learned weights, which diverge across instances) get one copy per
    /// batch entry, everything else is stored once and shared.
    explicit EngineCore(PlannedModel planned, int batch = 1, int unroll = 1);

    /// Advance n_steps, writing feeds at the start of each step and capturing
    /// probes after it. Feed tensors are indexed by step within this call.
    /// Simulation state, including the clock, persists across calls; running
    /// a+b steps in two calls matches one call of a+b steps exactly.
    ProbeOutput run(int n_steps, const FeedData& feeds = {});

    /// Restore every buffer to its initial image and rewind the clock.
    void reset();

    int batch() const { return batch_; }
    int unroll() const { return unroll_; }
    int steps_completed() const { return steps_done_; }
    const PlannedModel& planned() const { return planned_; }

    StorageMode buffer_storage(int buffer) const {
        return store_[buffer].stride > 0 ? StorageMode::PerBatch : StorageMode::Shared;
    }

    /// Current values of one signal for one batch entry. Shared signals
    /// return the same values for every batch index.
    std::vector<double> read_signal(SignalId sig, int batch_index = 0) const;

  private:
    struct Buffer {
        std::vector<T> data;
        long long span = 0;    // elements per copy
        long long stride = 0;  // elements between batch copies (0 when shared)
    };

    /// One operand of one group member, resolved to buffer coordinates.
    struct Arg {
        int buffer = 0;
        long long offset = 0;  // elements from the start of a copy
        long long elems = 0;
    };

    struct Member {
        Arg a[4];
        long long value_at = 0;  // reset values: offset into Instr::values
    };

    struct Instr {
        OpKind kind;
        bool per_batch = false;
        bool inc = false;
        bool fused = false;  // contiguous copy/reset collapsed to one span
        T dt{}, tau_a{}, tau_b{}, tau_rc{}, tau_ref{}, amplitude{};
        double pes_rate = 0.0;
        NeuronKind neuron = NeuronKind::LIF;
        std::vector<Member> members;
        std::vector<T> values;  // concatenated reset payloads
        Arg fused_src, fused_dst;
    };

    T* ptr(const Arg& a, int b) {
        Buffer& buf = store_[a.buffer];
        return buf.data.data() + b * buf.stride + a.offset;
    }
    const T* ptr(const Arg& a, int b) const {
        const Buffer& buf = store_[a.buffer];
        return buf.data.data() + b * buf.stride + a.offset;
    }

    Arg resolve(const SignalRef& ref) const;
    void compile();
    void exec(const Instr& instr, int b);
    void write_feeds(const FeedData& feeds, int run_step);
    void capture_probes(ProbeOutput& out, int run_step) const;

    PlannedModel planned_;
    int batch_ = 1;
    int unroll_ = 1;
    int steps_done_ = 0;

    std::vector<Buffer> store_;
    std::vector<T> pristine_;             // one copy of every buffer, concatenated
    std::vector<long long> pristine_at_;  // per buffer: offset into pristine_
    std::vector<int> epr_;                // per buffer: elements per row
    std::vector<Instr> instrs_;

    struct FeedBinding {
        int node_id = 0;
        Arg arg;
        int dim = 0;
    };
    struct ProbeBinding {
        ProbeKey key = 0;
        Arg arg;
        int dim = 0;
        bool per_batch = false;
    };
    std::vector<FeedBinding> feed_bindings_;
    std::vector<ProbeBinding> probe_bindings_;
};

extern template class EngineCore<double>;
extern template class EngineCore<float>;

using Engine = EngineCore<double>;

}  // namespace neng
