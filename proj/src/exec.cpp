#include "nengine/exec.hpp"

#include <algorithm>
#include <unordered_map>

#include "nengine/neuron_math.hpp"

namespace neng {

template <class T>
EngineCore<T>::EngineCore(PlannedModel planned, int batch, int unroll)
    : planned_(std::move(planned)), batch_(batch), unroll_(unroll) {
    if (batch_ < 1) throw BuildError("engine batch size must be at least 1");
    if (unroll_ < 1) throw BuildError("engine unroll factor must be at least 1");
    compile();
}

template <class T>
typename EngineCore<T>::Arg EngineCore<T>::resolve(const SignalRef& ref) const {
    int bi = planned_.buffers.buffer_of[ref.signal];
    long long epr = epr_[bi];
    return {bi,
            (planned_.buffers.row_offset[ref.signal] + ref.start) * epr,
            static_cast<long long>(ref.rows()) * epr};
}

namespace {

/// Members whose slices sit back to back in one buffer, in member order.
template <class Arg>
bool sequential(const std::vector<Arg>& args) {
    for (size_t i = 1; i < args.size(); ++i) {
        if (args[i].buffer != args[0].buffer) return false;
        if (args[i].offset != args[i - 1].offset + args[i - 1].elems) return false;
    }
    return true;
}

}  // namespace

template <class T>
void EngineCore<T>::compile() {
    const BuiltModel& model = planned_.model;
    const BufferAssignment& ba = planned_.buffers;
    size_t nbuf = ba.buffers.size();

    epr_.resize(nbuf);
    for (size_t bi = 0; bi < nbuf; ++bi) {
        int epr = 1;
        for (int d : ba.buffers[bi].trailing) epr *= d;
        epr_[bi] = epr;
    }

    // Online-learned weights diverge across batch entries; store their whole
    // buffer once per entry.
    std::vector<char> promoted(nbuf, 0);
    for (const Operator& op : model.operators)
        if (op.kind == OpKind::SimPES)
            promoted[ba.buffer_of[op.operands[2].signal]] = 1;

    store_.resize(nbuf);
    pristine_at_.resize(nbuf);
    for (size_t bi = 0; bi < nbuf; ++bi) {
        Buffer& buf = store_[bi];
        buf.span = static_cast<long long>(ba.buffers[bi].rows) * epr_[bi];
        bool per_batch = ba.buffers[bi].minibatched || promoted[bi];
        buf.stride = per_batch ? buf.span : 0;
        buf.data.assign(static_cast<size_t>(buf.span) * (per_batch ? batch_ : 1), T(0));
        pristine_at_[bi] = static_cast<long long>(pristine_.size());
        pristine_.resize(pristine_.size() + buf.span, T(0));
    }
    for (const Signal& s : model.signals) {
        if (s.initial.empty()) continue;
        int bi = ba.buffer_of[s.id];
        long long base = pristine_at_[bi] +
                         static_cast<long long>(ba.row_offset[s.id]) * epr_[bi];
        for (size_t k = 0; k < s.initial.size(); ++k)
            pristine_[base + k] = static_cast<T>(s.initial[k]);
    }

    std::unordered_map<OpId, const Operator*> by_id;
    for (const Operator& op : model.operators) by_id.emplace(op.id, &op);

    for (const OpGroup& g : planned_.plan) {
        const Operator& first = *by_id.at(g.members[0]);
        Instr ins;
        ins.kind = first.kind;
        ins.inc = first.inc;
        ins.dt = static_cast<T>(model.dt);
        switch (first.kind) {
            case OpKind::SimNeurons:
                ins.neuron = first.neuron.kind;
                ins.tau_rc = static_cast<T>(first.neuron.tau_rc);
                ins.tau_ref = static_cast<T>(first.neuron.tau_ref);
                ins.amplitude = static_cast<T>(first.neuron.amplitude);
                break;
            case OpKind::SimProcess: {
                LowpassCoeff c = lowpass_coefficients(first.tau, model.dt);
                ins.tau_a = static_cast<T>(c.a);
                ins.tau_b = static_cast<T>(c.b);
                break;
            }
            case OpKind::SimPES:
                ins.pes_rate = first.learning_rate;
                break;
            default:
                break;
        }

        for (OpId id : g.members) {
            const Operator& op = *by_id.at(id);
            Member m;
            for (size_t p = 0; p < op.operands.size(); ++p)
                m.a[p] = resolve(op.operands[p]);
            if (op.kind == OpKind::Reset) {
                m.value_at = static_cast<long long>(ins.values.size());
                for (double v : op.value) ins.values.push_back(static_cast<T>(v));
            }
            ins.members.push_back(m);
        }

        for (auto [idx, mode] : operand_modes(first))
            if (mode != AccessMode::Read &&
                store_[ins.members[0].a[idx].buffer].stride > 0)
                ins.per_batch = true;

        // Collapse copies and resets whose slices line up into single spans.
        if (first.kind == OpKind::Copy || first.kind == OpKind::Reset) {
            std::vector<Arg> srcs, dsts;
            for (const Member& m : ins.members) {
                if (first.kind == OpKind::Copy) {
                    srcs.push_back(m.a[0]);
                    dsts.push_back(m.a[1]);
                } else {
                    dsts.push_back(m.a[0]);
                }
            }
            if (sequential(dsts) && (first.kind == OpKind::Reset || sequential(srcs))) {
                long long total = 0;
                for (const Arg& a : dsts) total += a.elems;
                ins.fused = true;
                ins.fused_dst = {dsts[0].buffer, dsts[0].offset, total};
                if (first.kind == OpKind::Copy)
                    ins.fused_src = {srcs[0].buffer, srcs[0].offset, total};
            }
        }
        instrs_.push_back(std::move(ins));
    }

    for (const FeedSlot& slot : model.feed_slots)
        feed_bindings_.push_back(
            {slot.node_id, resolve(SignalRef::full(model.signals[slot.signal])),
             slot.dim});
    for (const ProbeRegistration& p : model.probes) {
        Arg arg = resolve(SignalRef::full(model.signals[p.signal]));
        probe_bindings_.push_back({p.key, arg,
                                   static_cast<int>(model.signals[p.signal].size()),
                                   store_[arg.buffer].stride > 0});
    }

    reset();
}

template <class T>
void EngineCore<T>::reset() {
    for (size_t bi = 0; bi < store_.size(); ++bi) {
        Buffer& buf = store_[bi];
        int copies = buf.stride > 0 ? batch_ : 1;
        auto img = pristine_.begin() + pristine_at_[bi];
        for (int c = 0; c < copies; ++c)
            std::copy(img, img + buf.span, buf.data.begin() + c * buf.span);
    }
    steps_done_ = 0;
}

template <class T>
void EngineCore<T>::exec(const Instr& ins, int b) {
    switch (ins.kind) {
        case OpKind::Reset: {
            if (ins.fused) {
                std::copy(ins.values.begin(), ins.values.end(), ptr(ins.fused_dst, b));
                break;
            }
            for (const Member& m : ins.members)
                std::copy(ins.values.begin() + m.value_at,
                          ins.values.begin() + m.value_at + m.a[0].elems, ptr(m.a[0], b));
            break;
        }
        case OpKind::Copy: {
            if (ins.fused) {
                const T* src = ptr(ins.fused_src, b);
                T* dst = ptr(ins.fused_dst, b);
                long long n = ins.fused_dst.elems;
                if (ins.inc)
                    for (long long i = 0; i < n; ++i) dst[i] += src[i];
                else
                    std::copy(src, src + n, dst);
                break;
            }
            for (const Member& m : ins.members) {
                const T* src = ptr(m.a[0], b);
                T* dst = ptr(m.a[1], b);
                long long n = m.a[0].elems;
                if (ins.inc)
                    for (long long i = 0; i < n; ++i) dst[i] += src[i];
                else
                    std::copy(src, src + n, dst);
            }
            break;
        }
        case OpKind::ElementwiseInc: {
            for (const Member& m : ins.members) {
                const T* a = ptr(m.a[0], b);
                const T* x = ptr(m.a[1], b);
                T* y = ptr(m.a[2], b);
                long long n = m.a[1].elems;
                if (m.a[0].elems == 1) {
                    T s = a[0];
                    for (long long i = 0; i < n; ++i) y[i] += s * x[i];
                } else {
                    for (long long i = 0; i < n; ++i) y[i] += a[i] * x[i];
                }
            }
            break;
        }
        case OpKind::DotInc: {
            for (const Member& m : ins.members) {
                const T* a = ptr(m.a[0], b);
                const T* x = ptr(m.a[1], b);
                T* y = ptr(m.a[2], b);
                long long n = m.a[1].elems, rows = m.a[2].elems;
                for (long long r = 0; r < rows; ++r) {
                    T acc = T(0);
                    const T* row = a + r * n;
                    for (long long k = 0; k < n; ++k) acc += row[k] * x[k];
                    y[r] += acc;
                }
            }
            break;
        }
        case OpKind::SimNeurons: {
            for (const Member& m : ins.members) {
                const T* j = ptr(m.a[0], b);
                T* out = ptr(m.a[1], b);
                long long n = m.a[0].elems;
                if (ins.neuron == NeuronKind::LIF) {
                    T* v = ptr(m.a[2], b);
                    T* r = ptr(m.a[3], b);
                    for (long long i = 0; i < n; ++i) {
                        LifState<T> s = lif_spike_step(j[i], v[i], r[i], ins.dt,
                                                       ins.tau_rc, ins.tau_ref,
                                                       ins.amplitude);
                        out[i] = s.out;
                        v[i] = s.voltage;
                        r[i] = s.refractory;
                    }
                } else if (ins.neuron == NeuronKind::LIFRate) {
                    for (long long i = 0; i < n; ++i)
                        out[i] = ins.amplitude * lif_rate_t(j[i], ins.tau_rc, ins.tau_ref);
                } else {
                    for (long long i = 0; i < n; ++i)
                        out[i] = relu_rate(j[i], ins.amplitude);
                }
            }
            break;
        }
        case OpKind::SimProcess: {
            for (const Member& m : ins.members) {
                const T* in = ptr(m.a[0], b);
                T* out = ptr(m.a[1], b);
                long long n = m.a[0].elems;
                if (ins.members[0].a[2].elems > 0) {
                    T* st = ptr(m.a[2], b);
                    for (long long i = 0; i < n; ++i) {
                        T f = lowpass_step(ins.tau_a, ins.tau_b, st[i], in[i]);
                        st[i] = f;
                        out[i] = f;
                    }
                } else {
                    std::copy(in, in + n, out);
                }
            }
            break;
        }
        case OpKind::SimPES: {
            for (const Member& m : ins.members) {
                const T* act = ptr(m.a[0], b);
                const T* err = ptr(m.a[1], b);
                T* w = ptr(m.a[2], b);
                long long n = m.a[0].elems, d = m.a[1].elems;
                T scale = static_cast<T>(ins.pes_rate * planned_.model.dt /
                                         static_cast<double>(n));
                for (long long r = 0; r < d; ++r) {
                    T row_scale = scale * err[r];
                    for (long long k = 0; k < n; ++k) w[r * n + k] -= row_scale * act[k];
                }
            }
            break;
        }
        case OpKind::TimeUpdate: {
            for (const Member& m : ins.members) {
                T* step = ptr(m.a[0], b);
                T* time = ptr(m.a[1], b);
                T next = step[0] + T(1);
                step[0] = next;
                time[0] = next * ins.dt;
            }
            break;
        }
    }
}

template <class T>
void EngineCore<T>::write_feeds(const FeedData& feeds, int run_step) {
    for (const FeedBinding& fb : feed_bindings_) {
        auto it = feeds.find(fb.node_id);
        if (it == feeds.end()) continue;
        const Tensor3& t = it->second;
        int copies = store_[fb.arg.buffer].stride > 0 ? batch_ : 1;
        for (int b = 0; b < copies; ++b) {
            T* dst = ptr(fb.arg, b);
            for (int d = 0; d < fb.dim; ++d)
                dst[d] = static_cast<T>(t.at(b, run_step, d));
        }
    }
}

template <class T>
void EngineCore<T>::capture_probes(ProbeOutput& out, int run_step) const {
    for (const ProbeBinding& pb : probe_bindings_) {
        Tensor3& t = out.at(pb.key);
        for (int b = 0; b < batch_; ++b) {
            const T* src = ptr(pb.arg, pb.per_batch ? b : 0);
            for (int d = 0; d < pb.dim; ++d)
                t.at(b, run_step, d) = static_cast<double>(src[d]);
        }
    }
}

template <class T>
ProbeOutput EngineCore<T>::run(int n_steps, const FeedData& feeds) {
    if (n_steps <= 0) throw RunError("n_steps must be positive");
    validate_feeds(planned_.model, feeds, n_steps, batch_);

    ProbeOutput out;
    for (const ProbeRegistration& p : planned_.model.probes)
        out.emplace(p.key,
                    Tensor3(batch_, n_steps,
                            static_cast<int>(planned_.model.signals[p.signal].size())));

    int done = 0;
    while (done < n_steps) {
        int chunk = std::min(unroll_, n_steps - done);
        for (int k = 0; k < chunk; ++k) {
            write_feeds(feeds, done + k);
            for (const Instr& ins : instrs_) {
                int copies = ins.per_batch ? batch_ : 1;
                for (int b = 0; b < copies; ++b) exec(ins, b);
            }
            capture_probes(out, done + k);
        }
        done += chunk;
    }
    steps_done_ += n_steps;
    return out;
}

template <class T>
std::vector<double> EngineCore<T>::read_signal(SignalId sig, int batch_index) const {
    if (sig < 0 || sig >= static_cast<int>(planned_.model.signals.size()))
        throw RunError("read_signal: no such signal");
    if (batch_index < 0 || batch_index >= batch_)
        throw RunError("read_signal: batch index out of range");
    Arg arg = resolve(SignalRef::full(planned_.model.signals[sig]));
    const T* src = ptr(arg, store_[arg.buffer].stride > 0 ? batch_index : 0);
    return std::vector<double>(src, src + arg.elems);
}

template class EngineCore<double>;
template class EngineCore<float>;

}  // namespace neng
