#include "nengine/reference.hpp"

#include <cmath>

#include "nengine/neuron_math.hpp"

namespace neng {

namespace {

struct PendingUpdate {
    SignalRef ref;
    std::vector<double> values;
};

class Interpreter {
  public:
    Interpreter(const BuiltModel& model, const std::vector<OpId>& order)
        : model_(model) {
        for (size_t i = 0; i < model.signals.size(); ++i) {
            if (model.signals[i].id != static_cast<int>(i))
                throw StructuralError("signals must be id-indexed");
        }
        std::map<OpId, const Operator*> by_id;
        for (const Operator& op : model.operators) by_id[op.id] = &op;
        for (OpId id : order) ops_.push_back(by_id.at(id));
    }

    void reset_state() {
        state_.clear();
        for (const Signal& s : model_.signals) {
            std::vector<double> v(static_cast<size_t>(s.size()), 0.0);
            if (!s.initial.empty()) v = s.initial;
            state_.push_back(std::move(v));
        }
    }

    void write_feed_row(const FeedSlot& slot, const Tensor3& t, int b, int step) {
        std::vector<double>& sig = state_[slot.signal];
        for (int d = 0; d < slot.dim; ++d) sig[d] = t.at(b, step, d);
    }

    void step() {
        pending_.clear();
        for (const Operator* op : ops_) execute(*op);
        for (PendingUpdate& p : pending_) {
            const Signal& s = model_.signals[p.ref.signal];
            size_t base = static_cast<size_t>(p.ref.start) * s.elems_per_row();
            std::copy(p.values.begin(), p.values.end(), state_[p.ref.signal].begin() + base);
        }
    }

    const std::vector<double>& values(SignalId sid) const { return state_[sid]; }

  private:
    std::pair<const double*, long long> read_region(const SignalRef& r) const {
        const Signal& s = model_.signals[r.signal];
        long long epr = s.elems_per_row();
        return {state_[r.signal].data() + r.start * epr, r.rows() * epr};
    }

    std::pair<double*, long long> write_region(const SignalRef& r) {
        const Signal& s = model_.signals[r.signal];
        long long epr = s.elems_per_row();
        return {state_[r.signal].data() + r.start * epr, r.rows() * epr};
    }

    std::vector<double>& stage_update(const SignalRef& r) {
        auto [src, n] = read_region(r);
        pending_.push_back({r, std::vector<double>(src, src + n)});
        return pending_.back().values;
    }

    void execute(const Operator& op) {
        switch (op.kind) {
            case OpKind::Reset: {
                auto [dst, n] = write_region(op.operands[0]);
                std::copy(op.value.begin(), op.value.end(), dst);
                (void)n;
                break;
            }
            case OpKind::Copy: {
                auto [src, n] = read_region(op.operands[0]);
                auto [dst, m] = write_region(op.operands[1]);
                (void)m;
                if (op.inc)
                    for (long long i = 0; i < n; ++i) dst[i] += src[i];
                else
                    std::copy(src, src + n, dst);
                break;
            }
            case OpKind::ElementwiseInc: {
                auto [a, na] = read_region(op.operands[0]);
                auto [x, n] = read_region(op.operands[1]);
                auto [y, m] = write_region(op.operands[2]);
                (void)m;
                if (na == 1)
                    for (long long i = 0; i < n; ++i) y[i] += a[0] * x[i];
                else
                    for (long long i = 0; i < n; ++i) y[i] += a[i] * x[i];
                break;
            }
            case OpKind::DotInc: {
                auto [a, na] = read_region(op.operands[0]);
                auto [x, n] = read_region(op.operands[1]);
                auto [y, m] = write_region(op.operands[2]);
                (void)na;
                for (long long r = 0; r < m; ++r) {
                    double acc = 0.0;
                    for (long long k = 0; k < n; ++k) acc += a[r * n + k] * x[k];
                    y[r] += acc;
                }
                break;
            }
            case OpKind::SimNeurons: {
                auto [j, n] = read_region(op.operands[0]);
                auto [out, m] = write_region(op.operands[1]);
                (void)m;
                const NeuronModel& nm = op.neuron;
                if (nm.kind == NeuronKind::LIF) {
                    auto [v_old, nv] = read_region(op.operands[2]);
                    auto [r_old, nr] = read_region(op.operands[3]);
                    (void)nv;
                    (void)nr;
                    std::vector<double>& v_new = stage_update(op.operands[2]);
                    std::vector<double>& r_new = stage_update(op.operands[3]);
                    for (long long i = 0; i < n; ++i) {
                        LifState<double> s = lif_spike_step(j[i], v_old[i], r_old[i],
                                                            model_.dt, nm.tau_rc, nm.tau_ref,
                                                            nm.amplitude);
                        out[i] = s.out;
                        v_new[i] = s.voltage;
                        r_new[i] = s.refractory;
                    }
                } else if (nm.kind == NeuronKind::LIFRate) {
                    for (long long i = 0; i < n; ++i)
                        out[i] = nm.amplitude * lif_rate_t(j[i], nm.tau_rc, nm.tau_ref);
                } else {
                    for (long long i = 0; i < n; ++i)
                        out[i] = relu_rate(j[i], nm.amplitude);
                }
                break;
            }
            case OpKind::SimProcess: {
                auto [in, n] = read_region(op.operands[0]);
                if (op.tau > 0.0) {
                    auto [st, ns] = read_region(op.operands[2]);
                    (void)ns;
                    LowpassCoeff c = lowpass_coefficients(op.tau, model_.dt);
                    std::vector<double>& out_new = stage_update(op.operands[1]);
                    std::vector<double>& st_new = stage_update(op.operands[2]);
                    for (long long i = 0; i < n; ++i) {
                        double filtered = lowpass_step(c.a, c.b, st[i], in[i]);
                        st_new[i] = filtered;
                        out_new[i] = filtered;
                    }
                } else {
                    auto [out, m] = write_region(op.operands[1]);
                    (void)m;
                    std::copy(in, in + n, out);
                }
                break;
            }
            case OpKind::SimPES: {
                auto [act, n] = read_region(op.operands[0]);
                auto [err, d] = read_region(op.operands[1]);
                std::vector<double>& w = stage_update(op.operands[2]);
                double scale = op.learning_rate * model_.dt / static_cast<double>(n);
                for (long long r = 0; r < d; ++r) {
                    double row_scale = scale * err[r];
                    for (long long k = 0; k < n; ++k) w[r * n + k] -= row_scale * act[k];
                }
                break;
            }
            case OpKind::TimeUpdate: {
                auto [step, n1] = read_region(op.operands[0]);
                (void)n1;
                double next = step[0] + 1.0;
                stage_update(op.operands[0])[0] = next;
                stage_update(op.operands[1])[0] = next * op.dt;
                break;
            }
        }
    }

    const BuiltModel& model_;
    std::vector<const Operator*> ops_;
    std::vector<std::vector<double>> state_;
    std::vector<PendingUpdate> pending_;
};

}  // namespace

ProbeOutput run_reference(const BuiltModel& model, int n_steps, const FeedData& feeds,
                          int minibatch) {
    if (n_steps <= 0) throw RunError("n_steps must be positive");
    if (minibatch <= 0) throw RunError("minibatch must be positive");
    validate_feeds(model, feeds, n_steps, minibatch);

    DependencyGraph graph = build_dependency_graph(model.signals, model.operators);
    std::vector<OpId> order = toposort_schedule(graph);
    Interpreter interp(model, order);

    ProbeOutput out;
    for (const ProbeRegistration& p : model.probes) {
        int dim = static_cast<int>(model.signals[p.signal].size());
        out.emplace(p.key, Tensor3(minibatch, n_steps, dim));
    }

    for (int b = 0; b < minibatch; ++b) {
        interp.reset_state();
        for (int k = 0; k < n_steps; ++k) {
            for (const FeedSlot& slot : model.feed_slots) {
                auto it = feeds.find(slot.node_id);
                if (it != feeds.end()) interp.write_feed_row(slot, it->second, b, k);
            }
            interp.step();
            for (const ProbeRegistration& p : model.probes) {
                Tensor3& t = out.at(p.key);
                const std::vector<double>& v = interp.values(p.signal);
                for (int d = 0; d < t.dim; ++d) t.at(b, k, d) = v[d];
            }
        }
    }
    return out;
}

CompareReport compare(const ProbeOutput& a, const ProbeOutput& b, double rel_tol,
                      double abs_tol) {
    if (a.size() != b.size()) throw RunError("compare: probe sets differ");
    CompareReport report;
    for (const auto& [key, ta] : a) {
        auto it = b.find(key);
        if (it == b.end()) throw RunError("compare: probe sets differ");
        const Tensor3& tb = it->second;
        if (ta.batch != tb.batch || ta.steps != tb.steps || ta.dim != tb.dim)
            throw RunError("compare: trace shapes differ for probe " + std::to_string(key));
        for (int bt = 0; bt < ta.batch; ++bt) {
            for (int s = 0; s < ta.steps; ++s) {
                for (int d = 0; d < ta.dim; ++d) {
                    double x = ta.at(bt, s, d), y = tb.at(bt, s, d);
                    double abs_err = std::abs(x - y);
                    double mag = std::max(std::abs(x), std::abs(y));
                    report.max_abs_err = std::max(report.max_abs_err, abs_err);
                    if (mag > 0.0)
                        report.max_rel_err = std::max(report.max_rel_err, abs_err / mag);
                    if (abs_err > abs_tol + rel_tol * mag) {
                        report.within_tolerance = false;
                        if (!report.first_divergence)
                            report.first_divergence =
                                CompareReport::Divergence{key, bt, s, d, x, y};
                    }
                }
            }
        }
    }
    return report;
}

}  // namespace neng
