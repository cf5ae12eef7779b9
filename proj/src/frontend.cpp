#include "nengine/frontend.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "nengine/neuron_math.hpp"

namespace neng {

namespace {
constexpr double kTwoPi = 6.283185307179586;
}

uint64_t Rng::next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::gaussian() {
    double u1 = uniform(), u2 = uniform();
    // 1 - u1 ∈ (0, 1], keeps the log finite
    return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(kTwoPi * u2);
}

uint64_t derive_seed(uint64_t base, uint64_t stream) {
    Rng mix(base ^ (stream * 0x9E3779B97F4A7C15ULL + 0xD1B54A32D192ED03ULL));
    return mix.next_u64();
}

GainBias gain_bias(double max_rate, double intercept, const NeuronModel& neuron) {
    if (!(max_rate > 0.0)) throw BuildError("gain_bias: max_rate must be positive");
    if (!(intercept < 1.0)) throw BuildError("gain_bias: intercept must be < 1");
    if (neuron.kind == NeuronKind::RectifiedLinear) {
        double gain = max_rate / (1.0 - intercept);
        return {gain, -gain * intercept};
    }
    if (neuron.tau_ref > 0.0 && max_rate >= 1.0 / neuron.tau_ref) {
        std::ostringstream os;
        os << "gain_bias: max_rate " << max_rate << " is not reachable (limit 1/tau_ref = "
           << 1.0 / neuron.tau_ref << ")";
        throw BuildError(os.str());
    }
    double z = 1.0 / (1.0 - std::exp((neuron.tau_ref - 1.0 / max_rate) / neuron.tau_rc));
    double gain = (z - 1.0) / (1.0 - intercept);
    return {gain, 1.0 - gain * intercept};
}

std::vector<double> solve_decoders(const std::vector<double>& A, int m, int n,
                                   const std::vector<double>& Y, int d, double reg) {
    if (m < 1 || n < 1 || d < 1) throw BuildError("solve_decoders: empty system");
    if (static_cast<int>(A.size()) != m * n || static_cast<int>(Y.size()) != m * d)
        throw BuildError("solve_decoders: array sizes do not match (m, n, d)");
    if (reg < 0.0) throw BuildError("solve_decoders: reg must be non-negative");

    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const RowMat> a(A.data(), m, n);
    Eigen::Map<const RowMat> y(Y.data(), m, d);

    double sigma = reg * a.cwiseAbs().maxCoeff();
    Eigen::MatrixXd gram = a.transpose() * a;
    gram.diagonal().array() += static_cast<double>(m) * sigma * sigma;

    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success)
        throw BuildError("solve_decoders: singular normal equations (reg too small)");
    RowMat decoders = llt.solve(a.transpose() * y);
    return std::vector<double>(decoders.data(), decoders.data() + n * d);
}

EnsembleParameters sample_ensemble_parameters(int n_neurons, int dimensions,
                                              const EnsembleOptions& opts,
                                              uint64_t seed) {
    if (n_neurons < 1) throw BuildError("ensemble needs at least one neuron");
    if (dimensions < 1) throw BuildError("ensemble needs at least one dimension");
    if (!(opts.radius > 0.0)) throw BuildError("ensemble radius must be positive");
    if (opts.max_rate_lo > opts.max_rate_hi || opts.intercept_lo > opts.intercept_hi)
        throw BuildError("ensemble sampling interval is inverted");

    Rng rng(seed);
    EnsembleParameters p;
    p.encoders.resize(static_cast<size_t>(n_neurons) * dimensions);
    for (int i = 0; i < n_neurons; ++i) {
        double* row = p.encoders.data() + static_cast<size_t>(i) * dimensions;
        double norm_sq = 0.0;
        for (int k = 0; k < dimensions; ++k) {
            row[k] = rng.gaussian();
            norm_sq += row[k] * row[k];
        }
        if (norm_sq < 1e-24) {
            for (int k = 0; k < dimensions; ++k) row[k] = k == 0 ? 1.0 : 0.0;
        } else {
            double inv = 1.0 / std::sqrt(norm_sq);
            for (int k = 0; k < dimensions; ++k) row[k] *= inv;
        }
    }
    p.max_rates.reserve(n_neurons);
    p.intercepts.reserve(n_neurons);
    for (int i = 0; i < n_neurons; ++i)
        p.max_rates.push_back(rng.uniform(opts.max_rate_lo, opts.max_rate_hi));
    for (int i = 0; i < n_neurons; ++i)
        p.intercepts.push_back(rng.uniform(opts.intercept_lo, opts.intercept_hi));
    p.gain.reserve(n_neurons);
    p.bias.reserve(n_neurons);
    for (int i = 0; i < n_neurons; ++i) {
        GainBias gb = gain_bias(p.max_rates[i], p.intercepts[i], opts.neuron);
        p.gain.push_back(gb.gain);
        p.bias.push_back(gb.bias);
    }
    return p;
}

// ---------------------------------------------------------------------------

Network::Network(uint64_t seed, double dt) : seed_(seed), dt_(dt) {
    if (!(dt > 0.0)) throw BuildError("network dt must be positive");
}

EnsembleHandle Network::ensemble(int n_neurons, int dimensions, EnsembleOptions opts) {
    if (n_neurons < 1 || dimensions < 1)
        throw BuildError("ensemble needs at least one neuron and one dimension");
    if (!(opts.radius > 0.0)) throw BuildError("ensemble radius must be positive");
    if (opts.eval_points_per_dim < 1)
        throw BuildError("ensemble needs at least one eval point per dimension");
    ensembles_.push_back({n_neurons, dimensions, std::move(opts)});
    return {static_cast<int>(ensembles_.size()) - 1};
}

NodeHandle Network::constant_node(std::vector<double> output) {
    if (output.empty()) throw BuildError("constant node output must be non-empty");
    int dim = static_cast<int>(output.size());
    nodes_.push_back({NodeKind::Constant, dim, std::move(output), true});
    return {static_cast<int>(nodes_.size()) - 1};
}

NodeHandle Network::feedable_node(int dim) {
    if (dim < 1) throw BuildError("feedable node dimension must be positive");
    nodes_.push_back({NodeKind::Feedable, dim, {}, false});
    return {static_cast<int>(nodes_.size()) - 1};
}

NodeHandle Network::feedable_node(std::vector<double> default_output) {
    if (default_output.empty()) throw BuildError("feedable node default must be non-empty");
    int dim = static_cast<int>(default_output.size());
    nodes_.push_back({NodeKind::Feedable, dim, std::move(default_output), true});
    return {static_cast<int>(nodes_.size()) - 1};
}

NodeHandle Network::passthrough_node(int dim) {
    if (dim < 1) throw BuildError("passthrough node dimension must be positive");
    nodes_.push_back({NodeKind::Passthrough, dim, {}, true});
    return {static_cast<int>(nodes_.size()) - 1};
}

void Network::check_endpoint(const Endpoint& e, const std::string& what) const {
    bool is_node = e.kind == Endpoint::Kind::Node;
    int limit = is_node ? static_cast<int>(nodes_.size())
                        : static_cast<int>(ensembles_.size());
    if (e.id < 0 || e.id >= limit)
        throw BuildError(what + " refers to an object that is not in the network");
}

int Network::endpoint_dim(const Endpoint& e) const {
    switch (e.kind) {
        case Endpoint::Kind::Node: return nodes_[e.id].dim;
        case Endpoint::Kind::Ensemble: return ensembles_[e.id].dimensions;
        case Endpoint::Kind::Neurons: return ensembles_[e.id].n_neurons;
    }
    return 0;
}

int Network::connect(Endpoint source, Endpoint dest, ConnectionOptions opts) {
    std::string tag = "connection " + std::to_string(connections_.size());
    check_endpoint(source, tag + " source");
    check_endpoint(dest, tag + " destination");
    if (dest.kind == Endpoint::Kind::Node &&
        nodes_[dest.id].kind != NodeKind::Passthrough)
        throw BuildError(tag + ": destination node is not a passthrough node");
    if (opts.scalar_transform && opts.matrix_transform)
        throw BuildError(tag + ": give either a scalar or a matrix transform, not both");
    if (!(opts.synapse >= 0.0)) throw BuildError(tag + ": synapse tau must be >= 0");
    bool decoded = source.kind == Endpoint::Kind::Ensemble;
    if (opts.function && !decoded)
        throw BuildError(tag + ": functions require an ensemble source");
    if (opts.function_dim < 0 || (opts.function_dim > 0 && !opts.function))
        throw BuildError(tag + ": function_dim requires a function");

    int value_dim = decoded ? (opts.function && opts.function_dim > 0
                                   ? opts.function_dim
                                   : ensembles_[source.id].dimensions)
                            : endpoint_dim(source);
    int dest_dim = endpoint_dim(dest);
    if (opts.matrix_transform) {
        const auto& t = *opts.matrix_transform;
        if (t.empty() || static_cast<int>(t.size()) != dest_dim)
            throw BuildError(tag + ": transform has " + std::to_string(t.size()) +
                             " rows, destination expects " + std::to_string(dest_dim));
        for (const auto& row : t)
            if (static_cast<int>(row.size()) != value_dim)
                throw BuildError(tag + ": transform has a row of length " +
                                 std::to_string(row.size()) + ", source value has size " +
                                 std::to_string(value_dim));
    } else if (dest_dim != value_dim) {
        throw BuildError(tag + ": source value has size " + std::to_string(value_dim) +
                         " but destination expects " + std::to_string(dest_dim));
    }

    if (opts.pes_learning_rate) {
        if (!(*opts.pes_learning_rate > 0.0))
            throw BuildError(tag + ": learning rate must be positive");
        if (!decoded) throw BuildError(tag + ": learning requires an ensemble source");
        if (opts.matrix_transform ||
            (opts.scalar_transform && *opts.scalar_transform != 1.0))
            throw BuildError(tag + ": learning requires an identity transform");
        if (!opts.pes_error) throw BuildError(tag + ": learning requires an error node");
        int err = opts.pes_error->id;
        if (err < 0 || err >= static_cast<int>(nodes_.size()))
            throw BuildError(tag + ": error node is not in the network");
        if (nodes_[err].dim != value_dim)
            throw BuildError(tag + ": error node has size " +
                             std::to_string(nodes_[err].dim) +
                             ", learned value has size " + std::to_string(value_dim));
    } else if (opts.pes_error) {
        throw BuildError(tag + ": an error node requires a learning rate");
    }

    connections_.push_back({source, dest, std::move(opts)});
    return static_cast<int>(connections_.size()) - 1;
}

ProbeKey Network::probe(Endpoint target, std::string label) {
    check_endpoint(target, "probe " + std::to_string(probes_.size()));
    probes_.push_back({target, std::move(label)});
    return static_cast<int>(probes_.size()) - 1;
}

// ---------------------------------------------------------------------------

namespace {

double activity_rate(const NeuronModel& nm, double j) {
    if (nm.kind == NeuronKind::RectifiedLinear) return relu_rate(j, nm.amplitude);
    return nm.amplitude * lif_rate_t(j, nm.tau_rc, nm.tau_ref);
}

}  // namespace

class Lowering {
  public:
    explicit Lowering(const Network& net) : net_(net) { model_.dt = net.dt(); }

    BuiltModel run();

  private:
    struct EnsLowered {
        SignalId in = -1, j = -1, out = -1;
        EnsembleParameters params;
    };

    SignalId add_signal(std::string label, std::vector<int> shape,
                        std::vector<double> initial, bool constant, bool minibatched,
                        bool trainable) {
        Signal s;
        s.id = static_cast<int>(model_.signals.size());
        s.label = std::move(label);
        s.shape = std::move(shape);
        s.initial = std::move(initial);
        s.constant = constant;
        s.minibatched = minibatched;
        s.trainable = trainable;
        model_.signals.push_back(std::move(s));
        return model_.signals.back().id;
    }

    OpId next_op() { return static_cast<int>(model_.operators.size()); }

    SignalRef full(SignalId id) const {
        return SignalRef::full(model_.signals[id]);
    }

    void lower_ensemble(int i);
    void lower_node(int i);
    void lower_connection(int i);
    void lower_probe(int i);

    /// Least-squares decoders for one ensemble and an optional function;
    /// evaluation points are drawn from a per-ensemble stream, so repeated
    /// solves for the same (ensemble, function) are bit-identical.
    std::vector<double> decode(int ens_id, const VectorFn& fn, int fn_dim,
                               const std::string& tag);

    const Network& net_;
    BuiltModel model_;
    std::vector<EnsLowered> ens_;
    std::vector<SignalId> node_out_;
};

void Lowering::lower_ensemble(int i) {
    const auto& def = net_.ensembles_[i];
    int n = def.n_neurons, d = def.dimensions;
    std::string base = "ens" + std::to_string(i);

    EnsLowered low;
    low.params = sample_ensemble_parameters(
        n, d, def.opts, derive_seed(net_.seed(), 2 * static_cast<uint64_t>(i)));

    low.in = add_signal(base + ".in", {d}, {}, false, true, false);
    low.j = add_signal(base + ".J", {n}, {}, false, true, false);
    low.out = add_signal(base + ".out", {n}, {}, false, true, false);

    std::vector<double> scaled(low.params.encoders);
    for (int r = 0; r < n; ++r)
        for (int k = 0; k < d; ++k)
            scaled[static_cast<size_t>(r) * d + k] *= low.params.gain[r] / def.opts.radius;
    SignalId enc = add_signal(base + ".encoders", {n, d}, std::move(scaled), true, false,
                              true);

    model_.operators.push_back(
        Operator::reset(next_op(), full(low.in), std::vector<double>(d, 0.0)));
    model_.operators.push_back(Operator::reset(next_op(), full(low.j), low.params.bias));
    model_.operators.push_back(
        Operator::dot_inc(next_op(), full(enc), full(low.in), full(low.j)));

    std::vector<SignalRef> states;
    if (def.opts.neuron.has_state()) {
        SignalId v = add_signal(base + ".voltage", {n}, {}, false, true, false);
        SignalId r = add_signal(base + ".refractory", {n}, {}, false, true, false);
        states = {full(v), full(r)};
    }
    model_.operators.push_back(Operator::sim_neurons(next_op(), def.opts.neuron,
                                                     full(low.j), full(low.out),
                                                     std::move(states)));
    ens_.push_back(std::move(low));
}

void Lowering::lower_node(int i) {
    const auto& def = net_.nodes_[i];
    std::string base = "node" + std::to_string(i);
    switch (def.kind) {
        case Network::NodeKind::Constant:
            node_out_.push_back(
                add_signal(base + ".out", {def.dim}, def.output, true, false, false));
            break;
        case Network::NodeKind::Feedable: {
            SignalId out = add_signal(base + ".out", {def.dim}, def.output, false, true,
                                      false);
            node_out_.push_back(out);
            model_.feed_slots.push_back({i, out, def.dim, def.has_default, base});
            break;
        }
        case Network::NodeKind::Passthrough: {
            SignalId out =
                add_signal(base + ".out", {def.dim}, {}, false, true, false);
            node_out_.push_back(out);
            model_.operators.push_back(Operator::reset(
                next_op(), full(out), std::vector<double>(def.dim, 0.0)));
            break;
        }
    }
}

std::vector<double> Lowering::decode(int ens_id, const VectorFn& fn, int fn_dim,
                                     const std::string& tag) {
    const auto& def = net_.ensembles_[ens_id];
    const EnsembleParameters& p = ens_[ens_id].params;
    int n = def.n_neurons, d = def.dimensions;
    int m = def.opts.eval_points_per_dim * d;

    Rng rng(derive_seed(net_.seed(), 2 * static_cast<uint64_t>(ens_id) + 1));
    std::vector<double> points(static_cast<size_t>(m) * d);
    for (int s = 0; s < m; ++s) {
        double* x = points.data() + static_cast<size_t>(s) * d;
        double norm_sq = 0.0;
        for (int k = 0; k < d; ++k) {
            x[k] = rng.gaussian();
            norm_sq += x[k] * x[k];
        }
        double r = def.opts.radius * std::pow(rng.uniform(), 1.0 / d);
        double scale = norm_sq < 1e-24 ? 0.0 : r / std::sqrt(norm_sq);
        for (int k = 0; k < d; ++k) x[k] *= scale;
    }

    std::vector<double> acts(static_cast<size_t>(m) * n);
    for (int s = 0; s < m; ++s) {
        const double* x = points.data() + static_cast<size_t>(s) * d;
        for (int i = 0; i < n; ++i) {
            const double* e = p.encoders.data() + static_cast<size_t>(i) * d;
            double dot = 0.0;
            for (int k = 0; k < d; ++k) dot += e[k] * x[k];
            double j = p.gain[i] * dot / def.opts.radius + p.bias[i];
            acts[static_cast<size_t>(s) * n + i] = activity_rate(def.opts.neuron, j);
        }
    }

    std::vector<double> targets(static_cast<size_t>(m) * fn_dim);
    for (int s = 0; s < m; ++s) {
        const double* x = points.data() + static_cast<size_t>(s) * d;
        if (fn) {
            std::vector<double> y = fn(std::vector<double>(x, x + d));
            if (static_cast<int>(y.size()) != fn_dim)
                throw BuildError(tag + ": function returned " + std::to_string(y.size()) +
                                 " values, expected " + std::to_string(fn_dim));
            std::copy(y.begin(), y.end(),
                      targets.begin() + static_cast<size_t>(s) * fn_dim);
        } else {
            std::copy(x, x + d, targets.begin() + static_cast<size_t>(s) * fn_dim);
        }
    }
    return solve_decoders(acts, m, n, targets, fn_dim);
}

void Lowering::lower_connection(int i) {
    const auto& def = net_.connections_[i];
    const ConnectionOptions& opts = def.opts;
    std::string base = "conn" + std::to_string(i);

    bool decoded = def.source.kind == Endpoint::Kind::Ensemble;
    int value_dim = decoded ? (opts.function && opts.function_dim > 0
                                   ? opts.function_dim
                                   : net_.ensembles_[def.source.id].dimensions)
                            : net_.endpoint_dim(def.source);
    int dest_dim = net_.endpoint_dim(def.dest);

    SignalId src_sig = def.source.kind == Endpoint::Kind::Node
                           ? node_out_[def.source.id]
                           : ens_[def.source.id].out;

    SignalId dest_sig = -1;
    switch (def.dest.kind) {
        case Endpoint::Kind::Node: dest_sig = node_out_[def.dest.id]; break;
        case Endpoint::Kind::Ensemble: dest_sig = ens_[def.dest.id].in; break;
        case Endpoint::Kind::Neurons: dest_sig = ens_[def.dest.id].j; break;
    }

    SignalId accum = add_signal(base + ".accum", {dest_dim}, {}, false, true, false);
    model_.operators.push_back(
        Operator::reset(next_op(), full(accum), std::vector<double>(dest_dim, 0.0)));

    bool learned = opts.pes_learning_rate.has_value();
    SignalId weights = -1;
    if (decoded) {
        int n = net_.ensembles_[def.source.id].n_neurons;
        std::vector<double> dec = decode(def.source.id, opts.function, value_dim, base);
        // fold transform into the decoder readout: W = T·Dᵀ, (dest_dim × n)
        std::vector<double> w(static_cast<size_t>(dest_dim) * n, 0.0);
        if (opts.matrix_transform) {
            const auto& t = *opts.matrix_transform;
            for (int r = 0; r < dest_dim; ++r)
                for (int c = 0; c < value_dim; ++c) {
                    double trc = t[r][c];
                    if (trc == 0.0) continue;
                    for (int k = 0; k < n; ++k)
                        w[static_cast<size_t>(r) * n + k] +=
                            trc * dec[static_cast<size_t>(k) * value_dim + c];
                }
        } else {
            double scale = opts.scalar_transform.value_or(1.0);
            for (int r = 0; r < dest_dim; ++r)
                for (int k = 0; k < n; ++k)
                    w[static_cast<size_t>(r) * n + k] =
                        scale * dec[static_cast<size_t>(k) * value_dim + r];
        }
        weights = add_signal(base + ".weights", {dest_dim, n}, std::move(w), !learned,
                             false, true);
        model_.operators.push_back(
            Operator::dot_inc(next_op(), full(weights), full(src_sig), full(accum)));
    } else if (opts.matrix_transform) {
        std::vector<double> w;
        w.reserve(static_cast<size_t>(dest_dim) * value_dim);
        for (const auto& row : *opts.matrix_transform)
            w.insert(w.end(), row.begin(), row.end());
        weights = add_signal(base + ".weights", {dest_dim, value_dim}, std::move(w), true,
                             false, true);
        model_.operators.push_back(
            Operator::dot_inc(next_op(), full(weights), full(src_sig), full(accum)));
    } else if (opts.scalar_transform) {
        SignalId scale = add_signal(base + ".scale", {1}, {*opts.scalar_transform}, true,
                                    false, true);
        model_.operators.push_back(Operator::elementwise_inc(next_op(), full(scale),
                                                             full(src_sig), full(accum)));
    } else {
        // default transform: identity weight matrix, the canonical lowering
        std::vector<double> w(static_cast<size_t>(dest_dim) * value_dim, 0.0);
        for (int r = 0; r < dest_dim; ++r) w[static_cast<size_t>(r) * value_dim + r] = 1.0;
        weights = add_signal(base + ".weights", {dest_dim, value_dim}, std::move(w), true,
                             false, true);
        model_.operators.push_back(
            Operator::dot_inc(next_op(), full(weights), full(src_sig), full(accum)));
    }

    SignalId copied = accum;
    if (opts.synapse > 0.0) {
        SignalId filtered =
            add_signal(base + ".filtered", {dest_dim}, {}, false, true, false);
        SignalId state = add_signal(base + ".state", {dest_dim}, {}, false, true, false);
        model_.operators.push_back(Operator::sim_process(next_op(), opts.synapse,
                                                         full(accum), full(filtered),
                                                         full(state)));
        copied = filtered;
    }
    model_.operators.push_back(
        Operator::copy(next_op(), full(copied), full(dest_sig), true));

    if (learned) {
        SignalId err = node_out_[opts.pes_error->id];
        model_.operators.push_back(Operator::sim_pes(next_op(), *opts.pes_learning_rate,
                                                     full(ens_[def.source.id].out),
                                                     full(err), full(weights)));
    }
}

void Lowering::lower_probe(int i) {
    const auto& def = net_.probes_[i];
    std::string label = def.label.empty() ? "probe" + std::to_string(i) : def.label;
    switch (def.target.kind) {
        case Endpoint::Kind::Node:
            model_.probes.push_back({i, node_out_[def.target.id], label});
            break;
        case Endpoint::Kind::Neurons:
            model_.probes.push_back({i, ens_[def.target.id].out, label});
            break;
        case Endpoint::Kind::Ensemble: {
            int d = net_.ensembles_[def.target.id].dimensions;
            int n = net_.ensembles_[def.target.id].n_neurons;
            std::string base = "probe" + std::to_string(i);
            std::vector<double> dec = decode(def.target.id, nullptr, d, base);
            // transpose to the (d × n) readout layout
            std::vector<double> w(static_cast<size_t>(d) * n);
            for (int r = 0; r < d; ++r)
                for (int k = 0; k < n; ++k)
                    w[static_cast<size_t>(r) * n + k] = dec[static_cast<size_t>(k) * d + r];
            SignalId wsig = add_signal(base + ".decoders", {d, n}, std::move(w), true,
                                       false, true);
            SignalId out = add_signal(base + ".out", {d}, {}, false, true, false);
            model_.operators.push_back(
                Operator::reset(next_op(), full(out), std::vector<double>(d, 0.0)));
            model_.operators.push_back(Operator::dot_inc(
                next_op(), full(wsig), full(ens_[def.target.id].out), full(out)));
            model_.probes.push_back({i, out, label});
            break;
        }
    }
}

BuiltModel Lowering::run() {
    SignalId step = add_signal("step", {1}, {}, false, false, false);
    SignalId time = add_signal("time", {1}, {}, false, false, false);
    model_.operators.push_back(
        Operator::time_update(next_op(), model_.dt, full(step), full(time)));

    for (size_t i = 0; i < net_.ensembles_.size(); ++i) lower_ensemble(static_cast<int>(i));
    for (size_t i = 0; i < net_.nodes_.size(); ++i) lower_node(static_cast<int>(i));
    for (size_t i = 0; i < net_.connections_.size(); ++i)
        lower_connection(static_cast<int>(i));
    for (size_t i = 0; i < net_.probes_.size(); ++i) lower_probe(static_cast<int>(i));

    validate_operators(model_.signals, model_.operators);
    build_dependency_graph(model_.signals, model_.operators);  // rejects conflicts/cycles
    return std::move(model_);
}

BuiltModel Network::build() const { return Lowering(*this).run(); }

}  // namespace neng
