#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nengine/model.hpp"

/// User-facing model API: networks of ensembles, nodes, connections and
/// probes, lowered to the signal/operator representation. Includes the
/// ensemble parameter math (rate curves, gain/bias solving, least-squares
/// decoders).
namespace neng {

/// Deterministic splitmix64 stream; used for all model parameter sampling so
/// that builds are reproducible independent of the standard library's
/// distribution implementations.
class Rng {
  public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64();
    double uniform();                       // [0, 1)
    double uniform(double lo, double hi);   // [lo, hi)
    double gaussian();                      // standard normal (Box-Muller)

  private:
    uint64_t state_;
};

/// Child stream k of a base seed (stable across builds).
uint64_t derive_seed(uint64_t base, uint64_t stream);

struct GainBias {
    double gain = 0.0;
    double bias = 0.0;
};

/// Per-neuron input scaling so that the rate curve passes through zero at
/// `intercept` and reaches `max_rate` at the edge of the represented range.
/// LIF requires max_rate < 1/tau_ref.
GainBias gain_bias(double max_rate, double intercept, const NeuronModel& neuron);

/// Regularized least squares: D solves (AᵀA + m·σ²I)·D = AᵀY with
/// σ = reg·max|A|. A is (m×n) row-major, Y is (m×d) row-major; returns D as
/// (n×d) row-major. reg=0 on a singular system throws BuildError.
std::vector<double> solve_decoders(const std::vector<double>& A, int m, int n,
                                   const std::vector<double>& Y, int d,
                                   double reg = 0.1);

struct EnsembleOptions {
    double radius = 1.0;
    NeuronModel neuron{};  // spiking LIF by default
    double max_rate_lo = 200.0, max_rate_hi = 400.0;
    double intercept_lo = -1.0, intercept_hi = 1.0;
    int eval_points_per_dim = 500;
};

/// Sampled per-neuron tuning parameters (deterministic in the seed).
struct EnsembleParameters {
    std::vector<double> encoders;  // n_neurons × dimensions row-major, unit rows
    std::vector<double> max_rates, intercepts, gain, bias;
};

EnsembleParameters sample_ensemble_parameters(int n_neurons, int dimensions,
                                              const EnsembleOptions& opts,
                                              uint64_t seed);

struct EnsembleHandle {
    int id = -1;
};
struct NodeHandle {
    int id = -1;
};
struct NeuronsHandle {
    int id = -1;  // ensemble id
};

/// A connection or probe endpoint: a node's output, an ensemble's
/// represented value, or an ensemble's raw neuron activities.
struct Endpoint {
    enum class Kind { Node, Ensemble, Neurons };
    Kind kind;
    int id;

    Endpoint(NodeHandle n) : kind(Kind::Node), id(n.id) {}
    Endpoint(EnsembleHandle e) : kind(Kind::Ensemble), id(e.id) {}
    Endpoint(NeuronsHandle n) : kind(Kind::Neurons), id(n.id) {}
};

using VectorFn = std::function<std::vector<double>(const std::vector<double>&)>;

struct ConnectionOptions {
    /// Scalar transform t (t·identity) or an explicit (dest_dim × value_dim)
    /// matrix; at most one of the two, default identity.
    std::optional<double> scalar_transform;
    std::optional<std::vector<std::vector<double>>> matrix_transform;
    double synapse = 0.005;  // lowpass tau in seconds; 0 = unfiltered
    VectorFn function;       // decoded ensemble sources only
    int function_dim = 0;    // function output size (0 = source dimensions)
    /// Online error-driven decoder learning. Requires an ensemble source
    /// with identity transform and an error-supplying node.
    std::optional<double> pes_learning_rate;
    std::optional<NodeHandle> pes_error;
};

class Network {
  public:
    explicit Network(uint64_t seed = 0, double dt = 0.001);

    EnsembleHandle ensemble(int n_neurons, int dimensions, EnsembleOptions opts = {});
    NodeHandle constant_node(std::vector<double> output);
    NodeHandle feedable_node(int dim);  // no default output: a feed is mandatory
    NodeHandle feedable_node(std::vector<double> default_output);
    NodeHandle passthrough_node(int dim);  // sums its inputs
    NeuronsHandle neurons(EnsembleHandle e) const { return {e.id}; }

    int connect(Endpoint source, Endpoint dest, ConnectionOptions opts = {});
    ProbeKey probe(Endpoint target, std::string label = "");

    /// Lower the network to signals and operators. Deterministic: identical
    /// networks and seeds produce identical models.
    BuiltModel build() const;

    double dt() const { return dt_; }
    uint64_t seed() const { return seed_; }

  private:
    enum class NodeKind { Constant, Feedable, Passthrough };

    struct EnsembleDef {
        int n_neurons = 0, dimensions = 0;
        EnsembleOptions opts;
    };
    struct NodeDef {
        NodeKind kind = NodeKind::Constant;
        int dim = 0;
        std::vector<double> output;  // constant value or feedable default
        bool has_default = true;
    };
    struct ConnectionDef {
        Endpoint source, dest;
        ConnectionOptions opts;
    };
    struct ProbeDef {
        Endpoint target;
        std::string label;
    };

    int endpoint_dim(const Endpoint& e) const;
    void check_endpoint(const Endpoint& e, const std::string& what) const;

    uint64_t seed_;
    double dt_;
    std::vector<EnsembleDef> ensembles_;
    std::vector<NodeDef> nodes_;
    std::vector<ConnectionDef> connections_;
    std::vector<ProbeDef> probes_;

    friend class Lowering;
};

}  // namespace neng
