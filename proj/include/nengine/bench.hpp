#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "nengine/exec.hpp"
#include "nengine/frontend.hpp"
#include "nengine/passes.hpp"

/// The three standard benchmark models and the ablation harness: build a
/// network, compile it under a pipeline configuration, time build and
/// steady-state run separately, and report the structural layout metrics.
namespace neng {

struct BenchmarkSpec {
    std::string name = "integrator";  // integrator | cconv | pes
    int dims = 4;
    int neurons_per_dim = 50;
    int steps = 1000;
    double dt = 0.001;
    uint64_t seed = 1;
    int batch = 1;
    int unroll = 1;
};

/// A built benchmark: the lowered model, the feeds that drive it for
/// spec.steps steps, and the probe keys of its observable outputs.
struct BenchmarkSetup {
    BuiltModel model;
    FeedData feeds;
    std::vector<ProbeKey> outputs;
};

/// integrator: per-dimension recurrent memory units integrating a constant
///   drive (recurrent identity and input tau*identity, both through a
///   tau = 0.1 s lowpass).
/// cconv: circular convolution of two fed vectors through spectral transform
///   matrices and two-dimensional product ensembles.
/// pes: an ensemble whose decoded output starts at zero and is driven toward
///   a fed target by online error-proportional weight updates.
/// Throws BuildError for an unknown name or a non-positive dims/steps/batch.
BenchmarkSetup build_benchmark(const BenchmarkSpec& spec);

struct BenchResult {
    BenchmarkSpec spec;
    PipelineConfig config;
    int operator_count = 0;  // as compiled, after any rewrites
    ContiguityStats stats;
    double build_time_s = 0.0;
    double run_time_s = 0.0;
    // engine vs interpreter max abs probe error; NaN when unchecked
    double correctness_max_err = std::numeric_limits<double>::quiet_NaN();
};

/// Builds, compiles, runs once for warm-up, then times a full run. With
/// `check` the same model and feeds also go through the interpreter and the
/// worst elementwise probe error is recorded.
BenchResult run_bench(const BenchmarkSpec& spec, const PipelineConfig& config,
                      bool check = false);

/// The cumulative optimization ladder, one result per rung:
///   merge (greedy, unroll 1) -> +unroll -> +tree planner -> +sort -> +simplify.
/// Rungs after the first use spec.unroll when it exceeds 1, otherwise 10.
std::vector<BenchResult> ablation_suite(const BenchmarkSpec& base, bool check = false,
                                        int tree_depth = 3);

std::string bench_csv_header();
std::string bench_csv_row(const BenchResult& r);

}  // namespace neng
