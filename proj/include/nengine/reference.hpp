#pragma once

#include <optional>

#include "nengine/model.hpp"

/// Reference interpreter: executes operators one at a time on dense
/// per-signal arrays, with no merging, buffer sharing or layout machinery.
/// Serves as the correctness oracle for the optimizing executor.
namespace neng {

/// Run `n_steps` of the model in double precision. Operators execute in
/// deterministic topological order; update-phase writes are double-buffered
/// and committed at the end of each step. Batch elements run as independent
/// sequential simulations. Probes capture after each step.
ProbeOutput run_reference(const BuiltModel& model, int n_steps, const FeedData& feeds = {},
                          int minibatch = 1);

struct CompareReport {
    double max_abs_err = 0.0;
    double max_rel_err = 0.0;
    bool within_tolerance = true;

    struct Divergence {
        ProbeKey probe = -1;
        int batch = 0, step = 0, dim = 0;
        double a = 0.0, b = 0.0;
    };
    std::optional<Divergence> first_divergence;
};

/// Elementwise comparison of two probe outputs. An element diverges when
/// |a - b| > abs_tol + rel_tol * max(|a|, |b|). Throws RunError if the two
/// outputs have different probes or trace shapes.
CompareReport compare(const ProbeOutput& a, const ProbeOutput& b, double rel_tol,
                      double abs_tol);

}  // namespace neng
