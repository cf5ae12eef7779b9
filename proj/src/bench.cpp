#include "nengine/bench.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <utility>

#include "nengine/reference.hpp"

namespace neng {

namespace {

constexpr double kTwoPi = 6.283185307179586;

void validate_spec(const BenchmarkSpec& spec) {
    if (spec.dims < 1) throw BuildError("benchmark dims must be at least 1");
    if (spec.steps < 1) throw BuildError("benchmark steps must be at least 1");
    if (spec.batch < 1) throw BuildError("benchmark batch must be at least 1");
    if (spec.neurons_per_dim < 1)
        throw BuildError("benchmark neurons-per-dim must be at least 1");
}

/// Mild, deterministic per-batch variation that keeps values inside radii.
double batch_shrink(int b) { return 1.0 / (1.0 + 0.25 * b); }

Tensor3 constant_feed(int batch, int steps, const std::vector<double>& row,
                      bool vary_batch) {
    Tensor3 t(batch, steps, static_cast<int>(row.size()));
    for (int b = 0; b < batch; ++b) {
        double f = vary_batch ? batch_shrink(b) : 1.0;
        for (int s = 0; s < steps; ++s)
            for (size_t d = 0; d < row.size(); ++d)
                t.at(b, s, static_cast<int>(d)) = f * row[d];
    }
    return t;
}

/// One recurrent memory unit per dimension: du/dt = input. Input enters
/// through tau*selector with a tau lowpass, the identity feedback closes the
/// loop through the same filter, which cancels the filter pole and leaves a
/// near-ideal discrete integrator.
BenchmarkSetup build_integrator(const BenchmarkSpec& spec) {
    const double tau = 0.1;
    Network net(spec.seed, spec.dt);
    auto u = net.feedable_node(std::vector<double>(spec.dims, 0.0));

    BenchmarkSetup setup;
    EnsembleOptions opts;
    opts.radius = 1.2;  // headroom: the memory integrates up to 1.0
    for (int k = 0; k < spec.dims; ++k) {
        auto ens = net.ensemble(spec.neurons_per_dim, 1, opts);
        std::vector<std::vector<double>> select(1, std::vector<double>(spec.dims, 0.0));
        select[0][k] = tau;
        ConnectionOptions in;
        in.matrix_transform = select;
        in.synapse = tau;
        net.connect(u, ens, in);
        net.connect(ens, ens, {.synapse = tau});
        setup.outputs.push_back(net.probe(ens, "x" + std::to_string(k)));
    }

    std::vector<double> drive(spec.dims);
    for (int k = 0; k < spec.dims; ++k)
        drive[k] = 1.0 - 0.5 * k / std::max(1, spec.dims - 1);
    setup.feeds.emplace(u.id, constant_feed(spec.batch, spec.steps, drive, true));
    setup.model = net.build();
    return setup;
}

/// Circular convolution c = F*(sqrt(d) (Fa (.) Fb)) with the unitary DFT
/// realized as real cosine/sine matrices. Each spectral bin gets four 2-D
/// product ensembles (re*re, im*im, re*im, im*re). Inputs are pre-scaled by
/// s = 0.7 sqrt(d) so products use the representational range, and the
/// output transform divides the scale back out.
BenchmarkSetup build_cconv(const BenchmarkSpec& spec) {
    const int d = spec.dims;
    const double s = 0.7 * std::sqrt(static_cast<double>(d));
    const double root_d = std::sqrt(static_cast<double>(d));

    // unitary DFT, real part U and imaginary part V
    std::vector<std::vector<double>> U(d, std::vector<double>(d));
    std::vector<std::vector<double>> V(d, std::vector<double>(d));
    for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) {
            double angle = kTwoPi * ((static_cast<long long>(j) * k) % d) / d;
            U[j][k] = std::cos(angle) / root_d;
            V[j][k] = -std::sin(angle) / root_d;
        }

    Network net(spec.seed, spec.dt);
    auto a = net.feedable_node(std::vector<double>(d, 0.0));
    auto b = net.feedable_node(std::vector<double>(d, 0.0));
    auto c = net.passthrough_node(d);

    EnsembleOptions opts;
    opts.radius = std::sqrt(2.0);
    auto product = [](const std::vector<double>& x) {
        return std::vector<double>{x[0] * x[1]};
    };

    const double out_gain = root_d / (s * s);
    for (int j = 0; j < d; ++j) {
        // per bin: {a-side row, b-side row, output sign, output column matrix}
        const std::array<std::pair<const std::vector<double>*, const std::vector<double>*>, 4>
            sides = {{{&U[j], &U[j]}, {&V[j], &V[j]}, {&U[j], &V[j]}, {&V[j], &U[j]}}};
        for (int type = 0; type < 4; ++type) {
            auto ens = net.ensemble(2 * spec.neurons_per_dim, 2, opts);

            std::vector<std::vector<double>> from_a(2, std::vector<double>(d, 0.0));
            std::vector<std::vector<double>> from_b(2, std::vector<double>(d, 0.0));
            for (int k = 0; k < d; ++k) {
                from_a[0][k] = s * (*sides[type].first)[k];
                from_b[1][k] = s * (*sides[type].second)[k];
            }
            ConnectionOptions ca;
            ca.matrix_transform = from_a;
            ca.synapse = 0.0;
            net.connect(a, ens, ca);
            ConnectionOptions cb;
            cb.matrix_transform = from_b;
            cb.synapse = 0.0;
            net.connect(b, ens, cb);

            // re*re adds to Re(c^), im*im subtracts; the cross terms add to Im(c^)
            double sign = type == 1 ? -1.0 : 1.0;
            const std::vector<std::vector<double>>& basis = type < 2 ? U : V;
            std::vector<std::vector<double>> column(d, std::vector<double>(1));
            for (int k = 0; k < d; ++k) column[k][0] = sign * out_gain * basis[k][j];
            ConnectionOptions co;
            co.matrix_transform = column;
            co.synapse = 0.01;
            co.function = product;
            co.function_dim = 1;
            net.connect(ens, c, co);
        }
    }

    BenchmarkSetup setup;
    setup.outputs.push_back(net.probe(c, "c"));

    // a = first basis vector (convolution identity), b = a sparse two-impulse
    // vector, so c should reproduce b
    std::vector<double> feed_a(d, 0.0), feed_b(d, 0.0);
    feed_a[0] = 1.0;
    feed_b[1 % d] += 0.7;
    feed_b[std::min(3, d - 1)] += 0.5;
    double norm = 0.0;
    for (double v : feed_b) norm += v * v;
    for (double& v : feed_b) v *= 0.86 / std::sqrt(norm);
    setup.feeds.emplace(a.id, constant_feed(spec.batch, spec.steps, feed_a, true));
    setup.feeds.emplace(b.id, constant_feed(spec.batch, spec.steps, feed_b, true));
    setup.model = net.build();
    return setup;
}

/// An ensemble whose decoded output connection starts at zero and learns to
/// reproduce a fed target from the error out - target.
BenchmarkSetup build_pes(const BenchmarkSpec& spec) {
    const int d = spec.dims;
    const double level = 0.5 / std::sqrt(static_cast<double>(d));
    Network net(spec.seed, spec.dt);
    auto u = net.feedable_node(std::vector<double>(d, level));
    auto target = net.feedable_node(std::vector<double>(d, level));
    auto ens = net.ensemble(spec.neurons_per_dim * d, d);
    auto out = net.passthrough_node(d);
    auto err = net.passthrough_node(d);

    net.connect(u, ens, {.synapse = 0.005});
    ConnectionOptions learned;
    learned.synapse = 0.005;
    learned.function = [d](const std::vector<double>&) {
        return std::vector<double>(d, 0.0);
    };
    learned.pes_learning_rate = 1e-4;
    learned.pes_error = err;
    net.connect(ens, out, learned);
    net.connect(out, err, {.scalar_transform = 1.0, .synapse = 0.0});
    net.connect(target, err, {.scalar_transform = -1.0, .synapse = 0.0});

    BenchmarkSetup setup;
    setup.outputs.push_back(net.probe(out, "out"));
    setup.outputs.push_back(net.probe(err, "err"));
    setup.feeds.emplace(u.id, constant_feed(spec.batch, spec.steps,
                                            std::vector<double>(d, level), false));
    setup.feeds.emplace(target.id, constant_feed(spec.batch, spec.steps,
                                                 std::vector<double>(d, level), true));
    setup.model = net.build();
    return setup;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

BenchmarkSetup build_benchmark(const BenchmarkSpec& spec) {
    validate_spec(spec);
    if (spec.name == "integrator") return build_integrator(spec);
    if (spec.name == "cconv") return build_cconv(spec);
    if (spec.name == "pes") return build_pes(spec);
    throw BuildError("unknown benchmark '" + spec.name + "'");
}

BenchResult run_bench(const BenchmarkSpec& spec, const PipelineConfig& config,
                      bool check) {
    BenchResult r;
    r.spec = spec;
    r.config = config;

    auto build_start = std::chrono::steady_clock::now();
    BenchmarkSetup setup = build_benchmark(spec);
    PlannedModel planned = run_passes(setup.model, config);
    r.operator_count = static_cast<int>(planned.model.operators.size());
    r.stats = planned.stats;
    Engine engine(std::move(planned), spec.batch, spec.unroll);
    r.build_time_s = seconds_since(build_start);

    engine.run(spec.steps, setup.feeds);  // warm-up, excluded from timing
    engine.reset();
    auto run_start = std::chrono::steady_clock::now();
    ProbeOutput out = engine.run(spec.steps, setup.feeds);
    r.run_time_s = seconds_since(run_start);

    if (check) {
        ProbeOutput ref = run_reference(setup.model, spec.steps, setup.feeds, spec.batch);
        r.correctness_max_err = compare(out, ref, 0.0, 0.0).max_abs_err;
    }
    return r;
}

std::vector<BenchResult> ablation_suite(const BenchmarkSpec& base, bool check,
                                        int tree_depth) {
    BenchmarkSpec spec = base;
    int unrolled = base.unroll > 1 ? base.unroll : 10;

    PipelineConfig cfg;
    cfg.merge = true;
    cfg.simplify = false;
    cfg.planner = Planner::Greedy;
    cfg.tree_depth = 1;
    cfg.sort = false;

    std::vector<BenchResult> rows;
    spec.unroll = 1;
    rows.push_back(run_bench(spec, cfg, check));  // merge only, greedy
    spec.unroll = unrolled;
    rows.push_back(run_bench(spec, cfg, check));  // + unroll
    cfg.planner = Planner::Tree;
    cfg.tree_depth = tree_depth;
    rows.push_back(run_bench(spec, cfg, check));  // + tree planner
    cfg.sort = true;
    rows.push_back(run_bench(spec, cfg, check));  // + sort
    cfg.simplify = true;
    rows.push_back(run_bench(spec, cfg, check));  // + simplify
    return rows;
}

std::string bench_csv_header() {
    return "benchmark,dims,batch,planner,tree_depth,unroll,merge,sort,simplify,"
           "operator_count,groups_per_step,contiguous_read_fraction,build_time_s,"
           "run_time_s,steps,correctness_max_err";
}

std::string bench_csv_row(const BenchResult& r) {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "%s,%d,%d,%s,%d,%d,%d,%d,%d,%d,%d,%.17g,%.6f,%.6f,%d,%.17g",
                  r.spec.name.c_str(), r.spec.dims, r.spec.batch,
                  r.config.planner == Planner::Greedy ? "greedy" : "tree",
                  r.config.tree_depth, r.spec.unroll, r.config.merge ? 1 : 0,
                  r.config.sort ? 1 : 0, r.config.simplify ? 1 : 0, r.operator_count,
                  r.stats.groups_per_step, r.stats.contiguous_read_fraction,
                  r.build_time_s, r.run_time_s, r.spec.steps, r.correctness_max_err);
    return buf;
}

}  // namespace neng
