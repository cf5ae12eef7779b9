#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "nengine/bench.hpp"
#include "nengine/export.hpp"
#include "nengine/ir.hpp"

int main(int argc, char** argv) {
    CLI::App app{"nengine: an optimizing spiking-network simulation engine"};

    neng::BenchmarkSpec spec;
    std::string planner = "tree";
    int tree_depth = 3;
    bool no_merge = false, no_sort = false, no_simplify = false;
    bool check = false, ablation = false;
    std::string output, dump_ir;

    app.add_option("--benchmark", spec.name, "benchmark model")
        ->check(CLI::IsMember({"integrator", "cconv", "pes"}));
    app.add_option("--dims", spec.dims, "represented dimensionality")
        ->check(CLI::PositiveNumber);
    app.add_option("--neurons-per-dim", spec.neurons_per_dim, "neurons per dimension")
        ->check(CLI::PositiveNumber);
    app.add_option("--steps", spec.steps, "simulation steps")->check(CLI::PositiveNumber);
    app.add_option("--dt", spec.dt, "timestep in seconds")->check(CLI::PositiveNumber);
    app.add_option("--seed", spec.seed, "parameter sampling seed");
    app.add_option("--batch", spec.batch, "batch rows simulated together")
        ->check(CLI::PositiveNumber);
    app.add_option("--unroll", spec.unroll, "steps per inner loop iteration")
        ->check(CLI::PositiveNumber);
    app.add_option("--planner", planner, "group scheduling algorithm")
        ->check(CLI::IsMember({"greedy", "tree"}));
    app.add_option("--tree-depth", tree_depth, "tree planner lookahead depth")
        ->check(CLI::PositiveNumber);
    app.add_flag("--no-merge", no_merge, "schedule every operator alone");
    app.add_flag("--no-sort", no_sort, "skip the buffer sorting pass");
    app.add_flag("--no-simplify", no_simplify, "skip graph rewrites");
    app.add_flag("--check", check, "cross-check probes against the interpreter");
    app.add_flag("--ablation", ablation, "run the cumulative optimization ladder");
    app.add_option("--output", output, "also write the CSV rows to this file");
    app.add_option("--dump-ir", dump_ir, "write the lowered model as JSON to this file");

    CLI11_PARSE(app, argc, argv);

    neng::PipelineConfig cfg;
    cfg.merge = !no_merge;
    cfg.sort = !no_sort;
    cfg.simplify = !no_simplify;
    cfg.planner = planner == "greedy" ? neng::Planner::Greedy : neng::Planner::Tree;
    cfg.tree_depth = tree_depth;

    try {
        if (!dump_ir.empty()) {
            neng::BenchmarkSetup setup = neng::build_benchmark(spec);
            neng::write_text_file(
                dump_ir, neng::dump_ir_json(setup.model.signals, setup.model.operators));
        }

        std::vector<neng::BenchResult> rows;
        if (ablation)
            rows = neng::ablation_suite(spec, check, tree_depth);
        else
            rows.push_back(neng::run_bench(spec, cfg, check));

        std::string csv = neng::bench_csv_header() + "\n";
        for (const neng::BenchResult& r : rows) csv += neng::bench_csv_row(r) + "\n";
        std::cout << csv;
        if (!output.empty()) neng::write_text_file(output, csv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
