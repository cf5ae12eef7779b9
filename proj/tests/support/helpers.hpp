#pragma once

#include <numeric>
#include <vector>

#include "nengine/ir.hpp"
#include "nengine/model.hpp"

namespace neng::test {

struct SignalOpts {
    bool constant = false;
    bool minibatched = false;
    bool trainable = false;
    std::vector<double> initial;
};

inline Signal make_signal(SignalId id, std::string label, std::vector<int> shape,
                          SignalOpts opts = {}) {
    Signal s;
    s.id = id;
    s.label = std::move(label);
    s.shape = std::move(shape);
    s.constant = opts.constant;
    s.minibatched = opts.minibatched;
    s.trainable = opts.trainable;
    s.initial = std::move(opts.initial);
    return s;
}

inline std::vector<double> constants(size_t n, double v) {
    return std::vector<double>(n, v);
}

inline double mean_tail(const Tensor3& t, int batch, int dim, int window) {
    double acc = 0.0;
    for (int s = t.steps - window; s < t.steps; ++s) acc += t.at(batch, s, dim);
    return acc / window;
}

inline double mean_head(const Tensor3& t, int batch, int dim, int window) {
    double acc = 0.0;
    for (int s = 0; s < window; ++s) acc += t.at(batch, s, dim);
    return acc / window;
}

}  // namespace neng::test
