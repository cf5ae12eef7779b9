#pragma once

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "nengine/ir.hpp"

/// Model-level context shared by the executor and the reference interpreter:
/// probe registrations, feed slots, and the dense (batch, steps, dim) arrays
/// used for feeds and probe traces.
namespace neng {

struct Tensor3 {
    int batch = 0, steps = 0, dim = 0;
    std::vector<double> data;  // [batch][step][dim], row-major

    Tensor3() = default;
    Tensor3(int b, int s, int d)
        : batch(b), steps(s), dim(d),
          data(static_cast<size_t>(b) * s * d, 0.0) {}

    double& at(int b, int s, int d) {
        return data[(static_cast<size_t>(b) * steps + s) * dim + d];
    }
    double at(int b, int s, int d) const {
        return data[(static_cast<size_t>(b) * steps + s) * dim + d];
    }
    bool operator==(const Tensor3&) const = default;
};

using ProbeKey = int;

struct ProbeRegistration {
    ProbeKey key = -1;
    SignalId signal = -1;
    std::string label;
};

struct FeedSlot {
    int node_id = -1;
    SignalId signal = -1;
    int dim = 0;
    bool has_default = true;  // without a default, a feed must be supplied
    std::string label;
};

using FeedData = std::map<int, Tensor3>;        // node id -> feed rows
using ProbeOutput = std::map<ProbeKey, Tensor3>;

/// Lowered model: id-indexed signals (signals[i].id == i), validated
/// operators, probe registrations and feed slots.
struct BuiltModel {
    std::vector<Signal> signals;
    std::vector<Operator> operators;
    std::vector<ProbeRegistration> probes;
    std::vector<FeedSlot> feed_slots;
    double dt = 0.001;
};

inline void validate_feeds(const BuiltModel& model, const FeedData& feeds, int n_steps,
                           int batch) {
    for (const auto& [node, t] : feeds) {
        const FeedSlot* slot = nullptr;
        for (const FeedSlot& s : model.feed_slots)
            if (s.node_id == node) slot = &s;
        if (!slot)
            throw RunError("feed for unknown node " + std::to_string(node));
        if (t.batch != batch || t.steps < n_steps || t.dim != slot->dim) {
            std::ostringstream os;
            os << "feed for node " << node << " ('" << slot->label << "') has shape ("
               << t.batch << ", " << t.steps << ", " << t.dim << "), expected (" << batch
               << ", >=" << n_steps << ", " << slot->dim << ")";
            throw RunError(os.str());
        }
    }
    for (const FeedSlot& s : model.feed_slots) {
        if (!s.has_default && !feeds.count(s.node_id))
            throw RunError("node " + std::to_string(s.node_id) + " ('" + s.label +
                           "') has no default output and no feed was supplied");
    }
}

}  // namespace neng
