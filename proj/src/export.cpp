#include "nengine/export.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "nengine/ir.hpp"

namespace neng {

namespace {

constexpr char kMagic[5] = {'N', 'E', 'N', 'G', '1'};
constexpr uint8_t kElemWidth = 8;

std::string fmt(const char* spec, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

template <class T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T take(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw RunError("probe dump is truncated");
    return v;
}

std::ofstream open_for_write(const std::string& path, std::ios::openmode mode) {
    std::ofstream f(path, mode);
    if (!f) throw RunError("cannot open '" + path + "' for writing");
    return f;
}

void check_uniform(const ProbeOutput& probes) {
    const Tensor3& first = probes.begin()->second;
    for (const auto& [key, t] : probes)
        if (t.batch != first.batch || t.steps != first.steps)
            throw RunError("probe traces have mismatched shapes");
}

}  // namespace

void write_probe_csv(std::ostream& os, const ProbeOutput& probes, double dt) {
    os << "step,time,batch,probe_key,dim_index,value\n";
    if (probes.empty()) return;
    check_uniform(probes);
    const Tensor3& first = probes.begin()->second;
    for (int s = 0; s < first.steps; ++s) {
        std::string stamp = std::to_string(s) + ',' + fmt("%.9g", (s + 1) * dt) + ',';
        for (int b = 0; b < first.batch; ++b)
            for (const auto& [key, t] : probes)
                for (int d = 0; d < t.dim; ++d)
                    os << stamp << b << ',' << key << ',' << d << ','
                       << fmt("%.17g", t.at(b, s, d)) << '\n';
    }
}

void write_probe_csv(const std::string& path, const ProbeOutput& probes, double dt) {
    auto f = open_for_write(path, std::ios::out | std::ios::trunc);
    write_probe_csv(f, probes, dt);
    if (!f) throw RunError("failed writing '" + path + "'");
}

void write_probe_binary(std::ostream& os, const ProbeOutput& probes) {
    os.write(kMagic, sizeof kMagic);
    put(os, kElemWidth);
    put(os, static_cast<uint32_t>(probes.size()));
    for (const auto& [key, t] : probes) {
        put(os, static_cast<int32_t>(key));
        put(os, static_cast<int32_t>(t.batch));
        put(os, static_cast<int32_t>(t.steps));
        put(os, static_cast<int32_t>(t.dim));
        os.write(reinterpret_cast<const char*>(t.data.data()),
                 static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    }
}

void write_probe_binary(const std::string& path, const ProbeOutput& probes) {
    auto f = open_for_write(path, std::ios::out | std::ios::trunc | std::ios::binary);
    write_probe_binary(f, probes);
    if (!f) throw RunError("failed writing '" + path + "'");
}

ProbeOutput read_probe_binary(std::istream& is) {
    char magic[sizeof kMagic];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw RunError("not a probe dump: bad magic");
    if (take<uint8_t>(is) != kElemWidth)
        throw RunError("probe dump has an unsupported element width");

    ProbeOutput out;
    uint32_t count = take<uint32_t>(is);
    for (uint32_t i = 0; i < count; ++i) {
        int32_t key = take<int32_t>(is);
        int32_t batch = take<int32_t>(is);
        int32_t steps = take<int32_t>(is);
        int32_t dim = take<int32_t>(is);
        if (batch < 0 || steps < 0 || dim < 0)
            throw RunError("probe dump has a negative trace shape");
        Tensor3 t(batch, steps, dim);
        is.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(double)));
        if (!is) throw RunError("probe dump is truncated");
        out.emplace(key, std::move(t));
    }
    return out;
}

ProbeOutput read_probe_binary(const std::string& path) {
    std::ifstream f(path, std::ios::in | std::ios::binary);
    if (!f) throw RunError("cannot open '" + path + "' for reading");
    return read_probe_binary(f);
}

void write_text_file(const std::string& path, const std::string& text) {
    auto f = open_for_write(path, std::ios::out | std::ios::trunc);
    f << text;
    if (!f) throw RunError("failed writing '" + path + "'");
}

}  // namespace neng
