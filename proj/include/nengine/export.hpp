#pragma once

#include <iosfwd>
#include <string>

#include "nengine/model.hpp"

/// Probe trace export: a plot-ready CSV layout and a compact binary dump for
/// regression fixtures, plus a loader for round-tripping the binary form.
namespace neng {

/// Rows ordered by step, then batch, then probe key, then dimension:
///   step,time,batch,probe_key,dim_index,value
/// `time` is the post-step clock (step+1)*dt. Values print with 17 significant
/// digits so doubles round-trip exactly. All traces must share one
/// (batch, steps) shape; throws RunError otherwise.
void write_probe_csv(std::ostream& os, const ProbeOutput& probes, double dt);
void write_probe_csv(const std::string& path, const ProbeOutput& probes, double dt);

/// Binary layout, little-endian:
///   magic "NENG1" | u8 element width (8) | u32 probe count |
///   per probe: i32 key, i32 batch, i32 steps, i32 dim,
///              batch*steps*dim f64 values in (batch, step, dim) order
void write_probe_binary(std::ostream& os, const ProbeOutput& probes);
void write_probe_binary(const std::string& path, const ProbeOutput& probes);

/// Reads a dump produced by write_probe_binary. Throws RunError on a bad
/// magic, an unsupported element width, or truncation.
ProbeOutput read_probe_binary(std::istream& is);
ProbeOutput read_probe_binary(const std::string& path);

/// Overwrites `path` with `text`; throws RunError when the file cannot be
/// written.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace neng
