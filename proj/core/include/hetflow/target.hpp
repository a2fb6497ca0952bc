#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "hetflow/diagnostics.hpp"

namespace hetflow {

struct FpgaResources {
  double ff_total = 0;
  double lut_total = 0;
  double dsp_total = 0;
  double bram_total = 0;
  double clock_hz = 2.5e8;
};

struct AieResources {
  double tile_total = 0;
  int memory_buffers_per_tile = 8;
  double clock_hz = 1.25e9;
  // Vector MAC lanes per cycle keyed by precision in bits.
  std::map<int, double> macs_per_cycle{{8, 128.0}, {16, 32.0}};
  double program_memory_bytes = 16384;
};

struct Constraints {
  double max_latency_s = 1e-5;
  double kernel_deadline_s = 1e-6;
  double throughput_goal_eps = 1e6;
};

/// Resources, clocks and calibration constants of a Versal-class device.
///
/// Document form (JSON): {fpga{...}, aie{...}, calibration{name: float},
/// constraints{...}}. Clocks in Hz, times in seconds.
struct TargetDescription {
  std::string name = "target";
  FpgaResources fpga;
  AieResources aie;
  std::map<std::string, double, std::less<>> calibration;
  Constraints constraints;

  /// Calibration constant lookup; throws Error{"calibration-missing"}.
  double cal(std::string_view key) const;
  double cal(std::string_view key, double fallback) const;

  double lanes(int precision_bits) const;
};

Diagnostics validate_target(const TargetDescription& t);

TargetDescription parse_target(std::string_view text);
/// Throws Error{"target-not-found"} when the file cannot be opened.
TargetDescription load_target_file(const std::string& path);
std::string serialize_target(const TargetDescription& t);

}  // namespace hetflow
