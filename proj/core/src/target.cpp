#include "hetflow/target.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace hetflow {

using nlohmann::json;

double TargetDescription::cal(std::string_view key) const {
  auto it = calibration.find(key);
  if (it == calibration.end())
    throw Error("calibration-missing", fmt::format("calibration constant '{}' not set", key));
  return it->second;
}

double TargetDescription::cal(std::string_view key, double fallback) const {
  auto it = calibration.find(key);
  return it == calibration.end() ? fallback : it->second;
}

double TargetDescription::lanes(int precision_bits) const {
  auto it = aie.macs_per_cycle.find(precision_bits);
  if (it == aie.macs_per_cycle.end())
    throw Error("unknown-precision", fmt::format("no AIE lane count for {}-bit", precision_bits));
  return it->second;
}

Diagnostics validate_target(const TargetDescription& t) {
  Diagnostics out;
  auto positive = [&](double v, const char* what) {
    if (!(v > 0)) out.push_back({Severity::Error, "target", what, fmt::format("{} must be > 0", what)});
  };
  positive(t.fpga.ff_total, "fpga.ff_total");
  positive(t.fpga.lut_total, "fpga.lut_total");
  positive(t.fpga.dsp_total, "fpga.dsp_total");
  positive(t.fpga.bram_total, "fpga.bram_total");
  positive(t.fpga.clock_hz, "fpga.clock_hz");
  positive(t.aie.tile_total, "aie.tile_total");
  positive(t.aie.clock_hz, "aie.clock_hz");
  positive(t.aie.memory_buffers_per_tile, "aie.memory_buffers_per_tile");
  for (const auto& [bits, lanes] : t.aie.macs_per_cycle) positive(lanes, "aie.macs_per_cycle");
  positive(t.constraints.max_latency_s, "constraints.max_latency_s");
  positive(t.constraints.kernel_deadline_s, "constraints.kernel_deadline_s");
  return out;
}

namespace {

template <typename T>
void read_opt(const json& obj, const char* key, T& dst) {
  if (auto it = obj.find(key); it != obj.end()) dst = it->get<T>();
}

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const char* where) {
  if (!obj.is_object()) throw Error("schema", fmt::format("target: {} must be an object", where));
  for (const auto& [key, v] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw Error("schema", fmt::format("target: unknown field '{}' in {}", key, where));
  }
}

}  // namespace

TargetDescription parse_target(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error("schema", std::string("target is not valid JSON: ") + e.what());
  }
  TargetDescription t;
  try {
    reject_unknown(doc, {"name", "fpga", "aie", "calibration", "constraints"}, "target");
    read_opt(doc, "name", t.name);
    if (auto it = doc.find("fpga"); it != doc.end()) {
      reject_unknown(*it, {"ff_total", "lut_total", "dsp_total", "bram_total", "clock_hz"}, "fpga");
      read_opt(*it, "ff_total", t.fpga.ff_total);
      read_opt(*it, "lut_total", t.fpga.lut_total);
      read_opt(*it, "dsp_total", t.fpga.dsp_total);
      read_opt(*it, "bram_total", t.fpga.bram_total);
      read_opt(*it, "clock_hz", t.fpga.clock_hz);
    }
    if (auto it = doc.find("aie"); it != doc.end()) {
      reject_unknown(*it,
                     {"tile_total", "memory_buffers_per_tile", "clock_hz", "macs_per_cycle",
                      "program_memory_bytes"},
                     "aie");
      read_opt(*it, "tile_total", t.aie.tile_total);
      read_opt(*it, "memory_buffers_per_tile", t.aie.memory_buffers_per_tile);
      read_opt(*it, "clock_hz", t.aie.clock_hz);
      read_opt(*it, "program_memory_bytes", t.aie.program_memory_bytes);
      if (auto m = it->find("macs_per_cycle"); m != it->end()) {
        t.aie.macs_per_cycle.clear();
        for (const auto& [bits, lanes] : m->items()) t.aie.macs_per_cycle[std::stoi(bits)] = lanes.get<double>();
      }
    }
    if (auto it = doc.find("calibration"); it != doc.end()) {
      if (!it->is_object()) throw Error("schema", "target: calibration must be an object");
      for (const auto& [key, v] : it->items()) t.calibration[key] = v.get<double>();
    }
    if (auto it = doc.find("constraints"); it != doc.end()) {
      reject_unknown(*it, {"max_latency_s", "kernel_deadline_s", "throughput_goal_eps"}, "constraints");
      read_opt(*it, "max_latency_s", t.constraints.max_latency_s);
      read_opt(*it, "kernel_deadline_s", t.constraints.kernel_deadline_s);
      read_opt(*it, "throughput_goal_eps", t.constraints.throughput_goal_eps);
    }
  } catch (const json::exception& e) {
    throw Error("schema", std::string("target: ") + e.what());
  }
  auto diags = validate_target(t);
  if (!diags.empty()) throw Error("target", to_string(diags.front()));
  return t;
}

TargetDescription load_target_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("target-not-found", "cannot open target file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_target(buf.str());
}

std::string serialize_target(const TargetDescription& t) {
  json doc;
  doc["name"] = t.name;
  doc["fpga"] = {{"ff_total", t.fpga.ff_total},   {"lut_total", t.fpga.lut_total},
                 {"dsp_total", t.fpga.dsp_total}, {"bram_total", t.fpga.bram_total},
                 {"clock_hz", t.fpga.clock_hz}};
  json lanes = json::object();
  for (const auto& [bits, l] : t.aie.macs_per_cycle) lanes[std::to_string(bits)] = l;
  doc["aie"] = {{"tile_total", t.aie.tile_total},
                {"memory_buffers_per_tile", t.aie.memory_buffers_per_tile},
                {"clock_hz", t.aie.clock_hz},
                {"macs_per_cycle", lanes},
                {"program_memory_bytes", t.aie.program_memory_bytes}};
  json cal = json::object();
  for (const auto& [k, v] : t.calibration) cal[k] = v;
  doc["calibration"] = cal;
  doc["constraints"] = {{"max_latency_s", t.constraints.max_latency_s},
                        {"kernel_deadline_s", t.constraints.kernel_deadline_s},
                        {"throughput_goal_eps", t.constraints.throughput_goal_eps}};
  return doc.dump(2) + "\n";
}

}  // namespace hetflow
