#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hetflow/design_point.hpp"
#include "hetflow/simulator.hpp"
#include "hetflow/target.hpp"

namespace hetflow {

enum class ArtifactKind { FpgaKernelStub, AieKernelStub, AieGraphManifest, ReportTable, ReportJson };

std::string_view to_string(ArtifactKind k);

struct EmittedArtifact {
  std::string path;  // relative to the output directory
  ArtifactKind kind = ArtifactKind::FpgaKernelStub;
  std::string content;
  std::string content_hash;  // hex SHA-256 of content
};

std::string sha256_hex(std::string_view data);

/// Marker placed in flattened AIE kernels; pipelined kernels carry
/// kPipelineMarker instead.
inline constexpr const char* kFlattenMarker = "chess_flatten_loop";
inline constexpr const char* kPipelineMarker = "chess_prepare_for_pipelining";

/// Kernel stubs (one per mapped node) plus the AIE graph manifest, in path
/// order. Throws Error{"unlegalized-edge"} if any edge still needs a Retile.
std::vector<EmittedArtifact> generate_sources(const DesignPoint& d, const TargetDescription& target);

/// Machine-readable report. Counts are integers, latency is rounded to one
/// decimal microsecond, throughput to three significant figures.
nlohmann::json report_json(const DesignPoint& d, const std::optional<SimResult>& sim, std::uint64_t seed);
std::string report_text(const DesignPoint& d, const std::optional<SimResult>& sim, std::uint64_t seed);

/// report.json and report.txt.
std::pair<EmittedArtifact, EmittedArtifact> generate_report(const DesignPoint& d,
                                                            const std::optional<SimResult>& sim,
                                                            std::uint64_t seed);

/// Writes artifacts under `out_dir`, creating directories. Throws
/// Error{"write-failed"}.
void write_artifacts(const std::vector<EmittedArtifact>& artifacts, const std::filesystem::path& out_dir);

std::vector<EmittedArtifact> emit_sources(const DesignPoint& d, const TargetDescription& target,
                                          const std::filesystem::path& out_dir);
std::pair<EmittedArtifact, EmittedArtifact> emit_report(const DesignPoint& d, const std::optional<SimResult>& sim,
                                                        std::uint64_t seed, const std::filesystem::path& out_dir);

/// Rounding helpers shared with the report.
double round_to_decimals(double v, int decimals);
double round_significant(double v, int digits);

}  // namespace hetflow
