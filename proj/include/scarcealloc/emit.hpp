#pragma once

#include <filesystem>
#include <string>

#include "scarcealloc/decision_metrics.hpp"
#include "scarcealloc/experiment.hpp"

namespace scarcealloc {

/// CSV bodies as strings (UTF-8, '\n' line ends, %.17g floats) so tests can
/// assert byte equality without touching the filesystem.
std::string experiment_csv(const ExperimentReport& report);
std::string sweep_csv(const SweepReport& report);
std::string metrics_csv(const MetricReport& report);

std::string experiment_chart_svg(const ExperimentReport& report);
std::string sweep_chart_svg(const SweepReport& report);

/// Config echo, library version, and the achieved pairwise gains.
std::string meta_text(const ExperimentReport& report);
std::string meta_text(const SweepReport& report);

void emit_csv(const ExperimentReport& report, const std::filesystem::path& path);
void emit_csv(const SweepReport& report, const std::filesystem::path& path);
void emit_csv(const MetricReport& report, const std::filesystem::path& path);
void emit_chart(const ExperimentReport& report, const std::filesystem::path& path);
void emit_chart(const SweepReport& report, const std::filesystem::path& path);
void write_text_file(const std::string& text, const std::filesystem::path& path);

} // namespace scarcealloc
