#pragma once

#include "pointprompt/config.hpp"
#include "pointprompt/training.hpp"

#include <string>
#include <vector>

namespace pointprompt {

enum class SweepAxis { kContextLength, kDataFraction, kFewShot, kInsertPosition, kInitMode };

SweepAxis parse_sweep_axis(const std::string& s);
const char* sweep_axis_name(SweepAxis axis);
// The fixed grid each axis walks.
std::vector<std::string> sweep_axis_values(SweepAxis axis);

struct SweepCell {
    std::string value;
    bool ok = false;
    std::string error;
    Scalar overall_accuracy = 0.0;
    Scalar mean_class_accuracy = 0.0;
    Index learnable = 0;
};

/// Runs the tuning pipeline once per axis value against one backbone
/// checkpoint. Per-cell failures are recorded and the sweep continues.
std::vector<SweepCell> run_sweep(const RunConfig& base, const std::string& backbone_checkpoint,
                                 SweepAxis axis, MetricsWriter* metrics);

// Consolidated structured table (a JSON array), parseable by the test suite.
std::string sweep_table_json(SweepAxis axis, const std::vector<SweepCell>& cells);
// Human-readable table.
std::string sweep_table_text(SweepAxis axis, const std::vector<SweepCell>& cells);

}  // namespace pointprompt
