#include "pointprompt/sweep.hpp"

#include "pointprompt/errors.hpp"

#include <json.hpp>

#include <iomanip>
#include <sstream>

namespace pointprompt {

SweepAxis parse_sweep_axis(const std::string& s) {
    if (s == "context_length") return SweepAxis::kContextLength;
    if (s == "data_fraction") return SweepAxis::kDataFraction;
    if (s == "few_shot") return SweepAxis::kFewShot;
    if (s == "insert_position") return SweepAxis::kInsertPosition;
    if (s == "init_mode") return SweepAxis::kInitMode;
    throw ArgumentError("unknown sweep axis '" + s +
                        "' (context_length|data_fraction|few_shot|insert_position|init_mode)");
}

const char* sweep_axis_name(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::kContextLength: return "context_length";
        case SweepAxis::kDataFraction: return "data_fraction";
        case SweepAxis::kFewShot: return "few_shot";
        case SweepAxis::kInsertPosition: return "insert_position";
        case SweepAxis::kInitMode: return "init_mode";
    }
    return "?";
}

std::vector<std::string> sweep_axis_values(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::kContextLength: return {"4", "8", "16", "32", "64"};
        case SweepAxis::kDataFraction:
            return {"0.05", "0.10", "0.15", "0.20", "0.30", "0.50", "1.0"};
        case SweepAxis::kFewShot: return {"1", "2", "4", "8", "16"};
        case SweepAxis::kInsertPosition: return {"front", "middle", "end"};
        case SweepAxis::kInitMode: return {"random", "template"};
    }
    return {};
}

namespace {

RunConfig apply_axis(RunConfig cfg, SweepAxis axis, const std::string& value) {
    switch (axis) {
        case SweepAxis::kContextLength: cfg.context_length = std::stoll(value); break;
        case SweepAxis::kDataFraction: cfg.fraction = std::stod(value); break;
        case SweepAxis::kFewShot: cfg.shots = std::stoll(value); break;
        case SweepAxis::kInsertPosition: cfg.insert_position = value; break;
        case SweepAxis::kInitMode: cfg.init_mode = value; break;
    }
    return cfg;
}

}  // namespace

std::vector<SweepCell> run_sweep(const RunConfig& base, const std::string& backbone_checkpoint,
                                 SweepAxis axis, MetricsWriter* metrics) {
    std::vector<SweepCell> cells;
    for (const std::string& value : sweep_axis_values(axis)) {
        SweepCell cell;
        cell.value = value;
        try {
            RunConfig cfg = apply_axis(base, axis, value);
            Dataset ds = prepare_dataset(cfg);
            fill_classes(cfg, ds);
            cfg = resolve_config(cfg);

            Model model = Model::build(cfg);
            // Backbone weights from the shared pretrained checkpoint; the
            // prompt/adapter stay at their fresh initialization.
            load_backbone_into(model, backbone_checkpoint);

            AdamW opt(AdamWConfig{cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps,
                                  cfg.weight_decay, cfg.grad_clip, cfg.steps,
                                  cfg.warmup_fraction});
            run_tune(model, ds, opt, metrics);
            EvalMetrics m = evaluate_model(model, ds);
            cell.ok = true;
            cell.overall_accuracy = m.overall_accuracy;
            cell.mean_class_accuracy = m.mean_class_accuracy;
            cell.learnable = model.count_learnable();
        } catch (const std::exception& e) {
            cell.ok = false;
            cell.error = e.what();
        }
        cells.push_back(std::move(cell));
    }
    return cells;
}

std::string sweep_table_json(SweepAxis axis, const std::vector<SweepCell>& cells) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& cell : cells) {
        nlohmann::json row = {
            {"axis", sweep_axis_name(axis)},
            {"value", cell.value},
            {"ok", cell.ok},
        };
        if (cell.ok) {
            row["overall_accuracy"] = cell.overall_accuracy;
            row["mean_class_accuracy"] = cell.mean_class_accuracy;
            row["learnable_parameters"] = cell.learnable;
        } else {
            row["error"] = cell.error;
        }
        rows.push_back(std::move(row));
    }
    return rows.dump(2);
}

std::string sweep_table_text(SweepAxis axis, const std::vector<SweepCell>& cells) {
    std::ostringstream out;
    out << std::left << std::setw(18) << sweep_axis_name(axis) << std::setw(10) << "OA"
        << std::setw(12) << "mean_cls" << std::setw(12) << "learnable"
        << "status\n";
    for (const auto& cell : cells) {
        out << std::left << std::setw(18) << cell.value;
        if (cell.ok) {
            out << std::setw(10) << std::fixed << std::setprecision(4) << cell.overall_accuracy
                << std::setw(12) << cell.mean_class_accuracy << std::setw(12) << cell.learnable
                << "ok\n";
        } else {
            out << std::setw(10) << "-" << std::setw(12) << "-" << std::setw(12) << "-"
                << ("failed: " + cell.error) << "\n";
        }
    }
    return out.str();
}

}  // namespace pointprompt
