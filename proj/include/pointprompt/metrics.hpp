#pragma once

#include "pointprompt/errors.hpp"
#include "pointprompt/types.hpp"

#include <json.hpp>

#include <chrono>
#include <fstream>
#include <map>
#include <string>

namespace pointprompt {

/// Append-only stream of structured metric records, one JSON object per
/// line. run_id and config_hash are deterministic; wall-clock is auxiliary
/// and excluded from the determinism surface.
class MetricsWriter {
public:
    MetricsWriter() = default;
    MetricsWriter(const std::string& path, std::string run_id, std::string config_hash,
                  std::uint64_t seed_init, std::uint64_t seed_data)
        : run_id_(std::move(run_id)),
          config_hash_(std::move(config_hash)),
          seed_init_(seed_init),
          seed_data_(seed_data),
          start_(std::chrono::steady_clock::now()) {
        if (!path.empty()) {
            out_.open(path, std::ios::app);
            if (!out_) throw DataError("cannot open metrics file '" + path + "'");
        }
    }

    void emit(Index step, const std::map<std::string, Scalar>& metrics) {
        if (!out_.is_open()) return;
        nlohmann::json record = {
            {"run_id", run_id_},
            {"config_hash", config_hash_},
            {"step", step},
            {"metrics", metrics},
            {"seeds", {{"init", seed_init_}, {"data", seed_data_}}},
            {"wall_ms", elapsed_ms()},
        };
        out_ << record.dump() << "\n";
        out_.flush();
    }

    double elapsed_ms() const {
        const auto now = std::chrono::steady_clock::now();
        return std::chrono::duration<double, std::milli>(now - start_).count();
    }

private:
    std::ofstream out_;
    std::string run_id_;
    std::string config_hash_;
    std::uint64_t seed_init_ = 0;
    std::uint64_t seed_data_ = 0;
    std::chrono::steady_clock::time_point start_{};
};

}  // namespace pointprompt
