#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vsmactr/trace_codec.hpp"

namespace vsmactr {

inline constexpr const char* kToolVersion = "vsmactr 0.1.0";

/// Every knob a pipeline stage reads. Stages ignore the fields they do not use.
struct PipelineConfig {
    std::uint64_t seed = 20240601;
    int sets = 32;
    int runs = 4;
    int trials = 16;
    bool stop_when_stable = true;
    std::string batch_mode = "adaptive";  // or fixed_persona
    double alpha = 0.2;
    double noise_s = 0.8;
    FacetMode mode = FacetMode::single;
    std::string provider = "test";
    double threshold = 0.70;
    int folds = 10;
    double lambda = 1.0;
    double test_split = 0.2;
};

/// Exit status of the command-line tool for each failure class.
enum class ExitCode : int { ok = 0, failure = 1, config = 2, engine = 3, missing_input = 4, provider = 5 };

class PipelineError : public std::runtime_error {
public:
    PipelineError(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ExitCode code() const noexcept { return code_; }

private:
    ExitCode code_;
};

/// Overrides fields from a JSON object; unknown keys and wrong types throw
/// PipelineError{config}.
PipelineConfig apply_config_json(PipelineConfig base, std::string_view json_text);
/// Throws PipelineError{config} on out-of-range values.
void validate(const PipelineConfig& cfg);
std::string config_json(const PipelineConfig& cfg);

struct Artifact {
    std::string path;  // relative to the output directory
    std::string sha256;

    friend bool operator==(const Artifact&, const Artifact&) = default;
};

struct StageManifest {
    std::string command;
    std::string manifest_path;  // relative
    std::vector<Artifact> inputs;
    std::vector<Artifact> outputs;
};

/// Stage order: simulate, distill, embed, reduce, build-dataset, eval, analyze.
/// Each reads its inputs from earlier stages' subdirectories of out_dir,
/// writes its own subdirectory and a manifest.json listing checksums.
StageManifest stage_simulate(const PipelineConfig& cfg, const std::string& out_dir);
StageManifest stage_distill(const PipelineConfig& cfg, const std::string& out_dir);
StageManifest stage_embed(const PipelineConfig& cfg, const std::string& out_dir);
StageManifest stage_reduce(const PipelineConfig& cfg, const std::string& out_dir);
StageManifest stage_build_dataset(const PipelineConfig& cfg, const std::string& out_dir);
StageManifest stage_eval(const PipelineConfig& cfg, const std::string& out_dir);
StageManifest stage_analyze(const PipelineConfig& cfg, const std::string& out_dir);

/// All stages in order.
std::vector<StageManifest> run_pipeline(const PipelineConfig& cfg, const std::string& out_dir);

/// Reads back a manifest written by a stage. Throws Error{parse_error}.
StageManifest read_manifest(const std::string& out_dir, const std::string& manifest_path);

} // namespace vsmactr
