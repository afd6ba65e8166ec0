#pragma once

#include <filesystem>

#include "serialtrack/io.hpp"

namespace serialtrack {

// Subcommand bodies shared by the CLI and the integration tests. Each one
// reads and writes only through the documented file formats, so stages can be
// re-run and cached independently.

// Fits (or ingests) transforms for every adjacent and interleave pair of the
// stack and serializes them into out_dir. Throws MissingInput listing absent
// pairs, FitFailure listing pairs whose fit did not converge.
void cmd_register(const SeriesStack& stack, const PipelineConfig& config,
                  const std::filesystem::path& out_dir);

// Scores every complete cycle and classifies the series; the report lands in
// out_path as JSON.
QaReport cmd_qa(const SeriesStack& stack, const std::filesystem::path& transforms_dir,
                const PipelineConfig& config, const std::filesystem::path& out_path);

struct TrackSummary {
    int track_count = 0;
    std::size_t detections = 0;
};

// Dual-path association; results as MOT15 in out_path. assume_good replaces
// the QA report with all-pass flags.
TrackSummary cmd_track(const SeriesStack& stack, const std::filesystem::path& transforms_dir,
                       const std::filesystem::path& qa_path, bool assume_good,
                       const PipelineConfig& config, const std::filesystem::path& out_path);

MotScore cmd_eval(const std::filesystem::path& gt_path,
                  const std::filesystem::path& results_path, const PipelineConfig& config,
                  const std::filesystem::path& out_json_path);

// Writes detections.txt, gt.txt, the per-pair correspondence CSVs, stack.json
// and truth.json into out_dir.
void cmd_simulate(const SimConfig& cfg, const std::filesystem::path& out_dir);

struct PipelineSummary {
    QaReport qa;
    TrackSummary tracking;
    std::optional<MotScore> score;  // present when the dataset ships ground truth
};

// register -> qa -> track -> eval (when gt.txt exists) under out_dir.
PipelineSummary cmd_pipeline(const std::filesystem::path& stack_manifest,
                             const PipelineConfig& config,
                             const std::filesystem::path& out_dir);

// Numerical registration failure carrying the offending pair ids.
class FitFailure : public Error {
public:
    explicit FitFailure(const std::string& what) : Error(what) {}
};

// Exit-code category per the CLI contract: 0 ok, 2 input, 3 numerical,
// 4 inconsistency.
int exit_code_for(const Error& e);

}  // namespace serialtrack
