#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "serialtrack/association.hpp"
#include "serialtrack/cycle_qa.hpp"
#include "serialtrack/registration.hpp"
#include "serialtrack/simulate.hpp"

namespace serialtrack {

// Pair-wise registration input: either a correspondence CSV to fit from, or
// an externally computed transform (affine text, optional field) to ingest.
struct PairSource {
    int source = 0;
    int target = 0;
    std::string correspondences;  // relative path, empty if ingesting
    std::string affine;           // relative path, empty if fitting
    std::string field;            // optional relative path
};

struct SeriesStack {
    int sections = 0;
    double unit_scale_um = 1.0;
    // Either one MOT15 file covering all frames or one file per section.
    std::vector<std::string> detections;
    std::optional<BBox> domain;
    std::vector<PairSource> pairs;
    std::filesystem::path base;  // directory the relative paths resolve against

    std::filesystem::path resolve(const std::string& rel) const { return base / rel; }
    const PairSource* find_pair(int source, int target) const;
};

struct TpsConfig {
    bool enabled = true;
    double lambda = 0.0;
    double grid_spacing = 16.0;
    double padding = 100.0;
};

// The achievable round-trip residual of a gridded field is limited by its
// bilinear representation (~curvature * spacing^2 / 8) and by edge clamping
// where displacements point off the grid, so the pipeline default is looser
// than the raw operation's 0.01. Half a unit is far below object scale.
struct InversionConfig {
    double tol = 0.5;
    int max_iter = 30;
};

struct PipelineConfig {
    double s_threshold = 0.1;   // association IoU threshold
    double q_threshold = 0.1;   // cycle-consistency threshold
    double match_iou = 0.5;     // evaluation match threshold
    ShapeMode shape_mode = ShapeMode::box;
    bool hungarian_linking = false;
    double calibration_shift = 70.0;
    RansacParams ransac;
    TpsConfig tps;
    InversionConfig inversion;

    void validate() const;
};

struct QaPairReport {
    int t = 0;
    double median_iou = 0.0;
    int fc = 0;
    bool indeterminate = false;
};

struct QaReport {
    double q = 0.1;
    // Median IoU of the stack's own boxes under random shifts of the
    // calibration magnitude; the data-driven counterpart of q.
    double suggested_q = 0.0;
    SeriesClass series_class = SeriesClass::Good;
    std::vector<QaPairReport> pairs;  // one per adjacent pair

    std::vector<PairFlag> flags() const;
};

// Correspondence CSV: header `src_x,src_y,dst_x,dst_y,weight`.
void save_correspondences_csv(const std::filesystem::path& path,
                              const std::vector<Correspondence>& corr);
std::vector<Correspondence> load_correspondences_csv(const std::filesystem::path& path);

// Affine as 9 decimal-text entries, three per line.
void save_affine_text(const std::filesystem::path& path, const AffineTransform2D& t);
AffineTransform2D load_affine_text(const std::filesystem::path& path);

// Field as little-endian float32 planes (dx then dy, row-major) plus a JSON
// sidecar holding origin/spacing/width/height.
void save_field(const std::filesystem::path& bin_path, const std::filesystem::path& json_path,
                const DisplacementField& f);
DisplacementField load_field(const std::filesystem::path& bin_path,
                             const std::filesystem::path& json_path);

SeriesStack load_series_stack(const std::filesystem::path& manifest_path);
void save_series_stack(const SeriesStack& stack, const std::filesystem::path& manifest_path);

PipelineConfig load_pipeline_config(const std::filesystem::path& path);
void save_pipeline_config(const PipelineConfig& cfg, const std::filesystem::path& path);

SimConfig load_sim_config(const std::filesystem::path& path);
void save_sim_config(const SimConfig& cfg, const std::filesystem::path& path);

// Serialized transform set: manifest.json plus per-pair affine/field files.
void save_transforms(const std::filesystem::path& dir,
                     const std::map<std::pair<int, int>, PairTransform>& transforms);
std::map<std::pair<int, int>, PairTransform> load_transforms(const std::filesystem::path& dir,
                                                             const InversionConfig& inversion);

void save_qa_report(const QaReport& report, const std::filesystem::path& path);
QaReport load_qa_report(const std::filesystem::path& path);

void save_score_json(const MotScore& score, const std::filesystem::path& path);

}  // namespace serialtrack
