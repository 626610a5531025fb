#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "misi/forward.hpp"
#include "misi/geometry.hpp"
#include "misi/metrics.hpp"
#include "misi/net.hpp"
#include "misi/trainer.hpp"

namespace misi {

// ---- MISI1 dataset container -------------------------------------------------
// "MISI1", u32 n_freq, n_tx, n_rx, n_grid, f64 doi xmin, ymin, xmax, ymax, f64 obs radius,
// f64 frequencies, f64 (x, y) Tx positions, f64 (x, y) Rx positions per Tx, f64 snr (NaN when
// clean), then scattered data (freq, Tx, Rx) and incident fields (freq, Tx, pixel) as
// (re, im) pairs. All numbers little-endian.

std::string encode_container(const MeasurementSet& mset);
MeasurementSet decode_container(std::string_view bytes);
void write_container(const MeasurementSet& mset, const std::filesystem::path& path);
MeasurementSet read_container(const std::filesystem::path& path);

// ---- text configs ------------------------------------------------------------
// "key = value" per line, '#' starts a comment. Unknown or repeated keys are errors.

struct SceneConfig {
  FresnelLayout layout;
  Phantom phantom;  // shapes in file order
};

SceneConfig parse_scene_config(std::string_view text);
SceneConfig load_scene_config(const std::filesystem::path& path);
std::string format_scene_config(const SceneConfig& cfg);

/// Applies network / optimiser keys on top of cfg.
void apply_net_config(std::string_view text, TrainerConfig& cfg);
void load_net_config(const std::filesystem::path& path, TrainerConfig& cfg);

struct MeasuredGeometry {
  std::size_t n_tx = 8;
  double radius = 1.67;
  double doi_half = 0.075;
  std::size_t n_grid = 32;
  double tx_start_deg = 0.0;
};

MeasuredGeometry parse_measured_geometry(std::string_view text);

struct MeasuredRow {
  double freq = 0.0;
  std::size_t tx = 0;
  double angle_deg = 0.0;  // absolute receiver angle on the array circle
  cplx value;
  std::size_t line = 0;
};

/// Whitespace-separated "freq tx_index rx_angle_deg re im" rows; blank and '#' lines skipped.
std::vector<MeasuredRow> parse_measured_table(std::string_view text);

/// Every frequency and Tx must list the same receiver angles. Angles are ordered by their
/// offset from the Tx angle and every stride-th one is kept, starting with the first.
/// Incident fields come from the line-source model.
MeasurementSet convert_measured(const std::vector<MeasuredRow>& rows, const MeasuredGeometry& geo,
                                std::size_t stride);

// ---- network checkpoint ------------------------------------------------------

std::string encode_network(const NetworkState& net);
NetworkState decode_network(std::string_view bytes);
void save_network(const NetworkState& net, const std::filesystem::path& path);
NetworkState load_network(const std::filesystem::path& path);

// ---- result export -----------------------------------------------------------

/// Shortest round-trip decimal form; "nan", "inf", "-inf" for non-finite values.
std::string format_number(double v);

std::string epoch_log_csv(const TrainRun& run, std::size_t n_freq);
/// One text row per grid row, starting with the lowest y.
std::string grid_csv(const RealGrid& g);
/// Binary 8-bit graymap, highest y on the top row, [min, max] mapped to [0, 255].
std::string grid_pgm(const RealGrid& g);
std::string range_sidecar(const RealGrid& g);
std::string run_summary(const TrainRun& run, std::size_t n_freq);
std::string psnr_curve_csv(const RunStatistics& s);
std::string final_psnr_csv(const RunStatistics& s, std::span<const TrainRun> runs);
std::string stats_summary(const RunStatistics& s, std::span<const TrainRun> runs, std::span<const RunFailure> failures);

/// Writes epochs.csv, eps_r/sigma (.csv, .pgm, .range.txt), summary.txt and net.bin into dir.
void write_run_directory(const TrainRun& run, std::size_t n_freq, const std::filesystem::path& dir);

void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace misi
