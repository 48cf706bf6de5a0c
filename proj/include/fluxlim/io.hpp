#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace fluxlim {

/// Fixed "%.12g" formatting keeps file output byte-identical across runs.
std::string format_double(double v);

std::uint64_t fnv1a64(const std::string& bytes);

/// Collects every file a run produces and writes manifest.json with sizes
/// and checksums.  All writes go through here so the manifest stays complete.
class OutputWriter {
 public:
  explicit OutputWriter(std::filesystem::path dir);
  const std::filesystem::path& dir() const { return dir_; }

  void write_text(const std::string& filename, const std::string& content);
  void write_json(const std::string& filename, const nlohmann::json& j);

  /// CSV with a header row; every cell already formatted.
  void write_csv(const std::string& filename,
                 const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows);

  /// Minimal static SVG line plot; one polyline per series.
  struct Series {
    std::string label;
    std::vector<double> x, y;
  };
  void write_svg_lines(const std::string& filename, const std::string& title,
                       const std::vector<Series>& series, bool log_log = false);

  void write_manifest();

 private:
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> files_;
};

}  // namespace fluxlim
