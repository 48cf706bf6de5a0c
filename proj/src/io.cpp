#include "fluxlim/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

namespace fluxlim {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

OutputWriter::OutputWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

void OutputWriter::write_text(const std::string& filename, const std::string& content) {
  const auto path = dir_ / filename;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  out.close();
  files_.push_back(path);
}

void OutputWriter::write_json(const std::string& filename, const nlohmann::json& j) {
  write_text(filename, j.dump(2) + "\n");
}

void OutputWriter::write_csv(const std::string& filename,
                             const std::vector<std::string>& header,
                             const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += header[i];
  }
  out += "\r\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += row[i];
    }
    out += "\r\n";
  }
  write_text(filename, out);
}

void OutputWriter::write_svg_lines(const std::string& filename, const std::string& title,
                                   const std::vector<Series>& series, bool log_log) {
  const int W = 720, H = 480, margin = 50;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  auto tx = [&](double v) { return log_log ? std::log10(std::max(v, 1e-300)) : v; };
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, tx(s.x[i]));
      xmax = std::max(xmax, tx(s.x[i]));
      ymin = std::min(ymin, tx(s.y[i]));
      ymax = std::max(ymax, tx(s.y[i]));
    }
  }
  if (xmax <= xmin) xmax = xmin + 1;
  if (ymax <= ymin) ymax = ymin + 1;
  auto px = [&](double v) {
    return margin + (tx(v) - xmin) / (xmax - xmin) * (W - 2 * margin);
  };
  auto py = [&](double v) {
    return H - margin - (tx(v) - ymin) / (ymax - ymin) * (H - 2 * margin);
  };
  static const char* colors[] = {"#1b6ca8", "#c0392b", "#27824c", "#8e44ad",
                                 "#d68910", "#148f77", "#5d6d7e", "#a04000"};
  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(W) +
         "\" height=\"" + std::to_string(H) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + std::to_string(W / 2) + "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"15\">" + title + "</text>\n";
  svg += "<rect x=\"" + std::to_string(margin) + "\" y=\"" + std::to_string(margin) +
         "\" width=\"" + std::to_string(W - 2 * margin) + "\" height=\"" +
         std::to_string(H - 2 * margin) + "\" fill=\"none\" stroke=\"#888\"/>\n";
  int ci = 0;
  for (const auto& s : series) {
    std::string pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      pts += format_double(px(s.x[i])) + "," + format_double(py(s.y[i])) + " ";
    }
    const char* color = colors[ci % 8];
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
           "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    svg += "<text x=\"" + std::to_string(W - margin - 150) + "\" y=\"" +
           std::to_string(margin + 16 + 16 * ci) + "\" font-family=\"sans-serif\" "
           "font-size=\"12\" fill=\"" + color + "\">" + s.label + "</text>\n";
    ++ci;
  }
  svg += "</svg>\n";
  write_text(filename, svg);
}

void OutputWriter::write_manifest() {
  nlohmann::json j;
  j["files"] = nlohmann::json::array();
  for (const auto& path : files_) {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    char hex[24];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    j["files"].push_back({{"path", path.filename().string()},
                          {"bytes", bytes.size()},
                          {"fnv1a64", hex}});
  }
  const auto path = dir_ / "manifest.json";
  std::ofstream out(path, std::ios::binary);
  out << j.dump(2) << "\n";
}

}  // namespace fluxlim
