#include "ucspd_app/artifacts.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "ucspd/error.hpp"

namespace ucspd::app {

namespace {
constexpr const char* kHashPrefix = "# scenario_hash=";
}

std::string format_shortest(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

ArtifactWriter::ArtifactWriter(std::filesystem::path dir, std::string hash)
    : dir_(std::move(dir)), hash_(std::move(hash)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw InvalidArgument("cannot create output directory '" + dir_.string() + "'");
}

void ArtifactWriter::write(const std::string& name, const std::string& text) {
  std::ofstream out(dir_ / name, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write '" + (dir_ / name).string() + "'");
  out << text;
  if (!out) throw InvalidArgument("write failed for '" + (dir_ / name).string() + "'");
  files_.push_back(name);
}

void ArtifactWriter::csv(const std::string& name, const std::string& header,
                         const std::vector<std::vector<std::string>>& rows) {
  std::string text = kHashPrefix + hash_ + "\n" + header + "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) text += ',';
      text += row[i];
    }
    text += '\n';
  }
  write(name, text);
}

void ArtifactWriter::waveform(const std::string& name, const SampledWaveform& w) {
  std::ostringstream out;
  write_waveform_csv(out, w, "scenario_hash=" + hash_);
  write(name, out.str());
}

void ArtifactWriter::json(const std::string& name, nlohmann::json body) {
  body["scenario_hash"] = hash_;
  write(name, body.dump(2) + "\n");
}

void ArtifactWriter::plot(const std::string& name, const PlotSpec& spec) {
  try {
    write(name, "<!-- scenario_hash=" + hash_ + " -->\n" + render_svg(spec));
  } catch (const std::exception& e) {
    warnings_.push_back("plot " + name + " skipped: " + e.what());
  }
}

std::string read_artifact_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  if (path.extension() == ".json") {
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("scenario_hash") ||
        !j["scenario_hash"].is_string()) {
      return {};
    }
    return j["scenario_hash"].get<std::string>();
  }
  std::string line;
  std::getline(in, line);
  if (path.extension() == ".svg") {
    const std::string open = "<!-- scenario_hash=", close = " -->";
    if (line.rfind(open, 0) != 0 || !line.ends_with(close)) return {};
    return line.substr(open.size(), line.size() - open.size() - close.size());
  }
  const std::string prefix = kHashPrefix;
  return line.rfind(prefix, 0) == 0 ? line.substr(prefix.size()) : std::string{};
}

}  // namespace ucspd::app
