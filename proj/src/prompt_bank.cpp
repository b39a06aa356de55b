#include "uninfo/prompt_bank.hpp"

#include <fstream>

#include "uninfo/tensor_archive.hpp"

namespace uninfo {

PrototypeBank<float> load_prompt_bank(const std::filesystem::path& archive_dir, float temperature) {
  const TensorArchive archive = TensorArchive::read(archive_dir);
  const auto& t = archive.get("text_embeddings");
  require(t.shape.size() == 3, ErrorCode::ShapeMismatch, "text_embeddings must have shape [P, C, d]");
  const Index prompts = t.shape[0], classes = t.shape[1], dim = t.shape[2];
  std::vector<Matrix<float>> per_prompt;
  for (Index p = 0; p < prompts; ++p) {
    per_prompt.emplace_back(Eigen::Map<const Matrix<float>>(t.values.data() + p * classes * dim, classes, dim));
  }
  std::vector<std::string> names;
  if (archive.has_sidecar("class_names.json")) names = archive.sidecar("class_names.json").get<std::vector<std::string>>();
  return ensemble_prototypes(per_prompt, temperature, std::move(names));
}

void save_prototype_bank(const std::filesystem::path& archive_dir, const PrototypeBank<float>& bank) {
  TensorArchive archive;
  const Matrix<float>& p = bank.prototypes();
  archive.put("text_embeddings", {1, p.rows(), p.cols()}, std::vector<float>(p.data(), p.data() + p.size()));
  archive.put_sidecar("class_names.json", bank.class_names());
  archive.write(archive_dir);
}

namespace {

std::vector<std::string> read_lines(const std::filesystem::path& file) {
  std::ifstream in(file);
  require(static_cast<bool>(in), ErrorCode::IoError, "cannot open " + file.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

}  // namespace

std::vector<std::string> load_prompt_templates(const std::filesystem::path& file) {
  std::vector<std::string> out;
  int n = 0;
  for (const auto& raw : read_lines(file)) {
    ++n;
    const std::string line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto at = line.find("{}");
    require(at != std::string::npos && line.find("{}", at + 2) == std::string::npos, ErrorCode::ParseError,
            file.string() + " line " + std::to_string(n) + ": template needs exactly one {}");
    out.push_back(line);
  }
  return out;
}

std::map<std::string, std::vector<std::string>> load_corruption_synonyms(const std::filesystem::path& file) {
  std::map<std::string, std::vector<std::string>> out;
  std::string current;
  int n = 0;
  for (const auto& raw : read_lines(file)) {
    ++n;
    const std::string line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      require(line.back() == ']' && line.size() > 2, ErrorCode::ParseError,
              file.string() + " line " + std::to_string(n) + ": malformed header");
      current = line.substr(1, line.size() - 2);
      out[current];
      continue;
    }
    require(!current.empty(), ErrorCode::ParseError,
            file.string() + " line " + std::to_string(n) + ": synonym before any [name] header");
    out[current].push_back(line);
  }
  return out;
}

std::string format_prompt(const std::string& templ, const std::string& name) {
  const auto at = templ.find("{}");
  require(at != std::string::npos, ErrorCode::InvalidArgument, "template has no {}");
  return templ.substr(0, at) + name + templ.substr(at + 2);
}

}  // namespace uninfo
