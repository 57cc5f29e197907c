#include "flowmm/cli/manifest.hpp"

#include <algorithm>
#include <fstream>

#include "flowmm/checksum.hpp"
#include "flowmm/errors.hpp"
#include "flowmm/version.hpp"

namespace fs = std::filesystem;

namespace flowmm::cli {

RunManifest::RunManifest(fs::path out_dir, std::string command, std::uint64_t seed,
                         std::uint64_t config_hash)
    : out_dir_(std::move(out_dir)), command_(std::move(command)), seed_(seed), config_hash_(config_hash) {}

fs::path RunManifest::manifest_path() const { return out_dir_ / ("manifest-" + command_ + ".txt"); }

void RunManifest::add_input(const fs::path& path) {
  // inputs inside the run directory are named relative to it so reruns in
  // another directory produce the same manifest
  std::error_code ec;
  const fs::path rel = fs::relative(path, out_dir_, ec);
  const bool inside = !ec && !rel.empty() && *rel.begin() != "..";
  inputs_.push_back({inside ? rel.generic_string() : path.string(), file_crc32(path), fs::file_size(path)});
}

void RunManifest::expect(const std::string& name) { pending_.push_back(name); }

void RunManifest::record(const std::string& name) {
  const fs::path p = out_dir_ / name;
  artifacts_.push_back({name, file_crc32(p), fs::file_size(p)});
  std::erase(pending_, name);
}

void RunManifest::write_artifact(const std::string& name, std::string_view content) {
  expect(name);
  std::ofstream out(out_dir_ / name, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + (out_dir_ / name).string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) throw FormatError("write failed: " + (out_dir_ / name).string());
  record(name);
}

void RunManifest::write_manifest(const std::string& status, const std::string& error) const {
  std::ofstream out(manifest_path(), std::ios::trunc);
  out << "flowmm-manifest\t1\n";
  out << "command\t" << command_ << "\n";
  out << "status\t" << status << "\n";
  if (!error.empty()) {
    std::string one_line = error;
    std::replace(one_line.begin(), one_line.end(), '\n', ' ');
    out << "error\t" << one_line << "\n";
  }
  out << "seed\t" << seed_ << "\n";
  out << "config_hash\t" << hex64(config_hash_) << "\n";
  out << "version\t" << kVersion << "\n";
  for (const auto& e : inputs_) out << "input\t" << e.name << '\t' << hex32(e.crc) << '\t' << e.bytes << "\n";
  for (const auto& e : artifacts_) out << "artifact\t" << e.name << '\t' << hex32(e.crc) << '\t' << e.bytes << "\n";
}

void RunManifest::finish_ok() { write_manifest("ok", ""); }

void RunManifest::finish_failed(const std::string& error) {
  const fs::path failed = out_dir_ / "failed";
  std::error_code ec;
  fs::create_directories(failed, ec);
  std::vector<std::string> names = pending_;
  for (const auto& a : artifacts_) names.push_back(a.name);
  for (const auto& n : names)
    if (fs::exists(out_dir_ / n, ec)) fs::rename(out_dir_ / n, failed / n, ec);
  artifacts_.clear();
  pending_.clear();
  write_manifest("failed", error);
}

}  // namespace flowmm::cli
