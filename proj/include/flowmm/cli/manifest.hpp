#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace flowmm::cli {

/// Tracks the files one command reads and writes and records them, with
/// CRC-32 checksums, in `manifest-<command>.txt` inside the output directory.
///
/// Format: one "key<TAB>value..." line per entry.
///   flowmm-manifest  1
///   command          <name>
///   status           ok | failed
///   error            <message>                (failed runs only)
///   seed             <u64>
///   config_hash      <16 hex digits>
///   version          <library version>
///   input            <path>  <crc32>  <bytes>
///   artifact         <name>  <crc32>  <bytes>
class RunManifest {
 public:
  RunManifest(std::filesystem::path out_dir, std::string command, std::uint64_t seed,
              std::uint64_t config_hash);

  const std::filesystem::path& out_dir() const { return out_dir_; }
  std::filesystem::path manifest_path() const;

  void add_input(const std::filesystem::path& path);

  /// Writes `content` to out_dir/name and records it.
  void write_artifact(const std::string& name, std::string_view content);

  /// Records a file that a library routine wrote to out_dir/name. Call
  /// `expect` before the write so a crash mid-write is still quarantined.
  void expect(const std::string& name);
  void record(const std::string& name);

  void finish_ok();

  /// Moves every expected or written artifact into out_dir/failed/ and
  /// writes a manifest with status "failed".
  void finish_failed(const std::string& error);

 private:
  struct Entry {
    std::string name;
    std::uint32_t crc = 0;
    std::uintmax_t bytes = 0;
  };
  void write_manifest(const std::string& status, const std::string& error) const;

  std::filesystem::path out_dir_;
  std::string command_;
  std::uint64_t seed_;
  std::uint64_t config_hash_;
  std::vector<Entry> inputs_;
  std::vector<Entry> artifacts_;
  std::vector<std::string> pending_;
};

}  // namespace flowmm::cli
