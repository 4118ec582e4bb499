#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "iqlphase/run_record.hpp"

namespace iqlphase {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

/// Run record text: a version line, a one-line JSON meta block, then the
/// `episodes` and `evals` tables, each under a typed CSV header.
std::string format_run_record(const RunRecord& record);
RunRecord parse_run_record(std::string_view text);

std::string format_eval_table(std::span<const EvalRecord> evals);

void write_run_record(const std::filesystem::path& path, const RunRecord& record);
RunRecord read_run_record(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace iqlphase
